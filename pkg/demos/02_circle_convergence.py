"""Convergence study on the circular-interface problem: the adapted method
recovers second order in L2 and first order in H1, while the unfitted
baseline (same mesh, diffusion sampled pointwise across the interface)
degrades to roughly half an order in H1.

Run:  python3 demos/02_circle_convergence.py        (about half a minute)
"""

from patchfem.runner import run_convergence

LEVELS = [8, 16, 32, 64]

for mode in ("adapted", "baseline"):
    rows, l2_rate, h1_rate = run_convergence("circle", LEVELS, strategy=2,
                                             mode=mode)
    print(f"\n{mode} method")
    print(f"{'n':>5} {'h_max':>10} {'ndofs':>7} {'L2 error':>12} {'H1 error':>12}")
    for r in rows:
        print(f"{r.n:>5} {r.h:>10.5f} {r.ndofs:>7} {r.l2:>12.4e} {r.h1:>12.4e}")
    print(f"fitted rates: L2 = {l2_rate:.2f}, H1 = {h1_rate:.2f}")

print("\nThe adapted rates sit near (2, 1); the baseline H1 rate collapses "
      "toward 1/2 because the uniform mesh cannot represent the kink in the "
      "solution across the interface.")
