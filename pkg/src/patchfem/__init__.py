"""Locally adapted patch finite elements for 2D elliptic problems with a
discontinuous diffusion coefficient.

The mesh is a fixed structured triangulation of macro triangles (patches),
each split into four linear subtriangles whose inner nodes slide along the
patch edges. Where an interface crosses a patch, the crossing pins some of
the three edge-node parameters and a strategy chooses the rest so the split
resolves the interface without moving, adding, or removing any degrees of
freedom.
"""

from .adaptation import (
    AngleAudit,
    CutClass,
    PatchConfig,
    RefinementRequired,
    adapt,
    angle_cosines_two_edges,
    angle_cosines_vertex_edge,
    classify_all,
    classify_patch,
    free_params_two_edges,
    free_params_vertex_edge,
    max_angle_audit,
    resolve_edge_params,
    side_labels,
    subtriangle_topology,
)
from .assembly import (
    DofMap,
    LinearSystem,
    PatchQuadrature,
    assemble,
    build_dof_map,
    interpolate_nodal,
    kappa_of,
    local_load,
    local_stiffness,
    patch_quadrature,
)
from .geometry import (
    AffineMap,
    DegenerateTriangle,
    QuadRule,
    UnsupportedDegree,
    affine_map_between,
    interior_angles,
    reference_quad_rule,
    triangle_area,
)
from .levelset import Circle, HorizontalLine, TiltedLine, vertex_hit
from .mesh import PatchMesh, build_structured_mesh, mesh_to_json, refine
from .problems import (
    InsufficientData,
    ProblemSpec,
    circle_problem,
    convergence_rate,
    error_norms,
    horizontal_problem,
    pde_residual_defect,
    tilted_problem,
    verify_jump_conditions,
)
from .runner import RunConfig, run_angles, run_convergence, run_single, run_sweep
from .solver import NonConvergence, SingularSystem, SolveReport, cg_solve, dense_solve_oracle

__version__ = "0.1.0"
