"""Cut classification, free-parameter strategies, subtriangle topologies,
and the maximum-angle audit.

A patch is split into four subtriangles whose inner nodes sit on the patch
edges at parameters (q, r, s). When the interface crosses the patch, the
crossing fixes some of the parameters; the rest are free and chosen by one of
three strategies so that no subtriangle angle exceeds 162 degrees (strategies
2 and 3; strategy 1 keeps free parameters at 1/2 and gives no such guarantee
when a vertex is cut).

Classification and the audits are pure per patch; ``resolve_edge_params`` is
the single sequential pass that writes edge parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .geometry import interior_angles, triangle_area
from .levelset import SNAP_TOL, vertex_hit
from .mesh import FREE, INTERFACE_LOCKED, STRATEGY_SET, PatchMesh

__all__ = [
    "RefinementRequired",
    "CutClass",
    "PatchConfig",
    "Classification",
    "classify_patch",
    "classify_all",
    "determined_params",
    "free_params_two_edges",
    "free_params_vertex_edge",
    "resolve_edge_params",
    "subtriangle_topology",
    "side_labels",
    "build_configs",
    "adapt",
    "angle_cosines_two_edges",
    "angle_cosines_vertex_edge",
    "reference_local_nodes",
    "max_angle_audit",
    "AngleAudit",
]

UNCUT = "uncut"
EDGE_EDGE = "edge_edge"
VERTEX_EDGE = "vertex_edge"

# Local edge opposite each local vertex (edge k runs from vertex k to k+1).
_OPPOSITE_EDGE = {0: 1, 1: 2, 2: 0}

# Subtriangle index triples over the six local nodes, counterclockwise in
# reference coordinates, one table per cut situation. Constraints pinning the
# tables: the four triples tile the patch for every (q,r,s) in (0,1)^3, and
# the segment between the two cut nodes is an edge of the triangulation.
_TOPOLOGY_UNCUT = np.array([[0, 3, 5], [3, 1, 4], [5, 4, 2], [3, 4, 5]], dtype=np.int8)
_TOPOLOGY_VERTEX = {
    0: np.array([[0, 4, 5], [0, 3, 4], [3, 1, 4], [5, 4, 2]], dtype=np.int8),
    1: np.array([[0, 3, 5], [3, 1, 5], [5, 1, 4], [5, 4, 2]], dtype=np.int8),
    2: np.array([[0, 3, 5], [5, 3, 2], [3, 4, 2], [3, 1, 4]], dtype=np.int8),
}

# For each cut situation: (subtriangles on the side of the cut segment away
# from it, their anchor vertex) and the complementary group. The anchor is a
# patch vertex not lying on the cut, used to resolve side labels robustly.
_SIDE_GROUPS = {
    (EDGE_EDGE, (0, 1)): (((0, 2, 3), 0), ((1,), 1)),
    (EDGE_EDGE, (1, 2)): (((0, 1, 3), 0), ((2,), 2)),
    (EDGE_EDGE, (0, 2)): (((1, 2, 3), 1), ((0,), 0)),
    (VERTEX_EDGE, 0): (((0, 3), 2), ((1, 2), 1)),
    (VERTEX_EDGE, 1): (((0, 1), 0), ((2, 3), 2)),
    (VERTEX_EDGE, 2): (((0, 1), 0), ((2, 3), 1)),
}


class RefinementRequired(Exception):
    """The interface cuts a patch in a way the four-triangle split cannot
    represent; the caller should refine the mesh and retry."""

    def __init__(self, patch_id: int, reason: str):
        super().__init__(f"patch {patch_id}: {reason}")
        self.patch_id = patch_id
        self.reason = reason


@dataclass(frozen=True)
class CutClass:
    """How the interface crosses one patch.

    kind is "uncut", "edge_edge" (``edges`` holds the two cut local edges) or
    "vertex_edge" (``vertex`` is the cut local vertex, ``edges`` the single
    cut opposite edge).
    """

    kind: str
    edges: tuple[int, ...] = ()
    vertex: int | None = None

    @property
    def is_cut(self) -> bool:
        return self.kind != UNCUT


@dataclass(frozen=True)
class PatchConfig:
    """Frozen per-patch adaptation result: cut class, parameters (q, r, s),
    subtriangle topology (4 triples of local node ids) and side labels
    (1 or 2 per subtriangle)."""

    cut: CutClass
    params: tuple[float, float, float]
    topology: np.ndarray
    sides: np.ndarray


@dataclass
class Classification:
    """Cut classes for every patch plus the interface crossings found on each
    edge (storage parameters, keyed by edge id)."""

    cuts: list[CutClass]
    edge_crossings: dict[int, float]
    vertex_hits: np.ndarray  # bool per mesh vertex

    @property
    def n_cut(self) -> int:
        return sum(1 for c in self.cuts if c.is_cut)


def _patch_edge_crossings(mesh, pid, levelset):
    """Interior crossing parameters per local edge, in local direction."""
    out = []
    for k in range(3):
        eid = mesh.patch_edges[pid, k]
        a, b = mesh.edges[eid]
        ts = levelset.segment_crossings(mesh.vertices[a], mesh.vertices[b])
        if not mesh.patch_edge_forward[pid, k]:
            ts = sorted(1.0 - t for t in ts)
        out.append(ts)
    return out


def _classify(mesh: PatchMesh, pid: int, levelset):
    """Cut class of one patch plus its filtered per-edge crossings."""
    scale = mesh.patch_diameter(pid)
    verts = mesh.vertices[mesh.patches[pid]]
    hits = [vertex_hit(levelset, v, scale) for v in verts]
    per_edge = _patch_edge_crossings(mesh, pid, levelset)
    # Crossings on an edge whose endpoint is hit belong to the vertex.
    for k in range(3):
        if hits[k] or hits[(k + 1) % 3]:
            per_edge[k] = [
                t
                for t in per_edge[k]
                if not (hits[k] and t <= SNAP_TOL * 10)
                and not (hits[(k + 1) % 3] and t >= 1.0 - SNAP_TOL * 10)
            ]
    counts = [len(ts) for ts in per_edge]
    n_hits = sum(hits)
    total = sum(counts)

    if max(counts) >= 2:
        raise RefinementRequired(pid, "interface enters and leaves through one edge")
    if total == 0:
        return CutClass(UNCUT), per_edge
    if total == 1:
        (k,) = [k for k in range(3) if counts[k] == 1]
        if n_hits == 0:
            raise RefinementRequired(pid, "single boundary contact point")
        if n_hits > 1:
            raise RefinementRequired(pid, "more than two boundary cut points")
        v = hits.index(True)
        if _OPPOSITE_EDGE[v] != k:
            raise RefinementRequired(pid, "vertex cut with crossing on adjacent edge")
        return CutClass(VERTEX_EDGE, edges=(k,), vertex=v), per_edge
    if total == 2 and n_hits == 0:
        cut_edges = tuple(k for k in range(3) if counts[k] == 1)
        return CutClass(EDGE_EDGE, edges=cut_edges), per_edge
    raise RefinementRequired(pid, "more than two boundary cut points")


def classify_patch(mesh: PatchMesh, pid: int, levelset) -> CutClass:
    """Classify one patch against the interface.

    Raises RefinementRequired for cuts the method cannot represent: two
    crossings on one edge, more than two boundary cut points, a crossing on
    an edge adjacent to a cut vertex, or a lone tangential contact point. A
    patch whose interface passes through two vertices counts as uncut.
    """
    return _classify(mesh, pid, levelset)[0]


def classify_all(mesh: PatchMesh, levelset) -> Classification:
    """Classify every patch; cheap prefilter via vertex distances.

    The shipped level sets are signed distances, so a patch whose vertices
    are all farther from the interface than its diameter cannot be cut.
    The recorded edge crossings are exactly the ones classification counted,
    converted to the edge storage direction.
    """
    phi = levelset.eval(mesh.vertices)
    vhit = np.abs(phi) <= SNAP_TOL * mesh.h_max
    patch_phi = phi[mesh.patches]
    candidates = np.nonzero(
        np.abs(patch_phi).min(axis=1) <= mesh.patch_diameters()
    )[0]

    cuts = [CutClass(UNCUT)] * mesh.n_patches
    edge_crossings: dict[int, float] = {}
    for pid in candidates:
        cls, per_edge = _classify(mesh, int(pid), levelset)
        cuts[pid] = cls
        if cls.is_cut:
            for k in cls.edges:
                eid = int(mesh.patch_edges[pid, k])
                if eid not in edge_crossings:
                    (t_local,) = per_edge[k]
                    t = t_local if mesh.patch_edge_forward[pid, k] else 1.0 - t_local
                    edge_crossings[eid] = t
    return Classification(cuts, edge_crossings, vhit)


def determined_params(cut: CutClass, crossings: dict[int, float]) -> dict[str, float]:
    """Translate local-edge crossings into fixed (q, r, s) components.

    ``crossings`` maps the cut local edge index to the crossing parameter in
    local direction. Local edge 0 fixes s, edge 1 fixes r and edge 2 fixes
    q = 1 - t (the node on edge 2 sits at parameter 1-q from vertex 2).
    """
    if not cut.is_cut:
        raise ValueError("uncut patches determine no parameters")
    fixed = {}
    for k in cut.edges:
        t = crossings[k]
        if k == 0:
            fixed["s"] = t
        elif k == 1:
            fixed["r"] = t
        else:
            fixed["q"] = 1.0 - t
    return fixed


def free_params_two_edges(strategy: int, fixed: dict[str, float]):
    """Complete (q, r, s) when the cut fixed two of them.

    Strategy 1 always sets the free parameter to 1/2. Strategies 2 and 3
    apply their remedy only where the determined pair can squeeze the middle
    subtriangle flat, and fall back to 1/2 otherwise:

        free r, determined q > 1/2 and s > 1/2:  r = 1-s (S2), (1-s)(1-q) (S3)
        free q, determined s < 1/2 and r > 1/2:  q = s   (S2), (1-r)s     (S3)
        free s, determined q < 1/2 and r < 1/2:  s = 1-r (S2), qr         (S3)

    Under this rule every subtriangle angle stays below 162 degrees for any
    determined values; the unconditional formulas do not have that property.
    """
    if len(fixed) != 2:
        raise ValueError("exactly two parameters must be fixed")
    if strategy not in (1, 2, 3):
        raise ValueError(f"unknown strategy {strategy}")
    (name,) = {"q", "r", "s"} - set(fixed)
    scalar = all(np.ndim(v) == 0 for v in fixed.values())
    p = {k: np.asarray(v, dtype=float) for k, v in fixed.items()}
    half = np.full(np.broadcast_shapes(*(v.shape for v in p.values())), 0.5)
    if strategy == 1:
        p[name] = half
    elif name == "r":
        opt = 1.0 - p["s"] if strategy == 2 else (1.0 - p["s"]) * (1.0 - p["q"])
        p["r"] = np.where((p["q"] > 0.5) & (p["s"] > 0.5), opt, half)
    elif name == "q":
        opt = p["s"] if strategy == 2 else (1.0 - p["r"]) * p["s"]
        p["q"] = np.where((p["s"] < 0.5) & (p["r"] > 0.5), opt, half)
    else:
        opt = 1.0 - p["r"] if strategy == 2 else p["q"] * p["r"]
        p["s"] = np.where((p["q"] < 0.5) & (p["r"] < 0.5), opt, half)
    if scalar:
        return float(p["q"]), float(p["r"]), float(p["s"])
    return p["q"], p["r"], p["s"]


def free_params_vertex_edge(strategy: int, fixed: dict[str, float]):
    """Complete (q, r, s) when a vertex cut fixed a single parameter.

    Strategy 1 sets both free parameters to 1/2. Strategies 2 and 3 use the
    case table, evaluated from the one determined value with fallback 1/2:

        fixed r: q = r if r > 1/2 else 1/2;   s = 1-r if r < 1/2 else 1/2
        fixed q: r = q if q > 1/2 else 1/2;   s = q   if q < 1/2 else 1/2
        fixed s: r = 1-s if s > 1/2 else 1/2; q = s   if s < 1/2 else 1/2
    """
    if len(fixed) != 1:
        raise ValueError("exactly one parameter must be fixed")
    if strategy not in (1, 2, 3):
        raise ValueError(f"unknown strategy {strategy}")
    ((name, value),) = fixed.items()
    scalar = np.ndim(value) == 0
    v = np.asarray(value, dtype=float)
    half = np.full(v.shape, 0.5)
    if strategy == 1:
        p = {"q": half, "r": half, "s": half, name: v}
    elif name == "r":
        p = {"r": v,
             "q": np.where(v > 0.5, v, half),
             "s": np.where(v < 0.5, 1.0 - v, half)}
    elif name == "q":
        p = {"q": v,
             "r": np.where(v > 0.5, v, half),
             "s": np.where(v < 0.5, v, half)}
    else:
        p = {"s": v,
             "r": np.where(v > 0.5, 1.0 - v, half),
             "q": np.where(v < 0.5, v, half)}
    if scalar:
        return float(p["q"]), float(p["r"]), float(p["s"])
    return p["q"], p["r"], p["s"]


@dataclass
class Conflict:
    patch_id: int
    local_edge: int
    wanted: float
    kept: float


def resolve_edge_params(mesh: PatchMesh, classification: Classification,
                        strategy: int) -> list[Conflict]:
    """Write interface crossings and strategy values into the edge registry.

    Pass 1 locks every crossed edge at its crossing. Pass 2 walks cut patches
    in ascending id order and writes each patch's free parameters to still
    free edges; an edge that is already locked or set is never overwritten
    (first writer wins) and a conflict is recorded when the values disagree.
    Untouched edges stay at 1/2. Running the pass again changes nothing.
    """
    for eid, t in classification.edge_crossings.items():
        mesh.edge_param[eid] = t
        mesh.edge_lock[eid] = INTERFACE_LOCKED

    conflicts: list[Conflict] = []
    for pid, cut in enumerate(classification.cuts):
        if not cut.is_cut:
            continue
        local_ts = {k: mesh.local_t(pid, k) for k in cut.edges}
        fixed = determined_params(cut, local_ts)
        if cut.kind == EDGE_EDGE:
            q, r, s = free_params_two_edges(strategy, fixed)
        else:
            q, r, s = free_params_vertex_edge(strategy, fixed)
        wanted = {0: s, 1: r, 2: 1.0 - q}  # local edge -> local t
        for k in range(3):
            if k in cut.edges:
                continue
            eid = mesh.patch_edges[pid, k]
            if mesh.edge_lock[eid] == FREE:
                mesh.set_local_t(pid, k, wanted[k], STRATEGY_SET)
            else:
                kept = mesh.local_t(pid, k)
                if abs(kept - wanted[k]) > 1e-12:
                    conflicts.append(Conflict(pid, k, wanted[k], kept))
    return conflicts


def subtriangle_topology(cut: CutClass) -> np.ndarray:
    """Four local-node index triples tiling the patch, counterclockwise.

    Uncut and edge-edge patches share one table (the cut segment between any
    two of the nodes 3, 4, 5 is an edge of the middle triangle); a vertex cut
    routes the split diagonal through the cut vertex.
    """
    if cut.kind == VERTEX_EDGE:
        return _TOPOLOGY_VERTEX[cut.vertex]
    return _TOPOLOGY_UNCUT


def _group_key(cut: CutClass):
    if cut.kind == EDGE_EDGE:
        return (EDGE_EDGE, tuple(sorted(cut.edges)))
    return (VERTEX_EDGE, cut.vertex)


def side_labels(nodes, topology, levelset, cut: CutClass | None = None,
                scale: float = 1.0) -> np.ndarray:
    """Side label (1 or 2) per subtriangle from the level-set sign at its
    centroid; ties break toward side 2.

    For cut patches the labels are made consistent along the cut segment: the
    two subtriangle groups separated by it are re-anchored at a patch vertex
    off the interface whenever a sliver centroid lands on the wrong side of a
    curved interface.
    """
    tris = nodes[topology]  # (4, 3, 2)
    centroids = tris.mean(axis=1)
    phi = levelset.eval(centroids)
    labels = np.where(phi < -SNAP_TOL * scale, 1, 2).astype(np.int8)

    if cut is not None and cut.is_cut:
        (group_a, anchor_a), (group_b, anchor_b) = _SIDE_GROUPS[_group_key(cut)]
        for group, anchor in ((group_a, anchor_a), (group_b, anchor_b)):
            group = list(group)
            if len(set(labels[group])) > 1:
                lab = 1 if levelset.eval(nodes[anchor]) < 0 else 2
                labels[group] = lab
        if labels[list(group_a)][0] == labels[list(group_b)][0]:
            # Degenerate sliver on both sides: fall back to the anchors.
            labels[list(group_a)] = 1 if levelset.eval(nodes[anchor_a]) < 0 else 2
            labels[list(group_b)] = 1 if levelset.eval(nodes[anchor_b]) < 0 else 2
    return labels


def build_configs(mesh: PatchMesh, classification: Classification,
                  levelset) -> list[PatchConfig]:
    """Per-patch configurations after the edge parameters are resolved."""
    nodes_all = mesh.local_nodes_all()
    params_all = mesh.local_params_all()
    configs = []
    for pid, cut in enumerate(classification.cuts):
        topo = subtriangle_topology(cut)
        sides = side_labels(nodes_all[pid], topo, levelset, cut,
                            scale=mesh.patch_diameter(pid))
        q, r, s = params_all[pid]
        configs.append(PatchConfig(cut, (float(q), float(r), float(s)), topo, sides))
    return configs


def adapt(mesh: PatchMesh, levelset, strategy: int):
    """Classify, resolve edge parameters, and build patch configurations.

    Returns (configs, classification, conflicts). Raises RefinementRequired
    when some patch cannot be represented.
    """
    classification = classify_all(mesh, levelset)
    conflicts = resolve_edge_params(mesh, classification, strategy)
    configs = build_configs(mesh, classification, levelset)
    return configs, classification, conflicts


# -- angle bookkeeping -------------------------------------------------------

def angle_cosines_two_edges(q, r, s):
    """Cosines (cos a, cos b, cos g) of the middle subtriangle
    ((s,0), (1-r,r), (0,q)) in reference coordinates: a at the node on the
    slanted edge, b at the node on the left edge, g at the node on the bottom
    edge. Inputs broadcast."""
    q, r, s = np.asarray(q, float), np.asarray(r, float), np.asarray(s, float)
    len_45 = np.sqrt((q - r) ** 2 + (r - 1.0) ** 2)  # node4-node5 distance
    len_34 = np.sqrt((1.0 - r - s) ** 2 + r**2)
    len_35 = np.sqrt(s**2 + q**2)
    cos_a = ((1.0 - r) * (1.0 - r - s) + r * (r - q)) / (len_45 * len_34)
    cos_b = (s * (1.0 - r) + q * (q - r)) / (len_45 * len_35)
    cos_g = (s * (s - 1.0 + r) + r * q) / (len_34 * len_35)
    return cos_a, cos_b, cos_g


def angle_cosines_vertex_edge(case: str, q, r, s):
    """Six cosines for the two subtriangles along the split diagonal of a
    vertex cut, in reference coordinates.

    case "lower-left": diagonal from (0,0) to the slanted-edge node; returns
    the angles of triangles ((0,0),(1-r,r),(0,q)) and ((0,0),(s,0),(1-r,r)),
    each ordered (angle at the left-edge or bottom node, at the corner, at
    the slanted-edge node).

    case "lower-right": diagonal from (1,0) to the left-edge node; returns
    the angles of ((s,0),(1,0),(0,q)) and ((0,q),(1,0),(1-r,r)).
    """
    q, r, s = np.asarray(q, float), np.asarray(r, float), np.asarray(s, float)
    if case == "lower-left":
        len_04 = np.sqrt((1.0 - r) ** 2 + r**2)
        len_45 = np.sqrt((1.0 - r) ** 2 + (r - q) ** 2)
        len_34 = np.sqrt(r**2 + (s - 1.0 + r) ** 2)
        cos_a1 = (q - r) / len_45
        cos_b1 = r / len_04
        cos_g1 = ((1.0 - r) ** 2 + r * (r - q)) / (len_04 * len_45)
        cos_a2 = (1.0 - r) / len_04
        cos_b2 = (s - 1.0 + r) / len_34
        cos_g2 = ((1.0 - r) * (1.0 - r - s) + r**2) / (len_04 * len_34)
        return cos_a1, cos_b1, cos_g1, cos_a2, cos_b2, cos_g2
    if case == "lower-right":
        len_15 = np.sqrt(1.0 + q**2)
        len_35 = np.sqrt(s**2 + q**2)
        len_45 = np.sqrt((1.0 - r) ** 2 + (r - q) ** 2)
        cos_a3 = -s / len_35
        cos_b3 = 1.0 / len_15
        cos_g3 = (s + q**2) / (len_15 * len_35)
        cos_a4 = (1.0 + q) / (np.sqrt(2.0) * len_15)
        cos_b4 = ((1.0 - r) + q * (q - r)) / (len_15 * len_45)
        cos_g4 = (2.0 * r - 1.0 - q) / (np.sqrt(2.0) * len_45)
        return cos_a3, cos_b3, cos_g3, cos_a4, cos_b4, cos_g4
    raise ValueError(f"unknown case {case!r}")


def reference_local_nodes(q, r, s) -> np.ndarray:
    """Six local nodes on the unit reference patch for given parameters.

    Broadcasts: scalar inputs give (6, 2); array inputs of shape (...,) give
    (..., 6, 2).
    """
    q, r, s = np.broadcast_arrays(
        np.asarray(q, float), np.asarray(r, float), np.asarray(s, float)
    )
    zeros = np.zeros_like(q)
    ones = np.ones_like(q)
    nodes = np.stack(
        [
            np.stack([zeros, zeros], axis=-1),
            np.stack([ones, zeros], axis=-1),
            np.stack([zeros, ones], axis=-1),
            np.stack([s, zeros], axis=-1),
            np.stack([1.0 - r, r], axis=-1),
            np.stack([zeros, q], axis=-1),
        ],
        axis=-2,
    )
    return nodes


@dataclass
class AngleAudit:
    """Per-patch maxima of the physical subtriangle interior angles."""

    rows: list  # (patch_id, cut kind, q, r, s, max_angle_deg)
    global_max: float
    histogram: np.ndarray  # counts in 10-degree bins over [0, 180)
    bin_edges: np.ndarray = field(
        default_factory=lambda: np.linspace(0.0, 180.0, 19)
    )


def max_angle_audit(mesh: PatchMesh, configs: list[PatchConfig]) -> AngleAudit:
    """All interior angles of all physical subtriangles, reduced per patch."""
    nodes = mesh.local_nodes_all()  # (Np, 6, 2)
    topo = np.stack([cfg.topology for cfg in configs])  # (Np, 4, 3)
    tris = nodes[np.arange(mesh.n_patches)[:, None, None], topo]  # (Np, 4, 3, 2)
    angles = interior_angles(tris)  # (Np, 4, 3)
    per_patch = angles.reshape(mesh.n_patches, -1).max(axis=1)
    hist, edges = np.histogram(angles.ravel(), bins=np.linspace(0.0, 180.0, 19))
    rows = [
        (pid, configs[pid].cut.kind, *configs[pid].params, float(per_patch[pid]))
        for pid in range(mesh.n_patches)
    ]
    return AngleAudit(rows, float(per_patch.max()), hist, edges)


def subtriangle_tiling_defect(q, r, s, cut: CutClass) -> np.ndarray:
    """|sum of subtriangle areas - 1/2| on the reference patch (test helper)."""
    nodes = reference_local_nodes(q, r, s)
    topo = subtriangle_topology(cut)
    tris = nodes[..., topo, :]
    areas = triangle_area(tris)
    return np.abs(np.asarray(areas).sum(axis=-1) - 0.5)
