"""Structured patch triangulation with a per-edge adjustable node registry.

Every patch (macro triangle) carries one adjustable node on each of its three
edges. The node position is stored once per edge, as a parameter t in (0,1)
measured from the edge's lower-indexed vertex, so the two patches sharing an
edge always see the identical physical point; inter-patch continuity is a
storage property, not a convention to maintain.

Within one patch the three edge nodes are addressed through the local
parameters (q, r, s):

    local edge 0 = v0->v1, node P3 at parameter s        -> P3 = (s, 0)
    local edge 1 = v1->v2, node P4 at parameter r        -> P4 = (1-r, r)
    local edge 2 = v2->v0, node P5 at parameter 1-q      -> P5 = (0, q)

where the right-hand column gives the reference coordinates for the unit
patch v0=(0,0), v1=(1,0), v2=(0,1).

The mesh is mutable only while the adaptation pass writes edge parameters;
afterwards it is treated as frozen and may be read concurrently.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = [
    "PatchMesh",
    "build_structured_mesh",
    "refine",
    "mesh_to_json",
    "FREE",
    "INTERFACE_LOCKED",
    "STRATEGY_SET",
    "LOCK_NAMES",
]

# Edge lock states: FREE edges may be written by a parameter strategy,
# INTERFACE_LOCKED holds an interface crossing, STRATEGY_SET a strategy value.
FREE = 0
INTERFACE_LOCKED = 1
STRATEGY_SET = 2
LOCK_NAMES = {FREE: "free", INTERFACE_LOCKED: "interface", STRATEGY_SET: "strategy"}


class PatchMesh:
    """Triangulation of patches with one adjustable node per edge.

    Attributes
    ----------
    vertices : (n_vertices, 2) float array
    edges : (n_edges, 2) int array
        Vertex pairs, lower index first.
    edge_param : (n_edges,) float array
        Node position along the edge, measured from the lower-indexed vertex.
    edge_lock : (n_edges,) int8 array of FREE / INTERFACE_LOCKED / STRATEGY_SET
    edge_boundary : (n_edges,) bool array
    patches : (n_patches, 3) int array
        Vertex ids, counterclockwise.
    patch_edges : (n_patches, 3) int array
        Edge ids in local order (v0->v1, v1->v2, v2->v0).
    patch_edge_forward : (n_patches, 3) bool array
        Whether the local traversal agrees with the stored edge direction.
    h_max : float
        Longest patch edge in the mesh.
    """

    def __init__(self, vertices, edges, edge_boundary, patches, patch_edges, n=None,
                 domain=None):
        self.vertices = np.asarray(vertices, dtype=float)
        self.edges = np.asarray(edges, dtype=np.int64)
        self.edge_boundary = np.asarray(edge_boundary, dtype=bool)
        self.patches = np.asarray(patches, dtype=np.int64)
        self.patch_edges = np.asarray(patch_edges, dtype=np.int64)
        self.edge_param = np.full(len(self.edges), 0.5)
        self.edge_lock = np.zeros(len(self.edges), dtype=np.int8)
        self.n = n
        self.domain = domain

        pv = self.vertices[self.patches]  # (Np, 3, 2)
        pe = self.edges[self.patch_edges]  # (Np, 3, 2)
        # Local edge k runs from local vertex k to local vertex (k+1)%3.
        first_local = self.patches  # (Np, 3): local start vertex of edge k
        self.patch_edge_forward = pe[:, :, 0] == first_local
        edge_vec = pv[:, [1, 2, 0], :] - pv
        self._edge_lengths = np.linalg.norm(edge_vec, axis=-1)  # (Np, 3)
        self.h_max = float(self._edge_lengths.max())

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_patches(self) -> int:
        return len(self.patches)

    def patch_diameter(self, pid: int) -> float:
        return float(self._edge_lengths[pid].max())

    def patch_diameters(self) -> np.ndarray:
        """Longest edge of every patch, (n_patches,)."""
        return self._edge_lengths.max(axis=1)

    def edge_points(self) -> np.ndarray:
        """Physical position of every edge node, (n_edges, 2)."""
        va = self.vertices[self.edges[:, 0]]
        vb = self.vertices[self.edges[:, 1]]
        t = self.edge_param[:, None]
        return (1.0 - t) * va + t * vb

    def local_nodes_all(self) -> np.ndarray:
        """Six node positions of every patch, (n_patches, 6, 2).

        Order: the three vertices, then the nodes on local edges 0, 1, 2.
        Edge nodes are computed once from edge storage, so patches sharing an
        edge report bitwise-identical points.
        """
        ep = self.edge_points()
        out = np.empty((self.n_patches, 6, 2))
        out[:, :3] = self.vertices[self.patches]
        out[:, 3:] = ep[self.patch_edges]
        return out

    def local_nodes(self, pid: int) -> np.ndarray:
        """Six node positions of one patch, (6, 2)."""
        out = np.empty((6, 2))
        out[:3] = self.vertices[self.patches[pid]]
        for k in range(3):
            eid = self.patch_edges[pid, k]
            a, b = self.edges[eid]
            t = self.edge_param[eid]
            out[3 + k] = (1.0 - t) * self.vertices[a] + t * self.vertices[b]
        return out

    def local_t(self, pid: int, k: int) -> float:
        """Edge-node parameter of local edge k, measured in local direction."""
        eid = self.patch_edges[pid, k]
        t = float(self.edge_param[eid])
        return t if self.patch_edge_forward[pid, k] else 1.0 - t

    def local_params(self, pid: int) -> tuple[float, float, float]:
        """Local (q, r, s) of one patch derived from the edge registry."""
        s = self.local_t(pid, 0)
        r = self.local_t(pid, 1)
        q = 1.0 - self.local_t(pid, 2)
        return q, r, s

    def local_params_all(self) -> np.ndarray:
        """(n_patches, 3) array of (q, r, s)."""
        t = self.edge_param[self.patch_edges]  # (Np, 3) storage params
        t = np.where(self.patch_edge_forward, t, 1.0 - t)
        out = np.empty_like(t)
        out[:, 0] = 1.0 - t[:, 2]  # q
        out[:, 1] = t[:, 1]        # r
        out[:, 2] = t[:, 0]        # s
        return out

    def set_local_t(self, pid: int, k: int, t_local: float, lock: int) -> None:
        """Write the edge-node parameter of local edge k (local direction)."""
        if not 0.0 < t_local < 1.0:
            raise ValueError(f"edge parameter {t_local} outside (0,1)")
        eid = self.patch_edges[pid, k]
        t = t_local if self.patch_edge_forward[pid, k] else 1.0 - t_local
        self.edge_param[eid] = t
        self.edge_lock[eid] = lock

    def reset_params(self) -> None:
        """Return every edge node to the midpoint and unlock it."""
        self.edge_param[:] = 0.5
        self.edge_lock[:] = FREE


def build_structured_mesh(n: int, domain=((-1.0, -1.0), (1.0, 1.0))) -> PatchMesh:
    """Uniform n-by-n grid of squares, each split along its bottom-left to
    top-right diagonal into two counterclockwise patch triangles.

    Parameters
    ----------
    n : int
        Cells per side, n >= 1.
    domain : ((x0, y0), (x1, y1))
        Axis-aligned rectangle.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    (x0, y0), (x1, y1) = domain
    xs = np.linspace(x0, x1, n + 1)
    ys = np.linspace(y0, y1, n + 1)

    def vid(i, j):
        return j * (n + 1) + i

    vertices = np.array([[xs[i], ys[j]] for j in range(n + 1) for i in range(n + 1)])

    edge_ids: dict[tuple[int, int], int] = {}
    edges: list[tuple[int, int]] = []

    def edge(a, b):
        key = (a, b) if a < b else (b, a)
        if key not in edge_ids:
            edge_ids[key] = len(edges)
            edges.append(key)
        return edge_ids[key]

    patches = []
    patch_edges = []
    # Each square splits along its bottom-left -> top-right diagonal. Patches
    # are rooted at their right-angle corner so the reference map is a
    # similarity and reference-coordinate angle bounds carry over verbatim.
    for j in range(n):
        for i in range(n):
            bl, br = vid(i, j), vid(i + 1, j)
            tr, tl = vid(i + 1, j + 1), vid(i, j + 1)
            # lower triangle: right vertical, diagonal, bottom horizontal
            patches.append((br, tr, bl))
            patch_edges.append((edge(br, tr), edge(tr, bl), edge(bl, br)))
            # upper triangle: left vertical, diagonal, top horizontal
            patches.append((tl, bl, tr))
            patch_edges.append((edge(tl, bl), edge(bl, tr), edge(tr, tl)))

    boundary = np.zeros(len(edges), dtype=bool)
    for eid, (a, b) in enumerate(edges):
        ax, ay = vertices[a]
        bx, by = vertices[b]
        on_vert = (ax == bx) and (ax in (x0, x1))
        on_horz = (ay == by) and (ay in (y0, y1))
        boundary[eid] = on_vert or on_horz

    return PatchMesh(vertices, edges, boundary, patches, patch_edges, n=n,
                     domain=domain)


def refine(mesh: PatchMesh) -> PatchMesh:
    """Globally refined mesh: regenerate the structured grid at 2n.

    Edge parameters are reset to 1/2; adaptation must be re-run.
    """
    if mesh.n is None or mesh.domain is None:
        raise ValueError("can only refine meshes built by build_structured_mesh")
    return build_structured_mesh(2 * mesh.n, mesh.domain)


def mesh_to_json(mesh: PatchMesh, configs=None) -> str:
    """JSON dump of the mesh, optionally including adapted subtriangulations.

    Schema: {"vertices": [[x, y], ...],
             "edges": [[v0, v1, t, lock], ...],
             "patches": [[v0, v1, v2, e0, e1, e2], ...],
             "subtriangles": [...]}.
    Each subtriangle entry holds the patch id, cut kind, (q, r, s), the six
    node coordinates, four local index triples, and four side labels.
    """
    doc = {
        "vertices": mesh.vertices.tolist(),
        "edges": [
            [int(a), int(b), float(t), LOCK_NAMES[int(lk)]]
            for (a, b), t, lk in zip(mesh.edges, mesh.edge_param, mesh.edge_lock)
        ],
        "patches": [
            [int(v) for v in pv] + [int(e) for e in pe]
            for pv, pe in zip(mesh.patches, mesh.patch_edges)
        ],
        "subtriangles": [],
    }
    if configs is not None:
        nodes = mesh.local_nodes_all()
        for pid, cfg in enumerate(configs):
            doc["subtriangles"].append(
                {
                    "patch": pid,
                    "cut": cfg.cut.kind,
                    "params": [float(p) for p in cfg.params],
                    "nodes": nodes[pid].tolist(),
                    "triangles": cfg.topology.tolist(),
                    "sides": [int(s) for s in cfg.sides],
                }
            )
    return json.dumps(doc)
