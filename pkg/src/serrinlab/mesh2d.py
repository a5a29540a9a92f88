"""Structured triangulations of lens domains.

Vertices come from the transfinite blend

    v(i, j) = (1 - t_j) * sigma(s_i) + t_j * t_arc(s_i),   s_i = i/n_s, t_j = j/n_t,

whose first and last columns collapse onto the two corners and are meshed
as triangle fans.  Interior quads are split along the shorter diagonal.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .boundary2d import DomainBoundary
from .errors import InvertedElement, MeshInvalid

__all__ = ["Mesh", "generate", "refine", "write_mesh", "read_mesh", "mesh_edges", "euler_characteristic"]

TAGS = ("Sigma", "T")


@dataclass(frozen=True, eq=False)
class Mesh:
    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), counterclockwise
    edge_vertices: np.ndarray  # (nb, 2) boundary edge endpoints
    edge_tags: tuple[str, ...]
    edge_params: np.ndarray  # (nb, 2) parameter interval on the exact curve
    edge_midpoints: np.ndarray  # (nb, 2) exact-curve midpoints
    resolution: tuple[int, int]
    source: DomainBoundary | None = field(default=None, repr=False)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    def boundary_edges(self, tag: str | None = None):
        """Indices of boundary edges, optionally restricted to one tag."""
        idx = [k for k, t in enumerate(self.edge_tags) if tag is None or t == tag]
        return np.asarray(idx, dtype=int)

    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        a = p[:, 1] - p[:, 0]
        b = p[:, 2] - p[:, 0]
        return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])

    def diameters(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        lens = [np.linalg.norm(p[:, i] - p[:, (i + 1) % 3], axis=1) for i in range(3)]
        return np.max(np.stack(lens, axis=1), axis=1)

    @property
    def h(self) -> float:
        return float(np.max(self.diameters()))


def _vid(i, j, n_s, n_t):
    if i == 0:
        return 0
    if i == n_s:
        return (n_s - 1) * (n_t + 1) + 1
    return 1 + (i - 1) * (n_t + 1) + j


def generate(bdry: DomainBoundary, n_s: int, n_t: int) -> Mesh:
    """Triangulate ``bdry`` with ``n_s`` cells along the curves and ``n_t`` across."""
    if n_s < 4 or n_t < 2:
        raise MeshInvalid(f"resolution must satisfy n_s >= 4, n_t >= 2 (got {n_s}, {n_t})")
    s = np.arange(1, n_s) / n_s
    t = np.arange(n_t + 1) / n_t
    sig = bdry.sigma(s)
    arc = bdry.t_arc(s)
    inner = (1.0 - t)[None, :, None] * sig[:, None, :] + t[None, :, None] * arc[:, None, :]
    p1, p2 = bdry.corners
    verts = np.vstack([p1[None, :], inner.reshape(-1, 2), p2[None, :]])

    def vid(i, j):
        return _vid(i, j, n_s, n_t)

    tris = []
    where = []
    for j in range(n_t):
        tris.append((vid(0, j), vid(1, j), vid(1, j + 1)))
        where.append((0, j))
    for i in range(1, n_s - 1):
        for j in range(n_t):
            a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            if np.linalg.norm(verts[a] - verts[c]) <= np.linalg.norm(verts[b] - verts[d]):
                tris += [(a, b, c), (a, c, d)]
            else:
                tris += [(a, b, d), (b, c, d)]
            where += [(i, j), (i, j)]
    for j in range(n_t):
        tris.append((vid(n_s - 1, j), vid(n_s, j), vid(n_s - 1, j + 1)))
        where.append((n_s - 1, j))
    tris = np.asarray(tris, dtype=np.int64)

    ev, tags, params, mids = [], [], [], []
    for tag, jj, curve in (("Sigma", 0, bdry.sigma), ("T", n_t, bdry.t_arc)):
        s0 = np.arange(n_s) / n_s
        s1 = np.arange(1, n_s + 1) / n_s
        m = curve(0.5 * (s0 + s1))
        for i in range(n_s):
            ev.append((vid(i, jj), vid(i + 1, jj)))
            tags.append(tag)
            params.append((s0[i], s1[i]))
            mids.append(m[i])

    mesh = Mesh(
        vertices=verts,
        triangles=tris,
        edge_vertices=np.asarray(ev, dtype=np.int64),
        edge_tags=tuple(tags),
        edge_params=np.asarray(params, dtype=float),
        edge_midpoints=np.asarray(mids, dtype=float),
        resolution=(int(n_s), int(n_t)),
        source=bdry,
    )
    areas = mesh.signed_areas()
    if np.any(areas <= 0):
        k = int(np.argmin(areas))
        raise InvertedElement(f"element {k} at cell (i, j) = {where[k]} has signed area {areas[k]!r}", where[k])
    return mesh


def refine(mesh: Mesh) -> Mesh:
    """Regenerate at twice the resolution from the stored boundary."""
    if mesh.source is None:
        raise MeshInvalid("mesh has no boundary attached; cannot re-snap")
    n_s, n_t = mesh.resolution
    return generate(mesh.source, 2 * n_s, 2 * n_t)


def mesh_edges(triangles: np.ndarray):
    """Unique undirected edges and the triangle-to-edge map.

    Returns ``(edges, tri_edges)`` where ``edges`` is ``(ne, 2)`` with sorted
    endpoints and ``tri_edges[k, m]`` is the edge opposite local vertex ``m``.
    """
    loc = ((1, 2), (2, 0), (0, 1))
    all_e = np.concatenate([triangles[:, list(p)] for p in loc], axis=0)
    all_e.sort(axis=1)
    edges, inv = np.unique(all_e, axis=0, return_inverse=True)
    nt = len(triangles)
    tri_edges = inv.reshape(3, nt).T
    return edges, tri_edges


def euler_characteristic(mesh: Mesh) -> int:
    edges, _ = mesh_edges(mesh.triangles)
    return mesh.n_vertices - len(edges) + mesh.n_triangles


def write_mesh(mesh: Mesh, fh=None, dofs=None) -> str:
    """Serialize in the ``lensmesh 1`` text format; returns the text.

    When ``dofs`` is given a trailing ``dofs`` block is appended.
    """
    out = io.StringIO()
    out.write("lensmesh 1\n")
    out.write(f"{mesh.n_vertices}\n")
    for x, y in mesh.vertices:
        out.write(f"{float(x)!r} {float(y)!r}\n")
    out.write(f"{mesh.n_triangles}\n")
    for i, j, k in mesh.triangles:
        out.write(f"{i} {j} {k}\n")
    out.write(f"{len(mesh.edge_tags)}\n")
    for (i, j), tag, (s0, s1), (mx, my) in zip(mesh.edge_vertices, mesh.edge_tags, mesh.edge_params, mesh.edge_midpoints):
        out.write(f"{i} {j} {tag} {float(s0)!r} {float(s1)!r} {float(mx)!r} {float(my)!r}\n")
    if dofs is not None:
        out.write(f"dofs {len(dofs)}\n")
        for v in dofs:
            out.write(f"{float(v)!r}\n")
    text = out.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def read_mesh(text: str, source: DomainBoundary | None = None):
    """Parse ``lensmesh 1`` text.  Returns ``(mesh, dofs_or_None)``."""
    lines = iter(text.splitlines())
    if next(lines).strip() != "lensmesh 1":
        raise MeshInvalid("missing 'lensmesh 1' header")
    nv = int(next(lines))
    verts = np.array([[float(v) for v in next(lines).split()] for _ in range(nv)]).reshape(nv, 2)
    nt = int(next(lines))
    tris = np.array([[int(v) for v in next(lines).split()] for _ in range(nt)], dtype=np.int64).reshape(nt, 3)
    nb = int(next(lines))
    ev, tags, params, mids = [], [], [], []
    for _ in range(nb):
        i, j, tag, s0, s1, mx, my = next(lines).split()
        if tag not in TAGS:
            raise MeshInvalid(f"unknown boundary tag {tag!r}")
        ev.append((int(i), int(j)))
        tags.append(tag)
        params.append((float(s0), float(s1)))
        mids.append((float(mx), float(my)))
    dofs = None
    rest = next(lines, None)
    if rest is not None and rest.startswith("dofs"):
        n = int(rest.split()[1])
        dofs = np.array([float(next(lines)) for _ in range(n)])
    n_s = sum(1 for t in tags if t == "Sigma")
    n_t = (nv - 2) // max(n_s - 1, 1) - 1 if n_s > 1 else 0
    mesh = Mesh(
        vertices=verts,
        triangles=tris,
        edge_vertices=np.asarray(ev, dtype=np.int64).reshape(-1, 2),
        edge_tags=tuple(tags),
        edge_params=np.asarray(params, dtype=float).reshape(-1, 2),
        edge_midpoints=np.asarray(mids, dtype=float).reshape(-1, 2),
        resolution=(n_s, n_t),
        source=source,
    )
    return mesh, dofs
