"""Quadratic Lagrange finite elements for the mixed Dirichlet-Robin problem.

Solves

    Δf = 1 in Ω,   f = 0 on Σ,   ∂_ν f - f = c on T

through the weak form ``∫∇f·∇φ - ∫_T fφ = -∫φ + c∫_T φ`` for all ``φ``
vanishing on Σ.  Elements touching the curved boundary are isoparametric:
the midpoint node of a boundary edge sits on the exact curve.  Boundary
integrals use exact positions, normals and arc elements from the
:class:`~serrinlab.boundary2d.DomainBoundary`; the mesh only provides
connectivity there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .closed_form import QuadraticSolution, eval_quadratic
from .errors import InvertedElement, MeshInvalid, OutsideDomain, SingularSystem
from .mesh2d import Mesh, mesh_edges

__all__ = [
    "P2Space",
    "FemSolution",
    "ExactField",
    "BoundaryTrace",
    "assemble",
    "solve_mixed",
    "interpolate",
    "evaluate",
    "error_norms",
    "neumann_trace_sigma",
    "tangential_hessian_on_T",
    "galerkin_residual",
    "corner_split_error",
]


def _dunavant5():
    a = (6.0 - math.sqrt(15.0)) / 21.0
    b = (6.0 + math.sqrt(15.0)) / 21.0
    wa = (155.0 - math.sqrt(15.0)) / 2400.0
    wb = (155.0 + math.sqrt(15.0)) / 2400.0
    pts = [
        (1 / 3, 1 / 3),
        (a, a), (1 - 2 * a, a), (a, 1 - 2 * a),
        (b, b), (1 - 2 * b, b), (b, 1 - 2 * b),
    ]
    w = [9 / 80] + [wa] * 3 + [wb] * 3
    return np.array(pts), np.array(w)


TRI_POINTS, TRI_WEIGHTS = _dunavant5()
_gx, _gw = np.polynomial.legendre.leggauss(5)
EDGE_POINTS = 0.5 * (_gx + 1.0)
EDGE_WEIGHTS = 0.5 * _gw

# reference vertices; local edge nodes 3: (0,1), 4: (1,2), 5: (2,0)
REF_VERTS = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
LOCAL_EDGES = ((0, 1), (1, 2), (2, 0))


def shape(xi):
    """P2 shape values, reference gradients and reference Hessians at ``xi`` (..., 2)."""
    xi = np.asarray(xi, dtype=float)
    x, y = xi[..., 0], xi[..., 1]
    l0, l1, l2 = 1.0 - x - y, x, y
    N = np.stack([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l0 * l1, 4 * l1 * l2, 4 * l2 * l0,
    ], axis=-1)
    # d(lambda)/d(x, y): l0 -> (-1,-1), l1 -> (1,0), l2 -> (0,1)
    dN = np.stack([
        np.stack([1 - 4 * l0, 1 - 4 * l0], -1),
        np.stack([4 * l1 - 1, np.zeros_like(x)], -1),
        np.stack([np.zeros_like(x), 4 * l2 - 1], -1),
        np.stack([4 * (l0 - l1), -4 * l1], -1),
        np.stack([4 * l2, 4 * l1], -1),
        np.stack([-4 * l2, 4 * (l0 - l2)], -1),
    ], axis=-2)
    H = np.array([
        [[4, 4], [4, 4]],
        [[4, 0], [0, 0]],
        [[0, 0], [0, 4]],
        [[-8, -4], [-4, 0]],
        [[0, 4], [4, 0]],
        [[0, -4], [-4, -8]],
    ], dtype=float)
    return N, dN, H


class P2Space:
    """Degrees of freedom and isoparametric geometry on a :class:`Mesh`."""

    def __init__(self, mesh: Mesh):
        if mesh.source is None:
            raise MeshInvalid("finite element space needs the exact boundary attached to the mesh")
        self.mesh = mesh
        self.bdry = mesh.source
        nv = mesh.n_vertices
        edges, tri_edges = mesh_edges(mesh.triangles)
        self.edges = edges
        self.n_dofs = nv + len(edges)
        # local edge node m+3 sits on LOCAL_EDGES[m]; tri_edges indexes by opposite vertex
        opp = (2, 0, 1)
        self.elem_dofs = np.concatenate(
            [mesh.triangles, nv + tri_edges[:, list(opp)]], axis=1
        ).astype(np.int64)

        nodes = np.zeros((self.n_dofs, 2))
        nodes[:nv] = mesh.vertices
        nodes[nv:] = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
        lookup = {(int(a), int(b)): k for k, (a, b) in enumerate(edges)}
        self.bedge_global = np.array(
            [lookup[tuple(sorted((int(i), int(j))))] for i, j in mesh.edge_vertices], dtype=np.int64
        )
        if len(self.bedge_global):
            nodes[nv + self.bedge_global] = mesh.edge_midpoints
        self.nodes = nodes
        self.elem_nodes = nodes[self.elem_dofs]  # (nt, 6, 2)
        self.curved = np.zeros(mesh.n_triangles, dtype=bool)
        straight_mid = 0.5 * (mesh.vertices[mesh.edge_vertices[:, 0]] + mesh.vertices[mesh.edge_vertices[:, 1]])
        bent = np.linalg.norm(mesh.edge_midpoints - straight_mid, axis=1) > 0.0
        self._locate_boundary_edges()
        self.curved[self.bedge_elem[bent]] = True
        self._bbox = np.stack([self.elem_nodes.min(axis=1), self.elem_nodes.max(axis=1)], axis=1)

        self.tags = np.array(mesh.edge_tags)
        sig = self.tags == "Sigma"
        dn = np.concatenate([mesh.edge_vertices[sig].ravel(), nv + self.bedge_global[sig]])
        self.dirichlet = np.unique(dn)
        mask = np.ones(self.n_dofs, dtype=bool)
        mask[self.dirichlet] = False
        self.free = np.flatnonzero(mask)

    def _locate_boundary_edges(self):
        """Owning element and local reference endpoints for each boundary edge."""
        mesh = self.mesh
        owner = {}
        for k, tri in enumerate(mesh.triangles):
            for m, (a, b) in enumerate(LOCAL_EDGES):
                owner[(int(tri[a]), int(tri[b]))] = (k, a, b)
                owner[(int(tri[b]), int(tri[a]))] = (k, b, a)
        elem, ra, rb = [], [], []
        for i, j in mesh.edge_vertices:
            k, a, b = owner[(int(i), int(j))]
            elem.append(k)
            ra.append(REF_VERTS[a])
            rb.append(REF_VERTS[b])
        self.bedge_elem = np.asarray(elem, dtype=np.int64)
        self.bedge_ref = (np.asarray(ra).reshape(-1, 2), np.asarray(rb).reshape(-1, 2))

    # geometry ----------------------------------------------------------
    def geometry(self, elems, xi):
        """Map reference points; returns ``(x, J, detJ, Jinv, HF)``.

        ``elems`` (n,) and ``xi`` (n, 2) are paired pointwise.
        """
        X = self.elem_nodes[elems]
        N, dN, H = shape(xi)
        x = np.einsum("pn,pnk->pk", N, X)
        J = np.einsum("pnk,pna->pka", X, dN)
        det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
        Jinv = np.empty_like(J)
        Jinv[:, 0, 0] = J[:, 1, 1] / det
        Jinv[:, 1, 1] = J[:, 0, 0] / det
        Jinv[:, 0, 1] = -J[:, 0, 1] / det
        Jinv[:, 1, 0] = -J[:, 1, 0] / det
        HF = np.einsum("pnk,nab->pkab", X, H)
        return x, J, det, Jinv, HF

    def interior_points(self):
        """Quadrature points: ``(elems, xi, x, weight)`` flattened over all elements."""
        nt = self.mesh.n_triangles
        nq = len(TRI_WEIGHTS)
        elems = np.repeat(np.arange(nt), nq)
        xi = np.tile(TRI_POINTS, (nt, 1))
        x, _, det, _, _ = self.geometry(elems, xi)
        if np.any(det <= 0):
            k = int(elems[np.argmin(det)])
            raise InvertedElement(f"isoparametric element {k} has non-positive Jacobian", k)
        w = np.tile(TRI_WEIGHTS, nt) * det
        return elems, xi, x, w

    def edge_points(self, tag):
        """Boundary quadrature on edges with ``tag``.

        Returns ``(edge_ids, elems, xi, s, x_exact, normal, weight)``; the
        parameter ``s`` on the exact curve is linear in the reference edge
        coordinate.
        """
        ids = np.flatnonzero(self.tags == tag)
        ng = len(EDGE_WEIGHTS)
        lam = np.tile(EDGE_POINTS, len(ids))
        rid = np.repeat(ids, ng)
        ra, rb = self.bedge_ref[0][rid], self.bedge_ref[1][rid]
        xi = (1 - lam)[:, None] * ra + lam[:, None] * rb
        s0, s1 = self.mesh.edge_params[rid, 0], self.mesh.edge_params[rid, 1]
        s = s0 + lam * (s1 - s0)
        x = self.bdry.curve(tag, s)
        nrm = self.bdry.normal(tag, s)
        speed = np.linalg.norm(self.bdry.curve_deriv(tag, s), axis=1)
        w = np.tile(EDGE_WEIGHTS, len(ids)) * speed * (s1 - s0)
        return rid, self.bedge_elem[rid], xi, s, x, nrm, w

    # evaluation ----------------------------------------------------------
    def eval_ref(self, dofs, elems, xi, derivs=2):
        """Value, physical gradient and Hessian of a P2 field at reference points."""
        N, dN, H = shape(xi)
        u = dofs[self.elem_dofs[elems]]  # (p, 6)
        val = np.einsum("pn,pn->p", N, u)
        if derivs == 0:
            return val, None, None
        _, J, _, Jinv, HF = self.geometry(elems, xi)
        gref = np.einsum("pn,pna->pa", u, dN)
        grad = np.einsum("pa,pak->pk", gref, Jinv)  # J^{-T} gref
        if derivs == 1:
            return val, grad, None
        href = np.einsum("pn,nab->pab", u, H) - np.einsum("pk,pkab->pab", grad, HF)
        hess = np.einsum("pak,pab,pbl->pkl", Jinv, href, Jinv)
        return val, grad, hess

    def locate(self, x, tol=1e-10):
        """Element and reference coordinates of physical points ``x`` (n, 2)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        elems = np.empty(len(x), dtype=np.int64)
        refs = np.empty((len(x), 2))
        for p, pt in enumerate(x):
            cand = np.flatnonzero(
                np.all(self._bbox[:, 0] - 1e-9 <= pt, axis=1) & np.all(pt <= self._bbox[:, 1] + 1e-9, axis=1)
            )
            best = None
            for k in cand:
                xi = self._invert(k, pt)
                if xi is None:
                    continue
                lmin = min(xi[0], xi[1], 1.0 - xi[0] - xi[1])
                if best is None or lmin > best[0]:
                    best = (lmin, k, xi)
                if lmin >= 0:
                    break
            if best is None or best[0] < -tol:
                raise OutsideDomain(f"point {pt.tolist()} is not inside the meshed domain")
            elems[p], refs[p] = best[1], best[2]
        return elems, refs

    def _invert(self, k, pt):
        V = self.elem_nodes[k, :3]
        A = np.column_stack([V[1] - V[0], V[2] - V[0]])
        xi = np.linalg.solve(A, pt - V[0])
        if not self.curved[k]:
            return xi
        for _ in range(30):
            x, J, _, _, _ = self.geometry(np.array([k]), xi[None, :])
            r = x[0] - pt
            step = np.linalg.solve(J[0], r)
            xi = xi - step
            if np.linalg.norm(step) < 1e-15:
                break
        return xi


@dataclass(frozen=True)
class BoundaryTrace:
    """Field data at boundary quadrature points on exact curve positions."""

    s: np.ndarray
    x: np.ndarray
    normal: np.ndarray
    weight: np.ndarray
    value: np.ndarray
    grad: np.ndarray
    hess: np.ndarray
    edge: np.ndarray


@dataclass(frozen=True, eq=False)
class FemSolution:
    mesh: Mesh
    dofs: np.ndarray
    c: float
    linear_residual: float
    condition_estimate: float
    space: P2Space = field(repr=False)
    flags: tuple[str, ...] = ()

    @property
    def h(self) -> float:
        return self.mesh.h

    def interior(self):
        """``(x, weight, value, grad, hess)`` at interior quadrature points."""
        elems, xi, x, w = self.space.interior_points()
        v, g, H = self.space.eval_ref(self.dofs, elems, xi)
        return x, w, v, g, H

    def trace(self, tag: str) -> BoundaryTrace:
        ids, elems, xi, s, x, nrm, w = self.space.edge_points(tag)
        v, g, H = self.space.eval_ref(self.dofs, elems, xi)
        return BoundaryTrace(s, x, nrm, w, v, g, H, ids)

    def node_positions(self):
        return self.space.nodes


class ExactField:
    """Closed-form quadratic sampled with the same quadrature as a FEM solution."""

    def __init__(self, quad: QuadraticSolution, mesh: Mesh, c: float):
        self.quad = quad
        self.mesh = mesh
        self.space = P2Space(mesh)
        self.c = float(c)

    @property
    def h(self) -> float:
        return self.mesh.h

    def interior(self):
        _, _, x, w = self.space.interior_points()
        v, g, H = eval_quadratic(self.quad, x)
        return x, w, v, g, H

    def trace(self, tag: str) -> BoundaryTrace:
        ids, _, _, s, x, nrm, w = self.space.edge_points(tag)
        v, g, H = eval_quadratic(self.quad, x)
        return BoundaryTrace(s, x, nrm, w, v, g, H, ids)

    def node_positions(self):
        return self.space.nodes

    @property
    def dofs(self):
        return eval_quadratic(self.quad, self.space.nodes)[0]


def assemble(space: P2Space, c: float):
    """Global matrix and load vector before Dirichlet elimination."""
    nt = space.mesh.n_triangles
    nq = len(TRI_WEIGHTS)
    elems, xi, _, w = space.interior_points()
    N, dN, _ = shape(xi)
    _, _, _, Jinv, _ = space.geometry(elems, xi)
    G = np.einsum("pna,pak->pnk", dN, Jinv)  # physical basis gradients
    Ke = np.einsum("p,pnk,pmk->pnm", w, G, G).reshape(nt, nq, 6, 6).sum(axis=1)
    Fe = -np.einsum("p,pn->pn", w, N).reshape(nt, nq, 6).sum(axis=1)

    rows = np.repeat(space.elem_dofs, 6, axis=1).ravel()
    cols = np.tile(space.elem_dofs, (1, 6)).ravel()
    A = sp.coo_matrix((Ke.ravel(), (rows, cols)), shape=(space.n_dofs, space.n_dofs))
    b = np.zeros(space.n_dofs)
    np.add.at(b, space.elem_dofs.ravel(), Fe.ravel())

    if np.any(space.tags == "T"):
        _, be, bxi, _, _, _, bw = space.edge_points("T")
        Nb, _, _ = shape(bxi)
        ed = space.elem_dofs[be]
        Me = -np.einsum("p,pn,pm->pnm", bw, Nb, Nb)
        A = A + sp.coo_matrix(
            (Me.ravel(), (np.repeat(ed, 6, axis=1).ravel(), np.tile(ed, (1, 6)).ravel())),
            shape=A.shape,
        )
        np.add.at(b, ed.ravel(), (c * bw[:, None] * Nb).ravel())
    return A.tocsr(), b


def _condition_estimate(A, lu):
    """1-norm condition estimate; the estimator's sign vectors use a fixed seed."""
    n = A.shape[0]
    inv = spla.LinearOperator(
        (n, n), matvec=lu.solve, rmatvec=lambda v: lu.solve(v, trans="T"), dtype=float
    )
    state = np.random.get_state()
    try:
        np.random.seed(12345)
        est = spla.onenormest(inv)
    finally:
        np.random.set_state(state)
    return float(spla.norm(A, 1) * est)


def solve_mixed(mesh: Mesh, c: float) -> FemSolution:
    """Assemble and solve the mixed problem on ``mesh`` with Robin constant ``c``."""
    space = P2Space(mesh)
    flags = []
    if not np.any(space.tags == "T"):
        flags.append("T empty - Robin data unused")
    if len(space.dirichlet) == 0:
        raise MeshInvalid("no Sigma edges: Dirichlet part is empty")
    A, b = assemble(space, c)
    free = space.free
    Aff = A[free][:, free].tocsc()
    bf = b[free]
    try:
        lu = spla.splu(Aff)
    except RuntimeError as exc:
        raise SingularSystem(f"factorization failed: {exc}") from exc
    uf = lu.solve(bf)
    cond = _condition_estimate(Aff, lu)
    if not np.all(np.isfinite(uf)) or cond > 1e14:
        raise SingularSystem(f"system is numerically singular (condition ~ {cond:.3e})", cond)
    res = float(np.linalg.norm(Aff @ uf - bf) / max(np.linalg.norm(bf), 1e-300))
    if res > 1e-10:
        raise SingularSystem(f"relative linear residual {res:.3e} exceeds 1e-10", cond)
    u = np.zeros(space.n_dofs)
    u[free] = uf
    return FemSolution(mesh=mesh, dofs=u, c=float(c), linear_residual=res, condition_estimate=cond,
                       space=space, flags=tuple(flags))


def galerkin_residual(sol: FemSolution, test_dofs: np.ndarray) -> float:
    """Weak-form residual ``a(f, φ) - ℓ(φ)`` for a test vector (zeroed on Σ)."""
    A, b = assemble(sol.space, sol.c)
    phi = np.array(test_dofs, dtype=float)
    phi[sol.space.dirichlet] = 0.0
    return float(phi @ (A @ sol.dofs - b))


def interpolate(mesh: Mesh, fn, c: float = 0.0) -> FemSolution:
    """Nodal P2 interpolant of ``fn`` (a callable on (n, 2) arrays)."""
    space = P2Space(mesh)
    u = np.asarray(fn(space.nodes), dtype=float)
    return FemSolution(mesh=mesh, dofs=u, c=float(c), linear_residual=0.0, condition_estimate=float("nan"),
                       space=space, flags=("interpolant",))


def evaluate(sol: FemSolution, x):
    """Value, gradient and Hessian of the discrete solution at physical points."""
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    elems, refs = sol.space.locate(pts)
    v, g, H = sol.space.eval_ref(sol.dofs, elems, refs)
    if np.ndim(x) == 1:
        return v[0], g[0], H[0]
    return v, g, H


def error_norms(sol: FemSolution, exact: QuadraticSolution) -> dict[str, float]:
    """Relative L2 and H1 errors and the max nodal/quadrature error against a quadratic."""
    x, w, v, g, _ = sol.interior()
    ve, ge, _ = eval_quadratic(exact, x)
    dv = v - ve
    dg = g - ge
    l2 = math.sqrt(float(np.sum(w * dv * dv)))
    l2e = math.sqrt(float(np.sum(w * ve * ve)))
    h1 = math.sqrt(l2**2 + float(np.sum(w * np.sum(dg * dg, axis=1))))
    h1e = math.sqrt(l2e**2 + float(np.sum(w * np.sum(ge * ge, axis=1))))
    nodal = np.abs(sol.dofs - eval_quadratic(exact, sol.space.nodes)[0])
    linf = max(float(np.max(np.abs(dv))), float(np.max(nodal)))
    return {"L2_rel": l2 / l2e, "H1_rel": h1 / h1e, "Linf": linf}


def neumann_trace_sigma(sol):
    """Normal derivative samples on Σ.

    Returns ``(samples, mean)`` where ``samples`` is an ``(n, 4)`` array of
    ``(s, f_nu, V, arc_weight)`` rows and ``mean`` is the V-weighted mean of
    ``f_nu``.
    """
    tr = sol.trace("Sigma")
    fnu = np.sum(tr.grad * tr.normal, axis=1)
    V = tr.x[:, 1]
    samples = np.column_stack([tr.s, fnu, V, tr.weight])
    mean = float(np.sum(fnu * V * tr.weight) / np.sum(V * tr.weight))
    return samples, mean


def tangential_hessian_on_T(sol) -> float:
    """Max over T quadrature points of ``|(I - νν^T) H ν|``."""
    tr = sol.trace("T")
    if len(tr.s) == 0:
        return 0.0
    Hn = np.einsum("pkl,pl->pk", tr.hess, tr.normal)
    tang = Hn - np.sum(Hn * tr.normal, axis=1)[:, None] * tr.normal
    return float(np.max(np.linalg.norm(tang, axis=1)))


def corner_split_error(sol: FemSolution, exact: QuadraticSolution, radius: float = 0.1):
    """Absolute L2 error split into a near-corner part (within ``radius`` of Γ) and the rest."""
    x, w, v, _, _ = sol.interior()
    dv = v - eval_quadratic(exact, x)[0]
    p1, p2 = sol.space.bdry.corners
    near = (np.linalg.norm(x - p1, axis=1) < radius) | (np.linalg.norm(x - p2, axis=1) < radius)
    e = w * dv * dv
    return math.sqrt(float(np.sum(e[near]))), math.sqrt(float(np.sum(e[~near])))
