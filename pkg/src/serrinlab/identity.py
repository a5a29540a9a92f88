"""Both sides of the weighted P-function integral identity on lens domains.

With ``V = x_2`` and ``d = 2`` the identity reads

    ∫_Ω -V f (|∇²f|² - (Δf)²/d) dx
        = ½ ∫_Σ (|∇f|² - (R/d)²) [V ∂_ν(f - ĝ) - ∂_ν V (f - ĝ)] dA

for every real ``R`` and every admissible auxiliary quadratic ``ĝ``.  The
bracket integrates to zero over the whole boundary (closure integral),
which is what makes the right-hand side independent of ``R``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .boundary2d import DomainBoundary
from .closed_form import AuxQuadratic, eval_quadratic, laplacian_P, make_aux, min_R_hat
from .errors import GaugeMismatch
from .fem2d import P2Space, solve_mixed
from .mesh2d import Mesh, generate

__all__ = [
    "IdentityReport",
    "reference_radius",
    "weighted_moments",
    "lhs",
    "rhs",
    "closure_integral",
    "gauges",
    "identity_report",
    "CSV_HEADER",
]

CSV_HEADER = ("level", "h", "lhs", "rhs_Rstar", "deficit", "closure", "gauge_spread", "ref_radius")


@dataclass
class IdentityReport:
    lhs: float
    rhs_at_R: list[tuple[float, float]]
    closure_integral: float
    closure_T_max: float
    gauge_spread: float
    r_spread: float
    reference_radius: float
    deficit: float
    mesh_level: int
    h: float
    resolution: tuple[int, int] = (0, 0)
    flags: list[str] = field(default_factory=list)

    @property
    def rhs_Rstar(self) -> float:
        return self.rhs_at_R[0][1]

    @property
    def relative_deficit(self) -> float:
        return self.deficit / (abs(self.lhs) + abs(self.rhs_Rstar) + 1e-12)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["rhs_at_R"] = [list(p) for p in self.rhs_at_R]
        out["resolution"] = list(self.resolution)
        return out

    def csv_row(self) -> tuple:
        return (self.mesh_level, self.h, self.lhs, self.rhs_Rstar, self.deficit,
                self.closure_integral, self.gauge_spread, self.reference_radius)


def weighted_moments(bdry: DomainBoundary, mesh: Mesh):
    """``(∫_Ω V dx, ∫_Σ V dA, ∫_T V dA)`` by element and exact-curve quadrature."""
    space = P2Space(mesh) if not hasattr(mesh, "_space") else mesh._space
    _, _, x, w = space.interior_points()
    vol = float(np.sum(w * x[:, 1]))
    out = [vol]
    for tag in ("Sigma", "T"):
        _, _, _, _, xb, _, wb = space.edge_points(tag)
        out.append(float(np.sum(wb * xb[:, 1])))
    return tuple(out)


def reference_radius(bdry: DomainBoundary, mesh: Mesh, c: float) -> float:
    """``d (∫_Ω V - c ∫_T V) / ∫_Σ V``; equals the radius ``r`` on a cap."""
    vol, vs, vt = weighted_moments(bdry, mesh)
    return 2 * (vol - c * vt) / vs


def lhs(sol) -> float:
    """``∫ -V f (|H|² - (tr H)²/2)`` with the discrete Hessian throughout."""
    x, w, v, _, H = sol.interior()
    return float(np.sum(w * (-x[:, 1] * v) * laplacian_P(H)))


def _check_gauge(sol, aux: AuxQuadratic):
    if abs(aux.c - sol.c) > 1e-14:
        raise GaugeMismatch(f"auxiliary built for c={aux.c!r}, solution has c={sol.c!r}")


def _bracket(tr, aux):
    """``V ∂_ν(f - ĝ) - ∂_ν V (f - ĝ)`` at trace points."""
    gv, gg, _ = eval_quadratic(aux, tr.x)
    diff_nu = np.sum((tr.grad - gg) * tr.normal, axis=1)
    return tr.x[:, 1] * diff_nu - tr.normal[:, 1] * (tr.value - gv)


def rhs(sol, R: float, aux: AuxQuadratic) -> float:
    """Boundary side of the identity on Σ for radius parameter ``R``."""
    _check_gauge(sol, aux)
    tr = sol.trace("Sigma")
    g2 = np.sum(tr.grad * tr.grad, axis=1)
    return float(0.5 * np.sum(tr.weight * (g2 - (R / 2) ** 2) * _bracket(tr, aux)))


def closure_integral(sol, aux: AuxQuadratic, strict: bool = True):
    """Full-boundary integral of the bracket and its max modulus on T.

    With ``strict=False`` an auxiliary built for a different ``c`` is
    accepted; the T value then exposes the Robin mismatch ``V * Δc``.
    """
    if strict:
        _check_gauge(sol, aux)
    total = 0.0
    t_max = 0.0
    for tag in ("Sigma", "T"):
        tr = sol.trace(tag)
        if len(tr.s) == 0:
            continue
        br = _bracket(tr, aux)
        total += float(np.sum(tr.weight * br))
        if tag == "T":
            t_max = float(np.max(np.abs(br)))
    return total, t_max


def _rotate(u, angle):
    ca, sa = math.cos(angle), math.sin(angle)
    return np.array([ca * u[0] - sa * u[1], sa * u[0] + ca * u[1]])


def gauges(bdry: DomainBoundary, c: float, tilt: float = 0.25) -> list[AuxQuadratic]:
    """Four auxiliary quadratics: two radii times two center directions.

    The base direction is ``z/|z|``; the second one is rotated by ``tilt``
    radians towards ``e_1``.
    """
    z = bdry.spec.z_array
    u0 = z / np.linalg.norm(z)
    u1 = _rotate(u0, tilt)
    u1 /= np.linalg.norm(u1)
    R0 = min_R_hat(2, c)
    return [make_aux(2, c, Rh, u) for Rh in (R0, R0 + 1.0) for u in (u0, u1)]


def _report_for(sol, bdry, c, level) -> IdentityReport:
    Rstar = reference_radius(bdry, sol.mesh, c)
    auxes = gauges(bdry, c)
    aux = auxes[0]
    left = lhs(sol)
    rs = [(R, rhs(sol, R, aux)) for R in (Rstar, 0.0, 2 * Rstar)]
    gvals = [rhs(sol, Rstar, a) for a in auxes]
    clos, tmax = closure_integral(sol, aux)
    vals = [v for _, v in rs]
    return IdentityReport(
        lhs=left,
        rhs_at_R=rs,
        closure_integral=clos,
        closure_T_max=tmax,
        gauge_spread=max(gvals) - min(gvals),
        r_spread=max(vals) - min(vals),
        reference_radius=Rstar,
        deficit=abs(left - rs[0][1]),
        mesh_level=level,
        h=sol.mesh.h,
        resolution=sol.mesh.resolution,
        flags=list(getattr(sol, "flags", ())),
    )


def identity_report(bdry: DomainBoundary, c: float, levels: int, base=(16, 4), solutions=None):
    """Identity diagnostics on ``levels`` meshes, doubling the resolution each time.

    ``solutions`` (optional list) receives the solved fields, finest last.
    """
    if levels < 1:
        raise ValueError("levels must be >= 1")
    out = []
    n_s, n_t = base
    for level in range(levels):
        mesh = generate(bdry, n_s << level, n_t << level)
        sol = solve_mixed(mesh, c)
        out.append(_report_for(sol, bdry, c, level))
        if solutions is not None:
            solutions.append(sol)
    return out


def deficits_decreasing(reports) -> bool:
    """True when the deficit drops across the last two levels."""
    return len(reports) >= 2 and reports[-1].deficit < reports[-2].deficit
