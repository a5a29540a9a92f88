"""Rigidity probes: how far a lens domain is from satisfying ``f_ν ≡ const`` on Σ."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .boundary2d import contact_angle_at, perturbed_boundary
from .errors import SerrinLabError
from .fem2d import neumann_trace_sigma, solve_mixed
from .geom_core import CapSpec
from .identity import lhs, reference_radius
from .mesh2d import generate

__all__ = ["ProbeRecord", "rigidity_defect", "sign_check", "probe_solution", "sweep", "SWEEP_HEADER"]

SWEEP_HEADER = ("eps", "level", "h", "defect", "mean_fnu", "lhs", "max_f", "theta1", "theta2")


@dataclass
class ProbeRecord:
    eps: float
    defect: float
    mean_fnu: float
    lhs: float
    max_f: float
    mesh_level: int
    h: float
    theta_corners: tuple[float, float]
    reference_radius: float = float("nan")
    error: str | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        out["theta_corners"] = list(self.theta_corners)
        return out

    def csv_row(self) -> tuple:
        return (self.eps, self.mesh_level, self.h, self.defect, self.mean_fnu, self.lhs, self.max_f,
                self.theta_corners[0], self.theta_corners[1])


def rigidity_defect(sol) -> float:
    """V-weighted L2 deviation of ``f_ν`` from its V-weighted mean over Σ."""
    samples, mean = neumann_trace_sigma(sol)
    _, fnu, V, w = samples.T
    var = np.sum((fnu - mean) ** 2 * V * w) / np.sum(V * w)
    return float(math.sqrt(max(var, 0.0)))


def sign_check(sol) -> dict:
    """Largest nodal value of ``f`` and whether all non-Σ nodes are strictly negative."""
    dofs = np.asarray(sol.dofs)
    k = int(np.argmax(dofs))
    nodes = sol.node_positions()
    mask = np.ones(len(dofs), dtype=bool)
    mask[sol.space.dirichlet] = False
    return {
        "max_f": float(dofs[k]),
        "argmax": [float(nodes[k, 0]), float(nodes[k, 1])],
        "interior_negative": bool(np.all(dofs[mask] < -1e-10)),
    }


def probe_solution(sol, eps: float, level: int) -> ProbeRecord:
    bdry = sol.mesh.source
    _, mean = neumann_trace_sigma(sol)
    angles = tuple(contact_angle_at(bdry, i)[0] for i in (0, 1))
    return ProbeRecord(
        eps=float(eps),
        defect=rigidity_defect(sol),
        mean_fnu=mean,
        lhs=lhs(sol),
        max_f=sign_check(sol)["max_f"],
        mesh_level=level,
        h=sol.mesh.h,
        theta_corners=angles,
        reference_radius=reference_radius(bdry, sol.mesh, sol.c),
    )


def sweep(spec: CapSpec, eps_list, levels: int, modes=((2, 0.0),), base=(16, 4), solutions=None):
    """One :class:`ProbeRecord` per amplitude, at the finest of ``levels`` resolutions.

    Failures are recorded in the ``error`` field instead of aborting.
    """
    level = levels - 1
    n_s, n_t = base[0] << level, base[1] << level
    records = []
    for eps in eps_list:
        try:
            bdry = perturbed_boundary(spec, eps, modes)
            sol = solve_mixed(generate(bdry, n_s, n_t), spec.c)
            records.append(probe_solution(sol, eps, level))
            if solutions is not None:
                solutions.append(sol)
        except SerrinLabError as exc:
            nan = float("nan")
            records.append(ProbeRecord(float(eps), nan, nan, nan, nan, level, nan, (nan, nan),
                                       error=f"{type(exc).__name__}: {exc}"))
            if solutions is not None:
                solutions.append(None)
    return records
