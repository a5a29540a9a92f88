"""Command-line front end.

Subcommands ``case``, ``convergence``, ``sweep`` and ``render-mesh`` run the
planar finite element pipeline; ``cap`` reports the closed-form cap in any
dimension.  Options may come from a JSON file (``--config``); explicit flags
override file values, and ``SERRINLAB_OUT`` overrides ``--out``.

Exit codes: 0 success, 2 invalid input, 3 solver failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import plotting
from .boundary2d import boundary_summary, perturbed_boundary
from .closed_form import aux_robin_defect, bvp_residuals, default_aux, eval_P, sample_tagged, solution_for
from .errors import SerrinLabError, SolverError, ValidationError
from .fem2d import corner_split_error, error_norms, neumann_trace_sigma, tangential_hessian_on_T
from .geom_core import cap_from_constants, spec_to_json
from .identity import CSV_HEADER, identity_report
from .mesh2d import generate, write_mesh
from .probe import SWEEP_HEADER, probe_solution, sign_check, sweep

EX_OK, EX_INVALID, EX_SOLVER, EX_USAGE = 0, 2, 3, 64
EMIT_CHOICES = {"json", "csv", "svg", "mesh"}

DEFAULTS = {
    "c0": 0.3,
    "c": -0.15,
    "dim": 2,
    "tilt": 0.0,
    "eps": "0",
    "modes": "2:0",
    "levels": 3,
    "base": "16,4",
    "out": ".",
    "emit": None,
    "seed": 0,
}


class ConfigError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(EX_USAGE)


@dataclass
class CaseConfig:
    c0: float
    c: float
    dim: int
    tilt: float
    eps: list[float]
    modes: list[tuple[int, float]]
    levels: int
    base: tuple[int, int]
    output_dir: Path
    emit: set[str]
    seed: int
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "c0": self.c0, "c": self.c, "dim": self.dim, "tilt": self.tilt,
            "eps": self.eps, "modes": [list(m) for m in self.modes],
            "levels": self.levels, "base": list(self.base),
            "emit": sorted(self.emit), "seed": self.seed,
        }


def _floats(text):
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(v) for v in text]
    parts = [p for p in str(text).split(",") if p.strip()]
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {text!r}") from exc


def _modes(text):
    if isinstance(text, list):
        return [(int(k), float(p)) for k, p in text]
    out = []
    for part in str(text).split(","):
        if not part.strip():
            continue
        try:
            k, _, ph = part.partition(":")
            out.append((int(k), float(ph or 0.0)))
        except ValueError as exc:
            raise ConfigError(f"cannot parse mode {part!r}; expected k:phase") from exc
    if not out:
        raise ConfigError("at least one perturbation mode is required")
    if any(k < 1 for k, _ in out):
        raise ConfigError("mode numbers must be >= 1")
    return out


def build_config(args, default_emit) -> CaseConfig:
    merged = dict(DEFAULTS)
    if args.config:
        try:
            merged.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    emit = merged["emit"] if merged["emit"] is not None else default_emit
    emit = set(emit if isinstance(emit, list) else [e.strip() for e in str(emit).split(",") if e.strip()])
    if emit - EMIT_CHOICES:
        raise ConfigError(f"unknown emit kinds {sorted(emit - EMIT_CHOICES)}")
    levels = int(merged["levels"])
    if not 1 <= levels <= 6:
        raise ConfigError(f"levels must be in [1, 6], got {levels}")
    base = [int(v) for v in _floats(merged["base"])]
    if len(base) != 2:
        raise ConfigError("base must be 'n_s,n_t'")
    out = os.environ.get("SERRINLAB_OUT") or merged["out"]
    return CaseConfig(
        c0=float(merged["c0"]), c=float(merged["c"]), dim=int(merged["dim"]), tilt=float(merged["tilt"]),
        eps=_floats(merged["eps"]), modes=_modes(merged["modes"]), levels=levels, base=(base[0], base[1]),
        output_dir=Path(out), emit=emit, seed=int(merged["seed"]),
    )


# output helpers -----------------------------------------------------------


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    return obj


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else "nan"
    return str(v)


def write_atomic(path: Path, data) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def json_text(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n"


def _require_planar(cfg: CaseConfig):
    if cfg.dim != 2:
        raise ConfigError(f"finite element subcommands need --dim 2 (got {cfg.dim}); use 'cap' for d > 2")


def _single_eps(cfg: CaseConfig) -> float:
    if len(cfg.eps) != 1:
        raise ConfigError("this subcommand takes exactly one --eps value")
    return cfg.eps[0]


# subcommands --------------------------------------------------------------


def cmd_case(cfg: CaseConfig) -> int:
    _require_planar(cfg)
    eps = _single_eps(cfg)
    spec = cap_from_constants(2, cfg.c0, cfg.c, cfg.tilt)
    bdry = perturbed_boundary(spec, eps, cfg.modes)
    sols = []
    reports = identity_report(bdry, spec.c, cfg.levels, base=cfg.base, solutions=sols)
    fine = sols[-1]
    record = probe_solution(fine, eps, cfg.levels - 1)
    samples, mean = neumann_trace_sigma(fine)
    out = cfg.output_dir
    if "csv" in cfg.emit:
        write_atomic(out / "case.csv", csv_text(CSV_HEADER, [r.csv_row() for r in reports]))
    if "json" in cfg.emit:
        doc = {
            "config": cfg.to_dict(),
            "spec": spec_to_json(spec),
            "boundary": boundary_summary(bdry),
            "identity": [r.to_dict() for r in reports],
            "deficit_decreasing": len(reports) < 2 or reports[-1].deficit < reports[-2].deficit,
            "probe": record.to_dict(),
            "sign": sign_check(fine),
            "tangential_hessian_T": tangential_hessian_on_T(fine),
            "solver": {
                "n_dofs": int(fine.space.n_dofs),
                "linear_residual": fine.linear_residual,
                "condition_estimate": fine.condition_estimate,
                "flags": list(fine.flags),
            },
        }
        if spec.theta > math.pi / 2:
            doc["flags"] = ["contact angle > pi/2: W^{2,2} regularity near corners not guaranteed"]
        write_atomic(out / "case.json", json_text(doc))
    if "svg" in cfg.emit:
        write_atomic(out / "case_field.svg", plotting.field_figure(fine, title=f"f, eps={eps:g}"))
        write_atomic(out / "case_profile.svg", plotting.profile_figure(samples, mean, title=f"eps={eps:g}"))
    if "mesh" in cfg.emit:
        write_atomic(out / "case.mesh", write_mesh(fine.mesh, dofs=fine.dofs))
    return EX_OK


CONV_HEADER = ("level", "n_s", "n_t", "h", "L2_rel", "H1_rel", "Linf", "L2_corner", "L2_interior",
               "order_L2", "order_H1")


def convergence_rows(cfg: CaseConfig):
    from .fem2d import solve_mixed

    spec = cap_from_constants(2, cfg.c0, cfg.c, cfg.tilt)
    bdry = perturbed_boundary(spec, 0.0, cfg.modes)
    exact = solution_for(spec)
    rows = []
    for level in range(cfg.levels):
        mesh = generate(bdry, cfg.base[0] << level, cfg.base[1] << level)
        sol = solve_mixed(mesh, spec.c)
        err = error_norms(sol, exact)
        near, away = corner_split_error(sol, exact)
        row = {"level": level, "n_s": mesh.resolution[0], "n_t": mesh.resolution[1], "h": mesh.h,
               "L2_corner": near, "L2_interior": away, "order_L2": None, "order_H1": None, **err}
        if rows:
            prev = rows[-1]
            lh = math.log(prev["h"] / row["h"])
            row["order_L2"] = math.log(prev["L2_rel"] / row["L2_rel"]) / lh
            row["order_H1"] = math.log(prev["H1_rel"] / row["H1_rel"]) / lh
        rows.append(row)
    return rows


def cmd_convergence(cfg: CaseConfig) -> int:
    _require_planar(cfg)
    if any(e != 0.0 for e in cfg.eps):
        raise ConfigError("convergence requires exact solution (eps=0)")
    rows = convergence_rows(cfg)
    out = cfg.output_dir
    if "csv" in cfg.emit:
        write_atomic(out / "convergence.csv", csv_text(CONV_HEADER, [[r[k] for k in CONV_HEADER] for r in rows]))
    if "json" in cfg.emit:
        write_atomic(out / "convergence.json", json_text({"config": cfg.to_dict(), "levels": rows}))
    if "svg" in cfg.emit:
        write_atomic(out / "convergence.svg", plotting.convergence_figure(rows))
    return EX_OK


def cmd_sweep(cfg: CaseConfig) -> int:
    _require_planar(cfg)
    if not cfg.eps:
        raise ConfigError("sweep needs a non-empty --eps list")
    spec = cap_from_constants(2, cfg.c0, cfg.c, cfg.tilt)
    sols = []
    records = sweep(spec, cfg.eps, cfg.levels, modes=cfg.modes, base=cfg.base, solutions=sols)
    out = cfg.output_dir
    if "csv" in cfg.emit:
        write_atomic(out / "sweep.csv", csv_text(SWEEP_HEADER, [r.csv_row() for r in records]))
    if "json" in cfg.emit:
        write_atomic(out / "sweep.json", json_text({"config": cfg.to_dict(), "records": [r.to_dict() for r in records]}))
    if "svg" in cfg.emit:
        for i, (rec, sol) in enumerate(zip(records, sols)):
            if sol is None:
                continue
            samples, mean = neumann_trace_sigma(sol)
            write_atomic(out / f"sweep_profile_{i}.svg",
                         plotting.profile_figure(samples, mean, title=f"eps={rec.eps:g}, defect={rec.defect:.3g}"))
    failed = [r for r in records if r.error]
    for r in failed:
        sys.stderr.write(json.dumps({"error": r.error.split(":")[0], "eps": r.eps, "message": r.error}) + "\n")
    return EX_OK


def cmd_render_mesh(cfg: CaseConfig) -> int:
    _require_planar(cfg)
    eps = _single_eps(cfg)
    spec = cap_from_constants(2, cfg.c0, cfg.c, cfg.tilt)
    bdry = perturbed_boundary(spec, eps, cfg.modes)
    level = cfg.levels - 1
    mesh = generate(bdry, cfg.base[0] << level, cfg.base[1] << level)
    out = cfg.output_dir
    if "svg" in cfg.emit:
        write_atomic(out / "mesh.svg", plotting.mesh_figure(mesh))
    if "mesh" in cfg.emit:
        write_atomic(out / "mesh.mesh", write_mesh(mesh))
    return EX_OK


def cmd_cap(cfg: CaseConfig) -> int:
    spec = cap_from_constants(cfg.dim, cfg.c0, cfg.c, cfg.tilt)
    sol = solution_for(spec)
    samples = sample_tagged(spec, 10_000, cfg.seed)
    P = eval_P(sol, samples["interior"])
    aux = default_aux(spec)
    doc = {
        "spec": spec_to_json(spec),
        "residuals": bvp_residuals(sol, spec, samples),
        "P_value": float(P.mean()),
        "P_expected": spec.c0**2 / 2,
        "P_spread": float(P.max() - P.min()),
        "aux": {"O_hat": list(aux.O_hat), "R_hat": aux.R_hat, "robin_defect": aux_robin_defect(aux, 100, cfg.seed)},
    }
    out = cfg.output_dir
    if "json" in cfg.emit:
        write_atomic(out / "cap.json", json_text(doc))
    if "csv" in cfg.emit:
        res = doc["residuals"]
        write_atomic(out / "cap.csv", csv_text(
            ("d", "c0", "c", "r", "z_norm", "theta_deg", "pde_max", "dirichlet_max", "robin_max", "neumann_max"),
            [(spec.d, spec.c0, spec.c, spec.r, spec.z_norm, doc["spec"]["theta_deg"], res["pde_max"],
              res["dirichlet_max"], res["robin_max"], res["neumann_max"])]))
    return EX_OK


COMMANDS = {
    "case": (cmd_case, ["csv", "json", "svg"], "solve one domain and check the integral identity"),
    "convergence": (cmd_convergence, ["csv", "json"], "error norms against the exact cap solution"),
    "sweep": (cmd_sweep, ["csv", "svg"], "rigidity defect over perturbation amplitudes"),
    "render-mesh": (cmd_render_mesh, ["svg", "mesh"], "write the mesh of one domain"),
    "cap": (cmd_cap, ["json"], "closed-form cap report in any dimension"),
}


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="serrinlab", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, emit, helptext) in COMMANDS.items():
        p = sub.add_parser(name, help=helptext, description=f"{helptext}. Flags override --config values.")
        p.add_argument("--config", help="JSON file with option values")
        p.add_argument("--c0", type=float, help="Neumann constant on Sigma (> 0)")
        p.add_argument("--c", type=float, help="Robin constant on T")
        p.add_argument("--dim", type=int, help="ambient dimension (2 for finite element commands)")
        p.add_argument("--tilt", type=float, help="rotation of the cap center away from the x_d axis (rad)")
        p.add_argument("--eps", help="perturbation amplitude; comma-separated list for sweep")
        p.add_argument("--modes", help="perturbation modes 'k:phase,...'")
        p.add_argument("--levels", type=int, help="number of refinement levels, 1..6")
        p.add_argument("--base", help="coarsest resolution 'n_s,n_t'")
        p.add_argument("--out", help="output directory (SERRINLAB_OUT overrides)")
        p.add_argument("--emit", help=f"comma-separated subset of json,csv,svg,mesh (default {','.join(emit)})")
        p.add_argument("--seed", type=int, help="seed for random sample points")
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    fn, default_emit, _ = COMMANDS[args.command]
    try:
        cfg = build_config(args, default_emit)
        return fn(cfg)
    except ValidationError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return EX_INVALID
    except SolverError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return EX_SOLVER
    except SerrinLabError as exc:
        sys.stderr.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return EX_INVALID


if __name__ == "__main__":
    sys.exit(main())
