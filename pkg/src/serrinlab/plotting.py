"""Matplotlib figures written as SVG next to the CSV/JSON reports.

SVG output is made reproducible by fixing the hash salt used for element ids
and dropping the date metadata.
"""

from __future__ import annotations

import contextlib
import io

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import matplotlib.tri as mtri  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "svg.hashsalt": "serrinlab",
    "svg.fonttype": "none",
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.labelsize": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "lines.linewidth": 1.2,
    "figure.dpi": 100,
}

SIGMA_COLOR = "#b2182b"
T_COLOR = "#2166ac"


@contextlib.contextmanager
def style():
    with matplotlib.rc_context(STYLE):
        yield


def svg_bytes(fig) -> bytes:
    buf = io.StringIO()
    fig.savefig(buf, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return buf.getvalue().encode("utf-8")


def _sub_triangles(space):
    """Split each P2 element into four linear triangles on its six nodes."""
    e = space.elem_dofs
    return np.concatenate([e[:, [0, 3, 5]], e[:, [3, 1, 4]], e[:, [5, 4, 2]], e[:, [3, 4, 5]]])


def _draw_boundary(ax, bdry, n=200):
    s = np.linspace(0, 1, n)
    sig = bdry.sigma(s)
    arc = bdry.t_arc(s)
    ax.plot(sig[:, 0], sig[:, 1], color=SIGMA_COLOR, lw=1.4, label=r"$\Sigma$")
    ax.plot(arc[:, 0], arc[:, 1], color=T_COLOR, lw=1.4, label=r"$T$")


def field_figure(sol, title="f") -> bytes:
    """Filled contour plot of the nodal field with a ten-step legend."""
    space = sol.space
    nodes = space.nodes
    tri = mtri.Triangulation(nodes[:, 0], nodes[:, 1], _sub_triangles(space))
    vals = np.asarray(sol.dofs)
    lo, hi = float(vals.min()), float(vals.max())
    if hi <= lo:
        hi = lo + 1e-12
    levels = np.linspace(lo, hi, 11)
    with style():
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        cs = ax.tricontourf(tri, vals, levels=levels, cmap="viridis")
        fig.colorbar(cs, ax=ax, ticks=levels, format="%.3g", shrink=0.9)
        _draw_boundary(ax, space.bdry)
        ax.set_aspect("equal")
        ax.set_xlabel("$x_1$")
        ax.set_ylabel("$x_2$")
        ax.set_title(title)
        return svg_bytes(fig)


def mesh_figure(mesh, title=None) -> bytes:
    v = mesh.vertices
    with style():
        fig, ax = plt.subplots(figsize=(5.0, 3.2))
        ax.triplot(v[:, 0], v[:, 1], mesh.triangles, color="0.55", lw=0.4)
        if mesh.source is not None:
            _draw_boundary(ax, mesh.source)
            ax.legend(loc="lower right", frameon=False)
        ax.set_aspect("equal")
        ax.set_xlabel("$x_1$")
        ax.set_ylabel("$x_2$")
        n_s, n_t = mesh.resolution
        ax.set_title(title or f"lens mesh n_s={n_s}, n_t={n_t}, {mesh.n_triangles} triangles")
        return svg_bytes(fig)


def profile_figure(samples, mean, title="") -> bytes:
    """Normal derivative along Σ against arclength."""
    s, fnu, _, w = samples.T
    order = np.argsort(s, kind="stable")
    arclen = np.cumsum(w[order])
    with style():
        fig, ax = plt.subplots(figsize=(5.0, 2.8))
        ax.plot(arclen, fnu[order], color=SIGMA_COLOR, label=r"$\partial_\nu f$")
        ax.axhline(mean, color="0.3", ls="--", lw=0.8, label="V-weighted mean")
        ax.set_xlabel(r"arclength along $\Sigma$")
        ax.set_ylabel(r"$\partial_\nu f$")
        ax.legend(frameon=False)
        ax.set_title(title)
        return svg_bytes(fig)


def convergence_figure(rows) -> bytes:
    h = np.array([r["h"] for r in rows])
    with style():
        fig, ax = plt.subplots(figsize=(4.2, 3.2))
        ax.loglog(h, [r["L2_rel"] for r in rows], "o-", label="L2 (rel)")
        ax.loglog(h, [r["H1_rel"] for r in rows], "s-", label="H1 (rel)")
        ax.set_xlabel("h")
        ax.set_ylabel("error")
        ax.legend(frameon=False)
        ax.set_title("cap convergence")
        return svg_bytes(fig)
