"""Static SVG figures from report payloads."""

from __future__ import annotations

import io

import matplotlib
from matplotlib.backends.backend_svg import FigureCanvasSVG
from matplotlib.figure import Figure

from .report import atomic_write

PLOT_KINDS = ("sweep-line", "crossing-curves", "surface-heatmap")

UNITS = {
    "tau": "latency tau (s)", "e": "drift rate e (-)", "S": "sensing range S (m)",
    "R": "obstacle spacing R (m)", "r": "obstacle half-width r (m)", "d": "safety distance d (m)",
    "a_max": "a_max (m/s^2)", "j_max": "j_max (m/s^3)",
}


def _sweep_line(ax, payload):
    series = payload["series"]
    if not any(s["rows"] for s in series):
        raise ValueError("nothing to plot: sweep has no rows")
    for s in series:
        rows = [r for r in s["rows"] if r["v_safe"] is not None]
        xs = [r["value"] for r in rows]
        label = s.get("label") or "model"
        ax.plot(xs, [r["v_safe"] for r in rows], marker="o", label=label)
        emp = [(r["value"], r["empirical"]) for r in rows if r.get("empirical") is not None]
        if emp:
            ax.plot(*zip(*emp), marker="x", linestyle="--", label=f"{label} simulated")
    param = series[0]["param"]
    ax.set_xlabel(UNITS.get(param, param))
    ax.set_ylabel("max safe speed (m/s)")
    ax.legend()


def _crossing_curves(ax, payload):
    curve = payload["curve"]
    if not curve["v_x"]:
        raise ValueError("nothing to plot: empty crossing curve")
    ax.plot(curve["v_x"], curve["v_y_T"], label="v_y(T)")
    vmax = [v if v is not None else float("nan") for v in curve["v_y_max_T"]]
    ax.plot(curve["v_x"], vmax, label="v_y,max(T)")
    ax.axvline(payload["v_x_max"], color="red", label="v_x,max")
    for name in ("v1", "v2"):
        if payload.get(name) is not None:
            ax.axvline(payload[name], linestyle=":", color="black")
            ax.annotate(name, (payload[name], 0), textcoords="offset points", xytext=(3, 3))
    ax.set_xlabel("forward speed v_x (m/s)")
    ax.set_ylabel("lateral speed at end of stage 1 (m/s)")
    ax.legend()


def _surface_heatmap(fig, ax, payload):
    e, S, v = payload["e_grid"], payload["S_grid"], payload["v_safe"]
    if not e or not S:
        raise ValueError("nothing to plot: empty surface")
    grid = [[x if x is not None else float("nan") for x in row] for row in v]
    # cell edges from centres; single cells get unit width
    def edges(c):
        if len(c) == 1:
            return [c[0] - 0.5, c[0] + 0.5]
        mids = [(a + b) / 2 for a, b in zip(c, c[1:])]
        return [2 * c[0] - mids[0]] + mids + [2 * c[-1] - mids[-1]]
    mesh = ax.pcolormesh(edges(e), edges(S), grid, cmap="viridis")
    fig.colorbar(mesh, ax=ax, label="max safe speed (m/s)")
    ax.plot(*payload["argmax"], marker="*", color="red", markersize=12)
    ax.set_xlabel(UNITS["e"])
    ax.set_ylabel(UNITS["S"])


def render_svg(payload: dict, kind: str) -> str:
    if kind not in PLOT_KINDS:
        raise ValueError(f"plot kind must be one of {PLOT_KINDS}")
    with matplotlib.rc_context({"svg.hashsalt": "safespeed", "svg.fonttype": "path"}):
        fig = Figure(figsize=(6.4, 4.8))
        FigureCanvasSVG(fig)
        ax = fig.add_subplot()
        if kind == "sweep-line":
            _sweep_line(ax, payload)
        elif kind == "crossing-curves":
            _crossing_curves(ax, payload)
        else:
            _surface_heatmap(fig, ax, payload)
        ax.grid(True, alpha=0.3)
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None})
    return buf.getvalue()


def emit_plot(payload: dict, kind: str, path) -> None:
    atomic_write(path, render_svg(payload, kind))
