"""Render run metrics and the final configuration from a persisted trace.

Produces a metrics CSV plus PNG figures (metric timelines and a plot of the
final swarm with its hull), for quick inspection of a run without loading
the trace into anything else.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .config import parse_config
from .geometry import Point2, convex_hull
from .trace import _initial_from_header, _replay_asynch, _replay_rounds
from .verify import MonitorSuite

LIGHT_COLORS = {
    "Off": "#9e9e9e",
    "Vertex": "#d81b60",
    "External": "#1e88e5",
    "Adjusting": "#fb8c00",
    "Done": "#43a047",
    "None": "#6d4c41",
    "Moved": "#8e24aa",
}


def _final_state(header: dict, events: list[dict]):
    cfg = parse_config(header["config"])
    config = _initial_from_header(header)
    suite = MonitorSuite(cfg.protocol, cfg.params.eps_geom,
                         cfg.effective_eps_coll(), config,
                         round_based=(cfg.scheduler != "asynch"),
                         objective=cfg.objective.get("kind", "mutual-visibility"))
    if cfg.scheduler == "asynch":
        _, final, _ = _replay_asynch(cfg, config, events, suite)
    else:
        _, final, _ = _replay_rounds(cfg, config, events, suite)
    return cfg, final, suite.stats.to_dict()


def render_report(header: dict, events: list[dict], footer: dict,
                  outdir: Path) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    cfg, final, stats = _final_state(header, events)
    written: list[Path] = []

    csv_path = outdir / "metrics.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "hullArea", "hullDiameter", "vertexCount",
                         "shortestInteriorEdge"])
        for row in zip(stats["times"], stats["hullAreaSeries"],
                       stats["hullDiameterSeries"], stats["vertexCountSeries"],
                       stats["shortestInteriorEdgeSeries"]):
            writer.writerow(["" if v is None else v for v in row])
    written.append(csv_path)

    fig, axes = plt.subplots(3, 1, figsize=(7, 8), sharex=True)
    t = stats["times"]
    axes[0].plot(t, stats["hullAreaSeries"], lw=1.2)
    axes[0].set_ylabel("hull area")
    axes[1].plot(t, stats["hullDiameterSeries"], lw=1.2, color="tab:orange")
    axes[1].set_ylabel("hull diameter")
    axes[2].plot(t, stats["vertexCountSeries"], lw=1.2, color="tab:green")
    axes[2].set_ylabel("hull vertices")
    axes[2].set_xlabel("time")
    verdict = footer.get("verdict", {})
    fig.suptitle(f"{cfg.protocol} / {cfg.scheduler} "
                 f"(n={cfg.n}, seed={cfg.seed}): {verdict.get('outcome')}")
    fig.tight_layout()
    metrics_png = outdir / "metrics.png"
    fig.savefig(metrics_png, dpi=120)
    plt.close(fig)
    written.append(metrics_png)

    fig, ax = plt.subplots(figsize=(6, 6))
    pts = [r.position for r in final.robots]
    if len(pts) >= 2:
        hull = convex_hull(pts, 1e-12)
        cycle = list(hull.boundary)
        if not hull.is_segment:
            cycle.append(cycle[0])
        ax.plot([p.x for p in cycle], [p.y for p in cycle],
                color="#bbbbbb", lw=1.0, zorder=1)
    for r in final.robots:
        color = LIGHT_COLORS.get(r.light, "#000000")
        marker = "s" if r.terminated else "o"
        ax.scatter([r.position.x], [r.position.y], c=color, marker=marker,
                   s=45, zorder=2, edgecolors="black", linewidths=0.4)
        ax.annotate(str(r.id), (r.position.x, r.position.y),
                    textcoords="offset points", xytext=(4, 4), fontsize=7)
    handles = [plt.Line2D([], [], marker="o", ls="", color=c, label=l)
               for l, c in LIGHT_COLORS.items()
               if any(r.light == l for r in final.robots)]
    ax.legend(handles=handles, loc="upper right", fontsize=7)
    ax.set_aspect("equal")
    ax.set_title("final configuration")
    fig.tight_layout()
    final_png = outdir / "final.png"
    fig.savefig(final_png, dpi=120)
    plt.close(fig)
    written.append(final_png)
    return written
