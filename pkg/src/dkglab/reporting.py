"""
Run-directory layout, manifests, delimited output and the figures rendered
alongside every report.
"""

from __future__ import annotations

import csv
import json
from datetime import datetime, timezone
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .util import code_version

FIG_STYLE = {
    "figure.figsize": (6.4, 4.2),
    "font.size": 9,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
    "lines.markersize": 5,
}


def run_directory(outdir, command: str, label: str | None = None) -> Path:
    stamp = label or datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%SZ")
    path = Path(outdir) / command / stamp
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_manifest(run_dir: Path, command: str, params: dict, seed: int | None = None,
                   grid: dict | None = None) -> Path:
    """Written before any computation so a crashed run stays diagnosable."""
    manifest = {
        "command": command,
        "params": params,
        "seed": seed,
        "grid": grid or {},
        "code_version": code_version(),
        "started_at": datetime.now(timezone.utc).isoformat(),
    }
    path = Path(run_dir) / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")
    return path


def write_csv(path, fieldnames: list[str], rows: list[dict]) -> Path:
    """Deterministic CSV: fixed column order, shortest-round-trip floats."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in fieldnames})
    return path


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return value


def _new_axes():
    plt.rcParams.update(FIG_STYLE)
    fig, ax = plt.subplots()
    return fig, ax


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return Path(path)


def fig_scaling(report, path) -> Path:
    fig, ax = _new_axes()
    L = np.array([row["L"] for row in report.rows])
    ratio = np.array([row["ratio"] for row in report.rows])
    ax.loglog(L, ratio, "o-", label="measured ratio")
    anchor = ratio[0]
    ax.loglog(L, anchor * (L / L[0]) ** report.predicted_slope, "--",
              label=f"predicted slope {report.predicted_slope:+.3f}")
    ax.loglog(L, anchor * (L / L[0]) ** report.fitted_slope, ":",
              label=f"fitted slope {report.fitted_slope:+.3f}")
    ax.set_xlabel("L")
    ax.set_ylabel("lhs / rhs")
    ax.set_title(f"{report.family} at (s, r) = ({report.s:g}, {report.r:g})")
    ax.legend()
    return _save(fig, path)


def fig_ratio_scan(rows, xkey: str, ykeys: list[str], path, title: str = "",
                   logx: bool = True, logy: bool = False) -> Path:
    fig, ax = _new_axes()
    x = np.array([row[xkey] for row in rows])
    for ykey in ykeys:
        y = np.array([row[ykey] for row in rows])
        ax.plot(x, y, "o-", label=ykey)
    if logx:
        ax.set_xscale("log", base=2)
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xkey)
    ax.set_ylabel("ratio")
    if title:
        ax.set_title(title)
    ax.legend()
    return _save(fig, path)


def fig_trajectory(rows, path) -> Path:
    fig, ax = _new_axes()
    t = np.array([row["time"] for row in rows])
    charge = np.array([row["charge"] for row in rows])
    ax.plot(t, charge / charge[0] - 1.0, label="relative charge drift")
    ax.plot(t, np.array([row["psi_hs"] for row in rows]) / rows[0]["psi_hs"] - 1.0,
            label="spinor H^s drift")
    ax2 = ax.twinx()
    ax2.plot(t, [row["phi_hr"] for row in rows], color="tab:green", alpha=0.6,
             label="meson H^r")
    ax2.set_ylabel("meson H^r")
    ax.set_xlabel("t")
    ax.set_ylabel("relative drift")
    ax.legend(loc="upper left")
    return _save(fig, path)


def fig_zheng(rows, path) -> Path:
    fig, ax = _new_axes()
    sigmas = sorted({row["sigma"] for row in rows})
    for sg in sigmas:
        pts = [(row["n"], row["norm"]) for row in rows if row["sigma"] == sg]
        ns, norms = zip(*sorted(pts))
        ax.plot(ns, np.array(norms) / norms[0], "o-", label=f"sigma = {sg:g}")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("grid points per axis")
    ax.set_ylabel("H^sigma norm, normalized to coarsest")
    ax.set_title("first-iterate norm under refinement")
    ax.legend()
    return _save(fig, path)


def fig_picard(rows, path) -> Path:
    fig, ax = _new_axes()
    j = [row["j"] for row in rows]
    ax.semilogy(j, [row["d_psi"] for row in rows], "o-", label="iterate distance")
    ax.set_xlabel("iterate j")
    ax.set_ylabel("sup-in-time H^s distance")
    ax.legend()
    return _save(fig, path)


def fig_region(s: float, r: float, verdict: str, path) -> Path:
    fig, ax = _new_axes()
    ss = np.linspace(-0.25, 1.3, 400)
    lower = np.maximum.reduce([0.25 - ss / 2, 0.25 + ss / 2, ss])
    upper = np.minimum.reduce([0.75 + 2 * ss, 0.75 + 1.5 * ss, 1 + ss])
    ok = (ss > -0.2) & (upper > lower)
    ax.fill_between(ss[ok], lower[ok], upper[ok], alpha=0.3, label="well-posed region")
    ax.plot(ss, 0.5 + ss, "--", color="gray", label="scaling line r = 1/2 + s")
    ax.plot([s], [r], "r*", markersize=12, label=f"({s:g}, {r:g}): {verdict}")
    ax.set_xlabel("s")
    ax.set_ylabel("r")
    ax.set_ylim(-0.1, 2.0)
    ax.legend()
    return _save(fig, path)


def fig_algebra(violations: dict, path) -> Path:
    fig, ax = _new_axes()
    names = list(violations)
    vals = [max(violations[k], 1e-18) for k in names]
    ax.barh(range(len(names)), vals)
    ax.set_yticks(range(len(names)), names, fontsize=7)
    ax.set_xscale("log")
    ax.set_xlabel("max violation")
    return _save(fig, path)
