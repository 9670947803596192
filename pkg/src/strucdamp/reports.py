"""Deterministic output artifacts: CSV tables, JSON run manifests, figures.

CSV files are the machine contract: fixed column order, floats at 17
significant digits, no timestamps, so identical configs (and seeds) yield
byte-identical files.  Timestamps and file digests live only in the manifest,
which is written last.  Each table gets a companion matplotlib figure
rendered next to it; figures are a human convenience, not part of the
determinism contract.
"""

from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import __version__
from .solver import NORM_COLUMNS, TrajectoryRecord

__all__ = [
    "format_value",
    "write_csv",
    "run_id_for",
    "ManifestWriter",
    "apply_plot_style",
    "save_figure",
    "plot_kernel_table",
    "plot_trajectory",
    "plot_rate_table",
    "plot_region_map",
    "plot_decay_ratios",
]


def format_value(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return f"{x:.17g}"
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(format_value(v) for v in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    return path


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    digest.update(Path(path).read_bytes())
    return digest.hexdigest()


def run_id_for(serialized_config: str, seed: int) -> str:
    digest = hashlib.sha256()
    digest.update(serialized_config.encode("utf-8"))
    digest.update(str(seed).encode("utf-8"))
    return digest.hexdigest()[:16]


@dataclass
class ManifestWriter:
    """Collects outputs and warnings during a run; written last."""

    out_dir: Path
    command: str
    run_id: str
    config_echo: dict
    seed: int
    threads: int | None = None
    files: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    notes: dict = field(default_factory=dict)
    started: float = field(default_factory=time.time)

    def add_file(self, path):
        path = Path(path)
        self.files.append({
            "name": path.name,
            "bytes": path.stat().st_size,
            "sha256": sha256_of(path),
        })

    def warn(self, message: str):
        self.warnings.append(message)

    def write(self, status: str = "ok") -> Path:
        manifest = {
            "tool": "strucdamp",
            "version": __version__,
            "command": self.command,
            "run_id": self.run_id,
            "seed": self.seed,
            "threads": self.threads,
            "status": status,
            "config": self.config_echo,
            "started_unix": self.started,
            "finished_unix": time.time(),
            "warnings": self.warnings,
            "notes": self.notes,
            "files": self.files,
        }
        path = self.out_dir / "manifest.json"
        path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                        encoding="utf-8")
        return path


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

def apply_plot_style():
    plt.rcParams.update({
        "figure.figsize": (6.4, 4.2),
        "figure.dpi": 110,
        "font.size": 9,
        "axes.grid": True,
        "grid.alpha": 0.3,
        "axes.spines.top": False,
        "axes.spines.right": False,
        "lines.linewidth": 1.4,
    })


def save_figure(fig, path) -> Path:
    path = Path(path)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_kernel_table(rows, path) -> Path:
    """Position/velocity propagator values against frequency, per (t, delta)."""
    apply_plot_style()
    fig, axes = plt.subplots(1, 2, figsize=(9.2, 3.8))
    groups: dict = {}
    for r in rows:
        groups.setdefault((r["t"], r["delta"]), []).append(r)
    for (t, delta), grp in sorted(groups.items()):
        grp = sorted(grp, key=lambda r: r["xi_abs"])
        xi = [r["xi_abs"] for r in grp]
        axes[0].plot(xi, [r["k0"] for r in grp], label=f"t={t:g}, d={delta:g}")
        axes[1].plot(xi, [r["k1"] for r in grp], label=f"t={t:g}, d={delta:g}")
    for ax, name in zip(axes, ("position symbol", "velocity symbol")):
        ax.set_xlabel("|xi|")
        ax.set_title(name)
        ax.set_xscale("symlog", linthresh=1e-2)
    axes[0].legend(fontsize=7)
    return save_figure(fig, path)


def plot_trajectory(record: TrajectoryRecord, path) -> Path:
    apply_plot_style()
    fig, ax = plt.subplots()
    t = 1.0 + np.asarray(record.times)
    for col in ("l2_u", "l2_v", "linf_u", "linf_v"):
        vals = np.asarray(record.columns[col], dtype=float)
        pos = vals > 0
        if np.any(pos):
            ax.loglog(t[pos], vals[pos], label=col)
    ax.set_xlabel("1 + t")
    ax.set_ylabel("norm")
    title = f"status: {record.status.value}"
    if record.blowup_time is not None:
        title += f" (t* = {record.blowup_time:.3g})"
    ax.set_title(title)
    ax.legend(fontsize=7)
    return save_figure(fig, path)


def plot_rate_table(rows, path) -> Path:
    """Fitted slopes against the applicable prediction."""
    apply_plot_style()
    fig, ax = plt.subplots()
    preds = [r["predicted"] for r in rows]
    fits = [r["fitted_slope"] for r in rows]
    ax.scatter(preds, fits, s=22)
    lo = min(preds + fits) - 0.2
    hi = max(preds + fits) + 0.2
    ax.plot([lo, hi], [lo, hi], "k--", linewidth=0.8)
    ax.set_xlabel("predicted exponent")
    ax.set_ylabel("fitted slope")
    for r in rows:
        ax.annotate(f"n={r['n']},d={r['delta']:g},{r['channel']}",
                    (r["predicted"], r["fitted_slope"]), fontsize=6,
                    xytext=(3, 3), textcoords="offset points")
    return save_figure(fig, path)


_VERDICT_CODES = {
    "existence_delta1_ge": 2,
    "existence_delta2_ge": 1,
    "undetermined": 0,
    "blowup_l1_data": -1,
    "blowup_lm_data": -2,
}


def plot_region_map(sweep_result, path) -> Path:
    apply_plot_style()
    fig, ax = plt.subplots()
    ps = sweep_result.p_values
    qs = sweep_result.q_values
    codes = np.array([_VERDICT_CODES[row[2].value] for row in sweep_result.rows])
    img = codes.reshape(len(ps), len(qs)).T
    mesh = ax.pcolormesh(ps, qs, img, cmap="RdYlGn", vmin=-2, vmax=2, shading="nearest")
    fig.colorbar(mesh, ax=ax, label="verdict code (green: existence, red: blow-up)")
    ax.set_xlabel("p")
    ax.set_ylabel("q")
    return save_figure(fig, path)


def plot_decay_ratios(reports, path) -> Path:
    apply_plot_style()
    fig, ax = plt.subplots()
    for rep in reports:
        ax.loglog(rep.radii, np.maximum(rep.ratios, 1e-300),
                  label=f"r={rep.r:g}, s={rep.s:g}, n={rep.n} ({rep.branch})")
    ax.set_xlabel("|x|")
    ax.set_ylabel("|(-Delta)^s w| / bound")
    ax.legend(fontsize=7)
    return save_figure(fig, path)
