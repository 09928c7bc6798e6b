#!/usr/bin/env python3
"""Render figures from the simulator's CSV artifacts.

    plot_fig.py --figure fig1 --in DIR --out PATH

Figures:
    fig1   bifurcation diagram over gamma (solid blue stable branches,
           dashed red unstable, labelled exchange points)
    fig2   trajectory panels, one per trajectory_*.csv in the input dir
    fig3   fast-behavior runs: z_S against the payoff gap, plus time series
    fig4a  fast-epidemic runs in the (beta_eff, y) plane with the quasi-steady
           infection branches overlaid, plus time series
    fig4b  same layout as fig4a (disease-free-side start / delay data)

The scripts consume only the CSV files written by the `epirep` CLI; there is
no in-process coupling to the simulator.  Reading a file with a missing
column or no data rows raises SchemaError naming the problem.
"""

from __future__ import annotations

import argparse
import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

STABLE_STYLE = dict(color="tab:blue", linestyle="-")
UNSTABLE_STYLE = dict(color="tab:red", linestyle="--")

TRAJECTORY_COLUMNS = ("t", "y", "z_S", "z_I", "beta_eff", "delta_F")
BRANCH_COLUMNS = ("branch", "gamma", "y", "z_S", "z_I", "re_lambda_max", "stable")
BIFURCATION_COLUMNS = ("label", "gamma_star", "branch_a", "branch_b")
DELAY_COLUMNS = ("gamma", "eps", "delta", "t_cross", "t_takeoff", "delay")


class SchemaError(ValueError):
    pass


@dataclass(frozen=True)
class FigureSpec:
    figure: str
    input_dir: Path
    output: Path


def read_table(path: Path, required: tuple[str, ...]) -> dict[str, list[str]]:
    """Read a CSV into columns, enforcing the declared schema."""
    if not path.is_file():
        raise SchemaError(f"{path}: file not found")
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise SchemaError(f"{path}: empty file")
        for col in required:
            if col not in reader.fieldnames:
                raise SchemaError(f"{path}: missing column '{col}'")
        rows = list(reader)
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return {col: [row[col] for row in rows] for col in reader.fieldnames}


def _floats(table: dict, col: str) -> np.ndarray:
    return np.array([float(v) for v in table[col]])


def _trajectory_files(input_dir: Path) -> list[Path]:
    files = sorted(input_dir.glob("trajectory_*.csv"))
    if not files:
        single = input_dir / "trajectory.csv"
        if single.is_file():
            files = [single]
    if not files:
        raise SchemaError(f"{input_dir}: no trajectory CSV files")
    return files


def _run_label(path: Path) -> str:
    stem = path.stem
    return stem.replace("trajectory_", "") if stem != "trajectory" else stem


def build_fig1(input_dir: Path):
    branches = read_table(input_dir / "branches.csv", BRANCH_COLUMNS)
    points = read_table(input_dir / "bifurcations.csv", BIFURCATION_COLUMNS)

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ids = sorted(set(branches["branch"]))
    for eq_id in ids:
        sel = [i for i, b in enumerate(branches["branch"]) if b == eq_id]
        gamma = np.array([float(branches["gamma"][i]) for i in sel])
        y = np.array([float(branches["y"][i]) for i in sel])
        stable = np.array([branches["stable"][i] == "1" for i in sel])
        order = np.argsort(gamma)
        gamma, y, stable = gamma[order], y[order], stable[order]
        # contiguous same-stability segments
        start = 0
        for k in range(1, len(gamma) + 1):
            if k == len(gamma) or stable[k] != stable[start]:
                style = STABLE_STYLE if stable[start] else UNSTABLE_STYLE
                ax.plot(gamma[start:k], y[start:k], **style, linewidth=1.6)
                start = k
        mid = len(gamma) // 2
        ax.annotate(eq_id, (gamma[mid], y[mid]), textcoords="offset points",
                    xytext=(4, 4), fontsize=8, color="gray")

    for label, g_star in zip(points["label"], points["gamma_star"]):
        g = float(g_star)
        sel = np.argmin(np.abs(_floats(branches, "gamma") - g))
        y_star = float(branches["y"][int(sel)])
        ax.plot([g], [y_star], marker="o", color="black", markersize=5)
        ax.annotate(label, (g, y_star), textcoords="offset points",
                    xytext=(0, 8), ha="center", fontsize=9)

    ax.set_xlabel("recovery rate gamma")
    ax.set_ylabel("infected fraction y")
    ax.set_title("Equilibrium branches and exchange points")
    fig.tight_layout()
    return fig


def build_fig2(input_dir: Path):
    files = _trajectory_files(input_dir)
    n = len(files)
    ncols = 2 if n > 1 else 1
    nrows = (n + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(5 * ncols, 3 * nrows),
                             squeeze=False)
    for k, path in enumerate(files):
        table = read_table(path, TRAJECTORY_COLUMNS)
        ax = axes[k // ncols][k % ncols]
        t = _floats(table, "t")
        for col, style in (("y", "-"), ("z_S", "--"), ("z_I", ":")):
            ax.plot(t, _floats(table, col), style, label=col)
        ax.set_title(_run_label(path), fontsize=9)
        ax.set_xlabel("t")
        ax.set_ylim(-0.05, 1.05)
        ax.legend(fontsize=7)
    for k in range(n, nrows * ncols):
        axes[k // ncols][k % ncols].axis("off")
    fig.tight_layout()
    return fig


def build_fig3(input_dir: Path):
    files = _trajectory_files(input_dir)
    fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4))

    span = 1.0
    for path in files:
        table = read_table(path, TRAJECTORY_COLUMNS)
        dF = _floats(table, "delta_F")
        left.plot(dF, _floats(table, "z_S"), linewidth=0.8,
                  label=_run_label(path))
        span = max(span, np.abs(dF).max())
        right.plot(_floats(table, "t"), _floats(table, "z_S"), linewidth=0.8,
                   label=f"z_S {_run_label(path)}")
        right.plot(_floats(table, "t"), _floats(table, "y"), linewidth=0.8,
                   linestyle="--", label=f"y {_run_label(path)}")

    # replicator attractors: z_S=0 stable for negative payoff gap, z_S=1 for
    # positive; the complementary halves are unstable
    left.plot([-span, 0], [0, 0], **STABLE_STYLE, linewidth=2.5)
    left.plot([0, span], [0, 0], **UNSTABLE_STYLE, linewidth=2.5)
    left.plot([0, span], [1, 1], **STABLE_STYLE, linewidth=2.5)
    left.plot([-span, 0], [1, 1], **UNSTABLE_STYLE, linewidth=2.5)
    left.set_xlabel("payoff gap of staying unprotected")
    left.set_ylabel("z_S")
    left.legend(fontsize=7)
    right.set_xlabel("t")
    right.legend(fontsize=7)
    fig.suptitle("Fast behavioral response: oscillatory strategy switching")
    fig.tight_layout()
    return fig


def build_fig4(input_dir: Path):
    files = _trajectory_files(input_dir)
    delay_files = sorted(input_dir.glob("delay_*.csv")) or [input_dir / "delay.csv"]
    delays = read_table(delay_files[0], DELAY_COLUMNS)
    gamma = float(delays["gamma"][0])

    fig, (left, right) = plt.subplots(1, 2, figsize=(11, 4))
    be_max = gamma * 1.5
    for path in files:
        table = read_table(path, TRAJECTORY_COLUMNS)
        be = _floats(table, "beta_eff")
        be_max = max(be_max, be.max())
        left.plot(be, _floats(table, "y"), linewidth=0.9, label=_run_label(path))
        right.plot(_floats(table, "t"), _floats(table, "y"), linewidth=0.9,
                   label=f"y {_run_label(path)}")
        right.plot(_floats(table, "t"), _floats(table, "z_S"), linewidth=0.9,
                   linestyle="--", label=f"z_S {_run_label(path)}")

    # quasi-steady infection branches of the fast epidemic
    be_grid = np.linspace(0.0, be_max * 1.02, 400)
    endemic = np.where(be_grid > gamma, 1.0 - gamma / np.maximum(be_grid, 1e-12), 0.0)
    left.plot(be_grid[be_grid <= gamma], np.zeros(np.sum(be_grid <= gamma)),
              **STABLE_STYLE, linewidth=2.0)
    left.plot(be_grid[be_grid >= gamma], endemic[be_grid >= gamma],
              **STABLE_STYLE, linewidth=2.0)
    left.plot(be_grid[be_grid >= gamma], np.zeros(np.sum(be_grid >= gamma)),
              **UNSTABLE_STYLE, linewidth=2.0)
    left.plot([gamma], [0.0], marker="o", color="black", markersize=5)
    left.set_xlabel("effective infection rate")
    left.set_ylabel("infected fraction y")
    left.legend(fontsize=7)
    right.set_xlabel("t")
    right.legend(fontsize=7)
    fig.suptitle("Fast epidemic: trajectories against the quasi-steady branches")
    fig.tight_layout()
    return fig


FIGURES = {
    "fig1": build_fig1,
    "fig2": build_fig2,
    "fig3": build_fig3,
    "fig4a": build_fig4,
    "fig4b": build_fig4,
}


def render(spec: FigureSpec) -> Path:
    builder = FIGURES[spec.figure]
    fig = builder(spec.input_dir)
    spec.output.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(spec.output, dpi=150)
    plt.close(fig)
    return spec.output


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--figure", required=True, choices=sorted(FIGURES))
    parser.add_argument("--in", dest="input_dir", required=True, type=Path)
    parser.add_argument("--out", required=True, type=Path)
    args = parser.parse_args(argv)
    spec = FigureSpec(args.figure, args.input_dir, args.out)
    try:
        path = render(spec)
    except SchemaError as exc:
        print(f"plot_fig: schema error: {exc}", file=sys.stderr)
        return 2
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
