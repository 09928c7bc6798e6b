#!/usr/bin/env python3
"""Regenerate the committed CSV artifacts under data/ via the CLI.

Each figure directory holds the exact inputs the plotting scripts consume:

    data/fig1/   branch + bifurcation tables over gamma in [0.01, 0.25]
    data/fig2/   trajectories for the four reference recovery rates
    data/fig3/   fast-behavior runs (eps_z in {0.01, 0.1}), gamma = 0.1
    data/fig4a/  fast-epidemic runs from an endemic-side start
    data/fig4b/  fast-epidemic runs from a disease-free-side start (delay)

Run from the repository root:  python scripts/make_figure_data.py
"""

import shutil
import sys
import tempfile
from pathlib import Path

from epirep import cli

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "data"

BASE = """\
c_P = 1.0
alpha = 0.5
beta_u = 0.3
beta_p = 0.15
c_IU = 2.0
c_IP = 1.0
L = 80.0
"""


def run(command: str, extra: str, outputs: dict[str, Path]) -> None:
    """Run one CLI invocation in a scratch dir and move outputs into data/."""
    with tempfile.TemporaryDirectory() as tmp:
        cfg = Path(tmp) / "run.cfg"
        cfg.write_text(BASE + extra)
        out = Path(tmp) / "out"
        rc = cli.main([command, "--config", str(cfg), "--out", str(out)])
        if rc != 0:
            raise SystemExit(f"{command} failed with exit code {rc}")
        for produced, target in outputs.items():
            target.parent.mkdir(parents=True, exist_ok=True)
            shutil.move(str(out / produced), str(target))


def main() -> int:
    fig1 = DATA / "fig1"
    run("bifurcate", "gamma = 0.1\ngamma_range = 0.01, 0.25\nn_steps = 400\n",
        {"branches.csv": fig1 / "branches.csv",
         "bifurcations.csv": fig1 / "bifurcations.csv"})

    fig2 = DATA / "fig2"
    for gamma in ("0.2", "0.13", "0.1", "0.05"):
        run("simulate",
            f"gamma = {gamma}\nt_end = 400.0\ns0 = 0.3, 0.5, 0.5\n",
            {"trajectory.csv": fig2 / f"trajectory_gamma{gamma}.csv"})

    fig3 = DATA / "fig3"
    for eps in ("0.01", "0.1"):
        run("slowfast",
            f"gamma = 0.1\nmode = fast-behavior\neps = {eps}\nt_end = 2500.0\n"
            "s0 = 0.3, 0.5, 0.0\nrecord_every = 10\n",
            {"trajectory.csv": fig3 / f"trajectory_eps{eps}.csv"})

    fig4a = DATA / "fig4a"
    for eps in ("0.0001", "0.01"):
        run("slowfast",
            f"gamma = 0.1\nmode = fast-epidemic\neps = {eps}\nt_end = 120.0\n"
            "s0 = 0.05, 0.9, 0.0\nrecord_every = 1\n",
            {"trajectory.csv": fig4a / f"trajectory_eps{eps}.csv",
             "delay.csv": fig4a / f"delay_eps{eps}.csv"})

    fig4b = DATA / "fig4b"
    for eps in ("0.0001", "0.01"):
        run("slowfast",
            f"gamma = 0.1\nmode = fast-epidemic\neps = {eps}\nt_end = 16.0\n"
            "s0 = 0.001, 0.01, 0.0\nrecord_every = 1\n",
            {"trajectory.csv": fig4b / f"trajectory_eps{eps}.csv",
             "delay.csv": fig4b / f"delay_eps{eps}.csv"})

    print(f"wrote CSV artifacts under {DATA}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
