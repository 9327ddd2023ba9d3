"""The four figure kinds and the trajectory-table reader.

Kinds:
    trajectory       world-frame x-y curves, one per agent
    polar_shape      normalized separation against each bearing angle, polar axes
    timeseries       shape variables and follower controls over time
    chain_snapshots  agent positions at selected times, chain links drawn in gray

Dashed reference lines mark the desired values: the target separation (read
from the run manifest when provided) and the +-pi/2 bearing targets. Rendering
is deterministic for identical inputs and matplotlib versions, and never
touches the input files.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

PI = math.pi


class MissingColumn(KeyError):
    """A figure referenced a column the input CSV does not have."""


@dataclass
class TrajectoryTable:
    columns: list[str]
    data: np.ndarray

    @property
    def n_agents(self) -> int:
        return sum(1 for c in self.columns if c.startswith("x"))

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise MissingColumn(f"column {name!r} not in {self.columns}")


def read_table(path) -> TrajectoryTable:
    with open(path, "r") as fh:
        columns = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return TrajectoryTable(columns=columns, data=data)


def read_rho0(report_path) -> float | None:
    """Target separation from a run manifest, if one is supplied."""
    if report_path is None:
        return None
    with open(report_path, "r") as fh:
        report = json.load(fh)
    try:
        return float(report["config"]["controller"]["potential"]["rho0"])
    except (KeyError, TypeError):
        return None


@dataclass
class FigureSpec:
    kind: str
    traj_csv: str
    out_path: str
    report_json: str | None = None
    pair: int = 1
    snapshot_times: list[float] = field(default_factory=list)
    dpi: int = 120


def _agent_label(i: int, n: int) -> str:
    if i == 1:
        return "agent 1 (leader)"
    return f"agent {i}"


def _render_trajectory(spec: FigureSpec, table: TrajectoryTable, ax) -> None:
    n = table.n_agents
    for i in range(1, n + 1):
        ax.plot(table.column(f"x{i}"), table.column(f"y{i}"),
                lw=1.4, label=_agent_label(i, n))
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.legend(loc="best", fontsize=8)
    ax.set_title("world-frame trajectories")


def _render_polar_shape(spec: FigureSpec, table: TrajectoryTable, ax, rho0) -> None:
    i = spec.pair
    rho = table.column(f"rho_{i}{i + 1}")
    a1 = table.column(f"alpha1_{i}{i + 1}")
    a2 = table.column(f"alpha2_{i}{i + 1}")
    scale = rho0 if rho0 else rho[-1]
    ax.plot(a1, rho / scale, lw=1.0, label=r"($\alpha_1$, $\rho/\rho_0$)")
    ax.plot(a2, rho / scale, lw=1.0, label=r"($\alpha_2$, $\rho/\rho_0$)")
    ax.plot([-PI / 2], [1.0], "o", color="tab:red", ms=6)
    ax.plot([PI / 2], [1.0], "o", color="tab:blue", ms=6)
    theta = np.linspace(0, 2 * PI, 200)
    ax.plot(theta, np.ones_like(theta), ls="--", lw=0.8, color="gray")
    ax.set_rmax(max(2.2, float(np.max(rho / scale)) * 1.05))
    ax.legend(loc="lower left", fontsize=7)
    ax.set_title("shape coordinates (normalized)")


def _render_timeseries(spec: FigureSpec, table: TrajectoryTable, axes, rho0) -> None:
    i = spec.pair
    t = table.column("t")
    top, bottom = axes
    top.plot(t, table.column(f"rho_{i}{i + 1}"), label=r"$\rho$")
    top.plot(t, table.column(f"alpha1_{i}{i + 1}"), label=r"$\alpha_1$")
    top.plot(t, table.column(f"alpha2_{i}{i + 1}"), label=r"$\alpha_2$")
    if rho0 is not None:
        top.axhline(rho0, ls="--", lw=0.8, color="gray")
    top.axhline(PI / 2, ls="--", lw=0.8, color="gray")
    top.axhline(-PI / 2, ls="--", lw=0.8, color="gray")
    top.set_ylabel("shape")
    top.legend(loc="best", fontsize=8, ncol=3)
    follower = i + 1
    bottom.plot(t, table.column(f"v{follower}"), label=f"$v_{follower}$")
    bottom.plot(t, table.column(f"u{follower}"), label=f"$u_{follower}$")
    bottom.axhline(0.0, ls="--", lw=0.8, color="gray")
    bottom.set_xlabel("t [s]")
    bottom.set_ylabel("controls")
    bottom.legend(loc="best", fontsize=8)


def _render_chain_snapshots(spec: FigureSpec, table: TrajectoryTable, ax) -> None:
    n = table.n_agents
    t = table.column("t")
    xs = np.column_stack([table.column(f"x{i}") for i in range(1, n + 1)])
    ys = np.column_stack([table.column(f"y{i}") for i in range(1, n + 1)])
    for i in range(n):
        ax.plot(xs[:, i], ys[:, i], lw=0.6, alpha=0.35)
    times = spec.snapshot_times or list(np.linspace(t[0], t[-1], 6))
    for snap in times:
        k = int(np.argmin(np.abs(t - snap)))
        ax.plot(xs[k], ys[k], color="gray", lw=1.0, zorder=3)
        for i in range(n):
            ax.plot(xs[k, i], ys[k, i], "o", color=f"C{i}", ms=4, zorder=4)
        ax.annotate(f"t={t[k]:.0f}", (xs[k, 0], ys[k, 0]), fontsize=7,
                    textcoords="offset points", xytext=(3, 4))
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_title("chain snapshots (gray links connect the formation)")


FIGURE_KINDS = ("trajectory", "polar_shape", "timeseries", "chain_snapshots")


def render(spec: FigureSpec) -> None:
    """Render one figure to ``spec.out_path``.

    Raises:
        MissingColumn: a referenced column is absent from the CSV.
        ValueError: unknown figure kind.
    """
    if spec.kind not in FIGURE_KINDS:
        raise ValueError(f"unknown figure kind {spec.kind!r}; have {FIGURE_KINDS}")
    table = read_table(spec.traj_csv)
    rho0 = read_rho0(spec.report_json)

    if spec.kind == "timeseries":
        fig, axes = plt.subplots(2, 1, figsize=(6, 5), sharex=True)
        _render_timeseries(spec, table, axes, rho0)
    elif spec.kind == "polar_shape":
        fig = plt.figure(figsize=(5, 5))
        ax = fig.add_subplot(projection="polar")
        _render_polar_shape(spec, table, ax, rho0)
    else:
        fig, ax = plt.subplots(figsize=(6, 5))
        if spec.kind == "trajectory":
            _render_trajectory(spec, table, ax)
        else:
            _render_chain_snapshots(spec, table, ax)
    fig.tight_layout()
    fig.savefig(spec.out_path, dpi=spec.dpi)
    plt.close(fig)
