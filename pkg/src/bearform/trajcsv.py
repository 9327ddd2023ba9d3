"""Trajectory CSV schema: writing and reading.

Column layout (header row, comma separated, newline terminated):

    t,
    x1, y1, theta1, v1, u1,            # agent 1 pose + applied controls
    ..., xN, yN, thetaN, vN, uN,
    rho_12, alpha1_12, alpha2_12,      # consecutive pair (1, 2)
    ..., rho_{N-1}{N}, alpha1_{N-1}{N}, alpha2_{N-1}{N}

Floats are written with 17 significant digits, which round-trips IEEE doubles
exactly; repeated writes of the same run are byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scenarios import RunResult

_FMT = "%.17g"


def trajectory_columns(n_agents: int) -> list[str]:
    cols = ["t"]
    for i in range(1, n_agents + 1):
        cols += [f"x{i}", f"y{i}", f"theta{i}", f"v{i}", f"u{i}"]
    for i in range(1, n_agents):
        cols += [f"rho_{i}{i + 1}", f"alpha1_{i}{i + 1}", f"alpha2_{i}{i + 1}"]
    return cols


def _table_from_result(result: RunResult) -> np.ndarray:
    n = len(result.times)
    n_agents = result.n_agents
    width = 1 + 5 * n_agents + 3 * (n_agents - 1)
    table = np.empty((n, width))
    table[:, 0] = result.times
    col = 1
    for i in range(n_agents):
        table[:, col:col + 3] = result.poses[:, i, :]
        table[:, col + 3:col + 5] = result.controls[:, i, :]
        col += 5
    for p in range(n_agents - 1):
        table[:, col:col + 3] = result.shapes[:, p, :]
        col += 3
    return table


def write_trajectory_csv(result: RunResult, path) -> None:
    """Write a run to CSV in the published schema."""
    table = _table_from_result(result)
    header = ",".join(trajectory_columns(result.n_agents))
    with open(path, "w", newline="\n") as fh:
        fh.write(header + "\n")
        for row in table:
            fh.write(",".join(_FMT % v for v in row) + "\n")


@dataclass
class TrajectoryTable:
    """Parsed trajectory CSV."""

    columns: list[str]
    data: np.ndarray  # (n, len(columns))

    @property
    def times(self) -> np.ndarray:
        return self.column("t")

    @property
    def n_agents(self) -> int:
        return sum(1 for c in self.columns if c.startswith("x"))

    def column(self, name: str) -> np.ndarray:
        try:
            return self.data[:, self.columns.index(name)]
        except ValueError:
            raise KeyError(f"no column {name!r} in trajectory (have {self.columns})")

    def pair_shape(self, pair: int = 0) -> np.ndarray:
        """(n, 3) array of (rho, alpha1, alpha2) for consecutive pair index."""
        i = pair + 1
        return np.column_stack([self.column(f"rho_{i}{i + 1}"),
                                self.column(f"alpha1_{i}{i + 1}"),
                                self.column(f"alpha2_{i}{i + 1}")])

    def agent_controls(self, agent: int) -> np.ndarray:
        """(n, 2) applied (v, u) for a 1-based agent index."""
        return np.column_stack([self.column(f"v{agent}"), self.column(f"u{agent}")])


def read_trajectory_csv(path) -> TrajectoryTable:
    """Read a trajectory CSV written by :func:`write_trajectory_csv`."""
    with open(path, "r") as fh:
        header = fh.readline().strip()
        columns = header.split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    if data.shape[1] != len(columns):
        raise ValueError(f"row width {data.shape[1]} != header width {len(columns)}")
    return TrajectoryTable(columns=columns, data=data)
