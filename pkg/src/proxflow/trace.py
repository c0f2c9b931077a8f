"""Per-iteration convergence records."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

__all__ = ["TraceRow", "Trace", "COLUMNS"]

COLUMNS = ("iter", "seconds", "objective", "kkt", "sigma_x", "sigma_z", "rho")


class TraceRow(NamedTuple):
    iter: int
    seconds: float
    objective: float
    kkt: float | None = None
    sigma_x: float | None = None
    sigma_z: float | None = None
    rho: float | None = None


@dataclass
class Trace:
    """Rows of :class:`TraceRow` plus run metadata.

    ``seconds`` counts from the start of the run, preprocessing included;
    ``meta["preprocessing_seconds"]`` records how much of it was setup.
    """

    rows: list[TraceRow] = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    x: np.ndarray | None = None
    state: object = None

    def append(self, row: TraceRow):
        self.rows.append(row)

    def column(self, name: str):
        return np.array([np.nan if getattr(r, name) is None else getattr(r, name) for r in self.rows],
                        dtype=float)

    @property
    def objectives(self):
        return self.column("objective")

    @property
    def final_objective(self) -> float:
        return self.rows[-1].objective

    @property
    def diverged(self) -> bool:
        return bool(self.meta.get("diverged", False))

    def __len__(self):
        return len(self.rows)
