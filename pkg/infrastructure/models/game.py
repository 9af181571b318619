"""Meta-game value types and their CSV / JSON serialization helpers."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Any, Optional, Sequence

import numpy as np

from core.exceptions import DimensionError, InvalidStrategyError, MatrixParseError, NonFiniteError

PROBABILITY_TOLERANCE = 1e-9


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.array(array, dtype=np.float64, copy=True)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class PayoffMatrix:
    """
    Restricted meta-game. Entry (i, j) is the generator's payoff when
    generator strategy i meets discriminator strategy j; the discriminator
    receives the negation.
    """

    entries: np.ndarray
    row_ids: tuple[int, ...] = ()
    col_ids: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=np.float64)
        if entries.ndim != 2 or entries.shape[0] < 1 or entries.shape[1] < 1:
            raise DimensionError(f"Payoff matrix must be a non-empty 2D grid, got shape {entries.shape}.")
        if not np.all(np.isfinite(entries)):
            bad = np.argwhere(~np.isfinite(entries))[0]
            raise NonFiniteError(detail=f"entry ({bad[0]}, {bad[1]}) is not finite")
        object.__setattr__(self, "entries", _frozen(entries))

        row_ids = tuple(int(i) for i in self.row_ids) or tuple(range(entries.shape[0]))
        col_ids = tuple(int(j) for j in self.col_ids) or tuple(range(entries.shape[1]))
        if len(row_ids) != entries.shape[0] or len(col_ids) != entries.shape[1]:
            raise DimensionError("Strategy id lists must match the matrix shape.")
        object.__setattr__(self, "row_ids", row_ids)
        object.__setattr__(self, "col_ids", col_ids)

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.m, self.n

    def entry(self, i: int, j: int) -> float:
        return float(self.entries[i, j])

    def to_csv(self) -> str:
        """Row-major CSV with a header row of column strategy ids."""

        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.col_ids)
        for row in self.entries:
            writer.writerow([repr(float(value)) for value in row])
        return buffer.getvalue()

    @classmethod
    def from_csv(cls, text: str, header: bool = False) -> "PayoffMatrix":
        """
        Parse a numeric grid. With `header=True` the first row holds column
        strategy ids (the format written by `to_csv`).
        """
        rows = [row for row in csv.reader(io.StringIO(text)) if any(cell.strip() for cell in row)]
        col_ids: tuple[int, ...] = ()
        if header:
            if not rows:
                raise MatrixParseError(detail="missing header row")
            try:
                col_ids = tuple(int(cell) for cell in rows[0])
            except ValueError as exc:
                raise MatrixParseError(detail=f"header row: {exc}") from exc
            rows = rows[1:]
        if not rows:
            raise MatrixParseError(detail="no numeric rows")

        width = len(rows[0])
        values: list[list[float]] = []
        for i, row in enumerate(rows):
            if len(row) != width:
                raise MatrixParseError(detail=f"row {i} has {len(row)} cells, expected {width}")
            parsed: list[float] = []
            for j, cell in enumerate(row):
                try:
                    parsed.append(float(cell))
                except ValueError:
                    raise MatrixParseError(detail=f"row {i}, column {j}: {cell.strip()!r} is not numeric") from None
            values.append(parsed)
        try:
            return cls(np.array(values), col_ids=col_ids)
        except NonFiniteError as exc:
            raise MatrixParseError(detail=exc.detail) from exc


@dataclass(frozen=True, eq=False)
class MixedStrategy:
    """Probability vector over one player's support set."""

    probs: np.ndarray

    def __post_init__(self) -> None:
        probs = np.asarray(self.probs, dtype=np.float64)
        if probs.ndim != 1 or probs.size < 1:
            raise InvalidStrategyError(detail=f"expected a non-empty vector, got shape {probs.shape}")
        if not np.all(np.isfinite(probs)):
            raise InvalidStrategyError(detail="non-finite probability")
        if np.any(probs < 0):
            raise InvalidStrategyError(detail=f"negative probability {probs.min()}")
        if abs(probs.sum() - 1.0) > PROBABILITY_TOLERANCE:
            raise InvalidStrategyError(detail=f"probabilities sum to {probs.sum()!r}")
        object.__setattr__(self, "probs", _frozen(probs))

    @classmethod
    def pure(cls, index: int, size: int) -> "MixedStrategy":
        probs = np.zeros(size)
        probs[index] = 1.0
        return cls(probs)

    @classmethod
    def uniform(cls, size: int) -> "MixedStrategy":
        return cls(np.full(size, 1.0 / size))

    @classmethod
    def from_weights(cls, weights: Sequence[float] | np.ndarray) -> "MixedStrategy":
        """Clip solver round-off below zero and renormalize."""

        weights = np.clip(np.asarray(weights, dtype=np.float64), 0.0, None)
        total = weights.sum()
        if total <= 0:
            raise InvalidStrategyError(detail="weights sum to zero")
        return cls(weights / total)

    def __len__(self) -> int:
        return self.probs.size

    def tolist(self) -> list[float]:
        return [float(p) for p in self.probs]


@dataclass(frozen=True, eq=False)
class MetaSolution:
    """Mixed equilibrium of a restricted game plus both LP objective values."""

    sigma_g: MixedStrategy
    sigma_d: MixedStrategy
    value: float
    row_value: Optional[float] = None
    col_value: Optional[float] = None

    def to_json(self) -> dict[str, Any]:
        return {
            "sigma_g": self.sigma_g.tolist(),
            "sigma_d": self.sigma_d.tolist(),
            "value": float(self.value),
        }

    @classmethod
    def from_json(cls, payload: dict[str, Any]) -> "MetaSolution":
        return cls(
            sigma_g=MixedStrategy(np.asarray(payload["sigma_g"])),
            sigma_d=MixedStrategy(np.asarray(payload["sigma_d"])),
            value=float(payload["value"]),
        )
