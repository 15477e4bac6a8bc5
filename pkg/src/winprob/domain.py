"""Core value types: game clock, leads, game records, grids, weight models and reports.

Everything here is in-memory only. File formats live in :mod:`winprob.store`.
"""

from __future__ import annotations

import dataclasses
import enum
import warnings
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

N_SECONDS = 2880  # regulation seconds; t runs 0..2879
T_MAX = N_SECONDS - 1
MAX_LEAD = 58
N_LEADS = 2 * MAX_LEAD + 1
MAX_POINTS_PER_SECOND = 4


class InputError(ValueError):
    """Invalid user-supplied data (bad rows, out-of-range values, missing entries)."""


class LeadJumpWarning(UserWarning):
    """A single second changed the lead by more than one four-point possession."""


class IngestWarning(UserWarning):
    """Recoverable oddity in an input file (duplicate keys, decreasing scores...)."""


def clamp_lead(lead):
    """Clamp a lead (scalar or array) into [-58, 58]."""
    if np.isscalar(lead):
        return int(min(MAX_LEAD, max(-MAX_LEAD, int(lead))))
    return np.clip(np.asarray(lead), -MAX_LEAD, MAX_LEAD)


def lead_index(lead):
    """Column index of ``lead`` in a (t, lead) lattice array."""
    return lead + MAX_LEAD


def check_clock(t: int) -> int:
    if not 0 <= t <= T_MAX:
        raise InputError(f"elapsed time {t} outside regulation [0, {T_MAX}]")
    return int(t)


def check_lead(lead: int) -> int:
    if not -MAX_LEAD <= lead <= MAX_LEAD:
        raise InputError(f"lead {lead} outside [-{MAX_LEAD}, {MAX_LEAD}]")
    return int(lead)


@dataclass(frozen=True, eq=False)
class GameRecord:
    """One game: per-second home lead over regulation plus the final outcome.

    ``home_win`` is the final result including overtime, so a game tied at
    t=2879 still carries a label.
    """

    game_id: str
    lead_series: np.ndarray
    home_win: bool
    pregame_home_prob: float | None = None

    def __post_init__(self) -> None:
        series = np.asarray(self.lead_series, dtype=np.int64)
        if series.shape != (N_SECONDS,):
            raise InputError(
                f"game {self.game_id}: lead series must have {N_SECONDS} entries, got {series.shape}"
            )
        if series[0] != 0:
            raise InputError(f"game {self.game_id}: lead at t=0 must be 0, got {series[0]}")
        if np.any(np.abs(series) > MAX_LEAD):
            raise InputError(f"game {self.game_id}: lead outside [-{MAX_LEAD}, {MAX_LEAD}]")
        jumps = np.flatnonzero(np.abs(np.diff(series)) > MAX_POINTS_PER_SECOND)
        if jumps.size:
            warnings.warn(
                f"game {self.game_id}: lead jumps by more than {MAX_POINTS_PER_SECOND} "
                f"at t={int(jumps[0]) + 1} ({jumps.size} such seconds)",
                LeadJumpWarning,
                stacklevel=3,
            )
        p = self.pregame_home_prob
        if p is not None:
            if not 0.0 < p < 1.0:
                raise InputError(f"game {self.game_id}: pregame probability {p} not in (0, 1)")
            object.__setattr__(self, "pregame_home_prob", float(p))
        series.setflags(write=False)
        object.__setattr__(self, "lead_series", series)
        object.__setattr__(self, "home_win", bool(self.home_win))

    @property
    def outcome(self) -> int:
        return int(self.home_win)

    def with_pregame(self, prob: float | None) -> GameRecord:
        with warnings.catch_warnings():
            # the series was already checked when this record was built
            warnings.simplefilter("ignore", LeadJumpWarning)
            return GameRecord(self.game_id, self.lead_series, self.home_win, prob)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, GameRecord):
            return NotImplemented
        return (
            self.game_id == other.game_id
            and self.home_win == other.home_win
            and self.pregame_home_prob == other.pregame_home_prob
            and np.array_equal(self.lead_series, other.lead_series)
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class CellCounts:
    N: int
    n: int

    def __post_init__(self) -> None:
        if not 0 <= self.n <= self.N:
            raise ValueError(f"invalid counts n={self.n}, N={self.N}")


@dataclass(frozen=True)
class BetaParams:
    alpha: float
    beta: float

    def __post_init__(self) -> None:
        if not (self.alpha > 0 and self.beta > 0):
            raise ValueError(f"beta shape parameters must be positive, got ({self.alpha}, {self.beta})")

    @property
    def mean(self) -> float:
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self) -> float:
        a, b = self.alpha, self.beta
        return a * b / ((a + b) ** 2 * (a + b + 1))

    def swapped(self) -> BetaParams:
        return BetaParams(self.beta, self.alpha)


class GridKind(enum.Enum):
    MLE = "mle"
    BAYES = "bayes"
    ADJUSTED = "adjusted"


@dataclass(frozen=True, eq=False)
class WinProbGrid:
    """Estimates and window counts over the 2880 x 117 (t, lead) lattice.

    ``estimate[t, lead + 58]`` is NaN where the cell is MISSING.
    """

    kind: GridKind
    estimate: np.ndarray
    N: np.ndarray
    n: np.ndarray

    def __post_init__(self) -> None:
        shape = (N_SECONDS, N_LEADS)
        est = np.array(self.estimate, dtype=np.float64)
        N = np.array(self.N, dtype=np.int64)
        n = np.array(self.n, dtype=np.int64)
        for name, arr in (("estimate", est), ("N", N), ("n", n)):
            if arr.shape != shape:
                raise ValueError(f"grid {name} must have shape {shape}, got {arr.shape}")
        if np.any((n < 0) | (n > N)):
            raise ValueError("grid counts violate 0 <= n <= N")
        finite = est[~np.isnan(est)]
        if np.any((finite < 0) | (finite > 1)):
            raise ValueError("grid estimates must lie in [0, 1]")
        if self.kind is not GridKind.MLE and np.isnan(est).any():
            raise ValueError(f"{self.kind.value} grid may not contain MISSING cells")
        for arr in (est, N, n):
            arr.setflags(write=False)
        object.__setattr__(self, "estimate", est)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "n", n)

    def value(self, t: int, lead: int) -> float | None:
        v = self.estimate[check_clock(t), lead_index(check_lead(lead))]
        return None if np.isnan(v) else float(v)

    def counts(self, t: int, lead: int) -> CellCounts:
        j = lead_index(check_lead(lead))
        return CellCounts(int(self.N[check_clock(t), j]), int(self.n[t, j]))

    def trajectory(self, lead_series: np.ndarray) -> np.ndarray:
        """Per-second estimates along a lead series (NaN where MISSING)."""
        return self.estimate[np.arange(N_SECONDS), lead_index(np.asarray(lead_series))]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, WinProbGrid):
            return NotImplemented
        return (
            self.kind is other.kind
            and np.array_equal(self.estimate, other.estimate, equal_nan=True)
            and np.array_equal(self.N, other.N)
            and np.array_equal(self.n, other.n)
        )

    __hash__ = None  # type: ignore[assignment]


class WeightFamily(enum.Enum):
    B1 = "B1"
    B2 = "B2"
    B3 = "B3"

    @property
    def names(self) -> tuple[str, ...]:
        return COEFFICIENT_NAMES[self]

    @classmethod
    def parse(cls, text: str) -> WeightFamily:
        try:
            return cls(text.strip().upper())
        except ValueError:
            raise InputError(f"unknown weight family {text!r}; expected B1, B2 or B3") from None


COEFFICIENT_NAMES: Mapping[WeightFamily, tuple[str, ...]] = {
    WeightFamily.B1: ("b",),
    WeightFamily.B2: ("c1", "c2"),
    WeightFamily.B3: ("d0", "d1", "d2", "d3", "d4"),
}


@dataclass(frozen=True)
class WeightModel:
    family: WeightFamily
    coefficients: tuple[float, ...]

    def __post_init__(self) -> None:
        coefs = tuple(float(c) for c in self.coefficients)
        if len(coefs) != len(self.family.names):
            raise ValueError(
                f"{self.family.value} takes {len(self.family.names)} coefficients, got {len(coefs)}"
            )
        object.__setattr__(self, "coefficients", coefs)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.family.names, self.coefficients))


@dataclass(frozen=True)
class ReportRow:
    model: str
    overall_brier: float | None = None
    Q: int | None = None
    checkpoints: Mapping[int, float | None] = field(default_factory=dict)
    note: str = ""

    def __post_init__(self) -> None:
        values = [self.overall_brier, *self.checkpoints.values()]
        for v in values:
            if v is not None and not 0.0 <= v <= 1.0:
                raise ValueError(f"Brier score {v} outside [0, 1]")
        if self.overall_brier is not None and not (self.Q and self.Q > 0):
            raise ValueError("a reported score needs Q > 0")


@dataclass(frozen=True)
class EvaluationReport:
    checkpoints: tuple[int, ...]
    rows: tuple[ReportRow, ...]

    def __post_init__(self) -> None:
        cks = tuple(self.checkpoints)
        # every row carries every checkpoint key, None where unscored
        rows = tuple(
            dataclasses.replace(r, checkpoints={c: r.checkpoints.get(c) for c in cks}) for r in self.rows
        )
        object.__setattr__(self, "checkpoints", cks)
        object.__setattr__(self, "rows", rows)

    def row(self, model: str) -> ReportRow:
        for r in self.rows:
            if r.model == model:
                return r
        raise KeyError(model)
