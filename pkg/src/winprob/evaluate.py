"""Brier-score evaluation of probability sources and per-game trajectory export.

A *probability source* is any callable mapping a :class:`GameRecord` to an
array of 2880 per-second home-win probabilities, NaN where the source has no
estimate. Observations with NaN are left out of both the sum and ``Q``.

Per-game partial sums are combined with :func:`math.fsum`, which is
correctly rounded and therefore independent of game order and chunking.
"""

from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .adjust import adjusted_estimate
from .domain import (
    N_SECONDS,
    EvaluationReport,
    GameRecord,
    InputError,
    ReportRow,
    WeightModel,
    WinProbGrid,
)

ProbabilitySource = Callable[[GameRecord], np.ndarray]

#: minutes remaining at which checkpoint scores are taken
DEFAULT_CHECKPOINTS: tuple[int, ...] = (24, 12, 6, 3, 1)
NO_OBSERVATIONS = "no scorable observations"


class NoObservationsError(InputError):
    pass


def checkpoint_elapsed(minutes_remaining: int) -> int:
    t = N_SECONDS - 60 * minutes_remaining
    if not (0 < minutes_remaining <= 48 and 0 <= t < N_SECONDS):
        raise InputError(f"checkpoint {minutes_remaining} min remaining is outside regulation")
    return t


@dataclass(frozen=True)
class BrierResult:
    brier: float
    Q: int


# --- sources -----------------------------------------------------------------


def grid_source(grid: WinProbGrid) -> ProbabilitySource:
    return lambda game: grid.trajectory(game.lead_series)


def adjusted_source(bayes: WinProbGrid, model: WeightModel) -> ProbabilitySource:
    """Adjusted estimator using each game's own pregame probability."""
    t = np.arange(N_SECONDS)

    def source(game: GameRecord) -> np.ndarray:
        if game.pregame_home_prob is None:
            raise InputError(f"game {game.game_id} has no pregame probability")
        return adjusted_estimate(
            model, game.pregame_home_prob, bayes.trajectory(game.lead_series), t, game.lead_series
        )

    return source


def external_source(probs: Mapping[tuple[str, int], float]) -> ProbabilitySource:
    """Source backed by a sparse (game_id, t) -> probability map; no interpolation."""
    by_game: dict[str, np.ndarray] = defaultdict(lambda: np.full(N_SECONDS, np.nan))
    for (gid, t), p in probs.items():
        if 0 <= t < N_SECONDS:
            by_game[gid][t] = p
    empty = np.full(N_SECONDS, np.nan)
    return lambda game: by_game[game.game_id] if game.game_id in by_game else empty


def constant_source(p: float) -> ProbabilitySource:
    values = np.full(N_SECONDS, float(p))
    return lambda game: values


def truth_source(invert: bool = False) -> ProbabilitySource:
    """The realised outcome (or its complement) at every second."""
    return lambda game: np.full(N_SECONDS, float(game.home_win != invert))


# --- scoring -----------------------------------------------------------------


def _game_terms(source: ProbabilitySource, game: GameRecord) -> tuple[np.ndarray, np.ndarray]:
    """Squared errors and scorable mask for one game."""
    rho = np.asarray(source(game), dtype=float)
    if rho.shape != (N_SECONDS,):
        raise ValueError(f"source returned shape {rho.shape} for game {game.game_id}")
    ok = ~np.isnan(rho)
    return np.where(ok, (rho - game.outcome) ** 2, 0.0), ok


def _map_games(fn, games: Sequence[GameRecord], threads: int | None):
    if threads is not None and threads <= 1:
        return [fn(g) for g in games]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, games))


def brier_overall(source: ProbabilitySource, games: Sequence[GameRecord], threads: int | None = 1) -> BrierResult:
    """Mean squared error over every scorable game-second."""
    if not games:
        raise InputError("no games to evaluate")

    def per_game(game: GameRecord) -> tuple[float, int]:
        sq, ok = _game_terms(source, game)
        return float(np.sum(sq)), int(ok.sum())

    parts = _map_games(per_game, games, threads)
    Q = sum(q for _, q in parts)
    if Q == 0:
        raise NoObservationsError(NO_OBSERVATIONS)
    return BrierResult(math.fsum(s for s, _ in parts) / Q, Q)


def brier_at_checkpoints(
    source: ProbabilitySource,
    games: Sequence[GameRecord],
    checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS,
    threads: int | None = 1,
) -> dict[int, BrierResult]:
    """Brier score at the single second of each checkpoint (minutes remaining)."""
    if not games:
        raise InputError("no games to evaluate")
    ts = np.array([checkpoint_elapsed(c) for c in checkpoints], dtype=np.int64)

    def per_game(game: GameRecord) -> tuple[np.ndarray, np.ndarray]:
        sq, ok = _game_terms(source, game)
        return sq[ts], ok[ts]

    parts = _map_games(per_game, games, threads)
    out = {}
    for k, c in enumerate(checkpoints):
        Q = sum(int(ok[k]) for _, ok in parts)
        if Q == 0:
            raise NoObservationsError(f"{NO_OBSERVATIONS} at checkpoint {c}")
        out[c] = BrierResult(math.fsum(float(sq[k]) for sq, _ in parts) / Q, Q)
    return out


def compare_models(
    entries: Sequence[tuple[str, ProbabilitySource]],
    games: Sequence[GameRecord],
    checkpoints: Sequence[int] = DEFAULT_CHECKPOINTS,
    threads: int | None = 1,
) -> EvaluationReport:
    """One report row per (label, source), in the given order.

    Failures for an entry become a note on its row instead of aborting.
    """
    if not entries:
        raise ValueError("compare_models needs at least one entry")
    checkpoints = tuple(checkpoints)
    for c in checkpoints:
        checkpoint_elapsed(c)
    rows = []
    for label, source in entries:
        try:
            overall = brier_overall(source, games, threads)
        except InputError as exc:
            rows.append(ReportRow(label, note=str(exc)))
            continue
        scores: dict[int, float | None] = {}
        notes = []
        for c in checkpoints:
            try:
                scores[c] = brier_at_checkpoints(source, games, (c,), threads)[c].brier
            except NoObservationsError as exc:
                scores[c] = None
                notes.append(str(exc))
        rows.append(ReportRow(label, overall.brier, overall.Q, scores, "; ".join(notes)))
    return EvaluationReport(checkpoints, tuple(rows))


@dataclass(frozen=True, eq=False)
class Trajectory:
    game_id: str
    leads: np.ndarray
    columns: dict[str, np.ndarray]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.game_id == other.game_id
            and np.array_equal(self.leads, other.leads)
            and list(self.columns) == list(other.columns)
            and all(np.array_equal(self.columns[k], other.columns[k], equal_nan=True) for k in self.columns)
        )

    __hash__ = None  # type: ignore[assignment]


def export_trajectory(sources: Sequence[tuple[str, ProbabilitySource]], game: GameRecord) -> Trajectory:
    labels = [label for label, _ in sources]
    if len(set(labels)) != len(labels) or {"t", "lead"} & set(labels):
        raise ValueError(f"trajectory labels must be unique and not 't'/'lead': {labels}")
    cols = {label: np.asarray(src(game), dtype=float) for label, src in sources}
    return Trajectory(game.game_id, np.asarray(game.lead_series), cols)
