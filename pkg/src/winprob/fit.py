"""Fit blend-weight coefficients by minimising the Brier score of the adjusted estimator."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .adjust import DEFAULT_MODELS, blend, weight
from .domain import MAX_LEAD, N_SECONDS, GameRecord, InputError, WeightFamily, WeightModel, WinProbGrid

CHUNK_GAMES = 256

# Typical magnitude of each coefficient; the simplex works in units of these so
# that a unit step means "about one full weight" for every term.
_SCALES = {
    WeightFamily.B1: (1 / N_SECONDS,),
    WeightFamily.B2: (1 / N_SECONDS, 1 / MAX_LEAD),
    WeightFamily.B3: (1.0, 1.0, 1 / N_SECONDS, 1 / MAX_LEAD, 1 / MAX_LEAD**2),
}


@dataclass(frozen=True)
class FitConfig:
    family: WeightFamily
    initial_coefficients: tuple[float, ...] = ()
    max_iterations: int = 2000
    simplex_tolerance: float = 1e-8
    restarts: int = 0
    seed: int = 0
    initial_step: float = 0.25

    def __post_init__(self) -> None:
        coefs = tuple(self.initial_coefficients) or DEFAULT_MODELS[self.family].coefficients
        if len(coefs) != len(self.family.names):
            raise ValueError(f"{self.family.value} needs {len(self.family.names)} initial coefficients")
        if self.max_iterations < 0 or self.restarts < 0 or not self.simplex_tolerance > 0:
            raise ValueError("invalid fit configuration")
        object.__setattr__(self, "initial_coefficients", tuple(float(c) for c in coefs))


@dataclass(frozen=True)
class FitResult:
    model: WeightModel
    brier: float
    iterations: int
    converged: bool
    initial_brier: float
    starts: list[tuple[tuple[float, ...], float]] = field(default_factory=list, compare=False)


class BrierObjective:
    """Brier score of the adjusted estimator as a function of the coefficients.

    Per-game inputs (Bayes value along each game's path, pregame probability,
    outcome) are gathered once; each call only re-evaluates the weights.
    """

    def __init__(
        self,
        family: WeightFamily,
        games: Sequence[GameRecord],
        bayes: WinProbGrid,
        threads: int | None = 1,
    ):
        if not games:
            raise InputError("no games to fit on")
        missing = [g.game_id for g in games if g.pregame_home_prob is None]
        if missing:
            raise InputError(f"game {missing[0]} has no pregame probability")
        if np.isnan(bayes.estimate).any():
            raise ValueError("Bayes grid has MISSING cells")
        self.family = family
        self.threads = threads
        self.leads = np.stack([g.lead_series for g in games])
        self.p_bayes = np.stack([bayes.trajectory(g.lead_series) for g in games])
        self.p_pregame = np.array([g.pregame_home_prob for g in games])[:, None]
        self.outcome = np.array([g.outcome for g in games], dtype=float)[:, None]
        self.t = np.arange(N_SECONDS, dtype=float)[None, :]
        self.Q = self.leads.size

    def _chunk(self, model: WeightModel, s: int) -> np.ndarray:
        sl = slice(s, s + CHUNK_GAMES)
        est = blend(weight(model, self.t, self.leads[sl]), self.p_pregame[sl], self.p_bayes[sl])
        return np.sum((est - self.outcome[sl]) ** 2, axis=1)

    def __call__(self, coefficients) -> float:
        model = WeightModel(self.family, tuple(coefficients))
        starts = range(0, self.leads.shape[0], CHUNK_GAMES)
        if self.threads is not None and self.threads <= 1:
            parts = [self._chunk(model, s) for s in starts]
        else:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                parts = list(pool.map(lambda s: self._chunk(model, s), starts))
        return math.fsum(np.concatenate(parts).tolist()) / self.Q


def brier_objective(
    coefficients: Sequence[float],
    family: WeightFamily,
    games: Sequence[GameRecord],
    bayes: WinProbGrid,
    threads: int | None = 1,
) -> float:
    """Mean squared error of the adjusted estimator over every game-second."""
    return BrierObjective(family, games, bayes, threads)(coefficients)


def _restart_points(config: FitConfig) -> list[np.ndarray]:
    x0 = np.array(config.initial_coefficients)
    rng = np.random.default_rng(config.seed)
    points = [x0]
    for _ in range(config.restarts):
        points.append(x0 * (1.0 + rng.uniform(-0.5, 0.5, size=x0.size)))
    return points


def fit_weights(
    config: FitConfig,
    games: Sequence[GameRecord],
    bayes: WinProbGrid,
    threads: int | None = 1,
) -> FitResult:
    """Nelder-Mead search for the Brier-minimising coefficients.

    Runs from the initial coefficients and from ``config.restarts`` seeded
    perturbations of them, keeping the best (earliest on ties). Hitting
    ``max_iterations`` is reported through ``converged=False``.
    """
    objective = BrierObjective(config.family, games, bayes, threads)
    scale = np.array(_SCALES[config.family])
    x_init = np.array(config.initial_coefficients)
    f_init = objective(x_init)
    if not math.isfinite(f_init):
        raise ValueError("objective is not finite at the initial coefficients")
    if config.max_iterations == 0:
        return FitResult(WeightModel(config.family, tuple(x_init)), f_init, 0, False, f_init, [(tuple(x_init), f_init)])

    best: tuple[np.ndarray, float, bool] | None = None
    total_iter = 0
    starts = []
    for x0 in _restart_points(config):
        z0 = x0 / scale
        simplex = np.vstack([z0, z0 + config.initial_step * np.eye(z0.size)])
        res = minimize(
            lambda z: objective(z * scale),
            z0,
            method="Nelder-Mead",
            options={
                "maxiter": config.max_iterations,
                "maxfev": 10 * config.max_iterations * max(1, z0.size),
                "xatol": config.simplex_tolerance,
                "fatol": config.simplex_tolerance,
                "initial_simplex": simplex,
            },
        )
        total_iter += int(res.nit)
        x = res.x * scale
        f = objective(x)
        starts.append((tuple(x), f))
        if best is None or f < best[1]:
            best = (x, f, bool(res.success))
    assert best is not None
    best_x, best_f, best_ok = best
    if best_f > f_init:  # the simplex keeps its best vertex, so this only guards rounding
        best_x, best_f = x_init, f_init
    return FitResult(WeightModel(config.family, tuple(float(v) for v in best_x)), best_f, total_iter, best_ok, f_init, starts)
