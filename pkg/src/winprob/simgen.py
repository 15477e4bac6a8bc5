"""Synthetic games from an alternating-possession scoring process.

Each second after tip-off a possession ends with probability
``possession_rate``. Possessions alternate between the teams (the first one
goes to a fair coin flip) and each scores 0-4 points drawn from
``point_distribution``. ``home_strength`` shifts probability mass from
"no score" onto the scoring outcomes for the home team and the other way for
the away team. A game tied after regulation is decided by a fair coin.

Every game draws from its own generator derived from ``(seed, game index)``,
so output does not depend on how generation is parallelised.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from .adjust import PROB_FLOOR
from .domain import MAX_POINTS_PER_SECOND, T_MAX, GameRecord, clamp_lead

log = logging.getLogger(__name__)

#: per-possession points, loosely NBA-like (about 1.1 points per possession)
DEFAULT_POINTS = (0.50, 0.05, 0.33, 0.11, 0.01)
MC_CHUNK = 4096


@dataclass(frozen=True)
class SimConfig:
    n_games: int = 1000
    seed: int = 0
    home_strength: float = 0.0
    possession_rate: float = 0.07
    point_distribution: tuple[float, ...] = DEFAULT_POINTS
    #: optional per-game strengths; each game draws one uniformly instead of ``home_strength``
    strength_levels: tuple[float, ...] = ()
    #: Monte Carlo replicates used for the pregame probability of each strength
    pregame_mc: int = 20000

    def __post_init__(self) -> None:
        pd = tuple(float(p) for p in self.point_distribution)
        if len(pd) != MAX_POINTS_PER_SECOND + 1:
            raise ValueError("point_distribution must give probabilities for 0..4 points")
        if any(p < 0 for p in pd) or abs(sum(pd) - 1.0) > 1e-9:
            raise ValueError("point_distribution must be nonnegative and sum to 1")
        if self.n_games < 1 or not 0 < self.possession_rate <= 1 or self.pregame_mc < 1:
            raise ValueError("invalid simulation config")
        object.__setattr__(self, "point_distribution", pd)
        object.__setattr__(self, "strength_levels", tuple(float(s) for s in self.strength_levels))
        for s in self.strengths:
            point_cdfs(pd, s)

    @property
    def strengths(self) -> tuple[float, ...]:
        return self.strength_levels or (self.home_strength,)


def point_cdfs(pd: tuple[float, ...], strength: float) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative point distributions for (home, away) possessions."""
    pd_arr = np.asarray(pd)
    scoring = pd_arr[1:].sum()
    out = []
    for s in (strength, -strength):
        p = pd_arr.copy()
        if scoring > 0:
            p[1:] *= 1.0 + s
            p[0] = 1.0 - p[1:].sum()
        if np.any(p < -1e-12):
            raise ValueError(f"home_strength {strength} makes the point distribution invalid")
        out.append(np.cumsum(np.clip(p, 0.0, None)))
    return out[0], out[1]


def _points(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.minimum(np.searchsorted(cdf, u, side="right"), MAX_POINTS_PER_SECOND)


def _remaining_margin(
    rng: np.random.Generator,
    m: int,
    seconds: int,
    rate: float,
    cdfs: tuple[np.ndarray, np.ndarray],
) -> np.ndarray:
    """Home-minus-away points over the next ``seconds`` seconds for ``m`` paths."""
    if seconds <= 0:
        return np.zeros(m, dtype=np.int64)
    # only the number of possessions matters for the final margin, not their timing
    n_poss = rng.binomial(seconds, rate, size=m)
    k = np.arange(max(int(n_poss.max()), 1))
    u = rng.random((m, k.size))
    home_first = rng.random(m) < 0.5
    home_ball = (k % 2 == 0)[None, :] == home_first[:, None]
    pts = np.where(home_ball, _points(cdfs[0], u), -_points(cdfs[1], u))
    return np.where(k[None, :] < n_poss[:, None], pts, 0).sum(axis=1)


@dataclass(frozen=True)
class SimResult:
    games: list[GameRecord]
    strengths: np.ndarray
    tiebreak_game_ids: list[str]


def _simulate_one(config: SimConfig, index: int, pregame: dict[float, float]) -> tuple[GameRecord, float, bool]:
    rng = np.random.default_rng([config.seed, index])
    levels = config.strengths
    strength = levels[int(rng.integers(len(levels)))] if len(levels) > 1 else levels[0]
    cdfs = point_cdfs(config.point_distribution, strength)
    seconds = T_MAX  # events happen at t = 1..2879
    events = rng.random(seconds) < config.possession_rate
    u = rng.random(seconds)
    home_first = rng.random() < 0.5
    k = np.cumsum(events) - 1
    home_ball = (k % 2 == 0) == home_first
    pts = np.where(home_ball, _points(cdfs[0], u), -_points(cdfs[1], u))
    raw = np.concatenate([[0], np.cumsum(np.where(events, pts, 0))])
    final = int(raw[-1])
    tiebreak = final == 0
    home_win = bool(rng.random() < 0.5) if tiebreak else final > 0
    game = GameRecord(f"SIM{index:06d}", clamp_lead(raw), home_win, pregame[strength])
    return game, strength, tiebreak


def simulate_games(config: SimConfig, threads: int | None = 1) -> SimResult:
    """Generate ``config.n_games`` games; pregame probability = true t=0 win probability."""
    pregame = {
        s: true_win_prob(config, 0, 0, config.pregame_mc, seed=config.seed, strength=s) for s in config.strengths
    }
    pregame = {s: float(np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)) for s, p in pregame.items()}

    def one(i: int):
        return _simulate_one(config, i, pregame)

    if threads is not None and threads <= 1:
        out = [one(i) for i in range(config.n_games)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            out = list(pool.map(one, range(config.n_games)))
    ties = [g.game_id for g, _, tied in out if tied]
    if ties:
        log.info("%d of %d games tied after regulation; outcome set by coin flip", len(ties), config.n_games)
    return SimResult([g for g, _, _ in out], np.array([s for _, s, _ in out]), ties)


def true_win_prob(
    config: SimConfig,
    t: int,
    lead: int,
    n_mc: int,
    seed: int = 0,
    strength: float | None = None,
) -> float:
    """Monte Carlo home-win probability from state (t, lead) under the simulator.

    The next possession goes to either team with probability 1/2. The
    standard error is at most 0.5 / sqrt(n_mc).
    """
    if n_mc < 1:
        raise ValueError("n_mc must be positive")
    if not 0 <= t <= T_MAX:
        raise ValueError(f"t={t} outside regulation")
    s = config.home_strength if strength is None else strength
    cdfs = point_cdfs(config.point_distribution, s)
    rng = np.random.default_rng([seed, t, lead + 1000, 7])
    remaining = T_MAX - t
    if remaining * MAX_POINTS_PER_SECOND < abs(lead):
        return 1.0 if lead > 0 else 0.0
    wins = 0.0
    done = 0
    while done < n_mc:
        m = min(MC_CHUNK, n_mc - done)
        final = lead + _remaining_margin(rng, m, remaining, config.possession_rate, cdfs)
        wins += float(np.sum(final > 0)) + 0.5 * float(np.sum(final == 0))
        done += m
    return wins / n_mc


def exact_win_prob(config: SimConfig, t: int, lead: int, strength: float | None = None) -> float:
    """Home-win probability from the possession-count decomposition.

    Same dynamics as :func:`true_win_prob`; used to check the Monte Carlo
    oracle. Possession counts whose binomial mass is below 1e-18 are dropped.
    """
    s = config.home_strength if strength is None else strength
    cdf_h, cdf_a = point_cdfs(config.point_distribution, s)
    ph = np.diff(np.concatenate([[0.0], cdf_h]))
    pa = np.diff(np.concatenate([[0.0], cdf_a]))
    remaining = T_MAX - t
    pmf = binom.pmf(np.arange(remaining + 1), remaining, config.possession_rate)
    n_max = int(np.flatnonzero(pmf >= 1e-18).max())

    # points scored over k possessions, for k = 0..ceil(n_max / 2)
    def sums(p: np.ndarray) -> list[np.ndarray]:
        out = [np.ones(1)]
        for _ in range((n_max + 1) // 2):
            out.append(np.convolve(out[-1], p))
        return out

    home, away = sums(ph), sums(pa)

    def win(h: np.ndarray, a: np.ndarray) -> float:
        # P(lead + H - A > 0) + P(lead + H - A = 0) / 2
        ch = np.concatenate([np.cumsum(h[::-1])[::-1], [0.0]])  # ch[x] = P(H >= x)
        need = np.arange(a.size) - lead  # home points that exactly tie each away total
        total = float(np.dot(a, ch[np.clip(need + 1, 0, h.size)]))
        ok = (need >= 0) & (need < h.size)
        return total + 0.5 * float(np.dot(a[ok], h[need[ok]]))

    p = 0.0
    for n in range(n_max + 1):
        # the first possession goes to either side with probability 1/2
        first = win(home[(n + 1) // 2], away[n // 2])
        second = win(home[n // 2], away[(n + 1) // 2])
        p += pmf[n] * 0.5 * (first + second)
    return float(p)


def flipped(config: SimConfig) -> SimConfig:
    return SimConfig(
        config.n_games,
        config.seed,
        -config.home_strength,
        config.possession_rate,
        config.point_distribution,
        tuple(-s for s in config.strength_levels),
        config.pregame_mc,
    )

