"""Windowed game counts over the (t, lead) lattice and the MLE / Bayes grids.

A game belongs to the window of cell (t, lead) when its lead takes any value
in [lead - h, lead + h] at any second of [t - 3, t + 3] (clipped to
regulation). The lead half-width h shrinks late in the game: 2 up to t=2700,
1 through t=2820, 0 afterwards. Each game counts at most once per cell.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .domain import (
    MAX_LEAD,
    N_LEADS,
    N_SECONDS,
    T_MAX,
    CellCounts,
    GameRecord,
    GridKind,
    WinProbGrid,
    check_clock,
    check_lead,
)
from .priors import DEFAULT_PRIORS, PriorTable

CHUNK_GAMES = 64


@dataclass(frozen=True)
class WindowSpec:
    t_halfwidth: int = 3
    narrow_after: int = 2700  # h=1 for narrow_after < t <= exact_after
    exact_after: int = 2820  # h=0 beyond this

    def lead_halfwidth(self, t):
        """Lead half-width for window centre ``t`` (scalar or array)."""
        t = np.asarray(t)
        h = np.where(t <= self.narrow_after, 2, np.where(t <= self.exact_after, 1, 0))
        return int(h) if h.ndim == 0 else h


DEFAULT_WINDOW = WindowSpec()


def window_counts(games: Sequence[GameRecord], t: int, lead: int, spec: WindowSpec = DEFAULT_WINDOW) -> CellCounts:
    """Counts for a single cell, straight from the definition."""
    t, lead = check_clock(t), check_lead(lead)
    h = spec.lead_halfwidth(t)
    lo, hi = max(0, t - spec.t_halfwidth), min(T_MAX, t + spec.t_halfwidth)
    N = n = 0
    for g in games:
        seg = g.lead_series[lo : hi + 1]
        if np.any(np.abs(seg - lead) <= h):
            N += 1
            n += g.home_win
    return CellCounts(N, n)


def _chunk_counts(series: np.ndarray, spec: WindowSpec) -> np.ndarray:
    """Window membership counts (N) for a chunk of at most 255 games."""
    g = series.shape[0]
    tw = spec.t_halfwidth
    pad = 2  # widest lead half-width
    hw = spec.lead_halfwidth(np.arange(N_SECONDS))
    # presence[i, t + tw, lead + 58 + pad] marks the lead game i holds at second t
    presence = np.zeros((g, N_SECONDS + 2 * tw, N_LEADS + 2 * pad), dtype=bool)
    rows = np.repeat(np.arange(g), N_SECONDS)
    presence[rows, np.tile(np.arange(N_SECONDS) + tw, g), (series + MAX_LEAD + pad).ravel()] = True
    # dilate along time; the False padding truncates windows at the lattice edge
    in_time = presence[:, 0:N_SECONDS].copy()
    for o in range(1, 2 * tw + 1):
        in_time |= presence[:, o : o + N_SECONDS]
    N = np.zeros((N_SECONDS, N_LEADS), dtype=np.int64)
    for h in np.unique(hw):
        ts = np.flatnonzero(hw == h)
        block = in_time[:, ts[0] : ts[-1] + 1]  # regimes are contiguous in t
        acc = block[:, :, pad : pad + N_LEADS].copy()
        for d in range(1, h + 1):
            acc |= block[:, :, pad - d : pad - d + N_LEADS]
            acc |= block[:, :, pad + d : pad + d + N_LEADS]
        N[ts[0] : ts[-1] + 1] = acc.view(np.uint8).sum(axis=0, dtype=np.uint8)
    return N


def count_lattice(
    games: Sequence[GameRecord],
    spec: WindowSpec = DEFAULT_WINDOW,
    threads: int | None = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """(N, n) arrays of shape (2880, 117) for every cell at once.

    Home wins and losses are counted in separate fixed-size chunks; integer
    sums make the result independent of ``threads``.
    """
    if spec.t_halfwidth < 0 or int(spec.lead_halfwidth(0)) > 2:
        raise ValueError("window spec outside supported range (lead half-width <= 2)")
    N = np.zeros((N_SECONDS, N_LEADS), dtype=np.int64)
    n = np.zeros_like(N)
    if not games:
        return N, n
    series = np.stack([g.lead_series for g in games])
    wins = np.array([g.home_win for g in games], dtype=bool)
    won, lost = series[wins], series[~wins]
    jobs = [(True, won[s : s + CHUNK_GAMES]) for s in range(0, len(won), CHUNK_GAMES)]
    jobs += [(False, lost[s : s + CHUNK_GAMES]) for s in range(0, len(lost), CHUNK_GAMES)]

    def work(job: tuple[bool, np.ndarray]) -> np.ndarray:
        return _chunk_counts(job[1], spec)

    if threads is None or threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, jobs))
    else:
        parts = [work(j) for j in jobs]
    for (is_win, _), part in zip(jobs, parts):
        N += part
        if is_win:
            n += part
    return N, n


def mle_from_counts(N: np.ndarray, n: np.ndarray) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(N > 0, n / np.where(N > 0, N, 1), np.nan)


def bayes_from_counts(N: np.ndarray, n: np.ndarray, priors: PriorTable) -> np.ndarray:
    alpha, beta = priors.lattice
    return (n + alpha) / (N + alpha + beta)


def build_mle_grid(
    games: Sequence[GameRecord],
    spec: WindowSpec = DEFAULT_WINDOW,
    threads: int | None = 1,
) -> WinProbGrid:
    """Empirical win fraction n/N per cell; MISSING where no game is in the window."""
    N, n = count_lattice(games, spec, threads)
    return WinProbGrid(GridKind.MLE, mle_from_counts(N, n), N, n)


def build_bayes_grid(
    games: Sequence[GameRecord],
    spec: WindowSpec = DEFAULT_WINDOW,
    priors: PriorTable = DEFAULT_PRIORS,
    threads: int | None = 1,
) -> WinProbGrid:
    """Posterior-mean grid (n + alpha) / (N + alpha + beta) with the dynamic prior."""
    N, n = count_lattice(games, spec, threads)
    return WinProbGrid(GridKind.BAYES, bayes_from_counts(N, n, priors), N, n)
