"""Dynamic beta priors keyed on (elapsed time, |lead|) buckets.

Rows are stored for nonnegative leads only; an away lead uses the row for
``|lead|`` with the two shape parameters swapped.
"""

from __future__ import annotations

import math
import statistics
import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import MAX_LEAD, N_LEADS, N_SECONDS, T_MAX, BetaParams, check_clock, check_lead


class PriorFitWarning(UserWarning):
    """A survey bucket could not be fitted and fell back to the default row."""


@dataclass(frozen=True)
class PriorRow:
    t_lo: int
    t_hi: int
    lead_lo: int
    lead_hi: int
    alpha: float
    beta: float

    @property
    def params(self) -> BetaParams:
        return BetaParams(self.alpha, self.beta)

    @property
    def bucket(self) -> tuple[int, int, int, int]:
        return (self.t_lo, self.t_hi, self.lead_lo, self.lead_hi)

    def covers(self, t: int, abs_lead: int) -> bool:
        return self.t_lo <= t <= self.t_hi and self.lead_lo <= abs_lead <= self.lead_hi


class PriorTable:
    """Immutable partition of [0, 2879] x [0, 58] into beta-prior rows."""

    def __init__(self, rows: Iterable[PriorRow]):
        self.rows: tuple[PriorRow, ...] = tuple(sorted(rows, key=lambda r: (r.t_lo, r.lead_lo)))
        cover = np.zeros((N_SECONDS, MAX_LEAD + 1), dtype=np.int64)
        for r in self.rows:
            BetaParams(r.alpha, r.beta)
            if not (0 <= r.t_lo <= r.t_hi <= T_MAX and 0 <= r.lead_lo <= r.lead_hi <= MAX_LEAD):
                raise ValueError(f"prior row ranges out of bounds: {r}")
            cover[r.t_lo : r.t_hi + 1, r.lead_lo : r.lead_hi + 1] += 1
        if np.any(cover != 1):
            t, lead = np.argwhere(cover != 1)[0]
            problem = "gap" if cover[t, lead] == 0 else "overlap"
            raise ValueError(f"prior table has a {problem} at t={t}, |lead|={lead}")

    def __iter__(self):
        return iter(self.rows)

    def __len__(self) -> int:
        return len(self.rows)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PriorTable) and self.rows == other.rows

    __hash__ = None  # type: ignore[assignment]

    def row_for(self, t: int, abs_lead: int) -> PriorRow:
        for r in self.rows:
            if r.covers(t, abs_lead):
                return r
        raise AssertionError("unreachable: table coverage is checked on construction")

    def lookup(self, t: int, lead: int) -> BetaParams:
        return lookup_prior(self, t, lead)

    @cached_property
    def lattice(self) -> tuple[np.ndarray, np.ndarray]:
        """(alpha, beta) arrays over the full (t, lead) lattice, swap rule applied."""
        a_pos = np.empty((N_SECONDS, MAX_LEAD + 1))
        b_pos = np.empty((N_SECONDS, MAX_LEAD + 1))
        for r in self.rows:
            a_pos[r.t_lo : r.t_hi + 1, r.lead_lo : r.lead_hi + 1] = r.alpha
            b_pos[r.t_lo : r.t_hi + 1, r.lead_lo : r.lead_hi + 1] = r.beta
        abs_lead = np.abs(np.arange(-MAX_LEAD, MAX_LEAD + 1))
        home_ahead = np.arange(-MAX_LEAD, MAX_LEAD + 1) >= 0
        alpha = np.where(home_ahead, a_pos[:, abs_lead], b_pos[:, abs_lead])
        beta = np.where(home_ahead, b_pos[:, abs_lead], a_pos[:, abs_lead])
        assert alpha.shape == (N_SECONDS, N_LEADS)
        alpha.setflags(write=False)
        beta.setflags(write=False)
        return alpha, beta


def lookup_prior(table: PriorTable, t: int, lead: int) -> BetaParams:
    """Prior for (t, lead); home deficits swap alpha and beta of the |lead| row."""
    params = table.row_for(check_clock(t), abs(check_lead(lead))).params
    return params if lead >= 0 else params.swapped()


def fit_beta_moments(mean: float, variance: float) -> BetaParams:
    """Method-of-moments beta fit from a sample mean and variance.

    >>> fit_beta_moments(0.5, 1 / 12)
    BetaParams(alpha=1.0, beta=1.0)
    """
    p, s2 = float(mean), float(variance)
    if not 0.0 < p < 1.0:
        raise ValueError(f"mean {p} must lie in (0, 1)")
    if s2 == 0.0:
        raise ValueError("degenerate survey variance")
    if s2 < 0.0 or s2 >= p * (1.0 - p):
        raise ValueError("variance too large for beta")
    # the closed form -p(p^2 - p + s2)/s2 is rewritten with p(1-p) - s2 > 0 to avoid cancellation
    spread = p * (1.0 - p) / s2 - 1.0
    return BetaParams(p * spread, (1.0 - p) * spread)


# Rows of the bundled dynamic prior: (t_lo, t_hi, lead_lo, lead_hi, alpha, beta, time label, lead label).
_TABLE1: Sequence[tuple[int, int, int, int, int, int, str, str]] = (
    (0, 360, 0, 9, 1, 1, "0-360", "0-9"),
    (0, 360, 10, 14, 18, 9, "0-360", "10-14"),
    (0, 360, 15, 58, 54, 6, "0-360", ">=15"),
    (361, 720, 0, 9, 1, 1, "361-720", "0-9"),
    (361, 720, 10, 19, 19, 7, "361-720", "10-19"),
    (361, 720, 20, 58, 34, 3, "361-720", ">=20"),
    (721, 1440, 0, 9, 1, 1, "721-1440", "0-9"),
    (721, 1440, 10, 19, 18, 5, "721-1440", "10-19"),
    (721, 1440, 20, 58, 51, 2, "721-1440", ">=20"),
    (1441, 2160, 0, 9, 1, 1, "1441-2160", "0-9"),
    (1441, 2160, 10, 14, 22, 6, "1441-2160", "10-14"),
    (1441, 2160, 15, 19, 15, 2, "1441-2160", "15-19"),
    (1441, 2160, 20, 58, 71, 2, "1441-2160", ">=20"),
    (2161, 2520, 0, 9, 1, 1, "2161-2520", "0-9"),
    (2161, 2520, 10, 14, 22, 3, "2161-2520", "10-14"),
    (2161, 2520, 15, 19, 25, 2, "2161-2520", "15-19"),
    (2161, 2520, 20, 58, 133, 2, "2161-2520", ">=20"),
    (2521, 2700, 0, 9, 1, 1, "2521-2700", "0-9"),
    (2521, 2700, 10, 14, 46, 3, "2521-2700", "10-14"),
    (2521, 2700, 15, 19, 48, 1, "2521-2700", "15-19"),
    (2521, 2700, 20, 58, 133, 1, "2521-2700", ">=20"),
    (2701, 2820, 0, 4, 1, 1, "2701-2820", "0-4"),
    (2701, 2820, 5, 9, 10, 2, "2701-2820", "5-9"),
    (2701, 2820, 10, 14, 104, 3, "2701-2820", "10-14"),
    (2701, 2820, 15, 58, 328, 2, "2701-2820", ">=15"),
    (2821, 2879, 0, 2, 1, 1, "2821-2879", "0-2"),
    (2821, 2879, 3, 4, 10, 2, "2821-2879", "3-4"),
    (2821, 2879, 5, 9, 17, 1, "2821-2879", "5-9"),
    (2821, 2879, 10, 58, 167, 1, "2821-2879", ">=10"),
)

#: survey bucket labels -> (t_lo, t_hi, lead_lo, lead_hi)
TABLE1_BUCKETS: Mapping[tuple[str, str], tuple[int, int, int, int]] = {
    (tl, ll): (t0, t1, l0, l1) for t0, t1, l0, l1, _, _, tl, ll in _TABLE1
}

DEFAULT_PRIORS = PriorTable(PriorRow(t0, t1, l0, l1, float(a), float(b)) for t0, t1, l0, l1, a, b, _, _ in _TABLE1)


def build_prior_table(
    survey: Mapping[tuple[str, str], Sequence[float]],
    fallback: PriorTable = DEFAULT_PRIORS,
) -> PriorTable:
    """Refit each bucket of ``fallback`` that has survey responses.

    ``survey`` maps bucket labels (as in the survey CSV) to the responses for
    that bucket. Sample variance uses the n-1 denominator. Buckets with fewer
    than two responses, or whose moments admit no beta fit, keep the fallback
    row and emit :class:`PriorFitWarning`.
    """
    by_range: dict[tuple[int, int, int, int], Sequence[float]] = {}
    for label, values in survey.items():
        if label not in TABLE1_BUCKETS:
            raise ValueError(f"unknown survey bucket {label}")
        by_range[TABLE1_BUCKETS[label]] = values

    rows = []
    for row in fallback:
        values = by_range.get(row.bucket)
        if not values:
            rows.append(row)
            continue
        if len(values) < 2:
            warnings.warn(f"bucket {row.bucket}: only one response, keeping fallback", PriorFitWarning, stacklevel=2)
            rows.append(row)
            continue
        mean = math.fsum(values) / len(values)
        var = statistics.variance(values, xbar=mean)
        try:
            fitted = fit_beta_moments(mean, var)
        except ValueError as exc:
            warnings.warn(f"bucket {row.bucket}: {exc}; keeping fallback", PriorFitWarning, stacklevel=2)
            rows.append(row)
            continue
        rows.append(PriorRow(row.t_lo, row.t_hi, row.lead_lo, row.lead_hi, fitted.alpha, fitted.beta))
    unused = set(by_range) - {r.bucket for r in fallback}
    if unused:
        warnings.warn(f"survey buckets absent from fallback table ignored: {sorted(unused)}", PriorFitWarning, stacklevel=2)
    return PriorTable(rows)


def rounded(table: PriorTable) -> PriorTable:
    """Round parameters to the nearest integer (at least 1)."""
    return PriorTable(
        PriorRow(r.t_lo, r.t_hi, r.lead_lo, r.lead_hi, float(max(1, round(r.alpha))), float(max(1, round(r.beta))))
        for r in table
    )
