"""Pregame probabilities and their blend with the in-game Bayes estimate.

The blend weight ``B`` comes from one of three families evaluated at elapsed
time ``t`` and lead ``lead``::

    B1 = b t
    B2 = c1 t + c2 |lead|
    B3 = d0 + d1 [lead == 0] + d2 t + d3 |lead| + d4 lead^2

and the adjusted estimate is the pregame probability when B <= 0, the Bayes
value when B >= 1, and (1 - B) pregame + B bayes in between.
"""

from __future__ import annotations

import numpy as np
from scipy.special import ndtr

from .domain import N_LEADS, N_SECONDS, GridKind, WeightFamily, WeightModel, WinProbGrid

DEFAULT_SIGMA = 11.5
PROB_FLOOR = 1e-6

#: linear-in-time blend that hands full weight to the in-game estimate at t = 2880
LINEAR_B1 = WeightModel(WeightFamily.B1, (1 / 2880,))
DEFAULT_B2 = WeightModel(WeightFamily.B2, (1 / 2880, 0.0))
#: reference quadratic fit
FITTED_B3 = WeightModel(WeightFamily.B3, (-1.10633, -0.02313, 0.00027, 0.06618, -0.00139))

DEFAULT_MODELS = {
    WeightFamily.B1: LINEAR_B1,
    WeightFamily.B2: DEFAULT_B2,
    WeightFamily.B3: FITTED_B3,
}


def spread_to_prob(home_margin, sigma: float = DEFAULT_SIGMA):
    """Home win probability implied by an expected home margin.

    Uses the normal CDF of ``home_margin / sigma``, clamped to
    [1e-6, 1 - 1e-6].
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    p = np.clip(ndtr(np.asarray(home_margin, dtype=float) / sigma), PROB_FLOOR, 1.0 - PROB_FLOOR)
    return float(p) if p.ndim == 0 else p


def weight(model: WeightModel, t, lead):
    """Unclamped blend weight B(t, lead)."""
    c = model.coefficients
    t_arr, lead_arr = np.broadcast_arrays(np.asarray(t, dtype=float), np.asarray(lead))
    a = np.abs(lead_arr).astype(float)
    if model.family is WeightFamily.B1:
        w = c[0] * t_arr
    elif model.family is WeightFamily.B2:
        w = c[0] * t_arr + c[1] * a
    else:
        zero = (lead_arr == 0).astype(float)
        w = c[0] + c[1] * zero + c[2] * t_arr + c[3] * a + c[4] * a * a
    return float(w) if np.ndim(w) == 0 else w


def blend(B, p_pregame, p_bayes):
    """Piecewise blend for a precomputed weight ``B``."""
    B = np.asarray(B, dtype=float)
    pp = np.asarray(p_pregame, dtype=float)
    pb = np.asarray(p_bayes, dtype=float)
    mixed = (1.0 - B) * pp + B * pb
    # rounding can step a hair outside the segment; keep the convex-combination guarantee
    mixed = np.clip(mixed, np.minimum(pp, pb), np.maximum(pp, pb))
    out = np.where(B <= 0.0, pp, np.where(B >= 1.0, pb, mixed))
    return float(out) if out.ndim == 0 else out


def adjusted_estimate(model: WeightModel, p_pregame, p_bayes, t, lead):
    """Adjusted in-game probability; vectorises over array arguments."""
    return blend(weight(model, t, lead), p_pregame, p_bayes)


def build_adjusted_grid(bayes: WinProbGrid, model: WeightModel, p_pregame: float) -> WinProbGrid:
    """Apply one pregame probability across the whole lattice (for plots and export)."""
    if np.isnan(bayes.estimate).any():
        raise ValueError("adjusted grid needs a complete Bayes grid")
    t = np.arange(N_SECONDS)[:, None]
    lead = np.arange(N_LEADS)[None, :] - (N_LEADS // 2)
    est = adjusted_estimate(model, p_pregame, bayes.estimate, t, lead)
    return WinProbGrid(GridKind.ADJUSTED, est, bayes.N, bayes.n)
