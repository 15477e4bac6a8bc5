"""Independent brute-force recomputations used as test oracles."""

from __future__ import annotations

from winprob.domain import MAX_LEAD, N_SECONDS


def halfwidth(t: int) -> int:
    return 2 if t <= 2700 else 1 if t <= 2820 else 0


def naive_counts(games):
    """N[t][lead+58], n[t][lead+58] by scanning every game, second and lead."""
    N = [[0] * (2 * MAX_LEAD + 1) for _ in range(N_SECONDS)]
    n = [[0] * (2 * MAX_LEAD + 1) for _ in range(N_SECONDS)]
    for g in games:
        series = [int(v) for v in g.lead_series]
        for t in range(N_SECONDS):
            h = halfwidth(t)
            values = set(series[max(0, t - 3) : min(N_SECONDS - 1, t + 3) + 1])
            for lead in range(-MAX_LEAD, MAX_LEAD + 1):
                if any(abs(v - lead) <= h for v in values):
                    N[t][lead + MAX_LEAD] += 1
                    n[t][lead + MAX_LEAD] += int(g.home_win)
    return N, n


def naive_brier(probs_by_game, games):
    """Double loop over games and seconds; ``None`` entries are skipped."""
    total, q = 0.0, 0
    for probs, g in zip(probs_by_game, games):
        y = 1.0 if g.home_win else 0.0
        for t in range(N_SECONDS):
            p = probs[t]
            if p is None or p != p:
                continue
            total += (p - y) ** 2
            q += 1
    return total / q, q


def naive_adjusted(coefs, family, pregame, bayes_value, t, lead):
    """Piecewise blend written out longhand."""
    if family == "B1":
        B = coefs[0] * t
    elif family == "B2":
        B = coefs[0] * t + coefs[1] * abs(lead)
    else:
        d0, d1, d2, d3, d4 = coefs
        B = d0 + d1 * (1 if lead == 0 else 0) + d2 * t + d3 * abs(lead) + d4 * lead * lead
    if B <= 0:
        return pregame
    if B >= 1:
        return bayes_value
    return (1 - B) * pregame + B * bayes_value
