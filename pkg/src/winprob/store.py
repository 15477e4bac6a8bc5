"""Readers and writers for every artifact file.

Floats are written with ``repr`` (shortest round-trip decimal), so
``read(write(x)) == x`` exactly and equal values always produce identical
bytes. Every writer emits rows in a fixed order.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import (
    MAX_LEAD,
    N_LEADS,
    N_SECONDS,
    EvaluationReport,
    GameRecord,
    GridKind,
    InputError,
    ReportRow,
    WeightFamily,
    WeightModel,
    WinProbGrid,
)
from .evaluate import Trajectory
from .fit import FitResult
from .ingest import PREGAME_HEADER, PLAYS_HEADER, Source, _text, load_games, parse_pregame, read_rows
from .priors import PriorRow, PriorTable

GRID_HEADER = ("t", "lead", "estimate", "N", "n")
PRIORS_HEADER = ("t_lo", "t_hi", "lead_lo", "lead_hi", "alpha", "beta")
WEIGHTS_HEADER = ("family", "name", "value")
FIT_HEADER = ("family", "brier", "converged", "iterations")
REPORT_FIXED = ("model", "overall_brier", "Q")


def fmt(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _float(text: str, lineno: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise InputError(f"line {lineno}: {what} {text!r} is not a number") from None


def _int(text: str, lineno: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise InputError(f"line {lineno}: {what} {text!r} is not an integer") from None


def _write(path: str | os.PathLike, header: Sequence[str], lines: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for line in lines:
            fh.write(line + "\n")


# --- grids -------------------------------------------------------------------


def write_grid(grid: WinProbGrid, path: str | os.PathLike) -> None:
    """Grid rows in (t, lead) order; the kind goes in a leading comment line."""
    est, N, n = grid.estimate, grid.N, grid.n
    leads = range(-MAX_LEAD, MAX_LEAD + 1)

    def lines():
        for t in range(N_SECONDS):
            e, cN, cn = est[t], N[t], n[t]
            for j, lead in enumerate(leads):
                yield f"{t},{lead},{fmt(e[j])},{cN[j]},{cn[j]}"

    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(f"# kind={grid.kind.value}\n")
        fh.write(",".join(GRID_HEADER) + "\n")
        fh.write("\n".join(lines()) + "\n")


def read_grid(path: Source, kind: GridKind | None = None) -> WinProbGrid:
    text = _text(path)
    file_kind = None
    if text.startswith("#"):
        first, _, text = text.partition("\n")
        key, _, value = first[1:].strip().partition("=")
        if key.strip() != "kind":
            raise InputError(f"line 1: unexpected comment {first!r}")
        try:
            file_kind = GridKind(value.strip())
        except ValueError:
            raise InputError(f"line 1: unknown grid kind {value!r}") from None
    offset = 1 if file_kind is not None else 0
    kind = kind or file_kind or GridKind.BAYES
    est = np.full((N_SECONDS, N_LEADS), np.nan)
    N = np.zeros((N_SECONDS, N_LEADS), dtype=np.int64)
    n = np.zeros_like(N)
    seen = np.zeros((N_SECONDS, N_LEADS), dtype=bool)
    for lineno, (t, lead, e, cN, cn) in read_rows(io.StringIO(text), GRID_HEADER):
        lineno += offset
        ti, li = _int(t, lineno, "t"), _int(lead, lineno, "lead")
        if not (0 <= ti < N_SECONDS and -MAX_LEAD <= li <= MAX_LEAD):
            raise InputError(f"line {lineno}: cell ({ti}, {li}) outside the lattice")
        j = li + MAX_LEAD
        if seen[ti, j]:
            raise InputError(f"line {lineno}: duplicate cell ({ti}, {li})")
        seen[ti, j] = True
        if e:
            est[ti, j] = _float(e, lineno, "estimate")
        N[ti, j], n[ti, j] = _int(cN, lineno, "N"), _int(cn, lineno, "n")
    if not seen.all():
        t, j = np.argwhere(~seen)[0]
        raise InputError(f"grid file is missing cell ({t}, {j - MAX_LEAD})")
    try:
        return WinProbGrid(kind, est, N, n)
    except ValueError as exc:
        raise InputError(str(exc)) from None


# --- priors ------------------------------------------------------------------


def write_priors(table: PriorTable, path: str | os.PathLike) -> None:
    _write(
        path,
        PRIORS_HEADER,
        (f"{r.t_lo},{r.t_hi},{r.lead_lo},{r.lead_hi},{fmt(r.alpha)},{fmt(r.beta)}" for r in table),
    )


def read_priors(path: Source) -> PriorTable:
    rows = []
    for lineno, f in read_rows(path, PRIORS_HEADER):
        ints = [_int(v, lineno, name) for v, name in zip(f[:4], PRIORS_HEADER)]
        rows.append(PriorRow(*ints, _float(f[4], lineno, "alpha"), _float(f[5], lineno, "beta")))
    try:
        return PriorTable(rows)
    except ValueError as exc:
        raise InputError(str(exc)) from None


# --- weights and fit reports -------------------------------------------------


def write_weights(model: WeightModel, path: str | os.PathLike) -> None:
    fam = model.family.value
    _write(path, WEIGHTS_HEADER, (f"{fam},{k},{fmt(v)}" for k, v in model.as_dict().items()))


def read_weights(path: Source) -> WeightModel:
    family = None
    values: dict[str, float] = {}
    for lineno, (fam, name, value) in read_rows(path, WEIGHTS_HEADER):
        f = WeightFamily.parse(fam)
        if family is not None and f is not family:
            raise InputError(f"line {lineno}: mixed weight families {family.value} and {f.value}")
        family = f
        if name not in f.names:
            raise InputError(f"line {lineno}: {name!r} is not a {f.value} coefficient")
        values[name] = _float(value, lineno, name)
    if family is None:
        raise InputError("weights file has no rows")
    missing = [k for k in family.names if k not in values]
    if missing:
        raise InputError(f"weights file lacks {family.value} coefficient(s) {', '.join(missing)}")
    return WeightModel(family, tuple(values[k] for k in family.names))


def write_fit_report(result: FitResult, path: str | os.PathLike) -> None:
    r = result
    _write(path, FIT_HEADER, [f"{r.model.family.value},{fmt(r.brier)},{str(r.converged).lower()},{r.iterations}"])


@dataclass(frozen=True)
class FitSummary:
    family: WeightFamily
    brier: float
    converged: bool
    iterations: int


def read_fit_report(path: Source) -> FitSummary:
    rows = list(read_rows(path, FIT_HEADER))
    if len(rows) != 1:
        raise InputError("fit report must contain exactly one row")
    lineno, (fam, brier, conv, it) = rows[0]
    if conv not in ("true", "false"):
        raise InputError(f"line {lineno}: converged must be true/false")
    return FitSummary(WeightFamily.parse(fam), _float(brier, lineno, "brier"), conv == "true", _int(it, lineno, "iterations"))


# --- evaluation reports ------------------------------------------------------


def report_header(checkpoints: Sequence[int]) -> tuple[str, ...]:
    return REPORT_FIXED + tuple(f"ckpt{c}" for c in checkpoints) + ("note",)


def write_report(report: EvaluationReport, path: str | os.PathLike) -> None:
    def lines():
        for r in report.rows:
            cks = [fmt(r.checkpoints.get(c)) for c in report.checkpoints]
            Q = "" if r.Q is None else str(r.Q)
            yield ",".join([_csv_cell(r.model), fmt(r.overall_brier), Q, *cks, _csv_cell(r.note)])

    _write(path, report_header(report.checkpoints), lines())


def _csv_cell(text: str) -> str:
    if any(ch in text for ch in ',"\n\r'):
        return '"' + text.replace('"', '""') + '"'
    return text


def read_report(path: Source) -> EvaluationReport:
    text = _text(path)
    first = text.split("\n", 1)[0].strip().split(",")
    cks = []
    for name in first[len(REPORT_FIXED) : -1]:
        if not name.startswith("ckpt"):
            raise InputError(f"line 1: unexpected report column {name!r}")
        cks.append(_int(name[4:], 1, "checkpoint"))
    header = report_header(cks)
    rows = []
    for lineno, f in read_rows(io.StringIO(text), header):
        model, overall, Q = f[0], f[1], f[2]
        scores = {c: (_float(v, lineno, f"ckpt{c}") if v else None) for c, v in zip(cks, f[3:-1])}
        rows.append(
            ReportRow(
                model,
                _float(overall, lineno, "overall_brier") if overall else None,
                _int(Q, lineno, "Q") if Q else None,
                scores,
                f[-1],
            )
        )
    return EvaluationReport(tuple(cks), tuple(rows))


# --- trajectories ------------------------------------------------------------


def write_trajectory(traj: Trajectory, path: str | os.PathLike) -> None:
    labels = list(traj.columns)
    cols = [traj.columns[k] for k in labels]
    lines = (
        ",".join([str(t), str(int(traj.leads[t]))] + [fmt(c[t]) for c in cols]) for t in range(N_SECONDS)
    )
    _write(path, ["t", "lead", *labels], lines)


def read_trajectory(path: Source, game_id: str = "") -> Trajectory:
    text = _text(path)
    header = tuple(text.split("\n", 1)[0].strip().split(","))
    if header[:2] != ("t", "lead"):
        raise InputError("line 1: trajectory header must start with t,lead")
    labels = header[2:]
    leads = np.zeros(N_SECONDS, dtype=np.int64)
    cols = {k: np.full(N_SECONDS, np.nan) for k in labels}
    expected = 0
    for lineno, f in read_rows(io.StringIO(text), header):
        t = _int(f[0], lineno, "t")
        if t != expected:
            raise InputError(f"line {lineno}: expected t={expected}, got {t}")
        expected += 1
        leads[t] = _int(f[1], lineno, "lead")
        for k, v in zip(labels, f[2:]):
            if v:
                cols[k][t] = _float(v, lineno, k)
    if expected != N_SECONDS:
        raise InputError(f"trajectory has {expected} rows, expected {N_SECONDS}")
    return Trajectory(game_id, leads, cols)


# --- games (canonical plays CSV) and pregame probabilities --------------------


def game_events(game: GameRecord) -> list[tuple[int, int, int]]:
    """(elapsed_seconds, home_score, away_score) rows reproducing ``game``.

    Scores are rebuilt from lead changes; a tip-off row is always present and
    an overtime row at t=2880 is added when the regulation lead alone does not
    give the recorded outcome.
    """
    s = game.lead_series
    rows = [(0, 0, 0)]
    home = away = 0
    for t in np.flatnonzero(np.diff(s)) + 1:
        d = int(s[t] - s[t - 1])
        if d > 0:
            home += d
        else:
            away -= d
        rows.append((int(t), home, away))
    final = int(s[-1])
    if game.home_win and final <= 0:
        rows.append((N_SECONDS, home - final + 1, away))
    elif not game.home_win and final >= 0:
        rows.append((N_SECONDS, home, away + final + 1))
    return rows


def games_csv(games: Sequence[GameRecord]) -> str:
    buf = io.StringIO()
    buf.write(",".join(PLAYS_HEADER) + "\n")
    for g in games:
        for t, h, a in game_events(g):
            buf.write(f"{g.game_id},{t},{h},{a}\n")
    return buf.getvalue()


def write_games(games: Sequence[GameRecord], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(games_csv(games))


def read_games(path: Source, pregame: Source | None = None) -> list[GameRecord]:
    return load_games(path, pregame)


def write_pregame(probs: Mapping[str, float], path: str | os.PathLike) -> None:
    _write(path, PREGAME_HEADER, (f"{gid},{fmt(p)}" for gid, p in probs.items()))


def read_pregame(path: Source) -> dict[str, float]:
    return parse_pregame(path)
