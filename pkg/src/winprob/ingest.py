"""Parsers for play-by-play, pregame, survey and external-trajectory CSV files.

All parsers accept a path, raw ``bytes``/``str`` content, or an open file
object. Malformed rows raise :class:`~winprob.domain.InputError` naming the
line; recoverable problems are reported with :mod:`warnings`.
"""

from __future__ import annotations

import csv
import io
import math
import os
import warnings
from collections import defaultdict
from dataclasses import dataclass
from typing import IO, Iterable, Iterator, Union

import numpy as np

from .domain import (
    N_SECONDS,
    GameRecord,
    IngestWarning,
    InputError,
    clamp_lead,
)

Source = Union[str, bytes, os.PathLike, IO[str], IO[bytes]]

PLAYS_HEADER = ("game_id", "elapsed_seconds", "home_score", "away_score")
PREGAME_HEADER = ("game_id", "home_win_prob")
SURVEY_HEADER = ("time_bucket", "lead_bucket", "respondent_id", "win_prob")
TRAJECTORY_HEADER = ("game_id", "elapsed_seconds", "home_win_prob")


@dataclass(frozen=True)
class PlayEvent:
    game_id: str
    elapsed_seconds: int
    home_score: int
    away_score: int

    @property
    def lead(self) -> int:
        return self.home_score - self.away_score


@dataclass(frozen=True)
class SurveyResponse:
    time_bucket: str
    lead_bucket: str
    respondent_id: str
    win_prob: float


def _text(source: Source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8")
    if isinstance(source, (str, os.PathLike)):
        with open(source, encoding="utf-8", newline="") as fh:
            return fh.read()
    data = source.read()
    return data.decode("utf-8") if isinstance(data, bytes) else data


def read_rows(source: Source, header: tuple[str, ...]) -> Iterator[tuple[int, list[str]]]:
    """Yield ``(line_number, fields)`` after checking the header exactly."""
    reader = csv.reader(io.StringIO(_text(source)))
    try:
        first = next(reader)
    except StopIteration:
        raise InputError(f"line 1: empty file, expected header {','.join(header)}") from None
    if tuple(f.strip() for f in first) != header:
        raise InputError(f"line 1: expected header {','.join(header)}, got {','.join(first)}")
    for fields in reader:
        lineno = reader.line_num
        if not fields or all(not f.strip() for f in fields):
            continue
        if len(fields) != len(header):
            raise InputError(f"line {lineno}: expected {len(header)} fields, got {len(fields)}")
        yield lineno, [f.strip() for f in fields]


def _int(text: str, lineno: int, what: str, minimum: int | None = 0) -> int:
    try:
        value = int(text)
    except ValueError:
        raise InputError(f"line {lineno}: {what} {text!r} is not an integer") from None
    if minimum is not None and value < minimum:
        raise InputError(f"line {lineno}: {what} {value} is below {minimum}")
    return value


def _prob(text: str, lineno: int, *, closed: bool) -> float:
    try:
        p = float(text)
    except ValueError:
        raise InputError(f"line {lineno}: probability {text!r} is not a number") from None
    ok = 0.0 <= p <= 1.0 if closed else 0.0 < p < 1.0
    if not ok or math.isnan(p):
        interval = "[0, 1]" if closed else "(0, 1)"
        raise InputError(f"line {lineno}: probability {p} outside {interval}")
    return p


def parse_plays(source: Source) -> dict[str, list[PlayEvent]]:
    """Group scoring events by game, each group sorted (stably) by elapsed time.

    Games appear in order of first appearance in the file.
    """
    games: dict[str, list[PlayEvent]] = {}
    for lineno, (gid, t, hs, as_) in read_rows(source, PLAYS_HEADER):
        if not gid:
            raise InputError(f"line {lineno}: empty game_id")
        event = PlayEvent(
            gid,
            _int(t, lineno, "elapsed_seconds"),
            _int(hs, lineno, "home_score"),
            _int(as_, lineno, "away_score"),
        )
        games.setdefault(gid, []).append(event)
    for gid, events in games.items():
        events.sort(key=lambda e: e.elapsed_seconds)
        for prev, cur in zip(events, events[1:]):
            if cur.home_score < prev.home_score or cur.away_score < prev.away_score:
                warnings.warn(
                    f"game {gid}: score decreases at elapsed_seconds={cur.elapsed_seconds}",
                    IngestWarning,
                    stacklevel=2,
                )
    return games


def derive_lead_series(
    events: list[PlayEvent],
    final_outcome: bool,
    pregame_home_prob: float | None = None,
) -> GameRecord:
    """Build the right-continuous per-second lead series for one game.

    The lead at second t is the lead after the last event at or before t;
    seconds before the first event are tied. Events past regulation are
    ignored here (they only decide the outcome).
    """
    if not events:
        raise InputError("a game needs at least one play event")
    gid = events[0].game_id
    times = np.array([e.elapsed_seconds for e in events], dtype=np.int64)
    if np.any(np.diff(times) < 0):
        raise InputError(f"game {gid}: events are not sorted by elapsed_seconds")
    leads = clamp_lead(np.array([e.lead for e in events], dtype=np.int64))
    # index of the last event with elapsed_seconds <= t (last-write-wins within a second)
    last = np.searchsorted(times, np.arange(N_SECONDS), side="right") - 1
    series = np.where(last >= 0, leads[np.maximum(last, 0)], 0)
    if series[0] != 0:
        raise InputError(f"game {gid}: nonzero lead {series[0]} at t=0")
    return GameRecord(gid, series, final_outcome, pregame_home_prob)


def final_outcome(events: list[PlayEvent]) -> bool:
    """Home win from the final score of the last event (overtime included)."""
    last = events[-1]
    if last.home_score == last.away_score:
        raise InputError(f"game {last.game_id}: final score is tied; cannot label outcome")
    return last.home_score > last.away_score


def games_from_plays(
    plays: dict[str, list[PlayEvent]],
    pregame: dict[str, float] | None = None,
) -> list[GameRecord]:
    pregame = pregame or {}
    return [
        derive_lead_series(events, final_outcome(events), pregame.get(gid))
        for gid, events in plays.items()
    ]


def load_games(plays: Source, pregame: Source | None = None) -> list[GameRecord]:
    """Parse a plays CSV (and optional pregame CSV) into game records."""
    probs = parse_pregame(pregame) if pregame is not None else None
    return games_from_plays(parse_plays(plays), probs)


def parse_pregame(source: Source) -> dict[str, float]:
    probs: dict[str, float] = {}
    for lineno, (gid, p) in read_rows(source, PREGAME_HEADER):
        if gid in probs:
            warnings.warn(f"line {lineno}: duplicate game_id {gid}; last row wins", IngestWarning, stacklevel=2)
        probs[gid] = _prob(p, lineno, closed=False)
    return probs


def parse_survey(source: Source) -> list[SurveyResponse]:
    """Parse expert survey rows; bucket labels must name a bundled prior-table row."""
    from .priors import TABLE1_BUCKETS

    out = []
    for lineno, (tb, lb, rid, p) in read_rows(source, SURVEY_HEADER):
        if (tb, lb) not in TABLE1_BUCKETS:
            raise InputError(f"line {lineno}: unknown bucket ({tb}, {lb})")
        out.append(SurveyResponse(tb, lb, rid, _prob(p, lineno, closed=False)))
    return out


def group_survey(responses: Iterable[SurveyResponse]) -> dict[tuple[str, str], list[float]]:
    groups: dict[tuple[str, str], list[float]] = defaultdict(list)
    for r in responses:
        groups[(r.time_bucket, r.lead_bucket)].append(r.win_prob)
    return dict(groups)


def parse_external_trajectory(source: Source) -> dict[tuple[str, int], float]:
    probs: dict[tuple[str, int], float] = {}
    for lineno, (gid, t, p) in read_rows(source, TRAJECTORY_HEADER):
        key = (gid, _int(t, lineno, "elapsed_seconds"))
        if key in probs:
            warnings.warn(f"line {lineno}: duplicate ({gid}, {key[1]}); last row wins", IngestWarning, stacklevel=2)
        probs[key] = _prob(p, lineno, closed=True)
    return probs
