import io

import numpy as np
import pytest

from winprob.domain import InputError, IngestWarning
from winprob.ingest import (
    PlayEvent,
    derive_lead_series,
    group_survey,
    load_games,
    parse_external_trajectory,
    parse_plays,
    parse_pregame,
    parse_survey,
)

PLAYS = "game_id,elapsed_seconds,home_score,away_score\n"


def test_single_row():
    games = parse_plays((PLAYS + "G1,10,2,0\n").encode())
    assert list(games) == ["G1"]
    (event,) = games["G1"]
    assert event.elapsed_seconds == 10 and event.lead == 2


def test_header_only():
    assert parse_plays(PLAYS.encode()) == {}


def test_interleaved_games_grouped_and_sorted():
    body = "\n".join(["G1,30,2,0", "G2,5,0,3", "G1,10,0,0", "G2,40,2,3", "G1,30,2,2", "G2,20,0,3"])
    games = parse_plays(io.StringIO(PLAYS + body + "\n"))
    # by hand: G1 -> t 10, 30, 30 (file order kept for the tie); G2 -> t 5, 20, 40
    assert [(e.elapsed_seconds, e.home_score, e.away_score) for e in games["G1"]] == [(10, 0, 0), (30, 2, 0), (30, 2, 2)]
    assert [(e.elapsed_seconds, e.lead) for e in games["G2"]] == [(5, -3), (20, -3), (40, -1)]


@pytest.mark.parametrize("row", ["G1,ten,0,0", "G1,10,0", "G1,-3,0,0", "G1,10,1.5,0", ",10,0,0"])
def test_malformed_row_names_line(row):
    with pytest.raises(InputError, match="line 3"):
        parse_plays((PLAYS + "G1,1,0,0\n" + row + "\n").encode())


def test_bad_header():
    with pytest.raises(InputError, match="header"):
        parse_plays(("game,t,h,a\nG1,1,0,0\n").encode())


def test_decreasing_score_warns():
    with pytest.warns(IngestWarning, match="decreases"):
        parse_plays((PLAYS + "G1,10,2,0\nG1,20,1,0\n").encode())


def test_series_single_event():
    g = derive_lead_series([PlayEvent("G", 10, 2, 0)], True)
    assert np.all(g.lead_series[:10] == 0)
    assert np.all(g.lead_series[10:] == 2)
    assert g.home_win is True


def test_series_last_write_wins():
    g = derive_lead_series([PlayEvent("G", 50, 1, 0), PlayEvent("G", 50, 3, 0)], True)
    assert g.lead_series[50] == 3
    assert g.lead_series[49] == 0


def test_series_clamped():
    events = [PlayEvent("G", 10 * k, 4 * k, 0) for k in range(1, 19)]  # lead reaches +72
    g = derive_lead_series(events, True)
    assert g.lead_series.max() == 58
    assert g.lead_series[-1] == 58
    raw = np.array([e.lead for e in events])
    assert int((raw > 58).sum()) > 0


def test_series_ignores_overtime_events():
    g = derive_lead_series([PlayEvent("G", 100, 2, 0), PlayEvent("G", 2885, 2, 5)], False)
    assert g.lead_series[-1] == 2
    assert g.home_win is False


def test_series_empty_events():
    with pytest.raises(InputError):
        derive_lead_series([], True)


def test_series_piecewise_constant():
    events = [PlayEvent("G", t, h, a) for t, h, a in [(3, 2, 0), (17, 2, 3), (17, 4, 3), (900, 4, 6), (2879, 7, 6)]]
    g = derive_lead_series(events, True)
    change_points = set(np.flatnonzero(np.diff(g.lead_series)) + 1)
    assert change_points <= {e.elapsed_seconds for e in events}
    assert derive_lead_series(events, True) == g


def test_load_games_labels_from_final_score():
    text = PLAYS + "G1,0,0,0\nG1,2879,10,10\nG1,2950,12,10\nG2,0,0,0\nG2,100,0,3\n"
    games = load_games(text.encode())
    assert [g.home_win for g in games] == [True, False]
    with pytest.raises(InputError, match="tied"):
        load_games((PLAYS + "G1,0,0,0\n").encode())


def test_pregame_parse():
    assert parse_pregame(b"game_id,home_win_prob\nG1,0.59\n") == {"G1": 0.59}


def test_pregame_duplicate_last_wins():
    with pytest.warns(IngestWarning):
        probs = parse_pregame(("game_id,home_win_prob\nG1,0.59\nG1,0.61\n").encode())
    assert probs == {"G1": 0.61}


@pytest.mark.parametrize("p", ["1.0", "0", "1.2", "nan"])
def test_pregame_rejects_boundary(p):
    with pytest.raises(InputError, match="line 2"):
        parse_pregame((f"game_id,home_win_prob\nG1,{p}\n").encode())


SURVEY = "time_bucket,lead_bucket,respondent_id,win_prob\n"


def test_survey_group_of_14():
    rows = "".join(f"361-720,10-19,R{i},0.{70 + i % 5}\n" for i in range(14))
    groups = group_survey(parse_survey((SURVEY + rows).encode()))
    assert list(groups) == [("361-720", "10-19")]
    assert len(groups[("361-720", "10-19")]) == 14


def test_survey_partial_response_allowed():
    rows = "".join(f"361-720,10-19,R{i},0.7\n" for i in range(14))
    rows += "".join(f"0-360,0-9,R{i},0.5\n" for i in range(13))
    groups = group_survey(parse_survey((SURVEY + rows).encode()))
    assert len(groups[("0-360", "0-9")]) == 13


@pytest.mark.parametrize("bucket", ["0-300,0-9", "0-360,10-19", "2821-2879,3,4"])
def test_survey_unknown_bucket(bucket):
    with pytest.raises(InputError):
        parse_survey((SURVEY + f"{bucket},R1,0.5\n").encode())


def test_survey_probability_range():
    with pytest.raises(InputError):
        parse_survey((SURVEY + "0-360,0-9,R1,1.0\n").encode())


TRAJ = "game_id,elapsed_seconds,home_win_prob\n"


def test_external_trajectory():
    assert parse_external_trajectory((TRAJ + "G1,0,0.55\n").encode()) == {("G1", 0): 0.55}


def test_external_sparse_no_fill():
    rows = "".join(f"G1,{t},0.5\n" for t in range(0, 2880, 10))
    probs = parse_external_trajectory((TRAJ + rows).encode())
    assert len(probs) == 288
    assert ("G1", 5) not in probs


def test_external_duplicate_last_wins():
    with pytest.warns(IngestWarning):
        probs = parse_external_trajectory((TRAJ + "G1,3,0.2\nG1,3,0.3\n").encode())
    assert probs[("G1", 3)] == 0.3


def test_external_accepts_closed_interval_rejects_outside():
    assert parse_external_trajectory((TRAJ + "G1,3,1.0\n").encode())[("G1", 3)] == 1.0
    with pytest.raises(InputError):
        parse_external_trajectory((TRAJ + "G1,3,1.01\n").encode())
