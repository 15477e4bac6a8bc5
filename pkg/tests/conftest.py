from __future__ import annotations

import warnings

import numpy as np
import pytest

from winprob.domain import N_SECONDS, GameRecord, LeadJumpWarning
from winprob.simgen import SimConfig, simulate_games


def step_game(game_id: str, changes: dict[int, int], home_win: bool, pregame: float | None = None) -> GameRecord:
    """Game whose lead jumps to ``changes[t]`` at second t and holds."""
    series = np.zeros(N_SECONDS, dtype=np.int64)
    for t in sorted(changes):
        series[t:] = changes[t]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", LeadJumpWarning)
        return GameRecord(game_id, series, home_win, pregame)


@pytest.fixture(scope="session")
def sim10() -> list[GameRecord]:
    return simulate_games(SimConfig(n_games=10, seed=11, pregame_mc=2000)).games


@pytest.fixture(scope="session")
def sim200() -> list[GameRecord]:
    return simulate_games(SimConfig(n_games=200, seed=5, strength_levels=(-0.3, 0.0, 0.3), pregame_mc=4000)).games


@pytest.fixture
def five_games() -> list[GameRecord]:
    return [
        step_game("A", {}, True, 0.6),
        step_game("B", {100: 3, 2000: -2, 2810: 4}, False, 0.4),
        step_game("C", {5: 2, 2700: 5, 2805: 3, 2815: 6}, True, 0.7),
        step_game("D", {2806: 4, 2812: 5}, True, 0.55),
        step_game("E", {50: -10, 1500: -20, 2870: -25}, False, 0.2),
    ]


#: (criterion, passed, summary) lines collected by tests/test_acceptance.py
ACCEPTANCE: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, text in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {text}")
