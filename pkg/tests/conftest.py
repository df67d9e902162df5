"""Shared builders for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from somnogray.core import EpochGrid, Hypnodensity, Hypnogram, ScorerPanel


def grid(n: int, rid: str = "rec") -> EpochGrid:
    return EpochGrid(epoch_count=n, recording_id=rid)


def hypnodensity(rows, rid: str = "rec") -> Hypnodensity:
    rows = np.asarray(rows, dtype=np.float64)
    return Hypnodensity(grid(rows.shape[0], rid), rows)


def hypnogram(stages, uncertain=None, rid: str = "rec") -> Hypnogram:
    stages = np.asarray(stages, dtype=np.int8)
    return Hypnogram(grid(stages.size, rid), stages, uncertain)


def panel_from_votes(vote_rows, flags=None, rid: str = "rec") -> ScorerPanel:
    """Build a panel from per-epoch vote lists.

    vote_rows[e] is the list of stage codes cast at epoch e, one per
    scorer; all rows must have the same scorer count. flags, if given,
    mirrors that shape with booleans.
    """
    n_scorers = len(vote_rows[0])
    g = grid(len(vote_rows), rid)
    scorers = []
    for s in range(n_scorers):
        stages = np.array([row[s] for row in vote_rows], dtype=np.int8)
        unc = None
        if flags is not None:
            unc = np.array([bool(row[s]) for row in flags], dtype=bool)
        scorers.append((f"s{s:02d}", Hypnogram(g, stages, unc)))
    return ScorerPanel(g, tuple(scorers))


@pytest.fixture
def rng():
    return np.random.default_rng(0)


# acceptance criteria summary: tests marked @pytest.mark.acceptance("...")
# contribute one PASS/FAIL line to the end-of-run report

_acceptance_results: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "acceptance(name): named acceptance criterion for the summary table"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    name = marker.args[0]
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _acceptance_results.append((name, report.outcome))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in _acceptance_results:
        word = "PASS" if outcome == "passed" else outcome.upper()
        terminalreporter.write_line(f"{word:6s} {name}")
