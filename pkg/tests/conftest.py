"""Shared fixtures: the 500-election corpus and a few hand-built instances."""

from __future__ import annotations

import pytest
from hypothesis import settings

from lotdist import Election, make_election, maximal_lottery
from lotdist.generators import generate_election

# LP-backed properties can take a while per example; hypothesis should not
# flag them as flaky for it.
settings.register_profile("suite", deadline=None, max_examples=60)
settings.load_profile("suite")


CORPUS_SEEDS = 498


def _seeded(seed: int) -> Election:
    n = 3 + seed % 5
    m = 3 + (seed // 5) % 4
    return generate_election("uniform-random", n, m, seed)


@pytest.fixture(scope="session")
def cycle3() -> Election:
    return make_election(
        ["a", "b", "c"],
        [["a", "b", "c"], ["b", "c", "a"], ["c", "a", "b"]],
    )


@pytest.fixture(scope="session")
def split2() -> Election:
    return make_election(["a", "b"], [["a", "b"], ["b", "a"]])


@pytest.fixture(scope="session")
def tied_mirror() -> Election:
    """Two voter blocks with exactly opposite orders; all margins are 1/2.

    Every lottery is then an equilibrium of the margin game, and a point-mass
    output sits right at the deterministic distortion floor of 3.
    """
    return make_election(
        ["a", "b", "c"],
        [["a", "b", "c"], ["a", "b", "c"], ["c", "b", "a"], ["c", "b", "a"]],
    )


@pytest.fixture(scope="session")
def corpus(cycle3, tied_mirror) -> list[Election]:
    """498 seeded random elections (n in 3..7, m in 3..6) plus two crafted."""
    elections = [_seeded(seed) for seed in range(CORPUS_SEEDS)]
    elections.append(cycle3)
    elections.append(tied_mirror)
    return elections


@pytest.fixture(scope="session")
def corpus_lotteries(corpus) -> list:
    """Maximal Lottery of every corpus election, solved once per session."""
    return [maximal_lottery(e) for e in corpus]
