"""Deterministic election generators for experiments and sweeps.

Three synthetic families plus a directory-backed corpus:

* ``uniform-random``: every voter is an i.i.d. uniform permutation.
* ``single-peaked-line``: candidates sit at evenly spaced points of [0, 1],
  voters at uniform random points, and each voter ranks candidates by
  distance (ties toward the earlier candidate in ballot order), giving
  single-peaked profiles.
* ``cycle-family``: voter i votes the i-th rotation of the candidate list;
  with n = m every pairwise margin generalizes the classic 3-cycle.

All draws run through numpy's PCG64 generator seeded explicitly, so equal
seeds reproduce equal elections.
"""

from __future__ import annotations

import string
from pathlib import Path

import numpy as np

from .elections import Candidate, Election, election_from_file, make_election

__all__ = [
    "FAMILIES",
    "candidate_names",
    "line_ranking",
    "generate_election",
    "load_corpus",
]

FAMILIES = ("uniform-random", "single-peaked-line", "cycle-family", "file-corpus")


def candidate_names(m: int) -> tuple[Candidate, ...]:
    """m short names: letters while they last, then c26, c27, ..."""
    if m < 1:
        raise ValueError("m must be >= 1")
    letters = string.ascii_lowercase
    return tuple(letters[i] if i < len(letters) else f"c{i}" for i in range(m))


def line_ranking(positions: dict, voter_pos: float,
                 candidates: tuple) -> tuple:
    """Ranking by distance from ``voter_pos``, ties toward earlier candidates."""
    order = {c: i for i, c in enumerate(candidates)}
    return tuple(sorted(candidates, key=lambda c: (abs(positions[c] - voter_pos), order[c])))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, (int, np.random.SeedSequence)):
        return np.random.Generator(np.random.PCG64(seed))
    raise TypeError("seed must be an int, SeedSequence, or Generator")


def generate_election(family: str, n: int, m: int, seed,
                      path: str | None = None) -> Election:
    """One election from the named family; deterministic in ``seed``.

    ``file-corpus`` ignores n and m and picks the (seed mod count)-th file of
    the directory at ``path`` in sorted name order.
    """
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}; choose from {FAMILIES}")
    if family == "file-corpus":
        if path is None:
            raise ValueError("file-corpus needs a directory path")
        files = sorted(Path(path).glob("*.json"))
        if not files:
            raise ValueError(f"no .json elections under {path}")
        index = seed if isinstance(seed, int) else 0
        return election_from_file(files[index % len(files)])
    if n < 1 or m < 1:
        raise ValueError("n and m must be >= 1")
    cands = candidate_names(m)

    if family == "cycle-family":
        rankings = [cands[i % m :] + cands[: i % m] for i in range(n)]
        return make_election(cands, rankings)

    rng = _rng(seed)
    if family == "uniform-random":
        rankings = [
            tuple(cands[j] for j in rng.permutation(m)) for _ in range(n)
        ]
        return make_election(cands, rankings)

    # single-peaked-line
    positions = {c: (i / (m - 1) if m > 1 else 0.5) for i, c in enumerate(cands)}
    rankings = [
        line_ranking(positions, float(rng.random()), cands) for _ in range(n)
    ]
    return make_election(cands, rankings)


def load_corpus(path: str) -> list[Election]:
    """Every *.json election under ``path``, in sorted file-name order."""
    files = sorted(Path(path).glob("*.json"))
    if not files:
        raise ValueError(f"no .json elections under {path}")
    return [election_from_file(f) for f in files]
