"""Ranked elections, pairwise margins, and lottery comparison primitives.

An election is a set of candidates plus weighted voters, each voter holding a
strict total order over the candidates.  Everything downstream (equilibrium
lotteries, sampling certificates, distortion measurement) is driven by a small
family of comparison statistics computed here:

* ``s(i, j)``: the weighted fraction of voters preferring candidate ``i`` to
  ``j``, with the stipulation ``s(j, j) = 1/2`` so that ``s(i, j) + s(j, i) = 1``
  holds for every pair.
* ``s(I, j)``: the fraction preferring *every* member of the set ``I`` to ``j``.
* bilinear lottery-vs-lottery margins, multiset-vs-multiset wins, and the
  probability that a fixed candidate beats ``k`` independent draws from a
  lottery (with ties sharing credit uniformly).

All margin arithmetic is exact over ``fractions.Fraction``; lotteries may carry
exact rational or float weights and the comparison routines follow suit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Mapping, Sequence, Union

Candidate = str
Weight = Union[Fraction, float]

__all__ = [
    "Candidate",
    "Voter",
    "Election",
    "MarginMatrix",
    "Lottery",
    "Multiset",
    "make_election",
    "margin_matrix",
    "margin_set_vs_candidate",
    "margin_lottery_vs_lottery",
    "multiset_beats",
    "candidate_beats_power",
    "rational_to_json",
    "rational_from_json",
    "election_to_json",
    "election_from_json",
    "election_to_file",
    "election_from_file",
]

FLOAT_SUPPORT_EPS = 1e-9  # support membership threshold for float-weight lotteries


def rational_to_json(q: Fraction) -> dict:
    """Encode an exact rational as ``{"num": ..., "den": ...}``."""
    return {"num": q.numerator, "den": q.denominator}


def rational_from_json(obj) -> Fraction:
    if isinstance(obj, Mapping) and "num" in obj and "den" in obj:
        return Fraction(obj["num"], obj["den"])
    if isinstance(obj, int):
        return Fraction(obj)
    raise ValueError(f"not a rational encoding: {obj!r}")


@dataclass(frozen=True)
class Voter:
    """A weighted voter with a strict ranking, most preferred first."""

    ranking: tuple[Candidate, ...]
    weight: int = 1

    def __post_init__(self):
        if self.weight <= 0:
            raise ValueError(f"voter weight must be positive, got {self.weight}")
        if len(set(self.ranking)) != len(self.ranking):
            raise ValueError(f"ranking repeats a candidate: {self.ranking}")

    def prefers(self, i: Candidate, j: Candidate) -> bool:
        """True when this voter ranks ``i`` strictly above ``j``."""
        return self.ranking.index(i) < self.ranking.index(j)


@dataclass(frozen=True)
class Election:
    candidates: tuple[Candidate, ...]
    voters: tuple[Voter, ...]

    def __post_init__(self):
        if not self.candidates:
            raise ValueError("election needs at least one candidate")
        if len(set(self.candidates)) != len(self.candidates):
            raise ValueError("duplicate candidate names")
        if not self.voters:
            raise ValueError("election needs at least one voter")
        cset = set(self.candidates)
        for v in self.voters:
            if set(v.ranking) != cset:
                raise ValueError(
                    f"voter ranking {v.ranking} is not a permutation of the candidates"
                )

    @property
    def n(self) -> int:
        """Total voter weight."""
        return sum(v.weight for v in self.voters)

    @property
    def m(self) -> int:
        return len(self.candidates)

    def index(self, c: Candidate) -> int:
        return self.candidates.index(c)


def make_election(candidates: Sequence[Candidate], rankings: Iterable[Sequence[Candidate]],
                  weights: Sequence[int] | None = None) -> Election:
    """Convenience constructor from plain lists."""
    rankings = [tuple(r) for r in rankings]
    if weights is None:
        weights = [1] * len(rankings)
    voters = tuple(Voter(r, w) for r, w in zip(rankings, weights))
    return Election(tuple(candidates), voters)


@lru_cache(maxsize=4096)
def _positions(e: Election) -> tuple[dict, ...]:
    """Per voter, candidate -> rank index (0 = most preferred)."""
    return tuple({c: i for i, c in enumerate(v.ranking)} for v in e.voters)


@dataclass(frozen=True)
class MarginMatrix:
    """Exact pairwise margins ``s(i, j)`` with the 1/2 diagonal stipulation."""

    candidates: tuple[Candidate, ...]
    entries: tuple[tuple[Fraction, ...], ...]

    def s(self, i: Candidate, j: Candidate) -> Fraction:
        return self.entries[self.candidates.index(i)][self.candidates.index(j)]

    def as_nested_dict(self) -> dict:
        return {
            ci: {cj: self.entries[a][b] for b, cj in enumerate(self.candidates)}
            for a, ci in enumerate(self.candidates)
        }

    def to_json(self) -> dict:
        return {
            "candidates": list(self.candidates),
            "margins": [[rational_to_json(x) for x in row] for row in self.entries],
        }


@lru_cache(maxsize=4096)
def margin_matrix(e: Election) -> MarginMatrix:
    """All pairwise margins of ``e``; denominators always divide the total weight."""
    n = e.n
    pos = _positions(e)
    rows = []
    for i in e.candidates:
        row = []
        for j in e.candidates:
            if i == j:
                row.append(Fraction(1, 2))
                continue
            count = sum(v.weight for v, p in zip(e.voters, pos) if p[i] < p[j])
            row.append(Fraction(count, n))
        rows.append(tuple(row))
    return MarginMatrix(e.candidates, tuple(rows))


def margin_set_vs_candidate(e: Election, group: Iterable[Candidate], j: Candidate) -> Fraction:
    """Weighted fraction of voters preferring every member of ``group`` to ``j``.

    Stipulated 0 when ``j`` is a member; an empty group is vacuously preferred
    by everyone.
    """
    group = set(group)
    if not group <= set(e.candidates) or j not in e.candidates:
        raise ValueError("group or comparison candidate not in the election")
    if j in group:
        return Fraction(0)
    if not group:
        return Fraction(1)
    pos = _positions(e)
    count = sum(
        v.weight
        for v, p in zip(e.voters, pos)
        if all(p[i] < p[j] for i in group)
    )
    return Fraction(count, e.n)


@dataclass(frozen=True)
class Lottery:
    """A probability distribution over candidates.

    Weights are either all exact rationals (then they must sum to exactly 1)
    or all floats (summing to 1 within 1e-9).  Exact lotteries use strict
    positivity for support membership; float lotteries use a 1e-9 floor.
    """

    weights: Mapping[Candidate, Weight] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "weights", dict(self.weights))
        vals = list(self.weights.values())
        if not vals:
            raise ValueError("lottery must place weight somewhere")
        exact = all(isinstance(w, Rational) for w in vals)
        if exact:
            normalized = {c: Fraction(w) for c, w in self.weights.items()}
            if any(w < 0 for w in normalized.values()):
                raise ValueError("negative lottery weight")
            if sum(normalized.values()) != 1:
                raise ValueError("exact lottery weights must sum to exactly 1")
            object.__setattr__(self, "weights", normalized)
        else:
            fl = {c: float(w) for c, w in self.weights.items()}
            if any(w < -1e-12 for w in fl.values()):
                raise ValueError("negative lottery weight")
            total = sum(fl.values())
            if abs(total - 1.0) > 1e-9:
                raise ValueError(f"float lottery weights sum to {total}, not 1")
            object.__setattr__(self, "weights", {c: max(w, 0.0) for c, w in fl.items()})
        object.__setattr__(self, "is_exact", exact)

    is_exact: bool = field(init=False, compare=False, default=True)

    def prob(self, c: Candidate) -> Weight:
        return self.weights.get(c, Fraction(0) if self.is_exact else 0.0)

    def support(self) -> tuple[Candidate, ...]:
        if self.is_exact:
            return tuple(c for c, w in self.weights.items() if w > 0)
        return tuple(c for c, w in self.weights.items() if w >= FLOAT_SUPPORT_EPS)

    @staticmethod
    def point(c: Candidate) -> "Lottery":
        return Lottery({c: Fraction(1)})

    @staticmethod
    def uniform(cands: Sequence[Candidate]) -> "Lottery":
        k = len(cands)
        return Lottery({c: Fraction(1, k) for c in cands})

    def to_json(self) -> dict:
        if self.is_exact:
            return {"weights": {c: rational_to_json(w) for c, w in sorted(self.weights.items())}}
        return {"weights_f": {c: float(w) for c, w in sorted(self.weights.items())}}

    @staticmethod
    def from_json(obj: Mapping) -> "Lottery":
        if "weights" in obj:
            return Lottery({c: rational_from_json(w) for c, w in obj["weights"].items()})
        if "weights_f" in obj:
            return Lottery({c: float(w) for c, w in obj["weights_f"].items()})
        raise ValueError("lottery JSON needs 'weights' or 'weights_f'")


@dataclass(frozen=True)
class Multiset:
    """A multiset of candidates, stored as multiplicity counts."""

    counts: Mapping[Candidate, int] = field(default_factory=dict)

    def __post_init__(self):
        cleaned = {c: int(k) for c, k in self.counts.items() if k != 0}
        if any(k < 0 for k in cleaned.values()):
            raise ValueError("negative multiplicity")
        if not cleaned:
            raise ValueError("multiset must be nonempty")
        object.__setattr__(self, "counts", cleaned)

    @property
    def size(self) -> int:
        return sum(self.counts.values())

    def count(self, c: Candidate) -> int:
        return self.counts.get(c, 0)

    def induced_lottery(self) -> Lottery:
        total = self.size
        return Lottery({c: Fraction(k, total) for c, k in self.counts.items()})

    @staticmethod
    def from_elements(elements: Iterable[Candidate]) -> "Multiset":
        counts: dict[Candidate, int] = {}
        for c in elements:
            counts[c] = counts.get(c, 0) + 1
        return Multiset(counts)

    def to_json(self) -> dict:
        return {"counts": dict(sorted(self.counts.items()))}


def margin_lottery_vs_lottery(e: Election, d1: Lottery, d2: Lottery) -> Weight:
    """Bilinear extension of the margins: sum of p1(i) p2(j) s(i, j)."""
    s = margin_matrix(e)
    exact = d1.is_exact and d2.is_exact
    total: Weight = Fraction(0) if exact else 0.0
    for i, pi in d1.weights.items():
        if pi == 0:
            continue
        for j, qj in d2.weights.items():
            if qj == 0:
                continue
            sij = s.s(i, j)
            total += (pi * qj * sij) if exact else float(pi) * float(qj) * float(sij)
    return total


def multiset_beats(e: Election, a: Multiset, b: Multiset) -> Fraction:
    """Probability (over a weighted random voter) that multiset ``a`` beats ``b``.

    A voter compares the two multisets by their single most preferred element
    of the combined pool; if both sides hold copies of that element, the win
    probability splits proportionally to the copy counts.
    """
    pos = _positions(e)
    total = Fraction(0)
    for v, p in zip(e.voters, pos):
        pool = set(a.counts) | set(b.counts)
        x = min(pool, key=lambda c: p[c])
        na, nb = a.count(x), b.count(x)
        total += Fraction(v.weight * na, na + nb)
    return total / e.n


def _mass_below_and_at(e: Election, a: Candidate, d: Lottery, exact: bool):
    """Per voter: lottery mass strictly below ``a`` and the mass on ``a`` itself."""
    pos = _positions(e)
    out = []
    t = d.prob(a)
    t = t if exact else float(t)
    for p in pos:
        pa = p[a]
        w: Weight = Fraction(0) if exact else 0.0
        for c, mass in d.weights.items():
            if c != a and p[c] > pa:
                w += mass if exact else float(mass)
        out.append((w, t))
    return out


def candidate_beats_power(e: Election, a: Candidate, d: Lottery, k: int) -> Weight:
    """Probability that ``a`` beats a multiset of ``k`` i.i.d. draws from ``d``.

    For a single voter, with ``w`` the lottery mass strictly below ``a`` and
    ``t`` the mass on ``a``, the win probability is
    ``((w+t)^(k+1) - w^(k+1)) / ((k+1) t)`` when ``t > 0`` and ``w^k``
    otherwise: each of the ``j`` drawn copies of ``a`` dilutes the win to
    ``1/(j+1)``, and summing the binomial series in ``j`` telescopes.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if a not in e.candidates:
        raise ValueError(f"unknown candidate {a!r}")
    exact = d.is_exact
    per_voter = _mass_below_and_at(e, a, d, exact)
    total: Weight = Fraction(0) if exact else 0.0
    for v, (w, t) in zip(e.voters, per_voter):
        if t > 0:
            val = ((w + t) ** (k + 1) - w ** (k + 1)) / ((k + 1) * t)
        else:
            val = w ** k
        total += v.weight * val
    return total / e.n if exact else total / float(e.n)


# ---------------------------------------------------------------------------
# JSON serialization of elections


def election_to_json(e: Election) -> dict:
    return {
        "candidates": list(e.candidates),
        "voters": [{"ranking": list(v.ranking), "weight": v.weight} for v in e.voters],
    }


def election_from_json(obj: Mapping) -> Election:
    try:
        candidates = tuple(obj["candidates"])
        voters = tuple(
            Voter(tuple(v["ranking"]), int(v.get("weight", 1))) for v in obj["voters"]
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed election JSON: {exc}") from exc
    return Election(candidates, voters)


def election_to_file(e: Election, path: str) -> None:
    with open(path, "w") as fh:
        json.dump(election_to_json(e), fh, indent=2, sort_keys=True)
        fh.write("\n")


def election_from_file(path: str) -> Election:
    with open(path) as fh:
        return election_from_json(json.load(fh))
