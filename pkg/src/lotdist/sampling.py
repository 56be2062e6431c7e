"""Sampling-based approximation certificates for equilibrium lotteries.

The two sampling boxes draw q i.i.d. candidates from an exact equilibrium
lottery and use the uniform distribution over the drawn multiset as a
compact surrogate.  A surrogate D is an eps-representative approximation
("RepApx") of the base when

* Supp(D) is contained in Supp(base), and
* max over candidates a of Pr[a beats D^k] <= 1/(k+1) + eps
  (k = 1 recovers the margin condition s(a, D) <= 1/2 + eps).

Sample sizes follow the DKW/Massart-style bounds: q = ceil(pi/8 * eps^-2)
for the k = 1 margin form and q = ceil(pi/2 * k^2 * eps^-2) in general.
Drawing q samples makes the uniform surrogate a (1+gamma)*eps certificate
with probability at least gamma/(1+gamma), so repeated sampling succeeds
quickly; the checker itself runs in exact rational arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

import numpy as np

from .elections import Election, Lottery, Multiset, candidate_beats_power
from .lotteries import as_exact_lottery

__all__ = [
    "RepApxCertificate",
    "RepApxSamplingError",
    "sample_size_ml",
    "sample_size_sl",
    "empirical_sampling",
    "check_repapx",
    "sample_until_repapx",
]

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


def sample_size_ml(epsilon: float) -> int:
    """Draw count for the margin (k=1) box: ceil(pi/8 / epsilon^2)."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0,1), got {epsilon}")
    return math.ceil(math.pi / 8.0 / (epsilon * epsilon))

def sample_size_sl(epsilon: float, k: int) -> int:
    """Draw count for the k-draw box: ceil(pi/2 * k^2 / epsilon^2)."""
    if not 0 < epsilon < 1:
        raise ValueError(f"epsilon must lie in (0,1), got {epsilon}")
    if k < 1:
        raise ValueError("k must be >= 1")
    return math.ceil(math.pi / 2.0 * k * k / (epsilon * epsilon))


def _rng(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def empirical_sampling(e: Election, base: Lottery, q: int, seed: SeedLike) -> Multiset:
    """Multiset of q i.i.d. draws from ``base``, deterministic given the seed.

    Inversion sampling against exact cumulative weights: each uniform variate
    is converted to an exact rational before comparison, so float base
    lotteries sample without re-normalization drift and identical seeds give
    identical multisets on any platform.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    rng = _rng(seed)
    cands = [c for c in e.candidates if c in base.weights]
    cum = []
    acc = Fraction(0)
    for c in cands:
        acc += Fraction(base.weights[c])
        cum.append(acc)
    total = acc
    counts: dict[str, int] = {}
    for u in rng.random(q):
        x = Fraction(float(u)) * total
        for c, bound in zip(cands, cum):
            if x < bound:
                counts[c] = counts.get(c, 0) + 1
                break
        else:  # u rounded to >= 1 cannot happen; guard anyway
            counts[cands[-1]] = counts.get(cands[-1], 0) + 1
    return Multiset(counts)


@dataclass(frozen=True)
class RepApxCertificate:
    """Outcome of checking the representative-approximation conditions."""

    distribution: Lottery
    base: Lottery
    epsilon: float
    k: int
    achieved: float
    support_ok: bool
    valid: bool
    attempts: int = 0

    def to_json(self) -> dict:
        return {
            "distribution": self.distribution.to_json(),
            "base": self.base.to_json(),
            "epsilon": self.epsilon,
            "k": self.k,
            "achieved": self.achieved,
            "support_ok": self.support_ok,
            "valid": self.valid,
            "attempts": self.attempts,
        }


class RepApxSamplingError(RuntimeError):
    """Sampling loop exhausted max_attempts; carries the best failed attempt."""

    def __init__(self, message: str, best: RepApxCertificate):
        super().__init__(message)
        self.best = best


def check_repapx(e: Election, d: Lottery, base: Lottery, k: int,
                 epsilon: float, attempts: int = 0) -> RepApxCertificate:
    """Exact check of the two RepApx conditions for ``d`` against ``base``.

    The value condition max_a Pr[a beats d^k] <= 1/(k+1) + epsilon is decided
    in rational arithmetic (epsilon enters as the exact value of its double),
    so ``valid`` is never a rounding artifact.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    support_ok = set(d.support()) <= set(base.support())
    dx = as_exact_lottery(d)
    worst = max(candidate_beats_power(e, a, dx, k) for a in e.candidates)
    bound = Fraction(1, k + 1) + Fraction(epsilon)
    return RepApxCertificate(
        distribution=d,
        base=base,
        epsilon=float(epsilon),
        k=k,
        achieved=float(worst),
        support_ok=support_ok,
        valid=support_ok and worst <= bound,
        attempts=attempts,
    )


def sample_until_repapx(e: Election, base: Lottery, k: int, epsilon: float,
                        gamma: float, seed: SeedLike, max_attempts: int = 1000,
                        q: int | None = None) -> RepApxCertificate:
    """Resample until the uniform surrogate certifies at tolerance (1+gamma)*epsilon.

    Each attempt draws ``q`` samples (default ``sample_size_sl(epsilon, k)``)
    from ``base`` with an attempt-specific child seed, then checks the
    conditions at the widened tolerance.  Success on each attempt has
    probability at least gamma/(1+gamma), so the loop is short; if
    ``max_attempts`` is exhausted anyway, the best attempt rides along on the
    raised :class:`RepApxSamplingError`.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    if q is None:
        q = sample_size_sl(epsilon, k)
    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    elif isinstance(seed, int):
        ss = np.random.SeedSequence(seed)
    else:
        raise TypeError("seed must be an int or a SeedSequence")
    tol = (1.0 + gamma) * epsilon
    best: RepApxCertificate | None = None
    for attempt, child in enumerate(ss.spawn(max_attempts), start=1):
        ms = empirical_sampling(e, base, q, np.random.Generator(np.random.PCG64(child)))
        cert = check_repapx(e, ms.induced_lottery(), base, k, tol, attempts=attempt)
        if cert.valid:
            return cert
        if best is None or (cert.support_ok and cert.achieved < best.achieved):
            best = cert
    raise RepApxSamplingError(
        f"no valid certificate in {max_attempts} attempts "
        f"(best achieved {best.achieved} vs bound {1/(k+1) + tol})",
        best=best,
    )
