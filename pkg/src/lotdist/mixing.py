"""The two-component mixture rule, uniform flattening, and multiset search.

The headline rule mixes a sampled Maximal Lottery surrogate (weight mu, close
to 1) with a sampled stable-lottery surrogate on a pruned candidate set
(weight 1 - mu).  Both components are uniform distributions over a bounded
number of samples, so after rounding mu to a rational the mixture is exactly
a uniform draw from one fixed multiset of candidates whose size depends only
on the sample sizes and mu's denominator, never on the electorate.

``mix_params`` evaluates the parameter schedule in terms of L_k = ln(k/4)/k,
and ``appendix_b_checks`` re-verifies the five closed-form inequalities that
schedule is designed to satisfy.  At the theoretical epsilon for the Maximal
Lottery component the required sample count is astronomically large (about
3e33 at k = 7), so ``mixing_rule`` refuses to run without practical epsilon
overrides; ``mixing_requirements`` reports the theoretical sample sizes.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from numbers import Rational

from .elections import Candidate, Election, Lottery, Multiset
from .distortion import lp_distortion
from .lotteries import maximal_lottery
from .pruning import lambda_bound, repapx_pruned_lottery
from .sampling import (
    RepApxCertificate,
    sample_size_ml,
    sample_size_sl,
    sample_until_repapx,
)

import numpy as np

__all__ = [
    "MixParams",
    "UniformMultiset",
    "SampleScaleError",
    "mix_params",
    "mixing_requirements",
    "mixing_rule",
    "flatten_to_uniform",
    "multiset_search",
    "appendix_b_checks",
]

MU_DENOMINATOR_CAP = 10**6


@dataclass(frozen=True)
class MixParams:
    """Parameter schedule for the mixture rule, all driven by L_k = ln(k/4)/k."""

    k: int
    L_k: float
    alpha: float
    beta_tilde: float
    eps1: float
    eps2: float
    mu: float


@dataclass(frozen=True)
class UniformMultiset:
    """A candidate roster together with the uniform lottery it induces."""

    roster: Multiset
    induced: Lottery


class SampleScaleError(RuntimeError):
    """Sampling at the requested tolerance needs an infeasible sample count."""

    def __init__(self, message: str, requirements: dict):
        super().__init__(message)
        self.requirements = requirements


def mix_params(k: int) -> MixParams:
    """Evaluate the parameter schedule at k; all invariants re-asserted."""
    if not isinstance(k, int) or k < 7:
        raise ValueError("k must be an integer >= 7")
    l_k = math.log(k / 4) / k
    params = MixParams(
        k=k,
        L_k=l_k,
        alpha=l_k / 24,
        beta_tilde=l_k / 9,
        eps1=l_k**3 / 150000,
        eps2=1 / k,
        mu=1 - l_k**2 / 2000,
    )
    for name in ("L_k", "alpha", "beta_tilde", "eps1", "eps2", "mu"):
        val = getattr(params, name)
        if not 0 < val < 1:
            raise AssertionError(f"{name} = {val} escaped (0, 1)")
    if Fraction(1, k + 1) + Fraction(params.eps2) > Fraction(2, k):
        raise AssertionError("stability hypothesis 1/(k+1) + eps2 <= 2/k failed")
    return params


def mixing_requirements(params: MixParams) -> dict:
    """Sample sizes the schedule demands, and whether they are runnable."""
    q_ml = sample_size_ml(params.eps1**2)
    q_sl = sample_size_sl(params.eps2, params.k)
    return {
        "k": params.k,
        "L_k": params.L_k,
        "alpha": params.alpha,
        "beta_tilde": params.beta_tilde,
        "eps1": params.eps1,
        "eps2": params.eps2,
        "mu": params.mu,
        "q_ml": q_ml,
        "q_sl": q_sl,
        "runnable": q_ml <= 10**7,
    }


def mixing_rule(e: Election, params: MixParams, seed,
                practical_eps1: float | None = None,
                practical_eps2: float | None = None,
                mu_override=None, gamma: float = 1.0,
                tol_eq: float = 1e-6, max_attempts: int = 1000) -> dict:
    """Mixture mu * D1 + (1 - mu) * D2 of the two sampled components.

    D1 is a uniform surrogate of the Maximal Lottery at tolerance eps1^2 and
    D2 a surrogate stable k-lottery on the pruned set at tolerance eps2 with
    threshold 1/2 + beta_tilde.  The schedule's own eps1 makes D1's sample
    size infeasible, so a practical override is mandatory (SampleScaleError
    otherwise); eps2 defaults to the schedule's value, which is runnable.
    mu is rounded to a rational with denominator <= 10**6 (reported as
    mu_used) so the mixture stays exactly flattenable.
    """
    if practical_eps1 is None:
        req = mixing_requirements(params)
        raise SampleScaleError(
            f"tolerance eps1^2 = {params.eps1 ** 2:.3e} needs q = {req['q_ml']:.3e} "
            "samples; pass practical_eps1 to run at desk scale",
            req,
        )
    eps1 = practical_eps1
    eps2 = params.eps2 if practical_eps2 is None else practical_eps2
    if mu_override is None:
        mu_used = Fraction(params.mu).limit_denominator(MU_DENOMINATOR_CAP)
    else:
        mu_used = Fraction(mu_override)
        if not 0 <= mu_used <= 1:
            raise ValueError("mu_override must lie in [0, 1]")

    if isinstance(seed, np.random.SeedSequence):
        ss = seed
    elif isinstance(seed, int):
        ss = np.random.SeedSequence(seed)
    else:
        raise TypeError("seed must be an int or a SeedSequence")
    seed_ml, seed_sl = ss.spawn(2)

    cert_ml = sample_until_repapx(
        e, maximal_lottery(e), k=1, epsilon=eps1, gamma=gamma, seed=seed_ml,
        max_attempts=max_attempts, q=sample_size_ml(eps1),
    )
    pruned = repapx_pruned_lottery(
        e, epsilon=eps2, k=params.k, theta=0.5 + params.beta_tilde,
        seed=seed_sl, gamma=gamma, tol_eq=tol_eq, max_attempts=max_attempts,
    )
    cert_sl: RepApxCertificate = pruned["cert"]

    d1, d2 = cert_ml.distribution, cert_sl.distribution
    weights = {}
    for c in e.candidates:
        w = mu_used * d1.prob(c) + (1 - mu_used) * d2.prob(c)
        if w > 0:
            weights[c] = w
    return {
        "lottery": Lottery(weights),
        "components": {"ml": cert_ml, "stable": cert_sl},
        "pruned": pruned["pruned"],
        "mu_used": mu_used,
    }


def flatten_to_uniform(lottery: Lottery) -> UniformMultiset:
    """Rewrite a rational lottery as a uniform draw from one fixed roster.

    The roster size is the lcm of the reduced weight denominators, and each
    candidate repeats weight * size times, so the induced uniform lottery
    reproduces the input exactly.
    """
    if not lottery.is_exact:
        raise ValueError("flattening needs exact rational weights")
    support = {c: w for c, w in lottery.weights.items() if w > 0}
    size = math.lcm(*(w.denominator for w in support.values()))
    roster = Multiset({c: int(w * size) for c, w in support.items()})
    return UniformMultiset(roster=roster, induced=roster.induced_lottery())


def _roster_lottery(combo) -> Lottery:
    counts: dict[Candidate, int] = {}
    for c in combo:
        counts[c] = counts.get(c, 0) + 1
    total = len(combo)
    return Lottery({c: Fraction(n, total) for c, n in counts.items()})


def multiset_search(e: Election, epsilon: float, max_size: int,
                    mode: str = "float", workers: int | None = None) -> dict | None:
    """Smallest candidate multiset whose uniform lottery beats 3 - epsilon.

    Enumerates rosters by total size, then lexicographically as tuples in
    candidate order, and returns the first whose exact worst-case distortion
    is below 3 - epsilon: {"roster", "distortion", "report"}.  None when no
    roster up to max_size qualifies.  ``workers`` parallelizes the LP
    evaluations within each size; the hit reported is still the first in
    enumeration order.
    """
    if max_size < 1:
        raise ValueError("max_size must be >= 1")
    target = 3 - epsilon

    def evaluate(combo) -> tuple:
        report = lp_distortion(e, _roster_lottery(combo), mode)
        return combo, report

    for size in range(1, max_size + 1):
        combos = list(itertools.combinations_with_replacement(e.candidates, size))
        if workers is not None and workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(evaluate, combos))
        else:
            results = map(evaluate, combos)
        for combo, report in results:
            if report.value < target:
                return {
                    "roster": flatten_to_uniform(_roster_lottery(combo)),
                    "distortion": report.value,
                    "report": report,
                }
    return None


def _check(name: str, lhs: float, rhs: float, strict: bool) -> dict:
    ok = lhs < rhs if strict else lhs <= rhs
    return {
        "name": name,
        "lhs": lhs,
        "rhs": rhs,
        "margin": rhs - lhs,
        "strict": strict,
        "ok": ok,
    }


def appendix_b_checks(k_min: int, k_max: int) -> dict:
    """Numerically re-verify the five schedule inequalities on [k_min, k_max].

    For each k: the pruned-component bound 1 + 2*lambda against its quadratic
    envelope 3 - L_k + L_k^2; that bound times the one-hop factor 4/theta - 3
    against 15; times 1 + 4*alpha against 3 - L_k/2 + L_k^2; and both mixture
    cases (metric consistent / inconsistent with the margins) strictly below
    3.  These are exactly the inequalities that make the mixture's distortion
    land under 3.
    """
    if k_min < 7 or k_max < k_min:
        raise ValueError("need 7 <= k_min <= k_max")
    rows = []
    for k in range(k_min, k_max + 1):
        p = mix_params(k)
        theta = 0.5 + p.beta_tilde
        one_plus_2lam = 1 + 2 * lambda_bound(theta, k, p.eps2)
        envelope = 3 - p.L_k + p.L_k**2
        checks = [
            _check("pruned-bound-envelope", one_plus_2lam, envelope, strict=False),
            _check("pruned-bound-cap", one_plus_2lam, 3.0, strict=False),
            _check("times-one-hop-factor", one_plus_2lam * (4 / theta - 3), 15.0,
                   strict=False),
            _check("times-alpha-factor", one_plus_2lam * (1 + 4 * p.alpha),
                   3 - p.L_k / 2 + p.L_k**2, strict=False),
            _check(
                "mixture-consistent-case",
                p.mu * (3 + 28 * p.eps1)
                + (1 - p.mu) * one_plus_2lam * (1 + 4 * p.alpha),
                3.0,
                strict=True,
            ),
            _check(
                "mixture-inconsistent-case",
                p.mu * (3 + 28 * p.eps1 - 2 * p.alpha * p.beta_tilde)
                + (1 - p.mu) * one_plus_2lam * (4 / theta - 3),
                3.0,
                strict=True,
            ),
        ]
        rows.append({"k": k, "checks": checks, "ok": all(c["ok"] for c in checks)})
    return {"k_min": k_min, "k_max": k_max, "rows": rows,
            "all_ok": all(r["ok"] for r in rows)}
