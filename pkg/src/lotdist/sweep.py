"""Batch experiment runner: generate instances, apply a rule, measure distortion.

A sweep walks the (n, m) grid, runs ``trials`` independent elections per cell
(per-trial seed = base seed + trial index), applies the named rule, and
measures worst-case distortion with the configured method.  Per-trial
failures are recorded as rows with status "error" and never abort the run.
Results go to CSV (flat columns) and JSON (full lottery weights, certificates
and aggregates); trials may run on a thread pool, with rows always emitted in
trial order.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from numbers import Rational
from pathlib import Path

from .elections import Election, Lottery
from .distortion import lp_distortion
from .generators import generate_election, load_corpus
from .lotteries import maximal_lottery, stable_k_lottery
from .mixing import mix_params, mixing_rule
from .pruning import repapx_pruned_lottery
from .sampling import sample_size_ml, sample_until_repapx

__all__ = ["SweepConfig", "RULES", "run_sweep", "jsonable"]

RULES = (
    "maximal-lottery",
    "stable-lottery",
    "ml-support-point-mass",
    "repapx-ml",
    "repapx-pruned",
    "mixing",
)

CSV_COLUMNS = (
    "trial", "n", "m", "seed", "rule", "distortion", "method",
    "runtime_ms", "status", "support_size", "reference", "error",
)


@dataclass(frozen=True)
class SweepConfig:
    generator: str
    n_range: tuple[int, int]
    m_range: tuple[int, int]
    trials: int
    seed: int
    rule: str
    rule_params: dict = field(default_factory=dict)
    distortion_method: str = "float"  # float | exact | none
    csv_path: str | None = None
    json_path: str | None = None
    corpus_path: str | None = None
    workers: int | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        for lo, hi in (self.n_range, self.m_range):
            if lo < 1 or hi < lo:
                raise ValueError("ranges must be nonempty with 1 <= lo <= hi")
        if self.rule not in RULES:
            raise ValueError(f"unknown rule {self.rule!r}; choose from {RULES}")
        if self.distortion_method not in ("float", "exact", "none"):
            raise ValueError("distortion_method must be float, exact, or none")


def jsonable(obj):
    """Recursively rewrite Fractions / tuples / lotteries for json.dump."""
    if isinstance(obj, Lottery):
        return jsonable(obj.to_json())
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, Rational) and not isinstance(obj, int):
        return {"num": obj.numerator, "den": obj.denominator}
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj


def _apply_rule(e: Election, rule: str, params: dict, seed: int) -> tuple[Lottery, dict]:
    """Returns (lottery, extra-info) for one trial."""
    if rule == "maximal-lottery":
        d = maximal_lottery(e)
        return d, {"support": list(d.support())}
    if rule == "stable-lottery":
        pair = stable_k_lottery(e, params.get("k", 7),
                                tol_eq=params.get("tol_eq", 1e-6))
        return pair.attacker, {"achieved_value": float(pair.achieved_value)}
    if rule == "ml-support-point-mass":
        support = set(maximal_lottery(e).support())
        j = next(c for c in e.candidates if c in support)
        return Lottery.point(j), {"chosen": j}
    if rule == "repapx-ml":
        eps = params.get("epsilon", 0.2)
        cert = sample_until_repapx(
            e, maximal_lottery(e), k=1, epsilon=eps,
            gamma=params.get("gamma", 1.0), seed=seed,
            q=sample_size_ml(eps),
        )
        return cert.distribution, {"achieved": cert.achieved,
                                   "attempts": cert.attempts}
    if rule == "repapx-pruned":
        out = repapx_pruned_lottery(
            e, epsilon=params.get("epsilon", 1 / 7), k=params.get("k", 7),
            theta=params.get("theta", 0.6), seed=seed,
            gamma=params.get("gamma", 1.0),
        )
        cert = out["cert"]
        return cert.distribution, {"pruned": list(out["pruned"]),
                                   "achieved": cert.achieved,
                                   "attempts": cert.attempts}
    if rule == "mixing":
        out = mixing_rule(
            e, mix_params(params.get("k", 7)), seed=seed,
            practical_eps1=params.get("practical_eps1", 0.25),
            practical_eps2=params.get("practical_eps2"),
        )
        return out["lottery"], {"mu_used": out["mu_used"],
                                "pruned": list(out["pruned"])}
    raise ValueError(f"unknown rule {rule!r}")


def _run_trial(cfg: SweepConfig, trial: int, n: int, m: int) -> dict:
    seed = cfg.seed + trial
    row = {"trial": trial, "n": n, "m": m, "seed": seed, "rule": cfg.rule,
           "distortion": None, "method": cfg.distortion_method,
           "runtime_ms": None, "status": "ok", "support_size": None,
           "reference": None, "error": None, "lottery": None, "extra": None}
    start = time.perf_counter()
    try:
        e = generate_election(cfg.generator, n, m, seed, path=cfg.corpus_path)
        row["n"], row["m"] = e.n, e.m  # actual size (file-corpus ignores the grid)
        lottery, extra = _apply_rule(e, cfg.rule, cfg.rule_params, seed)
        row["lottery"] = lottery
        row["extra"] = extra
        row["support_size"] = len(lottery.support())
        if cfg.distortion_method != "none":
            report = lp_distortion(e, lottery, cfg.distortion_method)
            row["distortion"] = (
                float(report.value) if report.value != math.inf else math.inf
            )
            row["reference"] = report.reference_candidate
    except Exception as err:  # per-trial isolation: record, keep sweeping
        row["status"] = "error"
        row["error"] = f"{type(err).__name__}: {err}"
    row["runtime_ms"] = (time.perf_counter() - start) * 1000.0
    return row


def _aggregate(rows: list[dict]) -> dict:
    cells: dict[str, dict] = {}
    for row in rows:
        key = f"{row['n']}x{row['m']}"
        cell = cells.setdefault(
            key, {"trials": 0, "errors": 0, "max_distortion": None,
                  "mean_distortion": None, "_values": []})
        cell["trials"] += 1
        if row["status"] != "ok":
            cell["errors"] += 1
        elif row["distortion"] is not None:
            cell["_values"].append(row["distortion"])
    for cell in cells.values():
        vals = cell.pop("_values")
        if vals:
            cell["max_distortion"] = max(vals)
            cell["mean_distortion"] = sum(vals) / len(vals)
    return cells


def run_sweep(cfg: SweepConfig) -> dict:
    """Run the whole grid; returns {"rows", "aggregates"} and writes outputs."""
    grid = [
        (n, m)
        for n in range(cfg.n_range[0], cfg.n_range[1] + 1)
        for m in range(cfg.m_range[0], cfg.m_range[1] + 1)
    ]
    specs = [(trial, n, m)
             for trial, (n, m) in enumerate(
                 (n, m) for n, m in grid for _ in range(cfg.trials))]
    if cfg.workers is not None and cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(lambda s: _run_trial(cfg, *s), specs))
    else:
        rows = [_run_trial(cfg, *s) for s in specs]
    rows.sort(key=lambda r: r["trial"])
    aggregates = _aggregate(rows)
    result = {"rows": rows, "aggregates": aggregates}

    if cfg.csv_path is not None:
        with open(cfg.csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in rows:
                writer.writerow(["" if row[c] is None else row[c]
                                 for c in CSV_COLUMNS])
    if cfg.json_path is not None:
        payload = {
            "timestamp": datetime.now(timezone.utc).isoformat(),
            "config": jsonable(vars(cfg) | {"rule_params": cfg.rule_params}),
            "rows": jsonable(rows),
            "aggregates": jsonable(aggregates),
        }
        Path(cfg.json_path).write_text(json.dumps(payload, indent=2) + "\n")
    return result
