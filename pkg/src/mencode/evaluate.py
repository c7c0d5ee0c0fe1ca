"""Scoring rules and the three experimental protocols.

Protocols are deterministic in their seed: every repeat and every
leave-one-out row derives an independent RNG stream from
(seed, protocol tag, index), so results do not depend on worker
scheduling and training subsets are shared across methods for paired
comparisons.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .data import Dataset, choose_indices, derive_seed, make_folds
from .errors import SampleTooLarge, TooFewRows, ZeroProbability
from .estimators import (
    ESS_LADDER,
    class_posteriors,
    fit_from_stats,
    min_feasible_ess,
    predict_joint,
)
from .model import NetworkStructure, count_stats

LOG2 = math.log(2.0)

REPORT_COLUMNS = ("dataset", "method", "protocol", "k", "repeats", "s", "ess",
                  "seed", "min", "mean", "max")


@dataclass(frozen=True)
class ScoreReport:
    dataset: str
    method: str
    protocol: str
    k: int | None
    repeats: int | None
    s: int | None
    ess: float
    seed: int
    per_repeat: tuple[float, ...]

    def __post_init__(self):
        if not self.per_repeat:
            raise ValueError("a report needs at least one repeat")

    @property
    def min(self) -> float:
        return min(self.per_repeat)

    @property
    def mean(self) -> float:
        # Clamp away last-ulp summation error so min <= mean <= max holds.
        raw = math.fsum(self.per_repeat) / len(self.per_repeat)
        return min(max(raw, self.min), self.max)

    @property
    def max(self) -> float:
        return max(self.per_repeat)

    def row(self) -> dict:
        return {
            "dataset": self.dataset,
            "method": self.method,
            "protocol": self.protocol,
            "k": self.k,
            "repeats": self.repeats,
            "s": self.s,
            "ess": self.ess,
            "seed": self.seed,
            "min": self.min,
            "mean": self.mean,
            "max": self.max,
        }


# --- scoring rules ---


def zero_one_score(class_dist, true_class: int) -> int:
    """1 iff the most probable class is the true one; ties go to the lowest index."""
    dist = np.asarray(class_dist, dtype=float)
    if dist.ndim != 1 or dist.size == 0 or dist.min() < 0:
        raise ValueError("class distribution must be a nonnegative vector")
    return int(int(np.argmax(dist)) == int(true_class))


def log_score(prob: float) -> float:
    """Negated base-2 log of the probability assigned to the outcome, in bits."""
    if prob <= 0.0:
        raise ZeroProbability(f"log-score undefined for probability {prob}")
    if prob > 1.0 + 1e-12:
        raise ValueError(f"probability {prob} exceeds 1")
    return -math.log(min(prob, 1.0)) / LOG2


# --- protocol helpers ---


def _map_ordered(fn, items, jobs: int):
    """Order-preserving map; results are identical to the sequential run."""
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _subset_stats(dataset: Dataset, structure: NetworkStructure, idx: np.ndarray):
    sub = Dataset(schema=dataset.schema, rows=dataset.rows[idx], name=dataset.name)
    return count_stats(sub, structure)


# --- repeated k-fold cross-validation (0/1 score) ---


def crossvalidate(dataset: Dataset, structure: NetworkStructure, method: str,
                  k: int, repeats: int, ess: float, seed: int,
                  jobs: int = 1) -> ScoreReport:
    """Percent of correctly classified rows, pooled over the k held-out folds,
    for ``repeats`` independently re-partitioned runs."""
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    n = dataset.n
    if k > n:
        raise TooFewRows(f"cannot run {k}-fold CV on {n} rows")
    class_index = dataset.schema.class_index

    def one_repeat(r: int) -> float:
        plan = make_folds(n, k, derive_seed(seed, "bench", r))
        correct = 0
        for fold in range(k):
            train = plan.train_indices(fold)
            test = plan.test_indices(fold)
            pred = fit_from_stats(method, _subset_stats(dataset, structure, train), ess)
            posts = class_posteriors(pred, dataset.rows[test])
            correct += int(np.sum(np.argmax(posts, axis=1)
                                  == dataset.rows[test, class_index]))
        return 100.0 * correct / n

    per_repeat = tuple(_map_ordered(one_repeat, range(repeats), jobs))
    return ScoreReport(
        dataset=dataset.name, method=method, protocol="bench",
        k=k, repeats=repeats, s=None, ess=ess, seed=seed,
        per_repeat=per_repeat,
    )


# --- leave-one-out joint log-score ---


def leave_one_out(dataset: Dataset, structure: NetworkStructure, method: str,
                  s: int | None, ess: float, seed: int, jobs: int = 1) -> float:
    """Mean log-score (bits) of the held-out row's joint probability.

    For each row, the model is trained on ``s`` rows sampled from the other
    n - 1 (all of them when s is None or n - 1); the subsample depends only
    on (seed, row, s), never on the method.
    """
    n = dataset.n
    if n < 2:
        raise TooFewRows("leave-one-out needs at least two rows")
    if s is None:
        s = n - 1
    if not 1 <= s <= n - 1:
        raise SampleTooLarge(f"training size s={s} must lie in 1..{n - 1}")

    def one_row(j: int) -> float:
        pool = np.delete(np.arange(n), j)
        if s < n - 1:
            idx = choose_indices(pool, s, derive_seed(seed, "loo", j, s))
        else:
            idx = pool
        pred = fit_from_stats(method, _subset_stats(dataset, structure, idx), ess)
        return log_score(predict_joint(pred, dataset.rows[j]))

    scores = _map_ordered(one_row, range(n), jobs)
    return float(np.mean(scores))


def loo_report(dataset: Dataset, structure: NetworkStructure, method: str,
               s: int | None, ess: float, seed: int, jobs: int = 1) -> ScoreReport:
    value = leave_one_out(dataset, structure, method, s, ess, seed, jobs=jobs)
    return ScoreReport(
        dataset=dataset.name, method=method, protocol="loo",
        k=None, repeats=None, s=s if s is not None else dataset.n - 1,
        ess=ess, seed=seed, per_repeat=(value,),
    )


# --- learning curves relative to MMLWF ---


@dataclass(frozen=True)
class CurvePoint:
    s: int
    method: str
    mean_log_score: float
    relative_to_mmlwf: float


def learning_curve(dataset: Dataset, structure: NetworkStructure, methods,
                   s_grid, ess: float, seed: int, jobs: int = 1) -> list[CurvePoint]:
    """Leave-one-out log-scores over training sizes, scaled so MMLWF is zero.

    MMLWF is evaluated even when absent from ``methods``; a positive
    relative score means the method beat MMLWF by that many bits.
    """
    methods = list(methods)
    rows: list[CurvePoint] = []
    for s in s_grid:
        wf_score = leave_one_out(dataset, structure, "MMLWF", int(s), ess, seed,
                                 jobs=jobs)
        for method in methods:
            score = (wf_score if method == "MMLWF"
                     else leave_one_out(dataset, structure, method, int(s), ess,
                                        seed, jobs=jobs))
            rows.append(CurvePoint(
                s=int(s), method=method,
                mean_log_score=score,
                relative_to_mmlwf=wf_score - score,
            ))
    return rows


# --- preflight ess scan ---


def auto_ess(dataset: Dataset, structure: NetworkStructure, methods, protocol: str,
             *, k: int | None = None, repeats: int | None = None,
             s_values=(), seed: int = 0, ladder=ESS_LADDER) -> float:
    """Smallest ladder ess with no NoInteriorMode across a protocol's fits.

    Walks every training set the protocol will use and tracks each
    variable's smallest cell count; feasibility is then closed-form.
    """
    n = dataset.n
    mins = np.full(structure.m, np.inf)

    def absorb(idx: np.ndarray):
        nonlocal mins
        stats = _subset_stats(dataset, structure, idx)
        mins = np.minimum(mins, stats.min_cell_counts())

    if protocol == "bench":
        if k is None or repeats is None:
            raise ValueError("bench preflight needs k and repeats")
        for r in range(repeats):
            plan = make_folds(n, k, derive_seed(seed, "bench", r))
            for fold in range(k):
                absorb(plan.train_indices(fold))
    elif protocol in ("loo", "curve"):
        sizes = sorted({int(s) if s is not None else n - 1 for s in (s_values or [None])})
        for s in sizes:
            for j in range(n):
                pool = np.delete(np.arange(n), j)
                if s < n - 1:
                    absorb(choose_indices(pool, s, derive_seed(seed, "loo", j, s)))
                else:
                    absorb(pool)
    else:
        raise ValueError(f"unknown protocol {protocol!r}")

    return min_feasible_ess(mins, structure, methods, ladder=ladder)


# --- serialization ---


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def reports_to_csv(reports) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(REPORT_COLUMNS)
    for rep in reports:
        row = rep.row()
        writer.writerow([_format_cell(row[c]) for c in REPORT_COLUMNS])
    return buf.getvalue()


def reports_to_json(reports) -> str:
    return json.dumps({"reports": [r.row() for r in reports]}, indent=2,
                      sort_keys=True) + "\n"


def curve_to_csv(points: list[CurvePoint]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("s", "method", "mean_log_score_bits", "relative_to_mmlwf_bits"))
    for p in points:
        writer.writerow((p.s, p.method, _format_cell(p.mean_log_score),
                         _format_cell(p.relative_to_mmlwf)))
    return buf.getvalue()
