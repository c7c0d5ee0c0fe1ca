"""Fitted predictors for the four minimum-encoding methods.

MMLWF, MMLP and MMLV are posterior modes under method-specific effective
pseudo-counts; MDL is the posterior mean under the Jeffreys pseudo-counts,
the closed form of the marginal predictive distribution.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .data import Dataset
from .errors import NoInteriorMode, OutOfRangeValue
from .model import (
    METHODS,
    NetworkStructure,
    ParameterSet,
    PriorSpec,
    SufficientStats,
    count_stats,
    effective_hyperparameters,
    jeffreys_hyperparameters,
    joint_probability,
    map_parameters,
    mean_parameters,
)

# Candidate equivalent sample sizes for the preflight scan: the smallest
# one avoiding NoInteriorMode across a protocol's training sets is chosen.
ESS_LADDER = tuple(0.5 * 2**j for j in range(22))


@dataclass(frozen=True)
class Predictor:
    method: str
    structure: NetworkStructure
    params: ParameterSet
    ess: float


def fit(method: str, dataset: Dataset, structure: NetworkStructure, ess: float) -> Predictor:
    """Fit one method on a dataset; see fit_from_stats for the count path."""
    return fit_from_stats(method, count_stats(dataset, structure), ess)


def fit_from_stats(method: str, stats: SufficientStats, ess: float) -> Predictor:
    structure = stats.structure
    spec = PriorSpec(method=method, ess=ess)
    try:
        if method == "MDL":
            params = mean_parameters(stats, jeffreys_hyperparameters(structure))
        else:
            params = map_parameters(stats, effective_hyperparameters(spec, structure))
    except NoInteriorMode as exc:
        try:
            hint = min_feasible_ess(stats.min_cell_counts(), structure, [method])
        except NoInteriorMode:
            hint = None
        detail = f"smallest feasible ladder ess is {hint:g}" if hint is not None \
            else "no ladder ess is feasible"
        raise NoInteriorMode(
            f"{exc} (method {method}, ess {ess:g}; {detail})",
            variable=exc.variable, config=exc.config, value=exc.value,
            min_feasible_ess=hint,
        ) from None
    return Predictor(method=method, structure=structure, params=params, ess=ess)


def class_posteriors(predictor: Predictor, rows: np.ndarray) -> np.ndarray:
    """P(class | leaves) for a batch of full rows; the class column is ignored."""
    st = predictor.structure
    root = st.root_index()
    if root is None:
        raise OutOfRangeValue("class prediction requires a Naive Bayes structure")
    rows = np.atleast_2d(np.asarray(rows, dtype=np.int64))
    if rows.shape[1] != st.m:
        raise OutOfRangeValue(f"rows must have {st.m} columns")
    log_tables = [np.log(t) for t in predictor.params.tables]
    logits = np.tile(log_tables[root][0], (rows.shape[0], 1))
    for i in range(st.m):
        if i == root:
            continue
        vals = rows[:, i]
        if vals.min() < 0 or vals.max() >= st.cardinalities[i]:
            raise OutOfRangeValue(f"variable {i} holds out-of-range values")
        logits += log_tables[i][:, vals].T
    return np.exp(logits - logsumexp(logits, axis=1, keepdims=True))


def predict_class(predictor: Predictor, row_without_class) -> np.ndarray:
    """Class distribution for one row given all non-class variables.

    The row lists the leaf values in variable order with the class omitted;
    the result sums to one.
    """
    st = predictor.structure
    root = st.root_index()
    if root is None:
        raise OutOfRangeValue("class prediction requires a Naive Bayes structure")
    partial = np.asarray(row_without_class, dtype=np.int64)
    if partial.shape != (st.m - 1,):
        raise OutOfRangeValue(f"expected {st.m - 1} non-class values")
    full = np.insert(partial, root, 0)
    return class_posteriors(predictor, full[None, :])[0]


def predict_joint(predictor: Predictor, full_row) -> float:
    """Joint probability of a complete row under the fitted parameters."""
    return joint_probability(predictor.params, full_row)


# --- feasibility scanning ---


def ess_lower_bound(min_counts: np.ndarray, structure: NetworkStructure,
                    method: str) -> float:
    """Exclusive lower bound on ess keeping the method's fit interior.

    ``min_counts[i]`` is the smallest cell count of variable i across the
    training sets of interest. The bound is exact because both the ESS and
    Jeffreys pseudo-counts are constant within a variable's table.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if method == "MDL":
        return 0.0
    mu_j = [float(t.flat[0]) for t in jeffreys_hyperparameters(structure).pseudo]
    bound = 0.0
    for i, (c, card) in enumerate(zip(structure.config_counts, structure.cardinalities)):
        if method == "MMLP":
            need = 1.0 - min_counts[i]
        elif method == "MMLV":
            need = 2.0 - mu_j[i] - min_counts[i]
        else:  # MMLWF
            need = mu_j[i] - min_counts[i]
        bound = max(bound, need * c * card)
    return bound


def min_feasible_ess(min_counts: np.ndarray, structure: NetworkStructure,
                     methods, ladder=ESS_LADDER) -> float:
    """Smallest ladder ess for which every method fits with an interior mode."""
    bound = max(ess_lower_bound(min_counts, structure, m) for m in methods)
    for ess in ladder:
        if ess > bound:
            return ess
    raise NoInteriorMode(
        f"no ladder ess up to {ladder[-1]:g} keeps all of {tuple(methods)} interior",
        min_feasible_ess=None,
    )
