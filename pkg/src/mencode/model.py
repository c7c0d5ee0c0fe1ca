"""Bayesian-network structure, sufficient statistics, and Dirichlet prior algebra.

The four predictive methods share one fitting pipeline: counts plus
method-specific pseudo-counts. Densities multiply, so combining the
subjective ESS prior with the Jeffreys prior is pseudo-count arithmetic
on the Dirichlet exponents (mu - 1):

    MMLP   mu_h                  (subjective prior alone)
    MMLV   mu_h + mu_J - 1       (subjective times Jeffreys)
    MMLWF  mu_h - mu_J + 1       (subjective divided by Jeffreys)
    MDL    mu_J                  (Jeffreys alone, posterior mean)
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .data import Dataset, Schema
from .errors import (
    BoundaryParameter,
    InstanceTooLarge,
    NonPositiveHyper,
    NoInteriorMode,
    NotNaiveBayes,
    OutOfRangeValue,
    SchemaMismatch,
)

METHODS = ("MMLWF", "MMLP", "MMLV", "MDL")

ROW_SUM_TOL = 1e-9


@dataclass(frozen=True)
class NetworkStructure:
    """A DAG over discrete variables, stored as parent lists.

    ``config_counts[i]`` is the number of parent configurations of
    variable i (product of parent cardinalities, 1 for a root).
    """

    cardinalities: tuple[int, ...]
    parents: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        m = len(self.cardinalities)
        if len(self.parents) != m:
            raise SchemaMismatch("one parent list per variable required")
        for i, ps in enumerate(self.parents):
            for p in ps:
                if not 0 <= p < m or p == i:
                    raise SchemaMismatch(f"variable {i} has invalid parent {p}")
        self._check_acyclic()

    def _check_acyclic(self):
        m = len(self.cardinalities)
        state = [0] * m  # 0 unvisited, 1 on stack, 2 done

        def visit(i):
            if state[i] == 1:
                raise SchemaMismatch("parent graph contains a cycle")
            if state[i] == 2:
                return
            state[i] = 1
            for p in self.parents[i]:
                visit(p)
            state[i] = 2

        for i in range(m):
            visit(i)

    @property
    def m(self) -> int:
        return len(self.cardinalities)

    @property
    def config_counts(self) -> tuple[int, ...]:
        return tuple(
            int(np.prod([self.cardinalities[p] for p in ps], dtype=np.int64)) if ps else 1
            for ps in self.parents
        )

    def parent_config_index(self, variable: int, row: np.ndarray) -> int:
        """Mixed-radix index of the parent configuration in a data row."""
        idx = 0
        for p in self.parents[variable]:
            idx = idx * self.cardinalities[p] + int(row[p])
        return idx

    def root_index(self) -> int | None:
        """The unique parentless variable that parents everything else, if any."""
        roots = [i for i, ps in enumerate(self.parents) if not ps]
        if len(roots) != 1:
            return None
        r = roots[0]
        for i, ps in enumerate(self.parents):
            if i != r and ps != (r,):
                return None
        return r

    def is_naive_bayes(self) -> bool:
        return self.root_index() is not None


def naive_bayes_structure(schema: Schema) -> NetworkStructure:
    """Class variable as the root, every other variable a leaf child of it."""
    if schema.m < 2:
        raise SchemaMismatch("Naive Bayes needs a class variable and at least one leaf")
    parents = tuple(
        () if i == schema.class_index else (schema.class_index,)
        for i in range(schema.m)
    )
    return NetworkStructure(cardinalities=tuple(schema.cardinalities), parents=parents)


def single_variable_structure(schema: Schema) -> NetworkStructure:
    """Degenerate one-node network for single-variable datasets."""
    if schema.m != 1:
        raise SchemaMismatch("single_variable_structure requires exactly one variable")
    return NetworkStructure(cardinalities=tuple(schema.cardinalities), parents=((),))


@dataclass(frozen=True)
class SufficientStats:
    """Per-variable count tables f[i][q, x] plus the total row count."""

    structure: NetworkStructure
    counts: tuple[np.ndarray, ...]
    n: int

    def __post_init__(self):
        configs = self.structure.config_counts
        if len(self.counts) != self.structure.m:
            raise SchemaMismatch("one count table per variable required")
        for i, table in enumerate(self.counts):
            expect = (configs[i], self.structure.cardinalities[i])
            if table.shape != expect:
                raise SchemaMismatch(f"count table {i} has shape {table.shape}, "
                                     f"expected {expect}")
            if table.min() < 0:
                raise SchemaMismatch(f"count table {i} holds negative entries")
            if int(table.sum()) != self.n:
                raise SchemaMismatch(
                    f"count table {i} sums to {int(table.sum())}, expected {self.n}"
                )
            table.setflags(write=False)

    def min_cell_counts(self) -> np.ndarray:
        return np.array([t.min() for t in self.counts], dtype=float)


@dataclass(frozen=True)
class HyperParameters:
    """Dirichlet pseudo-counts, shaped like the count tables.

    Entries may be zero or negative: method combinations subtract prior
    exponents, and infeasibility only surfaces at fit time.
    """

    pseudo: tuple[np.ndarray, ...]

    def __post_init__(self):
        for table in self.pseudo:
            table.setflags(write=False)


@dataclass(frozen=True)
class ParameterSet:
    """Conditional probability tables theta[i][q, x] of a fitted network."""

    structure: NetworkStructure
    tables: tuple[np.ndarray, ...]

    def __post_init__(self):
        configs = self.structure.config_counts
        for i, table in enumerate(self.tables):
            expect = (configs[i], self.structure.cardinalities[i])
            if table.shape != expect:
                raise SchemaMismatch(f"table {i} has shape {table.shape}, expected {expect}")
            if table.min() <= 0.0 or table.max() >= 1.0:
                raise BoundaryParameter(f"table {i} holds entries outside (0, 1)")
            if np.max(np.abs(table.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
                raise SchemaMismatch(f"table {i} rows do not sum to 1")
            table.setflags(write=False)


@dataclass(frozen=True)
class PriorSpec:
    method: str
    ess: float

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if not self.ess > 0:
            raise ValueError(f"equivalent sample size must be positive, got {self.ess}")


# --- sufficient statistics ---


def count_stats(dataset: Dataset, structure: NetworkStructure) -> SufficientStats:
    """Exact joint counts of each (variable value, parent configuration)."""
    if tuple(dataset.schema.cardinalities) != structure.cardinalities:
        raise SchemaMismatch("dataset schema does not match the structure")
    rows = dataset.rows
    configs = structure.config_counts
    tables = []
    for i in range(structure.m):
        card = structure.cardinalities[i]
        q = np.zeros(dataset.n, dtype=np.int64)
        for p in structure.parents[i]:
            q = q * structure.cardinalities[p] + rows[:, p]
        flat = np.bincount(q * card + rows[:, i], minlength=configs[i] * card)
        tables.append(flat.reshape(configs[i], card))
    return SufficientStats(structure=structure, counts=tuple(tables), n=dataset.n)


# --- prior construction ---


def ess_hyperparameters(structure: NetworkStructure, ess: float) -> HyperParameters:
    """Symmetric allocation: each variable's table receives total mass ess."""
    if not ess > 0:
        raise ValueError(f"equivalent sample size must be positive, got {ess}")
    tables = []
    for c, card in zip(structure.config_counts, structure.cardinalities):
        tables.append(np.full((c, card), ess / (c * card)))
    return HyperParameters(pseudo=tuple(tables))


def _jeffreys_class_pseudo(structure: NetworkStructure) -> float:
    root = structure.root_index()
    assert root is not None
    leaf_terms = sum(
        (structure.cardinalities[i] - 1) / 2.0
        for i in range(structure.m)
        if i != root
    )
    return 0.5 + leaf_terms


def jeffreys_hyperparameters(structure: NetworkStructure) -> HyperParameters:
    """Closed-form Jeffreys pseudo-counts for the Naive Bayes structure.

    Every leaf cell gets 1/2. The class parameter absorbs the parent
    marginal factors of the leaves, so each class value gets
    1/2 + sum over leaves of (n_i - 1)/2.
    """
    root = structure.root_index()
    if root is None:
        raise NotNaiveBayes("Jeffreys pseudo-counts are closed-form only for Naive Bayes")
    tables = []
    for i, (c, card) in enumerate(zip(structure.config_counts, structure.cardinalities)):
        value = _jeffreys_class_pseudo(structure) if i == root else 0.5
        tables.append(np.full((c, card), value))
    return HyperParameters(pseudo=tuple(tables))


def effective_hyperparameters(spec: PriorSpec, structure: NetworkStructure) -> HyperParameters:
    """Pseudo-counts realizing each method's prior via exponent arithmetic."""
    mu_h = ess_hyperparameters(structure, spec.ess).pseudo
    if spec.method == "MMLP":
        return HyperParameters(pseudo=tuple(t.copy() for t in mu_h))
    mu_j = jeffreys_hyperparameters(structure).pseudo
    if spec.method == "MDL":
        return HyperParameters(pseudo=tuple(t.copy() for t in mu_j))
    if spec.method == "MMLV":
        return HyperParameters(pseudo=tuple(h + j - 1.0 for h, j in zip(mu_h, mu_j)))
    if spec.method == "MMLWF":
        return HyperParameters(pseudo=tuple(h - j + 1.0 for h, j in zip(mu_h, mu_j)))
    raise ValueError(f"unknown method {spec.method!r}")


# --- fitting ---


def map_parameters(stats: SufficientStats, hyper: HyperParameters) -> ParameterSet:
    """Posterior mode: theta = (f + mu - 1) / (sum_l (f + mu) - n_i).

    Raises NoInteriorMode, carrying the offending cell, whenever some
    numerator is nonpositive; this is the no-maximum pathology.
    """
    return _fit(stats, hyper, mode=True)


def mean_parameters(stats: SufficientStats, hyper: HyperParameters) -> ParameterSet:
    """Posterior mean: theta = (f + mu) / sum_l (f + mu); needs mu > 0."""
    for i, mu in enumerate(hyper.pseudo):
        if mu.min() <= 0.0:
            raise NonPositiveHyper(f"variable {i} has a pseudo-count <= 0")
    return _fit(stats, hyper, mode=False)


def _fit(stats: SufficientStats, hyper: HyperParameters, mode: bool) -> ParameterSet:
    if len(stats.counts) != len(hyper.pseudo):
        raise SchemaMismatch("stats and hyperparameters disagree on variable count")
    tables = []
    for i, (f, mu) in enumerate(zip(stats.counts, hyper.pseudo)):
        if f.shape != mu.shape:
            raise SchemaMismatch(f"variable {i}: counts {f.shape} vs pseudo {mu.shape}")
        numer = f + mu - (1.0 if mode else 0.0)
        if numer.min() <= 0.0:
            q, x = np.unravel_index(int(np.argmin(numer)), numer.shape)
            label = "f + mu - 1" if mode else "f + mu"
            raise NoInteriorMode(
                f"no interior mode: variable {i}, config {q}, value {x} has "
                f"{label} = {numer[q, x]:.6g} <= 0",
                variable=i, config=int(q), value=int(x),
            )
        denom = numer.sum(axis=1, keepdims=True)
        tables.append(numer / denom)
    return ParameterSet(structure=stats.structure, tables=tuple(tables))


# --- probability evaluation ---


def joint_probability(params: ParameterSet, row) -> float:
    """Product of the conditional probabilities along the network."""
    st = params.structure
    row = np.asarray(row, dtype=np.int64)
    if row.shape != (st.m,):
        raise OutOfRangeValue(f"row must have {st.m} entries")
    for i, card in enumerate(st.cardinalities):
        if not 0 <= row[i] < card:
            raise OutOfRangeValue(f"value {row[i]} of variable {i} outside 0..{card - 1}")
    prob = 1.0
    for i in range(st.m):
        q = st.parent_config_index(i, row)
        prob *= float(params.tables[i][q, row[i]])
    return prob


def parent_config_marginals(params: ParameterSet) -> tuple[np.ndarray, ...]:
    """P(pa_i = q) for every variable, by enumerating the joint outcome space."""
    st = params.structure
    space = int(np.prod(st.cardinalities, dtype=np.int64))
    if space > 1 << 20:
        raise InstanceTooLarge(f"joint outcome space has {space} points")
    marginals = [np.zeros(c) for c in st.config_counts]
    for values in itertools.product(*(range(c) for c in st.cardinalities)):
        row = np.asarray(values, dtype=np.int64)
        p = joint_probability(params, row)
        for i in range(st.m):
            marginals[i][st.parent_config_index(i, row)] += p
    return tuple(marginals)


def eval_jeffreys_log_density(params: ParameterSet) -> float:
    """Unnormalized log of the Jeffreys prior at the given parameters.

    sum_i sum_q [ (n_i - 1)/2 ln P(pa_i = q) - 1/2 sum_l ln theta_iql ],
    with the parent-configuration probability taken as the marginal under
    the parameters themselves.
    """
    st = params.structure
    marginals = parent_config_marginals(params)
    total = 0.0
    for i in range(st.m):
        card = st.cardinalities[i]
        total += (card - 1) / 2.0 * float(np.sum(np.log(marginals[i])))
        total -= 0.5 * float(np.sum(np.log(params.tables[i])))
    return total


def parameters_to_jsonable(params: ParameterSet, schema: Schema) -> dict:
    """Tables keyed by variable name and parent configuration labels."""
    st = params.structure
    out: dict[str, dict] = {}
    for i, var in enumerate(schema.variables):
        table = params.tables[i]
        entries = {}
        for q in range(table.shape[0]):
            key = _config_key(st, schema, i, q)
            entries[key] = {
                schema.label_of(i, x): float(table[q, x])
                for x in range(table.shape[1])
            }
        out[var.name] = entries
    return out


def _config_key(st: NetworkStructure, schema: Schema, variable: int, q: int) -> str:
    ps = st.parents[variable]
    if not ps:
        return "(root)"
    digits = []
    rem = q
    for p in reversed(ps):
        rem, d = divmod(rem, st.cardinalities[p])
        digits.append((p, d))
    digits.reverse()
    return ",".join(f"{schema.variables[p].name}={schema.label_of(p, d)}"
                    for p, d in digits)
