"""Dataset loading, discretization, and deterministic experiment plans."""

from __future__ import annotations

import csv
import hashlib
import io
import logging
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    ConstantColumn,
    EmptyInput,
    MalformedRecord,
    SampleTooLarge,
    TooFewRows,
    UnknownLabel,
)

log = logging.getLogger(__name__)

MISSING_TOKENS = {"", "?"}

CATEGORICAL = "categorical"
CONTINUOUS = "continuous"


def derive_seed(*parts) -> int:
    """Stable 63-bit stream seed from (seed, protocol tag, indices...)."""
    payload = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(payload).digest()[:8], "big") >> 1


@dataclass(frozen=True)
class Variable:
    name: str
    kind: str

    def __post_init__(self):
        if self.kind not in (CATEGORICAL, CONTINUOUS):
            raise ConfigError(f"variable {self.name!r} has unknown kind {self.kind!r}")


@dataclass(frozen=True)
class Schema:
    """Variable declarations with post-discretization cardinalities.

    ``value_labels`` keeps the human-readable value per index: the declared
    labels for categorical variables, interval descriptions for discretized
    continuous ones.
    """

    variables: tuple[Variable, ...]
    cardinalities: tuple[int, ...]
    class_index: int
    value_labels: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        m = len(self.variables)
        if m == 0:
            raise ConfigError("schema needs at least one variable")
        if len(self.cardinalities) != m or len(self.value_labels) != m:
            raise ConfigError("schema field lengths disagree")
        names = [v.name for v in self.variables]
        if len(set(names)) != m:
            raise ConfigError("variable names must be unique")
        if not 0 <= self.class_index < m:
            raise ConfigError(f"class index {self.class_index} out of range")
        for v, card, labels in zip(self.variables, self.cardinalities, self.value_labels):
            if card < 2:
                raise ConfigError(f"variable {v.name!r} has cardinality {card} < 2")
            if len(labels) != card:
                raise ConfigError(f"variable {v.name!r} labels do not match cardinality")

    @property
    def m(self) -> int:
        return len(self.variables)

    @property
    def class_cardinality(self) -> int:
        return self.cardinalities[self.class_index]

    def index_of(self, variable: int, label: str) -> int:
        labels = self.value_labels[variable]
        try:
            return labels.index(label)
        except ValueError:
            raise UnknownLabel(
                f"value {label!r} not among declared labels of "
                f"{self.variables[variable].name!r}"
            ) from None

    def label_of(self, variable: int, index: int) -> str:
        return self.value_labels[variable][index]


@dataclass(frozen=True)
class Dataset:
    schema: Schema
    rows: np.ndarray
    name: str = "dataset"

    def __post_init__(self):
        rows = np.array(self.rows, dtype=np.int64)
        if rows.size == 0:
            rows = rows.reshape(0, self.schema.m)
        if rows.ndim != 2 or rows.shape[1] != self.schema.m:
            raise ConfigError(f"rows must have {self.schema.m} columns")
        for i, card in enumerate(self.schema.cardinalities):
            if rows.shape[0] and (rows[:, i].min() < 0 or rows[:, i].max() >= card):
                raise ConfigError(
                    f"column {self.schema.variables[i].name!r} holds values outside "
                    f"0..{card - 1}"
                )
        rows.setflags(write=False)
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return int(self.rows.shape[0])


@dataclass(frozen=True)
class FoldPlan:
    fold_of_row: np.ndarray
    k: int
    seed: int

    def __post_init__(self):
        arr = np.array(self.fold_of_row, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "fold_of_row", arr)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of_row == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of_row != fold)


# --- discretization ---


def discretize(column, bins: int, strategy: str = "equal_frequency"):
    """Map a real column to bin indices; returns (indices, cut_points).

    ``equal_width`` splits [min, max] evenly; ``equal_frequency`` cuts at
    rank midpoints so that, absent ties, occupancies differ by at most one.
    Duplicate cut points produced by ties are merged, which reduces the
    effective number of bins. A value equal to a cut point falls in the
    lower bin.
    """
    col = np.asarray(column, dtype=float)
    if col.size == 0:
        raise EmptyInput("cannot discretize an empty column")
    if not np.all(np.isfinite(col)):
        raise MalformedRecord("continuous column contains non-finite values")
    if bins < 2:
        raise ConfigError(f"bins={bins}; need at least 2")
    lo, hi = float(col.min()), float(col.max())
    if lo == hi:
        raise ConstantColumn(f"all {col.size} values equal {lo}; cannot form 2 bins")

    if strategy == "equal_width":
        cuts = lo + (hi - lo) * np.arange(1, bins) / bins
        cuts = np.unique(cuts[(cuts > lo) & (cuts < hi)])
    elif strategy == "equal_frequency":
        # Candidate cuts are midpoints between consecutive distinct values;
        # each target rank n*j/bins picks the nearest candidate, so ties
        # merge cuts instead of producing empty bins.
        ordered = np.sort(col)
        distinct, first_pos = np.unique(ordered, return_index=True)
        split_pos = first_pos[1:]
        candidates = 0.5 * (distinct[:-1] + distinct[1:])
        targets = [(col.size * j) // bins for j in range(1, bins)]
        chosen = {
            float(candidates[np.argmin(np.abs(split_pos - t))]) for t in targets
        }
        cuts = np.unique(sorted(chosen))
    else:
        raise ConfigError(f"unknown discretization strategy {strategy!r}")

    if cuts.size == 0:
        raise ConstantColumn("no usable cut point separates the values")
    indices = np.searchsorted(cuts, col, side="left")
    return indices.astype(np.int64), cuts


def _bin_labels(cuts: np.ndarray) -> tuple[str, ...]:
    edges = ["-inf"] + [f"{c:g}" for c in cuts] + ["inf"]
    return tuple(f"({lo}, {hi}]" for lo, hi in zip(edges[:-1], edges[1:]))


# --- schema configuration ---


@dataclass(frozen=True)
class VariableConfig:
    name: str
    kind: str
    labels: tuple[str, ...] = ()
    bins: int = 4
    strategy: str = "equal_frequency"


@dataclass(frozen=True)
class SchemaConfig:
    variables: tuple[VariableConfig, ...]
    class_name: str | None = None
    header: str = "auto"

    @classmethod
    def from_dict(cls, cfg: dict) -> "SchemaConfig":
        try:
            raw_vars = cfg["variables"]
        except (KeyError, TypeError):
            raise ConfigError("schema config needs a 'variables' list") from None
        variables = []
        for entry in raw_vars:
            name = entry.get("name")
            kind = entry.get("kind")
            if not name or kind not in (CATEGORICAL, CONTINUOUS):
                raise ConfigError(f"bad variable entry: {entry!r}")
            if kind == CATEGORICAL:
                labels = tuple(str(x) for x in entry.get("labels", ()))
                if len(labels) < 2:
                    raise ConfigError(f"categorical {name!r} needs >= 2 labels")
                variables.append(VariableConfig(name=name, kind=kind, labels=labels))
            else:
                variables.append(VariableConfig(
                    name=name, kind=kind,
                    bins=int(entry.get("bins", 4)),
                    strategy=str(entry.get("strategy", "equal_frequency")),
                ))
        return cls(
            variables=tuple(variables),
            class_name=cfg.get("class"),
            header=str(cfg.get("header", "auto")),
        )

    def class_position(self) -> int:
        if self.class_name is None:
            return len(self.variables) - 1
        for i, v in enumerate(self.variables):
            if v.name == self.class_name:
                return i
        raise ConfigError(f"class variable {self.class_name!r} not declared")


# --- CSV loading ---


def load_csv(text, config: SchemaConfig | dict, name: str = "dataset") -> Dataset:
    """Parse CSV records against a schema config into an index matrix.

    Categorical fields map to the position of their label in the declared
    order; continuous fields are parsed as finite reals and discretized.
    Rows with missing fields ('' or '?') are dropped with a counted warning.
    The first line is skipped when it repeats the declared variable names
    (or always/never, per the config's ``header`` setting).
    """
    if isinstance(config, dict):
        config = SchemaConfig.from_dict(config)
    if isinstance(text, str):
        stream = io.StringIO(text)
    else:
        stream = text
    reader = csv.reader(stream)
    records = [row for row in reader if row]
    names = [v.name for v in config.variables]
    m = len(names)

    if not records:
        raise EmptyInput("no CSV records found")
    if config.header == "yes":
        records = records[1:]
    elif config.header == "auto":
        if [f.strip() for f in records[0]] == names:
            records = records[1:]
    elif config.header != "no":
        raise ConfigError(f"header must be auto|yes|no, got {config.header!r}")

    kept: list[list[str]] = []
    dropped = 0
    for lineno, rec in enumerate(records, start=1):
        fields = [f.strip() for f in rec]
        if len(fields) != m:
            raise MalformedRecord(
                f"record {lineno} has {len(fields)} fields, expected {m}"
            )
        if any(f in MISSING_TOKENS for f in fields):
            dropped += 1
            continue
        kept.append(fields)
    if dropped:
        log.warning("dropped %d record(s) with missing values", dropped)

    class_index = config.class_position()
    n = len(kept)
    columns: list[np.ndarray] = []
    cardinalities: list[int] = []
    value_labels: list[tuple[str, ...]] = []
    for j, vc in enumerate(config.variables):
        raw = [rec[j] for rec in kept]
        if vc.kind == CATEGORICAL:
            lookup = {lab: i for i, lab in enumerate(vc.labels)}
            try:
                col = np.array([lookup[x] for x in raw], dtype=np.int64)
            except KeyError as exc:
                raise UnknownLabel(
                    f"value {exc.args[0]!r} not among declared labels of {vc.name!r}"
                ) from None
            columns.append(col)
            cardinalities.append(len(vc.labels))
            value_labels.append(vc.labels)
        else:
            if n == 0:
                raise EmptyInput(
                    f"cannot discretize continuous variable {vc.name!r} without records"
                )
            try:
                values = np.array([float(x) for x in raw])
            except ValueError as exc:
                raise MalformedRecord(f"column {vc.name!r}: {exc}") from None
            if not np.all(np.isfinite(values)):
                raise MalformedRecord(f"column {vc.name!r} contains non-finite values")
            idx, cuts = discretize(values, vc.bins, vc.strategy)
            columns.append(idx)
            cardinalities.append(len(cuts) + 1)
            value_labels.append(_bin_labels(cuts))

    schema = Schema(
        variables=tuple(Variable(v.name, v.kind) for v in config.variables),
        cardinalities=tuple(cardinalities),
        class_index=class_index,
        value_labels=tuple(value_labels),
    )
    rows = np.stack(columns, axis=1) if n else np.zeros((0, m), dtype=np.int64)
    return Dataset(schema=schema, rows=rows, name=name)


def labels_for_rows(dataset: Dataset) -> list[list[str]]:
    """Map index rows back to their labels (round-trip of load_csv)."""
    return [
        [dataset.schema.label_of(j, int(v)) for j, v in enumerate(row)]
        for row in dataset.rows
    ]


# --- fold and subsample plans ---


def make_folds(n: int, k: int, seed: int) -> FoldPlan:
    """Uniformly random balanced partition of n rows into k folds."""
    if k < 2:
        raise ConfigError(f"fold count k={k}; need at least 2")
    if k > n:
        raise TooFewRows(f"cannot split {n} rows into {k} folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    fold_of_row = np.empty(n, dtype=np.int64)
    fold_of_row[perm] = np.arange(n) % k
    return FoldPlan(fold_of_row=fold_of_row, k=k, seed=seed)


def subsample(dataset: Dataset, s: int, seed: int) -> Dataset:
    """s distinct rows without replacement, original order preserved."""
    if s < 1:
        raise ConfigError(f"subsample size s={s}; need at least 1")
    if s > dataset.n:
        raise SampleTooLarge(f"s={s} exceeds the {dataset.n} available rows")
    idx = choose_indices(np.arange(dataset.n), s, seed)
    return Dataset(schema=dataset.schema, rows=dataset.rows[idx], name=dataset.name)


def choose_indices(pool: np.ndarray, s: int, seed: int) -> np.ndarray:
    """The index-level primitive behind subsample, shared with the evaluator."""
    rng = np.random.default_rng(seed)
    return np.sort(rng.choice(pool, size=s, replace=False))
