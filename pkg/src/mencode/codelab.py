"""One-parameter codelength laboratory for the Bernoulli family.

Implements the two-part-code machinery on a single success probability
theta in (0, 1): Kraft feasibility checks, Fisher information and the
optimal precision quantum, the Wallace-Freeman two-part and expected
codelengths, the three point estimators (WF, pointwise, volumewise),
quantized codebook construction, exact strict-MML search on tiny discrete
instances, and the normalized two-part code.

All lengths are computed in nats; ``nats_to_bits`` converts for display.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
from scipy import integrate, optimize

from .errors import (
    BoundaryTheta,
    InstanceTooLarge,
    NoInteriorMaximum,
    NonpositivePrecision,
    UncoveredOutcome,
    ZeroPriorDensity,
)

LN2 = math.log(2.0)

# Numeric maximization happens on [_EDGE, 1 - _EDGE]; a maximizer found in
# the outermost grid cell is treated as a boundary supremum.
_EDGE = 1e-9
_SCAN_POINTS = 2048


def nats_to_bits(x):
    return np.asarray(x, dtype=float) / LN2 if np.ndim(x) else float(x) / LN2


def bits_to_nats(x):
    return np.asarray(x, dtype=float) * LN2 if np.ndim(x) else float(x) * LN2


def _log_choose(n: int, k: int) -> float:
    return math.lgamma(n + 1) - math.lgamma(k + 1) - math.lgamma(n - k + 1)


def _check_interior(theta: float) -> float:
    theta = float(theta)
    if not 0.0 < theta < 1.0:
        raise BoundaryTheta(f"theta={theta} must lie strictly inside (0, 1)")
    return theta


@dataclass(frozen=True)
class Outcome:
    """One encodable outcome: a label, its success count, and log-multiplicity."""

    label: str
    successes: int
    log_weight: float


@dataclass(frozen=True)
class BernoulliFamily:
    """n exchangeable binary trials with success probability theta.

    ``space`` selects the outcome space: ``suffstat`` treats the success
    count k as the datum (multiplicity C(n, k) folded into its
    probability), ``sequence`` enumerates all 2^n individual sequences.
    Outcome probabilities sum to one over either space for every interior
    theta.
    """

    n: int
    space: Literal["suffstat", "sequence"] = "suffstat"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("sample count n must be >= 1")
        if self.space not in ("suffstat", "sequence"):
            raise ValueError(f"unknown outcome space {self.space!r}")

    def outcomes(self) -> tuple[Outcome, ...]:
        if self.space == "suffstat":
            return tuple(
                Outcome(label=f"k={k}", successes=k, log_weight=_log_choose(self.n, k))
                for k in range(self.n + 1)
            )
        seqs = ["".join(bits) for bits in itertools.product("01", repeat=self.n)]
        seqs.sort(key=lambda s: (s.count("1"), s))
        return tuple(Outcome(label=s, successes=s.count("1"), log_weight=0.0) for s in seqs)

    def log_likelihood(self, k: int, theta: float) -> float:
        """Sequence-level log-likelihood: k ln(theta) + (n-k) ln(1-theta)."""
        theta = _check_interior(theta)
        if not 0 <= k <= self.n:
            raise ValueError(f"success count k={k} outside 0..{self.n}")
        return k * math.log(theta) + (self.n - k) * math.log1p(-theta)

    def outcome_log_prob(self, outcome: Outcome, theta: float) -> float:
        return outcome.log_weight + self.log_likelihood(outcome.successes, theta)


@dataclass(frozen=True)
class PriorDensity:
    """A prior density h on (0, 1); ``uniform`` short-circuits evaluation."""

    fn: Callable[[float], float]
    uniform: bool = False
    name: str = "custom"

    def __call__(self, theta: float) -> float:
        if self.uniform:
            return 1.0
        return float(self.fn(theta))

    @classmethod
    def make_uniform(cls) -> "PriorDensity":
        return cls(fn=lambda _t: 1.0, uniform=True, name="uniform")

    @classmethod
    def beta(cls, a: float, b: float) -> "PriorDensity":
        if a <= 0 or b <= 0:
            raise ValueError("beta prior needs a > 0 and b > 0")
        lognorm = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)

        def pdf(t: float) -> float:
            return math.exp(lognorm + (a - 1) * math.log(t) + (b - 1) * math.log1p(-t))

        prior = cls(fn=pdf, uniform=(a == 1 and b == 1), name=f"beta({a:g},{b:g})")
        return prior

    @classmethod
    def from_function(cls, fn: Callable[[float], float], name: str = "custom",
                      tol: float = 1e-6) -> "PriorDensity":
        """Wrap a density, checking it integrates to one over (0, 1)."""
        mass, _err = integrate.quad(fn, 0.0, 1.0, limit=200)
        if abs(mass - 1.0) > tol:
            raise ValueError(f"prior density integrates to {mass:.8f}, not 1")
        return cls(fn=fn, uniform=False, name=name)


UNIFORM_PRIOR = PriorDensity.make_uniform()


# --- Kraft feasibility ---


def kraft_slack(lengths_bits) -> float:
    """1 - sum(2^-L) for codelengths in bits; >= 0 for a valid prefix code."""
    lens = np.asarray(lengths_bits, dtype=float)
    if lens.size and lens.min() < 0:
        raise ValueError("codelengths must be nonnegative")
    return float(1.0 - np.sum(np.exp2(-lens))) if lens.size else 1.0


# --- information geometry ---


def fisher_information(model: BernoulliFamily, theta: float) -> float:
    """Expected information I_n(theta) = n / (theta (1 - theta)), nats convention."""
    theta = _check_interior(theta)
    return model.n / (theta * (1.0 - theta))


def observed_information(model: BernoulliFamily, k: int, theta: float) -> float:
    """Observed information -d^2/dtheta^2 of the sequence log-likelihood."""
    theta = _check_interior(theta)
    return k / theta**2 + (model.n - k) / (1.0 - theta) ** 2


def optimal_precision(model: BernoulliFamily, theta: float) -> float:
    """The quantum d minimizing the expected two-part length: d^2 = 12 / I_n."""
    return math.sqrt(12.0 / fisher_information(model, theta))


# --- codelength formulas ---


def _prior_value(prior: PriorDensity, theta: float) -> float:
    h = prior(theta)
    if h <= 0.0:
        raise ZeroPriorDensity(f"prior density is {h} at theta={theta}")
    return h


def wf_two_part_length(model: BernoulliFamily, k: int, theta: float, d: float,
                       prior: PriorDensity) -> float:
    """Two-part length in nats for stating theta to precision d, then the data.

    -ln(d h(theta)) - ln f(x|theta) + (d^2 / 24) J(x; theta), with J the
    observed information.
    """
    theta = _check_interior(theta)
    if d <= 0.0:
        raise NonpositivePrecision(f"precision d={d} must be positive")
    h = _prior_value(prior, theta)
    return (
        -math.log(d * h)
        - model.log_likelihood(k, theta)
        + d**2 / 24.0 * observed_information(model, k, theta)
    )


def wf_expected_length(model: BernoulliFamily, k: int, theta: float,
                       prior: PriorDensity) -> float:
    """Expected two-part length in nats at the optimal precision.

    -ln h(theta) + (1/2) ln(I_n(theta) / 12) - ln f(x|theta) + 1/2, with
    I_n the expected information.
    """
    theta = _check_interior(theta)
    h = _prior_value(prior, theta)
    return (
        -math.log(h)
        + 0.5 * math.log(fisher_information(model, theta) / 12.0)
        - model.log_likelihood(k, theta)
        + 0.5
    )


def uni_h_length(theta_hat: float, num_codewords: int, prior: PriorDensity) -> float:
    """First-part length of the prior-corrected uniform code: ln N - ln h(theta)."""
    if num_codewords < 1:
        raise ValueError("codebook must contain at least one codeword")
    h = _prior_value(prior, theta_hat)
    return math.log(num_codewords) - math.log(h)


# --- point estimators ---


def _numeric_argmax(log_objective: Callable[[np.ndarray], np.ndarray]) -> float:
    """Grid scan plus bounded refinement; raises if the maximum sits on the edge."""
    grid = np.linspace(_EDGE, 1.0 - _EDGE, _SCAN_POINTS)
    vals = log_objective(grid)
    best = int(np.argmax(vals))
    if best == 0 or best == _SCAN_POINTS - 1:
        raise NoInteriorMaximum("objective is maximized on the parameter boundary")
    lo, hi = grid[best - 1], grid[best + 1]
    res = optimize.minimize_scalar(
        lambda t: -float(log_objective(np.asarray([t]))[0]),
        bounds=(lo, hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return float(res.x)


def _log_prior_vec(prior: PriorDensity, thetas: np.ndarray) -> np.ndarray:
    if prior.uniform:
        return np.zeros_like(thetas)
    vals = np.array([prior(t) for t in thetas], dtype=float)
    if np.any(vals <= 0.0):
        # Zero-density regions are legal in h; they simply cannot host the max.
        out = np.full_like(vals, -np.inf)
        pos = vals > 0.0
        out[pos] = np.log(vals[pos])
        return out
    return np.log(vals)


def mml_wf_estimate(model: BernoulliFamily, k: int, prior: PriorDensity) -> float:
    """argmax of f(x|theta) h(theta) / sqrt(I_n(theta)).

    Uniform prior has the closed form (k + 1/2) / (n + 1); other priors are
    maximized numerically.
    """
    n = model.n
    if prior.uniform:
        return (k + 0.5) / (n + 1.0)

    def obj(t: np.ndarray) -> np.ndarray:
        loglik = k * np.log(t) + (n - k) * np.log1p(-t)
        return loglik + _log_prior_vec(prior, t) + 0.5 * (np.log(t) + np.log1p(-t))

    return _numeric_argmax(obj)


def mml_p_estimate(model: BernoulliFamily, k: int, prior: PriorDensity) -> float:
    """argmax of f(x|theta) h(theta): the Bayesian posterior mode.

    Uniform prior reduces to the MLE k/n, which has no interior maximum
    when k is 0 or n.
    """
    n = model.n
    if prior.uniform:
        if k == 0 or k == n:
            raise NoInteriorMaximum(f"posterior mode for k={k}, n={n} sits on the boundary")
        return k / n

    def obj(t: np.ndarray) -> np.ndarray:
        return k * np.log(t) + (n - k) * np.log1p(-t) + _log_prior_vec(prior, t)

    return _numeric_argmax(obj)


def mml_v_estimate(model: BernoulliFamily, k: int, prior: PriorDensity) -> float:
    """argmax of f(x|theta) h(theta) sqrt(I_n(theta)).

    Uniform prior has the closed form (k - 1/2) / (n - 1) for 1 <= k <= n-1
    (and n >= 2); otherwise the sqrt-information factor pushes the supremum
    to the boundary.
    """
    n = model.n
    if prior.uniform:
        if k < 0.5 or k > n - 0.5 or n < 2:
            raise NoInteriorMaximum(
                f"volumewise objective for k={k}, n={n} has a boundary supremum"
            )
        return (k - 0.5) / (n - 1.0)

    def obj(t: np.ndarray) -> np.ndarray:
        loglik = k * np.log(t) + (n - k) * np.log1p(-t)
        return loglik + _log_prior_vec(prior, t) - 0.5 * (np.log(t) + np.log1p(-t))

    return _numeric_argmax(obj)


# --- quantized codebooks ---


@dataclass(frozen=True)
class QuantizedCodebook:
    """Sorted encodeable parameter values with codelengths in nats."""

    values: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        lengths = np.array(self.lengths, dtype=float)
        if values.ndim != 1 or values.shape != lengths.shape:
            raise ValueError("values and lengths must be matching 1-d arrays")
        if values.size == 0:
            raise ValueError("codebook may not be empty")
        if values.min() <= 0.0 or values.max() >= 1.0:
            raise BoundaryTheta("codebook values must lie strictly inside (0, 1)")
        if np.any(np.diff(values) <= 0.0):
            raise ValueError("codebook values must be strictly increasing")
        if np.any(~np.isfinite(lengths)) or lengths.min() < 0.0:
            raise ValueError("codelengths must be finite and nonnegative")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "lengths", lengths)
        values.setflags(write=False)
        lengths.setflags(write=False)

    @property
    def size(self) -> int:
        return int(self.values.size)

    def kraft_slack_bits(self) -> float:
        return kraft_slack(nats_to_bits(self.lengths))


def _wf_spaced_cells(size: int) -> tuple[np.ndarray, np.ndarray]:
    """Arcsine-quantile placement: equal partition of the integral of sqrt(I_n).

    Returns (values, cell_widths). The cumulative transform for Bernoulli is
    F(theta) = (2/pi) arcsin(sqrt(theta)), so cell j spans
    [F^-1((j-1)/N), F^-1(j/N)] with the codeword at the F-midpoint
    sin^2(pi (2j-1) / (4N)).
    """
    j = np.arange(1, size + 1, dtype=float)
    values = np.sin(np.pi * (2 * j - 1) / (4 * size)) ** 2
    bounds = np.sin(np.pi * np.arange(size + 1, dtype=float) / (2 * size)) ** 2
    return values, np.diff(bounds)


def build_codebook(model: BernoulliFamily, prior: PriorDensity, size: int,
                   spacing: Literal["wf", "uniform_grid"] = "wf",
                   code: Literal["wf", "uni", "uni_h"] = "uni") -> QuantizedCodebook:
    """Construct a codebook of ``size`` values with lengths from the chosen code.

    ``wf`` spacing makes consecutive gaps proportional to 1 / sqrt(I_n);
    ``uniform_grid`` places values at j / (size + 1). Codes: ``wf`` charges
    -ln(d h(theta)) with d the local cell width, ``uni`` charges ln(size)
    everywhere, ``uni_h`` charges ln(size) - ln h(theta).
    """
    if size < 2:
        raise ValueError("codebook construction needs size >= 2")
    if spacing == "wf":
        values, widths = _wf_spaced_cells(size)
    elif spacing == "uniform_grid":
        values = np.arange(1, size + 1, dtype=float) / (size + 1)
        widths = np.full(size, 1.0 / (size + 1))
    else:
        raise ValueError(f"unknown spacing {spacing!r}")

    if code == "uni":
        lengths = np.full(size, math.log(size))
    elif code == "uni_h":
        lengths = np.array([uni_h_length(t, size, prior) for t in values])
    elif code == "wf":
        lengths = np.array(
            [-math.log(w * _prior_value(prior, t)) for t, w in zip(values, widths)]
        )
    else:
        raise ValueError(f"unknown code {code!r}")
    return QuantizedCodebook(values=values, lengths=lengths)


# --- marginal data distribution and expected lengths ---


def marginal_outcome_weights(model: BernoulliFamily, prior: PriorDensity) -> np.ndarray:
    """r(x) = integral of p(x|theta) h(theta) dtheta, per outcome, by quadrature."""
    n = model.n
    weights = []
    for out in model.outcomes():
        mult = math.exp(out.log_weight)
        k = out.successes

        def integrand(t: float, k=k, mult=mult) -> float:
            return mult * t**k * (1.0 - t) ** (n - k) * prior(t)

        mass, _err = integrate.quad(integrand, 0.0, 1.0, epsabs=1e-13, limit=200)
        weights.append(mass)
    return np.asarray(weights)


def _neg_log_prob_matrix(model: BernoulliFamily, thetas: np.ndarray) -> np.ndarray:
    """-ln p(outcome | theta) for every (theta, outcome) pair; shape (G, X)."""
    outs = model.outcomes()
    ks = np.array([o.successes for o in outs], dtype=float)
    lw = np.array([o.log_weight for o in outs])
    th = np.asarray(thetas, dtype=float)[:, None]
    return -(lw[None, :] + ks[None, :] * np.log(th) + (model.n - ks)[None, :] * np.log1p(-th))


def two_part_expected_length(model: BernoulliFamily, prior: PriorDensity,
                             codebook: QuantizedCodebook) -> float:
    """Expected codelength (nats) of the plain two-part code over r(x).

    Each outcome is encoded with the codeword minimizing its total length.
    """
    r = marginal_outcome_weights(model, prior)
    neglog = _neg_log_prob_matrix(model, codebook.values)
    totals = codebook.lengths[:, None] + neglog
    return float(np.sum(r * totals.min(axis=0)))


# --- strict MML search ---


@dataclass(frozen=True)
class SmmlResult:
    codebook: QuantizedCodebook
    assignment: np.ndarray
    expected_length: float
    outcomes: tuple[Outcome, ...]
    marginals: np.ndarray


def smml_search(model: BernoulliFamily, prior: PriorDensity,
                max_codebook_size: int, candidate_grid) -> SmmlResult:
    """Exact minimizer of the expected two-part length over tiny instances.

    Searches all codebooks drawn from ``candidate_grid`` with at most
    ``max_codebook_size`` codewords, jointly with the outcome assignment
    and the optimal first-part lengths (-ln of assigned marginal mass).
    Relies on the monotone likelihood ratio of the Bernoulli family: some
    optimal assignment splits the k-sorted outcomes into consecutive
    blocks served by increasing codewords, so a block dynamic program is
    exhaustive.
    """
    outs = model.outcomes()
    num_out = len(outs)
    if num_out > 64:
        raise InstanceTooLarge(f"outcome space has {num_out} points (limit 64)")
    grid = np.unique(np.asarray(candidate_grid, dtype=float))
    if grid.size > 32:
        raise InstanceTooLarge(f"candidate grid has {grid.size} points (limit 32)")
    if grid.size == 0:
        raise ValueError("candidate grid may not be empty")
    if max_codebook_size > 6:
        raise InstanceTooLarge(f"codebook size {max_codebook_size} exceeds limit 6")
    if max_codebook_size < 1:
        raise ValueError("max_codebook_size must be >= 1")
    if grid.min() <= 0.0 or grid.max() >= 1.0:
        raise BoundaryTheta("candidate grid must lie strictly inside (0, 1)")

    r = marginal_outcome_weights(model, prior)
    neglog = _neg_log_prob_matrix(model, grid)          # (G, X)
    num_grid = grid.size
    max_size = min(max_codebook_size, num_out, num_grid)

    # Prefix sums: data cost of block [a, b) under codeword g, and block mass.
    cum_cost = np.zeros((num_grid, num_out + 1))
    cum_cost[:, 1:] = np.cumsum(neglog * r[None, :], axis=1)
    cum_r = np.concatenate([[0.0], np.cumsum(r)])

    a_idx = np.arange(num_out)                           # block starts
    mass = cum_r[None, :] - cum_r[:, None]               # mass[a, b] = mass of [a, b)
    with np.errstate(divide="ignore", invalid="ignore"):
        ent = np.where(mass > 0.0, -mass * np.log(np.maximum(mass, 1e-300)), np.inf)

    INF = np.inf
    # dp[s][b][g]: first b outcomes in s blocks, last block coded by grid[g].
    dp = np.full((max_size + 1, num_out + 1, num_grid), INF)
    arg_a = np.zeros((max_size + 1, num_out + 1, num_grid), dtype=int)

    for b in range(1, num_out + 1):
        dp[1][b] = cum_cost[:, b] + ent[0, b]
    for s in range(2, max_size + 1):
        # prefix-min over the codeword axis of the previous layer
        prev = np.minimum.accumulate(dp[s - 1], axis=1)  # (X+1, G)
        for b in range(s, num_out + 1):
            a_range = np.arange(s - 1, b)
            # candidate[a, g] = dp_prefix[s-1][a][g-1] + cost(a, b, g) + ent(a, b)
            cost = cum_cost[:, b][None, :] - cum_cost[:, a_range].T
            cand = np.full((a_range.size, num_grid), INF)
            cand[:, 1:] = prev[a_range, :-1] + cost[:, 1:] + ent[a_range, b][:, None]
            best_a = np.argmin(cand, axis=0)
            dp[s][b] = cand[best_a, np.arange(num_grid)]
            arg_a[s][b] = a_range[best_a]

    best_val, best_s, best_g = INF, 1, 0
    for s in range(1, max_size + 1):
        for g in range(num_grid):
            if dp[s][num_out][g] < best_val:
                best_val, best_s, best_g = dp[s][num_out][g], s, g

    # Reconstruct blocks from the DP tables.
    blocks: list[tuple[int, int, int]] = []
    b, g = num_out, best_g
    for s in range(best_s, 0, -1):
        a = int(arg_a[s][b][g]) if s > 1 else 0
        blocks.append((a, b, g))
        if s > 1:
            prev_layer = dp[s - 1][a]
            g = int(np.argmin(prev_layer[: g]))  # prefix-min attained left of g
        b = a
    blocks.reverse()

    values = np.array([grid[g] for _a, _b, g in blocks])
    masses = np.array([cum_r[bb] - cum_r[aa] for aa, bb, _g in blocks])
    lengths = -np.log(masses)
    assignment = np.empty(num_out, dtype=int)
    for i, (aa, bb, _g) in enumerate(blocks):
        assignment[aa:bb] = i

    codebook = QuantizedCodebook(values=values, lengths=lengths)
    return SmmlResult(
        codebook=codebook,
        assignment=assignment,
        expected_length=float(best_val),
        outcomes=outs,
        marginals=r,
    )


# --- normalized two-part code ---


@dataclass(frozen=True)
class NormalizedTwoPart:
    outcomes: tuple[Outcome, ...]
    assignment: np.ndarray
    normalizers: np.ndarray
    plain_lengths: np.ndarray
    normalized_lengths: np.ndarray


def normalized_two_part(model: BernoulliFamily, codebook: QuantizedCodebook) -> NormalizedTwoPart:
    """Remove two-part redundancy by conditioning the data code on the region.

    Region D_i collects the outcomes whose plain two-part length is
    minimized by codeword i (ties to the lower index); the second-part
    code is renormalized over D_i, shortening every outcome whose region
    normalizer is below one. Lengths are in nats.
    """
    outs = model.outcomes()
    neglog = _neg_log_prob_matrix(model, codebook.values)     # (G, X)
    totals = codebook.lengths[:, None] + neglog
    if not np.all(np.isfinite(totals.min(axis=0))):
        raise UncoveredOutcome("an outcome has zero likelihood under every codeword")
    assignment = np.argmin(totals, axis=0)
    plain = totals[assignment, np.arange(len(outs))]

    probs = np.exp(-neglog)                                   # p(x | codeword)
    normalizers = np.array(
        [probs[i, assignment == i].sum() for i in range(codebook.size)]
    )
    log_norm = np.where(normalizers > 0.0, np.log(np.maximum(normalizers, 1e-300)), 0.0)
    normalized = plain + log_norm[assignment]
    return NormalizedTwoPart(
        outcomes=outs,
        assignment=assignment,
        normalizers=normalizers,
        plain_lengths=plain,
        normalized_lengths=normalized,
    )
