"""Specification test: can a fixed attention rule rationalize the data?

Given choice frequencies with per-period sample sizes and a candidate
attention rule (typically the best fit from a simulated pool), the test
statistic is the sample size times the variance-weighted squared distance
between the observed frequencies and the closest model prediction, with
the preference distribution constrained slightly inside the simplex by a
tuning parameter.  Critical values come from a recentered multinomial
bootstrap: resampled frequencies are shifted so the fitted prediction is
exactly true under the resampling scheme, which makes the bootstrap
distribution mimic the statistic's null distribution at the least
favorable point of the constraint cone.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from dataclasses import replace as _replace

from .core import AttentionRule, ChoiceDataset, Menu, OrderingSet, PreferenceDistribution, enumerate_sets
from .errors import ConfigurationError, ValidationError
from .sampler import sample_attention_rule
from .solvers import constrained_lstsq_batch
from .transform import ChoiceTransform, build_choice_transform, design_matrix, design_matrix_batch


@dataclass(frozen=True)
class TestConfig:
    """Configuration of the bootstrap specification test.

    Attributes:
        tau_n: simplex-shrinkage tuning parameter; ``None`` selects
            ``sqrt(log(d_pref) / n)`` capped at ``1 / (2 d_pref)``.
        n_boot: bootstrap replications (L).
        alpha: nominal level, in (0, 0.5).
        seed: RNG seed for the bootstrap resampling.
        simplex_sum: keep the unit-sum constraint on the preference vector
            (matching the model).  Disable for the literal lower-bound-only
            minimization.
        weight_floor: variances at or below this are dropped by the
            generalized inverse.
    """

    tau_n: float | None = None
    n_boot: int = 999
    alpha: float = 0.05
    seed: int | np.random.SeedSequence | None = None
    simplex_sum: bool = True
    weight_floor: float = 1e-12

    def __post_init__(self):
        if self.n_boot < 1:
            raise ConfigurationError("need at least one bootstrap replication")
        if not (0.0 < self.alpha < 0.5):
            raise ConfigurationError("alpha must lie in (0, 0.5)")
        if self.tau_n is not None and self.tau_n < 0:
            raise ConfigurationError("tau_n must be nonnegative")


@dataclass(frozen=True)
class VarianceWeights:
    """Per-cell variance estimates and their generalized inverse.

    ``omega[i]`` estimates the variance of the i-th flattened choice
    frequency (``pi * (1 - pi) / n_t`` for its period); ``inverse[i]`` is
    ``1 / omega[i]`` where the variance exceeds the floor and zero
    otherwise, dropping degenerate cells from the quadratic form.
    """

    omega: NDArray[np.float64]
    inverse: NDArray[np.float64]
    floor: float


@dataclass(frozen=True)
class TestResult:
    """Outcome of :func:`bootstrap_test`."""

    statistic: float
    critical_value: float
    p_value: float
    reject: bool
    eta_hat: NDArray[np.float64]
    p_min: PreferenceDistribution
    tau_n: float
    alpha: float
    n_boot: int
    bootstrap_stats: NDArray[np.float64]
    degenerate: bool = False

    def summary(self) -> str:
        verdict = "reject" if self.reject else "fail to reject"
        return (
            f"statistic T_n   : {self.statistic:.6g}\n"
            f"critical value  : {self.critical_value:.6g} "
            f"(level {self.alpha:g}, {self.n_boot} replications)\n"
            f"p-value         : {self.p_value:.4f}\n"
            f"decision        : {verdict}"
        )


def _omega(pi_flat: NDArray, counts_per_cell: NDArray, floor: float):
    omega = pi_flat * (1.0 - pi_flat) / counts_per_cell
    inverse = np.where(omega > floor, 1.0 / np.where(omega > floor, omega, 1.0), 0.0)
    return omega, inverse


def variance_weights(
    pi: ChoiceDataset, floor: float = 1e-12
) -> VarianceWeights:
    """Binomial variance estimates per cell with a generalized inverse.

    Raises:
        ValidationError: the dataset carries no period counts.
    """
    if pi.period_counts is None:
        raise ValidationError("variance weights need per-period sample sizes")
    counts = np.repeat(np.asarray(pi.period_counts, dtype=np.float64), pi.n)
    if np.any(counts <= 0):
        raise ValidationError("period counts must be positive for weighting")
    omega, inverse = _omega(pi.vec(), counts, floor)
    return VarianceWeights(omega=omega, inverse=inverse, floor=floor)


def default_tau(d_pref: int, n_total: int) -> float:
    """Default shrinkage: sqrt(log d / n), capped at 1/(2d)."""
    if n_total <= 0:
        raise ValidationError("total sample size must be positive")
    return float(min(np.sqrt(np.log(d_pref) / n_total), 0.5 / d_pref))


def test_statistic(
    pi: ChoiceDataset,
    rule: AttentionRule,
    transform: ChoiceTransform,
    weights: VarianceWeights,
    tau_n: float,
    n_total: int | None = None,
    *,
    simplex_sum: bool = True,
) -> tuple[float, PreferenceDistribution, NDArray[np.float64]]:
    """Weighted minimum-distance statistic for a fixed attention rule.

    Minimizes ``n * (pi - M p)' diag(inverse) (pi - M p)`` over preference
    vectors with every component at least ``tau_n / d_pref`` (and unit sum
    unless ``simplex_sum`` is off).  Returns the statistic, the minimizer,
    and the fitted frequency vector used to recenter the bootstrap.

    Raises:
        ConfigurationError: infeasible shrinkage (``tau_n > 1 / d_pref``).
    """
    d = transform.d_pref
    if tau_n > 1.0 / d + 1e-12:
        raise ConfigurationError(
            f"tau_n={tau_n:g} exceeds 1/d_pref={1.0 / d:g}; the constraint "
            f"set is empty"
        )
    if n_total is None:
        n_total = pi.total_count
    m = design_matrix(rule, transform)
    b = pi.vec()
    if np.all(weights.inverse == 0.0):
        warnings.warn(
            "all variance weights are zero; the statistic degenerates to 0",
            RuntimeWarning,
        )
        p0 = np.full(d, 1.0 / d)
        return 0.0, PreferenceDistribution(p0), m @ p0
    p, obj, _ = constrained_lstsq_batch(
        m[None],
        b,
        weights=weights.inverse,
        lower=tau_n / d,
        total=1.0,
        sum_constraint=simplex_sum,
    )
    p = p[0]
    if not simplex_sum:
        # Without the sum constraint p is only bounded below; it is not a
        # distribution, so report the raw minimizer normalized for storage.
        p_store = p / p.sum() if p.sum() > 0 else np.full(d, 1.0 / d)
    else:
        p_store = p
    eta = m @ p
    return float(n_total * obj[0]), PreferenceDistribution(p_store), eta


def fit_test_rule(
    pi: ChoiceDataset,
    menu: Menu,
    orderings: OrderingSet,
    n_sims: int,
    sampler_config,
    config: TestConfig = TestConfig(),
) -> tuple[AttentionRule, ChoiceTransform]:
    """Select the candidate rule to test from a simulated pool.

    Draws ``n_sims`` rules and keeps the one minimizing the test's own
    weighted objective (the inner problem of the statistic, including the
    shrinkage bound).  Selecting by the unweighted fit instead routinely
    hands the test a rule that is fine on high-variance cells but poor on
    precisely measured ones, which drives the statistic up and makes the
    test reject data the pool could in fact explain.
    """
    if sampler_config.d_t != pi.d_t:
        raise ValidationError("sampler periods do not match the dataset")
    enum = enumerate_sets(menu, outside_mode=sampler_config.outside_mode)
    transform = build_choice_transform(menu, enum, orderings)
    weights = variance_weights(pi, floor=config.weight_floor)
    d = orderings.d_pref
    tau = config.tau_n if config.tau_n is not None else default_tau(d, pi.total_count)
    b = pi.vec()

    root = (
        sampler_config.seed
        if isinstance(sampler_config.seed, np.random.SeedSequence)
        else np.random.SeedSequence(sampler_config.seed)
    )
    children = root.spawn(n_sims)
    best_obj, best_rule = np.inf, None
    chunk = 1024
    for start in range(0, n_sims, chunk):
        rules = [
            sample_attention_rule(menu, orderings, _replace(sampler_config, seed=c))
            for c in children[start : start + chunk]
        ]
        blocks = np.stack([r.blocks() for r in rules])
        ms = design_matrix_batch(blocks, transform)
        _, obj, _ = constrained_lstsq_batch(
            ms,
            b,
            weights=weights.inverse,
            lower=tau / d,
            total=1.0,
            sum_constraint=config.simplex_sum,
        )
        k = int(np.argmin(obj))
        if obj[k] < best_obj:
            best_obj, best_rule = float(obj[k]), rules[k]
    return best_rule, transform


def bootstrap_test(
    pi: ChoiceDataset,
    rule: AttentionRule,
    transform: ChoiceTransform,
    config: TestConfig = TestConfig(),
) -> TestResult:
    """Recentered-bootstrap specification test of a fixed attention rule.

    Resamples choices within each period (multinomial with the observed
    period sizes), recenters every replication so the fitted prediction
    holds exactly, recomputes the variance weights per replication, and
    compares the statistic to the bootstrap distribution's upper quantile.

    The p-value is ``(1 + #{T*_l >= T_n}) / (L + 1)``; the decision
    compares T_n with the ``ceil((1 - alpha) (L + 1))``-th order statistic.
    """
    if pi.period_counts is None:
        raise ValidationError("bootstrap resampling needs per-period counts")
    d = transform.d_pref
    n_total = pi.total_count
    tau = config.tau_n if config.tau_n is not None else default_tau(d, n_total)

    weights = variance_weights(pi, floor=config.weight_floor)
    t_n, p_min, eta = test_statistic(
        pi, rule, transform, weights, tau, n_total,
        simplex_sum=config.simplex_sum,
    )
    degenerate = bool(np.all(weights.inverse == 0.0))

    m = design_matrix(rule, transform)
    b = pi.vec()
    rng = np.random.default_rng(config.seed)
    L = config.n_boot
    counts = np.asarray(pi.period_counts)
    d_t, n_items = pi.d_t, pi.n

    # Per-period multinomial resamples, stacked as (L, d_t * n_items).
    pi_star = np.empty((L, d_t, n_items))
    for t in range(d_t):
        draws = rng.multinomial(counts[t], pi.pi[t], size=L)
        pi_star[:, t, :] = draws / counts[t]
    pi_star = pi_star.reshape(L, d_t * n_items)

    counts_per_cell = np.repeat(counts.astype(np.float64), n_items)
    omega_star, inv_star = _omega(pi_star, counts_per_cell[None, :], config.weight_floor)
    targets = pi_star - b[None, :] + eta[None, :]

    _, obj_star, _ = constrained_lstsq_batch(
        np.broadcast_to(m, (L,) + m.shape),
        targets,
        weights=inv_star,
        lower=tau / d,
        total=1.0,
        sum_constraint=config.simplex_sum,
    )
    t_star = n_total * obj_star

    k = int(np.ceil((1.0 - config.alpha) * (L + 1)))
    k = min(max(k, 1), L)
    critical = float(np.sort(t_star)[k - 1])
    p_value = float((1.0 + np.sum(t_star >= t_n)) / (L + 1.0))
    return TestResult(
        statistic=t_n,
        critical_value=critical,
        p_value=p_value,
        reject=bool(t_n > critical),
        eta_hat=eta,
        p_min=p_min,
        tau_n=float(tau),
        alpha=config.alpha,
        n_boot=L,
        bootstrap_stats=t_star,
        degenerate=degenerate,
    )
