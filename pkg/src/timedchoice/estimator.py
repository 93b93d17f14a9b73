"""Simulation-based estimation of the preference distribution.

The attention rule is a nuisance object living in a huge monotone
polytope, so it is not optimized over directly.  Instead a large number of
admissible rules is drawn at random; for each draw the preference
distribution solving the simplex-constrained least-squares fit to the
observed choice frequencies is computed, and the draw with the smallest
minimized distance wins.  With enough draws the pool covers a
neighborhood of the data-generating rule and the winning fit recovers the
preference distribution (exactly, when the design has full column rank).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.typing import NDArray

from .core import (
    AttentionRule,
    ChoiceDataset,
    Menu,
    OrderingSet,
    PreferenceDistribution,
    enumerate_sets,
)
from .errors import SolverError, ValidationError
from .sampler import SamplerConfig, sample_attention_rule
from .solvers import constrained_lstsq, constrained_lstsq_batch
from .transform import ChoiceTransform, build_choice_transform, design_matrix_batch

#: Rules are sampled and solved in chunks of this many at a time.
CHUNK = 512


@dataclass(frozen=True)
class EstimationResult:
    """Best-of-K bundle from :func:`estimate`.

    ``per_sim_distances`` holds the minimized squared distance of every
    draw (sampled draws first, injected extras after), with ``inf`` marking
    draws whose solve failed and was skipped.
    """

    best_rule: AttentionRule
    best_p: PreferenceDistribution
    best_distance: float
    best_index: int
    per_sim_distances: NDArray[np.float64]
    n_sims: int
    seed: int | None
    failed_indices: tuple[int, ...] = ()

    def summary(self) -> str:
        lines = [
            f"simulated rules : {self.n_sims}"
            + (f" (+{len(self.per_sim_distances) - self.n_sims} injected)"
               if len(self.per_sim_distances) > self.n_sims else ""),
            f"best draw       : #{self.best_index}",
            f"best distance   : {self.best_distance:.6g}",
            "preference weights:",
        ]
        for i, w in enumerate(self.best_p.p):
            lines.append(f"  type {i}: {w:.5f}")
        return "\n".join(lines)


def solve_p(
    rule: AttentionRule,
    transform: ChoiceTransform,
    pi: ChoiceDataset,
    *,
    kkt_tol: float = 1e-8,
    max_iter: int = 50_000,
) -> tuple[PreferenceDistribution, float]:
    """Best-fitting preference distribution for one attention rule.

    Minimizes the squared Euclidean distance between the model's choice
    frequencies and ``pi`` over the probability simplex.  Returns the
    minimizer and the minimized squared distance.

    Raises:
        SolverError: the KKT residual did not reach ``kkt_tol``; the error
            carries the best iterate found.
    """
    if pi.d_t != rule.d_t or pi.n != transform.menu.n:
        raise ValidationError("dataset shape does not match rule/transform")
    m = design_matrix_batch(rule.blocks()[None], transform)[0]
    result = constrained_lstsq(
        m, pi.vec(), kkt_tol=kkt_tol, max_iter=max_iter
    )
    return PreferenceDistribution(result.p), float(result.objective)


def estimate(
    pi: ChoiceDataset,
    menu: Menu,
    orderings: OrderingSet,
    k: int,
    sampler_config: SamplerConfig,
    *,
    extra_rules: tuple[AttentionRule, ...] = (),
    kkt_tol: float = 1e-8,
    max_iter: int = 50_000,
) -> EstimationResult:
    """Best-of-K simulation estimator of the preference distribution.

    Draws ``k`` attention rules (deterministically from the sampler seed;
    draw i depends only on the seed and i, so results for nested budgets
    share their common prefix), fits each by constrained least squares and
    returns the minimizer.  ``extra_rules`` are appended to the candidate
    pool after the sampled draws, which is useful for injecting known
    candidates.  A draw whose solve fails is recorded and skipped; only a
    fully failed pool raises.
    """
    if k < 1:
        raise ValidationError("need at least one simulation")
    if sampler_config.d_t != pi.d_t:
        raise ValidationError(
            f"sampler is configured for {sampler_config.d_t} periods, "
            f"dataset has {pi.d_t}"
        )
    enum = enumerate_sets(menu, outside_mode=sampler_config.outside_mode)
    transform = build_choice_transform(menu, enum, orderings)
    b = pi.vec()

    root = (
        sampler_config.seed
        if isinstance(sampler_config.seed, np.random.SeedSequence)
        else np.random.SeedSequence(sampler_config.seed)
    )
    children = root.spawn(k)
    total = k + len(extra_rules)
    distances = np.full(total, np.inf)
    failed: list[int] = []
    best_idx = -1
    best_dist = np.inf
    best_p: NDArray | None = None
    best_rule: AttentionRule | None = None

    def consume(indices, rules):
        nonlocal best_idx, best_dist, best_p, best_rule
        blocks = np.stack([r.blocks() for r in rules])
        ms = design_matrix_batch(blocks, transform)
        try:
            p_hat, obj, res = constrained_lstsq_batch(
                ms, b, kkt_tol=kkt_tol, max_iter=max_iter
            )
        except Exception:
            # Degenerate chunk: retry one by one so a single bad draw
            # cannot take down the run.
            for idx, rule in zip(indices, rules):
                try:
                    p_one, d_one = solve_p(
                        rule, transform, pi, kkt_tol=kkt_tol, max_iter=max_iter
                    )
                except (SolverError, FloatingPointError):
                    failed.append(idx)
                    continue
                distances[idx] = d_one
                if d_one < best_dist:
                    best_idx, best_dist = idx, d_one
                    best_p, best_rule = p_one.p, rule
            return
        ok = res <= kkt_tol
        for j, idx in enumerate(indices):
            if not ok[j]:
                failed.append(idx)
                continue
            distances[idx] = obj[j]
            if obj[j] < best_dist:
                best_idx, best_dist = idx, float(obj[j])
                best_p, best_rule = p_hat[j], rules[j]

    for rule in extra_rules:
        if rule.set_index.masks != enum.masks:
            raise ValidationError(
                "an injected rule uses a different set enumeration"
            )
        if rule.d_pref != orderings.d_pref or rule.d_t != pi.d_t:
            raise ValidationError("an injected rule has incompatible shape")

    pending_idx: list[int] = []
    pending_rules: list[AttentionRule] = []
    for i in range(k):
        cfg = replace(sampler_config, seed=children[i])
        pending_idx.append(i)
        pending_rules.append(sample_attention_rule(menu, orderings, cfg))
        if len(pending_idx) == CHUNK:
            consume(pending_idx, pending_rules)
            pending_idx, pending_rules = [], []
    for j, rule in enumerate(extra_rules):
        pending_idx.append(k + j)
        pending_rules.append(rule)
    if pending_idx:
        consume(pending_idx, pending_rules)

    if best_rule is None:
        raise SolverError("every simulated rule failed to solve")
    seed_echo = (
        sampler_config.seed if isinstance(sampler_config.seed, int) else None
    )
    return EstimationResult(
        best_rule=best_rule,
        best_p=PreferenceDistribution(best_p),
        best_distance=float(best_dist),
        best_index=int(best_idx),
        per_sim_distances=distances,
        n_sims=k,
        seed=seed_echo,
        failed_indices=tuple(failed),
    )
