"""Linear-algebra form of the choice model.

A dataset is generated by an attention rule, a 0/1 choice transform and a
preference distribution through a product of three matrices: the attention
matrix maps (period) rows to consideration-set probabilities per preference
block, the transform maps each (preference, set) pair to the chosen item,
and the block-diagonal preference matrix mixes over types.  Re-expressing
the product as a design matrix times the preference vector turns estimation
of the preference distribution into constrained least squares.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .core import (
    AttentionRule,
    ChoiceDataset,
    ConsiderationSet,
    Menu,
    OrderingSet,
    PreferenceDistribution,
    SetEnumeration,
    best_in,
)
from .errors import ValidationError


@dataclass(frozen=True)
class ChoiceTransform:
    """0/1 matrix mapping (preference, consideration set) pairs to choices.

    Attributes:
        a: (d_pref * d_c, n * d_pref) matrix.  Rows are preference-major,
            then set (matching attention-rule columns).  Column
            ``item * d_pref + pref`` is one exactly when ``item`` is the
            best member of the row's set under the row's preference and the
            column's preference equals the row's.  Every row has a single
            one: each (preference, set) pair determines one choice.
        best: (d_pref, d_c) matrix of chosen item indices, a compact
            equivalent of ``a`` used on hot paths.
    """

    a: NDArray[np.float64]
    best: NDArray[np.int64]
    menu: Menu
    sets: SetEnumeration
    orderings: OrderingSet

    @property
    def d_pref(self) -> int:
        return self.orderings.d_pref

    @property
    def d_c(self) -> int:
        return self.sets.d_c

    def onehot(self) -> NDArray[np.float64]:
        """(d_pref, d_c, n) indicator tensor: who is chosen from each set."""
        d_pref, d_c = self.best.shape
        out = np.zeros((d_pref, d_c, self.menu.n))
        i, j = np.indices(self.best.shape)
        out[i, j, self.best] = 1.0
        out.setflags(write=False)
        return out


def build_choice_transform(
    menu: Menu, sets: SetEnumeration, orderings: OrderingSet
) -> ChoiceTransform:
    """Construct the choice transform for a menu, set enumeration and orderings."""
    if orderings.n != menu.n:
        raise ValidationError("orderings do not match the menu size")
    if sets.menu != menu:
        raise ValidationError("set enumeration was built for a different menu")
    d_pref, d_c, n = orderings.d_pref, sets.d_c, menu.n
    best = np.empty((d_pref, d_c), dtype=np.int64)
    for i, ordering in enumerate(orderings):
        for j, mask in enumerate(sets.masks):
            best[i, j] = best_in(ordering, ConsiderationSet(mask))
    a = np.zeros((d_pref * d_c, n * d_pref))
    for i in range(d_pref):
        rows = np.arange(d_c) + i * d_c
        a[rows, best[i] * d_pref + i] = 1.0
    a.setflags(write=False)
    best.setflags(write=False)
    return ChoiceTransform(a=a, best=best, menu=menu, sets=sets, orderings=orderings)


def block_diag(p: PreferenceDistribution, n: int) -> NDArray[np.float64]:
    """Block-diagonal preference matrix: n copies of p down the diagonal.

    Shape (n * d_pref, n); block b holds the preference vector in rows
    ``b*d_pref:(b+1)*d_pref`` of column b.
    """
    d = p.d_pref
    out = np.zeros((n * d, n))
    for b in range(n):
        out[b * d : (b + 1) * d, b] = p.p
    return out


def _check_compatible(rule: AttentionRule, transform: ChoiceTransform) -> None:
    if rule.set_index.masks != transform.sets.masks:
        raise ValidationError("rule and transform use different set enumerations")
    if rule.d_pref != transform.d_pref:
        raise ValidationError(
            f"rule has {rule.d_pref} preference blocks, transform expects "
            f"{transform.d_pref}"
        )


def predict_choices(
    rule: AttentionRule,
    transform: ChoiceTransform,
    p: PreferenceDistribution,
) -> ChoiceDataset:
    """Forward map: choice frequencies implied by (rule, transform, p).

    Entry (t, a) mixes, over preference types, the attention mass of every
    set whose best member is ``a``.  Rows are guaranteed stochastic when
    the inputs satisfy their invariants.
    """
    _check_compatible(rule, transform)
    if p.d_pref != transform.d_pref:
        raise ValidationError("preference vector length does not match transform")
    pi = np.einsum(
        "tpc,pcn,p->tn", rule.blocks(), transform.onehot(), p.p, optimize=True
    )
    return ChoiceDataset(pi=pi)


def design_matrix(
    rule: AttentionRule, transform: ChoiceTransform
) -> NDArray[np.float64]:
    """Design matrix M with ``M @ p = vec(predicted choice frequencies)``.

    Shape (d_t * n, d_pref); column i is the flattened prediction under a
    point mass on preference i.  Flattening is row-major over (period, item).
    """
    _check_compatible(rule, transform)
    cols = np.einsum("tpc,pcn->tnp", rule.blocks(), transform.onehot(), optimize=True)
    return cols.reshape(rule.d_t * transform.menu.n, transform.d_pref)


def design_matrix_batch(
    blocks: NDArray[np.float64], transform: ChoiceTransform
) -> NDArray[np.float64]:
    """Design matrices for a stack of rules given as (k, d_t, d_pref, d_c)."""
    k, d_t = blocks.shape[0], blocks.shape[1]
    cols = np.einsum("ktpc,pcn->ktnp", blocks, transform.onehot(), optimize=True)
    return cols.reshape(k, d_t * transform.menu.n, transform.d_pref)


def conditional_choice_matrix(
    rule: AttentionRule, transform: ChoiceTransform
) -> NDArray[np.float64]:
    """Choice probabilities conditional on preference type.

    Shape (d_t, n * d_pref) with columns item-major then preference,
    equal to the attention matrix times the choice transform.
    """
    _check_compatible(rule, transform)
    return rule.u @ transform.a
