"""Group-atomic stratified k-fold splitting.

Items sharing a group key (typically the patient) always land in the same
fold; within that constraint the greedy assignment balances the
stratification class counts, which for singleton groups guarantees per-fold
class counts within one item of a perfect split.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass

import numpy as np

__all__ = ["SplitPlan", "stratified_kfold", "StratifiedGroupKFold"]


@dataclass(frozen=True)
class SplitPlan:
    """K folds of item ids plus the keys and seed that produced them."""

    folds: tuple[tuple[str, ...], ...]
    grouping: str
    stratification: str
    seed: int

    def validation_ids(self, fold: int) -> tuple[str, ...]:
        return self.folds[fold]

    def train_ids(self, fold: int) -> tuple[str, ...]:
        return tuple(i for j, f in enumerate(self.folds) if j != fold for i in f)


def stratified_kfold(
    items,
    k: int,
    seed: int = 0,
    grouping: str = "group",
    stratification: str = "class",
) -> SplitPlan:
    """Split (id, group, label) triples into k group-atomic stratified folds."""
    items = list(items)
    if k < 2:
        raise ValueError("need at least two folds")
    groups = defaultdict(list)
    for item_id, group, label in items:
        groups[group].append((item_id, label))
    if len(groups) < k:
        raise ValueError(f"cannot make {k} folds from {len(groups)} groups")

    rng = np.random.default_rng(seed)
    group_keys = sorted(groups)
    rng.shuffle(group_keys)
    # big groups first so small ones can rebalance around them
    group_keys.sort(key=lambda g: -len(groups[g]))

    fold_ids: list[list[str]] = [[] for _ in range(k)]
    fold_class_counts = [Counter() for _ in range(k)]
    fold_group_counts = [0] * k
    for g in group_keys:
        members = groups[g]
        labels = Counter(label for _, label in members)
        dominant = labels.most_common(1)[0][0]

        def cost(fold):
            return (
                fold_class_counts[fold][dominant],
                len(fold_ids[fold]),
                fold_group_counts[fold],
                fold,
            )

        best = min(range(k), key=cost)
        fold_ids[best].extend(item_id for item_id, _ in members)
        fold_class_counts[best].update(labels)
        fold_group_counts[best] += 1
    return SplitPlan(
        folds=tuple(tuple(f) for f in fold_ids),
        grouping=grouping,
        stratification=stratification,
        seed=seed,
    )


class StratifiedGroupKFold:
    """Splitter with the scikit-learn cross-validator surface."""

    def __init__(self, n_splits: int = 5, seed: int = 0):
        self.n_splits = n_splits
        self.seed = seed

    def get_n_splits(self, X=None, y=None, groups=None) -> int:
        return self.n_splits

    def split(self, X, y, groups):
        """Yield (train_indices, validation_indices) pairs over the folds."""
        X = list(X)
        y = list(y)
        groups = list(groups)
        if not (len(X) == len(y) == len(groups)):
            raise ValueError("X, y, and groups must have the same length")
        ids = [str(i) for i in range(len(X))]
        plan = stratified_kfold(zip(ids, groups, y), self.n_splits, seed=self.seed)
        for fold in range(self.n_splits):
            val = set(plan.validation_ids(fold))
            val_idx = np.array([i for i in range(len(X)) if ids[i] in val], dtype=int)
            train_idx = np.array([i for i in range(len(X)) if ids[i] not in val], dtype=int)
            yield train_idx, val_idx
