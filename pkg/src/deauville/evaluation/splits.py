"""Repeated random subsampling splits."""

from dataclasses import dataclass
from typing import List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..errors import ValidationError

Fractions = Tuple[float, float, float]

DEFAULT_FRACTIONS: Fractions = (0.8, 0.1, 0.1)


@dataclass(frozen=True)
class SplitPlan:
    """Exam-id partition for one iteration: train, validation, test."""

    iteration: int
    train_ids: Tuple[str, ...]
    val_ids: Tuple[str, ...]
    test_ids: Tuple[str, ...]
    fractions: Fractions = DEFAULT_FRACTIONS
    seed: int = 0

    def __post_init__(self):
        groups = (set(self.train_ids), set(self.val_ids), set(self.test_ids))
        total = len(self.train_ids) + len(self.val_ids) + len(self.test_ids)
        if len(groups[0] | groups[1] | groups[2]) != total:
            raise ValidationError("split groups must be pairwise disjoint")


def split_sizes(n: int, fractions: Fractions = DEFAULT_FRACTIONS) -> Tuple[int, int, int]:
    """Floor train and val; test takes the remainder."""
    f_train, f_val, f_test = fractions
    if min(f_train, f_val, f_test) <= 0:
        raise ValidationError("fractions must all be positive")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValidationError(f"fractions must sum to 1, got {sum(fractions)!r}")
    n_train = int(np.floor(n * f_train))
    n_val = int(np.floor(n * f_val))
    n_test = n - n_train - n_val
    if n_train < 1 or n_val < 1 or n_test < 1:
        raise ValidationError(f"degenerate split sizes for n={n}: {n_train}/{n_val}/{n_test}")
    return n_train, n_val, n_test


def _allocate_per_class(counts: List[int], total: int, weights: List[float]) -> List[int]:
    """Largest-remainder allocation of ``total`` slots, capped by counts."""
    ideals = [w * total for w in weights]
    take = [min(int(np.floor(x)), c) for x, c in zip(ideals, counts)]
    remainders = sorted(
        range(len(counts)),
        key=lambda i: (-(ideals[i] - np.floor(ideals[i])), i),
    )
    short = total - sum(take)
    pos = 0
    while short > 0:
        i = remainders[pos % len(counts)]
        if take[i] < counts[i]:
            take[i] += 1
            short -= 1
        pos += 1
        if pos > 10 * len(counts) * (total + 1):
            raise ValidationError("cannot satisfy stratified allocation")
    return take


def make_splits(
    exam_ids: Sequence[str],
    n_iterations: int = 7,
    fractions: Fractions = DEFAULT_FRACTIONS,
    seed: int = 0,
    stratify_labels: Optional[Mapping[str, int]] = None,
) -> List[SplitPlan]:
    """Build ``n_iterations`` independent train/val/test partitions.

    Sizes are floor(n * train_fraction), floor(n * val_fraction), and the
    remainder for test, so each plan covers every id exactly once.  Plans
    depend only on (ids, n_iterations, fractions, seed).  Iterations are
    numbered from 1.

    With ``stratify_labels`` (exam id -> class), train and val draw from
    each class proportionally by largest remainder; the default draws
    uniformly without regard to class.
    """
    ids = list(exam_ids)
    n = len(ids)
    if n < 10:
        raise ValidationError("need at least 10 records to split")
    if len(set(ids)) != n:
        raise ValidationError("exam ids must be unique")
    if n_iterations < 1:
        raise ValidationError("n_iterations must be positive")
    n_train, n_val, n_test = split_sizes(n, fractions)
    if stratify_labels is not None:
        missing = [i for i in ids if i not in stratify_labels]
        if missing:
            raise ValidationError(f"stratify_labels missing {len(missing)} ids")

    plans = []
    for it in range(1, n_iterations + 1):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, 6007, it))))
        perm = [ids[int(i)] for i in rng.permutation(n)]
        if stratify_labels is None:
            train = perm[:n_train]
            val = perm[n_train : n_train + n_val]
            test = perm[n_train + n_val :]
        else:
            classes = sorted({stratify_labels[i] for i in perm})
            by_class = {c: [i for i in perm if stratify_labels[i] == c] for c in classes}
            counts = [len(by_class[c]) for c in classes]
            weights = [c / n for c in counts]
            take_train = _allocate_per_class(counts, n_train, weights)
            left = [c - t for c, t in zip(counts, take_train)]
            take_val = _allocate_per_class(left, n_val, weights)
            train, val, test = [], [], []
            for idx, c in enumerate(classes):
                members = by_class[c]
                t, v = take_train[idx], take_val[idx]
                train.extend(members[:t])
                val.extend(members[t : t + v])
                test.extend(members[t + v :])
        plans.append(
            SplitPlan(
                iteration=it,
                train_ids=tuple(train),
                val_ids=tuple(val),
                test_ids=tuple(test),
                fractions=fractions,
                seed=seed,
            )
        )
    return plans
