from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from errors import ConfigError, DataError

FRACTION_TOLERANCE = 1e-9
MIN_CLASS_SIZE = 3


@dataclass(frozen=True)
class SplitPlan:
    train: tuple[int, ...]
    validation: tuple[int, ...]
    test: tuple[int, ...]

    def all_indices(self) -> list[int]:
        return sorted(self.train + self.validation + self.test)

    def check(self, n: int) -> None:
        seen = self.train + self.validation + self.test
        if len(set(seen)) != len(seen):
            raise DataError("split plan partitions overlap")
        if sorted(seen) != list(range(n)):
            raise DataError(f"split plan does not cover exactly {n} samples")


def _round_half_up(value: float) -> int:
    return int(np.floor(value + 0.5))


def split_dataset(
    labels: list[int] | np.ndarray,
    fractions: tuple[float, float, float],
    seed: int,
) -> SplitPlan:
    """Stratified (train, validation, test) split.

    Per class: test = round(test_frac * n_c), validation = round(val_frac * n_c),
    the rest train. Halves round up.
    """
    labels = np.asarray(labels, dtype=np.int64)
    if len(fractions) != 3 or min(fractions) < 0:
        raise ConfigError(f"split fractions must be three non-negative numbers (got {fractions})")
    if abs(sum(fractions) - 1.0) > FRACTION_TOLERANCE:
        raise ConfigError(f"split fractions must sum to 1 (got {sum(fractions)})")
    _, val_frac, test_frac = fractions

    rng = np.random.default_rng(seed)
    train: list[int] = []
    validation: list[int] = []
    test: list[int] = []
    for label in np.unique(labels):
        members = np.flatnonzero(labels == label)
        n_c = members.size
        if n_c < MIN_CLASS_SIZE:
            raise DataError(f"class {label} has {n_c} samples; at least {MIN_CLASS_SIZE} are needed")
        shuffled = rng.permutation(members)
        n_test = min(_round_half_up(test_frac * n_c), n_c)
        n_val = min(_round_half_up(val_frac * n_c), n_c - n_test)
        test += shuffled[:n_test].tolist()
        validation += shuffled[n_test : n_test + n_val].tolist()
        train += shuffled[n_test + n_val :].tolist()
    return SplitPlan(tuple(sorted(train)), tuple(sorted(validation)), tuple(sorted(test)))
