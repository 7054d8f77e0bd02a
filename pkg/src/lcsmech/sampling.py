"""Seeded rejection sampling of admissible points."""

from __future__ import annotations

from typing import Callable, Optional, Sequence

import numpy as np

DEFAULT_SEED = 42
DEFAULT_COUNT = 100
DEFAULT_BOX = (-3.0, 3.0)


def sample_box(
    dim: int,
    count: int = DEFAULT_COUNT,
    seed: int = DEFAULT_SEED,
    box: Optional[Sequence[Sequence[float]]] = None,
    accept: Callable[[np.ndarray], bool] = lambda x: True,
    max_tries: int = 1000,
) -> np.ndarray:
    """``count`` points uniformly drawn from ``box`` that satisfy ``accept``.

    ``box`` is a list of ``(lo, hi)`` pairs, one per dimension, defaulting to
    ``[-3, 3]`` each.  Raises ``ValueError`` if too few points are accepted.
    """
    if box is None:
        box = [DEFAULT_BOX] * dim
    box = np.asarray(box, dtype=float)
    if box.shape != (dim, 2):
        raise ValueError(f"box has shape {box.shape}, expected ({dim}, 2)")
    rng = np.random.default_rng(seed)
    out = []
    tries = 0
    while len(out) < count:
        if tries >= max_tries * max(count, 1):
            raise ValueError(f"only {len(out)} of {count} samples fell inside the domain")
        x = box[:, 0] + (box[:, 1] - box[:, 0]) * rng.random(dim)
        tries += 1
        if accept(x):
            out.append(x)
    return np.array(out).reshape(count, dim)
