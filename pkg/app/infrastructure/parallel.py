"""
Deterministic parallel execution of Monte-Carlo realizations.

Every realization draws from its own generator derived from
``(master_seed, index)`` so results never depend on the worker count
or on the order in which joblib schedules tasks.
"""

from __future__ import annotations

import logging
from collections.abc import Callable
from typing import TypeVar

import numpy as np
from joblib import Parallel, delayed
from tqdm.auto import tqdm

T = TypeVar("T")

logger = logging.getLogger(__name__)


def realization_rng(master_seed: int, index: int, *extra: int) -> np.random.Generator:
    """
    Independent generator for one realization.

    ``extra`` keys split further substreams (e.g. coupling draws versus
    Hamiltonian draws of the same realization).
    """
    if master_seed < 0 or index < 0:
        raise ValueError("master_seed and index must be non-negative")
    seq = np.random.SeedSequence(master_seed, spawn_key=(index, *extra))
    return np.random.Generator(np.random.PCG64(seq))


def run_realizations(
    func: Callable[[int], T],
    count: int,
    threads: int = 1,
    progress: bool = False,
    desc: str = "realizations",
) -> list[T]:
    """
    Evaluate ``func(index)`` for ``index in range(count)``.

    - Results come back in index order whatever the schedule.
    - ``threads == 1`` runs inline, which keeps tracebacks simple.
    - ``func`` must be a pure function of its index.
    """
    if count < 1:
        raise ValueError("count must be at least 1")

    indices = range(count)
    if progress:
        indices = tqdm(indices, desc=desc, leave=False)

    if threads == 1:
        return [func(i) for i in indices]

    logger.debug("Dispatching %d %s over %d workers", count, desc, threads)
    return list(Parallel(n_jobs=threads, prefer="threads")(delayed(func)(i) for i in indices))
