"""Synthetic data: the two-class Gaussian mixtures and mean-shift streams."""

from __future__ import annotations

import numpy as np

GMM_SHIFT = 0.4


def gmm_directions(d: int) -> tuple[np.ndarray, np.ndarray]:
    """``e`` (all ones) and ``f`` (first half +1, second half -1)."""
    if int(d) != d or d < 2 or d % 2:
        raise ValueError(f"dimension must be a positive even integer (f has d/2 entries +1 and d/2 entries -1), got {d!r}")
    d = int(d)
    e = np.ones(d)
    f = np.concatenate([np.ones(d // 2), -np.ones(d // 2)])
    return e, f


def sample_gmm(rng: np.random.Generator, direction: np.ndarray, n: int, shift: float = GMM_SHIFT) -> np.ndarray:
    """``n`` draws from ``0.5 N(shift*v, I) + 0.5 N(-shift*v, I)``; component by fair coin."""
    sign = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    return sign[:, None] * shift * direction[None, :] + rng.standard_normal((n, direction.size))


def gmm_pair(d: int, n_per_class: int, seed: int, shift: float = GMM_SHIFT) -> tuple[np.ndarray, np.ndarray]:
    """Class-1 samples along ``e`` and class-2 samples along ``f``; reproducible given ``seed``."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be positive")
    e, f = gmm_directions(d)
    r1, r2 = (np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(2))
    return sample_gmm(r1, e, n_per_class, shift), sample_gmm(r2, f, n_per_class, shift)


def mean_shift_stream(length: int, change_at: int | None, shift: float, d: int = 1, seed: int = 0) -> np.ndarray:
    """Standard normal stream whose mean moves by ``shift`` (every coordinate) from 1-indexed ``change_at`` on."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((length, d))
    if change_at is not None:
        x[change_at - 1:] += shift
    return x
