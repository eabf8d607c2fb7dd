"""Pair-connection functions H(r) and Bernoulli link sampling.

Two model variants:

* ``Rayleigh(beta, eta)`` -- stochastic links, H(r) = exp(-beta * r**eta).
  ``beta`` sets the characteristic connection length r0 = beta**(-1/eta).
* ``Disk(r0)`` -- the deterministic eta -> infinity limit, H(r) = 1 for
  r <= r0 and 0 beyond.  Kept as a distinct variant so the deterministic
  model is exact and consumes no randomness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


@dataclass(frozen=True)
class Rayleigh:
    beta: float
    eta: float

    def __post_init__(self):
        if not (math.isfinite(self.beta) and self.beta > 0):
            raise ValueError(f"beta must be positive and finite, got {self.beta}")
        if not (math.isfinite(self.eta) and self.eta >= 1.0):
            raise ValueError(
                f"eta must be a finite real >= 1 (use Disk for the eta=inf limit), got {self.eta}"
            )

    @property
    def r0(self) -> float:
        return self.beta ** (-1.0 / self.eta)


@dataclass(frozen=True)
class Disk:
    r0: float

    def __post_init__(self):
        if not (math.isfinite(self.r0) and self.r0 > 0):
            raise ValueError(f"r0 must be positive and finite, got {self.r0}")


ConnectionModel = Union[Rayleigh, Disk]


def connection_probability(model: ConnectionModel, r):
    """H(r) for a scalar or array of distances.  Rejects negative r."""
    arr = np.asarray(r, dtype=float)
    if np.any(arr < 0):
        raise ValueError("distances must be nonnegative")
    if isinstance(model, Disk):
        out = (arr <= model.r0).astype(float)
    else:
        # r**eta overflows to inf for huge eta; exp(-inf) = 0 is the right limit
        with np.errstate(over="ignore"):
            out = np.exp(-model.beta * arr ** model.eta)
    return float(out) if np.isscalar(r) or arr.ndim == 0 else out


def sample_link(model: ConnectionModel, r: float, rng=None) -> bool:
    """One Bernoulli link draw at distance r.

    The Disk variant is deterministic and consumes no randomness; the
    Rayleigh variant consumes exactly one uniform from the caller-owned rng.
    """
    if r < 0:
        raise ValueError("distances must be nonnegative")
    if isinstance(model, Disk):
        return r <= model.r0
    if rng is None:
        raise ValueError("Rayleigh link sampling needs a caller-owned rng")
    return bool(rng.random() < connection_probability(model, r))


def link_outcomes(model: ConnectionModel, distances: np.ndarray, rng=None) -> np.ndarray:
    """Vectorised link draws: one uniform per entry, in array order.

    Array order is the pair iteration order, so results are reproducible
    for a fixed rng state.  Disk consumes no randomness.
    """
    d = np.asarray(distances, dtype=float)
    if isinstance(model, Disk):
        return d <= model.r0
    if rng is None:
        raise ValueError("Rayleigh link sampling needs a caller-owned rng")
    with np.errstate(over="ignore"):
        probs = np.exp(-model.beta * d ** model.eta)
    return rng.random(d.shape) < probs


def disk_limit(model: ConnectionModel) -> Disk:
    """The eta -> infinity limit at fixed characteristic length."""
    if isinstance(model, Disk):
        return model
    return Disk(r0=model.r0)


def connection_range(model: ConnectionModel, tail: float = 1e-12) -> float:
    """Distance beyond which H(r) < tail (exactly r0 for Disk).

    Used as the cell size for candidate-pair pruning; pairs farther apart
    are never sampled, an approximation with total expected missing-edge
    mass below n**2 * tail.
    """
    if isinstance(model, Disk):
        return model.r0
    return (math.log(1.0 / tail) / model.beta) ** (1.0 / model.eta)
