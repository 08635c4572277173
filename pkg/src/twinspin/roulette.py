"""Hidden-variable samplers for bipartite outcome statistics.

The nonlocal roulette splits the circle into one sector per outcome pair,
sized by the joint probability; the pointer angle is the hidden variable.
The chain samplers instead draw one party's outcome from its marginal and
the other's from the conditional law given the first. Both need the
settings of *both* parties, which is the point they illustrate.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Hashable, Literal, Sequence

import numpy as np

from .errors import ValidationError
from .hilbert import StateVector, projector
from .measure import JointDistribution, joint_probability, marginal_probability

__all__ = ["Roulette", "build_roulette", "spin", "chain_sample", "chain_samples", "chain_tables"]


@dataclass(frozen=True)
class Roulette:
    sectors: tuple[tuple[Hashable, float], ...]
    cumulative: tuple[float, ...]  # upper edge of each sector, last == 1

    def __post_init__(self):
        widths = [w for _, w in self.sectors]
        if any(w < 0 for w in widths):
            raise ValidationError("sector widths must be nonnegative")
        if abs(sum(widths) - 1.0) > 1e-12:
            raise ValidationError(f"sector widths sum to {sum(widths):.15g}, not 1")

    @property
    def labels(self) -> list[Hashable]:
        return [lab for lab, _ in self.sectors]

    @property
    def widths(self) -> np.ndarray:
        return np.array([w for _, w in self.sectors])


def build_roulette(dist: JointDistribution) -> Roulette:
    """One sector per ``(a, b)`` in row-major order; zero-width sectors are kept."""
    sectors = []
    for i, a in enumerate(dist.row_labels):
        for j, b in enumerate(dist.col_labels):
            sectors.append(((a, b), float(dist.probs[i, j])))
    total = math.fsum(w for _, w in sectors)
    sectors = [(lab, w / total) for lab, w in sectors]
    cum = list(np.cumsum([w for _, w in sectors]))
    cum[-1] = 1.0
    return Roulette(tuple(sectors), tuple(float(c) for c in cum))


def spin(r: Roulette, phi: float) -> Hashable:
    """Label of the sector holding angle ``phi`` in ``[0, 2 pi)``.

    Sectors are half-open ``[lo, hi)``: an angle on a boundary belongs to
    the next sector with positive width.
    """
    if not 0.0 <= phi < 2 * math.pi:
        raise ValidationError(f"angle {phi} outside [0, 2pi)")
    x = phi / (2 * math.pi)
    return r.sectors[bisect.bisect_right(r.cumulative, x)][0]


def chain_tables(
    psi: StateVector,
    basisA: Sequence[StateVector],
    basisB: Sequence[StateVector],
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Joint table and both marginals from the Born rule."""
    PA = [projector(v) for v in basisA]
    PB = [projector(v) for v in basisB]
    joint = np.array([[joint_probability(psi, a, b) for b in PB] for a in PA])
    pa = np.array([marginal_probability(psi, "A", a) for a in PA])
    pb = np.array([marginal_probability(psi, "B", b) for b in PB])
    return np.clip(joint, 0, None), np.clip(pa, 0, None), np.clip(pb, 0, None)


def _draw(rng: np.random.Generator, p: np.ndarray, n: int | None = None):
    p = p / p.sum()
    return rng.choice(len(p), size=n, p=p)


def chain_samples(
    psi: StateVector,
    basisA: Sequence[StateVector],
    basisB: Sequence[StateVector],
    order: Literal["A-first", "B-first"],
    n: int,
    seed: int | np.random.Generator = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """``n`` outcome pairs from the conditional chain.

    ``A-first`` draws ``a`` from ``P_a`` and then ``b`` from ``P_ab / P_a``;
    ``B-first`` mirrors it. Outcomes are basis indices.
    """
    if order not in ("A-first", "B-first"):
        raise ValidationError(f"order must be 'A-first' or 'B-first', got {order!r}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    joint, pa, pb = chain_tables(psi, basisA, basisB)
    if order == "A-first":
        first = _draw(rng, pa, n)
        cond = joint / np.where(pa > 0, pa, 1.0)[:, None]
        cdf = np.cumsum(cond, axis=1)
    else:
        first = _draw(rng, pb, n)
        cond = (joint / np.where(pb > 0, pb, 1.0)[None, :]).T
        cdf = np.cumsum(cond, axis=1)
    u = rng.random(n) * cdf[first, -1]
    second = np.minimum((u[:, None] >= cdf[first, :-1]).sum(axis=1), cdf.shape[1] - 1)
    if order == "A-first":
        return first, second
    return second, first


def chain_sample(
    psi: StateVector,
    basisA: Sequence[StateVector],
    basisB: Sequence[StateVector],
    order: Literal["A-first", "B-first"],
    seed: int | np.random.Generator = 0,
) -> tuple[int, int]:
    a, b = chain_samples(psi, basisA, basisB, order, 1, seed)
    return int(a[0]), int(b[0])
