"""Spin-1 observables, frames and the twin state.

Spin matrices use the Cartesian convention ``(J_a)_bc = -i eps_abc`` on the
basis ``|x>, |y>, |z>``. In this convention ``J_n^2 = 1 - |n><n|`` for every
real unit vector ``n``, so the frame operator ``K^F = J_x^2 - J_y^2`` is real
and diagonal in the frame's own axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.spatial.transform import Rotation

from ..config import tol
from ..errors import ValidationError
from ..hilbert import Operator, StateVector, identity, projector
from ..measure import JointDistribution, joint_probability

__all__ = [
    "Frame",
    "Direction",
    "spin_operators",
    "k_operator",
    "squares_from_k",
    "frame_basis",
    "upsilon",
    "ck_table",
    "K_VALUES",
    "TwinReport",
    "twin_check",
    "spin_square_table",
    "PRIMED_FRAME",
]

# eigenvalues of K^F on kappa_1, kappa_2, kappa_3
K_VALUES = (-1, 1, 0)


@dataclass(frozen=True)
class Frame:
    """Right-handed orthonormal triple of axes, stored as the rows of ``R``."""

    rows: np.ndarray = field(repr=False)

    def __post_init__(self):
        R = np.array(self.rows, dtype=float, copy=True)
        if R.shape != (3, 3) or not np.all(np.isfinite(R)):
            raise ValidationError("frame must be a finite 3x3 real matrix")
        g = tol().geometric
        if not np.allclose(R @ R.T, np.eye(3), rtol=0, atol=g):
            raise ValidationError("frame axes are not orthonormal")
        if abs(np.linalg.det(R) - 1.0) > g:
            raise ValidationError("frame is not right-handed (det != +1)")
        R.setflags(write=False)
        object.__setattr__(self, "rows", R)

    @classmethod
    def identity(cls) -> "Frame":
        return cls(np.eye(3))

    @classmethod
    def from_rows(cls, rows, snap: float = 0.0) -> "Frame":
        """Build a frame, optionally snapping near-orthonormal input to a rotation.

        With ``snap > 0`` any matrix whose Gram matrix is within ``snap`` of the
        identity is replaced by its nearest rotation (orthogonal polar factor).
        This lets hand-typed values such as ``.7071`` define an exact frame.
        """
        R = np.asarray(rows, dtype=float)
        if R.shape != (3, 3):
            raise ValidationError("frame must have three rows of three numbers")
        if snap > 0:
            if not np.allclose(R @ R.T, np.eye(3), rtol=0, atol=snap):
                raise ValidationError("frame axes are not orthonormal")
            U, _, Vt = np.linalg.svd(R)
            R = U @ Vt
        return cls(R)

    @classmethod
    def random(cls, rng: np.random.Generator) -> "Frame":
        return cls(Rotation.random(random_state=rng).as_matrix())

    @property
    def x(self) -> np.ndarray:
        return self.rows[0]

    @property
    def y(self) -> np.ndarray:
        return self.rows[1]

    @property
    def z(self) -> np.ndarray:
        return self.rows[2]

    def axis_index(self, w: "Direction | Sequence[float]") -> int:
        """0, 1 or 2 if ``w`` lies along x, y or z (either sign), else -1."""
        v = w.v if isinstance(w, Direction) else np.asarray(w, dtype=float)
        for i, axis in enumerate(self.rows):
            if abs(abs(float(axis @ v)) - 1.0) <= tol().geometric:
                return i
        return -1

    def coordinates(self, w: "Direction") -> np.ndarray:
        """Components ``w_j`` of ``w`` along the frame axes."""
        return self.rows @ w.v


@dataclass(frozen=True)
class Direction:
    v: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.v, dtype=float, copy=True).reshape(-1)
        if v.shape != (3,) or not np.all(np.isfinite(v)):
            raise ValidationError("direction must be three finite numbers")
        if abs(np.linalg.norm(v) - 1.0) > tol().geometric:
            raise ValidationError(f"direction is not a unit vector (norm {np.linalg.norm(v):.6g})")
        v.setflags(write=False)
        object.__setattr__(self, "v", v)

    @classmethod
    def normalize(cls, v) -> "Direction":
        v = np.asarray(v, dtype=float)
        n = np.linalg.norm(v)
        if n == 0:
            raise ValidationError("zero vector has no direction")
        return cls(v / n)

    def ket(self) -> StateVector:
        return StateVector((3,), self.v.astype(complex))


# the primed frame used by the second observer in the impossible-pairs example
_r = 1.0 / np.sqrt(2.0)
PRIMED_FRAME = Frame(np.array([[0.0, 1.0, 0.0], [_r, 0.0, _r], [_r, 0.0, -_r]]))


def spin_operators() -> tuple[Operator, Operator, Operator]:
    eps = np.zeros((3, 3, 3))
    for a, b, c in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[a, b, c] = 1.0
        eps[a, c, b] = -1.0
    return tuple(Operator((3,), -1j * eps[a], hermitian=True) for a in range(3))


def _spin_square(n: np.ndarray) -> np.ndarray:
    Jx, Jy, Jz = spin_operators()
    Jn = n[0] * Jx.entries + n[1] * Jy.entries + n[2] * Jz.entries
    return Jn @ Jn


def k_operator(F: Frame) -> Operator:
    """``K^F = J_x^2 - J_y^2`` with the spin components taken along F's axes."""
    K = _spin_square(F.x) - _spin_square(F.y)
    return Operator((3,), K, hermitian=True)


def squares_from_k(K: Operator) -> tuple[Operator, Operator, Operator]:
    """Recover ``(J_x^2, J_y^2, J_z^2)`` of the frame from its K operator."""
    k = K.entries
    k2 = k @ k
    one = np.eye(3)
    return (
        Operator((3,), one - (k2 - k) / 2, hermitian=True),
        Operator((3,), one - (k2 + k) / 2, hermitian=True),
        Operator((3,), k2, hermitian=True),
    )


def frame_basis(F: Frame) -> tuple[StateVector, StateVector, StateVector]:
    """``kappa_i^F = sum_j R_ij kappa_j`` over the Cartesian basis."""
    return tuple(StateVector((3,), F.rows[i].astype(complex)) for i in range(3))


def upsilon() -> StateVector:
    """``(|11> + |22> + |33>) / sqrt(3)``."""
    amps = np.zeros(9, dtype=complex)
    amps[[0, 4, 8]] = 1.0 / np.sqrt(3.0)
    return StateVector((3, 3), amps)


def ck_table(FA: Frame, FB: Frame) -> JointDistribution:
    """Zone-IV outcome table for the twin state measured in two frame bases."""
    overlaps = FA.rows @ FB.rows.T
    return JointDistribution(overlaps**2 / 3.0)


@dataclass(frozen=True)
class TwinReport:
    trials: int
    seed: int
    counts: np.ndarray = field(repr=False)  # joint counts indexed like K_VALUES
    discordant: int
    frequencies: dict[int, float]
    max_deviation_sigma: float
    spin_triples: dict[int, tuple[int, int, int]]

    @property
    def twin_holds(self) -> bool:
        return self.discordant == 0

    @property
    def spin_holds(self) -> bool:
        return all(sorted(t) == [0, 1, 1] for t in self.spin_triples.values())


def twin_check(F: Frame, trials: int, seed: int = 0) -> TwinReport:
    """Sample ``K^F (x) K^F`` on the twin state and check TWIN and SPIN.

    Outcomes are drawn from the exact joint distribution over the frame's
    eigenprojectors. Each K value induces a triple of squared spin components
    through :func:`squares_from_k`, which must be a permutation of (1, 0, 1).
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    psi = upsilon()
    kappas = frame_basis(F)
    P = [projector(k) for k in kappas]
    exact = np.array([[joint_probability(psi, Pa, Pb) for Pb in P] for Pa in P])
    exact = np.clip(exact, 0.0, None)
    exact /= exact.sum()

    rng = np.random.default_rng(seed)
    draws = rng.choice(9, size=trials, p=exact.ravel())
    counts = np.bincount(draws, minlength=9).reshape(3, 3)
    discordant = int(counts.sum() - np.trace(counts))

    freqs = counts.sum(axis=1) / trials
    sigma = np.sqrt((1 / 3) * (2 / 3) / trials)
    frequencies = {K_VALUES[i]: float(freqs[i]) for i in range(3)}
    max_dev = float(np.max(np.abs(freqs - 1 / 3)) / sigma)

    squares = squares_from_k(k_operator(F))
    triples = {}
    for i, kap in enumerate(kappas):
        vals = [np.vdot(kap.amps, S.entries @ kap.amps).real for S in squares]
        triples[K_VALUES[i]] = tuple(int(round(v)) for v in vals)

    return TwinReport(
        trials=trials,
        seed=seed,
        counts=counts,
        discordant=discordant,
        frequencies=frequencies,
        max_deviation_sigma=max_dev,
        spin_triples=triples,
    )


def spin_square_table(psi: StateVector, v: Direction, w: Direction) -> JointDistribution:
    """Joint law of ``(J_v^2 on A, J_w^2 on B)``; outcomes labelled 0 and 1."""
    def pair(d: Direction):
        zero = projector(d.ket())
        return {0: zero, 1: identity(3) - zero}

    pa, pb = pair(v), pair(w)
    table = np.array([[joint_probability(psi, pa[a], pb[b]) for b in (0, 1)] for a in (0, 1)])
    return JointDistribution(table, row_labels=(0, 1), col_labels=(0, 1))
