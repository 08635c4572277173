"""Signed product decompositions of two-qutrit states and the counter model.

Any two-qutrit density operator is a real combination of the 81 products
``rho_k (x) rho_j`` of the nine fixed projectors ``rho_k = |xi_k><xi_k|``.
Splitting the coefficients by sign gives ``rho = kappa rho+ - (kappa - 1) rho-``
with two separable states, i.e. two classical sources. The counter model
draws one pair from each source per trial; positive events increment an
outcome counter and negative events decrement it.
"""

from __future__ import annotations

import functools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .config import tol
from .errors import ValidationError
from .hilbert import DensityOperator, Operator, StateVector, ket, projector

__all__ = [
    "XiBasis",
    "SignedDecomposition",
    "SignedSources",
    "CounterExpectations",
    "CounterTally",
    "SimulationResult",
    "DEFAULT_SEED",
    "BLOCK_SIZE",
    "xi_basis",
    "hermitian_coordinates",
    "decompose",
    "split",
    "signed_expectation",
    "counter_expectations",
    "simulate",
    "block_generator",
]

DEFAULT_SEED = 7
BLOCK_SIZE = 1 << 16


@dataclass(frozen=True)
class XiBasis:
    states: tuple[StateVector, ...]
    density_ops: tuple[Operator, ...]

    def product(self, k: int, j: int) -> np.ndarray:
        """``rho_k (x) rho_j`` with one-based labels."""
        return np.kron(self.density_ops[k - 1].entries, self.density_ops[j - 1].entries)

    def gram(self) -> np.ndarray:
        """Hilbert-Schmidt Gram matrix of the nine single-qutrit projectors."""
        M = np.array([hermitian_coordinates(r.entries) for r in self.density_ops])
        return M @ M.T


@functools.lru_cache(maxsize=1)
def xi_basis() -> XiBasis:
    s = 1 / np.sqrt(2)
    vecs = [
        [1, 0, 0],
        [0, 1, 0],
        [0, 0, 1],
        [0, s, s],
        [s, 0, s],
        [s, s, 0],
        [0, s, 1j * s],
        [1j * s, 0, s],
        [s, 1j * s, 0],
    ]
    states = tuple(ket(3, v) for v in vecs)
    return XiBasis(states, tuple(projector(v) for v in states))


def hermitian_coordinates(H: np.ndarray) -> np.ndarray:
    """Real orthonormal coordinates of a Hermitian matrix.

    Diagonal entries, then ``sqrt(2) Re`` and ``sqrt(2) Im`` of the upper
    triangle; the Frobenius inner product becomes the dot product.
    """
    n = H.shape[0]
    iu = np.triu_indices(n, 1)
    off = H[iu]
    return np.concatenate([H.diagonal().real, np.sqrt(2) * off.real, np.sqrt(2) * off.imag])


@functools.lru_cache(maxsize=1)
def _system_matrix() -> np.ndarray:
    xb = xi_basis()
    cols = [
        hermitian_coordinates(xb.product(k, j)) for k in range(1, 10) for j in range(1, 10)
    ]
    A = np.column_stack(cols)
    assert np.linalg.matrix_rank(A) == 81, "xi product basis is singular"
    A.setflags(write=False)
    return A


@dataclass(frozen=True)
class SignedDecomposition:
    """Terms ``(lambda, k, j)`` of ``sum lambda rho_k (x) rho_j`` (one-based labels)."""

    terms: tuple[tuple[float, int, int], ...]
    kappa: float
    target: np.ndarray = field(repr=False)
    residual: float = 0.0

    def __post_init__(self):
        t = tol()
        total = sum(lam for lam, _, _ in self.terms)
        if abs(total - 1.0) > t.algebraic:
            raise ValidationError(f"coefficients sum to {total:.12g}, not 1")
        pos = sum(lam for lam, _, _ in self.terms if lam > 0)
        if abs(pos - self.kappa) > t.algebraic:
            raise ValidationError("kappa does not equal the positive coefficient sum")
        target = np.array(self.target, dtype=complex, copy=True)
        target.setflags(write=False)
        object.__setattr__(self, "target", target)

    @property
    def n_plus(self) -> int:
        return sum(1 for lam, _, _ in self.terms if lam > 0)

    @property
    def n_minus(self) -> int:
        return sum(1 for lam, _, _ in self.terms if lam < 0)

    def table(self) -> np.ndarray:
        """9x9 coefficients ``c[k-1, j-1]``: left factor by row, right by column."""
        c = np.zeros((9, 9))
        for lam, k, j in self.terms:
            c[k - 1, j - 1] = lam
        return c

    def reconstruct(self) -> np.ndarray:
        xb = xi_basis()
        return sum(lam * xb.product(k, j) for lam, k, j in self.terms)


def decompose(target: DensityOperator) -> SignedDecomposition:
    """Solve the 81 real equations for the product-basis coefficients."""
    if target.op.dim != 9:
        raise ValidationError(f"decompose needs a two-qutrit state, got dimension {target.op.dim}")
    A = _system_matrix()
    b = hermitian_coordinates(target.matrix)
    c = np.linalg.solve(A, b)
    cut = tol().coefficient
    terms = []
    for idx, lam in enumerate(c):
        if abs(lam) > cut:
            k, j = divmod(idx, 9)
            terms.append((float(lam), k + 1, j + 1))
    xb = xi_basis()
    rebuilt = sum(lam * xb.product(k, j) for lam, k, j in terms)
    residual = float(np.linalg.norm(rebuilt - target.matrix))
    if residual > tol().algebraic:
        raise AssertionError(f"decomposition residual {residual:.3g} exceeds tolerance")
    kappa = sum(lam for lam, _, _ in terms if lam > 0)
    return SignedDecomposition(tuple(terms), kappa, target.matrix, residual)


@dataclass(frozen=True)
class SignedSources:
    """The two classical sources behind a signed decomposition.

    ``positive``/``negative`` hold ``(probability, k, j)`` with probabilities
    ``lambda / kappa`` and ``|lambda| / (kappa - 1)``.
    """

    positive: tuple[tuple[float, int, int], ...]
    negative: tuple[tuple[float, int, int], ...]
    kappa: float
    rho_plus: DensityOperator
    rho_minus: DensityOperator | None

    @property
    def n_plus(self) -> int:
        return len(self.positive)

    @property
    def n_minus(self) -> int:
        return len(self.negative)


def _mixture(source: Sequence[tuple[float, int, int]]) -> DensityOperator:
    xb = xi_basis()
    m = sum(p * xb.product(k, j) for p, k, j in source)
    return DensityOperator(Operator((3, 3), m))


def split(d: SignedDecomposition) -> SignedSources:
    kappa = d.kappa
    pos = [(lam / kappa, k, j) for lam, k, j in d.terms if lam > 0]
    neg_terms = [(lam, k, j) for lam, k, j in d.terms if lam < 0]
    rho_plus = _mixture(pos)
    if not neg_terms:
        return SignedSources(tuple(pos), (), kappa, rho_plus, None)
    neg = [(abs(lam) / (kappa - 1), k, j) for lam, k, j in neg_terms]
    rho_minus = _mixture(neg)
    back = kappa * rho_plus.matrix - (kappa - 1) * rho_minus.matrix
    err = float(np.linalg.norm(back - d.target))
    if err > tol().algebraic:
        raise AssertionError(f"kappa rho+ - (kappa-1) rho- misses the target by {err:.3g}")
    return SignedSources(tuple(pos), tuple(neg), kappa, rho_plus, rho_minus)


def signed_expectation(O: Operator, d: SignedDecomposition) -> float:
    """``kappa <O>+ - (kappa - 1) <O>-``, checked against ``Tr(rho O)``."""
    if O.dim != 9:
        raise ValidationError(f"observable has dimension {O.dim}, expected 9")
    if not O.is_hermitian():
        raise ValidationError("signed_expectation needs a Hermitian observable")
    src = split(d)
    val = src.kappa * np.trace(src.rho_plus.matrix @ O.entries).real
    if src.rho_minus is not None:
        val -= (src.kappa - 1) * np.trace(src.rho_minus.matrix @ O.entries).real
    direct = np.trace(d.target @ O.entries).real
    if abs(val - direct) > tol().algebraic:
        raise AssertionError(f"signed expectation {val} != direct {direct}")
    return float(val)


def _local_probabilities(basis: Sequence[StateVector]) -> np.ndarray:
    """``L[k-1, a] = <a|rho_k|a>`` for the nine xi projectors."""
    vs = list(basis)
    if len(vs) != 3 or any(v.dim != 3 for v in vs):
        raise ValidationError("measurement basis must have three qutrit vectors")
    B = np.column_stack([v.amps for v in vs])
    if not np.allclose(B.conj().T @ B, np.eye(3), rtol=0, atol=tol().algebraic):
        raise ValidationError("measurement basis is not orthonormal")
    xb = xi_basis()
    L = np.array([[np.vdot(v.amps, r.entries @ v.amps).real for v in vs] for r in xb.density_ops])
    return np.clip(L, 0.0, None)


@dataclass(frozen=True)
class CounterExpectations:
    plus: np.ndarray  # <N+(a, b)>
    minus: np.ndarray  # <N-(a, b)>

    @property
    def plus_A(self) -> np.ndarray:
        return self.plus.sum(axis=1)

    @property
    def minus_A(self) -> np.ndarray:
        return self.minus.sum(axis=1)

    @property
    def plus_B(self) -> np.ndarray:
        return self.plus.sum(axis=0)

    @property
    def minus_B(self) -> np.ndarray:
        return self.minus.sum(axis=0)

    @property
    def total_plus(self) -> float:
        return float(self.plus.sum())

    @property
    def total_minus(self) -> float:
        return float(self.minus.sum())

    @property
    def probabilities(self) -> np.ndarray:
        return self.plus - self.minus


def counter_expectations(
    d: SignedDecomposition, basisA: Sequence[StateVector], basisB: Sequence[StateVector]
) -> CounterExpectations:
    """Exact expected counts ``<N+-(a, b)>`` per trial of the joined source."""
    LA = _local_probabilities(basisA)
    LB = _local_probabilities(basisB)
    plus = np.zeros((3, 3))
    minus = np.zeros((3, 3))
    for lam, k, j in d.terms:
        cell = abs(lam) * np.outer(LA[k - 1], LB[j - 1])
        if lam > 0:
            plus += cell
        else:
            minus += cell
    return CounterExpectations(plus, minus)


@dataclass(frozen=True)
class CounterTally:
    nplus: np.ndarray
    nminus: np.ndarray
    trials: int

    def __add__(self, other: "CounterTally") -> "CounterTally":
        return CounterTally(self.nplus + other.nplus, self.nminus + other.nminus, self.trials + other.trials)

    @property
    def net(self) -> np.ndarray:
        """Net counters ``N(a, b) = N+(a, b) - N-(a, b)``."""
        return self.nplus - self.nminus

    @property
    def events(self) -> int:
        return int(self.nplus.sum() + self.nminus.sum())


@dataclass(frozen=True)
class SimulationResult:
    tally: CounterTally
    estimate: np.ndarray
    kappa: float
    seed: int

    def error(self, exact: np.ndarray) -> float:
        return float(np.max(np.abs(self.estimate - exact)))


def block_generator(seed: int, block: int) -> np.random.Generator:
    """Independent Philox stream for one block of trials.

    The key is the seed and the block index sits in the counter's third
    word, so a block's draws never overlap another's and any worker can
    regenerate any block.
    """
    bitgen = np.random.Philox(key=int(seed), counter=[0, 0, int(block), 0])
    return np.random.Generator(bitgen)


def _sample_source(rng, probs, left, right, LA, LB, n):
    idx = rng.choice(len(probs), size=n, p=probs)
    ua = rng.random(n)
    ub = rng.random(n)
    ca = np.cumsum(LA[left[idx]], axis=1)
    cb = np.cumsum(LB[right[idx]], axis=1)
    a = np.minimum((ua[:, None] >= ca[:, :2]).sum(axis=1), 2)
    b = np.minimum((ub[:, None] >= cb[:, :2]).sum(axis=1), 2)
    return np.bincount(a * 3 + b, minlength=9).reshape(3, 3)


def _source_arrays(source):
    probs = np.array([p for p, _, _ in source])
    probs = probs / probs.sum()
    left = np.array([k - 1 for _, k, _ in source])
    right = np.array([j - 1 for _, _, j in source])
    return probs, left, right


def simulate(
    d: SignedDecomposition,
    basisA: Sequence[StateVector],
    basisB: Sequence[StateVector],
    trials: int,
    seed: int = DEFAULT_SEED,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> SimulationResult:
    """Monte-Carlo run of the two-source counter model.

    Every trial draws one pair from the positive source and, when present,
    one from the negative source, then samples each party's outcome by the
    Born rule on its factor. Trials are grouped into fixed blocks with their
    own Philox streams, so the tally depends only on ``seed`` and
    ``block_size``, never on ``workers``.
    """
    if trials < 1:
        raise ValidationError("trials must be >= 1")
    if workers < 1:
        raise ValidationError("workers must be >= 1")
    src = split(d)
    LA = _local_probabilities(basisA)
    LB = _local_probabilities(basisB)
    pos = _source_arrays(src.positive)
    neg = _source_arrays(src.negative) if src.negative else None

    sizes = [block_size] * (trials // block_size)
    if trials % block_size:
        sizes.append(trials % block_size)

    def run_block(b: int) -> CounterTally:
        rng = block_generator(seed, b)
        n = sizes[b]
        plus = _sample_source(rng, *pos, LA, LB, n)
        minus = _sample_source(rng, *neg, LA, LB, n) if neg else np.zeros((3, 3), dtype=np.int64)
        return CounterTally(plus, minus, n)

    if workers == 1:
        parts = [run_block(b) for b in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run_block, range(len(sizes))))
    tally = functools.reduce(lambda x, y: x + y, parts)
    kappa = src.kappa
    estimate = (kappa * tally.nplus - (kappa - 1) * tally.nminus) / trials
    return SimulationResult(tally, estimate, kappa, seed)
