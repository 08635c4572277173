"""Dense complex linear algebra on registers of small subsystems.

Subsystem 0 is the slowest-varying index (row-major Kronecker order), so
``tensor(a, b)`` puts ``a`` on the left exactly as written by hand.
All values are immutable: the underlying arrays are copied on construction
and flagged read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .config import tol
from .errors import ValidationError

__all__ = [
    "StateVector",
    "Operator",
    "DensityOperator",
    "ket",
    "basis",
    "identity",
    "tensor",
    "projector",
    "partial_trace",
    "expectation",
]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex, copy=True)
    a.setflags(write=False)
    return a


def _dims(dims: Iterable[int]) -> tuple[int, ...]:
    out = tuple(int(d) for d in dims)
    if not out or any(d < 1 for d in out):
        raise ValidationError(f"invalid subsystem dims {out!r}")
    return out


@dataclass(frozen=True)
class StateVector:
    dims: tuple[int, ...]
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = _dims(self.dims)
        amps = _frozen(np.ravel(self.amps))
        if amps.size != math.prod(dims):
            raise ValidationError(
                f"amplitude length {amps.size} does not match dims {dims}"
            )
        if not np.all(np.isfinite(amps)):
            raise ValidationError("amplitudes must be finite")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def is_normalized(self, atol: float | None = None) -> bool:
        atol = tol().algebraic if atol is None else atol
        return abs(self.norm - 1.0) <= atol

    def normalized(self) -> "StateVector":
        n = self.norm
        if n == 0.0:
            raise ValidationError("cannot normalize the zero vector")
        return StateVector(self.dims, self.amps / n)

    def inner(self, other: "StateVector") -> complex:
        """``<self|other>``."""
        if self.dims != other.dims:
            raise ValidationError(f"dims mismatch {self.dims} vs {other.dims}")
        return complex(np.vdot(self.amps, other.amps))

    def __add__(self, other: "StateVector") -> "StateVector":
        if self.dims != other.dims:
            raise ValidationError(f"dims mismatch {self.dims} vs {other.dims}")
        return StateVector(self.dims, self.amps + other.amps)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return self + (-1.0) * other

    def __mul__(self, c: complex) -> "StateVector":
        return StateVector(self.dims, c * self.amps)

    __rmul__ = __mul__

    def __truediv__(self, c: complex) -> "StateVector":
        return StateVector(self.dims, self.amps / c)

    def tensor_view(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per subsystem."""
        return self.amps.reshape(self.dims)


@dataclass(frozen=True)
class Operator:
    dims: tuple[int, ...]
    entries: np.ndarray = field(repr=False)
    hermitian: bool = False

    def __post_init__(self):
        dims = _dims(self.dims)
        m = _frozen(self.entries)
        n = math.prod(dims)
        if m.shape != (n, n):
            raise ValidationError(f"operator shape {m.shape} does not match dims {dims}")
        if not np.all(np.isfinite(m)):
            raise ValidationError("operator entries must be finite")
        if self.hermitian and not _is_hermitian(m, tol().algebraic):
            raise ValidationError("operator flagged Hermitian is not Hermitian")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "entries", m)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def is_hermitian(self, atol: float | None = None) -> bool:
        return _is_hermitian(self.entries, tol().algebraic if atol is None else atol)

    def is_unitary(self, atol: float | None = None) -> bool:
        atol = tol().algebraic if atol is None else atol
        m = self.entries
        return bool(np.allclose(m @ m.conj().T, np.eye(self.dim), rtol=0, atol=atol))

    def dag(self) -> "Operator":
        return Operator(self.dims, self.entries.conj().T, self.hermitian)

    def apply(self, v: StateVector) -> StateVector:
        if v.dims != self.dims:
            raise ValidationError(f"dims mismatch {self.dims} vs {v.dims}")
        return StateVector(self.dims, self.entries @ v.amps)

    def __matmul__(self, other: "Operator") -> "Operator":
        if other.dims != self.dims:
            raise ValidationError(f"dims mismatch {self.dims} vs {other.dims}")
        return Operator(self.dims, self.entries @ other.entries)

    def __add__(self, other: "Operator") -> "Operator":
        if other.dims != self.dims:
            raise ValidationError(f"dims mismatch {self.dims} vs {other.dims}")
        return Operator(
            self.dims, self.entries + other.entries, self.hermitian and other.hermitian
        )

    def __sub__(self, other: "Operator") -> "Operator":
        return self + (-1.0) * other

    def __mul__(self, c: complex) -> "Operator":
        real = np.isreal(c)
        return Operator(self.dims, c * self.entries, self.hermitian and bool(real))

    __rmul__ = __mul__

    def trace(self) -> complex:
        return complex(np.trace(self.entries))


def _is_hermitian(m: np.ndarray, atol: float) -> bool:
    return bool(np.allclose(m, m.conj().T, rtol=0, atol=atol))


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian, unit-trace, positive-semidefinite operator."""

    op: Operator

    def __post_init__(self):
        t = tol()
        m = self.op.entries
        if not _is_hermitian(m, t.algebraic):
            raise ValidationError("density operator must be Hermitian")
        if abs(np.trace(m) - 1.0) > t.algebraic:
            raise ValidationError(f"density operator trace {np.trace(m).real:.3g} != 1")
        lo = float(np.linalg.eigvalsh(m).min())
        if lo < -t.spectral:
            raise ValidationError(f"density operator has eigenvalue {lo:.3g} < 0")
        if not self.op.hermitian:
            object.__setattr__(self, "op", Operator(self.op.dims, m, hermitian=True))

    @classmethod
    def from_matrix(cls, dims: Sequence[int], m) -> "DensityOperator":
        return cls(Operator(tuple(dims), m))

    @classmethod
    def from_state(cls, psi: StateVector) -> "DensityOperator":
        return cls(projector(psi))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.op.dims

    @property
    def matrix(self) -> np.ndarray:
        return self.op.entries

    def eigenvalues(self) -> np.ndarray:
        """Eigenvalues in ascending order, tiny negatives clamped to zero."""
        ev = np.linalg.eigvalsh(self.matrix)
        return np.clip(ev, 0.0, None)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


def ket(dims: Sequence[int] | int, amps) -> StateVector:
    if isinstance(dims, int):
        dims = (dims,)
    return StateVector(tuple(dims), np.asarray(amps, dtype=complex))


def basis(dim: int, k: int) -> StateVector:
    """Computational basis vector ``|k>`` (zero-based) of a ``dim``-level system."""
    if not 0 <= k < dim:
        raise ValidationError(f"basis index {k} out of range for dim {dim}")
    v = np.zeros(dim, dtype=complex)
    v[k] = 1.0
    return StateVector((dim,), v)


def identity(dims: Sequence[int] | int) -> Operator:
    if isinstance(dims, int):
        dims = (dims,)
    n = math.prod(dims)
    return Operator(tuple(dims), np.eye(n), hermitian=True)


def tensor(*factors):
    """Kronecker product of states or operators, folded left to right.

    Mixing states and operators raises ``TypeError``. Two density
    operators give a density operator.
    """
    if len(factors) == 1 and isinstance(factors[0], (list, tuple)):
        factors = tuple(factors[0])
    if not factors:
        raise ValidationError("tensor needs at least one factor")
    kinds = {type(f) for f in factors}
    if len(kinds) != 1:
        raise TypeError(f"cannot tensor mixed kinds {sorted(k.__name__ for k in kinds)}")
    kind = kinds.pop()
    if kind is StateVector:
        amps = factors[0].amps
        dims = factors[0].dims
        for f in factors[1:]:
            amps = np.kron(amps, f.amps)
            dims = dims + f.dims
        return StateVector(dims, amps)
    if kind is Operator:
        m = factors[0].entries
        dims = factors[0].dims
        herm = factors[0].hermitian
        for f in factors[1:]:
            m = np.kron(m, f.entries)
            dims = dims + f.dims
            herm = herm and f.hermitian
        return Operator(dims, m, herm)
    if kind is DensityOperator:
        return DensityOperator(tensor(*(f.op for f in factors)))
    raise TypeError(f"cannot tensor objects of type {kind.__name__}")


def projector(v: StateVector) -> Operator:
    """Rank-one projector ``|v><v|`` of a normalized vector."""
    if not v.is_normalized():
        raise ValidationError(f"projector needs a normalized vector (norm {v.norm:.6g})")
    return Operator(v.dims, np.outer(v.amps, v.amps.conj()), hermitian=True)


def _as_matrix(rho) -> tuple[tuple[int, ...], np.ndarray]:
    if isinstance(rho, DensityOperator):
        return rho.dims, rho.matrix
    if isinstance(rho, Operator):
        return rho.dims, rho.entries
    raise TypeError(f"expected DensityOperator or Operator, got {type(rho).__name__}")


def partial_trace(rho: DensityOperator, keep: Iterable[int]) -> DensityOperator:
    """Reduced density operator on the subsystems listed in ``keep``.

    The kept subsystems stay in their original order regardless of the
    order given in ``keep``.
    """
    dims, m = _as_matrix(rho)
    keep = sorted(set(int(k) for k in keep))
    if not keep:
        raise ValidationError("partial_trace needs a nonempty keep set")
    if keep[0] < 0 or keep[-1] >= len(dims):
        raise ValidationError(f"keep set {keep} out of range for {len(dims)} subsystems")
    n = len(dims)
    drop = [i for i in range(n) if i not in keep]
    t = m.reshape(dims + dims)
    # contract each dropped row axis with its column axis
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise ValidationError("too many subsystems for partial_trace")
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for i in drop:
        cols[i] = rows[i]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    kdims = tuple(dims[i] for i in keep)
    side = math.prod(kdims)
    return DensityOperator(Operator(kdims, reduced.reshape(side, side)))


def expectation(rho: DensityOperator, O: Operator) -> float:
    """``Tr(rho O)`` for Hermitian ``O``; the imaginary residue is checked then dropped."""
    dims, m = _as_matrix(rho)
    if O.dim != m.shape[0]:
        raise ValidationError(f"dims mismatch {dims} vs {O.dims}")
    if not O.is_hermitian():
        raise ValidationError("expectation needs a Hermitian observable")
    val = np.einsum("ij,ji->", m, O.entries)
    if abs(val.imag) > tol().algebraic:
        raise ValidationError(f"expectation has imaginary part {val.imag:.3g}")
    return float(val.real)
