"""Bipartite measurement probabilities and von Neumann measurement maps.

Two parties, ``"A"`` (subsystem 0) and ``"B"`` (subsystem 1), each apply a
projective measurement at the same local-clock time ``tau``. The joint state
in each of the four zones of the two-clock plane is obtained by applying the
party measurement superoperators to the initial density operator.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .config import tol
from .errors import ValidationError
from .hilbert import (
    DensityOperator,
    Operator,
    StateVector,
    identity,
    projector,
    tensor,
)

Party = Literal["A", "B"]

__all__ = [
    "Party",
    "ProjectiveMeasurement",
    "Zone",
    "JointDistribution",
    "joint_probability",
    "marginal_probability",
    "conditional_probability",
    "vn_measure",
    "party_measure",
    "zone_of",
    "zone_state",
    "relative_states",
    "q_matrix",
    "q_matrix_forms",
]


@dataclass(frozen=True)
class ProjectiveMeasurement:
    """Ordered, mutually orthogonal projectors resolving the identity.

    Projectors may have rank above one (incomplete measurement).
    """

    projectors: tuple[Operator, ...]

    def __post_init__(self):
        ps = tuple(self.projectors)
        if not ps:
            raise ValidationError("measurement needs at least one projector")
        dims = ps[0].dims
        atol = tol().algebraic
        total = np.zeros_like(ps[0].entries)
        for i, p in enumerate(ps):
            if p.dims != dims:
                raise ValidationError("projectors act on different spaces")
            m = p.entries
            if not np.allclose(m, m.conj().T, rtol=0, atol=atol):
                raise ValidationError(f"projector {i} is not Hermitian")
            if not np.allclose(m @ m, m, rtol=0, atol=atol):
                raise ValidationError(f"projector {i} is not idempotent")
            for j in range(i):
                if not np.allclose(ps[j].entries @ m, 0, rtol=0, atol=atol):
                    raise ValidationError(f"projectors {j} and {i} are not orthogonal")
            total = total + m
        if not np.allclose(total, np.eye(total.shape[0]), rtol=0, atol=atol):
            raise ValidationError("projectors do not sum to the identity")
        object.__setattr__(self, "projectors", ps)

    @classmethod
    def from_basis(cls, vectors: Sequence[StateVector]) -> "ProjectiveMeasurement":
        """Complete rank-one measurement in an orthonormal basis."""
        vs = list(vectors)
        if vs and len(vs) != vs[0].dim:
            raise ValidationError(
                f"basis has {len(vs)} vectors for a {vs[0].dim}-dimensional space"
            )
        return cls(tuple(projector(v) for v in vs))

    @property
    def dims(self) -> tuple[int, ...]:
        return self.projectors[0].dims

    def __len__(self) -> int:
        return len(self.projectors)


class Zone(enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"


@dataclass(frozen=True)
class JointDistribution:
    """Joint outcome probabilities indexed by ``(outcome_A, outcome_B)``.

    Entries down to ``-tol().probability`` are clamped to zero; anything more
    negative is rejected. Optional labels name the outcomes.
    """

    probs: np.ndarray = field(repr=False)
    row_labels: tuple = ()
    col_labels: tuple = ()

    def __post_init__(self):
        p = np.array(self.probs, dtype=float, copy=True)
        if p.ndim != 2:
            raise ValidationError("joint distribution must be a matrix")
        t = tol()
        if p.min() < -t.probability:
            raise ValidationError(f"negative probability {p.min():.3g}")
        p[p < 0] = 0.0
        if abs(p.sum() - 1.0) > t.algebraic:
            raise ValidationError(f"probabilities sum to {p.sum():.12g}, not 1")
        p.setflags(write=False)
        rows = tuple(self.row_labels) or tuple(range(p.shape[0]))
        cols = tuple(self.col_labels) or tuple(range(p.shape[1]))
        if len(rows) != p.shape[0] or len(cols) != p.shape[1]:
            raise ValidationError("label count does not match table shape")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "row_labels", rows)
        object.__setattr__(self, "col_labels", cols)

    @property
    def shape(self) -> tuple[int, int]:
        return self.probs.shape

    def marginal(self, party: Party) -> np.ndarray:
        return self.probs.sum(axis=1 if party == "A" else 0)


def _check_bipartite(psi: StateVector) -> None:
    if len(psi.dims) != 2:
        raise ValidationError(f"expected a bipartite state, got dims {psi.dims}")


def _check_factor(P: Operator, dim: int, who: str) -> None:
    if P.dim != dim:
        raise ValidationError(f"projector for {who} has dim {P.dim}, expected {dim}")


def _expect_state(psi: StateVector, O: Operator) -> float:
    val = np.vdot(psi.amps, O.entries @ psi.amps)
    return float(val.real)


def joint_probability(psi: StateVector, Pa: Operator, Pb: Operator) -> float:
    """``<psi| Pa (x) Pb |psi>``."""
    _check_bipartite(psi)
    _check_factor(Pa, psi.dims[0], "A")
    _check_factor(Pb, psi.dims[1], "B")
    return _expect_state(psi, tensor(Pa, Pb))


def marginal_probability(psi: StateVector, party: Party, P: Operator) -> float:
    _check_bipartite(psi)
    if party == "A":
        _check_factor(P, psi.dims[0], "A")
        O = tensor(P, identity(psi.dims[1]))
    elif party == "B":
        _check_factor(P, psi.dims[1], "B")
        O = tensor(identity(psi.dims[0]), P)
    else:
        raise ValidationError(f"unknown party {party!r}")
    return _expect_state(psi, O)


def conditional_probability(
    psi: StateVector, Pa: Operator, Pb: Operator, given: Party
) -> float:
    """``P_ab / P_a`` when ``given == "A"``, ``P_ab / P_b`` when ``given == "B"``."""
    joint = joint_probability(psi, Pa, Pb)
    cond = marginal_probability(psi, given, Pa if given == "A" else Pb)
    if cond <= tol().probability:
        raise ValidationError(f"conditioning event for party {given} has zero probability")
    return joint / cond


def _apply_superop(m: np.ndarray, projectors: Sequence[np.ndarray]) -> np.ndarray:
    return sum(P @ m @ P for P in projectors)


def vn_measure(rho: DensityOperator, m: ProjectiveMeasurement) -> DensityOperator:
    """``rho -> sum_m P_m rho P_m``."""
    if rho.op.dim != m.projectors[0].dim:
        raise ValidationError(f"measurement dim {m.projectors[0].dim} != state dim {rho.op.dim}")
    out = _apply_superop(rho.matrix, [p.entries for p in m.projectors])
    return DensityOperator(Operator(rho.dims, out))


def party_measure(
    rho: DensityOperator, party: Party, m: ProjectiveMeasurement
) -> DensityOperator:
    """Measure one party of a bipartite state, leaving the other untouched."""
    if len(rho.dims) != 2:
        raise ValidationError(f"expected a bipartite state, got dims {rho.dims}")
    da, db = rho.dims
    if party == "A":
        _check_factor(m.projectors[0], da, "A")
        lifted = [np.kron(p.entries, np.eye(db)) for p in m.projectors]
    elif party == "B":
        _check_factor(m.projectors[0], db, "B")
        lifted = [np.kron(np.eye(da), p.entries) for p in m.projectors]
    else:
        raise ValidationError(f"unknown party {party!r}")
    return DensityOperator(Operator(rho.dims, _apply_superop(rho.matrix, lifted)))


def zone_of(t1: float, t2: float, tau: float) -> Zone:
    """Zone of the two-clock plane; a clock reading ``>= tau`` counts as measured."""
    a_done = t1 >= tau
    b_done = t2 >= tau
    if not a_done and not b_done:
        return Zone.I
    if not a_done:
        return Zone.II
    if not b_done:
        return Zone.III
    return Zone.IV


def zone_state(
    psi: StateVector,
    mA: ProjectiveMeasurement,
    mB: ProjectiveMeasurement,
    z: Zone,
) -> DensityOperator:
    _check_bipartite(psi)
    rho = DensityOperator.from_state(psi)
    z = Zone(z)
    if z is Zone.I:
        return rho
    if z is Zone.II:
        return party_measure(rho, "B", mB)
    if z is Zone.III:
        return party_measure(rho, "A", mA)
    return party_measure(party_measure(rho, "B", mB), "A", mA)


def _check_basis(vectors: Sequence[StateVector], dim: int, who: str) -> np.ndarray:
    vs = list(vectors)
    if len(vs) != dim or any(v.dim != dim for v in vs):
        raise ValidationError(f"basis for {who} must have {dim} vectors of dim {dim}")
    B = np.column_stack([v.amps for v in vs])
    if not np.allclose(B.conj().T @ B, np.eye(dim), rtol=0, atol=tol().algebraic):
        raise ValidationError(f"basis for {who} is not orthonormal")
    return B


def relative_states(
    psi: StateVector, basis: Sequence[StateVector], party: Party
) -> tuple[np.ndarray, list[StateVector | None]]:
    """Coefficients and relative states of ``psi`` with respect to one party's basis.

    For ``party="A"`` this returns ``alpha_k`` and ``u_k`` with
    ``alpha_k |u_k> = (<a_k| (x) 1)|psi>`` and ``alpha_k >= 0``; for ``party="B"``
    the roles are mirrored, giving ``beta_j`` and ``v_j``. The first nonzero
    amplitude of each relative state is made real positive. Relative states
    with vanishing coefficient are returned as ``None``.
    """
    _check_bipartite(psi)
    da, db = psi.dims
    T = psi.tensor_view()
    if party == "A":
        B = _check_basis(basis, da, "A")
        rel = B.conj().T @ T  # row k: (<a_k| (x) 1)|psi>
        other = db
    elif party == "B":
        B = _check_basis(basis, db, "B")
        rel = (T @ B.conj()).T  # row j: (1 (x) <b_j|)|psi>
        other = da
    else:
        raise ValidationError(f"unknown party {party!r}")
    coeffs = np.linalg.norm(rel, axis=1)
    states: list[StateVector | None] = []
    for c, row in zip(coeffs, rel):
        if c <= tol().algebraic:
            states.append(None)
            continue
        u = row / c
        nz = np.flatnonzero(np.abs(u) > tol().algebraic)[0]
        u = u * (abs(u[nz]) / u[nz])
        states.append(StateVector((other,), u))
    return coeffs, states


def q_matrix_forms(
    psi: StateVector, basisA: Sequence[StateVector], basisB: Sequence[StateVector]
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The zone-IV weights computed three ways.

    Returns ``(direct, via_b, via_a)`` where ``direct[k, j] = |<a_k b_j|psi>|^2``,
    ``via_b`` uses the decomposition over B's basis (``|beta_j <a_k|v_j>|^2``)
    and ``via_a`` the decomposition over A's basis (``|alpha_k <b_j|u_k>|^2``).
    Terms with vanishing coefficient contribute zero.
    """
    _check_bipartite(psi)
    A = _check_basis(basisA, psi.dims[0], "A")
    B = _check_basis(basisB, psi.dims[1], "B")
    direct = np.abs(A.conj().T @ psi.tensor_view() @ B.conj()) ** 2

    alphas, us = relative_states(psi, basisA, "A")
    betas, vs = relative_states(psi, basisB, "B")
    n, m = len(basisA), len(basisB)
    via_b = np.zeros((n, m))
    via_a = np.zeros((n, m))
    for k in range(n):
        for j in range(m):
            if vs[j] is not None:
                via_b[k, j] = abs(betas[j] * basisA[k].inner(vs[j])) ** 2
            if us[k] is not None:
                via_a[k, j] = abs(alphas[k] * basisB[j].inner(us[k])) ** 2
    return direct, via_b, via_a


def q_matrix(
    psi: StateVector, basisA: Sequence[StateVector], basisB: Sequence[StateVector]
) -> JointDistribution:
    """Zone-IV joint outcome weights ``q_kj``.

    Both relative-state forms are evaluated alongside the direct overlap and
    must agree with it; disagreement is an internal error.
    """
    direct, via_b, via_a = q_matrix_forms(psi, basisA, basisB)
    atol = tol().algebraic
    for name, form in (("B-decomposition", via_b), ("A-decomposition", via_a)):
        err = float(np.max(np.abs(form - direct)))
        if err > atol:
            raise AssertionError(f"q_kj via {name} disagrees with direct form by {err:.3g}")
    return JointDistribution(direct)
