"""No-collapse measurement circuits for the spin-1 twin experiment.

Instead of producing classical outcomes, each party writes its result into
a quantum carrier. The register holds, in order, Alice's system, Alice's
carrier, Bob's system and Bob's carrier (``sysA, carA, sysB, carB``), plus an
optional comparison qubit ``cmp``. Replicated carriers are named
``carA.0, carA.1, ...``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .config import tol
from .errors import DimensionLimitError, ValidationError
from .hilbert import Operator, StateVector, basis, projector, tensor
from .spin1 import Direction, Frame, frame_basis

__all__ = [
    "Register",
    "Gate",
    "Branch",
    "VARIANTS",
    "shift",
    "inverse_fourier",
    "measurement_gate",
    "swap_gate",
    "compare_gate",
    "direction_gate",
    "frame_compare_gate",
    "ominus",
    "n_index",
    "apply_gate",
    "twin_register",
    "run_twin_circuit",
    "reference_state",
    "replicate_carriers",
    "compare_replicated",
    "branches",
    "probability_of",
    "fidelity",
]

Variant = Literal["mm", "mmc", "xx", "xxcf", "mmw"]
VARIANTS: tuple[str, ...] = ("mm", "mmc", "xx", "xxcf", "mmw")

DEFAULT_DIMENSION_LIMIT = 3**10
FULL_MATRIX_LIMIT = 81


@dataclass(frozen=True)
class Register:
    state: StateVector
    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        if len(names) != len(self.state.dims):
            raise ValidationError(f"{len(names)} names for {len(self.state.dims)} subsystems")
        if len(set(names)) != len(names):
            raise ValidationError(f"duplicate subsystem names {names}")
        if not self.state.is_normalized():
            raise ValidationError("register state must be normalized")
        object.__setattr__(self, "names", names)

    @property
    def dims(self) -> tuple[int, ...]:
        return self.state.dims

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise ValidationError(f"no subsystem named {name!r} in {self.names}") from None

    def dim_of(self, name: str) -> int:
        return self.dims[self.index(name)]


@dataclass(frozen=True)
class Gate:
    matrix: Operator
    acts_on: tuple[str, ...]
    label: str = ""

    def __post_init__(self):
        acts = tuple(self.acts_on)
        if len(acts) != len(self.matrix.dims):
            raise ValidationError("gate acts_on does not match its subsystem dims")
        if not self.matrix.is_unitary():
            raise ValidationError(f"gate {self.label or acts} is not unitary")
        object.__setattr__(self, "acts_on", acts)

    def on(self, *names: str) -> "Gate":
        """Same gate retargeted to other subsystems."""
        return Gate(self.matrix, names, self.label)


@dataclass(frozen=True)
class Branch:
    label: tuple[int, ...]
    weight: float
    relative_state: StateVector = field(repr=False)
    names: tuple[str, ...] = ()


def shift(d: int = 3, power: int = 1) -> np.ndarray:
    """Cyclic shift ``|k> -> |k + power mod d>``."""
    U = np.zeros((d, d))
    for k in range(d):
        U[(k + power) % d, k] = 1.0
    return U


def inverse_fourier(d: int = 3) -> np.ndarray:
    """Entries ``omega^(-jk) / sqrt(d)``; maps the uniform superposition to ``|0>``."""
    j, k = np.meshgrid(np.arange(d), np.arange(d), indexing="ij")
    return np.exp(-2j * np.pi * j * k / d) / np.sqrt(d)


def measurement_gate(F: Frame, names: Sequence[str] = ("sys", "car")) -> Gate:
    """``sum_j P_j^F (x) U^j``: ``|kappa_j>|k> -> |kappa_j>|k + j mod 3>``."""
    kap = frame_basis(F)
    m = sum(np.kron(projector(kap[j]).entries, shift(3, j)) for j in range(3))
    return Gate(Operator((3, 3), m), tuple(names), "M^F")


def swap_gate(F: Frame, names: Sequence[str] = ("sys", "car")) -> Gate:
    """``sum_jk |kappa_k><kappa_j| (x) |j><k|``: ``|kappa_j>|k> -> |kappa_k>|j>``."""
    kap = frame_basis(F)
    m = np.zeros((9, 9), dtype=complex)
    for j in range(3):
        for k in range(3):
            sys_part = np.outer(kap[k].amps, kap[j].amps.conj())
            car_part = np.outer(basis(3, j).amps, basis(3, k).amps)
            m += np.kron(sys_part, car_part)
    return Gate(Operator((3, 3), m), tuple(names), "X^F")


def compare_gate(names: Sequence[str] = ("carA", "carB")) -> Gate:
    """``|k>|j> -> |k>|k - j mod 3>``."""
    m = np.zeros((9, 9))
    for k in range(3):
        for j in range(3):
            m[3 * k + (k - j) % 3, 3 * k + j] = 1.0
    return Gate(Operator((3, 3), m), tuple(names), "C")


def direction_gate(
    w: Direction, F: Frame | None = None, names: Sequence[str] = ("sys", "car")
) -> Gate:
    """Single-direction gate on a system and a two-level carrier.

    The carrier is left alone on the ``J_w^2 = 0`` subspace (the ray along
    ``w``) and flipped on its complement. ``F`` only supplies the axes used
    to expand ``w``; the gate itself depends on ``w`` alone.
    """
    if F is not None:
        coords = F.coordinates(w)
        kw = sum(c * k.amps for c, k in zip(coords, frame_basis(F)))
        ket_w = StateVector((3,), kw)
    else:
        ket_w = w.ket()
    Pw = projector(ket_w).entries
    X2 = np.array([[0.0, 1.0], [1.0, 0.0]])
    m = np.kron(Pw, np.eye(2)) + np.kron(np.eye(3) - Pw, X2)
    return Gate(Operator((3, 2), m), tuple(names), "M^w")


def ominus(a: int, b: int) -> int:
    """0 when the arguments are equal, 1 otherwise."""
    return 0 if a == b else 1


def n_index(F: Frame, w: Direction) -> int:
    """0, 1, 2 when ``w`` is the x, y or z axis of ``F`` (up to sign), else -1."""
    return F.axis_index(w)


def frame_compare_gate(
    F: Frame,
    w: Direction,
    carrier_dims: tuple[int, int] = (3, 2),
    names: Sequence[str] = ("carA", "carB", "cmp"),
) -> Gate:
    """``|c1>|c2>|c> -> |c1>|c2>|n ominus c1 ominus c2 ominus c>`` on a comparison qubit.

    The chain is evaluated left to right. Its last step acts on two bits,
    where ``ominus`` coincides with addition mod 2, so the map is the
    reversible evaluation ``c -> c + f(c1, c2) mod 2``.
    """
    n = n_index(F, w)
    if n < 0:
        raise ValidationError("frame comparison needs w along one of the frame axes")
    d1, d2 = carrier_dims
    size = d1 * d2 * 2
    m = np.zeros((size, size))
    for c1 in range(d1):
        for c2 in range(d2):
            f = ominus(ominus(n, c1), c2)
            for c in range(2):
                out = ominus(f, c)
                m[(c1 * d2 + c2) * 2 + out, (c1 * d2 + c2) * 2 + c] = 1.0
    return Gate(Operator((d1, d2, 2), m), tuple(names), "C^{F,w}")


def _embed_full(dims: tuple[int, ...], axes: list[int], g: np.ndarray) -> np.ndarray:
    """Full-register matrix of a gate acting on ``axes``."""
    n = len(dims)
    rest = [i for i in range(n) if i not in axes]
    perm = axes + rest
    rd = math.prod(dims[i] for i in rest)
    big = np.kron(g, np.eye(rd))
    pdims = [dims[i] for i in perm]
    inv = np.argsort(perm)
    t = big.reshape(pdims + pdims)
    t = t.transpose(list(inv) + [n + i for i in inv])
    side = math.prod(dims)
    return t.reshape(side, side)


def _apply_tensordot(dims: tuple[int, ...], axes: list[int], g: np.ndarray, amps):
    k = len(axes)
    gdims = [dims[i] for i in axes]
    G = g.reshape(gdims + gdims)
    T = amps.reshape(dims)
    out = np.tensordot(G, T, axes=(list(range(k, 2 * k)), axes))
    # tensordot puts the gate's output axes first
    rest = [i for i in range(len(dims)) if i not in axes]
    order = axes + rest
    return np.moveaxis(out, list(range(len(dims))), order).reshape(-1)


def apply_gate(r: Register, gate: Gate) -> Register:
    axes = [r.index(nm) for nm in gate.acts_on]
    if len(set(axes)) != len(axes):
        raise ValidationError(f"gate targets a subsystem twice: {gate.acts_on}")
    gdims = tuple(r.dims[i] for i in axes)
    if gdims != gate.matrix.dims:
        raise ValidationError(
            f"gate {gate.label} expects dims {gate.matrix.dims}, register has {gdims}"
        )
    g = gate.matrix.entries
    if r.state.dim <= FULL_MATRIX_LIMIT:
        amps = _embed_full(r.dims, axes, g) @ r.state.amps
    else:
        amps = _apply_tensordot(r.dims, axes, g, r.state.amps)
    return Register(StateVector(r.dims, amps), r.names)


def twin_register(carrier_b_dim: int = 3, comparison_qubit: bool = False) -> Register:
    """Twin state on ``sysA, sysB`` with both carriers (and ``cmp``) in ``|0>``."""
    amps = np.zeros((3, 3, 3, carrier_b_dim), dtype=complex)
    for k in range(3):
        amps[k, 0, k, 0] = 1.0 / np.sqrt(3.0)
    dims = (3, 3, 3, carrier_b_dim)
    names = ("sysA", "carA", "sysB", "carB")
    psi = StateVector(dims, amps.reshape(-1))
    if comparison_qubit:
        psi = tensor(psi, basis(2, 0))
        names = names + ("cmp",)
    return Register(psi, names)


def run_twin_circuit(
    variant: Variant,
    F: Frame,
    w: Direction | None = None,
    compare: bool = False,
    replicas: int = 1,
    limit: int = DEFAULT_DIMENSION_LIMIT,
) -> Register:
    """Run one of the twin circuits on the initial twin register.

    ``mm``/``xx`` apply measurement or swap gates of frame ``F`` for both
    parties; ``mmc`` adds the carrier comparison; ``xxcf`` adds the comparison
    and the inverse Fourier transform on Alice's carrier; ``mmw`` gives Bob
    the single-direction gate for ``w``. With ``compare=True`` (``mmw`` only)
    a comparison qubit records the frame-dependent comparison.

    ``replicas > 1`` replaces every carrier state by ``m`` copies after the
    measurement gates (cat-state signals); comparison then acts per copy.
    """
    if variant not in VARIANTS:
        raise ValidationError(f"unknown circuit variant {variant!r}; expected one of {VARIANTS}")
    if replicas < 1:
        raise ValidationError("replicas must be >= 1")
    if variant == "xxcf" and replicas > 1:
        raise ValidationError("xxcf is defined for single carriers only")
    if compare and variant != "mmw":
        raise ValidationError("compare applies to the mmw variant")
    if variant == "mmw":
        if w is None:
            raise ValidationError("mmw needs a direction w")
        if compare and replicas > 1:
            raise ValidationError("the frame comparison is defined for single carriers only")
        r = twin_register(carrier_b_dim=2, comparison_qubit=compare)
        r = apply_gate(r, measurement_gate(F, ("sysA", "carA")))
        r = apply_gate(r, direction_gate(w, F, ("sysB", "carB")))
        if compare:
            r = apply_gate(r, frame_compare_gate(F, w))
        return replicate_carriers(r, replicas, limit=limit) if replicas > 1 else r

    r = twin_register()
    make = measurement_gate if variant in ("mm", "mmc") else swap_gate
    r = apply_gate(r, make(F, ("sysA", "carA")))
    r = apply_gate(r, make(F, ("sysB", "carB")))
    if replicas > 1:
        r = replicate_carriers(r, replicas, limit=limit)
        if variant == "mmc":
            r = compare_replicated(r)
        return r
    if variant in ("mmc", "xxcf"):
        r = apply_gate(r, compare_gate(("carA", "carB")))
    if variant == "xxcf":
        F3 = Operator((3,), inverse_fourier(3))
        r = apply_gate(r, Gate(F3, ("carA",), "F3^-1"))
    return r


def reference_state(variant: Variant, F: Frame, w: Direction | None = None) -> StateVector:
    """Closed-form final state of a twin circuit, in ``sysA, carA, sysB, carB`` order.

    Built directly from the frame basis, independently of the gates.
    """
    kap = frame_basis(F)
    e = [basis(3, k) for k in range(3)]
    s = 1.0 / np.sqrt(3.0)
    if variant == "mm":
        terms = [tensor(kap[k], e[k], kap[k], e[k]) for k in range(3)]
        return s * _sum(terms)
    if variant == "mmc":
        terms = [tensor(kap[k], e[k], kap[k], e[0]) for k in range(3)]
        return s * _sum(terms)
    if variant == "xx":
        terms = [tensor(kap[0], e[k], kap[0], e[k]) for k in range(3)]
        return s * _sum(terms)
    if variant == "xxcf":
        return tensor(kap[0], e[0], kap[0], e[0])
    if variant == "mmw":
        if w is None:
            raise ValidationError("mmw needs a direction w")
        wj = F.coordinates(w)
        kw = StateVector((3,), sum(float(c) * k.amps for c, k in zip(wj, kap)))
        b = [basis(2, 0), basis(2, 1)]
        terms = []
        for j in range(3):
            c = float(wj[j])
            bob = tensor(kw * c, b[0]) + tensor(kap[j] - kw * c, b[1])
            terms.append(tensor(tensor(kap[j], e[j]), bob))
        return s * _sum(terms)
    raise ValidationError(f"unknown circuit variant {variant!r}")


def _sum(vs: Sequence[StateVector]) -> StateVector:
    out = vs[0]
    for v in vs[1:]:
        out = out + v
    return out


def _carrier_names(r: Register) -> list[str]:
    return [n for n in r.names if n.startswith("car")]


def replicate_carriers(
    r: Register,
    m: int,
    carriers: Sequence[str] | None = None,
    limit: int = DEFAULT_DIMENSION_LIMIT,
) -> Register:
    """Replace each carrier basis state ``|k>`` by ``|k>^(x)m``.

    Carrier ``c`` becomes subsystems ``c.0 ... c.(m-1)``. ``m = 1`` returns the
    register unchanged.
    """
    if m < 1:
        raise ValidationError("replication count must be >= 1")
    carriers = list(_carrier_names(r) if carriers is None else carriers)
    for c in carriers:
        r.index(c)
    new_dims = []
    for nm, d in zip(r.names, r.dims):
        new_dims.extend([d] * (m if nm in carriers else 1))
    total = math.prod(new_dims)
    if total > limit:
        raise DimensionLimitError(f"replicated register dimension {total} exceeds limit {limit}")
    if m == 1:
        return r
    T = r.state.tensor_view()
    names: list[str] = []
    dims: list[int] = []
    for nm, d in zip(r.names, r.dims):
        if nm in carriers:
            names.extend(f"{nm}.{i}" for i in range(m))
            dims.extend([d] * m)
        else:
            names.append(nm)
            dims.append(d)
    out = np.zeros(dims, dtype=complex)
    # copy each amplitude to the index where every replica repeats the carrier value
    for idx in np.ndindex(*r.dims):
        a = T[idx]
        if a == 0:
            continue
        new_idx = []
        for nm, i in zip(r.names, idx):
            new_idx.extend([i] * (m if nm in carriers else 1))
        out[tuple(new_idx)] = a
    return Register(StateVector(tuple(dims), out.reshape(-1)), tuple(names))


def compare_replicated(r: Register, a: str = "carA", b: str = "carB") -> Register:
    """Componentwise comparison of two replicated carriers, copy by copy."""
    a_parts = sorted(n for n in r.names if n.startswith(a + "."))
    b_parts = sorted(n for n in r.names if n.startswith(b + "."))
    if not a_parts:
        a_parts, b_parts = [a], [b]
    if len(a_parts) != len(b_parts):
        raise ValidationError("replicated carriers have different copy counts")
    for x, y in zip(a_parts, b_parts):
        r = apply_gate(r, compare_gate((x, y)))
    return r


def branches(r: Register, carriers: Sequence[str]) -> list[Branch]:
    """Split the register by computational carrier outcomes.

    Each branch carries its weight and the normalized relative state of the
    remaining subsystems. Branches of weight below tolerance are dropped.
    """
    axes = [r.index(c) for c in carriers]
    rest = [i for i in range(len(r.dims)) if i not in axes]
    T = r.state.tensor_view().transpose(axes + rest)
    cdims = [r.dims[i] for i in axes]
    rdims = tuple(r.dims[i] for i in rest)
    out = []
    for label in np.ndindex(*cdims):
        part = T[label].reshape(-1)
        wgt = float(np.vdot(part, part).real)
        if wgt <= tol().algebraic:
            continue
        rel = StateVector(rdims or (1,), part / np.sqrt(wgt))
        out.append(
            Branch(
                tuple(int(x) for x in label),
                wgt,
                rel,
                tuple(r.names[i] for i in rest),
            )
        )
    return out


def probability_of(r: Register, name: str, value: int) -> float:
    """Probability that subsystem ``name`` is found in ``|value>``."""
    ax = r.index(name)
    T = np.moveaxis(r.state.tensor_view(), ax, 0)
    part = T[value]
    return float(np.vdot(part, part).real)


def fidelity(a: StateVector, b: StateVector) -> float:
    return abs(a.inner(b)) ** 2
