import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_density, random_state, random_unitary
from twinspin.config import override, tol
from twinspin.errors import ValidationError
from twinspin.hilbert import (
    DensityOperator,
    Operator,
    StateVector,
    basis,
    expectation,
    identity,
    ket,
    partial_trace,
    projector,
    tensor,
)

seeds = st.integers(0, 2**32 - 1)
small_dims = st.lists(st.integers(1, 3), min_size=1, max_size=3)


def loop_partial_trace(m, dims, keep):
    # index-by-index oracle, no einsum
    n = len(dims)
    kdims = [dims[i] for i in keep]
    out = np.zeros((int(np.prod(kdims)),) * 2, dtype=complex)
    for r in np.ndindex(*dims):
        for c in np.ndindex(*dims):
            if any(r[i] != c[i] for i in range(n) if i not in keep):
                continue
            ri = np.ravel_multi_index([r[i] for i in keep], kdims)
            ci = np.ravel_multi_index([c[i] for i in keep], kdims)
            out[ri, ci] += m[np.ravel_multi_index(r, dims), np.ravel_multi_index(c, dims)]
    return out


def test_basis_is_zero_based():
    assert np.array_equal(basis(3, 0).amps, [1, 0, 0])
    assert np.array_equal(basis(3, 2).amps, [0, 0, 1])
    with pytest.raises(ValidationError):
        basis(3, 3)


def test_state_amplitudes_are_read_only():
    v = ket(2, [1, 0])
    with pytest.raises(ValueError):
        v.amps[0] = 2


def test_state_copies_its_input():
    a = np.array([1.0, 0.0], dtype=complex)
    v = ket(2, a)
    a[0] = 5
    assert v.amps[0] == 1


def test_state_rejects_wrong_length_and_nan():
    with pytest.raises(ValidationError):
        StateVector((2, 2), np.ones(3))
    with pytest.raises(ValidationError):
        ket(2, [np.nan, 0])
    with pytest.raises(ValidationError):
        StateVector((0,), np.ones(0))


def test_state_arithmetic():
    a, b = basis(2, 0), basis(2, 1)
    s = (a + b) / np.sqrt(2)
    assert s.is_normalized()
    assert abs(s.inner(a) - 1 / np.sqrt(2)) < 1e-15
    assert np.allclose((2 * a - a).amps, a.amps)
    with pytest.raises(ValidationError):
        a + basis(3, 0)


@given(seeds, small_dims, small_dims)
def test_tensor_matches_kron(seed, d1, d2):
    rng = np.random.default_rng(seed)
    n1, n2 = int(np.prod(d1)), int(np.prod(d2))
    a, b = random_state(rng, n1), random_state(rng, n2)
    t = tensor(ket(d1, a), ket(d2, b))
    assert t.dims == tuple(d1) + tuple(d2)
    # subsystem 0 varies slowest
    expect = np.array([x * y for x in a for y in b])
    assert np.allclose(t.amps, expect, atol=1e-12)


def test_tensor_rejects_mixed_kinds():
    with pytest.raises(TypeError):
        tensor(basis(2, 0), identity(2))


def test_tensor_of_density_operators_is_density_operator():
    r = DensityOperator.from_state(basis(2, 0))
    assert isinstance(tensor(r, r), DensityOperator)


@given(seeds)
def test_operator_unitarity(seed):
    rng = np.random.default_rng(seed)
    U = Operator((3,), random_unitary(rng, 3))
    assert U.is_unitary()
    assert (U @ U.dag()).is_unitary()
    assert not Operator((3,), 2 * np.eye(3)).is_unitary()


def test_projector_requires_normalized():
    with pytest.raises(ValidationError):
        projector(ket(2, [1, 1]))


@given(seeds, st.integers(1, 4))
def test_density_from_random_matrix_valid(seed, rank):
    rng = np.random.default_rng(seed)
    rho = DensityOperator.from_matrix((2, 2), random_density(rng, 4, rank))
    ev = rho.eigenvalues()
    assert np.all(ev >= 0)
    assert abs(ev.sum() - 1) < 1e-10
    assert rho.purity() <= 1 + 1e-12


@pytest.mark.parametrize(
    "m, msg",
    [
        (np.array([[1, 1], [0, 0]]), "Hermitian"),
        (np.eye(2), "trace"),
        (np.array([[1.5, 0], [0, -0.5]]), "eigenvalue"),
    ],
)
def test_density_rejects_invalid(m, msg):
    with pytest.raises(ValidationError, match=msg):
        DensityOperator.from_matrix((2,), m)


@given(seeds, st.sampled_from([((2, 3), [0]), ((2, 3), [1]), ((3, 2, 2), [0, 2]), ((2, 2, 2), [1])]))
def test_partial_trace_matches_loop_oracle(seed, case):
    dims, keep = case
    rng = np.random.default_rng(seed)
    m = random_density(rng, int(np.prod(dims)))
    got = partial_trace(DensityOperator.from_matrix(dims, m), keep)
    assert got.dims == tuple(dims[i] for i in keep)
    assert np.allclose(got.matrix, loop_partial_trace(m, list(dims), keep), atol=1e-12)


@given(seeds)
def test_partial_trace_of_product_recovers_factor(seed):
    rng = np.random.default_rng(seed)
    a = random_density(rng, 3)
    b = random_density(rng, 2)
    rho = tensor(DensityOperator.from_matrix((3,), a), DensityOperator.from_matrix((2,), b))
    assert np.allclose(partial_trace(rho, [0]).matrix, a, atol=1e-12)
    assert np.allclose(partial_trace(rho, [1]).matrix, b, atol=1e-12)


def test_partial_trace_rejects_bad_keep():
    rho = DensityOperator.from_state(tensor(basis(2, 0), basis(2, 1)))
    with pytest.raises(ValidationError):
        partial_trace(rho, [])
    with pytest.raises(ValidationError):
        partial_trace(rho, [2])


@given(seeds)
def test_expectation_is_trace(seed):
    rng = np.random.default_rng(seed)
    m = random_density(rng, 3)
    H = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    H = H + H.conj().T
    val = expectation(DensityOperator.from_matrix((3,), m), Operator((3,), H))
    assert isinstance(val, float)
    assert abs(val - np.trace(m @ H).real) < 1e-10


def test_expectation_rejects_non_hermitian():
    rho = DensityOperator.from_state(basis(2, 0))
    with pytest.raises(ValidationError):
        expectation(rho, Operator((2,), np.array([[0, 1], [0, 0]])))


def test_tolerance_override_is_scoped():
    base = tol().algebraic
    with override(algebraic=1e-3):
        assert tol().algebraic == 1e-3
        assert ket(2, [1, 1e-4]).is_normalized()
    assert tol().algebraic == base
    with pytest.raises(TypeError):
        with override(nonsense=1.0):
            pass
