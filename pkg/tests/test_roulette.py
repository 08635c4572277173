import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_state, random_unitary
from twinspin.errors import ValidationError
from twinspin.hilbert import StateVector
from twinspin.measure import JointDistribution
from twinspin.roulette import Roulette, build_roulette, chain_sample, chain_samples, chain_tables, spin
from twinspin.spin1 import PRIMED_FRAME, Frame, ck_table, frame_basis, upsilon

seeds = st.integers(0, 2**32 - 1)
BELL = JointDistribution(np.array([[0.5, 0.0], [0.25, 0.25]]), (1, -1), (1, -1))


def test_sectors_follow_row_major_order():
    r = build_roulette(BELL)
    assert r.labels == [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    assert np.allclose(r.widths, [0.5, 0, 0.25, 0.25])
    assert r.cumulative[-1] == 1.0


def test_spin_boundaries_are_half_open():
    r = build_roulette(BELL)
    two_pi = 2 * math.pi
    assert spin(r, 0.0) == (1, 1)
    assert spin(r, 0.5 * two_pi) == (-1, 1)  # zero-width (1, -1) is skipped
    assert spin(r, 0.75 * two_pi) == (-1, -1)
    assert spin(r, math.nextafter(two_pi, 0)) == (-1, -1)


@pytest.mark.parametrize("phi", [-1e-12, 2 * math.pi, 7.0, float("nan")])
def test_spin_rejects_out_of_range(phi):
    with pytest.raises(ValidationError):
        spin(build_roulette(BELL), phi)


def test_roulette_validation():
    with pytest.raises(ValidationError):
        Roulette((("a", 0.5), ("b", 0.6)), (0.5, 1.0))
    with pytest.raises(ValidationError):
        Roulette((("a", -0.1), ("b", 1.1)), (0.0, 1.0))


@given(seeds, st.floats(0, 1, exclude_max=True))
def test_spin_never_lands_in_impossible_sector(seed, u):
    rng = np.random.default_rng(seed)
    F = Frame.random(rng)
    dist = ck_table(Frame.identity(), F)
    r = build_roulette(dist)
    a, b = spin(r, u * 2 * math.pi)
    assert dist.probs[a, b] > 0


def test_roulette_frequencies_match_widths():
    r = build_roulette(ck_table(Frame.identity(), PRIMED_FRAME))
    rng = np.random.default_rng(5)
    n = 20_000
    hits = {}
    for phi in rng.random(n) * 2 * math.pi:
        lab = spin(r, float(phi))
        hits[lab] = hits.get(lab, 0) + 1
    for lab, w in r.sectors:
        f = hits.get(lab, 0) / n
        assert abs(f - w) <= 5 * math.sqrt(w * (1 - w) / n) + 1e-12


def bases(seed):
    rng = np.random.default_rng(seed)
    A, B = random_unitary(rng, 3), random_unitary(rng, 3)
    psi = StateVector((3, 3), random_state(rng, 9))
    return psi, [StateVector((3,), A[:, i]) for i in range(3)], [StateVector((3,), B[:, i]) for i in range(3)]


@given(seeds)
def test_chain_tables_are_born_rule(seed):
    psi, bA, bB = bases(seed)
    joint, pa, pb = chain_tables(psi, bA, bB)
    oracle = np.array([[abs(np.vdot(np.kron(a.amps, b.amps), psi.amps)) ** 2 for b in bB] for a in bA])
    assert np.allclose(joint, oracle, atol=1e-12)
    assert np.allclose(pa, oracle.sum(axis=1)) and np.allclose(pb, oracle.sum(axis=0))


@pytest.mark.parametrize("order", ["A-first", "B-first"])
def test_chain_reproduces_joint_law(order):
    psi, bA, bB = bases(123)
    n = 60_000
    a, b = chain_samples(psi, bA, bB, order, n, seed=9)
    freq = np.bincount(a * 3 + b, minlength=9).reshape(3, 3) / n
    joint, _, _ = chain_tables(psi, bA, bB)
    sd = np.sqrt(joint * (1 - joint) / n)
    assert np.all(np.abs(freq - joint) <= 5 * sd + 1e-12)


@pytest.mark.parametrize("order", ["A-first", "B-first"])
def test_chain_respects_impossible_pairs(order):
    a, b = chain_samples(upsilon(), frame_basis(Frame.identity()), frame_basis(PRIMED_FRAME), order, 5000, seed=2)
    pairs = set(zip(a.tolist(), b.tolist()))
    assert pairs <= {(0, 1), (0, 2), (1, 0), (2, 1), (2, 2)}


def test_chain_is_seeded():
    psi, bA, bB = bases(1)
    x = chain_samples(psi, bA, bB, "A-first", 100, seed=4)
    y = chain_samples(psi, bA, bB, "A-first", 100, seed=4)
    assert all(np.array_equal(p, q) for p, q in zip(x, y))
    a, b = chain_sample(psi, bA, bB, "B-first", seed=4)
    assert isinstance(a, int) and isinstance(b, int)


def test_chain_rejects_unknown_order():
    psi, bA, bB = bases(1)
    with pytest.raises(ValidationError):
        chain_samples(psi, bA, bB, "both", 10)
