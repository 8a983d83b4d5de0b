import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from opcoorbit.errors import DimensionMismatch
from opcoorbit.finite_tf import (Lattice, LatticePoint, Weight, gaussian_window, modulate, stft, tf_atoms,
                                 tf_shift, tf_shift_matrix, tf_shift_phase, translate, twisted_convolution,
                                 wrapped_distance)
from opcoorbit.generators import spreading_to_operator
from opcoorbit.rng import RngStream


def rand_vec(n, seed):
    return RngStream(seed).complex_normal(n)


def brute_stft(f, g):
    # direct <f, pi(x, w) g> from the matrix of pi
    n = f.shape[0]
    out = np.empty((n, n), dtype=complex)
    for x in range(n):
        for w in range(n):
            out[x, w] = np.vdot(tf_shift_matrix((x, w), n) @ g, f)
    return out


def delta(n, k=0):
    e = np.zeros(n, dtype=complex)
    e[k] = 1
    return e


# translate / modulate / tf_shift

def test_translate_delta_and_identity():
    assert np.array_equal(translate(delta(8), 1), delta(8, 1))
    f = rand_vec(8, 1)
    assert np.array_equal(translate(f, 0), f)
    assert np.allclose(translate(translate(f, 3), 5), f, atol=0)


def test_translate_definition():
    f = rand_vec(10, 2)
    for x in range(-12, 13):
        out = translate(f, x)
        assert np.array_equal(out, f[(np.arange(10) - x) % 10])


def test_modulate_cases():
    n = 12
    f = rand_vec(n, 3)
    assert np.array_equal(modulate(f, 0), f)
    char = modulate(np.ones(n), 5)
    assert np.allclose(char, np.exp(2j * np.pi * 5 * np.arange(n) / n), atol=1e-15)
    assert np.allclose(np.abs(modulate(f, 7)), np.abs(f), rtol=1e-14)


def test_tf_shift_cases():
    f = rand_vec(8, 4)
    assert np.array_equal(tf_shift(f, (0, 0)), f)
    assert np.allclose(tf_shift(delta(5), (2, 0)), delta(5, 2))
    assert np.allclose(tf_shift(f, (3, 2)), modulate(translate(f, 3), 2))


def test_tf_shift_unitary_exhaustive_n8():
    f, g = rand_vec(8, 5), rand_vec(8, 6)
    for lam in itertools.product(range(8), repeat=2):
        assert np.isclose(np.vdot(tf_shift(g, lam), tf_shift(f, lam)), np.vdot(g, f), rtol=1e-13)


def test_tf_shift_matrix_matches_action():
    f = rand_vec(9, 7)
    for lam in [(0, 0), (1, 4), (8, 8), (5, 2)]:
        assert np.allclose(tf_shift_matrix(lam, 9) @ f, tf_shift(f, lam), atol=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 143), st.integers(0, 143), st.integers(0, 2 ** 32))
def test_unitarity_sampled_n144(x, w, seed):
    f = rand_vec(144, seed)
    assert abs(np.linalg.norm(tf_shift(f, (x, w))) - np.linalg.norm(f)) <= 1e-12 * np.linalg.norm(f)


# phase / composition

def test_phase_trivial():
    assert tf_shift_phase((0, 0), (3, 2), 7) == 1


def test_composition_law_exhaustive_n4():
    n = 4
    mats = {lam: tf_shift_matrix(lam, n) for lam in itertools.product(range(n), repeat=2)}
    for lam, mu in itertools.product(mats, repeat=2):
        c = tf_shift_phase(lam, mu, n)
        total = ((lam[0] + mu[0]) % n, (lam[1] + mu[1]) % n)
        assert np.allclose(mats[lam] @ mats[mu], c * mats[total], atol=1e-14)


def test_phase_commutator_symbol():
    n = 9
    for lam, mu in [((1, 2), (3, 4)), ((8, 0), (2, 7)), ((5, 5), (4, 1))]:
        got = tf_shift_phase(lam, mu, n) * np.conj(tf_shift_phase(mu, lam, n))
        want = np.exp(-2j * np.pi * (lam[0] * mu[1] - mu[0] * lam[1]) / n)
        assert np.isclose(got, want, atol=1e-14)


# lattice and weights

def test_lattice_order_and_size():
    lat = Lattice(12, 3, 4)
    assert len(lat) == 12 * 12 // 12
    assert lat.shape == (4, 3)
    assert lat.points[:4] == [LatticePoint(0, 0), LatticePoint(0, 4), LatticePoint(0, 8), LatticePoint(3, 0)]
    for j, p in enumerate(lat.points):
        assert lat.index(p) == j
    with pytest.raises(KeyError):
        lat.index((1, 0))


def test_lattice_paper_size():
    assert len(Lattice(144, 3, 3)) == 2304
    assert len(Lattice(144, 2, 2)) == 5184


@pytest.mark.parametrize("a,b", [(5, 1), (1, 7), (0, 2)])
def test_lattice_rejects_bad_steps(a, b):
    with pytest.raises(ValueError):
        Lattice(12, a, b)


def test_weights():
    lat = Lattice(8, 2, 2)
    assert np.all(Weight()(lat.xs, lat.ws, 8) == 1)
    v = Weight.polynomial(2)(lat.xs, lat.ws, 8)
    assert np.allclose(v, (1 + lat.distances_to_origin()) ** 2)
    assert v[0] == 1
    with pytest.raises(ValueError):
        Weight("custom", table=np.zeros((8, 8)))
    with pytest.raises(ValueError):
        Weight.polynomial(-1)


def test_wrapped_distance_cases():
    assert wrapped_distance((3, 4), (3, 4), 10) == 0
    assert wrapped_distance((0, 0), (9, 0), 10) == 1
    assert wrapped_distance((0, 0), (5, 5), 10) == pytest.approx(np.hypot(5, 5))
    rng = RngStream(8)
    for lam, mu in zip(rng.integers(10, 40).reshape(20, 2), rng.integers(10, 40).reshape(20, 2)):
        assert wrapped_distance(lam, mu, 10) == wrapped_distance(mu, lam, 10)


# STFT

def test_stft_matches_brute_force():
    f, g = rand_vec(8, 9), rand_vec(8, 10)
    assert np.allclose(stft(f, g), brute_stft(f, g), atol=1e-13)


def test_stft_lattice_sampling():
    f, g = rand_vec(12, 11), rand_vec(12, 12)
    lat = Lattice(12, 3, 2)
    full = stft(f, g)
    assert np.allclose(stft(f, g, lat), full[::3, ::2], atol=1e-13)


def test_stft_origin_is_norm():
    g = rand_vec(8, 13)
    assert np.isclose(stft(g, g)[0, 0], np.linalg.norm(g) ** 2)


@pytest.mark.parametrize("n", [2, 3, 8, 17, 32])
def test_moyal(n):
    f, g = rand_vec(n, 14 + n), rand_vec(n, 15 + n)
    lhs = np.sum(np.abs(stft(f, g)) ** 2)
    rhs = n * np.linalg.norm(f) ** 2 * np.linalg.norm(g) ** 2
    assert abs(lhs - rhs) <= 1e-10 * rhs


def test_covariance_exhaustive_n8():
    n = 8
    f, g = rand_vec(n, 16), rand_vec(n, 17)
    base = np.abs(stft(f, g))
    for mu in itertools.product(range(n), repeat=2):
        shifted = np.abs(stft(tf_shift(f, mu), g))
        want = np.roll(base, mu, axis=(0, 1))
        assert np.allclose(shifted, want, atol=1e-10)


def test_stft_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        stft(np.ones(4), np.ones(5))


# Gaussian

@pytest.mark.parametrize("n", [16, 36, 144])
def test_gaussian_window(n):
    g = gaussian_window(n)
    assert np.linalg.norm(g) == pytest.approx(1, abs=1e-14)
    assert np.all(g.imag == 0) and np.all(g.real > 0)
    j = np.arange(1, n // 2)
    assert np.allclose(g[n // 2 + j], g[n // 2 - j], atol=1e-12)
    v = np.abs(stft(g, g))
    assert v[0, 0] == v.max()


def test_gaussian_nearly_fourier_invariant():
    n = 144
    g = gaussian_window(n)
    # centered DFT of a centered Gaussian is the same Gaussian
    ghat = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(g))) / np.sqrt(n)
    assert np.allclose(np.abs(ghat), g.real, atol=1e-12)


# atoms

def test_tf_atoms_layout():
    n = 12
    lat = Lattice(n, 3, 4)
    windows = RngStream(18).complex_normal((2, n))
    atoms = tf_atoms(windows, lat)
    assert atoms.shape == (n, len(lat), 2)
    for j, lam in enumerate(lat.points):
        for m in range(2):
            assert np.allclose(atoms[:, j, m], tf_shift(windows[m], lam), atol=1e-15)


# twisted convolution

def test_twisted_unit():
    n = 6
    eta = RngStream(19).complex_normal((n, n))
    unit = np.zeros((n, n), dtype=complex)
    unit[0, 0] = 1
    assert np.allclose(twisted_convolution(eta, unit), eta, atol=1e-13)


def test_twisted_deltas_match_phase():
    n = 5
    for lam, mu in [((1, 2), (3, 4)), ((4, 1), (4, 3))]:
        d1 = np.zeros((n, n), dtype=complex)
        d2 = np.zeros((n, n), dtype=complex)
        d1[lam] = 1
        d2[mu] = 1
        out = twisted_convolution(d1, d2)
        want = np.zeros((n, n), dtype=complex)
        want[(lam[0] + mu[0]) % n, (lam[1] + mu[1]) % n] = tf_shift_phase(lam, mu, n)
        assert np.allclose(out, want, atol=1e-14)


@pytest.mark.parametrize("n", [4, 7])
def test_twisted_realizes_composition(n):
    rng = RngStream(20 + n)
    eta, other = rng.complex_normal((n, n)), rng.complex_normal((n, n))
    lhs = spreading_to_operator(eta) @ spreading_to_operator(other)
    rhs = spreading_to_operator(twisted_convolution(eta, other))
    assert np.allclose(lhs, rhs, atol=1e-12 * np.linalg.norm(lhs))


def test_twisted_grid_mismatch():
    with pytest.raises(DimensionMismatch):
        twisted_convolution(np.ones((4, 4)), np.ones((5, 5)))
