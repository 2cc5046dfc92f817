import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from underlay_ber.analytic import ModParams, awgn_ber
from underlay_ber.qam import (
    bits_to_labels,
    build_constellation,
    demodulate,
    gray_code,
    labels_to_bits,
    modulate,
    slice_labels,
)

QS = range(1, 11)


def brute_force_labels(c, z):
    """Minimum-distance detection by exhaustive search; ties to lowest label."""
    d = np.abs(z[..., None] - c.points) ** 2
    return np.argmin(d, axis=-1)  # argmin returns the first, i.e. lowest label


def popcount(x):
    return bin(int(x)).count("1")


@pytest.mark.parametrize("q", QS)
def test_unit_energy(q):
    c = build_constellation(q)
    assert abs(np.mean(np.abs(c.points) ** 2) - 1.0) <= 1e-12


@pytest.mark.parametrize("q", QS)
def test_label_bijection(q):
    c = build_constellation(q)
    assert len(set(np.round(c.points, 12))) == c.m
    assert c.n_inphase * c.n_quadrature == c.m
    assert c.n_inphase >= c.n_quadrature


@pytest.mark.parametrize("q", QS)
def test_gray_adjacency(q):
    c = build_constellation(q)
    d_min = 2 * c.scale
    for a in range(c.m):
        for b in range(a + 1, c.m):
            if abs(abs(c.points[a] - c.points[b]) - d_min) < 1e-9:
                assert popcount(a ^ b) == 1


def test_gray_code():
    assert list(gray_code(8)) == [0, 1, 3, 2, 6, 7, 5, 4]


def test_bpsk_points():
    c = build_constellation(1)
    assert list(c.points) == [-1 + 0j, 1 + 0j]
    assert c.points.imag.tolist() == [0.0, 0.0]


def test_qpsk_points():
    c = build_constellation(2)
    s = 1 / math.sqrt(2)
    assert np.allclose(c.points, [-s - 1j * s, -s + 1j * s, s - 1j * s, s + 1j * s], atol=1e-15)


def test_invalid_order():
    for q in (0, 11):
        with pytest.raises(ValueError):
            build_constellation(q)


@pytest.mark.parametrize("q", QS)
def test_round_trip_noiseless(q):
    c = build_constellation(q)
    rng = np.random.default_rng(q)
    bits = rng.integers(0, 2, size=(3, 50 * q)).astype(np.uint8)
    assert np.array_equal(demodulate(c, modulate(c, bits), 1.0), bits)
    h = 0.3 - 1.7j
    assert np.array_equal(demodulate(c, h * modulate(c, bits), h), bits)


@given(st.integers(1, 10), st.lists(st.integers(0, 2**10 - 1), min_size=1, max_size=20))
def test_labels_bits_round_trip(q, labels):
    labels = np.array(labels) % (2**q)
    assert np.array_equal(bits_to_labels(labels_to_bits(labels, q), q), labels)


def test_bits_length_check():
    with pytest.raises(ValueError):
        bits_to_labels(np.zeros(5, dtype=np.uint8), 2)


@pytest.mark.parametrize("q", [1, 2, 3, 4, 5, 6])
def test_slicer_matches_brute_force(q):
    c = build_constellation(q)
    rng = np.random.default_rng(100 + q)
    z = 1.5 * (rng.standard_normal(20000) + 1j * rng.standard_normal(20000))
    assert np.array_equal(slice_labels(c, z), brute_force_labels(c, z))


@pytest.mark.parametrize("q", [1, 2, 3, 4, 5, 6])
def test_tie_break_lowest_label(q):
    c = build_constellation(q)
    # integer lattice: levels at odd integers, decision midpoints at even ones
    re = np.arange(-c.n_inphase - 1, c.n_inphase + 2)
    im = np.arange(-c.n_quadrature - 1, c.n_quadrature + 2)
    zi = (re[:, None] + 1j * im[None, :]).ravel()
    pts = np.round(c.points / c.scale)
    d = (zi.real[:, None] - pts.real) ** 2 + (zi.imag[:, None] - pts.imag) ** 2  # exact in floats
    expected = np.argmin(d, axis=-1)
    assert np.array_equal(slice_labels(c, c.scale * zi), expected)


def test_tie_at_origin_bpsk():
    c = build_constellation(1)
    assert slice_labels(c, np.array([0.0 + 0j]))[0] == 0


def test_zero_estimate_raises():
    c = build_constellation(2)
    with pytest.raises(ZeroDivisionError):
        demodulate(c, np.ones(1, dtype=complex), 0.0)


@pytest.mark.parametrize("q", [1, 2, 3, 4])
def test_awgn_monte_carlo(q):
    c = build_constellation(q)
    gamma = 4.0
    rng = np.random.default_rng(7)
    n_sym = 400_000
    bits = rng.integers(0, 2, size=n_sym * q).astype(np.uint8)
    x = modulate(c, bits)
    noise = math.sqrt(1 / (2 * gamma)) * (rng.standard_normal(n_sym) + 1j * rng.standard_normal(n_sym))
    rx = demodulate(c, x + noise, 1.0)
    ber = np.count_nonzero(rx != bits) / bits.size
    expected = awgn_ber(ModParams.from_order(2**q), gamma)
    se = math.sqrt(expected * (1 - expected) / bits.size)
    # symbol errors make bits within a symbol dependent; allow a wider band
    assert abs(ber - expected) <= 5 * se
