import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from ahst.errors import FormatError, GeometryError
from ahst.modes import (
    BeamGeometry,
    KernelTable,
    build_kernel_table,
    default_r_cut,
    kernel_p,
    lg_amplitude,
    norm_constant,
    orthogonality_matrix,
)
from oracles import lg_product_ft, riemann_norm

SIGMA = 0.114


def test_lg_amplitude_on_axis():
    v = lg_amplitude(0, 0.0, 1.3, SIGMA)
    assert v.real == pytest.approx(math.sqrt(2 / math.pi) / SIGMA)
    assert v.imag == 0.0
    for l in (1, 5, 12):
        assert lg_amplitude(l, 0.0, 0.4, SIGMA) == 0


@pytest.mark.parametrize("l", [0, 3, 12])
def test_lg_amplitude_unit_norm(l):
    assert riemann_norm(l, SIGMA) == pytest.approx(1.0, abs=1e-6)


def test_lg_amplitude_modes_orthogonal():
    a = (np.arange(400) - 199.5) * (16 * SIGMA / 400)
    x, y = np.meshgrid(a, a)
    r, phi = np.hypot(x, y), np.arctan2(y, x)
    overlap = np.sum(lg_amplitude(3, r, phi, SIGMA) * lg_amplitude(5, r, phi, SIGMA).conj()) * (a[1] - a[0]) ** 2
    assert abs(overlap) < 1e-10


def test_kernel_zero_frequency():
    assert kernel_p(7, 7, 0.0, 0.0, SIGMA) == pytest.approx(1.0)
    assert kernel_p(0, 12, 0.0, 0.0, SIGMA) == 0


def test_kernel_fundamental_is_gaussian():
    f = np.linspace(0, 30, 11)
    assert np.allclose(kernel_p(0, 0, f, 0.3, SIGMA), np.exp(-((math.pi * SIGMA * f) ** 2) / 2), rtol=1e-14)


@pytest.mark.parametrize(
    "l1, l2, f, phi",
    [(2, 5, 7.5, 0.4), (2, 5, 21.0, -2.2), (0, 0, 12.0, 0.0), (12, 3, 16.0, 1.1), (6, 6, 30.0, 2.9)],
)
def test_kernel_matches_numerical_transform(l1, l2, f, phi):
    ref = lg_product_ft(l1, l2, f, phi, SIGMA)
    got = complex(kernel_p(l1, l2, f, phi, SIGMA))
    assert abs(got - ref) <= 1e-3 * abs(ref)


def test_kernel_matches_cartesian_grid_transform():
    # double-precision brute force on a Cartesian grid; checks the phase conventions
    a = (np.arange(512) - 255.5) * (16 * SIGMA / 512)
    x, y = np.meshgrid(a, a)
    r, phi = np.hypot(x, y), np.arctan2(y, x)
    prod = lg_amplitude(2, r, phi, SIGMA) * lg_amplitude(5, r, phi, SIGMA).conj()
    dx2 = (a[1] - a[0]) ** 2
    for f, fphi in [(3.0, 0.7), (8.0, -1.9), (12.0, 2.5)]:
        fx, fy = f * math.cos(fphi), f * math.sin(fphi)
        ref = np.sum(prod * np.exp(-2j * np.pi * (fx * x + fy * y))) * dx2
        got = complex(kernel_p(2, 5, f, fphi, SIGMA))
        assert abs(got - ref) <= 1e-6 * abs(ref)


def _weighted_norm_quadrature(l1, l2, sigma):
    def integrand(f):
        p = kernel_p(l1, l2, f, 0.0, sigma)
        return abs(p) ** 2 * math.exp((math.pi * sigma * f) ** 2 / 2) * f

    val, _ = quad(integrand, 0, 2 * (math.sqrt(2 * max(l1, l2) + 1) + 6) / (math.pi * sigma), limit=400)
    return 2 * math.pi * val


@pytest.mark.parametrize("l1, l2", [(0, 0), (12, 0), (3, 7), (12, 12), (5, 5)])
def test_norm_constant_against_quadrature(l1, l2):
    v = norm_constant(l1, l2, SIGMA)
    assert v > 0 and math.isfinite(v)
    assert abs(v * _weighted_norm_quadrature(l1, l2, SIGMA) - 1) <= 1e-4


def test_norm_constant_symmetric():
    for a in range(13):
        for b in range(13):
            assert norm_constant(a, b, SIGMA) == norm_constant(b, a, SIGMA)


@settings(max_examples=100, deadline=None)
@given(
    l1=st.integers(0, 12),
    l2=st.integers(0, 12),
    f=st.floats(0, 40),
    phi=st.floats(-math.pi, math.pi),
)
def test_kernel_conjugation_structure(l1, l2, f, phi):
    a = complex(kernel_p(l2, l1, f, phi, SIGMA))
    b = (-1) ** abs(l1 - l2) * complex(kernel_p(l1, l2, f, phi, SIGMA)).conjugate()
    assert abs(a - b) <= 1e-12 * max(1.0, abs(a))


@settings(max_examples=50, deadline=None)
@given(l1=st.integers(0, 12), l2=st.integers(0, 12), f=st.floats(0.1, 30), phi=st.floats(-3, 3), t=st.floats(-3, 3))
def test_kernel_rotation_phase(l1, l2, f, phi, t):
    # rotating the frequency azimuth multiplies by exp(-i (l1-l2) t)
    a = complex(kernel_p(l1, l2, f, phi + t, SIGMA))
    b = complex(kernel_p(l1, l2, f, phi, SIGMA)) * np.exp(-1j * (l1 - l2) * t)
    assert abs(a - b) <= 1e-12 * max(1.0, abs(b))


def test_geometry_validation():
    with pytest.raises(GeometryError):
        BeamGeometry(0.0, 256, 0.01)
    with pytest.raises(GeometryError):
        BeamGeometry(0.114, 63, 0.01)
    with pytest.raises(GeometryError):
        BeamGeometry(0.114, 32, 0.05)
    with pytest.raises(GeometryError):
        BeamGeometry(0.114, 64, 0.001)  # half-width below 5 sigma


def test_geometry_grids(geometry):
    a = geometry.axis()
    assert a[0] == pytest.approx(-a[-1])
    p = geometry.frequency_indices()
    assert p[0] == -127 and p[-1] == 128 and p[127] == 0
    f_r, _ = geometry.polar_frequencies()
    assert f_r[127, 127] == 0
    assert geometry.fourier_pitch == pytest.approx(1 / geometry.window)


def test_default_r_cut_inside_window(geometry):
    rc = default_r_cut(12, SIGMA)
    assert rc == pytest.approx(2 * (math.sqrt(25) + 1) / (math.pi * SIGMA))
    assert rc < (geometry.n_pixels // 2 - 1) * geometry.fourier_pitch


def test_table_invariants(table, geometry):
    assert table.samples.shape == (13, 13, 256, 256)
    assert np.all(np.isfinite(table.samples))
    assert np.all(table.constants > 0)
    c = geometry.n_pixels // 2 - 1
    assert np.allclose(table.samples[:, :, c, c], np.eye(13), atol=0, rtol=0)
    assert np.all(table.samples[:, :, ~table.mask()] == 0)


def test_table_matches_kernel_pointwise(table, geometry):
    rng = np.random.default_rng(7)
    f_r, f_phi = geometry.polar_frequencies()
    inside = np.argwhere(table.mask())
    for _ in range(200):
        l1, l2 = rng.integers(0, 13, size=2)
        i, j = inside[rng.integers(len(inside))]
        ref = kernel_p(int(l1), int(l2), f_r[i, j], f_phi[i, j], SIGMA)
        assert table.samples[l1, l2, i, j] == pytest.approx(complex(ref), rel=1e-12, abs=1e-300)


def test_table_l_max_zero(geometry):
    t = build_kernel_table(geometry, 0)
    f_r, _ = geometry.polar_frequencies()
    expected = np.where(f_r <= t.r_cut, np.exp(-((math.pi * SIGMA * f_r) ** 2) / 2), 0)
    assert t.samples.shape == (1, 1, 256, 256)
    assert np.allclose(t.samples[0, 0], expected, rtol=1e-14, atol=0)


def test_table_rejects_cutoff_outside_window():
    coarse = BeamGeometry(SIGMA, 64, 12 * SIGMA / 64)
    with pytest.raises(GeometryError):
        build_kernel_table(coarse, 12)


def test_discrete_orthogonality_small():
    g = BeamGeometry.default(n_pixels=128)
    t = build_kernel_table(g, 4)
    dev = np.abs(orthogonality_matrix(t) - np.eye(25))
    assert dev.max() <= 1e-3


def test_table_cache_round_trip(tmp_path):
    g = BeamGeometry.default(n_pixels=64)
    t = build_kernel_table(g, 3)
    path = tmp_path / "k.bin"
    t.save(path)
    back = KernelTable.load(path)
    assert back.l_max == 3 and back.compatible_with(g)
    assert back.r_cut == t.r_cut
    assert np.allclose(back.samples, t.samples, rtol=0, atol=1e-7)


def test_table_cache_rejects_bad_files(tmp_path):
    g = BeamGeometry.default(n_pixels=64)
    t = build_kernel_table(g, 2)
    path = tmp_path / "k.bin"
    t.save(path)
    data = path.read_bytes()
    (tmp_path / "short.bin").write_bytes(data[:-10])
    (tmp_path / "magic.bin").write_bytes(b"XXXXXXXX" + data[8:])
    (tmp_path / "tiny.bin").write_bytes(data[:10])
    for name in ("short.bin", "magic.bin", "tiny.bin"):
        with pytest.raises(FormatError):
            KernelTable.load(tmp_path / name)
