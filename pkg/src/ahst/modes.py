"""Laguerre-Gaussian modes (p = 0), their intensity-plane Fourier kernels and
the kernel tables used for reconstruction.

Fourier convention: F[g](f) = integral g(x) exp(-i 2 pi f.x) d^2x, with
frequencies in cycles/mm. Under this convention the transform of the
fundamental-mode intensity |Psi_0|^2 is exp(-pi^2 sigma^2 f^2 / 2), i.e.
exp(-2 R^2) with R = pi sigma f / 2. Image arrays are indexed [y, x].
"""

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError, GeometryError
from .specfun import factorial_ratio_sqrt, laguerre_assoc, log_factorial

DEFAULT_SIGMA = 0.114  # mm
DEFAULT_L_MAX = 12
DEFAULT_N_PIXELS = 256
DEFAULT_WINDOW = 12.0  # window side in units of sigma

TABLE_MAGIC = b"AHSTKT01"
_TABLE_HEADER = struct.Struct("<8sqqddd")


def n_threads():
    """Worker cap from AHST_THREADS (default 1)."""
    try:
        return max(1, int(os.environ.get("AHST_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class BeamGeometry:
    """Square pixel grid centred on the beam axis.

    sigma and pitch are in mm. Pixel centres sit at (i - (N-1)/2) * pitch, so
    the beam axis falls between the four central pixels.
    """

    sigma: float
    n_pixels: int
    pitch: float

    def __post_init__(self):
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise GeometryError(f"sigma must be positive and finite, got {self.sigma}")
        if not (self.pitch > 0 and math.isfinite(self.pitch)):
            raise GeometryError(f"pitch must be positive and finite, got {self.pitch}")
        if self.n_pixels < 64 or self.n_pixels % 2:
            raise GeometryError(f"n_pixels must be even and >= 64, got {self.n_pixels}")
        if self.n_pixels * self.pitch / 2 < 5 * self.sigma * (1 - 1e-12):
            raise GeometryError(
                f"window half-width {self.n_pixels * self.pitch / 2:.4g} mm is below 5 sigma"
            )

    @classmethod
    def default(cls, sigma=DEFAULT_SIGMA, n_pixels=DEFAULT_N_PIXELS, window=DEFAULT_WINDOW):
        """Grid of ``n_pixels`` spanning ``window`` beam waists."""
        return cls(float(sigma), int(n_pixels), window * sigma / n_pixels)

    @property
    def fourier_pitch(self):
        return 1.0 / (self.n_pixels * self.pitch)

    @property
    def window(self):
        """Full window side in mm."""
        return self.n_pixels * self.pitch

    def axis(self):
        return (np.arange(self.n_pixels) - (self.n_pixels - 1) / 2) * self.pitch

    def coordinates(self):
        """Pixel-centre coordinates (x, y), each of shape (N, N)."""
        a = self.axis()
        return np.meshgrid(a, a)

    def frequency_indices(self):
        """Centred frequency indices p = -N/2+1 .. N/2."""
        n = self.n_pixels
        return np.arange(-n // 2 + 1, n // 2 + 1)

    def frequencies(self):
        """Frequency-grid (fx, fy) in cycles/mm, each of shape (N, N)."""
        f = self.frequency_indices() * self.fourier_pitch
        return np.meshgrid(f, f)

    def polar_frequencies(self):
        fx, fy = self.frequencies()
        return np.hypot(fx, fy), np.arctan2(fy, fx)

    def with_sigma(self, sigma):
        return BeamGeometry(float(sigma), self.n_pixels, self.pitch)


def lg_amplitude(l, r, phi, sigma):
    """Complex amplitude of the p = 0 LG mode with OAM index ``l`` at the waist.

    Unit L2 norm over the plane; units of 1/mm.
    """
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    u = math.sqrt(2.0) * r / sigma
    # (sqrt2 r/sigma)^l / sqrt(l!) in log space keeps large l finite
    with np.errstate(divide="ignore"):
        radial = np.exp(l * np.log(u) - 0.5 * log_factorial(l)) if l else np.ones_like(u)
    amp = math.sqrt(2.0 / math.pi) / sigma * radial * np.exp(-(r / sigma) ** 2)
    return amp * np.exp(-1j * l * phi)


def kernel_p(l1, l2, f_r, f_phi, sigma):
    """Fourier transform of Psi_{l1} Psi*_{l2} at polar frequency (f_r, f_phi).

    P = (-i)^|dl| sqrt(l1! l2!)/max! exp(-2R^2) (sqrt2 R)^|dl|
        L_{min(l1,l2)}^{|dl|}(2R^2) exp(-i dl f_phi),  dl = l1 - l2,
    with R = pi sigma f_r / 2.
    """
    f_r = np.asarray(f_r, dtype=float)
    f_phi = np.asarray(f_phi, dtype=float)
    dl = l1 - l2
    n = abs(dl)
    R2 = (math.pi * sigma * f_r / 2) ** 2
    radial = factorial_ratio_sqrt(l1, l2) * np.exp(-2 * R2) * laguerre_assoc(min(l1, l2), n, 2 * R2)
    if n:
        radial = radial * (2 * R2) ** (n / 2)
    return (-1j) ** n * radial * np.exp(-1j * dl * f_phi)


def norm_constant(l1, l2, sigma):
    """C_{l1,l2} normalizing the weighted kernel inner product to one.

    With x = 2R^2 = pi^2 sigma^2 f_r^2 / 2 the defining integral becomes
    2 pi/(pi^2 sigma^2) * (min!/max!) * int x^|dl| e^-x (L_min^|dl|)^2 dx and the
    Laguerre norm Gamma(min + |dl| + 1)/min! = max!/min! cancels the prefactor,
    leaving 2/(pi sigma^2) for every pair.
    """
    if l1 < 0 or l2 < 0:
        raise ValueError("mode indices must be nonnegative")
    return math.pi * sigma**2 / 2


def orthogonality_weight(f_r, sigma):
    """exp(pi^2 f_r^2 sigma^2 / 2), the inverse of the fundamental kernel."""
    return np.exp((math.pi * sigma * np.asarray(f_r)) ** 2 / 2)


def default_r_cut(l_max, sigma):
    """Radial frequency cutoff in cycles/mm.

    In R units the cutoff is sqrt(2 l_max + 1) + 1: the outermost turning point
    of the Laguerre functions in the table (2R^2 = 4 l_max + 2) plus one unit.
    """
    R_cut = math.sqrt(2 * l_max + 1) + 1
    return 2 * R_cut / (math.pi * sigma)


@dataclass(eq=False)
class KernelTable:
    """Kernel samples P_{l1,l2} on the centred frequency grid of ``geometry``.

    ``samples`` has shape (l_max+1, l_max+1, N, N); entries beyond ``r_cut``
    are exactly zero.
    """

    l_max: int
    geometry: BeamGeometry
    samples: np.ndarray
    constants: np.ndarray
    r_cut: float
    _packed: tuple = field(default=None, init=False, repr=False)

    @property
    def dim(self):
        return self.l_max + 1

    def mask(self):
        f_r, _ = self.geometry.polar_frequencies()
        return f_r <= self.r_cut

    def packed(self):
        """(mask, K, weight): K is ((l_max+1)^2, n_in) with rows in (l1, l2)
        row-major order, restricted to frequencies inside r_cut."""
        if self._packed is None:
            mask = self.mask()
            d = self.dim
            K = self.samples[:, :, mask].reshape(d * d, -1)
            f_r, _ = self.geometry.polar_frequencies()
            w = orthogonality_weight(f_r[mask], self.geometry.sigma)
            self._packed = (mask, K, w)
        return self._packed

    def compatible_with(self, geometry):
        g = self.geometry
        return (
            g.n_pixels == geometry.n_pixels
            and math.isclose(g.pitch, geometry.pitch, rel_tol=1e-9)
            and math.isclose(g.sigma, geometry.sigma, rel_tol=1e-9)
        )

    def save(self, path):
        """Binary cache: header then row-major complex64 grids per (l1, l2)."""
        g = self.geometry
        with open(path, "wb") as fh:
            fh.write(_TABLE_HEADER.pack(TABLE_MAGIC, self.l_max, g.n_pixels, g.sigma, g.pitch, self.r_cut))
            fh.write(np.ascontiguousarray(self.samples, dtype="<c8").tobytes())

    @classmethod
    def load(cls, path):
        data = Path(path).read_bytes()
        if len(data) < _TABLE_HEADER.size:
            raise FormatError(f"{path}: truncated kernel-table header")
        magic, l_max, n, sigma, pitch, r_cut = _TABLE_HEADER.unpack_from(data)
        if magic != TABLE_MAGIC:
            raise FormatError(f"{path}: bad magic {magic!r}")
        if l_max < 0 or n <= 0:
            raise FormatError(f"{path}: bad header values l_max={l_max}, N={n}")
        d = l_max + 1
        payload = data[_TABLE_HEADER.size:]
        expected = d * d * n * n * 8
        if len(payload) != expected:
            raise FormatError(f"{path}: payload is {len(payload)} bytes, expected {expected}")
        geometry = BeamGeometry(sigma, n, pitch)
        samples = np.frombuffer(payload, dtype="<c8").reshape(d, d, n, n).astype(np.complex128)
        constants = np.array([[norm_constant(a, b, sigma) for b in range(d)] for a in range(d)])
        return cls(l_max, geometry, samples, constants, r_cut)


def build_kernel_table(geometry, l_max=DEFAULT_L_MAX, r_cut=None):
    """Precompute P_{l1,l2} on the frequency grid for all 0 <= l1, l2 <= l_max."""
    if l_max < 0:
        raise ValueError(f"l_max must be >= 0, got {l_max}")
    sigma = geometry.sigma
    if r_cut is None:
        r_cut = default_r_cut(l_max, sigma)
    f_edge = (geometry.n_pixels // 2 - 1) * geometry.fourier_pitch
    if r_cut > f_edge:
        raise GeometryError(
            f"Fourier window edge {f_edge:.4g} cycles/mm does not contain r_cut {r_cut:.4g}; "
            "use a finer pixel pitch"
        )
    f_r, f_phi = geometry.polar_frequencies()
    mask = f_r <= r_cut
    fr_in, fphi_in = f_r[mask], f_phi[mask]
    d = l_max + 1
    n = geometry.n_pixels
    samples = np.zeros((d, d, n, n), dtype=np.complex128)

    def fill(pair):
        l1, l2 = pair
        samples[l1, l2][mask] = kernel_p(l1, l2, fr_in, fphi_in, sigma)

    pairs = [(a, b) for a in range(d) for b in range(d)]
    workers = n_threads()
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            list(pool.map(fill, pairs))
    else:
        for pair in pairs:
            fill(pair)
    constants = np.array([[norm_constant(a, b, sigma) for b in range(d)] for a in range(d)])
    return KernelTable(l_max, geometry, samples, constants, float(r_cut))


def orthogonality_matrix(table):
    """Discrete weighted inner products of every kernel pair.

    Entry [(l1,l2), (l1',l2')] is the Riemann sum over f_r <= r_cut of
    P_{l1,l2} P*_{l1',l2'} exp(pi^2 f_r^2 sigma^2/2) C_{l1',l2'} df^2; the
    ideal is the identity.
    """
    _, K, w = table.packed()
    df2 = table.geometry.fourier_pitch**2
    C = table.constants.reshape(-1)
    return (K * w) @ K.conj().T * (df2 * C[None, :])
