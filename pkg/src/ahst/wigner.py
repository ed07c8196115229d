"""Fock-basis Wigner function of an OAM density matrix (|l> mapped to |n>),
with hbar = 1 and the continuum normalization A' = 1/pi (integral of W = 1)."""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .specfun import factorial_ratio_sqrt, laguerre_assoc
from .states import DensityMatrix

DEFAULT_EXTENT = 6.0
DEFAULT_POINTS = 201


@dataclass(frozen=True, eq=False)
class WignerGrid:
    """values[j, i] = W(q_i, p_j) on a square grid of half-width ``extent``."""

    extent: float
    n_points: int
    values: np.ndarray

    @property
    def axis(self):
        return np.linspace(-self.extent, self.extent, self.n_points)

    def integral(self):
        a = self.axis
        return float(np.trapezoid(np.trapezoid(self.values, a, axis=1), a))


def _pair_term(n1, n2, r2, phi):
    """(-1)^min sqrt(n1! n2!)/max! e^{-r^2} (sqrt2 r)^|dn| L_min^|dn|(2 r^2) e^{i dn phi}."""
    dn = n1 - n2
    n = abs(dn)
    m = min(n1, n2)
    radial = (-1) ** m * factorial_ratio_sqrt(n1, n2) * np.exp(-r2) * laguerre_assoc(m, n, 2 * r2)
    if n:
        radial = radial * (2 * r2) ** (n / 2)
    return radial * np.exp(1j * dn * phi)


def wigner_at(rho, q, p, imag_tol=1e-10):
    """W at arbitrary quadrature points; phi' = atan2(p, q)."""
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=np.complex128)
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    r2 = q**2 + p**2
    phi = np.arctan2(p, q)
    d = m.shape[0]
    total = np.zeros(np.broadcast(q, p).shape, dtype=np.complex128)
    for n1 in range(d):
        for n2 in range(d):
            if m[n1, n2] != 0:
                total += m[n1, n2] * _pair_term(n1, n2, r2, phi)
    total /= math.pi
    residue = np.max(np.abs(total.imag), initial=0.0)
    if residue > imag_tol:
        raise ValueError(f"Wigner sum has imaginary residue {residue:.3g}; input is not Hermitian")
    return total.real


def wigner(rho, extent=DEFAULT_EXTENT, n_points=DEFAULT_POINTS):
    if isinstance(rho, DensityMatrix) and not rho.check_physical():
        raise ValueError("Wigner function needs a physical density matrix")
    a = np.linspace(-extent, extent, n_points)
    q, p = np.meshgrid(a, a)
    return WignerGrid(float(extent), int(n_points), wigner_at(rho, q, p))


def fringe_contrast(rho, radii=None, n_angles=720):
    """Largest azimuthal peak-to-peak of W over circles, relative to max |W|.

    Coherences between different |n> produce angular fringes; a diagonal
    density matrix gives zero.
    """
    radii = np.linspace(0.1, DEFAULT_EXTENT, 60) if radii is None else np.asarray(radii)
    ang = np.linspace(0, 2 * np.pi, n_angles, endpoint=False)
    r, a = np.meshgrid(radii, ang, indexing="ij")
    w = wigner_at(rho, r * np.cos(a), r * np.sin(a))
    ref = max(np.max(np.abs(w)), abs(float(wigner_at(rho, 0.0, 0.0))))
    return float(np.max(w.max(axis=1) - w.min(axis=1)) / ref)


def axis_fwhm(values, coords):
    """Full width at half maximum of a single-peaked 1-D profile."""
    values = np.asarray(values, dtype=float)
    i = int(np.argmax(values))
    half = values[i] / 2
    lo = i
    while lo > 0 and values[lo] > half:
        lo -= 1
    hi = i
    while hi < len(values) - 1 and values[hi] > half:
        hi += 1
    if values[lo] > half or values[hi] > half:
        raise ValueError("profile does not fall to half maximum inside the grid")
    x_lo = np.interp(half, [values[lo], values[lo + 1]], [coords[lo], coords[lo + 1]])
    x_hi = np.interp(half, [values[hi], values[hi - 1]], [coords[hi], coords[hi - 1]])
    return float(x_hi - x_lo)


@dataclass(frozen=True)
class FourierWignerRelation:
    """How each intensity-spectrum term maps onto the matching Wigner term.

    P_{n1,n2}(R, phi_f) exp(R^2) = factors[n1, n2] * term_W(r', phi') with
    r' = radial_scale * R and phi' = azimuth_sign * phi_f.
    """

    factors: np.ndarray
    radial_scale: float
    azimuth_sign: int


def fourier_wigner_relation(d):
    n = np.arange(d)
    dn = np.abs(n[:, None] - n[None, :])
    mn = np.minimum(n[:, None], n[None, :])
    factors = (-1j) ** dn * (-1.0) ** mn
    return FourierWignerRelation(factors, 1.0, -1)


# -- exports --------------------------------------------------------------------

def export_csv(grid, path):
    """q, p, W triples, one per line."""
    a = grid.axis
    q, p = np.meshgrid(a, a)
    data = np.column_stack([q.ravel(), p.ravel(), grid.values.ravel()])
    np.savetxt(path, data, delimiter=",", header="q,p,W", comments="", fmt="%.10g")


def diverging_rgb(values):
    """Blue (negative) - white (zero) - red (positive), symmetric about zero."""
    v = np.asarray(values, dtype=float)
    scale = np.max(np.abs(v))
    t = v / scale if scale > 0 else np.zeros_like(v)
    rgb = np.ones(v.shape + (3,))
    pos = t > 0
    rgb[pos, 1] -= t[pos]
    rgb[pos, 2] -= t[pos]
    neg = ~pos
    rgb[neg, 0] += t[neg]
    rgb[neg, 1] += t[neg]
    return np.round(rgb * 255).astype(np.uint8)


def write_ppm(grid, path):
    """8-bit P6 rendering (highest p on the top row) plus a JSON sidecar."""
    path = Path(path)
    rgb = diverging_rgb(grid.values[::-1])
    n = grid.n_points
    path.write_bytes(f"P6\n{n} {n}\n255\n".encode("ascii") + rgb.tobytes())
    meta = {
        "extent": grid.extent,
        "n_points": n,
        "min": float(grid.values.min()),
        "max": float(grid.values.max()),
        "colormap": "blue-white-red, symmetric about 0",
    }
    path.with_name(path.stem + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n")
