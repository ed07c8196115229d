"""Forward model: beam-waist intensity images of OAM states, detector noise,
and 16-bit PGM files with a JSON metadata sidecar."""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import FormatError, GeometryError
from .modes import BeamGeometry, lg_amplitude


@dataclass(frozen=True, eq=False)
class IntensityImage:
    geometry: BeamGeometry
    pixels: np.ndarray
    gouy_rotate_90: bool = False

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=float)
        n = self.geometry.n_pixels
        if px.shape != (n, n):
            raise GeometryError(f"pixel array {px.shape} does not match geometry N={n}")
        if not np.all(np.isfinite(px)) or np.any(px < 0):
            raise ValueError("pixels must be finite and nonnegative")
        object.__setattr__(self, "pixels", px)

    @property
    def total_counts(self):
        return float(self.pixels.sum())


@dataclass(frozen=True)
class NoiseModel:
    """photon_budget=math.inf disables shot noise; bit_depth=0 disables
    quantization. dark_level is mean background counts per pixel."""

    photon_budget: float = math.inf
    dark_level: float = 0.0
    bit_depth: int = 0
    waist_error: float = 0.0

    def __post_init__(self):
        if not self.photon_budget > 0:
            raise ValueError(f"photon_budget must be > 0, got {self.photon_budget}")
        if not 0 <= self.bit_depth <= 16:
            raise ValueError(f"bit_depth must lie in 0..16, got {self.bit_depth}")
        if self.dark_level < 0:
            raise ValueError("dark_level must be >= 0")

    @property
    def noiseless(self):
        return math.isinf(self.photon_budget) and self.dark_level == 0 and self.bit_depth == 0


def mode_fields(d, x, y, sigma):
    """Stack of Psi_l(x, y) for l < d; shape (d, *x.shape)."""
    r = np.hypot(x, y)
    phi = np.arctan2(y, x)
    return np.array([lg_amplitude(l, r, phi, sigma) for l in range(d)])


def intensity_at(rho, x, y, sigma):
    """<r,phi|rho|r,phi> at arbitrary points (unit scale factor)."""
    m = rho.entries if hasattr(rho, "entries") else np.asarray(rho)
    psi = mode_fields(m.shape[0], np.asarray(x, float), np.asarray(y, float), sigma)
    flat = psi.reshape(psi.shape[0], -1)
    val = np.einsum("ap,ab,bp->p", flat, m, flat.conj()).real
    return val.reshape(np.shape(x))


def reference_scale(geometry):
    """Scale factor A making the brightest pixel of the |0><0| image equal 1."""
    a = geometry.axis()
    r2 = 2 * np.min(np.abs(a)) ** 2
    peak = 2 / (math.pi * geometry.sigma**2) * math.exp(-2 * r2 / geometry.sigma**2)
    return 1.0 / peak


def intensity_image(rho, geometry, max_dim=None):
    """Sample A <r,phi|rho|r,phi> at the pixel centres of ``geometry``."""
    if max_dim is not None and rho.dim > max_dim:
        raise GeometryError(f"state dimension {rho.dim} exceeds supported {max_dim}")
    x, y = geometry.coordinates()
    val = intensity_at(rho, x, y, geometry.sigma) * reference_scale(geometry)
    val[(val < 0) & (val > -1e-12 * max(val.max(), 1e-300))] = 0.0
    return IntensityImage(geometry, np.clip(val, 0.0, None))


def apply_noise(image, model, seed=0):
    """Shot noise, dark counts and quantization; deterministic for a fixed seed.

    With a finite photon budget the result is in photon counts (or ADC units
    when bit_depth > 0).
    """
    if model.noiseless:
        return image
    rng = np.random.default_rng(seed)
    px = image.pixels
    if math.isinf(model.photon_budget):
        counts = px + model.dark_level
    else:
        total = px.sum()
        lam = model.photon_budget * px / total if total > 0 else np.zeros_like(px)
        counts = rng.poisson(lam).astype(float)
        if model.dark_level > 0:
            counts += rng.poisson(model.dark_level, size=px.shape)
    if model.bit_depth:
        top = 2**model.bit_depth - 1
        peak = counts.max()
        if peak > 0:
            counts = np.round(counts * (top / peak))
    return IntensityImage(image.geometry, counts, image.gouy_rotate_90)


# -- files --------------------------------------------------------------------

def _meta_path(path):
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def quantize16(pixels):
    """Map pixels to uint16; integer-valued data in range is stored verbatim."""
    px = np.asarray(pixels, dtype=float)
    peak = px.max()
    if peak <= 65535 and np.all(px == np.round(px)):
        return px.astype(np.uint16)
    if peak == 0:
        return np.zeros(px.shape, dtype=np.uint16)
    return np.round(px * (65535.0 / peak)).astype(np.uint16)


def write_image(image, path):
    """Write a 16-bit big-endian binary PGM plus ``<name>.meta.json``.

    Non-integer data are scaled so the peak maps to 65535; reading rescales
    by the stored total_counts.
    """
    path = Path(path)
    q = quantize16(image.pixels)
    n = image.geometry.n_pixels
    header = f"P5\n{n} {n}\n65535\n".encode("ascii")
    path.write_bytes(header + q.astype(">u2").tobytes())
    meta = {
        "sigma_mm": image.geometry.sigma,
        "pitch_mm": image.geometry.pitch,
        "n_pixels": n,
        "total_counts": image.total_counts,
        "gouy_rotate_90": bool(image.gouy_rotate_90),
    }
    _meta_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def _read_pgm(path):
    data = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise FormatError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise FormatError(f"{path}: bad PGM header") from exc
    if maxval != 65535:
        raise FormatError(f"{path}: expected maxval 65535, got {maxval}")
    payload = data[pos:]
    if len(payload) != width * height * 2:
        raise FormatError(f"{path}: payload is {len(payload)} bytes, expected {width * height * 2}")
    return np.frombuffer(payload, dtype=">u2").reshape(height, width)


def read_image(path):
    path = Path(path)
    raw = _read_pgm(path)
    try:
        meta = json.loads(_meta_path(path).read_text())
    except FileNotFoundError as exc:
        raise FormatError(f"{path}: missing metadata sidecar {_meta_path(path).name}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: bad metadata sidecar: {exc}") from exc
    try:
        n = int(meta["n_pixels"])
        geometry = BeamGeometry(float(meta["sigma_mm"]), n, float(meta["pitch_mm"]))
        total = float(meta["total_counts"])
        gouy = bool(meta.get("gouy_rotate_90", False))
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: incomplete metadata: {exc}") from exc
    if raw.shape != (n, n):
        raise FormatError(f"{path}: payload {raw.shape} does not match n_pixels={n}")
    px = raw.astype(float)
    s = px.sum()
    if s > 0 and s != total:
        px *= total / s
    return IntensityImage(geometry, px, gouy)


def export_csv(image, path):
    """Row-major pixel values, one image row per line."""
    np.savetxt(path, image.pixels, delimiter=",", fmt="%.10g")
