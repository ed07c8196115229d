"""Inverse pipeline: intensity image -> Fourier image -> density matrix.

Two estimators share the kernel table:

``projection``
    weighted kernel projection (exact orthogonality of the kernels under the
    weight exp(pi^2 f^2 sigma^2 / 2)), trace normalization, then the nearest
    physical matrix in Frobenius norm. Exact on noiseless data but the weight
    amplifies detector noise by many orders of magnitude.
``fit``
    physical matrix T^dag T minimizing the unweighted Fourier-plane residual
    |I~(f) - sum rho_{l1,l2} P_{l1,l2}(f)|^2 inside r_cut. Same model, same
    kernels, noise-robust.

Both searches run over the Cholesky parametrization with an analytic gradient.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import OptimizeWarning, curve_fit, minimize

from .errors import DegenerateDataError, FitError, GeometryError
from .states import DensityMatrix

METHODS = ("fit", "projection")


@dataclass(frozen=True, eq=False)
class FourierImage:
    """Centred Fourier samples; values[q_idx, p_idx] with p, q = -N/2+1 .. N/2."""

    geometry: object
    values: np.ndarray

    def zero_frequency(self):
        c = self.geometry.n_pixels // 2 - 1
        return self.values[c, c]


def _dft_array(pixels, geometry):
    n = geometry.n_pixels
    p = geometry.frequency_indices()
    F = np.fft.fft2(pixels)
    idx = np.mod(p, n)
    F = F[np.ix_(idx, idx)]
    # pixel centres sit at (j - (N-1)/2) * pitch
    shift = np.exp(2j * np.pi * p * ((n - 1) / 2) / n)
    return F * shift[:, None] * shift[None, :] * geometry.pitch**2


def dft2(image, dark_level=0.0):
    """Approximate continuous transform of the image on the centred frequency grid.

    Honors ``image.gouy_rotate_90`` by rotating the pixel grid a quarter turn
    clockwise first, undoing the exp(-i l pi/2) phase of a Fourier-lens setup.
    ``dark_level`` is subtracted from every pixel beforehand.
    """
    pixels = image.pixels - dark_level if dark_level else image.pixels
    if image.gouy_rotate_90:
        pixels = np.rot90(pixels, k=-1)
    return FourierImage(image.geometry, _dft_array(pixels, image.geometry))


def _check_geometry(fimage, table, d):
    g, t = fimage.geometry, table.geometry
    if g.n_pixels != t.n_pixels or not math.isclose(g.pitch, t.pitch, rel_tol=1e-9):
        raise GeometryError(
            f"image grid (N={g.n_pixels}, pitch={g.pitch:.6g}) does not match kernel table "
            f"(N={t.n_pixels}, pitch={t.pitch:.6g})"
        )
    if d is None:
        d = table.dim
    if not 1 <= d <= table.dim:
        raise GeometryError(f"dimension {d} not supported by a table with l_max={table.l_max}")
    return d


def _rows(d, l_max):
    l = np.arange(d)
    return (l[:, None] * (l_max + 1) + l[None, :]).reshape(-1)


def _project(fimage, table, d):
    mask, K, w = table.packed()
    Kd = K[_rows(d, table.l_max)]
    C = table.constants[:d, :d].reshape(-1)
    vals = fimage.values[mask] * w
    rho = C * (Kd.conj() @ vals) * table.geometry.fourier_pitch**2
    return rho.reshape(d, d)


def extract_density(fimage, table, d=None):
    """Raw density matrix by weighted projection onto the conjugated kernels,
    normalized to unit trace (absorbing the intensity scale)."""
    d = _check_geometry(fimage, table, d)
    rho = _project(fimage, table, d)
    tr = np.trace(rho)
    if not np.isfinite(tr) or tr.real <= 0:
        raise DegenerateDataError(f"projected trace is {tr:.3g}; image carries no signal")
    return DensityMatrix(rho / tr, physical=False)


# -- Cholesky parametrization ------------------------------------------------

def _offdiag_order(d):
    """(row, col) of the complex off-diagonal entries of T in parameter order:
    row by row, each row from the diagonal-adjacent column outwards."""
    return [(i, j) for i in range(1, d) for j in range(i - 1, -1, -1)]


def params_to_t(t, d):
    """Lower-triangular T from d^2 reals: diagonal first, then (re, im) pairs."""
    t = np.asarray(t, dtype=float)
    if t.size != d * d:
        raise ValueError(f"expected {d * d} parameters, got {t.size}")
    T = np.zeros((d, d), dtype=np.complex128)
    T[np.diag_indices(d)] = t[:d]
    if d > 1:
        rows, cols = np.array(_offdiag_order(d)).T
        T[rows, cols] = t[d::2] + 1j * t[d + 1 :: 2]
    return T


def t_to_params(T):
    d = T.shape[0]
    t = np.empty(d * d)
    t[:d] = T.diagonal().real
    if d > 1:
        rows, cols = np.array(_offdiag_order(d)).T
        t[d::2] = T[rows, cols].real
        t[d + 1 :: 2] = T[rows, cols].imag
    return t


def rho_from_params(t, d):
    """T^dag T / tr(T^dag T)."""
    T = params_to_t(t, d)
    X = T.conj().T @ T
    return X / np.trace(X).real


def lower_factor(rho, ridge=1e-12):
    """Lower-triangular T with T^dag T = rho (+ ridge), via a flipped Cholesky."""
    d = rho.shape[0]
    m = (rho + rho.conj().T) / 2 + ridge * np.eye(d)
    L = np.linalg.cholesky(m[::-1, ::-1])
    return L.conj().T[::-1, ::-1]


def _grad_params(T, gamma):
    """Parameter gradient from gamma = dS/drho* (Hermitian), for rho = T^dag T."""
    H = 2 * T @ gamma
    return t_to_params(np.tril(H))


def clipped_eigen_projection(raw):
    """Hermitize, clip negative eigenvalues, renormalize the trace."""
    m = np.asarray(raw, dtype=np.complex128)
    h = (m + m.conj().T) / 2
    e, v = np.linalg.eigh(h)
    e = np.clip(e, 0, None)
    if e.sum() <= 0:
        e = np.ones_like(e)
    e = e / e.sum()
    return (v * e) @ v.conj().T


def frobenius_cost(rho, raw):
    return float(np.sum(np.abs(np.asarray(rho) - np.asarray(raw)) ** 2))


def _lbfgs(fun, t0, gtol, max_iter):
    return minimize(
        fun, t0, jac=True, method="L-BFGS-B",
        options={"maxiter": max_iter, "gtol": gtol, "ftol": 1e-16, "maxcor": 30},
    )


def _run_lbfgs(fun, starts, gtol, max_iter, screen_iter=300):
    """Short runs from every start, then the best one continued to convergence."""
    best = None
    for t0 in starts:
        res = _lbfgs(fun, t0, gtol, min(screen_iter, max_iter))
        if best is None or res.fun < best.fun:
            best = res
    if best.nit >= screen_iter and max_iter > screen_iter:
        more = _lbfgs(fun, best.x, gtol, max_iter - best.nit)
        if more.fun <= best.fun:
            best = more
    return best


def _finish(X):
    X = (X + X.conj().T) / 2
    return X / np.trace(X).real


def physicalize(raw, gtol=1e-9, max_iter=5000):
    """Nearest physical density matrix to ``raw`` in the least-squares sense.

    The hermitized input is first divided by its trace (when positive), so an
    unknown overall scale is absorbed. Then S = sum |rho(T) - raw|^2 is
    minimized over the Cholesky parameters, started from the clipped-eigenvalue
    estimate and from the scaled identity.
    """
    m = raw.entries if isinstance(raw, DensityMatrix) else np.asarray(raw, dtype=np.complex128)
    if not np.all(np.isfinite(m)):
        raise ValueError("raw density matrix has non-finite entries")
    d = m.shape[0]
    target = (m + m.conj().T) / 2
    tr = np.trace(target).real
    if tr > 0:
        target = target / tr
    m = target

    def cost(t):
        T = params_to_t(t, d)
        X = T.conj().T @ T
        tau = np.trace(X).real
        rho = X / tau
        diff = rho - target
        gamma = 2 * diff
        gamma_x = (gamma - np.trace(gamma @ rho).real * np.eye(d)) / tau
        return float(np.sum(np.abs(diff) ** 2)), _grad_params(T, gamma_x)

    starts = [t_to_params(lower_factor(clipped_eigen_projection(m))), t_to_params(np.eye(d) / math.sqrt(d))]
    best = _run_lbfgs(cost, starts, gtol, max_iter)
    T = params_to_t(best.x, d)
    return DensityMatrix(_finish(T.conj().T @ T), physical=True)


def fit_physical(fimage, table, d=None, gtol=1e-9, max_iter=5000):
    """Physical density matrix fitted directly to the Fourier image.

    Minimizes sum_f |I~(f)/I~(0) - sum X_{l1,l2} P_{l1,l2}(f)|^2 over f <= r_cut
    with X = T^dag T unnormalized (it absorbs the intensity scale), then
    returns X / tr X together with the final cost.
    """
    d = _check_geometry(fimage, table, d)
    mask, K, _ = table.packed()
    Kd = K[_rows(d, table.l_max)]
    f0 = fimage.zero_frequency()
    if not np.isfinite(f0) or f0.real <= 0:
        raise DegenerateDataError("zero-frequency intensity is not positive; image carries no signal")
    F = fimage.values[mask] / f0.real
    G = Kd.conj() @ Kd.T
    G = (G + G.conj().T) / 2
    b = Kd.conj() @ F
    c0 = float(np.vdot(F, F).real)

    def cost(t):
        T = params_to_t(t, d)
        x = (T.conj().T @ T).reshape(-1)
        Gx = G @ x
        S = float(np.vdot(x, Gx).real - 2 * np.vdot(x, b).real + c0)
        gamma = (2 * (Gx - b)).reshape(d, d)
        gamma = (gamma + gamma.conj().T) / 2
        return S, _grad_params(T, gamma)

    ridge = 1e-8 * np.trace(G).real / len(G)
    ls = np.linalg.solve(G + ridge * np.eye(len(G)), b).reshape(d, d)
    scale = max(np.trace(ls).real, 1e-3)
    starts = [
        t_to_params(lower_factor(clipped_eigen_projection(ls) * scale)),
        t_to_params(np.eye(d) / math.sqrt(d)),
    ]
    # the weighted projection is exact on clean data, where the unweighted
    # normal equations (condition ~1e11) converge too slowly on their own
    proj = _project(fimage, table, d)
    tr = np.trace(proj).real
    if np.isfinite(tr) and tr > 0 and np.all(np.isfinite(proj)):
        starts.append(t_to_params(lower_factor(physicalize(proj / tr).entries)))
    best = _run_lbfgs(cost, starts, gtol, max_iter)
    T = params_to_t(best.x, d)
    return DensityMatrix(_finish(T.conj().T @ T), physical=True), max(best.fun, 0.0)


# -- scoring ------------------------------------------------------------------

def _psd_factor(m):
    """V with V V^dag = m, dropping eigenvalues below numerical rank."""
    e, v = np.linalg.eigh((m + m.conj().T) / 2)
    keep = e > len(e) * np.finfo(float).eps * max(e.max(), 0.0)
    return v[:, keep] * np.sqrt(e[keep])


def fidelity(rho_t, rho_e, tol=1e-8):
    """Uhlmann fidelity (Tr sqrt(sqrt(rho_t) rho_e sqrt(rho_t)))^2.

    Evaluated as the squared trace norm of V_t^dag V_e for factors
    rho = V V^dag, which equals the singular-value sum of sqrt(rho_t) sqrt(rho_e)
    and is symmetric in its arguments to rounding.
    """
    if rho_t.dim != rho_e.dim:
        raise ValueError(f"dimension mismatch: {rho_t.dim} vs {rho_e.dim}")
    for name, r in (("rho_t", rho_t), ("rho_e", rho_e)):
        if not r.check_physical(tol):
            raise ValueError(f"{name} is not a physical density matrix")
    m = _psd_factor(rho_t.entries).conj().T @ _psd_factor(rho_e.entries)
    if m.size == 0:
        return 0.0
    f = float(np.sum(np.linalg.svd(m, compute_uv=False)) ** 2)
    return min(max(f, 0.0), 1.0)


# -- pipeline -----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Reconstruction:
    raw: DensityMatrix
    physical: DensityMatrix
    method: str
    trace_pre_normalization: complex
    min_eigenvalue_raw: float
    S_final: float
    r_cut_used: float

    def report(self, target=None):
        out = {}
        if target is not None:
            out["fidelity_vs_target"] = fidelity(target, self.physical)
        out.update(
            method=self.method,
            trace_pre_normalization=[self.trace_pre_normalization.real, self.trace_pre_normalization.imag],
            min_eigenvalue_raw=self.min_eigenvalue_raw,
            S_final=self.S_final,
            r_cut_used=self.r_cut_used,
        )
        return out


def reconstruct(image, table, d=None, method="fit", dark_level=0.0):
    """Image -> raw and physical density matrices.

    ``dark_level`` is subtracted from every pixel before the transform.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    fimage = dft2(image, dark_level)
    d = _check_geometry(fimage, table, d)
    if not fimage.zero_frequency().real > 0:
        raise DegenerateDataError("image carries no signal (zero total intensity)")
    unnorm = _project(fimage, table, d)
    tr = complex(np.trace(unnorm))
    if method == "projection" and not tr.real > 0:
        raise DegenerateDataError(f"projected trace is {tr:.3g}; image carries no signal")
    raw = unnorm / tr if tr.real > 0 else unnorm
    herm = (raw + raw.conj().T) / 2
    min_eig = float(np.linalg.eigvalsh(herm)[0])
    if method == "projection":
        phys = physicalize(raw)
        S = frobenius_cost(phys.entries, raw)
    else:
        phys, S = fit_physical(fimage, table, d)
    return Reconstruction(
        DensityMatrix(raw), phys, method, tr, min_eig, float(S), table.r_cut
    )


# -- beam-waist calibration ------------------------------------------------------

@dataclass(frozen=True)
class WaistFit:
    sigma: float
    sigma_err: float
    x0: float
    y0: float
    amplitude: float
    background: float
    r_squared: float


def _gauss2d(xy, a0, x0, y0, sigma, b):
    x, y = xy
    return a0 * np.exp(-2 * ((x - x0) ** 2 + (y - y0) ** 2) / sigma**2) + b


def fit_waist(image, min_r_squared=0.95):
    """Fit A0 exp(-2 r^2/sigma^2) + b to the image; sigma in mm with its
    standard error. Raises FitError on divergence or a poor fit."""
    g = image.geometry
    x, y = g.coordinates()
    z = image.pixels
    w = z - z.min()
    total = w.sum()
    if total <= 0:
        raise FitError("image is flat; nothing to fit")
    xc = (w * x).sum() / total
    yc = (w * y).sum() / total
    r2 = (w * ((x - xc) ** 2 + (y - yc) ** 2)).sum() / total
    p0 = [z.max() - z.min(), xc, yc, math.sqrt(2 * r2), z.min()]
    xy = np.vstack([x.ravel(), y.ravel()])
    try:
        with warnings.catch_warnings():
            # an exact fit leaves no residual to scale the covariance; handled below
            warnings.simplefilter("ignore", OptimizeWarning)
            popt, pcov = curve_fit(_gauss2d, xy, z.ravel(), p0=p0, maxfev=5000)
    except (RuntimeError, ValueError) as exc:
        raise FitError(f"Gaussian fit did not converge: {exc}") from exc
    a0, x0, y0, sigma, b = popt
    sigma = abs(sigma)
    resid = z.ravel() - _gauss2d(xy, *popt)
    ss_tot = np.sum((z - z.mean()) ** 2)
    r_squared = 1 - np.sum(resid**2) / ss_tot
    if np.all(np.isfinite(pcov)):
        err = math.sqrt(pcov[3, 3])
    else:
        err = 0.0 if np.sum(resid**2) <= 1e-24 * ss_tot else math.inf
    if not (np.isfinite(sigma) and sigma > 0 and a0 > 0):
        raise FitError(f"Gaussian fit diverged (sigma={sigma}, amplitude={a0})")
    if r_squared < min_r_squared:
        raise FitError(f"image is not a fundamental Gaussian spot (R^2 = {r_squared:.3f})")
    return WaistFit(float(sigma), float(err), float(x0), float(y0), float(a0), float(b), float(r_squared))
