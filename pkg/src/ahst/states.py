"""OAM states restricted to p = 0, l = 0..d-1: pure states, mixtures and the
named benchmark states."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .specfun import log_factorial


@dataclass(frozen=True, eq=False)
class PureState:
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.size == 0:
            raise ValueError("coefficients must be a nonempty vector")
        object.__setattr__(self, "coeffs", c)

    @property
    def dim(self):
        return self.coeffs.size

    def density(self):
        return DensityMatrix(np.outer(self.coeffs, self.coeffs.conj()), physical=True)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """d x d matrix in the |l> basis. ``physical`` marks a Hermitian, PSD,
    unit-trace matrix; raw estimates carry ``physical=False``."""

    entries: np.ndarray
    physical: bool = False

    def __post_init__(self):
        m = np.asarray(self.entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {m.shape}")
        object.__setattr__(self, "entries", m)

    @property
    def dim(self):
        return self.entries.shape[0]

    def check_physical(self, tol=1e-8):
        """True when Hermitian, unit trace and PSD within ``tol``."""
        m = self.entries
        if not np.all(np.isfinite(m)):
            return False
        if np.max(np.abs(m - m.conj().T), initial=0.0) > tol:
            return False
        if abs(np.trace(m) - 1) > tol:
            return False
        return np.linalg.eigvalsh((m + m.conj().T) / 2)[0] >= -tol

    def purity(self):
        return float(np.real(np.trace(self.entries @ self.entries)))

    def rotated(self, theta):
        """Apply the diagonal unitary exp(i theta l)."""
        ph = np.exp(1j * theta * np.arange(self.dim))
        return DensityMatrix(ph[:, None] * self.entries * ph.conj()[None, :], self.physical)


def _normalized(c):
    c = np.asarray(c, dtype=np.complex128)
    norm = np.linalg.norm(c)
    if norm == 0:
        raise ValueError("state has no nonzero coefficient")
    return PureState(c / norm)


def eigenstate(l, d):
    if not 0 <= l < d:
        raise ValueError(f"eigenstate index {l} outside 0..{d - 1}")
    c = np.zeros(d, dtype=np.complex128)
    c[l] = 1
    return PureState(c)


def superposition(coeffs, d=None):
    """Normalized state from (possibly unnormalized) coefficients, zero-padded to ``d``."""
    c = np.asarray(coeffs, dtype=np.complex128)
    if d is not None:
        if c.size > d:
            raise ValueError(f"{c.size} coefficients exceed dimension {d}")
        c = np.concatenate([c, np.zeros(d - c.size, dtype=np.complex128)])
    return _normalized(c)


def psi_g(d=13):
    """(|0> - i|12>)/sqrt2."""
    c = np.zeros(d, dtype=np.complex128)
    c[0], c[12] = 1, -1j
    return _normalized(c)


def truncated_cat(alpha=2.0, d=13):
    """Even cat: c_{2l} proportional to alpha^{2l}/sqrt((2l)!), renormalized over 2l < d."""
    c = np.zeros(d, dtype=np.complex128)
    for l in range(0, (d + 1) // 2):
        k = 2 * l
        c[k] = complex(alpha) ** k / math.exp(0.5 * log_factorial(k))
    return _normalized(c)


def truncated_squeezed(gamma=1.5, d=13):
    """c_{2l} proportional to (-tanh gamma)^l sqrt((2l)!)/(2^l l!), renormalized over 2l < d."""
    c = np.zeros(d, dtype=np.complex128)
    t = -math.tanh(gamma)
    for l in range(0, (d + 1) // 2):
        c[2 * l] = t**l * math.exp(0.5 * log_factorial(2 * l) - l * math.log(2) - log_factorial(l))
    return _normalized(c)


def coherent_state(alpha, d):
    """Truncated coherent state sum alpha^l/sqrt(l!) |l>, renormalized after truncation."""
    if d < 1:
        raise ValueError("dimension must be >= 1")
    alpha = complex(alpha)
    c = np.zeros(d, dtype=np.complex128)
    c[0] = 1
    if alpha != 0:
        for l in range(1, d):
            c[l] = alpha**l / math.exp(0.5 * log_factorial(l))
    return _normalized(c)


def cat3(alpha=2.0, d=13):
    """|a> + e^{0.6 i pi}|e^{2 i pi/3} a> + e^{-0.3 i pi}|e^{4 i pi/3} a>."""
    alpha = complex(alpha)
    c = (
        coherent_state(alpha, d).coeffs
        + np.exp(0.6j * np.pi) * coherent_state(alpha * np.exp(2j * np.pi / 3), d).coeffs
        + np.exp(-0.3j * np.pi) * coherent_state(alpha * np.exp(4j * np.pi / 3), d).coeffs
    )
    return _normalized(c)


def mix(components):
    """Classical mixture sum w_k |psi_k><psi_k| / sum w_k."""
    components = list(components)
    if not components:
        raise ValueError("mixture needs at least one component")
    d = components[0][1].dim
    total = 0.0
    rho = np.zeros((d, d), dtype=np.complex128)
    for w, state in components:
        if w < 0:
            raise ValueError(f"negative mixture weight {w}")
        if state.dim != d:
            raise ValueError(f"dimension mismatch in mixture: {state.dim} != {d}")
        rho += w * np.outer(state.coeffs, state.coeffs.conj())
        total += w
    if total <= 0:
        raise ValueError("mixture weights sum to zero")
    return DensityMatrix(rho / total, physical=True)


def rho_m1(d=13):
    return mix([(0.5, eigenstate(0, d)), (0.5, eigenstate(12, d))])


def rho_m2(d=13):
    c = np.zeros(d, dtype=np.complex128)
    c[0], c[12] = 1, np.exp(4j * np.pi / 3)
    return mix([(0.5, _normalized(c)), (0.5, eigenstate(6, d))])


def random_density(d, rank=None, seed=0):
    """Random physical density matrix of the given rank (Ginibre construction)."""
    rank = d if rank is None else rank
    if not 1 <= rank <= d:
        raise ValueError(f"rank must lie in 1..{d}, got {rank}")
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    rho = (rho + rho.conj().T) / 2
    return DensityMatrix(rho / np.trace(rho).real, physical=True)


def benchmark_states(d=13):
    """The 18 benchmark states (13 eigenstates, 3 superpositions, 2 mixtures), keyed by display name."""
    out = {f"|{l}>": eigenstate(l, d).density() for l in range(13)}
    out["psi_G"] = psi_g(d).density()
    out["psi_c"] = truncated_cat(2.0, d).density()
    out["psi_s"] = truncated_squeezed(1.5, d).density()
    out["rho_m1"] = rho_m1(d)
    out["rho_m2"] = rho_m2(d)
    return out


# -- state specification files ------------------------------------------------

def _complex(value, key):
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, (int, float)) for v in value):
        return complex(value[0], value[1])
    raise ConfigError(f"{key}: expected a number or [re, im] pair, got {value!r}")


_SPEC_KEYS = {
    "eigen": {"l"},
    "superposition": {"coeffs"},
    "coherent": {"alpha"},
    "cat": {"alpha"},
    "cat3": {"alpha"},
    "squeezed": {"gamma"},
    "psi_g": set(),
    "mixture": {"components"},
}


def state_from_spec(spec, d=None):
    """Build a DensityMatrix from a parsed state specification.

    ``{"dim": 13, "type": "eigen", "l": 7}``; complex numbers are [re, im]
    pairs. Mixture components are ``{"weight": w, "state": {...}}`` with the
    dimension inherited from the parent.
    """
    if not isinstance(spec, dict):
        raise ConfigError("state spec must be a JSON object")
    kind = spec.get("type")
    if kind not in _SPEC_KEYS:
        raise ConfigError(f"unknown state type {kind!r}; expected one of {sorted(_SPEC_KEYS)}")
    d = spec.get("dim", d)
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ConfigError(f"state dim must be a positive integer, got {d!r}")
    extra = set(spec) - _SPEC_KEYS[kind] - {"type", "dim"}
    if extra:
        raise ConfigError(f"unknown keys for {kind!r} state: {sorted(extra)}")
    missing = _SPEC_KEYS[kind] - set(spec)
    if missing:
        raise ConfigError(f"missing keys for {kind!r} state: {sorted(missing)}")
    try:
        if kind == "eigen":
            return eigenstate(int(spec["l"]), d).density()
        if kind == "superposition":
            coeffs = [_complex(c, "coeffs") for c in spec["coeffs"]]
            return superposition(coeffs, d).density()
        if kind == "coherent":
            return coherent_state(_complex(spec["alpha"], "alpha"), d).density()
        if kind == "cat":
            return truncated_cat(_complex(spec["alpha"], "alpha"), d).density()
        if kind == "cat3":
            return cat3(_complex(spec["alpha"], "alpha"), d).density()
        if kind == "squeezed":
            return truncated_squeezed(float(spec["gamma"]), d).density()
        if kind == "psi_g":
            return psi_g(d).density()
        comps = []
        for item in spec["components"]:
            if not isinstance(item, dict) or set(item) != {"weight", "state"}:
                raise ConfigError("mixture components must be {\"weight\": w, \"state\": {...}}")
            sub = state_from_spec(item["state"], d)
            comps.append((float(item["weight"]), sub))
        return _mix_densities(comps)
    except (ValueError, TypeError, IndexError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def _mix_densities(components):
    total = sum(w for w, _ in components)
    if total <= 0 or any(w < 0 for w, _ in components):
        raise ConfigError("mixture weights must be nonnegative with a positive sum")
    dims = {rho.dim for _, rho in components}
    if len(dims) != 1:
        raise ConfigError(f"dimension mismatch in mixture: {sorted(dims)}")
    rho = sum(w * r.entries for w, r in components) / total
    return DensityMatrix(rho, physical=True)
