"""Special functions used by the mode and kernel evaluations."""

import math

import numpy as np

_LOG_FACTORIALS = np.concatenate(
    ([0.0], np.array([math.fsum(math.log(k) for k in range(2, n + 1)) for n in range(1, 171)]))
)


def log_factorial(n):
    """ln(n!) for a nonnegative integer ``n``."""
    n = int(n)
    if n < 0:
        raise ValueError(f"log_factorial needs n >= 0, got {n}")
    if n < len(_LOG_FACTORIALS):
        return float(_LOG_FACTORIALS[n])
    return math.lgamma(n + 1)


def factorial_ratio_sqrt(l1, l2):
    """sqrt(l1! l2!) / max(l1, l2)!, evaluated in log space."""
    return math.exp(0.5 * (log_factorial(l1) + log_factorial(l2)) - log_factorial(max(l1, l2)))


def laguerre_assoc(n, alpha, x):
    """Generalized Laguerre polynomial L_n^alpha(x).

    Evaluated by the upward three-term recurrence in the degree

        (k+1) L_{k+1} = (2k + alpha + 1 - x) L_k - (k + alpha) L_{k-1}

    which is forward-stable for alpha >= 0, x >= 0.

    Parameters
    ----------
    n : int
        degree, n >= 0
    alpha : int
        order, alpha >= 0
    x : float or numpy.ndarray
        argument(s)

    Returns
    -------
    float or numpy.ndarray
        same shape as ``x``
    """
    if n < 0 or alpha < 0:
        raise ValueError(f"need n >= 0 and alpha >= 0, got n={n}, alpha={alpha}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + alpha + 1 - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur if cur.ndim else float(cur)
