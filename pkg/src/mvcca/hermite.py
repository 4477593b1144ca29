"""Normalized Hermite polynomials, Mehler mode spectra and dominance checks.

``psi_n(x) = H_n(x / sqrt(2)) / sqrt(2^n n!)`` where ``H_n`` are the
physicists' Hermite polynomials. These are orthonormal under the standard
normal density ``phi``, and for a standard bivariate normal pair ``(u, v)``
with correlation ``t`` one has ``E[psi_n(u) psi_m(v)] = t^n delta_nm``.

Quadrature uses Gauss-Hermite nodes ``z_k`` / weights ``w_k`` for the weight
``exp(-z^2)``, mapped to the standard-normal weight by ``x = sqrt(2) z`` and
``w -> w / sqrt(pi)``. A Q-node rule integrates polynomials of degree up to
``2Q - 1`` exactly.
"""

import math
import warnings
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .exceptions import DimensionError, ParameterDomainError, PrecisionWarning, QuadratureError

DEFAULT_NODES = 64
MAX_MODES = 10 ** 6
PRECISION_T = 0.999


def psi(n, x):
    """Normalized Hermite polynomial of degree ``n`` evaluated at ``x``.

    Uses the normalized recurrence
    ``psi_{k+1} = (x psi_k - sqrt(k) psi_{k-1}) / sqrt(k + 1)``, which never
    forms ``2^n n!`` and so does not overflow for large ``n``.
    """
    if n < 0:
        raise ParameterDomainError(f"degree must be >= 0, got {n}")
    return psi_table(n, x)[n]


def psi_table(max_degree, x):
    """Array of shape ``(max_degree + 1,) + x.shape`` holding ``psi_0..psi_D``."""
    x = np.asarray(x, dtype=np.float64)
    out = np.empty((max_degree + 1,) + x.shape)
    out[0] = 1.0
    if max_degree >= 1:
        out[1] = x
    for k in range(1, max_degree):
        out[k + 1] = (x * out[k] - math.sqrt(k) * out[k - 1]) / math.sqrt(k + 1)
    return out


@lru_cache(maxsize=32)
def normal_quadrature(n_nodes):
    """Nodes and weights integrating against the standard normal density."""
    if n_nodes < 1:
        raise QuadratureError(f"need at least one node, got {n_nodes}")
    z, w = np.polynomial.hermite.hermgauss(n_nodes)
    return math.sqrt(2.0) * z, w / math.sqrt(math.pi)


def orthonormality_check(max_degree, n_nodes=DEFAULT_NODES):
    """Max over ``n, m <= D`` of ``|E_phi[psi_n psi_m] - delta_nm|`` by quadrature."""
    if n_nodes < max_degree + 1:
        raise QuadratureError(
            f"{n_nodes} nodes cannot integrate degree {2 * max_degree} exactly; "
            f"need at least {max_degree + 1}")
    x, w = normal_quadrature(n_nodes)
    T = psi_table(max_degree, x)
    G = (T * w) @ T.T
    return float(np.max(np.abs(G - np.eye(max_degree + 1))))


def _check_correlation(t):
    if not -1 < t < 1:
        raise ParameterDomainError(f"correlation must lie in (-1, 1), got {t}")
    if abs(t) > PRECISION_T:
        warnings.warn(f"correlation {t} is within {1 - PRECISION_T:g} of 1; "
                      "quadrature accuracy is degraded", PrecisionWarning, stacklevel=3)


def mehler_cross_moment(n, m, t, n_nodes=DEFAULT_NODES):
    """``E[psi_n(u) psi_m(v)]`` for standard normals with correlation ``t``.

    Tensor Gauss-Hermite quadrature over independent ``(x, y)`` with
    ``u = x`` and ``v = t x + sqrt(1 - t^2) y``.
    """
    _check_correlation(t)
    if 2 * n_nodes - 1 < n + m:
        raise QuadratureError(f"{n_nodes} nodes cannot integrate degree {n + m} exactly")
    x, w = normal_quadrature(n_nodes)
    u = x[:, None]
    v = t * x[:, None] + math.sqrt(1.0 - t * t) * x[None, :]
    vals = psi(n, u) * psi(m, v)
    return float(w @ vals @ w)


def multivariate_cross_moment(n_index, m_index, t, n_nodes=DEFAULT_NODES):
    """Cross-moment of the tensor Hermite basis under independent canonical pairs."""
    n_index, m_index, t = (tuple(a) for a in (n_index, m_index, np.atleast_1d(t)))
    if not len(n_index) == len(m_index) == len(t):
        raise DimensionError("multi-indices and correlations must share a length")
    return math.prod(mehler_cross_moment(a, b, tk, n_nodes)
                     for a, b, tk in zip(n_index, m_index, t))


def mehler_density(x, y, t, max_degree):
    """Degree-``D`` partial sum ``phi(x) phi(y) sum_n t^n psi_n(x) psi_n(y)``."""
    x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
    coeffs = t ** np.arange(max_degree + 1)
    series = np.tensordot(coeffs, psi_table(max_degree, x) * psi_table(max_degree, y), axes=1)
    return _phi(x) * _phi(y) * series


def bivariate_normal_density(x, y, t):
    x, y = np.asarray(x, float), np.asarray(y, float)
    q = (x * x - 2 * t * x * y + y * y) / (1 - t * t)
    return np.exp(-0.5 * q) / (2 * math.pi * math.sqrt(1 - t * t))


def _phi(x):
    return np.exp(-0.5 * x * x) / math.sqrt(2 * math.pi)


def _check_correlations(t):
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    if t.ndim != 1 or t.size == 0:
        raise DimensionError("correlations must be a nonempty vector")
    if not np.all((t > 0) & (t < 1)):
        raise ParameterDomainError(f"correlations must lie in (0, 1), got {t.tolist()}")
    if np.any(np.diff(t) > 0):
        raise ParameterDomainError(f"correlations must be nonincreasing, got {t.tolist()}")
    return t


def _compositions(r, max_degree):
    """All multi-indices of length r with total degree in [1, max_degree], lexicographic."""
    def rec(prefix, remaining, slots):
        if slots == 0:
            yield prefix
            return
        for k in range(remaining + 1):
            yield from rec(prefix + (k,), remaining - k, slots - 1)

    for idx in rec((), max_degree, r):
        if sum(idx):
            yield idx


@dataclass(frozen=True)
class MehlerSpectrum:
    """Mode weights ``t_n = prod_k t_k^{n_k}`` for ``1 <= |n| <= D``.

    ``modes`` is sorted by decreasing weight, ties broken by ascending
    lexicographic multi-index.
    """

    t: np.ndarray
    max_degree: int
    modes: list

    def weights(self):
        return np.array([w for _, w in self.modes])

    def linear_indices(self):
        r = len(self.t)
        return {tuple(int(k == j) for k in range(r)) for j in range(r)}


def mode_spectrum(t, max_degree):
    t = _check_correlations(t)
    if max_degree < 1:
        raise ParameterDomainError(f"max_degree must be >= 1, got {max_degree}")
    count = math.comb(t.size + max_degree, max_degree) - 1
    if count > MAX_MODES:
        raise DimensionError(f"{count} modes exceed the cap of {MAX_MODES}")
    tl = t.tolist()
    modes = [(idx, math.prod(tk ** nk for tk, nk in zip(tl, idx)))
             for idx in _compositions(t.size, max_degree)]
    modes.sort(key=lambda m: (-m[1], m[0]))
    return MehlerSpectrum(t, int(max_degree), modes)


@dataclass(frozen=True)
class DominanceResult:
    gap: float
    holds: bool


def dominance_check(t):
    """First-order dominance ``t_r > t_1^2``; always true when ``r = 1``."""
    t = _check_correlations(t)
    gap = float(t[-1] - t[0] ** 2)
    return DominanceResult(gap, t.size == 1 or gap > 0)


def leading_modes_are_linear(t, max_degree=4):
    """True iff the ``r`` heaviest modes are exactly the first-order ones.

    A tie between the weakest linear mode and the heaviest higher-order mode
    counts as not separated, so the result is False at ``t_r == t_1^2``.
    """
    if max_degree < 2:
        raise ParameterDomainError(f"max_degree must be >= 2, got {max_degree}")
    spec = mode_spectrum(t, max_degree)
    r = len(spec.t)
    top = {idx for idx, _ in spec.modes[:r]}
    if top != spec.linear_indices():
        return False
    return len(spec.modes) == r or spec.modes[r - 1][1] > spec.modes[r][1]
