"""Invertible nonlinear view generators with exact oracle inverses.

A generator is ``x = Q_post psi(Q_pre s)`` where ``Q_pre``, ``Q_post`` are
orthogonal and ``psi`` acts coordinatewise with maps from a fixed menu:

* ``identity``: ``x``
* ``tanh``: ``x + alpha * tanh(beta * x)``, alpha, beta > 0
* ``cubic``: ``x + gamma * x**3``, gamma > 0

Each menu map is odd with derivative >= 1, so the root of ``f(x) = y`` lies
between 0 and ``y``; that bracket keeps the safeguarded Newton inversion
convergent.
"""

from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import check_matrix
from .cca import empirical_moments, empirical_normalized_crosscov
from .exceptions import DimensionError, InversionError, ParameterDomainError, WiringError
from .linalg import random_orthogonal
from .priors import sample_sources

MENU = ("identity", "tanh", "cubic")
NEWTON_TOL = 1e-12
NEWTON_MAXITER = 100
MOMENT_TOL = 1e-10


@dataclass(frozen=True)
class CoordinateMap:
    kind: str = "identity"
    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if self.kind not in MENU:
            raise ParameterDomainError(f"unknown map {self.kind!r}; menu is {MENU}")
        if self.kind == "tanh" and not (self.alpha > 0 and self.beta > 0):
            raise ParameterDomainError("tanh map needs alpha > 0 and beta > 0")
        if self.kind == "cubic" and not self.gamma > 0:
            raise ParameterDomainError("cubic map needs gamma > 0")

    def __call__(self, x):
        if self.kind == "tanh":
            return x + self.alpha * np.tanh(self.beta * x)
        if self.kind == "cubic":
            return x + self.gamma * x ** 3
        return x

    def derivative(self, x):
        if self.kind == "tanh":
            return 1.0 + self.alpha * self.beta / np.cosh(self.beta * x) ** 2
        if self.kind == "cubic":
            return 1.0 + 3.0 * self.gamma * x ** 2
        return np.ones_like(x)

    def inverse(self, y):
        """Safeguarded Newton with bisection fallback on the bracket [min(0,y), max(0,y)]."""
        y = np.asarray(y, dtype=np.float64)
        if self.kind == "identity":
            return y.copy()
        lo, hi = np.minimum(0.0, y), np.maximum(0.0, y)
        x = 0.5 * (lo + hi)
        for _ in range(NEWTON_MAXITER):
            fx = self(x) - y
            lo = np.where(fx < 0, x, lo)
            hi = np.where(fx > 0, x, hi)
            step = fx / self.derivative(x)
            x_new = x - step
            outside = (x_new < lo) | (x_new > hi)
            x_new = np.where(outside, 0.5 * (lo + hi), x_new)
            done = np.abs(x_new - x) <= NEWTON_TOL * np.maximum(1.0, np.abs(x_new))
            x = x_new
            if np.all(done):
                return x
        raise InversionError(f"{self.kind} inversion did not converge in {NEWTON_MAXITER} iterations")


@dataclass(frozen=True)
class InvertibleMapSpec:
    pre_rotation: np.ndarray
    maps: tuple
    post_rotation: np.ndarray

    def __post_init__(self):
        pre = check_matrix(self.pre_rotation, "pre_rotation")
        post = check_matrix(self.post_rotation, "post_rotation")
        d = pre.shape[0]
        for name, Q in (("pre_rotation", pre), ("post_rotation", post)):
            if Q.shape != (d, d) or np.max(np.abs(Q.T @ Q - np.eye(d))) > 1e-10:
                raise ParameterDomainError(f"{name} must be a {d}x{d} orthogonal matrix")
        maps = tuple(m if isinstance(m, CoordinateMap) else CoordinateMap(**m) for m in self.maps)
        if len(maps) != d:
            raise DimensionError(f"need {d} coordinate maps, got {len(maps)}")
        object.__setattr__(self, "pre_rotation", pre)
        object.__setattr__(self, "post_rotation", post)
        object.__setattr__(self, "maps", maps)

    @property
    def dim(self):
        return self.pre_rotation.shape[0]

    @classmethod
    def identity(cls, d):
        return cls(np.eye(d), (CoordinateMap(),) * d, np.eye(d))

    @classmethod
    def random(cls, d, rng, menu=("tanh", "cubic"), alpha=1.0, beta=1.0, gamma=0.2,
               pre="random", post="random"):
        """Random rotations and maps drawn uniformly from ``menu``."""
        pre_Q = random_orthogonal(d, rng) if pre == "random" else np.eye(d)
        post_Q = random_orthogonal(d, rng) if post == "random" else np.eye(d)
        kinds = [menu[k] for k in rng.integers(len(menu), size=d)]
        maps = tuple(CoordinateMap(k, alpha, beta, gamma) for k in kinds)
        return cls(pre_Q, maps, post_Q)

    @classmethod
    def from_config(cls, cfg, d, rng):
        """Build from ``{"pre", "menu", "post", "alpha", "beta", "gamma"}``."""
        for key in ("pre", "post"):
            if cfg.get(key, "random") not in ("random", "identity"):
                raise ParameterDomainError(f"{key} must be 'random' or 'identity'")
        return cls.random(d, rng, menu=tuple(cfg.get("menu", ("tanh", "cubic"))),
                          alpha=cfg.get("alpha", 1.0), beta=cfg.get("beta", 1.0),
                          gamma=cfg.get("gamma", 0.2), pre=cfg.get("pre", "random"),
                          post=cfg.get("post", "random"))

    def _coordinatewise(self, Y, inverse=False):
        out = np.empty_like(Y)
        for k, m in enumerate(self.maps):
            out[:, k] = m.inverse(Y[:, k]) if inverse else m(Y[:, k])
        return out


def apply_generator(spec, S):
    """Rowwise ``x = post @ psi(pre @ s)``."""
    S = check_matrix(S, "S")
    if S.shape[1] != spec.dim:
        raise DimensionError(f"sources have {S.shape[1]} coordinates, spec has {spec.dim}")
    return spec._coordinatewise(S @ spec.pre_rotation.T) @ spec.post_rotation.T


def oracle_encode(spec, X):
    """Exact inverse of :func:`apply_generator`."""
    X = check_matrix(X, "X")
    if X.shape[1] != spec.dim:
        raise DimensionError(f"observations have {X.shape[1]} coordinates, spec has {spec.dim}")
    return spec._coordinatewise(X @ spec.post_rotation, inverse=True) @ spec.pre_rotation


class OracleEncoder(BaseEstimator, TransformerMixin):
    """Stateless transformer wrapping the oracle inverse of a known generator."""

    def __init__(self, spec=None):
        self.spec = spec

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return oracle_encode(self.spec, X)

    def inverse_transform(self, S):
        return apply_generator(self.spec, S)


@dataclass(frozen=True)
class InvarianceReport:
    roundtrip_errors: list
    moment_deviations: list
    cross_deviations: dict
    max_deviation: float
    passed: bool


def _max_abs(a, b):
    return float(np.max(np.abs(np.asarray(a) - np.asarray(b))))


def invariance_check(ensemble, specs, prior, n, stream, inverse_specs=None, tol=MOMENT_TOL):
    """Push sources through each generator, encode back, compare moments.

    ``inverse_specs`` overrides the spec used for encoding (negative
    controls). Raises :class:`WiringError` naming the deviating views.
    """
    if len(specs) != ensemble.n_views:
        raise DimensionError(f"{len(specs)} specs for {ensemble.n_views} views")
    inverse_specs = specs if inverse_specs is None else inverse_specs
    sources = sample_sources(ensemble, prior, n, stream)
    encoded = [oracle_encode(inv, apply_generator(spec, S))
               for spec, inv, S in zip(specs, inverse_specs, sources)]
    roundtrip = [_max_abs(E, S) for E, S in zip(encoded, sources)]
    view_dev = [_max_abs(empirical_moments(E).cov_ii, empirical_moments(S).cov_ii)
                for E, S in zip(encoded, sources)]
    cross_dev = {}
    for i in range(len(sources)):
        for j in range(i + 1, len(sources)):
            ms = empirical_moments(sources[i], sources[j])
            me = empirical_moments(encoded[i], encoded[j])
            rs = empirical_normalized_crosscov(sources[i], sources[j]).R_hat
            re = empirical_normalized_crosscov(encoded[i], encoded[j]).R_hat
            cross_dev[(i, j)] = max(_max_abs(me.cov_ij, ms.cov_ij), _max_abs(re, rs))
    max_dev = max(view_dev + list(cross_dev.values()))
    bad = [i for i, (rt, dv) in enumerate(zip(roundtrip, view_dev)) if rt > 1e-8 or dv > tol]
    if not bad:
        bad = sorted({v for (i, j), dv in cross_dev.items() if dv > tol for v in (i, j)})
    report = InvarianceReport(roundtrip, view_dev, cross_dev, max_dev, not bad)
    if bad:
        err = WiringError(
            f"encoded moments deviate from source moments in view(s) "
            f"{[b + 1 for b in bad]} (max deviation {max_dev:.3e})", bad)
        err.report = report
        raise err
    return report
