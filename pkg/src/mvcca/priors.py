"""Seeded sampling of standardized latent variables.

Every prior family is standardized with its closed-form mean and variance,
so the latents are isotropic in population (never with empirical moments).

Stream derivation
-----------------
A :class:`SeededStream` is a ``(seed, stream_id)`` pair of unsigned 64-bit
integers. Its generator is ``PCG64(SeedSequence(seed, spawn_key=(stream_id,)))``.
Substreams for trial ``t`` and view ``v`` use ``stream_id = mix64(t, v)``::

    mix64(a, b) = splitmix64(splitmix64(a) ^ (b + 0x9E3779B97F4A7C15))

where ``splitmix64`` is the finalizer of Steele et al. (add the golden-ratio
increment, then xor-shift-multiply by 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB). All arithmetic is modulo 2**64.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DimensionError, ParameterDomainError

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x):
    x = (x + _GOLDEN) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return x ^ (x >> 31)


def mix64(a, b):
    """Fixed 64-bit hash of an ordered pair of unsigned integers."""
    return splitmix64(splitmix64(a & _MASK) ^ ((b + _GOLDEN) & _MASK))


def derive_stream_id(*keys):
    """Fold any number of nonnegative integer keys into one 64-bit stream id."""
    h = 0
    for k in keys:
        if k < 0:
            raise ParameterDomainError(f"stream keys must be nonnegative, got {k}")
        h = mix64(h, int(k))
    return h


@dataclass(frozen=True)
class SeededStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            v = getattr(self, name)
            if isinstance(v, bool) or int(v) != v or not 0 <= v <= _MASK:
                raise ParameterDomainError(f"{name} must be an unsigned 64-bit integer, got {v!r}")
            object.__setattr__(self, name, int(v))

    def rng(self):
        """A fresh generator; identical ``(seed, stream_id)`` give identical draws."""
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(ss))

    def child(self, *keys):
        """Substream keyed by ``keys`` (e.g. trial index, view index)."""
        return SeededStream(self.seed, mix64(self.stream_id, derive_stream_id(*keys)))


@dataclass(frozen=True)
class PriorSpec:
    """A latent prior family, standardized to mean 0 and variance 1.

    Parameters
    ----------
    family : {'gaussian', 'gamma', 'poisson', 'negative_binomial', 'hypergeometric'}
    params : dict
        ``gamma``: ``shape``; ``poisson``: ``rate``; ``negative_binomial``:
        ``successes``, ``prob``; ``hypergeometric``: ``population``,
        ``successes``, ``draws``.
    """

    family: str = "gaussian"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        family = self.family.lower().replace("-", "_")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", dict(self.params))
        if family not in _FAMILIES:
            raise ParameterDomainError(
                f"unknown prior family {self.family!r}; expected one of {sorted(_FAMILIES)}")
        self.moments()

    @classmethod
    def gaussian(cls):
        return cls("gaussian")

    @classmethod
    def gamma(cls, shape):
        return cls("gamma", {"shape": shape})

    @classmethod
    def poisson(cls, rate):
        return cls("poisson", {"rate": rate})

    @classmethod
    def negative_binomial(cls, successes, prob):
        return cls("negative_binomial", {"successes": successes, "prob": prob})

    @classmethod
    def hypergeometric(cls, population, successes, draws):
        return cls("hypergeometric",
                   {"population": population, "successes": successes, "draws": draws})

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        family = d.pop("family", "gaussian")
        return cls(family, d)

    def to_dict(self):
        return {"family": self.family, **self.params}

    def moments(self):
        """Closed-form ``(mean, sd)`` of the raw family; validates parameters."""
        return _FAMILIES[self.family][0](self.params)

    def standardize(self, raw):
        mean, sd = self.moments()
        return (np.asarray(raw, dtype=np.float64) - mean) / sd

    def draw_raw(self, rng, size):
        return _FAMILIES[self.family][1](self.params, rng, size)


def _require(params, name, cond, msg):
    if name not in params:
        raise ParameterDomainError(f"missing parameter {name!r}")
    v = params[name]
    if not cond(v):
        raise ParameterDomainError(f"{name}={v!r}: {msg}")
    return v


def _is_int(v):
    return not isinstance(v, bool) and float(v).is_integer()


def _gaussian_moments(p):
    return 0.0, 1.0


def _gamma_moments(p):
    k = _require(p, "shape", lambda v: v > 0 and math.isfinite(v), "must be positive")
    return float(k), math.sqrt(k)


def _poisson_moments(p):
    lam = _require(p, "rate", lambda v: v > 0 and math.isfinite(v), "must be positive")
    return float(lam), math.sqrt(lam)


def _negbin_moments(p):
    r = _require(p, "successes", lambda v: _is_int(v) and v >= 1, "must be a positive integer")
    q = _require(p, "prob", lambda v: 0 < v < 1, "must lie in (0, 1)")
    return r * (1 - q) / q, math.sqrt(r * (1 - q)) / q


def _hypergeom_moments(p):
    N = _require(p, "population", lambda v: _is_int(v) and v >= 1, "must be a positive integer")
    K = _require(p, "successes", lambda v: _is_int(v) and 0 <= v <= N, "must lie in [0, population]")
    m = _require(p, "draws", lambda v: _is_int(v) and 0 <= v <= N, "must lie in [0, population]")
    mean = m * K / N
    var = m * (K / N) * ((N - K) / N) * ((N - m) / (N - 1)) if N > 1 else 0.0
    if var <= 0:
        raise ParameterDomainError(
            f"hypergeometric(population={N}, successes={K}, draws={m}) has zero variance")
    return mean, math.sqrt(var)


_FAMILIES = {
    "gaussian": (_gaussian_moments, lambda p, rng, size: rng.standard_normal(size)),
    "gamma": (_gamma_moments, lambda p, rng, size: rng.gamma(p["shape"], 1.0, size)),
    "poisson": (_poisson_moments, lambda p, rng, size: rng.poisson(p["rate"], size)),
    "negative_binomial": (
        _negbin_moments,
        lambda p, rng, size: rng.negative_binomial(int(p["successes"]), p["prob"], size)),
    "hypergeometric": (
        _hypergeom_moments,
        lambda p, rng, size: rng.hypergeometric(
            int(p["successes"]), int(p["population"] - p["successes"]), int(p["draws"]), size)),
}


def sample_standardized(prior, rows, cols, stream):
    """Draw an ``rows x cols`` matrix of i.i.d. standardized latents."""
    if rows < 1 or cols < 1:
        raise DimensionError(f"need rows >= 1 and cols >= 1, got {rows}x{cols}")
    raw = prior.draw_raw(stream.rng(), (int(rows), int(cols)))
    return prior.standardize(raw)


def sample_sources(ensemble, prior, n, stream):
    """Draw ``n`` samples of ``s_i = A_i c + eps_i`` for every view.

    The shared latent ``c`` comes from substream 0 and the private noise of
    view ``i`` from substream ``i + 1``, so each view's noise is independent
    of the others and of ``c``.

    Returns
    -------
    list of (n, d_i) arrays, one per view.
    """
    if n < 1:
        raise DimensionError(f"n must be >= 1, got {n}")
    C = sample_standardized(prior, n, ensemble.shared_dim, stream.child(0))
    views = []
    for i, A in enumerate(ensemble.mixings):
        eps = sample_standardized(prior, n, A.shape[0], stream.child(i + 1))
        views.append(C @ A.T + eps)
    return views
