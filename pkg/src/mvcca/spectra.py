"""Mixing ensembles with prescribed pairwise canonical spectra.

With a shared right factor ``P`` the singular values of the population
normalized cross-covariance factorize as ``t_ij,k = g_i,k * g_j,k`` where
``g = sigma / sqrt(1 + sigma^2)`` and ``sigma`` are the singular values of
``A_i``. For three views the gains are recovered in closed form from the
three pairwise targets.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .exceptions import DimensionError, InfeasibleSpectrumError
from .linalg import random_orthogonal, svd_ordered, sym_inv_sqrt

PAIRS = ((0, 1), (0, 2), (1, 2))
RANK_RTOL = 1e-9
WHITEN_FLOOR = 1e-12


@dataclass(frozen=True)
class TargetSpectra:
    """Target canonical correlations for the pairs (1,2), (1,3), (2,3).

    ``dS`` holds the source dimension of each view; it defaults to ``r``.
    """

    t12: tuple
    t13: tuple
    t23: tuple
    dS: tuple = None

    def __post_init__(self):
        ts = [np.asarray(t, dtype=np.float64).ravel() for t in (self.t12, self.t13, self.t23)]
        r = ts[0].size
        if r == 0 or any(t.size != r for t in ts):
            raise DimensionError(
                f"pairwise targets must share a positive length, got {[t.size for t in ts]}")
        for name, t in zip(("t12", "t13", "t23"), ts):
            if not np.all((t > 0) & (t < 1)):
                raise InfeasibleSpectrumError(
                    f"{name} entries must lie strictly in (0, 1), got {t.tolist()}",
                    mode=int(np.argmax((t <= 0) | (t >= 1))))
            if np.any(np.diff(t) > 0):
                raise DimensionError(f"{name} must be nonincreasing, got {t.tolist()}")
            object.__setattr__(self, name, tuple(float(v) for v in t))
        dS = (r, r, r) if self.dS is None else tuple(int(d) for d in self.dS)
        if len(dS) != 3:
            raise DimensionError(f"dS must list three view dimensions, got {dS}")
        object.__setattr__(self, "dS", dS)

    @property
    def r(self):
        return len(self.t12)

    def pair(self, i, j):
        i, j = sorted((i, j))
        return np.array({(0, 1): self.t12, (0, 2): self.t13, (1, 2): self.t23}[(i, j)])

    @classmethod
    def uniform(cls, t, r, dS=None):
        """All pairs share the spectrum ``(t, ..., t)`` of length ``r``."""
        return cls((t,) * r, (t,) * r, (t,) * r, dS)

    @classmethod
    def from_dict(cls, d):
        if "r" in d and any(len(d[k]) != d["r"] for k in ("t12", "t13", "t23")):
            raise DimensionError(f"declared r={d['r']} does not match target lengths")
        return cls(d["t12"], d["t13"], d["t23"], d.get("dS"))

    def to_dict(self):
        return {"r": self.r, "t12": list(self.t12), "t13": list(self.t13),
                "t23": list(self.t23), "dS": list(self.dS)}


def solve_per_view_gains(targets):
    """Per-view gains ``g_i,k = sqrt(t_ij,k t_ki,k / t_jk,k)``.

    Returns
    -------
    (3, r) array with ``g[i, k] * g[j, k] == t_ij,k``.

    Raises
    ------
    InfeasibleSpectrumError
        If any gain falls outside (0, 1); the error names the first such mode.
    """
    t12, t13, t23 = (np.asarray(t) for t in (targets.t12, targets.t13, targets.t23))
    radicands = np.stack([t12 * t13 / t23, t12 * t23 / t13, t13 * t23 / t12])
    gains = np.sqrt(np.clip(radicands, 0.0, None))
    bad = (radicands <= 0) | (gains >= 1)
    if np.any(bad):
        view, mode = (int(a[0]) for a in np.nonzero(bad))
        raise InfeasibleSpectrumError(
            f"mode {mode}: gain of view {view + 1} is {gains[view, mode]:.6g}, "
            "outside (0, 1)", mode=mode, view=view)
    return gains


def gains_to_singular_values(gains):
    g = np.asarray(gains, dtype=np.float64)
    return g / np.sqrt(1.0 - g ** 2)


@dataclass(frozen=True)
class MixingEnsemble:
    """Mixing matrices ``A_i`` (d_i x d_C) of the additive latent model.

    ``shared_factor``, ``rotations`` and ``singular_values`` are populated
    when the ensemble was built from gains; ``whiteners`` are always the
    population whiteners ``(A_i A_i^T + I)^{-1/2}``.
    """

    mixings: tuple
    shared_factor: np.ndarray = None
    rotations: tuple = None
    singular_values: np.ndarray = None
    whiteners: tuple = field(init=False)

    def __post_init__(self):
        mixings = tuple(np.array(A, dtype=np.float64, ndmin=2) for A in self.mixings)
        if len(mixings) < 2:
            raise DimensionError("an ensemble needs at least two views")
        dC = mixings[0].shape[1]
        if any(A.shape[1] != dC for A in mixings):
            raise DimensionError("all mixings must share the latent dimension d_C")
        object.__setattr__(self, "mixings", mixings)
        object.__setattr__(self, "whiteners", tuple(
            sym_inv_sqrt(A @ A.T + np.eye(A.shape[0]), floor=WHITEN_FLOOR) for A in mixings))

    @property
    def n_views(self):
        return len(self.mixings)

    @property
    def shared_dim(self):
        return self.mixings[0].shape[1]

    @property
    def view_dims(self):
        return tuple(A.shape[0] for A in self.mixings)

    def covariance(self, i, j=None):
        """Population ``Cov(s_i, s_j)``; ``Cov(s_i)`` when ``j`` is omitted or equal."""
        Ai = self.mixings[i]
        if j is None or j == i:
            return Ai @ Ai.T + np.eye(Ai.shape[0])
        return Ai @ self.mixings[j].T


def build_mixing(gains, dS, stream, shared_dim=None):
    """Construct ``A_i = U_i[:, :r] diag(sigma_i) P[:, :r]^T``.

    ``sigma_i,k = g_i,k / sqrt(1 - g_i,k^2)``. ``P`` (shared) and each
    ``U_i`` are Haar orthogonal, drawn from substreams 0 and ``i + 1``.
    """
    gains = np.atleast_2d(np.asarray(gains, dtype=np.float64))
    n_views, r = gains.shape
    if len(dS) != n_views:
        raise DimensionError(f"got {len(dS)} view dimensions for {n_views} views")
    if np.any((gains <= 0) | (gains >= 1)):
        raise InfeasibleSpectrumError("gains must lie in (0, 1)",
                                      mode=int(np.argmax(np.any((gains <= 0) | (gains >= 1), axis=0))))
    dC = r if shared_dim is None else int(shared_dim)
    if dC < r:
        raise DimensionError(f"shared dimension {dC} < rank {r}")
    for i, d in enumerate(dS):
        if d < r:
            raise DimensionError(f"view {i + 1} has d_S={d} < r={r}")
    sigmas = gains_to_singular_values(gains)
    P = random_orthogonal(dC, stream.child(0).rng())
    rotations, mixings = [], []
    for i, d in enumerate(dS):
        U = random_orthogonal(int(d), stream.child(i + 1).rng())
        rotations.append(U)
        mixings.append((U[:, :r] * sigmas[i]) @ P[:, :r].T)
    return MixingEnsemble(tuple(mixings), shared_factor=P,
                          rotations=tuple(rotations), singular_values=sigmas)


def ensemble_from_targets(targets, stream, shared_dim=None):
    return build_mixing(solve_per_view_gains(targets), targets.dS, stream, shared_dim)


@dataclass(frozen=True)
class PopulationCCA:
    """Population normalized cross-covariance of one view pair and its SVD."""

    R: np.ndarray
    left: np.ndarray
    singular_values: np.ndarray
    right: np.ndarray
    rank: int

    @property
    def left_basis(self):
        return self.left[:, :self.rank]

    @property
    def right_basis(self):
        return self.right[:, :self.rank]

    @property
    def gap(self):
        """``sigma_r - sigma_{r+1}`` with ``sigma_{d+1} := 0``."""
        s = np.append(self.singular_values, 0.0)
        if self.rank == 0:
            return 0.0
        return float(s[self.rank - 1] - s[self.rank])


def numerical_rank(s):
    s = np.asarray(s)
    if s.size == 0:
        return 0
    return int(np.sum(s > RANK_RTOL * max(1.0, float(s[0]))))


def population_normalized_crosscov(ensemble, i, j):
    """``R_ij = W_i A_i A_j^T W_j`` with its sign-fixed SVD and numerical rank."""
    R = ensemble.whiteners[i] @ ensemble.covariance(i, j) @ ensemble.whiteners[j]
    U, s, V = svd_ordered(R)
    return PopulationCCA(R, U, s, V, numerical_rank(s))


def view_pairs(n_views):
    return list(combinations(range(n_views), 2))


def planted_overlap_ensemble(d=3, strength=2.0):
    """Three views with partially overlapping shared signal.

    Latents ``(c_a, c_b, c_c)``: ``c_a`` reaches all views, ``c_b`` views 1
    and 2, ``c_c`` views 1 and 3. In view 1 they load on ``e1``, ``e2``,
    ``e3`` respectively, so the view-1 correlated subspaces are
    ``span{e1, e2}`` (with view 2) and ``span{e1, e3}`` (with view 3) and
    their intersection is ``span{e1}``. Views 2 and 3 load ``c_a`` on
    ``e1`` and their pair-specific latent on ``e2``.
    """
    if d < 3:
        raise DimensionError(f"planted overlap needs d >= 3, got {d}")
    A1 = np.zeros((d, 3))
    A2 = np.zeros((d, 3))
    A3 = np.zeros((d, 3))
    A1[0, 0] = A1[1, 1] = A1[2, 2] = strength
    A2[0, 0] = A2[1, 1] = strength
    A3[0, 0] = A3[1, 2] = strength
    return MixingEnsemble((A1, A2, A3))
