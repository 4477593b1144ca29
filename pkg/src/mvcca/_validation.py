"""Input validation helpers shared by the estimators and functional API."""

import numpy as np

from .exceptions import DimensionError, NumericError


def check_matrix(M, name="matrix", allow_empty=False):
    """Return ``M`` as a finite 2-d float64 array or raise."""
    M = np.asarray(M, dtype=np.float64)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-d, got shape {M.shape}")
    if not allow_empty and M.size == 0:
        raise DimensionError(f"{name} is empty")
    if not np.all(np.isfinite(M)):
        raise NumericError(f"{name} contains non-finite entries")
    return M


def check_symmetric(M, name="matrix", tol=1e-10):
    M = check_matrix(M, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M))))
    if np.max(np.abs(M - M.T)) > tol * scale:
        raise DimensionError(f"{name} is not symmetric within {tol:g}")
    return 0.5 * (M + M.T)


def check_rank(r, upper, name="rank", lower=1):
    if isinstance(r, (bool, np.bool_)) or int(r) != r:
        raise DimensionError(f"{name} must be an integer, got {r!r}")
    r = int(r)
    if not lower <= r <= upper:
        raise DimensionError(f"{name}={r} outside [{lower}, {upper}]")
    return r


def check_views(Xs, min_views=2):
    """Validate a list of per-view sample matrices sharing the sample axis."""
    if len(Xs) < min_views:
        raise DimensionError(f"need at least {min_views} views, got {len(Xs)}")
    Xs = [check_matrix(X, f"view {i}") for i, X in enumerate(Xs)]
    n = Xs[0].shape[0]
    for i, X in enumerate(Xs):
        if X.shape[0] != n:
            raise DimensionError(
                f"view {i} has {X.shape[0]} samples, view 0 has {n}")
    return Xs
