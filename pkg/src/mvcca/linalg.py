"""Deterministic linear-algebra kernels.

Symmetric inverse square roots, SVD/eigendecompositions with a fixed sign
convention, orthonormal subspace bases, projectors, principal angles and
sin-theta distances.

Sign convention: every singular vector / eigenvector is flipped so that its
largest-magnitude entry (first one on ties) is nonnegative. For an SVD the
right vector is flipped together with its left partner, so ``U S V^T`` is
unchanged.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_matrix, check_symmetric
from .exceptions import DimensionError, NearSingularError

ORTHONORMAL_TOL = 1e-10


@dataclass(frozen=True)
class SubspaceBasis:
    """Orthonormal basis ``B`` (d x r) of an r-dimensional subspace of R^d."""

    matrix: np.ndarray

    def __post_init__(self):
        B = check_matrix(self.matrix, "basis", allow_empty=True)
        if B.ndim != 2:
            raise DimensionError("basis must be 2-d")
        r = B.shape[1]
        if r > B.shape[0]:
            raise DimensionError(f"rank {r} exceeds ambient dimension {B.shape[0]}")
        if r and np.max(np.abs(B.T @ B - np.eye(r))) > ORTHONORMAL_TOL:
            raise DimensionError("basis columns are not orthonormal within 1e-10")
        B = B.copy()
        B.setflags(write=False)
        object.__setattr__(self, "matrix", B)

    @property
    def ambient_dim(self):
        return self.matrix.shape[0]

    @property
    def rank(self):
        return self.matrix.shape[1]

    @classmethod
    def from_span(cls, M, tol=1e-12):
        """Orthonormal basis of the column span of ``M`` (rank-revealing SVD)."""
        M = check_matrix(M, "span", allow_empty=True)
        if M.shape[1] == 0:
            return cls(np.zeros((M.shape[0], 0)))
        U, s, _ = svd_ordered(M)
        r = int(np.sum(s > tol * max(1.0, s[0] if s.size else 0.0)))
        return cls(U[:, :r])

    def projector(self):
        return projector(self)


def as_basis(B):
    return B if isinstance(B, SubspaceBasis) else SubspaceBasis(B)


def _fix_signs(U, V=None):
    """Flip columns so the largest-magnitude entry of each column of U is >= 0."""
    U = U.copy()
    V = None if V is None else V.copy()
    if U.shape[0] == 0:
        return U, V
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    U *= signs
    if V is not None:
        k = min(U.shape[1], V.shape[1])
        V[:, :k] *= signs[:k]
        if V.shape[1] > k:
            V[:, k:], _ = _fix_signs(V[:, k:])
    return U, V


def sym_inv_sqrt(M, floor=1e-12):
    """Symmetric inverse square root ``M^{-1/2}`` by eigendecomposition.

    Parameters
    ----------
    M : (d, d) array
        Symmetric positive definite matrix.
    floor : float
        Eigenvalues at or below this value are treated as singular.

    Raises
    ------
    NearSingularError
        If the smallest eigenvalue of ``M`` is <= ``floor``; in a whitening
        context this means the representation has collapsed.
    """
    M = check_symmetric(M, "M")
    evals, evecs = np.linalg.eigh(M)
    if evals[0] <= floor:
        raise NearSingularError(
            f"smallest eigenvalue {evals[0]:.3e} <= floor {floor:.1e}; "
            "covariance is singular (representation collapse)")
    S = (evecs * evals ** -0.5) @ evecs.T
    return 0.5 * (S + S.T)


def svd_ordered(M):
    """Full SVD ``M = U diag(s) V^T`` with nonincreasing ``s`` and fixed signs.

    Returns ``U`` (p x p), ``s`` (min(p, q),) and ``V`` (q x q); note ``V`` and
    not ``V^T``.
    """
    M = check_matrix(M, "M", allow_empty=True)
    U, s, Vt = np.linalg.svd(M, full_matrices=True)
    U, V = _fix_signs(U, Vt.T)
    return U, s, V


def eigh_descending(S):
    """Eigendecomposition of a symmetric matrix, eigenvalues nonincreasing, fixed signs."""
    S = check_symmetric(S, "S")
    evals, evecs = np.linalg.eigh(S)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    evecs, _ = _fix_signs(evecs)
    return evals, evecs


def random_orthogonal(d, rng):
    """Haar-distributed d x d orthogonal matrix.

    QR of a standard Gaussian matrix with the columns of Q rescaled by
    ``sign(diag(R))`` so the factorisation is unique.
    """
    Z = rng.standard_normal((d, d))
    Q, R = np.linalg.qr(Z)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def projector(B):
    """Orthogonal projector ``B B^T`` onto the span of a basis."""
    B = as_basis(B).matrix
    P = B @ B.T
    return 0.5 * (P + P.T)


@dataclass(frozen=True)
class PrincipalAngles:
    radians: np.ndarray

    @property
    def degrees(self):
        return np.degrees(self.radians)

    @property
    def mean(self):
        """Mean principal angle in degrees (0 for an empty set)."""
        return float(np.mean(self.degrees)) if self.radians.size else 0.0

    @property
    def max(self):
        """Largest principal angle in degrees (0 for an empty set)."""
        return float(np.max(self.degrees)) if self.radians.size else 0.0


def _check_same_ambient(B1, B2):
    if B1.ambient_dim != B2.ambient_dim:
        raise DimensionError(
            f"ambient dimensions differ: {B1.ambient_dim} vs {B2.ambient_dim}")


def principal_angles(B1, B2):
    """Principal angles between two subspaces, ascending.

    The cosines are the singular values of ``B1^T B2``, clamped to [0, 1]
    before taking ``arccos``.
    """
    B1, B2 = as_basis(B1), as_basis(B2)
    _check_same_ambient(B1, B2)
    k = min(B1.rank, B2.rank)
    if k == 0:
        return PrincipalAngles(np.zeros(0))
    cos = np.linalg.svd(B1.matrix.T @ B2.matrix, compute_uv=False)[:k]
    return PrincipalAngles(np.sort(np.arccos(np.clip(cos, 0.0, 1.0))))


def sin_theta_norm(B1, B2):
    """Operator-norm sin-theta distance ``||(I - B1 B1^T) B2||_2``.

    Equals the sine of the largest principal angle for equal-rank subspaces.
    Computed from the complement projection, which stays accurate for small
    angles where ``sqrt(1 - cos^2)`` does not.
    """
    B1, B2 = as_basis(B1), as_basis(B2)
    _check_same_ambient(B1, B2)
    if B1.rank != B2.rank:
        raise DimensionError(f"ranks differ: {B1.rank} vs {B2.rank}")
    if B1.rank == 0:
        return 0.0
    Q1, Q2 = B1.matrix, B2.matrix
    resid = Q2 - Q1 @ (Q1.T @ Q2)
    return float(min(1.0, np.linalg.norm(resid, 2)))
