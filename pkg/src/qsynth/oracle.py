"""Closed-form unitary Procrustes solution used as ground truth."""

import numpy as np

from .errors import DimensionError


def procrustes_solve(X, Y) -> np.ndarray:
    """Unitary ``U`` minimizing ``||UX - Y||_F``.

    With ``Y X^H = W S Z^H`` the minimizer is ``W Z^H``.  When ``Y X^H`` is
    rank deficient any orthonormal completion the SVD returns is optimal.
    """
    X, Y = np.asarray(X), np.asarray(Y)
    if X.ndim != 2 or X.shape != Y.shape:
        raise DimensionError(f"X and Y must share a 2-d shape, got {X.shape} and {Y.shape}")
    w, _, zh = np.linalg.svd(Y @ X.conj().T)
    return w @ zh


def nearest_unitary(U) -> np.ndarray:
    """Polar projection onto the unitary group (``procrustes_solve(I, U)``)."""
    U = np.asarray(U)
    return procrustes_solve(np.eye(U.shape[0]), U)
