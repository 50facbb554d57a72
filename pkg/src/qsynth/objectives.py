"""Objective functions, gradients, the constant Hessian, and process fidelity.

Gradients follow the expressions ``(UX - Y) X^H`` and ``U (U^H U - I)``
directly.  Both satisfy ``d/dt h(U + t E) = Re <E, grad>`` with the
Frobenius inner product ``<A, B> = Tr(A^H B)``, so the real part of an
entry is the derivative along the real part of ``U`` and the imaginary
part the derivative along its imaginary part.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError


def _check_shapes(U, X, Y):
    if U.ndim != 2 or X.ndim != 2 or Y.ndim != 2:
        raise DimensionError("operands must be 2-d arrays")
    if U.shape[1] != X.shape[0] or Y.shape != (U.shape[0], X.shape[1]):
        raise DimensionError(
            f"incompatible shapes U{U.shape}, X{X.shape}, Y{Y.shape}"
        )


def frobenius_objective(U, X, Y) -> float:
    """``0.5 * ||UX - Y||_F^2``."""
    U, X, Y = map(np.asarray, (U, X, Y))
    _check_shapes(U, X, Y)
    r = U @ X - Y
    return 0.5 * float(np.vdot(r, r).real)


def frobenius_gradient(U, X, Y) -> np.ndarray:
    U, X, Y = map(np.asarray, (U, X, Y))
    _check_shapes(U, X, Y)
    return (U @ X - Y) @ X.conj().T


def _gram_defect(U):
    U = np.asarray(U)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise DimensionError(f"unitarization needs a square matrix, got {U.shape}")
    return U.conj().T @ U - np.eye(U.shape[0])


def unitarization_objective(U) -> float:
    """``0.25 * ||U^H U - I||_F^2``."""
    e = _gram_defect(U)
    return 0.25 * float(np.vdot(e, e).real)


def unitarization_gradient(U) -> np.ndarray:
    return np.asarray(U) @ _gram_defect(U)


def unitarity_defect(U) -> float:
    """``||U^H U - I||_F``."""
    return float(np.linalg.norm(_gram_defect(U)))


def procrustes_hessian(X, n=None) -> np.ndarray:
    """Fourth-order Hessian ``H[j, k, m, l] = delta_jm sum_c conj(X[k, c]) X[l, c]``.

    The Hessian of the Frobenius objective does not depend on ``U``.
    """
    X = np.asarray(X)
    if X.ndim != 2:
        raise DimensionError("X must be 2-d")
    if n is None:
        n = X.shape[0]
    if X.shape[0] != n:
        raise DimensionError(f"X has {X.shape[0]} rows, expected {n}")
    gram = X.conj() @ X.T
    return np.einsum("jm,kl->jkml", np.eye(n), gram)


def flatten_hessian(H: np.ndarray) -> np.ndarray:
    """Row-major re-indexing: entry ``(j*n + k, m*n + l)``; equals ``kron(I, conj(X) X^T)``."""
    n = H.shape[0]
    return H.reshape(n * n, n * n)


def flat_procrustes_hessian(X) -> np.ndarray:
    X = np.asarray(X)
    return np.kron(np.eye(X.shape[0]), X.conj() @ X.T)


def process_fidelity(U, V) -> float:
    """Process fidelity of two unitary channels, ``|Tr(U^H V)|^2 / d^2``."""
    U, V = np.asarray(U), np.asarray(V)
    if U.shape != V.shape or U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise DimensionError(f"fidelity needs equal square operands, got {U.shape} and {V.shape}")
    d = U.shape[0]
    t = np.vdot(U, V)
    return float(min(1.0, abs(t) ** 2 / d**2))


def fidelity_error(U, V) -> float:
    """``1 - process_fidelity(U, V)``, clipped at 0."""
    return max(0.0, 1.0 - process_fidelity(U, V))
