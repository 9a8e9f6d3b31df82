"""Dense complex matrix kernels shared by the channel model and detectors.

Matrices are plain numpy arrays (complex128 / float64). The functions here
add the contracts the simulator relies on: explicit failure on singular
inversion, a PSD-safe square root, and seeded Gaussian matrix draws.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .rng import RngStream

# Reciprocal condition numbers below this are indistinguishable from
# singular in double precision.
RCOND_FLOOR = 1e-12

# Eigenvalues of a nominally PSD matrix may round slightly negative; anything
# below this is treated as genuinely indefinite.
PSD_EIG_FLOOR = -1e-10


class SingularMatrixError(ValueError):
    """Inversion rejected: matrix is singular or numerically untrustworthy."""


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with an explicit conformability check."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape[-1] != b.shape[-2 if b.ndim > 1 else 0]:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def invert_lu(a: np.ndarray) -> np.ndarray:
    """Invert a square matrix via LU factorization.

    Raises SingularMatrixError when the factorization breaks down or the
    estimated reciprocal condition number falls below RCOND_FLOOR. Callers
    must treat that as "flag this subcarrier", never as a zero result.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise SingularMatrixError("matrix contains non-finite entries")
    with np.errstate(all="ignore"), warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        try:
            lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
        except (scipy.linalg.LinAlgError, ValueError) as exc:
            raise SingularMatrixError(str(exc)) from exc
    if not np.all(np.isfinite(lu)):
        raise SingularMatrixError("LU factorization produced non-finite factors")
    gecon = scipy.linalg.get_lapack_funcs("gecon", (lu,))
    rcond, _ = gecon(lu, np.linalg.norm(a, 1))
    if rcond < RCOND_FLOOR:
        raise SingularMatrixError(f"reciprocal condition estimate {rcond:.3e} below {RCOND_FLOOR:.0e}")
    return scipy.linalg.lu_solve((lu, piv), np.eye(a.shape[0], dtype=complex), check_finite=False)


def psd_sqrt(r: np.ndarray) -> np.ndarray:
    """Hermitian square root S of a PSD matrix, with S @ S.conj().T == r.

    Uses an eigendecomposition and clamps slightly negative eigenvalues to
    zero, so it stays valid where Cholesky fails (rank-deficient r, e.g.
    fully correlated antenna arrays).
    """
    r = np.asarray(r)
    if r.ndim != 2 or r.shape[0] != r.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {r.shape}")
    if not np.allclose(r, r.conj().T, rtol=1e-10, atol=1e-10):
        raise ValueError("matrix is not Hermitian")
    eigvals, eigvecs = np.linalg.eigh(r)
    if eigvals.min() < PSD_EIG_FLOOR:
        raise ValueError(f"matrix is indefinite (min eigenvalue {eigvals.min():.3e})")
    root = eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))
    return root @ eigvecs.conj().T


def draw_standard_complex_gaussian(rng: RngStream, rows: int, cols: int,
                                   count: int | None = None) -> np.ndarray:
    """Draw i.i.d. circularly-symmetric complex Gaussian matrices.

    Real and imaginary parts are independent N(0, 1/2), so each complex
    entry has unit total variance. With `count` given, returns a stack of
    shape (count, rows, cols) consumed from the stream in one block, which
    is the canonical draw order for multi-matrix generation.
    """
    shape = (2, rows, cols) if count is None else (2, count, rows, cols)
    parts = rng.standard_normal(shape)
    return (parts[0] + 1j * parts[1]) / np.sqrt(2.0)
