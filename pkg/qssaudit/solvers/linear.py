"""Dense LU solves with a pivot check and an ∞-norm condition estimate."""

import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np
import scipy.linalg

from ..exceptions import SingularMatrix

PIVOT_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class LuFactorization:
    lu: np.ndarray
    piv: np.ndarray
    condition: float

    @property
    def size(self) -> int:
        return self.lu.shape[0]

    def solve(self, b: np.ndarray) -> np.ndarray:
        if self.size == 0:
            return np.zeros(0)
        return scipy.linalg.lu_solve((self.lu, self.piv), b, check_finite=False)


def factorize(A) -> LuFactorization:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"matrix must be square, got shape {A.shape}")
    n = A.shape[0]
    if n == 0:
        return LuFactorization(A.copy(), np.zeros(0, dtype=int), 1.0)
    if not np.all(np.isfinite(A)):
        raise SingularMatrix("matrix has non-finite entries")

    norm = np.linalg.norm(A, np.inf)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(A, check_finite=False)
    smallest = float(np.min(np.abs(np.diag(lu))))
    if norm == 0.0 or smallest < PIVOT_TOL * norm:
        raise SingularMatrix(
            f"pivot {smallest:.3e} below {PIVOT_TOL:g}·‖A‖∞ ({norm:.3e})"
        )

    inverse = scipy.linalg.lu_solve((lu, piv), np.eye(n), check_finite=False)
    condition = float(norm * np.linalg.norm(inverse, np.inf))
    return LuFactorization(lu, piv, condition)


def solve_linear(A, b) -> Tuple[np.ndarray, float]:
    """Solve A x = b; returns x and the ∞-norm condition estimate of A."""
    fact = factorize(A)
    return fact.solve(np.asarray(b, dtype=float)), fact.condition
