"""Input validation helpers.

Small, shared checks that raise :class:`ContractViolationError` with the
offending argument named. Heavyweight checks (Hermitian symmetry, positive
semidefiniteness) are meant for boundaries and tests, not hot loops.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ContractViolationError

HERMITIAN_TOL = 1e-12


def as_complex_matrix(a, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D complex128 array with finite entries."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise ContractViolationError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolationError(f"{name} contains non-finite entries")
    return arr


def as_complex_vector(v, dim: int | None = None, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D complex128 array, optionally of fixed length."""
    arr = np.asarray(v, dtype=np.complex128)
    if arr.ndim != 1:
        raise ContractViolationError(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ContractViolationError(f"{name} must have length {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolationError(f"{name} contains non-finite entries")
    return arr


def as_float_vector(v, dim: int | None = None, name: str = "vector") -> np.ndarray:
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim != 1:
        raise ContractViolationError(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise ContractViolationError(f"{name} must have length {dim}, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ContractViolationError(f"{name} contains non-finite entries")
    return arr


def check_square(a: np.ndarray, name: str = "matrix") -> np.ndarray:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractViolationError(f"{name} must be square, got shape {a.shape}")
    return a


def check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL, name: str = "matrix") -> None:
    """Raise unless ``a`` equals its conjugate transpose within ``tol`` (max norm)."""
    check_square(a, name)
    scale = max(1.0, float(np.abs(a).max())) if a.size else 1.0
    dev = float(np.abs(a - a.conj().T).max()) if a.size else 0.0
    if dev > tol * scale:
        raise ContractViolationError(
            f"{name} is not Hermitian: max asymmetry {dev:.3e} exceeds {tol:.1e}"
        )


def hermitize(a: np.ndarray) -> np.ndarray:
    """Return ``(a + a^H) / 2``; the diagonal comes out exactly real."""
    return (a + a.conj().T) * 0.5


def check_positive(x: float, name: str) -> float:
    x = float(x)
    if not np.isfinite(x) or x <= 0.0:
        raise ContractViolationError(f"{name} must be positive, got {x!r}")
    return x


def check_nonnegative(x: float, name: str) -> float:
    x = float(x)
    if not np.isfinite(x) or x < 0.0:
        raise ContractViolationError(f"{name} must be nonnegative, got {x!r}")
    return x


def check_probability(p: float, name: str, *, allow_one: bool = False) -> float:
    """Validate a probability in (0, 1), or (0, 1] with ``allow_one``."""
    p = float(p)
    upper_ok = (p <= 1.0) if allow_one else (p < 1.0)
    if not np.isfinite(p) or p <= 0.0 or not upper_ok:
        bound = "(0, 1]" if allow_one else "(0, 1)"
        raise ContractViolationError(f"{name} must lie in {bound}, got {p!r}")
    return p


def check_index(i: int, size: int, name: str) -> int:
    i = int(i)
    if not 0 <= i < size:
        raise ContractViolationError(f"{name} must lie in [0, {size}), got {i}")
    return i


def check_activity_values(a: np.ndarray, tol: float = 1e-9) -> None:
    """Raise unless every entry of ``a`` lies in [0, 1] within ``tol``."""
    if a.size and (float(a.min()) < -tol or float(a.max()) > 1.0 + tol):
        raise ContractViolationError(
            f"activity values must lie in [0, 1], got range "
            f"[{float(a.min()):.3e}, {float(a.max()):.3e}]"
        )


def check_nonnegative_values(x: np.ndarray, name: str, tol: float = 1e-9) -> None:
    if x.size and float(x.min()) < -tol:
        raise ContractViolationError(f"{name} must be nonnegative, min is {float(x.min()):.3e}")
