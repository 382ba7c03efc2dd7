"""Numerical kernels for the coordinate-descent solvers.

Hermitian quadratic forms against a cached inverse covariance, rank-one
(Sherman-Morrison) maintenance of that inverse together with its
log-determinant, and a closed-form real-cubic root solver. Everything
operates on plain numpy arrays of dtype complex128; validation is limited
to what each kernel genuinely relies on.
"""

from __future__ import annotations

import math

import numpy as np

from .exceptions import ContractViolationError, DegenerateEquationError, SingularUpdateError

#: Smallest denominator / log argument treated as non-singular.
DENOMINATOR_FLOOR = 1e-14

#: Leading coefficients below this fall through to the next lower degree.
LEADING_FLOOR = 1e-14

_NEWTON_STEPS = 3


def _check_pair(minv: np.ndarray, v: np.ndarray, name: str) -> None:
    if minv.ndim != 2 or minv.shape[0] != minv.shape[1]:
        raise ContractViolationError(f"{name}: matrix must be square, got shape {minv.shape}")
    if v.shape != (minv.shape[0],):
        raise ContractViolationError(
            f"{name}: vector of length {v.shape} does not match matrix of order {minv.shape[0]}"
        )


def quadratic_form(minv: np.ndarray, v: np.ndarray) -> float:
    """Real part of ``v^H @ minv @ v`` for Hermitian ``minv``."""
    minv = np.asarray(minv)
    v = np.asarray(v)
    _check_pair(minv, v, "quadratic_form")
    return float(np.real(np.vdot(v, minv @ v)))


def weighted_quadratic_form(minv: np.ndarray, middle: np.ndarray, v: np.ndarray) -> float:
    """Real part of ``v^H @ minv @ middle @ minv @ v`` for Hermitian arguments."""
    minv = np.asarray(minv)
    middle = np.asarray(middle)
    v = np.asarray(v)
    _check_pair(minv, v, "weighted_quadratic_form")
    if middle.shape != minv.shape:
        raise ContractViolationError(
            f"weighted_quadratic_form: middle factor shape {middle.shape} "
            f"does not match {minv.shape}"
        )
    w = minv @ v
    return float(np.real(np.vdot(w, middle @ w)))


def log_det_rank_one_increment(
    minv: np.ndarray, v: np.ndarray, c: float, mv: np.ndarray | None = None
) -> float:
    """Change of ``log det M`` when ``M`` gains ``c * v @ v^H``.

    ``minv`` is the inverse of the current ``M``; the increment is
    ``log(1 + c * v^H @ minv @ v)``. Pass ``mv = minv @ v`` if already
    available to skip the matrix-vector product.
    """
    minv = np.asarray(minv)
    v = np.asarray(v)
    _check_pair(minv, v, "log_det_rank_one_increment")
    if mv is None:
        mv = minv @ v
    c = float(c)
    arg = c * float(np.real(np.vdot(v, mv)))
    if 1.0 + arg <= DENOMINATOR_FLOOR:
        raise SingularUpdateError(
            f"rank-one update makes the matrix singular: 1 + c v^H M^-1 v = {1.0 + arg:.3e}"
        )
    return math.log1p(arg)


def rank_one_inverse_update(
    minv: np.ndarray, v: np.ndarray, c: float, mv: np.ndarray | None = None
) -> np.ndarray:
    """Update ``minv`` in place to the inverse of ``M + c * v @ v^H``.

    Sherman-Morrison: ``minv -= (c / (1 + c v^H minv v)) (minv v)(minv v)^H``.
    The result is re-symmetrized so diagonal entries stay exactly real.
    Returns the updated array (same object).
    """
    minv = np.asarray(minv)
    v = np.asarray(v)
    _check_pair(minv, v, "rank_one_inverse_update")
    c = float(c)
    if c == 0.0:
        return minv
    if mv is None:
        mv = minv @ v
    quad = float(np.real(np.vdot(v, mv)))
    denom = 1.0 + c * quad
    if denom <= DENOMINATOR_FLOOR:
        raise SingularUpdateError(
            f"rank-one update makes the matrix singular: 1 + c v^H M^-1 v = {denom:.3e}"
        )
    minv -= (c / denom) * np.outer(mv, mv.conj())
    # Drift off the Hermitian manifold compounds over thousands of updates;
    # (A + A^H)/2 costs O(L^2) and keeps the diagonal exactly real.
    minv += minv.conj().T
    minv *= 0.5
    return minv


def _polish_real_roots(coeffs: tuple[float, ...], roots: list[float]) -> list[float]:
    """A few guarded Newton steps per root against the given polynomial."""
    polished = []
    for r in roots:
        x = r
        fx = _polyval(coeffs, x)
        for _ in range(_NEWTON_STEPS):
            fpx = _polyval_deriv(coeffs, x)
            if fpx == 0.0:
                break
            step = fx / fpx
            x_new = x - step
            fx_new = _polyval(coeffs, x_new)
            if abs(fx_new) >= abs(fx):
                break
            x, fx = x_new, fx_new
        polished.append(x)
    return polished


def _cbrt(x: float) -> float:
    return math.copysign(abs(x) ** (1.0 / 3.0), x)


def _polyval(coeffs: tuple[float, ...], x: float) -> float:
    acc = 0.0
    for c in coeffs:
        acc = acc * x + c
    return acc


def _polyval_deriv(coeffs: tuple[float, ...], x: float) -> float:
    n = len(coeffs) - 1
    acc = 0.0
    for k, c in enumerate(coeffs[:-1]):
        acc = acc * x + (n - k) * c
    return acc


def solve_cubic_real(c3: float, c2: float, c1: float, c0: float) -> np.ndarray:
    """All distinct real roots of ``c3 d^3 + c2 d^2 + c1 d + c0 = 0``, ascending.

    Leading coefficients smaller than ``LEADING_FLOOR`` in magnitude cascade
    to the quadratic and then linear solve. Roots come from the closed form
    (trigonometric when all three are real, Cardano otherwise) and are
    polished with a few Newton steps, so their accuracy is machine precision
    relative to the local scale of the polynomial.

    Returns an empty array when no real root exists (constant nonzero
    polynomial, or a quadratic with negative discriminant). Raises
    :class:`DegenerateEquationError` for the identically zero polynomial.
    """
    c3, c2, c1, c0 = float(c3), float(c2), float(c1), float(c0)
    for name, c in (("c3", c3), ("c2", c2), ("c1", c1), ("c0", c0)):
        if not math.isfinite(c):
            raise ContractViolationError(f"solve_cubic_real: coefficient {name} is not finite")

    if abs(c3) < LEADING_FLOOR:
        if abs(c2) < LEADING_FLOOR:
            if abs(c1) < LEADING_FLOOR:
                if c0 == 0.0:
                    raise DegenerateEquationError(
                        "all coefficients are zero; every real number is a root"
                    )
                return np.empty(0)
            return np.array([-c0 / c1])
        disc = c1 * c1 - 4.0 * c2 * c0
        if disc < 0.0:
            return np.empty(0)
        sq = math.sqrt(disc)
        # Citardauq for the smaller-magnitude root avoids cancellation.
        q = -0.5 * (c1 + math.copysign(sq, c1))
        roots = [q / c2] if q == 0.0 else [q / c2, c0 / q]
        roots = _polish_real_roots((c2, c1, c0), roots)
        return _finish_roots(roots)

    # Depressed cubic t^3 + p t + q with d = t - b2/3.
    b2 = c2 / c3
    b1 = c1 / c3
    b0 = c0 / c3
    p = b1 - b2 * b2 / 3.0
    q = 2.0 * b2 ** 3 / 27.0 - b2 * b1 / 3.0 + b0
    shift = -b2 / 3.0
    half_q = 0.5 * q
    disc = half_q * half_q + (p / 3.0) ** 3

    if disc > 0.0:
        # One real root.
        sq = math.sqrt(disc)
        t = _cbrt(-half_q + sq) + _cbrt(-half_q - sq)
        roots = [t + shift]
    elif p == 0.0:
        # disc <= 0 forces q = 0 here: triple root.
        roots = [shift]
    else:
        # Three real roots (possibly repeated), p < 0.
        m = math.sqrt(-p / 3.0)
        cos_arg = min(1.0, max(-1.0, -half_q / (m ** 3)))
        phi = math.acos(cos_arg)
        roots = [2.0 * m * math.cos((phi - 2.0 * math.pi * k) / 3.0) + shift for k in range(3)]

    roots = _polish_real_roots((c3, c2, c1, c0), roots)
    return _finish_roots(roots)


def _finish_roots(roots: list[float]) -> np.ndarray:
    """Sort ascending and drop duplicates.

    Repeated roots are only determined to about sqrt(eps), so the merge
    tolerance sits at 1e-7 relative to the root scale.
    """
    roots = sorted(roots)
    kept: list[float] = []
    for r in roots:
        if kept and abs(r - kept[-1]) <= 1e-7 * max(1.0, abs(r)):
            continue
        kept.append(r)
    return np.array(kept)
