"""Independent serial reference implementations used as ground truth.

These deliberately share nothing with the systolic modules beyond the field
layer, so agreement between the two paths is evidence rather than tautology.
"""

from __future__ import annotations

import math

import numpy as np

from .gfield import Field, Poly, poly_divmod, poly_is_zero, poly_monic


class SingularMatrixError(ArithmeticError):
    """A pivot (leading principal minor) vanished during elimination."""


def euclid_poly_gcd(field: Field, a: Poly, b: Poly) -> Poly:
    """Monic GCD by repeated polynomial division with remainder."""
    if poly_is_zero(a) and poly_is_zero(b):
        raise ValueError("gcd(0, 0) is undefined")
    while not poly_is_zero(b):
        _, r = poly_divmod(field, a, b)
        a, b = b, r
    return poly_monic(field, a)


def euclid_int_gcd(a: int, b: int) -> int:
    if a == 0 and b == 0:
        raise ValueError("gcd(0, 0) is undefined")
    a, b = abs(a), abs(b)
    while b:
        a, b = b, a % b
    return a


def binary_int_gcd(a: int, b: int) -> int:
    """Binary Euclidean algorithm; requires odd positive a and b."""
    if a <= 0 or b <= 0 or a % 2 == 0 or b % 2 == 0:
        raise ValueError("binary_int_gcd needs odd positive inputs")
    t = abs(a - b)
    while t != 0:
        while t % 2 == 0:
            t //= 2
        if a > b:
            a = t
        else:
            b = t
        t = abs(a - b)
    return a


def dense_lu_solve_nopivot(m, b, tol: float | None = None):
    """Solve m x = b by Gaussian elimination without pivoting; returns (x, U).

    Raises SingularMatrixError when a pivot is (nearly) zero, matching the
    breakdown behaviour of the band recursions this oracle validates.
    """
    a = np.array(m, dtype=float)
    rhs = np.array(b, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n) or rhs.shape != (n,):
        raise ValueError("shape mismatch")
    if tol is None:
        tol = 1e-12 * max(np.max(np.abs(a)), 1.0)
    for k in range(n):
        piv = a[k, k]
        if abs(piv) <= tol:
            raise SingularMatrixError(f"zero pivot at step {k}")
        for i in range(k + 1, n):
            f = a[i, k] / piv
            if f != 0.0:
                a[i, k:] -= f * a[k, k:]
                rhs[i] -= f * rhs[k]
            a[i, k] = 0.0
    x = np.zeros(n)
    for k in range(n - 1, -1, -1):
        x[k] = (rhs[k] - a[k, k + 1:] @ x[k + 1:]) / a[k, k]
    return x, a


def serial_cyclic_jacobi(m, tol: float = 1e-12, max_sweeps: int = 30):
    """Cyclic-by-rows Jacobi for a symmetric matrix.

    Returns (eigenvalues, eigenvectors, sweeps); column j of the eigenvector
    matrix pairs with eigenvalue j.  Rotation angles are capped at pi/4.
    """
    a = np.array(m, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, atol=1e-12 * max(1.0, np.max(np.abs(a)))):
        raise ValueError("matrix must be symmetric")
    v = np.eye(n)
    norm = np.linalg.norm(a)
    sweeps = 0

    def off2():
        m = a.copy()
        np.fill_diagonal(m, 0.0)
        return np.sum(m * m)

    while sweeps < max_sweeps and off2() > (tol * max(norm, 1.0)) ** 2:
        for i in range(n - 1):
            for j in range(i + 1, n):
                apq = a[i, j]
                if apq == 0.0:
                    continue
                tau = (a[j, j] - a[i, i]) / (2.0 * apq)
                sign = 1.0 if tau >= 0.0 else -1.0
                t = sign / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                rot = np.eye(n)
                rot[i, i] = c
                rot[j, j] = c
                rot[i, j] = s
                rot[j, i] = -s
                a = rot.T @ a @ rot
                v = v @ rot
        sweeps += 1
    return np.diag(a).copy(), v, sweeps
