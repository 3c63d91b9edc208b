"""Arithmetic in the prime field GF(p) and polynomials over it.

Polynomials are tuples of int residues, constant term first, with no
trailing zeros; the empty tuple is the zero polynomial (degree -1).
"""

from __future__ import annotations

from math import isqrt

MAX_PRIME = 1 << 31


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p < 4:
        return True
    if p % 2 == 0:
        return False
    for d in range(3, isqrt(p) + 1, 2):
        if p % d == 0:
            return False
    return True


class Field:
    """GF(p) for prime p, 2 <= p < 2**31.  Elements are ints in [0, p)."""

    __slots__ = ("p",)

    def __init__(self, p: int):
        if not (2 <= p < MAX_PRIME):
            raise ValueError(f"modulus {p} out of range [2, 2**31)")
        if not _is_prime(p):
            raise ValueError(f"modulus {p} is not prime")
        self.p = p

    def __repr__(self):
        return f"Field({self.p})"

    def __eq__(self, other):
        return isinstance(other, Field) and other.p == self.p

    def __hash__(self):
        return hash(("Field", self.p))

    def el(self, x: int) -> int:
        return x % self.p

    def add(self, a: int, b: int) -> int:
        return (a + b) % self.p

    def sub(self, a: int, b: int) -> int:
        return (a - b) % self.p

    def neg(self, a: int) -> int:
        return -a % self.p

    def mul(self, a: int, b: int) -> int:
        return (a * b) % self.p

    def inv(self, a: int) -> int:
        # extended Euclid on (a, p); p prime so gcd is 1 for a != 0
        a %= self.p
        if a == 0:
            raise ZeroDivisionError("inverse of 0 in GF(p)")
        r0, r1 = self.p, a
        s0, s1 = 0, 1
        while r1:
            q = r0 // r1
            r0, r1 = r1, r0 - q * r1
            s0, s1 = s1, s0 - q * s1
        return s0 % self.p

    def div(self, a: int, b: int) -> int:
        if b % self.p == 0:
            raise ZeroDivisionError("division by 0 in GF(p)")
        return (a * self.inv(b)) % self.p


# -- polynomials -----------------------------------------------------------

Poly = tuple  # int coefficients, constant term first, no trailing zeros


def poly_normalize(field: Field, raw) -> Poly:
    """Reduce coefficients mod p and strip trailing zeros (zero poly -> ())."""
    c = [x % field.p for x in raw]
    while c and c[-1] == 0:
        c.pop()
    return tuple(c)


def poly_degree(a: Poly) -> int:
    """Degree with the zero polynomial taken as degree -1."""
    return len(a) - 1


def poly_is_zero(a: Poly) -> bool:
    return len(a) == 0


def poly_monic(field: Field, a: Poly) -> Poly:
    if not a:
        return a
    lead = a[-1]
    if lead == 1:
        return a
    inv = field.inv(lead)
    return tuple(field.mul(inv, x) for x in a)

def poly_add(field: Field, a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    out = [(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0) for i in range(n)]
    return poly_normalize(field, out)


def poly_sub(field: Field, a: Poly, b: Poly) -> Poly:
    n = max(len(a), len(b))
    out = [(a[i] if i < len(a) else 0) - (b[i] if i < len(b) else 0) for i in range(n)]
    return poly_normalize(field, out)


def poly_mul(field: Field, a: Poly, b: Poly) -> Poly:
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return poly_normalize(field, out)


def poly_divmod(field: Field, a: Poly, b: Poly) -> tuple[Poly, Poly]:
    """Quotient and remainder of a by b (b nonzero), deg(rem) < deg(b)."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    r = list(a)
    q = [0] * max(len(a) - len(b) + 1, 0)
    inv_lead = field.inv(b[-1])
    for shift in range(len(a) - len(b), -1, -1):
        coef = field.mul(r[shift + len(b) - 1], inv_lead)
        if coef:
            q[shift] = coef
            for j, y in enumerate(b):
                r[shift + j] = (r[shift + j] - coef * y) % field.p
    return poly_normalize(field, q), poly_normalize(field, r)


def poly_valuation(a: Poly) -> int:
    """Multiplicity of the factor x (index of first nonzero coeff); 0 for the zero poly."""
    for i, x in enumerate(a):
        if x:
            return i
    return 0


def poly_shift(field: Field, a: Poly, e: int) -> Poly:
    """Multiply by x**e (e >= 0)."""
    if not a:
        return a
    return poly_normalize(field, (0,) * e + a)


def poly_to_str(field: Field, a: Poly) -> str:
    """Text form: comma-separated coefficients, constant term first, `mod p` suffix."""
    coeffs = ",".join(str(x) for x in a) if a else "0"
    return f"{coeffs} mod {field.p}"


def poly_from_str(text: str) -> tuple[Field, Poly]:
    body, _, mod = text.partition(" mod ")
    if not mod:
        raise ValueError(f"missing 'mod p' suffix in {text!r}")
    field = Field(int(mod))
    coeffs = [int(x) for x in body.split(",")] if body.strip() else []
    return field, poly_normalize(field, coeffs)
