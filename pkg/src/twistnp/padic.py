"""Truncated p-adic towers: unramified Z_q mod p^M and Z_q[pi_1].

A context fixes the prime, the degree, the working precision M, a
deterministic defining polynomial (the smallest-encoded monic irreducible
over F_p) and a deterministic multiplicative generator of the residue
field.  Elements are coefficient vectors over the power basis, reduced mod
p^M.  The single ramified layer adjoins pi_1 = zeta_p - 1, a root of
((1+X)^p - 1)/X, with v_p(pi_1) = 1/(p-1).

All ring operations are exact mod p^M: divisions only ever happen by
p-adic units, so precision never degrades silently.  Valuations are
certified: a vector that vanishes mod p^M reports "at least M" rather
than a number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import sympy

# ---------------------------------------------------------------------------
# residue-field polynomial helpers (coefficients little-endian, mod p)


def poly_trim(a: tuple[int, ...]) -> tuple[int, ...]:
    i = len(a)
    while i > 0 and a[i - 1] == 0:
        i -= 1
    return a[:i]


def poly_mul_mod(a, b, modulus, p):
    """Product of a and b modulo (modulus, p)."""
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return poly_divmod_rem(tuple(out), modulus, p)


def poly_divmod_rem(a, modulus, p):
    """Remainder of a modulo the monic modulus, coefficients mod p."""
    a = list(a)
    deg_m = len(modulus) - 1
    for i in range(len(a) - 1, deg_m - 1, -1):
        c = a[i] % p
        if c:
            for j in range(deg_m + 1):
                a[i - deg_m + j] = (a[i - deg_m + j] - c * modulus[j]) % p
    return poly_trim(tuple(x % p for x in a[:deg_m]))


def poly_pow_mod(a, k, modulus, p):
    result = (1,)
    base = poly_divmod_rem(a, modulus, p)
    while k:
        if k & 1:
            result = poly_mul_mod(result, base, modulus, p)
        base = poly_mul_mod(base, base, modulus, p)
        k >>= 1
    return result


def poly_gcd(a, b, p):
    a, b = poly_trim(a), poly_trim(b)
    while b:
        inv = pow(b[-1], -1, p)
        monic = tuple(c * inv % p for c in b)
        r = poly_divmod_rem(a, monic, p) if len(a) >= len(b) else a
        if len(a) < len(b):
            a, b = b, a
            continue
        a, b = b, r
    return a


def is_irreducible(poly, p):
    """Rabin test for a monic polynomial over F_p."""
    deg = len(poly) - 1
    if deg == 1:
        return True
    x = (0, 1)
    t = x
    frob = [x]
    for _ in range(deg):
        t = poly_pow_mod(t, p, poly, p)
        frob.append(t)
    if frob[deg] != poly_divmod_rem(x, poly, p):
        return False
    for r in sympy.primefactors(deg):
        diff = list(frob[deg // r])
        while len(diff) < 2:
            diff.append(0)
        diff[1] = (diff[1] - 1) % p
        g = poly_gcd(poly_trim(tuple(diff)), poly, p)
        if len(g) > 1:
            return False
    return True


@lru_cache(maxsize=None)
def smallest_irreducible(p: int, deg: int) -> tuple[int, ...]:
    """Monic irreducible of given degree with smallest base-p encoding.

    Degree 1 returns plain X.
    """
    if deg == 1:
        return (0, 1)
    for code in range(p**deg):
        lower = []
        rem = code
        for _ in range(deg):
            lower.append(rem % p)
            rem //= p
        poly = tuple(lower) + (1,)
        if is_irreducible(poly, p):
            return poly
    raise AssertionError("no irreducible polynomial found")


@lru_cache(maxsize=None)
def find_generator(p: int, deg: int) -> tuple[int, ...]:
    """Smallest-encoded generator of the multiplicative group of F_{p^deg}."""
    modulus = smallest_irreducible(p, deg)
    order = p**deg - 1
    primes = sympy.primefactors(order)
    for code in range(1, p**deg):
        elem = []
        rem = code
        for _ in range(deg):
            elem.append(rem % p)
            rem //= p
        z = poly_trim(tuple(elem))
        if all(poly_pow_mod(z, order // r, modulus, p) != (1,) for r in primes):
            return z
    raise AssertionError("no generator found")


# ---------------------------------------------------------------------------
# unramified contexts


class PrecisionError(ArithmeticError):
    """Raised when a certified valuation cannot be produced at precision M."""


@dataclass(frozen=True)
class Valuation:
    """A p-adic valuation statement: exact, or a certified lower bound."""

    value: Fraction
    exact: bool = True

    @classmethod
    def at_least(cls, bound) -> "Valuation":
        return cls(value=Fraction(bound), exact=False)

    def pi_units(self, p: int) -> Fraction:
        return self.value * (p - 1)


class ZqContext:
    """Arithmetic context for Z_q mod p^M with q = p^deg."""

    def __init__(self, p: int, deg: int, M: int):
        if not sympy.isprime(p):
            raise ValueError(f"p must be prime, got {p}")
        if deg < 1 or M < 1:
            raise ValueError("deg and M must be >= 1")
        self.p = p
        self.deg = deg
        self.M = M
        self.pM = p**M
        self.modulus = smallest_irreducible(p, deg)
        self.generator = find_generator(p, deg)
        self._xpow = self._build_xpow()
        self._trace_table = self._build_trace_table()
        self._frob_matrix = None
        self._pi_xpow = None

    # -- construction helpers

    def _build_xpow(self):
        """X^{deg+t} mod modulus, coefficients mod p^M, for t = 0..deg-2."""
        deg, pM = self.deg, self.pM
        top = [(-self.modulus[i]) % pM for i in range(deg)]
        table = [tuple(top)]
        for _ in range(deg - 2):
            prev = table[-1]
            shifted = [0] + list(prev[:-1])
            carry = prev[-1]
            if carry:
                shifted = [(shifted[i] + carry * top[i]) % pM for i in range(deg)]
            table.append(tuple(shifted))
        return table

    def _build_trace_table(self):
        """Tr(x^v) for v = 0..deg-1 via traces of companion-matrix powers."""
        deg, pM = self.deg, self.pM
        comp = [[0] * deg for _ in range(deg)]
        for i in range(1, deg):
            comp[i][i - 1] = 1
        for i in range(deg):
            comp[i][deg - 1] = (-self.modulus[i]) % pM
        table = [deg % pM]
        mat = [[1 if i == j else 0 for j in range(deg)] for i in range(deg)]
        for _ in range(1, deg):
            mat = [[sum(mat[i][k] * comp[k][j] for k in range(deg)) % pM
                    for j in range(deg)] for i in range(deg)]
            table.append(sum(mat[i][i] for i in range(deg)) % pM)
        return table

    # -- element constructors

    def elem(self, coeffs) -> "ZqElem":
        coeffs = tuple(int(c) % self.pM for c in coeffs)
        if len(coeffs) < self.deg:
            coeffs = coeffs + (0,) * (self.deg - len(coeffs))
        assert len(coeffs) == self.deg
        return ZqElem(self, coeffs)

    def zero(self) -> "ZqElem":
        return self.elem(())

    def one(self) -> "ZqElem":
        return self.from_int(1)

    def from_int(self, n: int) -> "ZqElem":
        return self.elem((n,))

    def _reduce_product(self, prod: list[int]) -> tuple[int, ...]:
        deg, pM = self.deg, self.pM
        out = list(prod[:deg])
        for t in range(len(prod) - deg):
            c = prod[deg + t] % pM
            if c:
                row = self._xpow[t]
                for i in range(deg):
                    out[i] = (out[i] + c * row[i]) % pM
        return tuple(x % pM for x in out)

    def mul(self, a: "ZqElem", b: "ZqElem") -> "ZqElem":
        deg = self.deg
        if deg == 1:
            return ZqElem(self, ((a.coeffs[0] * b.coeffs[0]) % self.pM,))
        prod = [0] * (2 * deg - 1)
        ac, bc = a.coeffs, b.coeffs
        for i in range(deg):
            ai = ac[i]
            if ai:
                for j in range(deg):
                    prod[i + j] += ai * bc[j]
        return ZqElem(self, self._reduce_product(prod))

    def inverse(self, a: "ZqElem") -> "ZqElem":
        """Inverse of a unit, by lifting the residue inverse."""
        p = self.p
        res = poly_trim(tuple(c % p for c in a.coeffs))
        if not res:
            raise ZeroDivisionError("element is not a unit")
        # extended Euclid in F_p[x] against the modulus
        r0, r1 = self.modulus, res
        s0, s1 = (), (1,)
        while r1:
            inv_lead = pow(r1[-1], -1, p)
            monic = tuple(c * inv_lead % p for c in r1)
            q, rem = _poly_quorem(r0, monic, p)
            q = tuple(c * inv_lead % p for c in q)
            r0, r1 = r1, rem
            s0, s1 = s1, _poly_sub(s0, _poly_mul_plain(q, s1, p), p)
        lead_inv = pow(r0[-1], -1, p)
        inv_res = tuple(c * lead_inv % p for c in s0)
        w = self.elem(inv_res)
        two = self.from_int(2)
        iterations = max(1, math.ceil(math.log2(self.M))) + 1
        for _ in range(iterations):
            w = self.mul(w, two - self.mul(a, w))
        assert self.mul(a, w).is_one()
        return w

    def pow(self, a: "ZqElem", k: int) -> "ZqElem":
        if k < 0:
            return self.pow(self.inverse(a), -k)
        result = self.one()
        base = a
        while k:
            if k & 1:
                result = self.mul(result, base)
            base = self.mul(base, base)
            k >>= 1
        return result

    def teichmuller(self, residue) -> "ZqElem":
        """The Teichmuller lift of a residue-field element.

        Accepts a coefficient iterable or a ZqElem (read mod p).  Iterating
        z -> z^{p^deg} gains one p-adic digit per step; zero maps to zero.
        """
        if isinstance(residue, ZqElem):
            coeffs = residue.coeffs
        else:
            coeffs = tuple(residue)
        z = self.elem(tuple(c % self.p for c in coeffs))
        if z.is_zero():
            return z
        q = self.p**self.deg
        for _ in range(self.M + 1):
            z = self.pow(z, q)
        return z

    def frobenius_matrix(self):
        """Matrix of the lifted Frobenius on the power basis, mod p^M."""
        if self._frob_matrix is not None:
            return self._frob_matrix
        x = self.elem((0, 1))
        z = self.pow(x, self.p)
        # Newton-lift z to an exact root of the defining polynomial
        for _ in range(max(1, math.ceil(math.log2(self.M))) + 1):
            fz = self._eval_modulus(z)
            dfz = self._eval_modulus_derivative(z)
            z = z - self.mul(fz, self.inverse(dfz))
        assert self._eval_modulus(z).is_zero()
        cols = [self.one()]
        for _ in range(self.deg - 1):
            cols.append(self.mul(cols[-1], z))
        self._frob_matrix = [c.coeffs for c in cols]
        return self._frob_matrix

    def _eval_modulus(self, z: "ZqElem") -> "ZqElem":
        acc = self.zero()
        for c in reversed(self.modulus):
            acc = self.mul(acc, z) + self.from_int(c)
        return acc

    def _eval_modulus_derivative(self, z: "ZqElem") -> "ZqElem":
        acc = self.zero()
        for i in range(len(self.modulus) - 1, 0, -1):
            acc = self.mul(acc, z) + self.from_int(i * self.modulus[i])
        return acc

    def frobenius(self, a: "ZqElem") -> "ZqElem":
        mat = self.frobenius_matrix()
        out = [0] * self.deg
        for v, cv in enumerate(a.coeffs):
            if cv:
                col = mat[v]
                for i in range(self.deg):
                    out[i] = (out[i] + cv * col[i]) % self.pM
        return ZqElem(self, tuple(out))

    def trace_zp(self, a: "ZqElem") -> int:
        """Absolute trace to Z_p, as an integer mod p^M."""
        return sum(c * t for c, t in zip(a.coeffs, self._trace_table)) % self.pM

    # -- ramified layer

    def pi_xpow_table(self):
        """Reduction rows for pi^(p-1+t) against ((1+X)^p - 1)/X."""
        if self._pi_xpow is not None:
            return self._pi_xpow
        p, pM = self.p, self.pM
        top = [(-math.comb(p, i + 1)) % pM for i in range(p - 1)]
        table = [tuple(top)]
        for _ in range(p - 3):
            prev = table[-1]
            shifted = [0] + list(prev[:-1])
            carry = prev[-1]
            if carry:
                shifted = [(shifted[i] + carry * top[i]) % pM for i in range(p - 1)]
            table.append(tuple(shifted))
        self._pi_xpow = table
        return table

    def ram_zero(self) -> "RamifiedElem":
        return RamifiedElem(self, (self.zero(),) * (self.p - 1))

    def ram_one(self) -> "RamifiedElem":
        return RamifiedElem(self, (self.one(),) + (self.zero(),) * (self.p - 2))

    def ram_from_zq(self, a: "ZqElem") -> "RamifiedElem":
        return RamifiedElem(self, (a,) + (self.zero(),) * (self.p - 2))

    def __repr__(self):
        return f"ZqContext(p={self.p}, deg={self.deg}, M={self.M})"


def _poly_quorem(a, b, p):
    """Quotient and remainder of a by monic b over F_p."""
    a = list(a)
    db = len(b) - 1
    q = [0] * max(1, len(a) - db)
    for i in range(len(a) - 1, db - 1, -1):
        c = a[i] % p
        if c:
            q[i - db] = c
            for j in range(db + 1):
                a[i - db + j] = (a[i - db + j] - c * b[j]) % p
    return poly_trim(tuple(q)), poly_trim(tuple(x % p for x in a[:db]))


def _poly_mul_plain(a, b, p):
    if not a or not b:
        return ()
    out = [0] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        if ai:
            for j, bj in enumerate(b):
                out[i + j] = (out[i + j] + ai * bj) % p
    return poly_trim(tuple(out))


def _poly_sub(a, b, p):
    n = max(len(a), len(b))
    a = tuple(a) + (0,) * (n - len(a))
    b = tuple(b) + (0,) * (n - len(b))
    return poly_trim(tuple((x - y) % p for x, y in zip(a, b)))


class ZqElem:
    """Element of Z_q mod p^M over the power basis of its context."""

    __slots__ = ("ctx", "coeffs")

    def __init__(self, ctx: ZqContext, coeffs: tuple[int, ...]):
        self.ctx = ctx
        self.coeffs = coeffs

    def __add__(self, other):
        other = self._coerce(other)
        pM = self.ctx.pM
        return ZqElem(self.ctx, tuple((a + b) % pM for a, b in zip(self.coeffs, other.coeffs)))

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        pM = self.ctx.pM
        return ZqElem(self.ctx, tuple((a - b) % pM for a, b in zip(self.coeffs, other.coeffs)))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, int):
            pM = self.ctx.pM
            return ZqElem(self.ctx, tuple((other * c) % pM for c in self.coeffs))
        return self.ctx.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        pM = self.ctx.pM
        return ZqElem(self.ctx, tuple((-c) % pM for c in self.coeffs))

    def __pow__(self, k: int):
        return self.ctx.pow(self, k)

    def __eq__(self, other):
        if isinstance(other, int):
            other = self.ctx.from_int(other)
        return isinstance(other, ZqElem) and self.coeffs == other.coeffs

    def __hash__(self):
        return hash(self.coeffs)

    def _coerce(self, other) -> "ZqElem":
        if isinstance(other, int):
            return self.ctx.from_int(other)
        if other.ctx is not self.ctx:
            raise ValueError("mixed contexts")
        return other

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def is_one(self) -> bool:
        return self.coeffs[0] == 1 and all(c == 0 for c in self.coeffs[1:])

    def vp(self) -> int | None:
        """min v_p over coordinates; None when zero mod p^M."""
        best = None
        for c in self.coeffs:
            if c == 0:
                continue
            v = 0
            while c % self.ctx.p == 0:
                c //= self.ctx.p
                v += 1
            if best is None or v < best:
                best = v
            if best == 0:
                return 0
        return best

    def residue(self) -> tuple[int, ...]:
        return tuple(c % self.ctx.p for c in self.coeffs)

    def __repr__(self):
        return f"Zq{self.coeffs}"


class RamifiedElem:
    """Element of Z_q[pi_1] as a vector over 1, pi_1, ..., pi_1^{p-2}."""

    __slots__ = ("ctx", "comps")

    def __init__(self, ctx: ZqContext, comps):
        comps = tuple(comps)
        assert len(comps) == ctx.p - 1
        self.ctx = ctx
        self.comps = comps

    def __add__(self, other):
        return RamifiedElem(self.ctx, tuple(a + b for a, b in zip(self.comps, other.comps)))

    def __sub__(self, other):
        return RamifiedElem(self.ctx, tuple(a - b for a, b in zip(self.comps, other.comps)))

    def __neg__(self):
        return RamifiedElem(self.ctx, tuple(-a for a in self.comps))

    def scale(self, factor) -> "RamifiedElem":
        """Multiply by an int or ZqElem scalar."""
        return RamifiedElem(self.ctx, tuple(c * factor for c in self.comps))

    def __mul__(self, other):
        if isinstance(other, (int, ZqElem)):
            return self.scale(other)
        ctx = self.ctx
        n = ctx.p - 1
        prod: list[ZqElem] = [ctx.zero()] * (2 * n - 1)
        for i, a in enumerate(self.comps):
            if a.is_zero():
                continue
            for j, b in enumerate(other.comps):
                if not b.is_zero():
                    prod[i + j] = prod[i + j] + ctx.mul(a, b)
        table = ctx.pi_xpow_table()
        out = list(prod[:n])
        for t in range(n - 1):
            c = prod[n + t]
            if c.is_zero():
                continue
            row = table[t]
            for i in range(n):
                if row[i]:
                    out[i] = out[i] + c * row[i]
        return RamifiedElem(ctx, tuple(out))

    __rmul__ = __mul__

    def divide_by_unit_int(self, k: int) -> "RamifiedElem":
        if k % self.ctx.p == 0:
            raise ZeroDivisionError(f"{k} is not a p-adic unit")
        inv = pow(k, -1, self.ctx.pM)
        return self.scale(inv)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.comps)

    def __eq__(self, other):
        return isinstance(other, RamifiedElem) and self.comps == other.comps

    def __hash__(self):
        return hash(self.comps)

    def valuation(self) -> Valuation:
        """Certified p-adic valuation.

        Distinct basis positions carry distinct fractional parts j/(p-1),
        so the minimum over positions is the valuation of the sum.
        """
        p = self.ctx.p
        best = None
        for j, comp in enumerate(self.comps):
            v = comp.vp()
            if v is None:
                continue
            cand = Fraction(j, p - 1) + v
            if best is None or cand < best:
                best = cand
        if best is None:
            return Valuation.at_least(self.ctx.M)
        return Valuation(best)

    def congruent_mod_pi(self, other: "RamifiedElem", k: int) -> bool:
        """Whether self - other has pi-valuation at least k (pi-units)."""
        diff = self - other
        val = diff.valuation()
        if not val.exact:
            return True
        return val.pi_units(self.ctx.p) >= k

    def __repr__(self):
        return f"Ram({self.comps})"


@lru_cache(maxsize=None)
def make_context(p: int, deg: int, M: int) -> ZqContext:
    """Deterministic context; repeated calls return the same object."""
    return ZqContext(p, deg, M)


def teichmuller(ctx: ZqContext, residue) -> ZqElem:
    return ctx.teichmuller(residue)


def valuation(x: RamifiedElem) -> Valuation:
    return x.valuation()


def zeta_p_power(ctx: ZqContext, n: int) -> RamifiedElem:
    """(1 + pi_1)^(n mod p), the additive character value at n."""
    n = n % ctx.p
    comps = [ctx.zero()] * (ctx.p - 1)
    if n <= ctx.p - 2:
        for j in range(n + 1):
            comps[j] = ctx.from_int(math.comb(n, j))
        return RamifiedElem(ctx, comps)
    # n = p - 1: one reduction step against the minimal polynomial
    for j in range(ctx.p - 1):
        comps[j] = ctx.from_int(math.comb(n, j))
    elem = RamifiedElem(ctx, comps)
    top = ctx.pi_xpow_table()[0]
    corr = RamifiedElem(ctx, tuple(ctx.from_int(t) for t in top))
    return elem + corr.scale(math.comb(n, ctx.p - 1))
