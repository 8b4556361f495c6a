"""Truncated Taylor (jet) arithmetic in complex coordinates.

A jet stores all mixed Wirtinger partial derivatives of a scalar field at a
point, up to total order ``MAX_ORDER`` (4).  Coefficients are Taylor
coefficients (derivative divided by alpha!*beta!), so multiplication is a
plain truncated convolution.  Coefficient arrays may carry trailing batch
axes: shape ``(n_terms, *batch)`` over a batch of base points, which is how
the quadrature and assembly code evaluates thousands of points at once.

All operations are pure; jets are immutable by convention.
"""

from __future__ import annotations

import itertools
import math
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .errors import (
    DivisionByZeroJet,
    IndexOutOfRange,
    JetOrderError,
    LogOfNonpositive,
    NotRealValued,
)

MAX_ORDER = 4

# constant term magnitudes below this are treated as zero divisors
DIV_TOL = 1e-300


class MultiIndex(NamedTuple):
    """Holomorphic/antiholomorphic derivative orders (alpha | beta)."""

    alpha: tuple
    beta: tuple

    @property
    def total(self):
        return sum(self.alpha) + sum(self.beta)


def _factorial_prod(exponents):
    out = 1
    for e in exponents:
        out *= math.factorial(e)
    return out


class JetSpace:
    """Index tables for dense jets in ``m`` complex variables at one order."""

    def __init__(self, m: int, order: int):
        if order > MAX_ORDER:
            raise JetOrderError(f"jet order {order} exceeds maximum {MAX_ORDER}")
        if order < 0:
            raise JetOrderError(f"jet order {order} is negative")
        self.m = m
        self.order = order
        exps = []
        for total in range(order + 1):
            block = [
                e
                for e in itertools.product(range(total + 1), repeat=2 * m)
                if sum(e) == total
            ]
            block.sort()
            exps.extend(block)
        # exponent vector layout: (alpha_1..alpha_m, beta_1..beta_m)
        self.exps = [(e[:m], e[m:]) for e in exps]
        self.index = {ab: i for i, ab in enumerate(self.exps)}
        self.n_terms = len(self.exps)
        conj = [self.index[(b, a)] for (a, b) in self.exps]
        self.conj_perm = np.asarray(conj, dtype=np.intp)
        self.factorials = np.asarray(
            [_factorial_prod(a) * _factorial_prod(b) for (a, b) in self.exps],
            dtype=np.float64,
        )
        self._mul_table = None
        self._deriv_tables = {}

    def mul_table(self):
        if self._mul_table is None:
            pairs = []
            for i1, (a1, b1) in enumerate(self.exps):
                t1 = sum(a1) + sum(b1)
                for i2, (a2, b2) in enumerate(self.exps):
                    if t1 + sum(a2) + sum(b2) > self.order:
                        continue
                    a = tuple(x + y for x, y in zip(a1, a2))
                    b = tuple(x + y for x, y in zip(b1, b2))
                    pairs.append((self.index[(a, b)], i1, i2))
            pairs.sort()
            out = np.asarray([p[0] for p in pairs], dtype=np.intp)
            i1 = np.asarray([p[1] for p in pairs], dtype=np.intp)
            i2 = np.asarray([p[2] for p in pairs], dtype=np.intp)
            # group boundaries for reduceat; every output index occurs
            starts = np.searchsorted(out, np.arange(self.n_terms))
            self._mul_table = (i1, i2, starts)
        return self._mul_table

    def deriv_table(self, alpha, beta):
        """Gather indices + factorial multipliers for d^alpha dbar^beta."""
        key = (tuple(alpha), tuple(beta))
        if key not in self._deriv_tables:
            k = sum(alpha) + sum(beta)
            target = jet_space(self.m, self.order - k)
            src = np.empty(target.n_terms, dtype=np.intp)
            mult = np.empty(target.n_terms, dtype=np.float64)
            for i, (a, b) in enumerate(target.exps):
                aa = tuple(x + y for x, y in zip(a, alpha))
                bb = tuple(x + y for x, y in zip(b, beta))
                src[i] = self.index[(aa, bb)]
                mult[i] = (_factorial_prod(aa) * _factorial_prod(bb)) / (
                    _factorial_prod(a) * _factorial_prod(b)
                )
            self._deriv_tables[key] = (target, src, mult)
        return self._deriv_tables[key]


@lru_cache(maxsize=None)
def jet_space(m: int, order: int) -> JetSpace:
    return JetSpace(m, order)


class Jet:
    """Dense truncated Taylor expansion at a (possibly batched) base point."""

    __slots__ = ("space", "point", "coeffs", "is_real")

    def __init__(self, space, point, coeffs, is_real=False):
        self.space = space
        self.point = np.asarray(point, dtype=np.complex128)
        self.coeffs = np.asarray(coeffs, dtype=np.complex128)
        self.is_real = bool(is_real)

    # --- construction ----------------------------------------------------

    @classmethod
    def constant(cls, m, point, value, order=MAX_ORDER):
        space = jet_space(m, order)
        point = np.asarray(point, dtype=np.complex128)
        batch = point.shape[:-1]
        value = np.asarray(value, dtype=np.complex128)
        coeffs = np.zeros((space.n_terms,) + batch, dtype=np.complex128)
        coeffs[0] = value
        return cls(space, point, coeffs, is_real=bool(np.all(value.imag == 0.0)))

    @property
    def order(self):
        return self.space.order

    @property
    def m(self):
        return self.space.m

    @property
    def batch_shape(self):
        return self.coeffs.shape[1:]

    def copy(self, coeffs=None, is_real=None):
        return Jet(
            self.space,
            self.point,
            self.coeffs if coeffs is None else coeffs,
            self.is_real if is_real is None else is_real,
        )

    # --- coefficient access ----------------------------------------------

    def coefficient(self, alpha, beta):
        """Taylor coefficient (derivative / (alpha! * beta!))."""
        idx = self.space.index.get((tuple(alpha), tuple(beta)))
        if idx is None:
            raise JetOrderError(
                f"multi-index ({alpha}|{beta}) outside jet of order {self.order}"
            )
        return self.coeffs[idx]

    def partial(self, alpha, beta):
        """True mixed Wirtinger partial at the base point."""
        alpha, beta = tuple(alpha), tuple(beta)
        value = self.coefficient(alpha, beta)
        return value * (_factorial_prod(alpha) * _factorial_prod(beta))

    def constant_term(self):
        return self.coeffs[0]

    def coefficients(self):
        """Iterate (MultiIndex, coefficient) pairs."""
        for i, (a, b) in enumerate(self.space.exps):
            yield MultiIndex(a, b), self.coeffs[i]

    # --- structural operations --------------------------------------------

    def truncate(self, order):
        if order > self.order:
            raise JetOrderError(f"cannot extend jet of order {self.order} to {order}")
        target = jet_space(self.m, order)
        return Jet(target, self.point, self.coeffs[: target.n_terms], self.is_real)

    def derivative(self, alpha, beta):
        """Jet of the mixed partial d^alpha dbar^beta f (order drops)."""
        alpha, beta = tuple(alpha), tuple(beta)
        k = sum(alpha) + sum(beta)
        if k > self.order:
            raise JetOrderError("derivative order exceeds jet order")
        target, src, mult = self.space.deriv_table(alpha, beta)
        coeffs = self.coeffs[src] * mult.reshape((-1,) + (1,) * len(self.batch_shape))
        # pure-holomorphic/antiholomorphic derivative counts swap the
        # conjugation symmetry, so the real flag survives only when both
        # derivative orders agree slotwise
        real = self.is_real and alpha == beta
        return Jet(target, self.point, coeffs, real)

    def conj(self):
        return Jet(
            self.space,
            self.point,
            np.conj(self.coeffs[self.space.conj_perm]),
            self.is_real,
        )

    # --- arithmetic --------------------------------------------------------

    def _check_compatible(self, other):
        if self.space is not other.space:
            raise JetOrderError(
                "jet mismatch: operands must share variable count and order"
            )
        if self.point.shape != other.point.shape or not np.array_equal(
            self.point, other.point
        ):
            raise JetOrderError("jet mismatch: operands must share the base point")

    def __add__(self, other):
        if isinstance(other, Jet):
            self._check_compatible(other)
            return Jet(
                self.space,
                self.point,
                self.coeffs + other.coeffs,
                self.is_real and other.is_real,
            )
        return self._add_scalar(other)

    __radd__ = __add__

    def _add_scalar(self, s):
        s = complex(s)
        coeffs = self.coeffs.copy()
        coeffs[0] = coeffs[0] + s
        return Jet(self.space, self.point, coeffs, self.is_real and s.imag == 0.0)

    def __neg__(self):
        return Jet(self.space, self.point, -self.coeffs, self.is_real)

    def __sub__(self, other):
        if isinstance(other, Jet):
            self._check_compatible(other)
            return Jet(
                self.space,
                self.point,
                self.coeffs - other.coeffs,
                self.is_real and other.is_real,
            )
        return self._add_scalar(-complex(other))

    def __rsub__(self, other):
        return (-self)._add_scalar(other)

    def __mul__(self, other):
        if isinstance(other, Jet):
            self._check_compatible(other)
            i1, i2, starts = self.space.mul_table()
            prod = self.coeffs[i1] * other.coeffs[i2]
            coeffs = np.add.reduceat(prod, starts, axis=0)
            return Jet(
                self.space, self.point, coeffs, self.is_real and other.is_real
            )
        s = complex(other)
        return Jet(self.space, self.point, self.coeffs * s, self.is_real and s.imag == 0.0)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        s = complex(other)
        if abs(s) < DIV_TOL:
            raise DivisionByZeroJet("division by zero scalar")
        return self * (1.0 / s)

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, k):
        return self.pow_int(k)

    # --- series compositions -----------------------------------------------

    def _nilpotent_part(self):
        coeffs = self.coeffs.copy()
        coeffs[0] = 0.0
        return Jet(self.space, self.point, coeffs, self.is_real)

    def _horner(self, series):
        """Evaluate sum_k series[k] * (f - f0)^k; series[k] arrays broadcast."""
        h = self._nilpotent_part()
        acc = Jet.constant(self.m, self.point, series[-1], self.order)
        for k in range(len(series) - 2, -1, -1):
            acc = acc * h  # allocates fresh coefficients
            acc.coeffs[0] += series[k]
        return acc

    def reciprocal(self):
        c = self.constant_term()
        if np.any(np.abs(c) < DIV_TOL):
            raise DivisionByZeroJet("jet constant term vanishes")
        series = [(-1.0) ** k / c ** (k + 1) for k in range(self.order + 1)]
        out = self._horner(series)
        out.is_real = self.is_real
        return out

    def _require_positive_real(self, what):
        if not self.is_real:
            raise NotRealValued(f"{what} requires a real-flagged jet")
        c = self.constant_term()
        if np.any(c.real <= 0.0):
            raise LogOfNonpositive(f"{what} requires a positive constant term")
        return c.real

    def log(self):
        c = self._require_positive_real("log")
        series = [np.log(c)]
        for k in range(1, self.order + 1):
            series.append((-1.0) ** (k + 1) / (k * c**k))
        out = self._horner(series)
        out.is_real = True
        return out

    def exp(self):
        c = self.constant_term()
        e = np.exp(c)
        series = [e / math.factorial(k) for k in range(self.order + 1)]
        out = self._horner(series)
        out.is_real = self.is_real
        return out

    def pow_real(self, s):
        """f**s for real s via the binomial series; needs f real and positive."""
        c = self._require_positive_real("pow_real")
        series = []
        binom = 1.0
        for k in range(self.order + 1):
            series.append(binom * c ** (s - k))
            binom *= (s - k) / (k + 1)
        out = self._horner(series)
        out.is_real = True
        return out

    def pow_int(self, k):
        k = int(k)
        if k < 0:
            return self.reciprocal().pow_int(-k)
        result = Jet.constant(self.m, self.point, np.ones(self.batch_shape), self.order)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def real_part(self):
        out = (self + self.conj()) * 0.5
        out.is_real = True
        return out

    def imag_part(self):
        out = (self - self.conj()) * complex(0.0, -0.5)
        out.is_real = True
        return out

    def hermitized(self):
        """Average with its own conjugate-symmetrization and flag real.

        Kills roundoff asymmetry in jets that are real by construction
        (determinants of Hermitian jet matrices, for instance).
        """
        coeffs = 0.5 * (self.coeffs + np.conj(self.coeffs[self.space.conj_perm]))
        return Jet(self.space, self.point, coeffs, True)

    def reality_defect(self):
        """Max |coeff(a,b) - conj(coeff(b,a))| (zero for honestly real jets)."""
        return float(
            np.max(np.abs(self.coeffs - np.conj(self.coeffs[self.space.conj_perm])))
        )


def jet_variable(point, index, kind, order=MAX_ORDER):
    """Jet of the coordinate function z_index (or conj(z_index)) at point.

    ``index`` is 1-based; ``kind`` is 'holomorphic' or 'antiholomorphic'.
    """
    point = np.asarray(point, dtype=np.complex128)
    m = point.shape[-1]
    if not 1 <= index <= m:
        raise IndexOutOfRange(f"coordinate index {index} out of range 1..{m}")
    if kind in ("holomorphic", "z"):
        holo = True
    elif kind in ("antiholomorphic", "zbar"):
        holo = False
    else:
        raise ValueError(f"unknown variable kind {kind!r}")
    space = jet_space(m, order)
    batch = point.shape[:-1]
    coeffs = np.zeros((space.n_terms,) + batch, dtype=np.complex128)
    value = point[..., index - 1]
    coeffs[0] = value if holo else np.conj(value)
    if order >= 1:
        e = tuple(1 if j == index - 1 else 0 for j in range(m))
        zero = (0,) * m
        key = (e, zero) if holo else (zero, e)
        coeffs[space.index[key]] = 1.0
    return Jet(space, point, coeffs, is_real=False)


def jet_compose(op, args, exponent=None):
    """Dispatch a composition by name (mirrors the documented operation set)."""
    if op == "add":
        return args[0] + args[1]
    if op == "sub":
        return args[0] - args[1]
    if op == "mul":
        return args[0] * args[1]
    if op == "div":
        return args[0] / args[1]
    if op == "pow_int":
        return args[0].pow_int(exponent)
    if op == "pow_real":
        return args[0].pow_real(exponent)
    if op == "log":
        return args[0].log()
    if op == "exp":
        return args[0].exp()
    if op == "conj":
        return args[0].conj()
    if op == "re":
        return args[0].real_part()
    if op == "im":
        return args[0].imag_part()
    raise ValueError(f"unknown jet operation {op!r}")


def partial(f: Jet, alpha, beta):
    """Mixed Wirtinger partial of a jet at its base point."""
    return f.partial(alpha, beta)
