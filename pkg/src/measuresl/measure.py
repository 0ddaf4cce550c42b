"""Measures on an interval and left-continuous piecewise functions.

A measure is a finite list of point masses plus a piecewise-constant density.
Integrals use the half-open convention: for c < x the integral from c to x is
taken over [c, x), it vanishes for x = c and changes sign when c > x.
"""
from __future__ import annotations

import math
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import PositionOutsideInterval

_GL_X, _GL_W = np.polynomial.legendre.leggauss(16)
_PANEL_TYPE = 6.0
_SERIES_TERMS = 18
_INV_FACT = [1.0 / math.factorial(k) for k in range(2 * _SERIES_TERMS + 3)]


def csd(mu2, t):
    """Return (cosh(mu t), sinh(mu t)/mu, (cosh(mu t) - 1)/mu^2) with mu^2 = mu2.

    All three are entire in mu2, so no branch of the square root is needed.
    A Taylor series in mu2*t^2 is used where that product is small.
    """
    mu2 = np.asarray(mu2, dtype=complex)
    t = np.asarray(t, dtype=float)
    mu2, t = np.broadcast_arrays(mu2, t)
    w = mu2 * t * t
    C = np.empty(w.shape, dtype=complex)
    S = np.empty(w.shape, dtype=complex)
    D = np.empty(w.shape, dtype=complex)
    small = np.abs(w) < 1.0
    if small.any():
        ws = w[small]
        cc = np.zeros_like(ws)
        ss = np.zeros_like(ws)
        dd = np.zeros_like(ws)
        for k in range(_SERIES_TERMS - 1, -1, -1):
            cc = cc * ws + _INV_FACT[2 * k]
            ss = ss * ws + _INV_FACT[2 * k + 1]
            dd = dd * ws + _INV_FACT[2 * k + 2]
        ts = t[small]
        C[small] = cc
        S[small] = ss * ts
        D[small] = dd * ts * ts
    big = ~small
    if big.any():
        m2 = mu2[big]
        m = np.sqrt(m2)
        arg = m * t[big]
        with np.errstate(over="ignore", invalid="ignore"):
            ch = np.cosh(arg)
            C[big] = ch
            S[big] = np.sinh(arg) / m
            D[big] = (ch - 1.0) / m2
    return C, S, D


# ---------------------------------------------------------------------------
# cells of a piecewise function; t is the offset from the left knot


class ConstCell:
    rate = 0.0

    def __init__(self, value):
        self.value = complex(value)

    def eval(self, t):
        return np.full(np.shape(t), self.value, dtype=complex)

    def deriv(self, t):
        return np.zeros(np.shape(t), dtype=complex)


class HypCell:
    """c0 + c1*C(s) + c2*S(s) + c3*D(s) with C, S, D from `csd` and s = t - anchor.

    Covers constant-coefficient cell solutions and polynomials of degree <= 2
    (mu2 = 0 gives C = 1, S = s, D = s^2/2). Anchoring at the right end of a
    cell keeps solutions that were propagated leftwards free of cancellation.
    """

    def __init__(self, mu2, c0, c1, c2, c3, anchor=0.0):
        self.mu2 = complex(mu2)
        self.c = (complex(c0), complex(c1), complex(c2), complex(c3))
        self.anchor = float(anchor)
        self.rate = math.sqrt(abs(self.mu2))

    def eval(self, t):
        C, S, D = csd(self.mu2, np.asarray(t, dtype=float) - self.anchor)
        c0, c1, c2, c3 = self.c
        return c0 + c1 * C + c2 * S + c3 * D

    def deriv(self, t):
        C, S, _ = csd(self.mu2, np.asarray(t, dtype=float) - self.anchor)
        _, c1, c2, c3 = self.c
        return c2 * C + (c1 * self.mu2 + c3) * S


class FuncCell:
    """Cell given by callables; `rate` bounds the exponential type per unit length."""

    def __init__(self, fn: Callable, rate: float, deriv: Callable | None = None):
        self._fn = fn
        self._deriv = deriv
        self.rate = float(rate)

    def eval(self, t):
        return np.asarray(self._fn(np.asarray(t, dtype=float)), dtype=complex)

    def deriv(self, t):
        if self._deriv is not None:
            return np.asarray(self._deriv(np.asarray(t, dtype=float)), dtype=complex)
        # five-point stencil fallback
        t = np.asarray(t, dtype=float)
        h = 1e-3 * max(1.0, float(np.max(np.abs(t))) if t.size else 1.0)
        return (-self.eval(t + 2 * h) + 8 * self.eval(t + h) - 8 * self.eval(t - h) + self.eval(t - 2 * h)) / (12 * h)


class PiecewiseFunction:
    """Left-continuous function on [knots[0], knots[-1]].

    `left[i]` is f(knots[i]) (left-continuous value; at the first knot the limit
    from the right), `right[i]` is f(knots[i]+) (at the last knot the limit from
    the left). Between knots the value is `cells[i].eval(x - knots[i])`.
    """

    def __init__(self, knots, left, right, cells: Sequence):
        self.knots = np.asarray(knots, dtype=float)
        self.left = np.asarray(left, dtype=complex)
        self.right = np.asarray(right, dtype=complex)
        self.cells = list(cells)
        if len(self.cells) != len(self.knots) - 1:
            raise ValueError("need exactly one cell per knot interval")
        if np.any(np.diff(self.knots) <= 0):
            raise ValueError("knots must be strictly increasing")

    @property
    def lo(self) -> float:
        return float(self.knots[0])

    @property
    def hi(self) -> float:
        return float(self.knots[-1])

    # -- construction helpers
    @classmethod
    def constant(cls, value, lo, hi):
        v = complex(value)
        return cls([lo, hi], [v, v], [v, v], [ConstCell(v)])

    @classmethod
    def step(cls, breaks, values, point_values: dict | None = None):
        """Step function with `values[i]` on (breaks[i], breaks[i+1]).

        Left-continuous: the value at an interior break is the cell value to
        its left unless overridden in `point_values`.
        """
        breaks = np.asarray(breaks, dtype=float)
        values = np.asarray(values, dtype=complex)
        n = len(breaks)
        left = np.empty(n, dtype=complex)
        right = np.empty(n, dtype=complex)
        left[0] = right[0] = values[0]
        left[-1] = right[-1] = values[-1]
        left[1:-1] = values[:-1]
        right[1:-1] = values[1:]
        f = cls(breaks, left, right, [ConstCell(v) for v in values])
        if point_values:
            f = f.with_point_values(point_values)
        return f

    @classmethod
    def indicator(cls, x0, lo, hi, value=1.0):
        """value at the single point x0, zero elsewhere."""
        zero = cls.constant(0.0, lo, hi)
        return zero.with_point_values({x0: value})

    def with_point_values(self, point_values: dict):
        knots = list(self.knots)
        for x in point_values:
            self._check(x)
            if x not in knots:
                knots.append(float(x))
        f = self.refined(sorted(knots))
        left = f.left.copy()
        for x, v in point_values.items():
            i = int(np.searchsorted(f.knots, x))
            left[i] = v
        return PiecewiseFunction(f.knots, left, f.right, f.cells)

    def refined(self, knots):
        """Same function on a finer knot set."""
        knots = np.asarray(sorted(set(float(k) for k in knots)), dtype=float)
        if knots[0] < self.lo or knots[-1] > self.hi:
            raise PositionOutsideInterval(knots[0] if knots[0] < self.lo else knots[-1], self.lo, self.hi)
        cells = []
        for i in range(len(knots) - 1):
            j = self._cell_index(0.5 * (knots[i] + knots[i + 1]))
            cells.append(_shifted(self.cells[j], knots[i] - self.knots[j]))
        return PiecewiseFunction(knots, self(knots), self.plus(knots), cells)

    # -- evaluation
    def _check(self, x):
        if not (self.lo <= x <= self.hi):
            raise PositionOutsideInterval(x, self.lo, self.hi)

    def _cell_index(self, x):
        i = int(np.searchsorted(self.knots, x, side="right")) - 1
        return min(max(i, 0), len(self.cells) - 1)

    def _evaluate(self, x, knot_values):
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        if xs.size and (xs.min() < self.lo or xs.max() > self.hi):
            bad = xs[(xs < self.lo) | (xs > self.hi)][0]
            raise PositionOutsideInterval(float(bad), self.lo, self.hi)
        out = np.empty(xs.shape, dtype=complex)
        pos = np.searchsorted(self.knots, xs)
        on_knot = (pos < len(self.knots)) & (self.knots[np.minimum(pos, len(self.knots) - 1)] == xs)
        out[on_knot] = knot_values[pos[on_knot]]
        inner = ~on_knot
        if inner.any():
            idx = pos[inner] - 1
            xi = xs[inner]
            vals = np.empty(xi.shape, dtype=complex)
            for j in np.unique(idx):
                m = idx == j
                vals[m] = self.cells[j].eval(xi[m] - self.knots[j])
            out[inner] = vals
        if np.ndim(x) == 0:
            return complex(out[0])
        return out

    def __call__(self, x):
        return self._evaluate(x, self.left)

    def plus(self, x):
        """Right limit f(x+)."""
        return self._evaluate(x, self.right)

    def derivative(self, x):
        """Classical derivative at points strictly inside cells."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(xs.shape, dtype=complex)
        for k, xv in enumerate(xs):
            self._check(xv)
            j = self._cell_index(xv)
            out[k] = self.cells[j].deriv(np.array([xv - self.knots[j]]))[0]
        return complex(out[0]) if np.ndim(x) == 0 else out

    def right_continuous(self):
        """The function x -> f(x+)."""
        return PiecewiseFunction(self.knots, self.right, self.right, self.cells)

    # -- algebra
    def _binary(self, other, op, rate_op, deriv_op=None):
        if not isinstance(other, PiecewiseFunction):
            c = complex(other)
            other = PiecewiseFunction.constant(c, self.lo, self.hi)
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo >= hi:
            raise ValueError("functions have disjoint domains")
        ks = np.concatenate([self.knots, other.knots])
        ks = np.unique(ks[(ks >= lo) & (ks <= hi)])
        cells = []
        for i in range(len(ks) - 1):
            mid = 0.5 * (ks[i] + ks[i + 1])
            a = self.cells[self._cell_index(mid)]
            b = other.cells[other._cell_index(mid)]
            oa = ks[i] - self.knots[self._cell_index(mid)]
            ob = ks[i] - other.knots[other._cell_index(mid)]
            if isinstance(a, ConstCell) and isinstance(b, ConstCell):
                cells.append(ConstCell(op(a.value, b.value)))
                continue
            cells.append(_combined_cell(a, oa, b, ob, op, rate_op(a.rate, b.rate), deriv_op))
        left = op(self(ks), other(ks))
        right = op(self.plus(ks), other.plus(ks))
        return PiecewiseFunction(ks, left, right, cells)

    def __mul__(self, other):
        if np.isscalar(other):
            c = complex(other)
            return self.map_cells(lambda v: c * v, c)
        return self._binary(other, lambda u, v: u * v, lambda r, s: r + s, "mul")

    __rmul__ = __mul__

    def __add__(self, other):
        return self._binary(other, lambda u, v: u + v, max, "add")

    __radd__ = __add__

    def __sub__(self, other):
        return self._binary(other, lambda u, v: u - v, max, "sub")

    def __neg__(self):
        return self * -1.0

    def map_cells(self, fn, scale=None):
        """Apply a linear pointwise map (scalar multiple or conjugation)."""
        cells = []
        for c in self.cells:
            if isinstance(c, ConstCell):
                cells.append(ConstCell(fn(c.value)))
            elif isinstance(c, HypCell) and scale is not None:
                cells.append(HypCell(c.mu2, *(scale * k for k in c.c), anchor=c.anchor))
            else:
                cells.append(FuncCell(lambda t, c=c: fn(c.eval(t)), c.rate, lambda t, c=c: fn(c.deriv(t))))
        return PiecewiseFunction(self.knots, fn(self.left), fn(self.right), cells)

    def conj(self):
        return self.map_cells(np.conj)


def _shifted(cell, offset):
    if offset == 0.0 or isinstance(cell, ConstCell):
        return cell
    return FuncCell(lambda t: cell.eval(t + offset), cell.rate, lambda t: cell.deriv(t + offset))


def _combined_cell(a, oa, b, ob, op, rate, kind):
    def fn(t):
        return op(a.eval(t + oa), b.eval(t + ob))

    if kind == "mul":
        def deriv(t):
            return a.deriv(t + oa) * b.eval(t + ob) + a.eval(t + oa) * b.deriv(t + ob)
    elif kind in ("add", "sub"):
        def deriv(t):
            return op(a.deriv(t + oa), b.deriv(t + ob))
    else:
        deriv = None
    return FuncCell(fn, rate, deriv)


# ---------------------------------------------------------------------------


class Measure:
    """Complex measure on (a, b): point masses plus a piecewise-constant density.

    `atoms` is an iterable of (x, weight); `density` an iterable of
    (x0, x1, value) cells. Coincident atoms and overlapping cells add up,
    zero-weight atoms are dropped. Cell ends may be infinite.
    """

    def __init__(self, a: float, b: float, atoms: Iterable = (), density: Iterable = ()):
        a = float(a)
        b = float(b)
        if not a < b:
            raise ValueError("interval must satisfy a < b")
        self.a, self.b = a, b
        merged: dict[float, complex] = {}
        for x, w in atoms:
            x = float(x)
            if not (a < x < b):
                raise PositionOutsideInterval(x, a, b)
            merged[x] = merged.get(x, 0.0) + complex(w)
        xs = sorted(k for k, v in merged.items() if v != 0)
        self.atom_x = np.array(xs, dtype=float)
        self.atom_w = np.array([merged[x] for x in xs], dtype=complex)

        cells = [(float(x0), float(x1), complex(v)) for x0, x1, v in density]
        for x0, x1, _ in cells:
            if not (a <= x0 < x1 <= b):
                raise ValueError(f"density cell ({x0}, {x1}) not inside [{a}, {b}]")
        if cells:
            br = np.unique(np.array([c[0] for c in cells] + [c[1] for c in cells]))
            vals = np.zeros(len(br) - 1, dtype=complex)
            for x0, x1, v in cells:
                i0 = int(np.searchsorted(br, x0))
                i1 = int(np.searchsorted(br, x1))
                vals[i0:i1] += v
            # merge neighbouring cells with equal values
            keep = [0]
            for i in range(1, len(br) - 1):
                if vals[i] != vals[i - 1]:
                    keep.append(i)
            keep.append(len(br) - 1)
            self.breaks = br[keep]
            self.values = vals[keep[:-1]]
        else:
            self.breaks = np.array([], dtype=float)
            self.values = np.array([], dtype=complex)

    def __repr__(self):
        return (f"Measure(({self.a}, {self.b}), atoms={list(zip(self.atom_x.tolist(), self.atom_w.tolist()))}, "
                f"cells={self.cells()})")

    @classmethod
    def zero(cls, a, b):
        return cls(a, b)

    @classmethod
    def lebesgue(cls, a, b, value=1.0, lo=None, hi=None):
        lo = a if lo is None else lo
        hi = b if hi is None else hi
        return cls(a, b, density=[(lo, hi, value)])

    def cells(self):
        return [(float(self.breaks[i]), float(self.breaks[i + 1]), complex(self.values[i]))
                for i in range(len(self.values)) if self.values[i] != 0]

    def atoms(self):
        return list(zip(self.atom_x.tolist(), self.atom_w.tolist()))

    # -- lookup
    def atom_mass(self, x) -> complex:
        i = int(np.searchsorted(self.atom_x, x))
        if i < len(self.atom_x) and self.atom_x[i] == x:
            return complex(self.atom_w[i])
        return 0j

    def density_at(self, x, side="right") -> complex:
        """Density on the cell containing x (the cell to the `side` at a break)."""
        if len(self.breaks) == 0:
            return 0j
        i = int(np.searchsorted(self.breaks, x, side="right" if side == "right" else "left")) - 1
        if 0 <= i < len(self.values):
            return complex(self.values[i])
        return 0j

    # -- algebra
    def __add__(self, other: "Measure") -> "Measure":
        if (self.a, self.b) != (other.a, other.b):
            raise ValueError("measures live on different intervals")
        return Measure(self.a, self.b, self.atoms() + other.atoms(), self.cells() + other.cells())

    def __mul__(self, c) -> "Measure":
        c = complex(c)
        return Measure(self.a, self.b, [(x, c * w) for x, w in self.atoms()],
                       [(x0, x1, c * v) for x0, x1, v in self.cells()])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def variation(self) -> "Measure":
        """The total variation measure |mu|."""
        return Measure(self.a, self.b, [(x, abs(w)) for x, w in self.atoms()],
                       [(x0, x1, abs(v)) for x0, x1, v in self.cells()])

    # -- properties
    def is_zero(self) -> bool:
        return len(self.atom_x) == 0 and not np.any(self.values != 0)

    def is_real(self) -> bool:
        return bool(np.all(self.atom_w.imag == 0) and np.all(self.values.imag == 0))

    def is_nonnegative(self) -> bool:
        return self.is_real() and bool(np.all(self.atom_w.real >= 0) and np.all(self.values.real >= 0))

    def support_components(self) -> list[tuple[float, float]]:
        """Closed support as a sorted list of disjoint closed intervals (points as (x, x))."""
        pieces = [(x, x) for x in self.atom_x.tolist()]
        pieces += [(x0, x1) for x0, x1, _ in self.cells()]
        pieces.sort()
        out: list[list[float]] = []
        for lo, hi in pieces:
            if out and lo <= out[-1][1]:
                out[-1][1] = max(out[-1][1], hi)
            else:
                out.append([lo, hi])
        return [(lo, hi) for lo, hi in out]

    def support_bounds(self) -> tuple[float, float]:
        comps = self.support_components()
        if not comps:
            return math.nan, math.nan
        return comps[0][0], comps[-1][1]

    def support_size(self) -> float:
        """Number of support points (inf when a density is present)."""
        if self.cells():
            return math.inf
        return float(len(self.atom_x))

    def total_variation(self, lo, hi) -> float:
        """|mu|([lo, hi))."""
        lo, hi = float(lo), float(hi)
        if hi < lo:
            lo, hi = hi, lo
        m = (self.atom_x >= lo) & (self.atom_x < hi)
        tv = float(np.abs(self.atom_w[m]).sum())
        for x0, x1, v in self.cells():
            s, e = max(x0, lo), min(x1, hi)
            if e > s:
                tv += abs(v) * (e - s)
        return tv

    def mass(self, c, x) -> complex:
        """mu([c, x)) with the sign convention of `integrate`."""
        return integrate(1.0, self, c, x)

    def distribution_function(self, c, lo, hi) -> PiecewiseFunction:
        """x -> integral of d(mu) from c to x on [lo, hi] (left-continuous)."""
        knots = {float(lo), float(hi), float(c)}
        knots.update(x for x in self.atom_x.tolist() if lo <= x <= hi)
        knots.update(x for x in self.breaks.tolist() if lo <= x <= hi)
        ks = np.array(sorted(knots))
        left = np.array([self.mass(c, k) for k in ks], dtype=complex)
        right = left + np.array([self.atom_mass(k) for k in ks])
        right[-1] = left[-1]
        cells = []
        for i in range(len(ks) - 1):
            d = self.density_at(0.5 * (ks[i] + ks[i + 1]))
            cells.append(HypCell(0.0, right[i], 0.0, d, 0.0) if d != 0 else ConstCell(right[i]))
        return PiecewiseFunction(ks, left, right, cells)


def integrate(f, mu: Measure, c, x) -> complex:
    """Lebesgue-Stieltjes integral of f against mu from c to x (half-open convention).

    `f` is a PiecewiseFunction or a scalar constant. Atoms contribute
    weight * f(atom) with the left-continuous value.
    """
    c = float(c)
    x = float(x)
    if x == c:
        return 0j
    if x < c:
        return -integrate(f, mu, x, c)
    for p in (c, x):
        if not (mu.a <= p <= mu.b):
            raise PositionOutsideInterval(p, mu.a, mu.b)
    if not isinstance(f, PiecewiseFunction):
        f = PiecewiseFunction.constant(f, c, x)
    if c < f.lo or x > f.hi:
        raise PositionOutsideInterval(c if c < f.lo else x, f.lo, f.hi)

    total = 0j
    m = (mu.atom_x >= c) & (mu.atom_x < x)
    if m.any():
        total += complex(np.dot(mu.atom_w[m], f(mu.atom_x[m])))

    cells = mu.cells()
    if not cells:
        return total
    fk = f.knots[(f.knots > c) & (f.knots < x)]
    for x0, x1, dens in cells:
        s, e = max(x0, c), min(x1, x)
        if e <= s:
            continue
        pts = np.concatenate([[s], fk[(fk > s) & (fk < e)], [e]])
        for lo, hi in zip(pts[:-1], pts[1:]):
            j = f._cell_index(0.5 * (lo + hi))
            total += dens * _cell_integral(f.cells[j], lo - f.knots[j], hi - f.knots[j])
    return total


def _cell_integral(cell, t0, t1) -> complex:
    h = t1 - t0
    if isinstance(cell, ConstCell):
        return cell.value * h
    npan = max(1, int(math.ceil(cell.rate * h / _PANEL_TYPE)))
    edges = np.linspace(t0, t1, npan + 1)
    half = 0.5 * np.diff(edges)
    mids = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mids[:, None] + half[:, None] * _GL_X[None, :]).ravel()
    weights = (half[:, None] * _GL_W[None, :]).ravel()
    return complex(np.dot(weights, cell.eval(nodes)))


def antiderivative(f: PiecewiseFunction, mu: Measure, c, lo=None, hi=None) -> PiecewiseFunction:
    """x -> integral of f d(mu) from c to x, as a piecewise function on [lo, hi]."""
    lo = f.lo if lo is None else float(lo)
    hi = f.hi if hi is None else float(hi)
    ks = {lo, hi, float(c)}
    ks.update(k for k in f.knots.tolist() if lo <= k <= hi)
    ks.update(k for k in mu.atom_x.tolist() if lo <= k <= hi)
    ks.update(k for k in mu.breaks.tolist() if lo <= k <= hi)
    ks = np.array(sorted(ks))
    left = np.array([integrate(f, mu, c, k) for k in ks], dtype=complex)
    right = left + np.array([mu.atom_mass(k) for k in ks]) * f(ks)
    right[-1] = left[-1]
    cells = []
    for i in range(len(ks) - 1):
        mid = 0.5 * (ks[i] + ks[i + 1])
        dens = mu.density_at(mid)
        if dens == 0:
            cells.append(ConstCell(right[i]))
            continue
        j = f._cell_index(mid)
        cells.append(_running_cell(f.cells[j], ks[i] - f.knots[j], right[i], dens, ks[i + 1] - ks[i]))
    return PiecewiseFunction(ks, left, right, cells)


def _running_cell(cell, off, start, dens, width):
    if isinstance(cell, ConstCell):
        return HypCell(0.0, start, 0.0, dens * cell.value, 0.0)
    npan = max(1, int(math.ceil(cell.rate * width / _PANEL_TYPE)))
    u = (np.arange(npan)[:, None] + 0.5 * (_GL_X[None, :] + 1.0)).ravel() / npan
    wts = np.tile(_GL_W, npan) / (2.0 * npan)

    def fn(t):
        t = np.atleast_1d(t)
        nodes = off + t[:, None] * u[None, :]
        vals = cell.eval(nodes.ravel()).reshape(nodes.shape)
        return start + dens * t * (vals @ wts)

    return FuncCell(fn, cell.rate, lambda t: dens * cell.eval(np.atleast_1d(t) + off))
