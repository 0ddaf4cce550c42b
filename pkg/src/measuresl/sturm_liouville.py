"""The measure Sturm-Liouville expression tau f = d/d(rho) (-df/d(sigma) + int f d(chi)).

A solution of (tau - z) u = g is the pair (u, u1) with u1 the quasi-derivative
du/d(sigma); it solves the first-order system

    du  = u1 d(sigma)
    du1 = u d(chi) - (z u + g) d(rho).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import mde
from .errors import EndpointNotRegular, HypothesisViolation, PositionOutsideInterval
from .measure import (ConstCell, FuncCell, HypCell, Measure, PiecewiseFunction, antiderivative, csd,
                      integrate)

CLAUSE_RHO_POSITIVE = "rho is a positive measure"
CLAUSE_REAL = "sigma and chi are real measures"
CLAUSE_FULL_SUPPORT = "sigma has full support on (a, b)"
CLAUSE_COMMON_ATOMS = "no point masses in common"
CLAUSE_GAP_SIGN = "gap sign condition (sigma and chi of one sign on each gap of supp rho)"
CLAUSE_SUPPORT_SIZE = "supp rho has more than one point"


class TauExpression:
    """Validated coefficient triple (rho, sigma, chi).

    Computations run on `window`, a compact subinterval that defaults to
    (a, b) when both endpoints are finite.
    """

    def __init__(self, varrho: Measure, varsigma: Measure, chi: Measure, window=None, one_point=False):
        self.varrho = varrho
        self.varsigma = varsigma
        self.chi = chi
        self.a, self.b = varrho.a, varrho.b
        self.one_point = bool(one_point)
        if window is None:
            if not (np.isfinite(self.a) and np.isfinite(self.b)):
                raise ValueError("an infinite interval needs an explicit compact window")
            window = (self.a, self.b)
        lo, hi = float(window[0]), float(window[1])
        if not (self.a <= lo < hi <= self.b) or not (np.isfinite(lo) and np.isfinite(hi)):
            raise ValueError(f"window ({lo}, {hi}) must be a compact part of [{self.a}, {self.b}]")
        for m in (varrho, varsigma, chi):
            if m.atom_mass(lo) != 0 or m.atom_mass(hi) != 0:
                raise ValueError("window ends must not carry point masses")
        self.window = (lo, hi)
        self.alpha_rho, self.beta_rho = varrho.support_bounds()
        self.omega = varsigma.variation() + chi.variation() + varrho.variation()
        self.system = mde.MeasureSystem([[None, varsigma], [chi, None]],
                                        [[None, None], [-varrho, None]])
        mesh = self.system.mesh
        self.mesh = np.unique(np.concatenate([mesh[(mesh >= lo) & (mesh <= hi)], [lo, hi]]))
        mids = 0.5 * (self.mesh[:-1] + self.mesh[1:])
        self._dens = np.array([[varsigma.density_at(m), chi.density_at(m), varrho.density_at(m)] for m in mids],
                              dtype=complex).real
        self._atoms = np.array([[varsigma.atom_mass(x), chi.atom_mass(x), varrho.atom_mass(x)] for x in self.mesh],
                               dtype=complex).real

    def __repr__(self):
        return f"TauExpression(interval=({self.a}, {self.b}), window={self.window})"

    @property
    def interval(self):
        return self.a, self.b

    def _tail(self, which):
        end = self.a if which == "a" else self.b
        if np.isfinite(end):
            return False
        for m in (self.varrho, self.varsigma, self.chi):
            for x0, x1, v in m.cells():
                if (which == "a" and x0 == end) or (which == "b" and x1 == end):
                    return True
        return False

    def is_regular(self, which: str) -> bool:
        """All three coefficient measures have finite variation near the endpoint."""
        return not self._tail(which)

    @property
    def regular_a(self) -> bool:
        return self.is_regular("a")

    @property
    def regular_b(self) -> bool:
        return self.is_regular("b")

    def gap_at(self, which: str) -> bool:
        """rho has no weight near the endpoint."""
        if which == "a":
            return self.alpha_rho > self.a
        return self.beta_rho < self.b

    def with_window(self, lo, hi) -> "TauExpression":
        return TauExpression(self.varrho, self.varsigma, self.chi, (lo, hi), self.one_point)

    def forcing_measure(self, g: PiecewiseFunction | None) -> Measure | None:
        """g * rho as a measure when g is cellwise constant on the density of rho."""
        rho = self.varrho
        if g is None:
            return Measure.zero(self.a, self.b)
        atoms = [(x, w * g(x)) for x, w in rho.atoms() if g.lo <= x <= g.hi]
        cells = []
        for x0, x1, d in rho.cells():
            s, e = max(x0, g.lo), min(x1, g.hi)
            if e <= s:
                continue
            ks = [s] + [k for k in g.knots.tolist() if s < k < e] + [e]
            for k0, k1 in zip(ks[:-1], ks[1:]):
                cell = g.cells[g._cell_index(0.5 * (k0 + k1))]
                if not isinstance(cell, ConstCell):
                    return None
                cells.append((k0, k1, d * cell.value))
        return Measure(self.a, self.b, atoms, cells)


def build_tau(varrho: Measure, varsigma: Measure, chi: Measure, window=None, one_point=False) -> TauExpression:
    """Validate the coefficient hypotheses and return the expression."""
    if not ((varrho.a, varrho.b) == (varsigma.a, varsigma.b) == (chi.a, chi.b)):
        raise ValueError("measures must share one interval")
    a, b = varrho.a, varrho.b
    if varrho.is_zero() or not varrho.is_nonnegative():
        raise HypothesisViolation(CLAUSE_RHO_POSITIVE)
    if not (varsigma.is_real() and chi.is_real()):
        raise HypothesisViolation(CLAUSE_REAL)

    covered = a
    for x0, x1, _ in varsigma.cells():
        if x0 > covered:
            break
        covered = max(covered, x1)
    if covered < b:
        raise HypothesisViolation(CLAUSE_FULL_SUPPORT, f"sigma density vanishes beyond x = {covered}")

    shared = set(varsigma.atom_x.tolist()) & (set(varrho.atom_x.tolist()) | set(chi.atom_x.tolist()))
    if shared:
        raise HypothesisViolation(CLAUSE_COMMON_ATOMS, f"at x = {sorted(shared)[0]}")

    comps = varrho.support_components()
    for (_, g0), (g1, _) in zip(comps[:-1], comps[1:]):
        signs = set()
        for m in (varsigma, chi):
            for x, w in m.atoms():
                if g0 < x < g1:
                    signs.add(np.sign(w.real))
            for x0, x1, v in m.cells():
                if min(x1, g1) > max(x0, g0):
                    signs.add(np.sign(v.real))
        signs.discard(0.0)
        if len(signs) > 1:
            raise HypothesisViolation(CLAUSE_GAP_SIGN, f"on the gap ({g0}, {g1})")

    if varrho.support_size() <= 1 and not one_point:
        raise HypothesisViolation(CLAUSE_SUPPORT_SIZE, "request one-point mode for a single mass")
    return TauExpression(varrho, varsigma, chi, window, one_point)


# ---------------------------------------------------------------------------


@dataclass
class QuasiSolution:
    """A function of the maximal domain: values f and quasi-derivative f1.

    For solutions of (tau - z) u = g the generating data are kept, so that
    tau u = z u + g is known exactly.
    """

    f: PiecewiseFunction
    f1: PiecewiseFunction
    tau: TauExpression
    z: complex | None = None
    g: PiecewiseFunction | None = None
    c: float | None = None
    d: tuple = (0j, 0j)
    limit_kind: str = "at"
    meta: dict = field(default_factory=dict)

    def value(self, x):
        return self.f(x)

    def value_plus(self, x):
        return self.f.plus(x)

    def quasi(self, x):
        return self.f1(x)

    def quasi_plus(self, x):
        return self.f1.plus(x)

    def pair(self, x, side="at"):
        if side == "plus":
            return np.array([self.f.plus(x), self.f1.plus(x)])
        return np.array([self.f(x), self.f1(x)])

    def tau_function(self) -> PiecewiseFunction:
        """tau u as a function defined rho-almost everywhere."""
        if self.z is not None:
            out = self.f * complex(self.z)
            if self.g is not None:
                out = out + self.g
            return out
        return _tau_from_representation(self)

    def __add__(self, other: "QuasiSolution") -> "QuasiSolution":
        return QuasiSolution(self.f + other.f, self.f1 + other.f1, self.tau)

    def scaled(self, c) -> "QuasiSolution":
        g = None if self.g is None else self.g * c
        return QuasiSolution(self.f * c, self.f1 * c, self.tau, self.z, g)


def _tau_from_representation(u: QuasiSolution) -> PiecewiseFunction:
    tau = u.tau
    ks = u.f1.knots
    left = np.zeros(len(ks), dtype=complex)
    for i, x in enumerate(ks):
        w = tau.varrho.atom_mass(x).real
        if w > 0:
            left[i] = (-(u.f1.plus(x) - u.f1(x)) + u.f(x) * tau.chi.atom_mass(x)) / w
    cells = []
    for i in range(len(ks) - 1):
        mid = 0.5 * (ks[i] + ks[i + 1])
        r = tau.varrho.density_at(mid).real
        k = tau.chi.density_at(mid).real
        if r == 0:
            cells.append(ConstCell(0.0))
            continue
        j1 = u.f1._cell_index(mid)
        j0 = u.f._cell_index(mid)
        c1, o1 = u.f1.cells[j1], ks[i] - u.f1.knots[j1]
        c0, o0 = u.f.cells[j0], ks[i] - u.f.knots[j0]
        cells.append(FuncCell(lambda t, c1=c1, o1=o1, c0=c0, o0=o0, r=r, k=k:
                              (-c1.deriv(t + o1) + k * c0.eval(t + o0)) / r,
                              c1.rate + c0.rate))
    return PiecewiseFunction(ks, left, left, cells)


def _resolve_c(tau: TauExpression, c):
    lo, hi = tau.window
    if c is None or c == "a":
        c = lo
    elif c == "b":
        c = hi
    c = float(c)
    if not (lo <= c <= hi):
        raise PositionOutsideInterval(c, lo, hi)
    for end, which in ((tau.a, "a"), (tau.b, "b")):
        if c == end and not tau.is_regular(which):
            raise EndpointNotRegular(f"tau is not regular at {which}")
    return c


def solve_tau(tau: TauExpression, z: complex, g: PiecewiseFunction | None = None, c=None,
              d1: complex = 0.0, d2: complex = 0.0, limit_kind: str = "at") -> QuasiSolution:
    """Solution of (tau - z) u = g with u(c) = d1, u1(c) = d2.

    With `limit_kind="plus"` the data prescribe u(c+), u1(c+) instead.
    `c` may be a position in the window or "a"/"b" for the window ends.
    """
    c = _resolve_c(tau, c)
    z = complex(z)
    forcing = tau.forcing_measure(g)
    if forcing is None:
        return variation_of_parameters(tau, z, g, c, d1, d2, limit_kind)
    sys = tau.system
    if g is not None:
        sys = mde.MeasureSystem(sys.m1, sys.m2, [None, -forcing])
    lo, hi = tau.window
    traj = mde.solve_ivp(sys, z, c, [d1, d2], [lo, hi], initial=limit_kind)
    f, f1 = _functions_from_trajectory(traj)
    return QuasiSolution(f, f1, tau, z, g, c, (complex(d1), complex(d2)), limit_kind)


def _functions_from_trajectory(traj: mde.Trajectory):
    nodes = traj.nodes
    right_u = traj.right[:, 0].copy()
    right_v = traj.right[:, 1].copy()
    right_u[-1], right_v[-1] = traj.left[-1]
    ucells, vcells = [], []
    for k in range(len(nodes) - 1):
        A, F = traj.cell_A[k], traj.cell_F[k]
        s, q = A[0, 1], A[1, 0]
        # anchor each cell on the side the solution was propagated from
        if k < traj.start:
            (u0, v0), anchor = traj.left[k + 1], nodes[k + 1] - nodes[k]
        else:
            (u0, v0), anchor = traj.right[k], 0.0
        mu2 = s * q
        ucells.append(HypCell(mu2, 0.0, u0, s * v0 + F[0], s * F[1], anchor))
        vcells.append(HypCell(mu2, 0.0, v0, q * u0 + F[1], q * F[0], anchor))
    f = PiecewiseFunction(nodes, traj.left[:, 0], right_u, ucells)
    f1 = PiecewiseFunction(nodes, traj.left[:, 1], right_v, vcells)
    return f, f1


def fundamental_system(tau: TauExpression, z: complex, c=None, limit_kind="at"):
    """Solutions with data (1, 0) and (0, 1) at c."""
    u1 = solve_tau(tau, z, None, c, 1.0, 0.0, limit_kind)
    u2 = solve_tau(tau, z, None, c, 0.0, 1.0, limit_kind)
    return u1, u2


def variation_of_parameters(tau: TauExpression, z: complex, g: PiecewiseFunction, c, d1, d2,
                            limit_kind="at") -> QuasiSolution:
    """Solution of (tau - z) u = g built from a fundamental system.

    u = d1 u1 + d2 u2 + u1 J2 - u2 J1 with J_k = int_c^x u_k g d(rho);
    the fundamental pair is normalised at c so that W(u1, u2) = 1.
    """
    c = _resolve_c(tau, c)
    u1, u2 = fundamental_system(tau, z, c, limit_kind)
    lo, hi = tau.window
    J1 = antiderivative(u1.f * g, tau.varrho, c, lo, hi)
    J2 = antiderivative(u2.f * g, tau.varrho, c, lo, hi)
    if limit_kind == "plus":
        # measure the integrals from c+ so that the data hold at c+
        J1 = J1 - (J1.plus(c) - J1(c))
        J2 = J2 - (J2.plus(c) - J2(c))
    f = u1.f * (J2 + d1) - u2.f * J1 + u2.f * d2
    f1 = u1.f1 * (J2 + d1) - u2.f1 * J1 + u2.f1 * d2
    return QuasiSolution(f, f1, tau, complex(z), g, c, (complex(d1), complex(d2)), limit_kind)


def wronskian(u: QuasiSolution, v: QuasiSolution, x, side: str = "at") -> complex:
    """W(u, v)(x) = u v1 - u1 v, at x or (side="plus") at x+."""
    a = u.pair(x, side)
    b = v.pair(x, side)
    return complex(a[0] * b[1] - a[1] * b[0])


def lagrange_residual(u: QuasiSolution, v: QuasiSolution, alpha, beta) -> complex:
    """int_alpha^beta (v tau u - u tau v) d(rho) - (W(u, v)(beta) - W(u, v)(alpha))."""
    integrand = v.f * u.tau_function() - u.f * v.tau_function()
    lhs = integrate(integrand, u.tau.varrho, alpha, beta)
    return lhs - (wronskian(u, v, beta) - wronskian(u, v, alpha))


def pluecker_residual(f1, f2, f3, f4, x) -> complex:
    W = lambda p, q: wronskian(p, q, x)
    return W(f1, f2) * W(f3, f4) + W(f1, f3) * W(f4, f2) + W(f1, f4) * W(f2, f3)


def apply_tau(tau: TauExpression, u: QuasiSolution, points: Sequence[float] | None = None):
    """Values of tau u on supp rho, computed from the representation of u.

    Returns a list of (x, value) pairs: one per mass of rho in the window and
    one per requested point (default: midpoints of the density cells of rho).
    At a mass the value is the jump of -u1 + int u d(chi) divided by the mass.
    """
    lo, hi = tau.window
    out = []
    for x, w in tau.varrho.atoms():
        if lo <= x <= hi:
            val = (-(u.f1.plus(x) - u.f1(x)) + u.f(x) * tau.chi.atom_mass(x)) / w.real
            out.append((x, complex(val)))
    if points is None:
        points = [0.5 * (max(x0, lo) + min(x1, hi)) for x0, x1, _ in tau.varrho.cells()
                  if min(x1, hi) > max(x0, lo)]
    for x in points:
        r = tau.varrho.density_at(x).real
        if r <= 0:
            continue
        val = (-u.f1.derivative(x) + tau.chi.density_at(x).real * u.f(x)) / r
        out.append((float(x), complex(val)))
    out.sort(key=lambda p: p[0])
    return out


# ---------------------------------------------------------------------------
# fast forward shooting, vectorised over z


def shoot(tau: TauExpression, z, x0: float, y0, x1: float, start: str = "at", end: str = "at"):
    """Propagate (u, u1) from x0 to x1 >= x0 for an array of z.

    `start="at"` means y0 = (u(x0), u1(x0)); "plus" means the data are the
    right limits at x0. `end` selects u(x1) or u(x1+). Returns (u, u1).
    """
    z = np.asarray(z, dtype=complex)
    u = np.broadcast_to(np.asarray(y0[0], dtype=complex), z.shape).copy()
    v = np.broadcast_to(np.asarray(y0[1], dtype=complex), z.shape).copy()
    mesh, dens, atoms = tau.mesh, tau._dens, tau._atoms
    if x1 < x0:
        raise ValueError("shoot propagates forward only")

    def jump(i, u, v):
        sw, cw, rw = atoms[i]
        if sw == 0 and cw == 0 and rw == 0:
            return u, v
        return u + sw * v, (cw - z * rw) * u + v

    i0 = int(np.searchsorted(mesh, x0))
    if i0 < len(mesh) and mesh[i0] == x0 and start == "at":
        u, v = jump(i0, u, v)
    pos = x0
    i = int(np.searchsorted(mesh, x0, side="right"))
    while True:
        nxt = mesh[i] if i < len(mesh) else math.inf
        stop = min(nxt, x1)
        h = stop - pos
        if h > 0:
            s, k, r = dens[i - 1]
            q = k - z * r
            C, S, _ = csd(s * q, h)
            u, v = C * u + s * S * v, q * S * u + C * v
            pos = stop
        if nxt > x1 or (nxt == x1 and end == "at"):
            break
        u, v = jump(i, u, v)
        i += 1
        if nxt == x1:
            break
    return u, v
