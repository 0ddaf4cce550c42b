"""Constructors for classical, Jacobi, Krein-string and peakon expressions."""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import HypothesisViolation
from .measure import ConstCell, HypCell, Measure, PiecewiseFunction
from .sturm_liouville import CLAUSE_SUPPORT_SIZE, QuasiSolution, TauExpression, build_tau


def _cellwise(values, breaks, n_default):
    vals = np.atleast_1d(np.asarray(values, dtype=float))
    if vals.size == 1 and n_default > 1:
        vals = np.full(n_default, vals[0])
    if vals.size != len(breaks) - 1:
        raise ValueError("need one value per cell")
    return vals


def from_classical(r, p, q, interval, breaks: Sequence[float] | None = None, window=None) -> TauExpression:
    """-(p y')' + q y = z r y with piecewise-constant r, p, q.

    Scalars give constant coefficients; sequences give one value per cell of
    `breaks` (which must run from a to b).
    """
    a, b = float(interval[0]), float(interval[1])
    br = np.asarray(breaks if breaks is not None else [a, b], dtype=float)
    if br[0] != a or br[-1] != b:
        raise ValueError("breaks must start at a and end at b")
    n = len(br) - 1
    r, p, q = (_cellwise(v, br, n) for v in (r, p, q))
    if np.any(p == 0):
        raise HypothesisViolation("p must not vanish")
    if np.any(r <= 0):
        raise HypothesisViolation("rho is a positive measure", "r must be positive")
    cells = list(zip(br[:-1], br[1:]))
    rho = Measure(a, b, density=[(x0, x1, rv) for (x0, x1), rv in zip(cells, r)])
    sig = Measure(a, b, density=[(x0, x1, 1.0 / pv) for (x0, x1), pv in zip(cells, p)])
    chi = Measure(a, b, density=[(x0, x1, qv) for (x0, x1), qv in zip(cells, q) if qv != 0])
    return build_tau(rho, sig, chi, window)


def discretize_classical(rfun: Callable, pfun: Callable, qfun: Callable, interval, n: int) -> TauExpression:
    """Midpoint piecewise-constant approximation of smooth coefficients on n cells."""
    br = np.linspace(interval[0], interval[1], n + 1)
    mid = 0.5 * (br[:-1] + br[1:])
    vec = lambda fn: np.array([fn(x) for x in mid], dtype=float)
    return from_classical(vec(rfun), vec(pfun), vec(qfun), interval, br)


def _jacobi_p(p, N):
    p = np.asarray(p, dtype=float)
    if len(p) == N:
        p = np.append(p, p[-1])
    if len(p) != N + 1:
        raise ValueError("p needs N + 1 entries p_0..p_N (or N, then p_N = p_{N-1})")
    if np.any(p == 0):
        raise ValueError("p_n must not vanish")
    return p


def from_jacobi(p: Sequence[float], q: Sequence[float], padding: float = 1.0) -> TauExpression:
    """Expression whose tau on the integers is the three-term Jacobi recurrence.

    rho has unit masses at 1..N, chi the masses q_n there, and sigma the
    density 1/p_{n-1} on (n-1, n). The interval is (1 - padding, N + padding).
    """
    q = np.asarray(q, dtype=float)
    N = len(q)
    p = _jacobi_p(p, N)
    a, b = 1.0 - padding, N + padding
    rho = Measure(a, b, atoms=[(n, 1.0) for n in range(1, N + 1)])
    chi = Measure(a, b, atoms=[(n, q[n - 1]) for n in range(1, N + 1)])
    cells = []
    for n in range(1, N + 2):
        x0, x1 = max(n - 1.0, a), min(float(n), b)
        if x1 > x0:
            cells.append((x0, x1, 1.0 / p[n - 1]))
    sig = Measure(a, b, density=cells)
    return build_tau(rho, sig, chi, one_point=(N == 1))


def jacobi_matrix(p: Sequence[float], q: Sequence[float], padding: float = 1.0) -> np.ndarray:
    """Symmetric tridiagonal matrix of the Jacobi problem with Dirichlet conditions at the interval ends."""
    q = np.asarray(q, dtype=float)
    N = len(q)
    p = _jacobi_p(p, N)
    J = np.diag(q.copy())
    for n in range(N):
        J[n, n] += p[n] / (padding if n == 0 else 1.0) + p[n + 1] / (padding if n == N - 1 else 1.0)
    for n in range(N - 1):
        J[n, n + 1] = J[n + 1, n] = -p[n + 1]
    return J


def jacobi_sequence_function(tau: TauExpression, values: Sequence[complex], f_a: complex = 0.0,
                             f_b: complex = 0.0) -> QuasiSolution:
    """Element of the domain with f(n) = values[n-1], linear between the masses.

    f takes the values f_a, f_b at the interval ends.
    """
    a, b = tau.window
    N = len(values)
    knots = np.array([a] + list(range(1, N + 1)) + [b], dtype=float)
    fv = np.array([f_a] + list(values) + [f_b], dtype=complex)
    slopes = np.diff(fv) / np.diff(knots)
    fcells = [HypCell(0.0, fv[i], 0.0, slopes[i], 0.0) for i in range(len(slopes))]
    mids = 0.5 * (knots[:-1] + knots[1:])
    qd = np.array([slopes[i] / tau.varsigma.density_at(m) for i, m in enumerate(mids)], dtype=complex)
    left = np.concatenate([[qd[0]], qd])
    right = np.concatenate([qd, [qd[-1]]])
    f1 = PiecewiseFunction(knots, left, right, [ConstCell(v) for v in qd])
    f = PiecewiseFunction(knots, fv, fv, fcells)
    return QuasiSolution(f, f1, tau)


def from_krein_string(mass: Measure, length: float | None = None) -> TauExpression:
    """String with mass distribution `mass`: sigma = Lebesgue, chi = 0."""
    a, b = mass.a, mass.b
    if length is not None and (a, b) != (0.0, float(length)):
        mass = Measure(0.0, float(length), mass.atoms(), mass.cells())
        a, b = mass.a, mass.b
    if not mass.is_nonnegative() or mass.is_zero():
        raise HypothesisViolation("rho is a positive measure", "string mass must be positive")
    sig = Measure.lebesgue(a, b)
    return build_tau(mass, sig, Measure.zero(a, b), one_point=mass.support_size() == 1)


def from_peakon(positions: Sequence[float], masses: Sequence[float], margin: float = 10.0) -> TauExpression:
    """Isospectral problem of a peakon configuration on a finite window.

    sigma = dx, chi = dx/4 and rho = sum m_i delta_{x_i} on
    (min x - margin, max x + margin).
    """
    masses = np.asarray(masses, dtype=float)
    positions = np.asarray(positions, dtype=float)
    if len(masses) != len(positions):
        raise ValueError("positions and masses differ in length")
    if len(masses) == 0 or np.all(masses == 0):
        raise HypothesisViolation(CLAUSE_SUPPORT_SIZE, "no masses given")
    if np.any(masses <= 0):
        raise HypothesisViolation("rho is a positive measure", "peakon masses must be positive")
    a, b = positions.min() - margin, positions.max() + margin
    rho = Measure(a, b, atoms=list(zip(positions, masses)))
    sig = Measure.lebesgue(a, b)
    chi = Measure.lebesgue(a, b, 0.25)
    return build_tau(rho, sig, chi, one_point=rho.support_size() == 1)
