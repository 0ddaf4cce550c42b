"""Eigenvalues, resolvent, Weyl-Titchmarsh function and Weyl matrix."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .boundary import (BoundaryConditionSpec, SelfAdjointProblem, build_problem, boundary_functionals)
from .errors import (BracketTooCoarse, DenominatorVanishes, InvalidBC, ZAtEigenvalue, ZOnSpectrum)
from .measure import PiecewiseFunction, integrate
from .sturm_liouville import QuasiSolution, shoot, solve_tau, wronskian

__all__ = [
    "SelfAdjointProblem", "SpectralData", "build_problem", "characteristic", "eigenvalues",
    "green_function", "resolvent_apply", "m_function", "psi_norm2", "spectral_measure_atoms",
    "weyl_matrix", "weyl_m_pair", "theta_phi",
]

_SCAN_DEPTH = 4
_RESIDUE_EPS = 1e-6


@dataclass
class SpectralData:
    eigenvalues: np.ndarray
    norming: np.ndarray
    multiplicities: np.ndarray
    scan_z: np.ndarray
    scan_values: np.ndarray


def _need_lc(problem: SelfAdjointProblem, *which):
    for w in which:
        fn = problem.fa if w == "a" else problem.fb
        if fn is None:
            raise InvalidBC(f"endpoint {w} is limit point; no boundary condition available")


def _a_data(problem):
    """Initial data of theta and phi at the a-functional."""
    ang = problem.bc.phi_a if problem.bc.kind == "separate" else 0.0
    c, s = math.cos(ang), math.sin(ang)
    return (c, -s), (s, c)


def _bc_b(problem, u, v):
    ang = problem.bc.phi_b
    return u * math.cos(ang) - v * math.sin(ang)


def _shoot_ab(problem, z, y0):
    fa, fb = problem.fa, problem.fb
    return shoot(problem.tau, z, fa.position, y0, fb.position, fa.side, fb.side)


def characteristic(problem: SelfAdjointProblem, z):
    """Entire function of z whose zeros are the eigenvalues.

    Separate conditions: W(u_b, u_a) with u_a, u_b satisfying the condition at
    a and at b. Coupled conditions: det(e^{i phi} R - M_b) for a fundamental
    system normalised at the a-functionals.
    """
    _need_lc(problem, "a", "b")
    zz = np.asarray(z, dtype=complex)
    if problem.bc.kind == "separate":
        _, phi0 = _a_data(problem)
        u, v = _shoot_ab(problem, zz, phi0)
        out = -_bc_b(problem, u, v)
    else:
        out = _coupled_det(problem, zz)
    return complex(out) if np.ndim(z) == 0 else out


def _monodromy(problem, z):
    u1, v1 = _shoot_ab(problem, z, (1.0, 0.0))
    u2, v2 = _shoot_ab(problem, z, (0.0, 1.0))
    return u1, u2, v1, v2


def _coupled_det(problem, z):
    m11, m12, m21, m22 = _monodromy(problem, z)
    e = cmath.exp(1j * problem.bc.phi)
    R = problem.bc.R_matrix
    return (e * R[0, 0] - m11) * (e * R[1, 1] - m22) - (e * R[0, 1] - m12) * (e * R[1, 0] - m21)


def _real_characteristic(problem, x):
    """Real-valued version of the characteristic for real z."""
    x = np.asarray(x, dtype=float)
    if problem.bc.kind == "separate":
        return np.real(characteristic(problem, x))
    m11, m12, m21, m22 = _monodromy(problem, x.astype(complex))
    R = problem.bc.R_matrix
    tr = R[1, 1] * m11 - R[0, 1] * m21 - R[1, 0] * m12 + R[0, 0] * m22
    return np.real(2.0 * math.cos(problem.bc.phi) - tr)


def _scan(f, lo, hi, n, tol, depth, found):
    xs = np.linspace(lo, hi, n + 1)
    fs = f(xs)
    scale = float(np.max(np.abs(fs[np.isfinite(fs)]), initial=0.0))
    f_scalar = lambda x: float(f(np.array([x]))[0])
    for i in range(n):
        fa, fb = fs[i], fs[i + 1]
        if fa == 0.0:
            found.append((xs[i], 1))
        elif fa * fb < 0:
            r = brentq(f_scalar, xs[i], xs[i + 1], xtol=tol * 1e-3, rtol=1e-15, maxiter=200)
            found.append((r, 1))
    if fs[-1] == 0.0 and hi not in [r for r, _ in found]:
        found.append((xs[-1], 1))
    # local minima of |f| without a sign change may hide a pair of zeros
    for i in range(1, n):
        a, b, c = fs[i - 1], fs[i], fs[i + 1]
        if a * b > 0 and b * c > 0 and abs(b) < abs(a) and abs(b) < abs(c):
            if depth > 0:
                _scan(f, xs[i - 1], xs[i + 1], 8, tol, depth - 1, found)
            else:
                _tangential(f, xs[i - 1], xs[i + 1], tol, scale, found)


def _tangential(f, lo, hi, tol, scale, found):
    """Zero of even multiplicity: locate the extremum and test its value."""
    h = max(1e-7 * (hi - lo), 1e-9 * max(1.0, abs(lo)))
    df = lambda x: float((f(np.array([x + h]))[0] - f(np.array([x - h]))[0]) / (2 * h))
    try:
        x = brentq(df, lo + h, hi - h, xtol=tol * 1e-3, rtol=1e-15)
    except ValueError:
        return
    val = abs(float(f(np.array([x]))[0]))
    if val <= 1e-9 * max(scale, 1.0):
        found.append((x, 2))
    elif val <= 1e-6 * max(scale, 1.0):
        raise BracketTooCoarse(lo, hi)


def eigenvalues(problem: SelfAdjointProblem, lo: float, hi: float, tol: float = 1e-10,
                n_scan: int = 1024) -> SpectralData:
    """All eigenvalues in [lo, hi] with norming constants.

    The real characteristic is scanned on n_scan steps; sign changes are
    refined with Brent's method, suspicious local minima of |characteristic|
    are rescanned four times finer (tangential zeros are reported with
    multiplicity 2). Norming constants are 1/||phi_lam||^2 for separate
    conditions and NaN for coupled ones.
    """
    _need_lc(problem, "a", "b")
    f = lambda x: _real_characteristic(problem, x)
    found: list = []
    _scan(f, lo, hi, n_scan, tol, _SCAN_DEPTH, found)
    found.sort()
    lams, mults = [], []
    for r, m in found:
        if lams and abs(r - lams[-1]) <= 10 * tol:
            mults[-1] = max(mults[-1], m)
            continue
        lams.append(r)
        mults.append(m)
    lams = np.array(lams, dtype=float)
    norming = np.array([norming_constant(problem, lam) if problem.bc.kind == "separate" else math.nan
                        for lam in lams])
    xs = np.linspace(lo, hi, n_scan + 1)
    return SpectralData(lams, norming, np.array(mults, dtype=int), xs, f(xs))


def theta_phi(problem: SelfAdjointProblem, z) -> tuple[QuasiSolution, QuasiSolution]:
    """Real entire fundamental system with W(theta, phi) = 1; phi satisfies the condition at a."""
    fa = problem.fa
    (t1, t2), (p1, p2) = _a_data(problem)
    th = solve_tau(problem.tau, z, None, fa.position, t1, t2, fa.side)
    ph = solve_tau(problem.tau, z, None, fa.position, p1, p2, fa.side)
    return th, ph


def _norm2(u: QuasiSolution) -> float:
    lo, hi = u.tau.window
    return integrate(u.f * u.f.conj(), u.tau.varrho, lo, hi).real


def norming_constant(problem: SelfAdjointProblem, lam: float) -> float:
    _, ph = theta_phi(problem, lam)
    return 1.0 / _norm2(ph)


def _one_sided(problem: SelfAdjointProblem, z):
    """(u_a, u_b, W(u_b, u_a)) for separate conditions."""
    _need_lc(problem, "a", "b")
    if problem.bc.kind != "separate":
        raise InvalidBC("the one-sided construction needs separate conditions")
    fa, fb = problem.fa, problem.fb
    _, (p1, p2) = _a_data(problem)
    ua = solve_tau(problem.tau, z, None, fa.position, p1, p2, fa.side)
    sb, cb = math.sin(problem.bc.phi_b), math.cos(problem.bc.phi_b)
    ub = solve_tau(problem.tau, z, None, fb.position, sb, cb, fb.side)
    W = wronskian(ub, ua, fa.position, fa.side)
    scale = np.abs(ua.pair(fa.position, fa.side)).sum() * np.abs(ub.pair(fa.position, fa.side)).sum()
    if abs(W) <= 1e-12 * max(scale, 1e-300):
        raise ZAtEigenvalue(z)
    return ua, ub, W


def green_function(problem: SelfAdjointProblem, z, x, y) -> complex:
    """Resolvent kernel u_a(min) u_b(max) / W(u_b, u_a) (split y < x / y >= x)."""
    ua, ub, W = _one_sided(problem, z)
    if y < x:
        return ua.value(y) * ub.value(x) / W
    return ua.value(x) * ub.value(y) / W


def resolvent_apply(problem: SelfAdjointProblem, z, g: PiecewiseFunction) -> QuasiSolution:
    """f = R_z g, i.e. (tau - z) f = g with the boundary conditions."""
    tau = problem.tau
    lo, hi = tau.window
    fa = problem.fa
    if problem.bc.kind == "separate":
        ua, ub, W = _one_sided(problem, z)
        Ib = integrate(ub.f * g, tau.varrho, lo, hi)
        d1, d2 = ua.pair(fa.position, fa.side) * (Ib / W)
        return solve_tau(tau, z, g, fa.position, d1, d2, fa.side)
    _need_lc(problem, "a", "b")
    fb = problem.fb
    u1 = solve_tau(tau, z, None, fa.position, 1.0, 0.0, fa.side)
    u2 = solve_tau(tau, z, None, fa.position, 0.0, 1.0, fa.side)
    Mb = np.column_stack([u1.pair(fb.position, fb.side), u2.pair(fb.position, fb.side)])
    j = np.array([integrate(u2.f * g, tau.varrho, lo, hi), -integrate(u1.f * g, tau.varrho, lo, hi)])
    K = cmath.exp(1j * problem.bc.phi) * problem.bc.R_matrix - Mb
    if abs(np.linalg.det(K)) <= 1e-12 * max(np.abs(K).max() ** 2, 1e-300):
        raise ZAtEigenvalue(z)
    c = np.linalg.solve(K, Mb @ j)
    return solve_tau(tau, z, g, fa.position, c[0], c[1], fa.side)


# ---------------------------------------------------------------------------


def _right_ratio(problem, z, x, y_theta, y_phi, start="at", tol=1e-12, max_doublings=40):
    """-BC_b(theta)/BC_b(phi) for solutions with data y_theta, y_phi at x.

    At a limit-point end b the window is pushed outwards with a Dirichlet
    cut until successive values agree.
    """
    zz = np.asarray(z, dtype=complex)
    tau = problem.tau
    if problem.fb is not None:
        fb = problem.fb
        ut, vt = shoot(tau, zz, x, y_theta, fb.position, start, fb.side)
        up, vp = shoot(tau, zz, x, y_phi, fb.position, start, fb.side)
        return ut, vt, up, vp, -_bc_b(problem, ut, vt) / _bc_b(problem, up, vp), _bc_b(problem, up, vp)
    lo, hi = tau.window
    step = max(1.0, hi - lo)
    X = hi
    prev = None
    for _ in range(max_doublings):
        t = tau.with_window(lo, X)
        ut, _ = shoot(t, zz, x, y_theta, X, start)
        up, _ = shoot(t, zz, x, y_phi, X, start)
        with np.errstate(all="ignore"):
            val = -ut / up
        if prev is not None and np.all(np.abs(val - prev) <= tol * np.maximum(1.0, np.abs(val))):
            return None, None, None, None, val, up
        if not np.all(np.isfinite(val)):
            break
        prev = val
        X = X + step
        step *= 2.0
    if prev is None:
        raise ZOnSpectrum(z)
    return None, None, None, None, prev, np.ones_like(prev)


def m_function(problem: SelfAdjointProblem, z):
    """Weyl-Titchmarsh function M(z): theta + M phi satisfies the condition at b."""
    if problem.bc.kind != "separate":
        raise InvalidBC("the m-function needs separate conditions")
    _need_lc(problem, "a")
    fa = problem.fa
    th0, ph0 = _a_data(problem)
    _, _, up, vp, M, den = _right_ratio(problem, z, fa.position, th0, ph0, fa.side)
    scale = 0.0 if up is None else 1e-12 * (np.abs(up) + np.abs(vp))
    bad = (np.abs(den) <= scale) | ~np.isfinite(M)
    if np.any(bad):
        raise ZOnSpectrum(np.asarray(z)[bad].tolist() if np.ndim(z) else z)
    return complex(M) if np.ndim(z) == 0 else M


def weyl_solution(problem: SelfAdjointProblem, z) -> QuasiSolution:
    th, ph = theta_phi(problem, z)
    M = m_function(problem, z)
    return QuasiSolution(th.f + ph.f * M, th.f1 + ph.f1 * M, problem.tau, complex(z))


def psi_norm2(problem: SelfAdjointProblem, z) -> float:
    """||theta_z + M(z) phi_z||^2 in L^2(rho) over the window."""
    return _norm2(weyl_solution(problem, z))


class AtomMap(dict):
    """lam -> mu({lam}); `flagged` lists atoms failing the residue cross-check."""

    flagged: list


def residue_estimate(problem: SelfAdjointProblem, lam: float, eps: float = _RESIDUE_EPS) -> float:
    """eps * Im M(lam + i eps), which tends to mu({lam}) as eps -> 0."""
    return eps * m_function(problem, complex(lam, eps)).imag


def spectral_measure_atoms(problem: SelfAdjointProblem, data: SpectralData) -> AtomMap:
    out = AtomMap()
    out.flagged = []
    for lam in data.eigenvalues:
        _, ph = theta_phi(problem, float(lam))
        mu = 1.0 / _norm2(ph)
        out[float(lam)] = mu
        r1 = residue_estimate(problem, lam, _RESIDUE_EPS)
        r2 = residue_estimate(problem, lam, 2 * _RESIDUE_EPS)
        if abs(r1 - mu) > 0.1 * mu or abs(r2 - mu) > 0.1 * mu:
            out.flagged.append(float(lam))
    return out


def weyl_m_pair(problem: SelfAdjointProblem, x0: float, phi_alpha: float, z) -> tuple[complex, complex]:
    """(m_-, m_+) of the restrictions to (a, x0) and (x0, b).

    The interface condition at x0 is cos(phi_alpha) f(x0) + sin(phi_alpha) f1(x0) = 0;
    theta + m_+ phi satisfies the condition at b, theta - m_- phi the one at a.
    """
    if problem.bc.kind != "separate":
        raise InvalidBC("the Weyl matrix needs separate conditions")
    _need_lc(problem, "a")
    tau = problem.tau
    if tau.varrho.atom_mass(x0) != 0:
        raise ValueError("x0 must not carry a mass of rho")
    ca, sa = math.cos(phi_alpha), math.sin(phi_alpha)
    th0, ph0 = (ca, sa), (-sa, ca)
    *_, m_plus, _ = _right_ratio(problem, z, x0, th0, ph0)
    th = solve_tau(tau, z, None, x0, *th0)
    ph = solve_tau(tau, z, None, x0, *ph0)
    fa = problem.fa
    m_minus = fa.combination(th, problem.bc.phi_a) / fa.combination(ph, problem.bc.phi_a)
    return complex(m_minus), complex(m_plus)


def weyl_matrix(problem: SelfAdjointProblem, x0: float, phi_alpha: float, z) -> np.ndarray:
    """2x2 Weyl matrix built from `weyl_m_pair`."""
    m_minus, m_plus = weyl_m_pair(problem, x0, phi_alpha, z)
    s = m_minus + m_plus
    if abs(s) <= 1e-14 * max(1.0, abs(m_minus), abs(m_plus)):
        raise DenominatorVanishes("m_- + m_+ vanishes")
    off = 0.5 * (m_minus - m_plus) / s
    return np.array([[-1.0 / s, off], [off, m_minus * m_plus / s]], dtype=complex)
