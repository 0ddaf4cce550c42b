"""Endpoint classification, boundary functionals and self-adjoint boundary conditions."""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EndpointNotRegular, InvalidBC, NoGapAtEndpoint, NotOnePoint
from .measure import ConstCell, PiecewiseFunction, integrate
from .sturm_liouville import QuasiSolution, TauExpression, fundamental_system, solve_tau

REGULAR = "Regular"
LIMIT_CIRCLE = "LimitCircle"
LIMIT_POINT = "LimitPoint"

POINT = "point"
LEFT_LIMIT = "left_limit"

_ZERO_RTOL = 1e-12
_LP_RATIO = 1e3


def _is_zero(value, scale=1.0) -> bool:
    return abs(value) <= _ZERO_RTOL * max(1.0, scale)


@dataclass(frozen=True)
class EndpointClass:
    tag: str
    evidence: dict = field(default_factory=dict)
    note: str = ""

    @property
    def limit_circle(self) -> bool:
        return self.tag in (REGULAR, LIMIT_CIRCLE)


def classify_endpoint(tau: TauExpression, which: str, probe_window=None) -> EndpointClass:
    """Regular / limit-circle / limit-point verdict for endpoint `which` ("a" or "b").

    Regular and "no weight near the endpoint" are decided exactly. Otherwise
    the L^2(rho) norms of a z = 0 fundamental system are compared over growing
    windows (`probe_window`: positions moving towards the endpoint); a growth
    by 1e3 or more is taken as limit point. That part is a heuristic.
    """
    end = tau.a if which == "a" else tau.b
    lo, hi = tau.window
    near = (end, lo) if which == "a" else (hi, end)
    if tau.is_regular(which):
        tv = {name: m.total_variation(min(near), max(near)) if np.isfinite(end) else 0.0
              for name, m in (("rho", tau.varrho), ("sigma", tau.varsigma), ("chi", tau.chi))}
        return EndpointClass(REGULAR, tv, "finite total variation near the endpoint")
    if tau.gap_at(which):
        edge = tau.alpha_rho if which == "a" else tau.beta_rho
        return EndpointClass(LIMIT_CIRCLE, {"support_edge": edge}, "rho has no weight near the endpoint")

    d = max(1.0, hi - lo)
    if probe_window is None:
        probe_window = [hi + d * s for s in (1.0, 10.0, 100.0)] if which == "b" else \
                       [lo - d * s for s in (1.0, 10.0, 100.0)]
    mid = 0.5 * (lo + hi)
    norms = []
    for X in probe_window:
        t = tau.with_window(lo, X) if which == "b" else tau.with_window(X, hi)
        u1, u2 = fundamental_system(t, 0.0, mid)
        span = (mid, X) if which == "b" else (X, mid)
        with np.errstate(all="ignore"):
            n = max(abs(integrate(u.f * u.f.conj(), t.varrho, *span)) for u in (u1, u2))
        norms.append(n)
    ratio = norms[-1] / norms[0] if norms[0] > 0 else math.inf
    evidence = {"windows": list(probe_window), "norms": norms, "ratio": ratio}
    if not math.isfinite(ratio) or ratio >= _LP_RATIO:
        return EndpointClass(LIMIT_POINT, evidence, "heuristic: L2 norms diverge over the probe windows")
    return EndpointClass(LIMIT_CIRCLE, evidence, "heuristic: L2 norms stay bounded over the probe windows")


@dataclass(frozen=True)
class EndpointFunctional:
    """BC^1, BC^2 at one endpoint as (u(p), u1(p)) at `position`, or at position+."""

    which: str
    basis: str
    position: float
    side: str  # "at" or "plus"

    def __call__(self, u: QuasiSolution):
        p = u.pair(self.position, self.side)
        return complex(p[0]), complex(p[1])

    def reference_functions(self, tau: TauExpression):
        """Real z = 0 solutions w1, w2 with (BC^1, BC^2) = (1, 0) and (0, 1)."""
        return fundamental_system(tau, 0.0, self.position, self.side)

    def combination(self, u: QuasiSolution, angle: float) -> complex:
        b1, b2 = self(u)
        return b1 * math.cos(angle) - b2 * math.sin(angle)


def default_basis(tau: TauExpression, which: str) -> str:
    if tau.is_regular(which):
        return POINT
    if tau.gap_at(which):
        return LEFT_LIMIT
    raise EndpointNotRegular(f"no boundary functionals available at {which}")


def boundary_functionals(tau: TauExpression, which: str, basis: str | None = None) -> EndpointFunctional:
    basis = basis or default_basis(tau, which)
    lo, hi = tau.window
    if basis == POINT:
        if not tau.is_regular(which):
            raise EndpointNotRegular(f"tau is not regular at {which}")
        return EndpointFunctional(which, POINT, lo if which == "a" else hi, "at")
    if basis == LEFT_LIMIT:
        if not tau.gap_at(which):
            raise NoGapAtEndpoint(f"rho has weight near {which}")
        if which == "a":
            return EndpointFunctional("a", LEFT_LIMIT, tau.alpha_rho, "at")
        return EndpointFunctional("b", LEFT_LIMIT, tau.beta_rho, "plus")
    raise InvalidBC(f"unknown functional basis {basis!r}")


@dataclass(frozen=True)
class BoundaryConditionSpec:
    kind: str  # "separate" or "coupled"
    phi_a: float = 0.0
    phi_b: float = 0.0
    phi: float = 0.0
    R: tuple = ((1.0, 0.0), (0.0, 1.0))
    basis_a: str | None = None
    basis_b: str | None = None

    @classmethod
    def separate(cls, phi_a=0.0, phi_b=0.0, basis_a=None, basis_b=None):
        spec = cls("separate", float(phi_a), float(phi_b), basis_a=basis_a, basis_b=basis_b)
        spec.validate()
        return spec

    @classmethod
    def coupled(cls, phi=0.0, R=((1.0, 0.0), (0.0, 1.0)), basis_a=None, basis_b=None):
        R = tuple(tuple(float(v) for v in row) for row in R)
        spec = cls("coupled", phi=float(phi), R=R, basis_a=basis_a, basis_b=basis_b)
        spec.validate()
        return spec

    @property
    def R_matrix(self) -> np.ndarray:
        return np.array(self.R, dtype=float)

    def validate(self):
        angles = (self.phi_a, self.phi_b) if self.kind == "separate" else (self.phi,)
        if self.kind not in ("separate", "coupled"):
            raise InvalidBC(f"unknown boundary condition type {self.kind!r}")
        for ang in angles:
            if not (0.0 <= ang < math.pi):
                raise InvalidBC(f"angle {ang} not in [0, pi)")
        if self.kind == "coupled":
            R = self.R_matrix
            if R.shape != (2, 2) or abs(np.linalg.det(R) - 1.0) > 1e-12:
                raise InvalidBC("coupled conditions need a real 2x2 matrix R with det R = 1")


@dataclass(frozen=True)
class MulReport:
    dimension: int
    basis: tuple = ()
    R_tilde: np.ndarray | None = None


@dataclass
class SelfAdjointProblem:
    tau: TauExpression
    bc: BoundaryConditionSpec
    mul: MulReport
    class_a: EndpointClass
    class_b: EndpointClass
    fa: EndpointFunctional | None
    fb: EndpointFunctional | None


def _w_values(tau, fn: EndpointFunctional, x, side):
    w1, w2 = fn.reference_functions(tau)
    return (complex(w1.pair(x, side)[0]).real, complex(w1.pair(x, side)[1]).real,
            complex(w2.pair(x, side)[0]).real, complex(w2.pair(x, side)[1]).real)


def r_tilde(tau, fa: EndpointFunctional, fb: EndpointFunctional, R, xa, xb) -> np.ndarray:
    """R conjugated by the reference-function matrices at xa- and xb+."""
    w1a, w1pa, w2a, w2pa = _w_values(tau, fa, xa, "at")
    w1b, w1pb, w2b, w2pb = _w_values(tau, fb, xb, "plus")
    Wa = np.array([[w2pa, -w2a], [-w1pa, w1a]])
    Wb = np.array([[w2pb, -w2b], [-w1pb, w1b]])
    return np.linalg.solve(Wb, np.asarray(R, dtype=float) @ Wa)


def build_problem(tau: TauExpression, bc: BoundaryConditionSpec) -> SelfAdjointProblem:
    """Attach boundary conditions and work out the multivalued part."""
    bc.validate()
    ca = classify_endpoint(tau, "a")
    cb = classify_endpoint(tau, "b")
    if bc.kind == "coupled" and not (ca.limit_circle and cb.limit_circle):
        raise InvalidBC("coupled conditions need both endpoints in the limit-circle case")
    fa = boundary_functionals(tau, "a", bc.basis_a) if ca.limit_circle else None
    fb = boundary_functionals(tau, "b", bc.basis_b) if cb.limit_circle else None

    alpha, beta = tau.alpha_rho, tau.beta_rho
    mass_a = fa is not None and tau.varrho.atom_mass(alpha).real > 0
    mass_b = fb is not None and tau.varrho.atom_mass(beta).real > 0
    basis = []
    Rt = None
    if bc.kind == "separate":
        if mass_a:
            w1, _, w2, _ = _w_values(tau, fa, alpha, "at")
            cond = math.cos(bc.phi_a) * w2 + math.sin(bc.phi_a) * w1
            if _is_zero(cond, abs(w1) + abs(w2)):
                basis.append(f"indicator at alpha_rho = {alpha}")
        if mass_b:
            w1, _, w2, _ = _w_values(tau, fb, beta, "plus")
            cond = math.cos(bc.phi_b) * w2 + math.sin(bc.phi_b) * w1
            if _is_zero(cond, abs(w1) + abs(w2)):
                basis.append(f"indicator at beta_rho = {beta}")
    elif mass_a and mass_b:
        Rt = r_tilde(tau, fa, fb, bc.R_matrix, alpha, beta)
        if _is_zero(Rt[0, 1], np.abs(Rt).max()):
            coef = cmath.exp(1j * bc.phi) * Rt[1, 1]
            basis.append(f"indicator at alpha_rho = {alpha} + ({coef:.17g}) * indicator at beta_rho = {beta}")
    return SelfAdjointProblem(tau, bc, MulReport(len(basis), tuple(basis), Rt), ca, cb, fa, fb)


def mul_basis_function(problem: SelfAdjointProblem, which: str) -> QuasiSolution:
    """Element of the domain vanishing on supp rho whose tau is carried by one support edge.

    On the far side of the edge it is the z = 0 solution vanishing at the
    edge, beyond the edge it is zero.
    """
    tau = problem.tau
    lo, hi = tau.window
    if which == "a":
        x = tau.alpha_rho
        u = solve_tau(tau, 0.0, None, x, 0.0, 1.0, "at")
        return _glue(u, x, keep="left")
    x = tau.beta_rho
    u = solve_tau(tau, 0.0, None, x, 0.0, 1.0, "plus")
    return _glue(u, x, keep="right")


def _cut(fn: PiecewiseFunction, x, keep):
    ks = fn.knots
    if keep == "left":
        sel = ks <= x
        knots = np.concatenate([ks[sel], [fn.hi]])
        left = np.concatenate([fn.left[sel], [0.0]])
        right = np.concatenate([fn.right[sel][:-1], [0.0, 0.0]])
        cells = fn.cells[: int(sel.sum()) - 1] + [ConstCell(0.0)]
        return PiecewiseFunction(knots, left, right, cells)
    sel = ks >= x
    first = int(np.argmax(sel))
    knots = np.concatenate([[fn.lo], ks[sel]])
    left = np.concatenate([[0.0, 0.0], fn.left[sel][1:]])
    right = np.concatenate([[0.0], fn.right[sel]])
    cells = [ConstCell(0.0)] + fn.cells[first:]
    return PiecewiseFunction(knots, left, right, cells)


def _glue(u: QuasiSolution, x, keep) -> QuasiSolution:
    return QuasiSolution(_cut(u.f, x, keep), _cut(u.f1, x, keep), u.tau)


def onedim_classify(tau: TauExpression, bc: BoundaryConditionSpec) -> dict:
    """Self-adjointness and operator verdicts when rho is a single point mass.

    Returns {"self_adjoint", "operator", "tau_scalar"}; for an operator the
    scalar lam satisfies tau f(x0) = lam f(x0) on its domain.
    """
    rho = tau.varrho
    if rho.support_size() != 1:
        raise NotOnePoint("rho must be a single point mass")
    x0 = float(rho.atom_x[0])
    r0 = float(rho.atom_w[0].real)
    chi0 = tau.chi.atom_mass(x0).real
    fa = boundary_functionals(tau, "a", bc.basis_a)
    fb = boundary_functionals(tau, "b", bc.basis_b)
    w1a, w1pa, w2a, w2pa = _w_values(tau, fa, x0, "at")
    w1b, w1pb, w2b, w2pb = _w_values(tau, fb, x0, "plus")
    lam = None
    if bc.kind == "separate":
        ca, sa = math.cos(bc.phi_a), math.sin(bc.phi_a)
        cb, sb = math.cos(bc.phi_b), math.sin(bc.phi_b)
        A = w2a * ca + w1a * sa
        B = w2b * cb + w1b * sb
        ok_a = not _is_zero(A, abs(w1a) + abs(w2a))
        ok_b = not _is_zero(B, abs(w1b) + abs(w2b))
        sa_flag, op = ok_a or ok_b, ok_a and ok_b
        if op:
            rho_a = (w2pa * ca + w1pa * sa) / A
            rho_b = (w2pb * cb + w1pb * sb) / B
            lam = (-rho_b + rho_a + chi0) / r0
    else:
        Wa = np.array([[w2pa, -w2a], [-w1pa, w1a]])
        Wb = np.array([[w2pb, -w2b], [-w1pb, w1b]])
        Rt = np.linalg.solve(Wb, bc.R_matrix @ Wa)
        e = cmath.exp(1j * bc.phi)
        scale = np.abs(Rt).max()
        r12 = not _is_zero(Rt[0, 1], scale)
        sa_flag = r12 or (not _is_zero(e * Rt[0, 0] - 1.0) and not _is_zero(e * Rt[1, 1] - 1.0))
        op = r12
        if op:
            lam = ((2.0 * math.cos(bc.phi) - np.trace(Rt)) / Rt[0, 1] + chi0) / r0
    return {"self_adjoint": bool(sa_flag), "operator": bool(op),
            "tau_scalar": None if lam is None else float(lam)}
