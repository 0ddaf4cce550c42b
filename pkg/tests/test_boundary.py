import math

import numpy as np
import pytest

from measuresl import (BoundaryConditionSpec, InvalidBC, Measure, NotOnePoint, apply_tau, boundary_functionals,
                       build_problem, build_tau, classify_endpoint, from_classical, from_jacobi, fundamental_system,
                       mul_basis_function, onedim_classify, solve_tau, wronskian)
from measuresl.boundary import LEFT_LIMIT, LIMIT_CIRCLE, LIMIT_POINT, POINT, REGULAR
from measuresl.errors import EndpointNotRegular, NoGapAtEndpoint

inf = math.inf


def edge_mass_tau(mass_b=False):
    """rho = delta_1 + dx on (1, 2) (+ delta_2), sigma = dx on (0, 3)."""
    atoms = [(1.0, 1.0)] + ([(2.0, 0.5)] if mass_b else [])
    rho = Measure(0, 3, atoms=atoms, density=[(1, 2, 1.0)])
    return build_tau(rho, Measure.lebesgue(0, 3), Measure(0, 3, density=[(0, 3, 0.2)]))


def test_regular_endpoints():
    tau = from_classical(1.0, 1.0, 0.0, (0.0, 1.0))
    assert classify_endpoint(tau, "a").tag == REGULAR
    assert classify_endpoint(tau, "b").tag == REGULAR


def test_no_weight_near_endpoint_is_limit_circle():
    rho = Measure(-inf, 2, density=[(0, 1, 1.0)])
    tau = build_tau(rho, Measure.lebesgue(-inf, 2), Measure.zero(-inf, 2), window=(-5, 2))
    cls = classify_endpoint(tau, "a")
    assert cls.tag == LIMIT_CIRCLE and cls.limit_circle
    assert classify_endpoint(tau, "b").tag == REGULAR


def test_half_line_free_expression_is_limit_point():
    tau = build_tau(Measure.lebesgue(0, inf), Measure.lebesgue(0, inf), Measure.zero(0, inf), window=(0, 5))
    assert classify_endpoint(tau, "b").tag == LIMIT_POINT
    assert classify_endpoint(tau, "a").tag == REGULAR


def test_point_functionals_at_regular_end():
    tau = from_classical(1.0, 2.0, 0.5, (0.0, 1.0))
    fa = boundary_functionals(tau, "a")
    assert fa.basis == POINT and fa.position == 0.0
    u = solve_tau(tau, 0.3, None, 0.5, 1.0, 2.0)
    assert fa(u) == (u.value(0.0), u.quasi(0.0))


def test_left_limit_functionals_on_jacobi():
    tau = from_jacobi([1.0, 2.0, 1.5, 0.5], [0.1, 0.2, 0.3])
    fa = boundary_functionals(tau, "a", LEFT_LIMIT)
    fb = boundary_functionals(tau, "b", LEFT_LIMIT)
    assert (fa.position, fa.side) == (1.0, "at")
    assert (fb.position, fb.side) == (3.0, "plus")
    u = solve_tau(tau, 0.7, None, 2.0, 1.0, -1.0)
    assert fa(u) == (u.value(1.0), u.quasi(1.0))
    assert fb(u) == (u.value_plus(3.0), u.quasi_plus(3.0))


def test_functional_errors():
    rho = Measure(-inf, 2, density=[(0, 1, 1.0)])
    tau = build_tau(rho, Measure.lebesgue(-inf, 2), Measure.zero(-inf, 2), window=(-5, 2))
    with pytest.raises(EndpointNotRegular):
        boundary_functionals(tau, "a", POINT)
    with pytest.raises(NoGapAtEndpoint):
        boundary_functionals(from_classical(1.0, 1.0, 0.0, (0.0, 1.0)), "a", LEFT_LIMIT)


@pytest.mark.parametrize("basis", [POINT, LEFT_LIMIT])
def test_fundamental_pair_at_functional_gives_identity(basis):
    tau = from_jacobi([1.0, 2.0, 1.5, 0.5], [0.1, 0.2, 0.3])
    fa = boundary_functionals(tau, "a", basis)
    u1, u2 = fundamental_system(tau, 1.3, fa.position, fa.side)
    assert np.allclose(np.array([fa(u1), fa(u2)]), np.eye(2), atol=1e-14)


@pytest.mark.parametrize("basis", [POINT, LEFT_LIMIT])
def test_wronskian_equals_functional_determinant(basis, rng):
    tau = edge_mass_tau()
    for which in ("a", "b"):
        fn = boundary_functionals(tau, which, basis if which == "a" else POINT)
        f = solve_tau(tau, 0.4 + 1j, None, 1.5, *rng.normal(size=2))
        g = solve_tau(tau, -2.0, None, 0.7, *rng.normal(size=2))
        (f1, f2), (g1, g2) = fn(f), fn(g)
        W = wronskian(f, g, fn.position, fn.side)
        assert abs(W - (f1 * g2 - f2 * g1)) <= 1e-12 * max(1.0, abs(W))


def test_dirichlet_has_trivial_mul():
    tau = from_classical(1.0, 1.0, 0.0, (0.0, math.pi))
    prob = build_problem(tau, BoundaryConditionSpec.separate(0.0, 0.0))
    assert prob.mul.dimension == 0


def test_edge_mass_with_dirichlet_left_limit_is_multivalued():
    tau = edge_mass_tau()
    prob = build_problem(tau, BoundaryConditionSpec.separate(0.0, 0.0, basis_a=LEFT_LIMIT))
    assert prob.mul.dimension == 1
    assert "alpha_rho = 1.0" in prob.mul.basis[0]
    prob = build_problem(tau, BoundaryConditionSpec.separate(0.4, 0.0, basis_a=LEFT_LIMIT))
    assert prob.mul.dimension == 0


def test_mul_basis_function_structure():
    tau = edge_mass_tau()
    prob = build_problem(tau, BoundaryConditionSpec.separate(0.0, 0.0, basis_a=LEFT_LIMIT))
    e = mul_basis_function(prob, "a")
    xs = np.linspace(1.0, 2.0, 11)
    assert np.allclose(e.f(xs), 0, atol=1e-14)
    vals = dict(apply_tau(tau, e))
    assert abs(vals[1.0]) > 0.5
    assert all(abs(v) <= 1e-14 for x, v in vals.items() if x != 1.0)
    fa = prob.fa
    assert fa.combination(e, 0.0) == pytest.approx(0.0, abs=1e-14)


def test_coupled_left_limit_conditions():
    tau = edge_mass_tau(mass_b=True)
    kw = dict(basis_a=LEFT_LIMIT, basis_b=LEFT_LIMIT)
    prob = build_problem(tau, BoundaryConditionSpec.coupled(0.0, [[1.0, 1.0], [0.0, 1.0]], **kw))
    assert prob.mul.dimension == 0
    assert np.allclose(prob.mul.R_tilde, [[1.0, 1.0], [0.0, 1.0]], atol=1e-13)
    prob = build_problem(tau, BoundaryConditionSpec.coupled(0.5, [[2.0, 0.0], [3.0, 0.5]], **kw))
    assert prob.mul.dimension == 1


@pytest.mark.parametrize("make", [
    lambda: BoundaryConditionSpec.coupled(0.0, [[1.0, 1.0], [1.0, 1.0]]),
    lambda: BoundaryConditionSpec.separate(math.pi, 0.0),
    lambda: BoundaryConditionSpec.separate(0.0, -0.1),
    lambda: BoundaryConditionSpec.coupled(3.5, [[1.0, 0.0], [0.0, 1.0]]),
])
def test_invalid_conditions(make):
    with pytest.raises(InvalidBC):
        make()


def test_coupled_with_limit_point_end_rejected():
    tau = build_tau(Measure.lebesgue(0, inf), Measure.lebesgue(0, inf), Measure.zero(0, inf), window=(0, 5))
    with pytest.raises(InvalidBC):
        build_problem(tau, BoundaryConditionSpec.coupled(0.0, [[1.0, 0.0], [0.0, 1.0]]))
    prob = build_problem(tau, BoundaryConditionSpec.separate(0.0, 0.0))
    assert prob.fb is None and prob.class_b.tag == LIMIT_POINT


def one_point(chi0=0.0, rho0=1.0):
    a, b = -1.0, 1.0
    return build_tau(Measure(a, b, atoms=[(0.0, rho0)]), Measure.lebesgue(a, b),
                     Measure(a, b, atoms=[(0.0, chi0)] if chi0 else []), one_point=True)


def test_one_point_violating_inequalities():
    tau = one_point()
    # w2(0-) cos + w1(0-) sin = cos + sin, w2(0+) cos + w1(0+) sin = -cos + sin
    both = onedim_classify(tau, BoundaryConditionSpec.separate(3 * math.pi / 4, math.pi / 4))
    assert both == {"self_adjoint": False, "operator": False, "tau_scalar": None}
    one = onedim_classify(tau, BoundaryConditionSpec.separate(3 * math.pi / 4, 0.0))
    assert one["self_adjoint"] and not one["operator"]


def test_one_point_neumann_type_scalar():
    tau = one_point(chi0=0.7, rho0=2.0)
    bc = BoundaryConditionSpec.separate(math.pi / 2, math.pi / 2, basis_a=LEFT_LIMIT, basis_b=LEFT_LIMIT)
    v = onedim_classify(tau, bc)
    assert v["operator"] and v["tau_scalar"] == pytest.approx(0.7 / 2.0, abs=1e-14)


def test_one_point_straight_line_has_zero_tau():
    tau = one_point()
    u = solve_tau(tau, 0.0, None, -1.0, 1.0, 1.0)
    ((x, val),) = apply_tau(tau, u)
    assert x == 0.0 and abs(val) <= 1e-14


def test_onedim_requires_single_mass():
    with pytest.raises(NotOnePoint):
        onedim_classify(from_classical(1.0, 1.0, 0.0, (0.0, 1.0)), BoundaryConditionSpec.separate())
