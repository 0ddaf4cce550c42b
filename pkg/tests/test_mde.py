import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate as sint
from scipy.linalg import expm

from measuresl import Measure, MeasureSystem, SingularJump, check_uniqueness, from_jacobi, solve_ivp
from measuresl.mde import jump_factor, propagator


def scalar(mu: Measure) -> MeasureSystem:
    return MeasureSystem([[mu]])


def test_jump_factor_identity_without_atom():
    sys = scalar(Measure(-2, 2, atoms=[(1.0, -1.0)]))
    F, sing = jump_factor(sys, 0.0, 0.5)
    assert np.array_equal(F, np.eye(1)) and not sing


def test_jump_factor_singular_in_counterexample():
    sys = scalar(Measure(-2, 2, atoms=[(1.0, -1.0)]))
    F, sing = jump_factor(sys, 0.0, 1.0)
    assert F[0, 0] == 0 and sing


def test_zero_data_give_zero_solution():
    sys = scalar(Measure(-1, 1, atoms=[(0.0, 1.0)], density=[(-1, 1, 2.0)]))
    tr = solve_ivp(sys, 0.0, -0.5, [0.0], [-1.0, 0.3, 1.0])
    assert np.all(tr.left == 0) and np.all(tr.right == 0)


def test_single_forced_jump():
    sys = scalar(Measure(-2, 2, atoms=[(0.0, 1.0)]))
    tr = solve_ivp(sys, 0.0, -1.0, [1.0], [1.5])
    assert tr.at(-0.5)[0] == 1 and tr.at(0.0)[0] == 1
    assert tr.at_plus(0.0)[0] == 2 and tr.at(1.5)[0] == 2


def test_lebesgue_gives_exponential():
    sys = scalar(Measure.lebesgue(0, 1))
    tr = solve_ivp(sys, 0.0, 0.0, [1.0], [1.0], initial="plus")
    assert abs(tr.at(1.0)[0] - math.e) <= 1e-12


def test_check_uniqueness_flags_sl_factor():
    sig = Measure(-1, 1, atoms=[(0.0, 1.0)], density=[(-1, 1, 1.0)])
    chi = Measure(-1, 1, atoms=[(0.0, 1.0)])
    rho = Measure(-1, 1, atoms=[(0.0, 0.5)], density=[(-1, 1, 1.0)])
    sys = MeasureSystem([[None, sig], [chi, None]], [[None, None], [-rho, None]])
    # factor [[1, s], [c - z r, 1]] has det 1 - s (c - z r)
    assert check_uniqueness(sys, 0.0, -1, 1) == [0.0]
    assert check_uniqueness(sys, 2.0, -1, 1) == []


def test_check_uniqueness_atom_free():
    sys = MeasureSystem([[None, Measure.lebesgue(0, 1)], [Measure.lebesgue(0, 1, -2.0), None]])
    assert check_uniqueness(sys, 1.0, 0, 1) == []


@pytest.mark.parametrize("z", [0.0, 1.7, -3 + 2j])
def test_check_uniqueness_jacobi(z):
    tau = from_jacobi([1.0, 2.0, 0.5, 1.0], [0.3, -1.0, 2.0])
    assert check_uniqueness(tau.system, z, *tau.window) == []


def test_singular_jump_counterexample_directions():
    sys = scalar(Measure(-2, 2, atoms=[(-1.0, -1.0), (1.0, -1.0)]))
    assert check_uniqueness(sys, 0.0, -2, 2) == [-1.0, 1.0]
    tr = solve_ivp(sys, 0.0, -1.5, [3.0], [0.0, 1.5])
    assert tr.at(-1.0)[0] == 3 and tr.at(0.0)[0] == 0 and tr.at(1.5)[0] == 0
    with pytest.raises(SingularJump) as exc:
        solve_ivp(sys, 0.0, 0.0, [1.0], [-1.5])
    assert exc.value.x == -1.0


@pytest.mark.parametrize("A", [
    np.array([[0, 2.0], [-3.0, 0]]),
    np.array([[0, 1.0], [4.0, 0]]),
    np.array([[0, 1.0 + 1j], [2.0 - 1j, 0]]),
    np.array([[0, 1e-6], [1e-7, 0]]),
    np.array([[1.0, 2.0], [0.5, -0.3]]),
])
def test_propagator_matches_expm(A):
    F = np.array([0.4, -1.1 + 0.2j])
    h = 0.8
    E, P = propagator(A.astype(complex), F.astype(complex), h)
    aug = np.zeros((3, 3), dtype=complex)
    aug[:2, :2] = A
    aug[:2, 2] = F
    X = expm(aug * h)
    assert np.allclose(E, X[:2, :2], rtol=1e-12, atol=1e-13)
    assert np.allclose(P, X[:2, 2], rtol=1e-12, atol=1e-13)


def test_three_dimensional_system_matches_cell_products():
    a, b = 0.0, 2.0
    rng = np.random.default_rng(3)
    M = [[Measure(a, b, density=[(0, 1, rng.normal()), (1, 2, rng.normal())]) for _ in range(3)] for _ in range(3)]
    M[0][1] = M[0][1] + Measure(a, b, atoms=[(0.5, 0.7)])
    sys = MeasureSystem(M)
    y0 = np.array([1.0, -0.5, 2.0])
    tr = solve_ivp(sys, 0.0, 0.0, y0, [2.0])
    D1 = np.array([[M[i][j].density_at(0.25) for j in range(3)] for i in range(3)])
    D2 = np.array([[M[i][j].density_at(1.5) for j in range(3)] for i in range(3)])
    W = np.eye(3) + np.array([[M[i][j].atom_mass(0.5) for j in range(3)] for i in range(3)])
    ref = expm(D2) @ expm(0.5 * D1) @ W @ expm(0.5 * D1) @ y0
    assert np.allclose(tr.at(2.0), ref, rtol=1e-12)


def test_density_system_matches_scipy_ode():
    # u' = s(x) v, v' = (k(x) - z r(x)) u with piecewise coefficients
    br = [0.0, 0.7, 1.6, 2.5]
    s, k, r = [1.0, 2.0, 0.5], [0.3, -1.0, 2.0], [1.0, 0.5, 3.0]
    z = 1.3 + 0.4j
    sig = Measure(0, 2.5, density=[(br[i], br[i + 1], s[i]) for i in range(3)])
    chi = Measure(0, 2.5, density=[(br[i], br[i + 1], k[i]) for i in range(3)])
    rho = Measure(0, 2.5, density=[(br[i], br[i + 1], r[i]) for i in range(3)])
    sys = MeasureSystem([[None, sig], [chi, None]], [[None, None], [-rho, None]])
    tr = solve_ivp(sys, z, 0.0, [1.0, 0.5], [2.5])

    def rhs(x, y):
        i = min(int(np.searchsorted(br, x, side="right")) - 1, 2)
        return [s[i] * y[1], (k[i] - z * r[i]) * y[0]]

    sol = sint.solve_ivp(rhs, (0, 2.5), np.array([1.0, 0.5], dtype=complex), method="DOP853",
                         rtol=1e-12, atol=1e-13, t_eval=[2.5])
    assert np.allclose(tr.at(2.5), sol.y[:, -1], rtol=1e-9)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.floats(0.1, 3.9), st.floats(-2, 2)), max_size=4),
       st.floats(0, 4), st.floats(0, 4), st.floats(-3, 3), st.floats(-1, 1))
def test_forward_backward_round_trip(atoms, c, x, zr, zi):
    sig = Measure(0, 4, atoms=[(p, w) for p, w in atoms[:2]], density=[(0, 4, 1.0)])
    chi = Measure(0, 4, atoms=[(p + 0.01, w) for p, w in atoms[2:]], density=[(0, 2, -0.5)])
    rho = Measure(0, 4, density=[(0, 4, 1.0)])
    sys = MeasureSystem([[None, sig], [chi, None]], [[None, None], [-rho, None]])
    z = complex(zr, zi)
    Yc = np.array([0.7, -1.2 + 0.3j])
    try:
        tr = solve_ivp(sys, z, c, Yc, [x])
        back = solve_ivp(sys, z, x, tr.at(x), [c])
    except SingularJump:
        return
    assert np.allclose(back.at(c), Yc, rtol=1e-10, atol=1e-10 * np.abs(Yc).max())
