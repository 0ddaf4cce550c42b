"""Sturm-Liouville problems whose coefficients are measures."""
from .adapters import (discretize_classical, from_classical, from_jacobi, from_krein_string, from_peakon,
                       jacobi_matrix, jacobi_sequence_function)
from .boundary import (BoundaryConditionSpec, SelfAdjointProblem, boundary_functionals, build_problem,
                       classify_endpoint, mul_basis_function, onedim_classify)
from .errors import (BracketTooCoarse, DenominatorVanishes, EndpointNotRegular, HypothesisViolation, InvalidBC,
                     MeasureSLError, NoGapAtEndpoint, NotOnePoint, PositionOutsideInterval, SingularJump,
                     ZAtEigenvalue, ZOnSpectrum)
from .mde import MeasureSystem, check_uniqueness, solve_ivp
from .measure import Measure, PiecewiseFunction, antiderivative, integrate
from .problem import load_problem, parse_problem
from .spectral import (characteristic, eigenvalues, green_function, m_function, norming_constant,
                       resolvent_apply, spectral_measure_atoms, weyl_matrix, weyl_m_pair)
from .sturm_liouville import (QuasiSolution, TauExpression, apply_tau, build_tau, fundamental_system,
                              lagrange_residual, pluecker_residual, solve_tau, wronskian)

__version__ = "0.1.0"
