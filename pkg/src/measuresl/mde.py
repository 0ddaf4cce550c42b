"""Linear measure differential equations dY/d(omega) = (M1 + z M2) Y + F.

Coefficients are given directly as measures M_ij (= dM_ij/d(omega) times omega),
so on a density cell the system is the constant-coefficient ODE
Y' = (D1 + z D2) Y + DF and at an atom x

    Y(x+) = (I + A1 + z A2) Y(x) + AF,

where A1, A2, AF are the atom weights. Going left the relation is inverted.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import PositionOutsideInterval, SingularJump
from .measure import Measure, csd

_SINGULAR_RTOL = 1e-12


def _zero_like(m: Measure) -> Measure:
    return Measure.zero(m.a, m.b)


class MeasureSystem:
    """n x n system with measure coefficients.

    `m1`, `m2` are n x n nested sequences of Measure or None, `forcing` an
    n-sequence of Measure or None. `omega` defaults to the sum of the total
    variations of all entries.
    """

    def __init__(self, m1, m2=None, forcing=None, omega: Measure | None = None):
        n = len(m1)
        ref = next(m for row in m1 for m in row if m is not None)
        self.n = n
        self.a, self.b = ref.a, ref.b
        fill = lambda m: _zero_like(ref) if m is None else m
        self.m1 = [[fill(m) for m in row] for row in m1]
        self.m2 = [[fill(m) for m in row] for row in (m2 or [[None] * n for _ in range(n)])]
        self.forcing = [fill(m) for m in (forcing or [None] * n)]
        entries = [m for row in self.m1 + self.m2 for m in row] + self.forcing
        if omega is None:
            omega = Measure.zero(self.a, self.b)
            for m in entries:
                omega = omega + m.variation()
        if not omega.is_nonnegative():
            raise ValueError("omega must be a nonnegative measure")
        for m in entries:
            for x in m.atom_x:
                if omega.atom_mass(x) == 0:
                    raise ValueError(f"coefficient atom at {x} is not an atom of omega")
        self.omega = omega

        pos = set()
        for m in entries:
            pos.update(m.atom_x.tolist())
            pos.update(v for v in m.breaks.tolist() if np.isfinite(v))
        pos.update(v for v in (self.a, self.b) if np.isfinite(v))
        self.mesh = np.array(sorted(pos), dtype=float)
        self._atom_cache: dict[float, tuple] = {}
        self._cell_cache: dict[int, tuple] = {}

    # -- local data
    def atom_data(self, x: float):
        """(A1, A2, AF) atom weights at x."""
        x = float(x)
        if x not in self._atom_cache:
            n = self.n
            A1 = np.array([[self.m1[i][j].atom_mass(x) for j in range(n)] for i in range(n)], dtype=complex)
            A2 = np.array([[self.m2[i][j].atom_mass(x) for j in range(n)] for i in range(n)], dtype=complex)
            AF = np.array([f.atom_mass(x) for f in self.forcing], dtype=complex)
            self._atom_cache[x] = (A1, A2, AF)
        return self._atom_cache[x]

    def cell_data(self, lo: float, hi: float):
        """(D1, D2, DF) densities on the mesh cell containing (lo, hi)."""
        mid = 0.5 * (lo + hi)
        k = int(np.searchsorted(self.mesh, mid))
        if k not in self._cell_cache:
            n = self.n
            D1 = np.array([[self.m1[i][j].density_at(mid) for j in range(n)] for i in range(n)], dtype=complex)
            D2 = np.array([[self.m2[i][j].density_at(mid) for j in range(n)] for i in range(n)], dtype=complex)
            DF = np.array([f.density_at(mid) for f in self.forcing], dtype=complex)
            self._cell_cache[k] = (D1, D2, DF)
        return self._cell_cache[k]

    def coefficient_norm_measure(self) -> Measure:
        """Measure with density/atoms ||M_ij|| summed entrywise (for Gronwall bounds)."""
        tot = Measure.zero(self.a, self.b)
        for row in self.m1:
            for m in row:
                tot = tot + m.variation()
        return tot


def is_singular(F: np.ndarray) -> bool:
    n = F.shape[0]
    nrm = np.linalg.norm(F, 2)
    if nrm == 0.0:
        return True
    return abs(np.linalg.det(F)) < _SINGULAR_RTOL * nrm ** n


def jump_factor(sys: MeasureSystem, z: complex, x: float):
    """Return (I + omega({x}) M(x), singular_flag)."""
    A1, A2, _ = sys.atom_data(x)
    F = np.eye(sys.n, dtype=complex) + A1 + z * A2
    return F, is_singular(F)


def check_uniqueness(sys: MeasureSystem, z: complex, lo: float, hi: float) -> list[float]:
    """Atoms in [lo, hi] whose jump factor is singular."""
    out = []
    for x in sys.mesh:
        if lo <= x <= hi:
            A1, A2, _ = sys.atom_data(x)
            if A1.any() or A2.any():
                if jump_factor(sys, z, x)[1]:
                    out.append(float(x))
    return out


# ---------------------------------------------------------------------------
# constant-coefficient cell propagation


def propagator(A: np.ndarray, F: np.ndarray, h: float):
    """Return (E, P) with E = exp(A h) and P = int_0^h exp(A s) ds @ F."""
    n = A.shape[0]
    if n == 2:
        m = 0.5 * (A[0, 0] + A[1, 1])
        if m == 0:
            mu2 = -(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0])
            C, S, D = (complex(v) for v in csd(mu2, h))
            E = C * np.eye(2) + S * A
            P = S * F + D * (A @ F)
            return E, P
    aug = np.zeros((n + 1, n + 1), dtype=complex)
    aug[:n, :n] = A * h
    aug[:n, n] = F * h
    X = scipy.linalg.expm(aug)
    return X[:n, :n], X[:n, n]


@dataclass(frozen=True)
class Trajectory:
    """Nodal values Y(x) (`left`) and Y(x+) (`right`) plus per-cell data.

    `start` is the index of the initial node; cells to its left were filled
    by propagating leftwards.
    """

    nodes: np.ndarray
    left: np.ndarray
    right: np.ndarray
    cell_A: np.ndarray
    cell_F: np.ndarray
    start: int = 0

    def _locate(self, x):
        if not (self.nodes[0] <= x <= self.nodes[-1]):
            raise PositionOutsideInterval(x, self.nodes[0], self.nodes[-1])
        return int(np.searchsorted(self.nodes, x))

    def at(self, x) -> np.ndarray:
        k = self._locate(x)
        if self.nodes[k] == x:
            return self.left[k]
        if k - 1 < self.start:
            E, P = propagator(self.cell_A[k - 1], self.cell_F[k - 1], x - self.nodes[k])
            return E @ self.left[k] + P
        E, P = propagator(self.cell_A[k - 1], self.cell_F[k - 1], x - self.nodes[k - 1])
        return E @ self.right[k - 1] + P

    def at_plus(self, x) -> np.ndarray:
        k = self._locate(x)
        if self.nodes[k] == x:
            return self.right[k]
        return self.at(x)

    def propagators(self):
        """Per-cell (E, P) pairs."""
        return [propagator(A, F, h) for A, F, h in zip(self.cell_A, self.cell_F, np.diff(self.nodes))]


def solve_ivp(sys: MeasureSystem, z: complex, c: float, Yc: Sequence, targets: Sequence[float] = (),
              initial: str = "at") -> Trajectory:
    """Solve Y(x) = Y_c + int_c^x (M Y + F) d(omega) on the span of c and targets.

    `initial="at"` prescribes Y(c) = Yc, `initial="plus"` prescribes Y(c+) = Yc.
    Nodes are c, the targets and every atom/breakpoint in between.
    """
    if initial not in ("at", "plus"):
        raise ValueError("initial must be 'at' or 'plus'")
    c = float(c)
    pts = [c] + [float(t) for t in targets]
    for p in pts:
        if not (sys.a <= p <= sys.b) or not np.isfinite(p):
            raise PositionOutsideInterval(p, sys.a, sys.b)
    lo, hi = min(pts), max(pts)
    inner = sys.mesh[(sys.mesh >= lo) & (sys.mesh <= hi)]
    nodes = np.unique(np.concatenate([np.array(pts), inner]))
    N, n = len(nodes), sys.n
    k0 = int(np.searchsorted(nodes, c))
    Yc = np.asarray(Yc, dtype=complex).reshape(n)
    left = np.full((N, n), np.nan, dtype=complex)
    right = np.full((N, n), np.nan, dtype=complex)
    cell_A = np.zeros((max(N - 1, 0), n, n), dtype=complex)
    cell_F = np.zeros((max(N - 1, 0), n), dtype=complex)
    for k in range(N - 1):
        D1, D2, DF = sys.cell_data(nodes[k], nodes[k + 1])
        cell_A[k] = D1 + z * D2
        cell_F[k] = DF

    def jump(x):
        F, sing = jump_factor(sys, z, x)
        return F, sing, sys.atom_data(x)[2]

    J, sing, AF = jump(c)
    if initial == "at":
        left[k0] = Yc
        right[k0] = J @ Yc + AF
    else:
        right[k0] = Yc
        if k0 > 0 or c in targets:
            if sing:
                raise SingularJump(c)
            left[k0] = np.linalg.solve(J, Yc - AF)

    for k in range(k0, N - 1):
        E, P = propagator(cell_A[k], cell_F[k], nodes[k + 1] - nodes[k])
        left[k + 1] = E @ right[k] + P
        J, _, AF = jump(nodes[k + 1])
        right[k + 1] = J @ left[k + 1] + AF

    for k in range(k0, 0, -1):
        h = nodes[k] - nodes[k - 1]
        E, P = propagator(cell_A[k - 1], cell_F[k - 1], h)
        Einv, _ = propagator(cell_A[k - 1], np.zeros(n, dtype=complex), -h)
        right[k - 1] = Einv @ (left[k] - P)
        J, sing, AF = jump(nodes[k - 1])
        if sing:
            raise SingularJump(float(nodes[k - 1]))
        left[k - 1] = np.linalg.solve(J, right[k - 1] - AF)

    return Trajectory(nodes, left, right, cell_A, cell_F, k0)
