"""Problem files: TOML with measure literals, adapter shortcuts and boundary conditions.

Numbers may be written as plain TOML numbers or as strings holding a small
arithmetic expression in pi, e and inf (for example "2*pi" or "-inf").
"""
from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import adapters
from .boundary import BoundaryConditionSpec
from .measure import Measure
from .sturm_liouville import TauExpression, build_tau


class ProblemFileError(ValueError):
    pass


_NAMES = {"pi": math.pi, "e": math.e, "inf": math.inf}
_OPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv,
        ast.Pow: operator.pow, ast.USub: operator.neg, ast.UAdd: operator.pos}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
        return float(node.value)
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _OPS:
        return _OPS[type(node.op)](_eval_node(node.operand))
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "sqrt" \
            and len(node.args) == 1:
        return math.sqrt(_eval_node(node.args[0]))
    raise ProblemFileError(f"unsupported element {type(node).__name__}")


def number(v) -> float:
    if isinstance(v, bool):
        raise ProblemFileError("expected a number, got a boolean")
    if isinstance(v, (int, float)):
        return float(v)
    if isinstance(v, str):
        try:
            return _eval_node(ast.parse(v.strip(), mode="eval"))
        except SyntaxError as exc:
            raise ProblemFileError(f"cannot parse number {v!r}") from exc
        except ProblemFileError as exc:
            raise ProblemFileError(f"cannot evaluate {v!r}: {exc}") from None
    raise ProblemFileError(f"expected a number, got {v!r}")


def _complex(parts) -> complex:
    re = number(parts[0])
    im = number(parts[1]) if len(parts) > 1 else 0.0
    return complex(re, im)


def parse_measure(section: dict, a: float, b: float) -> Measure:
    atoms = []
    for entry in section.get("atoms", []):
        if len(entry) not in (2, 3):
            raise ProblemFileError("atoms entries are [x, re] or [x, re, im]")
        atoms.append((number(entry[0]), _complex(entry[1:])))
    cells = []
    for entry in section.get("density", []):
        if len(entry) not in (3, 4):
            raise ProblemFileError("density entries are [x0, x1, re] or [x0, x1, re, im]")
        cells.append((number(entry[0]), number(entry[1]), _complex(entry[2:])))
    unknown = set(section) - {"atoms", "density"}
    if unknown:
        raise ProblemFileError(f"unknown measure keys {sorted(unknown)}")
    return Measure(a, b, atoms, cells)


def parse_bc(data: dict | None) -> BoundaryConditionSpec | None:
    if data is None:
        return None
    kind = data.get("type", "separate")
    basis = dict(basis_a=data.get("basis_a"), basis_b=data.get("basis_b"))
    if kind == "separate":
        return BoundaryConditionSpec.separate(number(data.get("phi_a", 0.0)), number(data.get("phi_b", 0.0)),
                                              **basis)
    if kind == "coupled":
        R = data.get("R", [[1, 0], [0, 1]])
        R = [[number(v) for v in row] for row in R]
        return BoundaryConditionSpec.coupled(number(data.get("phi", 0.0)), R, **basis)
    raise ProblemFileError(f"unknown boundary condition type {kind!r}")


@dataclass
class Problem:
    tau: TauExpression
    bc: BoundaryConditionSpec | None
    source: str = ""


_RAW = ("varrho", "varsigma", "chi")
_ADAPTERS = ("jacobi", "classical", "krein", "peakon")


def _values(v):
    return [number(x) for x in v] if isinstance(v, list) else number(v)


def parse_problem(data: dict, source: str = "") -> Problem:
    raw = [k for k in _RAW if k in data]
    adapt = [k for k in _ADAPTERS if k in data]
    if adapt and raw:
        raise ProblemFileError(f"adapter section [{adapt[0]}] cannot be combined with [{raw[0]}]")
    if len(adapt) > 1:
        raise ProblemFileError("use at most one adapter section")
    interval = data.get("interval", {})
    bc = parse_bc(data.get("bc"))
    window = interval.get("window")
    window = None if window is None else (number(window[0]), number(window[1]))
    if adapt:
        kind = adapt[0]
        sec = data[kind]
        if kind == "jacobi":
            tau = adapters.from_jacobi(_values(sec["p"]), _values(sec["q"]), number(sec.get("padding", 1.0)))
        elif kind == "classical":
            a = number(sec.get("a", interval.get("a")))
            b = number(sec.get("b", interval.get("b")))
            breaks = _values(sec["breaks"]) if "breaks" in sec else None
            tau = adapters.from_classical(_values(sec.get("r", 1.0)), _values(sec.get("p", 1.0)),
                                          _values(sec.get("q", 0.0)), (a, b), breaks, window)
        elif kind == "krein":
            L = number(sec.get("length", interval.get("b")))
            mass = parse_measure({k: v for k, v in sec.items() if k in ("atoms", "density")}, 0.0, L)
            tau = adapters.from_krein_string(mass)
        else:
            tau = adapters.from_peakon(_values(sec.get("positions", [])), _values(sec.get("masses", [])),
                                       number(sec.get("margin", 10.0)))
        return Problem(tau, bc, source)
    if "a" not in interval or "b" not in interval:
        raise ProblemFileError("[interval] needs a and b")
    a, b = number(interval["a"]), number(interval["b"])
    missing = [k for k in _RAW if k not in data]
    if missing:
        raise ProblemFileError(f"missing sections {missing}")
    rho, sig, chi = (parse_measure(data[k], a, b) for k in _RAW)
    tau = build_tau(rho, sig, chi, window, bool(interval.get("one_point", False)))
    return Problem(tau, bc, source)


def load_problem(path) -> Problem:
    path = Path(path)
    try:
        data = tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise ProblemFileError(f"{path}: {exc}") from exc
    return parse_problem(data, str(path))
