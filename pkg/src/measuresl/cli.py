"""Batch front-end: `measuresl <command> <problem.toml> [options]`."""
from __future__ import annotations

import argparse
import io
import sys

import numpy as np

from .boundary import BoundaryConditionSpec, build_problem, onedim_classify
from .errors import NUMERICAL_ERRORS, HypothesisViolation, MeasureSLError, NotOnePoint
from .problem import ProblemFileError, load_problem, number
from .spectral import eigenvalues, m_function, weyl_matrix
from .sturm_liouville import solve_tau


def fmt(v: float) -> str:
    return f"{float(v):.17g}"


def write_csv(out, header, rows):
    out.write(",".join(header) + "\n")
    for row in rows:
        out.write(",".join(fmt(v) for v in row) + "\n")


def _pair(text: str) -> complex:
    parts = [p for p in text.split(",")]
    if len(parts) == 1:
        return complex(number(parts[0]), 0.0)
    if len(parts) == 2:
        return complex(number(parts[0]), number(parts[1]))
    raise argparse.ArgumentTypeError(f"expected re,im but got {text!r}")


def _problem(path):
    prob = load_problem(path)
    bc = prob.bc or BoundaryConditionSpec.separate(0.0, 0.0)
    return prob, bc


def cmd_check(args, out):
    prob, bc = _problem(args.file)
    tau = prob.tau
    out.write("hypotheses: ok\n")
    out.write(f"interval: ({fmt(tau.a)}, {fmt(tau.b)})  window: ({fmt(tau.window[0])}, {fmt(tau.window[1])})\n")
    out.write(f"support of rho: [{fmt(tau.alpha_rho)}, {fmt(tau.beta_rho)}]\n")
    problem = build_problem(tau, bc)
    for name, cls in (("a", problem.class_a), ("b", problem.class_b)):
        out.write(f"endpoint {name}: {cls.tag} ({cls.note})\n")
    out.write(f"boundary conditions: {bc.kind}" + ("" if prob.bc else " (default Dirichlet)") + "\n")
    out.write(f"mul(S) dimension: {problem.mul.dimension}\n")
    for b in problem.mul.basis:
        out.write(f"  mul basis: {b}\n")
    if tau.varrho.support_size() == 1:
        try:
            v = onedim_classify(tau, bc)
        except NotOnePoint:
            v = None
        if v is not None:
            scalar = "none" if v["tau_scalar"] is None else fmt(v["tau_scalar"])
            out.write(f"one-point: self_adjoint={v['self_adjoint']} operator={v['operator']} tau_scalar={scalar}\n")
    return 0


def cmd_solve(args, out):
    prob, _ = _problem(args.file)
    tau = prob.tau
    z = _pair(args.z)
    c = args.c if args.c in ("a", "b") else number(args.c)
    u = solve_tau(tau, z, None, c, _pair(args.d1), _pair(args.d2))
    if args.points:
        xs = [number(p) for p in args.points.split(",")]
    else:
        xs = np.linspace(tau.window[0], tau.window[1], args.n)
    rows = []
    for x in xs:
        f, f1 = (complex(v) for v in u.pair(x))
        rows.append((x, f.real, f.imag, f1.real, f1.imag))
    write_csv(out, ["x", "re_f", "im_f", "re_f1", "im_f1"], rows)
    return 0


def cmd_eig(args, out):
    prob, bc = _problem(args.file)
    problem = build_problem(prob.tau, bc)
    data = eigenvalues(problem, args.lo, args.hi, args.tol)
    write_csv(out, ["lambda", "mu"], zip(data.eigenvalues, data.norming))
    return 0


def cmd_mfun(args, out):
    prob, bc = _problem(args.file)
    problem = build_problem(prob.tau, bc)
    parts = args.grid.split(",")
    if len(parts) != 3:
        raise ProblemFileError("--grid expects re0,re1,n")
    re = np.linspace(number(parts[0]), number(parts[1]), int(number(parts[2])))
    z = re + 1j * args.eps
    M = np.atleast_1d(m_function(problem, z))
    write_csv(out, ["re_z", "im_z", "re_M", "im_M"], zip(z.real, z.imag, M.real, M.imag))
    return 0


def cmd_weylmat(args, out):
    prob, bc = _problem(args.file)
    problem = build_problem(prob.tau, bc)
    z = _pair(args.z)
    M = weyl_matrix(problem, args.x0, args.phi, z)
    rows = [("M11", M[0, 0]), ("M12", M[0, 1]), ("M21", M[1, 0]), ("M22", M[1, 1]),
            ("det", np.linalg.det(M)), ("trace", np.trace(M))]
    out.write("entry,re,im\n")
    for name, v in rows:
        out.write(f"{name},{fmt(v.real)},{fmt(v.imag)}\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="measuresl", description="Sturm-Liouville problems with measure coefficients.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("file", help="problem file (TOML)")
        p.add_argument("-o", "--output", help="write CSV here instead of stdout")
        p.set_defaults(func=fn)
        return p

    add("check", cmd_check, "validate the coefficients and report endpoint classes and mul(S)")
    p = add("solve", cmd_solve, "solve (tau - z) f = 0 with initial data at c")
    p.add_argument("--z", default="0,0", help="spectral parameter re,im")
    p.add_argument("--c", default="a", help="initial point: a, b or a number")
    p.add_argument("--d1", default="0", help="f(c) as re,im")
    p.add_argument("--d2", default="0", help="f^[1](c) as re,im")
    p.add_argument("--points", help="comma-separated evaluation points")
    p.add_argument("--n", type=int, default=101, help="number of equispaced points when --points is absent")
    p = add("eig", cmd_eig, "eigenvalues in [lo, hi] and spectral-measure masses")
    p.add_argument("--lo", type=number, required=True)
    p.add_argument("--hi", type=number, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p = add("mfun", cmd_mfun, "Weyl-Titchmarsh function along a horizontal line")
    p.add_argument("--grid", required=True, help="re0,re1,n")
    p.add_argument("--eps", type=number, default=1e-3, help="imaginary part of z")
    p = add("weylmat", cmd_weylmat, "2x2 Weyl matrix at an interior point")
    p.add_argument("--x0", type=number, required=True)
    p.add_argument("--phi", type=number, default=0.0, help="interface angle at x0")
    p.add_argument("--z", required=True, help="spectral parameter re,im")
    return ap


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    buf = io.StringIO()
    try:
        code = args.func(args, buf)
    except HypothesisViolation as exc:
        stderr.write(f"error: {exc}\n")
        return 1
    except NUMERICAL_ERRORS as exc:
        stderr.write(f"numerical error: {exc}\n")
        return 2
    except (MeasureSLError, ProblemFileError, ValueError, OSError, KeyError) as exc:
        stderr.write(f"error: {exc}\n")
        return 1
    text = buf.getvalue()
    if args.output:
        with open(args.output, "w", newline="\n") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
