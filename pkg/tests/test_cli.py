import io
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from measuresl.cli import run

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def call(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = run([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def rows(text):
    lines = text.strip().split("\n")
    return lines[0].split(","), [line.split(",") for line in lines[1:]]


def test_eig_dirichlet():
    code, out, _ = call("eig", PROBLEMS / "dirichlet_pi.toml", "--lo", 0, "--hi", 30)
    assert code == 0
    header, body = rows(out)
    assert header == ["lambda", "mu"]
    lam = np.array([float(r[0]) for r in body])
    mu = np.array([float(r[1]) for r in body])
    n = np.arange(1, 6)
    assert np.allclose(lam, n ** 2, atol=1e-8)
    assert np.allclose(mu, 2 * n ** 2 / np.pi, rtol=1e-7)


def test_eig_jacobi_matches_matrix():
    code, out, _ = call("eig", PROBLEMS / "jacobi3.toml", "--lo", -20, "--hi", 20)
    p, q = np.array([1.0, 2.0, 1.5, 1.0]), np.array([0.5, -1.0, 2.0])
    J = np.diag(q + p[:-1] + p[1:]) - np.diag(p[1:-1], 1) - np.diag(p[1:-1], -1)
    lam = [float(r[0]) for r in rows(out)[1]]
    assert code == 0 and np.allclose(lam, np.linalg.eigvalsh(J), atol=1e-9)


def test_check_reports_shared_atom():
    code, out, err = call("check", PROBLEMS / "bad_shared_atom.toml")
    assert code == 1 and out == ""
    assert "no point masses in common" in err and "0.5" in err


def test_check_good_problem():
    code, out, _ = call("check", PROBLEMS / "string.toml")
    assert code == 0
    assert out.startswith("hypotheses: ok\n")
    assert "mul(S) dimension: 0" in out


def test_check_one_point_verdict(tmp_path):
    f = tmp_path / "one.toml"
    f.write_text('[interval]\na = -1\nb = 1\none_point = true\n[varrho]\natoms = [[0, 2]]\n'
                 '[varsigma]\ndensity = [[-1, 1, 1]]\n[chi]\natoms = [[0, 0.6]]\n'
                 '[bc]\ntype = "separate"\nphi_a = "pi/2"\nphi_b = "pi/2"\nbasis_a = "left_limit"\n'
                 'basis_b = "left_limit"\n')
    code, out, _ = call("check", f)
    assert code == 0
    assert "one-point: self_adjoint=True operator=True tau_scalar=0.29999999999999999" in out


def test_solve_zero_data_gives_zero_rows():
    code, out, _ = call("solve", PROBLEMS / "dirichlet_pi.toml", "--z", "2,1", "--n", 7)
    header, body = rows(out)
    assert code == 0 and header == ["x", "re_f", "im_f", "re_f1", "im_f1"]
    assert len(body) == 7
    assert all(float(v) == 0.0 for r in body for v in r[1:])


def test_solve_sine():
    code, out, _ = call("solve", PROBLEMS / "dirichlet_pi.toml", "--z", 1, "--d2", 1, "--points", "0,1,pi/2")
    body = np.array(rows(out)[1], dtype=float)
    assert np.allclose(body[:, 1], np.sin(body[:, 0]), atol=1e-12)
    assert np.allclose(body[:, 3], np.cos(body[:, 0]), atol=1e-12)


def test_weylmat_determinant():
    code, out, _ = call("weylmat", PROBLEMS / "dirichlet_pi.toml", "--x0", 1.0, "--z", "0,1")
    body = {r[0]: complex(float(r[1]), float(r[2])) for r in rows(out)[1]}
    assert code == 0 and list(body) == ["M11", "M12", "M21", "M22", "det", "trace"]
    assert abs(body["det"] + 0.25) <= 1e-10


def test_mfun_herglotz():
    code, out, _ = call("mfun", PROBLEMS / "jacobi3.toml", "--grid=-3,3,13", "--eps", 0.1)
    body = np.array(rows(out)[1], dtype=float)
    assert code == 0 and body.shape == (13, 4)
    assert np.all(body[:, 3] > 0)


@pytest.mark.parametrize("argv", [
    ("weylmat", "dirichlet_pi.toml", "--x0", 1.0, "--z", "1,0"),
    ("mfun", "dirichlet_pi.toml", "--grid", "0.5,2,4", "--eps", 0),
])
def test_numerical_errors_exit_2(argv):
    cmd, name, *rest = argv
    code, out, err = call(cmd, PROBLEMS / name, *rest)
    assert code == 2 and out == "" and err.startswith("numerical error:")


@pytest.mark.parametrize("text,needle", [
    ("[interval]\na = 0\nb = 1\n[varrho]\ndensity = [[0, 1, 1]]\n[varsigma]\ndensity = [[0, 1, 1]]\n"
     "[chi]\nweird = 1\n", "weird"),
    ("[jacobi]\np = [1, 1]\nq = [0]\n[varrho]\n", "varrho"),
    ("[interval]\na = 0\nb = \"__import__('os')\"\n", "__import__"),
    ("not toml at all [", ""),
])
def test_problem_file_errors(tmp_path, text, needle):
    f = tmp_path / "p.toml"
    f.write_text(text)
    code, out, err = call("check", f)
    assert code == 1 and out == "" and err.startswith("error:") and needle in err


def test_missing_file_is_an_error(tmp_path):
    code, _, err = call("check", tmp_path / "nope.toml")
    assert code == 1 and err.startswith("error:")


def test_output_file_is_deterministic_with_lf(tmp_path):
    outs = []
    for i in range(2):
        target = tmp_path / f"o{i}.csv"
        code, stdout, _ = call("eig", PROBLEMS / "peakon.toml", "--lo", 0, "--hi", 20, "-o", target)
        assert code == 0 and stdout == ""
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
    assert b"\r" not in outs[0] and outs[0].endswith(b"\n")
    assert outs[0].decode() == call("eig", PROBLEMS / "peakon.toml", "--lo", 0, "--hi", 20)[1]


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "measuresl.cli", "eig", str(PROBLEMS / "dirichlet_pi.toml"),
                          "--lo", "0", "--hi", "5"], capture_output=True, text=True)
    assert res.returncode == 0
    assert float(res.stdout.splitlines()[1].split(",")[0]) == pytest.approx(1.0, abs=1e-9)
