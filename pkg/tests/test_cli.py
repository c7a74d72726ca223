import json
import math
from pathlib import Path

import numpy as np
import pytest

from rigidq import io as rio
from rigidq.cli import EXIT_INPUT, EXIT_OK, EXIT_OPTIMIZE, EXIT_SINGULAR, EXIT_VERIFY, main

FIX = Path(__file__).parent / "fixtures"


def f(name):
    return str(FIX / name)


def run(capsys, *argv):
    code = main(list(argv))
    cap = capsys.readouterr()
    return code, cap.out, cap.err


def values(text):
    out = {}
    for line in text.splitlines():
        parts = line.split(None, 1)
        if len(parts) == 2:
            out[parts[0]] = parts[1]
    return out


def test_energy_bare_protons(capsys):
    code, out, _ = run(capsys, "energy", "--body-a", f("proton_a.yaml"), "--body-b", f("proton_b.yaml"),
                       "--placement-b", "1,0,0,0,0,0")
    assert code == EXIT_OK
    assert "total        1.000000000000" in out.splitlines()
    assert [line.split()[0] for line in out.splitlines()] == ["ee", "en_a_to_b", "en_b_to_a", "nn", "total"]


def test_energy_coincident_nuclei(capsys):
    code, _, err = run(capsys, "energy", "--body-a", f("proton_a.yaml"), "--body-b", f("proton_b.yaml"))
    assert code == EXIT_SINGULAR
    assert "A[0]" in err and "B[0]" in err


def test_energy_missing_file(capsys):
    code, _, err = run(capsys, "energy", "--body-a", f("nope.yaml"), "--body-b", f("proton_b.yaml"))
    assert code == EXIT_INPUT and "nope.yaml" in err


@pytest.mark.parametrize("name", ["bad_sigma.yaml", "bad_syntax.yaml", "empty_body.yaml"])
def test_energy_invalid_bodies(capsys, name):
    code, _, err = run(capsys, "energy", "--body-a", f(name), "--body-b", f("proton_b.yaml"))
    assert code == EXIT_INPUT and name in err


def test_bad_placement_and_usage(capsys):
    code, _, _ = run(capsys, "energy", "--body-a", f("proton_a.yaml"), "--body-b", f("proton_b.yaml"),
                     "--placement-b", "1,0,0")
    assert code == EXIT_INPUT
    assert run(capsys, "frobnicate")[0] == EXIT_INPUT


def test_energy_machine_format(capsys):
    code, out, _ = run(capsys, "--format", "machine", "energy", "--body-a", f("hydrogen.yaml"),
                       "--body-b", f("proton_b.yaml"), "--placement-b", "2,0,0,0,0,0")
    doc = json.loads(out)
    assert code == EXIT_OK
    assert doc["total"] == pytest.approx(doc["ee"] + doc["en_a_to_b"] + doc["en_b_to_a"] + doc["nn"], abs=1e-15)


def test_potential_points(capsys, tmp_path):
    dest = tmp_path / "p.csv"
    code, out, err = run(capsys, "potential", "--body", f("proton_a.yaml"), "--points", f("points.csv"),
                         "--out", str(dest))
    assert code == EXIT_OK
    assert values(out)["warnings"] == "1" and "warning" in err
    rows = dest.read_text().splitlines()
    assert rows[0] == "x,y,z,P"
    p = [float(r.split(",")[3]) for r in rows[1:]]
    assert p[0] == 0.5 and math.isnan(p[1]) and p[2] == pytest.approx(0.1, rel=1e-15)


def test_potential_neutral_far_point(capsys, tmp_path):
    pts = tmp_path / "pts.csv"
    pts.write_text("10,0,0\n")
    dest = tmp_path / "p.csv"
    assert run(capsys, "potential", "--body", f("hydrogen.yaml"), "--points", str(pts), "--out", str(dest))[0] == 0
    assert abs(float(dest.read_text().splitlines()[1].split(",")[3])) <= 1e-9


def test_potential_grid(capsys, tmp_path):
    dest = tmp_path / "p.pot"
    code, _, _ = run(capsys, "potential", "--body", f("proton_a.yaml"), "--grid=-1,-1,-1:1,1,1:3,3,3",
                     "--out", str(dest))
    assert code == EXIT_OK
    pot = rio.read_potential(dest)
    assert pot.masked.sum() == 1 and pot.values[2, 1, 1] == 1.0


def test_potential_grid_zero_count(capsys, tmp_path):
    code, _, _ = run(capsys, "potential", "--body", f("proton_a.yaml"), "--grid", "0,0,0:1,1,1:0,3,3",
                     "--out", str(tmp_path / "p.pot"))
    assert code == EXIT_INPUT


def test_field_energy_neutral_uniform(capsys):
    code, out, _ = run(capsys, "field-energy", "--body", f("hydrogen.yaml"), "--field", f("uniform.yaml"))
    v = values(out)
    assert code == EXIT_OK
    assert abs(float(v["field_energy"])) <= 1e-10 and v["neutral"] == "True"


def test_field_energy_field_list(capsys):
    code, out, _ = run(capsys, "field-energy", "--body", f("proton_a.yaml"), "--field", f("fields_sum.yaml"),
                       "--placement", "2,0,0,0,0,0")
    assert code == EXIT_OK
    assert float(values(out)["field_energy"]) == pytest.approx(1 - 2 + 2 / 8, rel=1e-12)


def test_grid_body_energy(capsys):
    code, out, _ = run(capsys, "energy", "--body-a", f("grid_body.yaml"), "--body-b", f("proton_b.yaml"),
                       "--placement-b", "3,0,0,0,0,0")
    assert code == EXIT_OK
    from scipy.special import erf
    exact = (1 - erf(3 / math.sqrt(2))) / 3
    # grid quadrature error relative to the 1/3 hartree size of the cancelling terms
    assert abs(float(values(out)["total"]) - exact) <= 1e-3 / 3


def test_minimize_writes_result_and_is_deterministic(capsys, tmp_path):
    args = ["minimize", "--body-a", f("polar.yaml"), "--body-b", f("polar.yaml"), "--restarts", "2"]
    c1, out1, _ = run(capsys, *args, "--out", str(tmp_path / "r1.json"))
    c2, out2, _ = run(capsys, *args, "--out", str(tmp_path / "r2.json"))
    assert c1 == c2 == EXIT_OK
    assert out1.replace("r1.json", "") == out2.replace("r2.json", "")
    doc = rio.read_result(tmp_path / "r1.json")
    assert float(values(out1)["best_energy"]) == pytest.approx(doc["best_energy"], rel=1e-12)
    assert values(out1)["status"] in ("converged_gradient", "converged_step", "max_iterations")


def test_minimize_iteration_cap_status(capsys):
    code, out, _ = run(capsys, "minimize", "--body-a", f("hydrogen.yaml"), "--body-b", f("electron.yaml"),
                       "--restarts", "1", "--max-iterations", "1")
    assert code == EXIT_OK and values(out)["status"] in ("max_iterations", "converged_gradient", "converged_step")


def test_minimize_bad_config(capsys):
    code, _, err = run(capsys, "minimize", "--body-a", f("proton_a.yaml"), "--body-b", f("proton_b.yaml"),
                       "--restarts", "0")
    assert code == EXIT_INPUT and "restarts" in err


def test_minimize_all_restarts_fail(capsys):
    code, _, err = run(capsys, "minimize", "--body-a", f("proton_a.yaml"), "--body-b", f("proton_b.yaml"),
                       "--box", "0,0,0:0,0,0", "--restarts", "2")
    assert code == EXIT_OPTIMIZE and "restart" in err


def test_scan_csv_output(capsys, tmp_path):
    dest = tmp_path / "s.csv"
    code, out, _ = run(capsys, "scan", "--body-a", f("proton_a.yaml"), "--body-b", f("proton_b.yaml"),
                       "--axis", "tx:-1:1:3", "--axis", "ty:1:2:2", "--out", str(dest))
    assert code == EXIT_OK
    rows = dest.read_text().splitlines()
    assert len(rows) == 1 + 6
    assert values(out)["flagged"] == "0"
    bad = run(capsys, "scan", "--body-a", f("proton_a.yaml"), "--body-b", f("proton_b.yaml"), "--axis", "tx:1")
    assert bad[0] == EXIT_INPUT


def test_match_two_bodies(capsys, tmp_path):
    dest = tmp_path / "m.csv"
    code, out, _ = run(capsys, "match", f("proton_a.yaml"), f("electron.yaml"), "--restarts", "2",
                       "--out", str(dest))
    assert code == EXIT_OK
    names, e = rio.read_match(dest)
    assert names == ["proton_a", "electron"] and e.shape == (2, 2)
    assert np.isnan(e[0, 0]) and np.isnan(e[1, 1]) and e[0, 1] == e[1, 0] < 0
    assert values(out)["best[proton_a]"] == "electron"


def test_match_machine_format(capsys):
    code, out, _ = run(capsys, "--format", "machine", "match", f("proton_a.yaml"), f("proton_b.yaml"),
                       f("hydrogen.yaml"), "--restarts", "1")
    doc = json.loads(out)
    assert code == EXIT_OK and doc["names"] == ["proton_a", "proton_b", "hydrogen"]
    assert doc["energies"][0][0] is None and doc["energies"][0][1] > 0


def test_verify_coarse_fails_with_exit_one(capsys):
    # a 0.4 bohr cell sum cannot reach 1e-3 on every benchmark
    code, out, _ = run(capsys, "--format", "machine", "verify", "--oracle-spacing", "0.4",
                       "--oracle-samples", "10000")
    doc = json.loads(out)
    assert code == EXIT_VERIFY and doc["failed"] > 0
    assert doc["checks"] == len(doc["results"]) == 30
