"""End-to-end acceptance suite: one test per criterion, each reporting a PASS/FAIL line."""

import math
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from rigidq.benchmarks import GAUSSIAN_PAIRS, OPTIMIZER_PAIRS
from rigidq.charge_model import (ChargeBody, GaussianComponent, Nucleus, sample_gaussians_on_grid,
                                 total_electron_count)
from rigidq.cli import EXIT_INPUT, EXIT_OK, EXIT_OPTIMIZE, EXIT_SINGULAR, main
from rigidq.coulomb import bilinear_form, interaction_energy
from rigidq.field import UniformField, field_energy
from rigidq.geometry import Bounds, EulerAngles, RigidPlacement, compose, sample_placement
from rigidq.optimize import OptimizerConfig, ScanAxis, gradient, minimize_multistart, scan, scan_minimum
from rigidq.oracle import OracleSpec
from rigidq.verify import run_suite

FIX = Path(__file__).parent / "fixtures"
I = RigidPlacement()


def report(number, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {title} ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_1_kernels_match_oracles():
    t = time.perf_counter()
    checks = run_suite(OracleSpec(half_width=8.0, spacing=0.1, samples=1_000_000, seed=0))
    seconds = time.perf_counter() - t
    failed = [c.line() for c in checks if not c.passed]
    worst_rel = max(c.error for c in checks if c.method == "cellsum")
    worst_sig = max(c.error for c in checks if c.method == "mc")
    ok = len(checks) == 30 and not failed and seconds <= 300
    assert report(1, "kernel-oracle equivalence", ok,
                  f"{len(checks)} checks, worst cellsum rel {worst_rel:.2e}, worst mc {worst_sig:.2f} sigma, "
                  f"{seconds:.0f} s"), failed


def test_2_rigid_motion_invariance():
    t = time.perf_counter()
    rng = np.random.default_rng(2026)
    pa = RigidPlacement((0.1, 0.2, -0.1), EulerAngles(-0.2, 0.4, 0.9))
    pb = RigidPlacement((0.3, -0.4, 0.5), EulerAngles(0.7, 1.1, -0.4))
    worst = 0.0
    for pair in GAUSSIAN_PAIRS:
        e0 = interaction_energy(pair.a, pa, pair.b, pb).total
        for _ in range(100):
            h = sample_placement(rng, Bounds.cube(10.0))
            e = interaction_energy(pair.a, compose(h, pa), pair.b, compose(h, pb)).total
            worst = max(worst, abs(e - e0) / abs(e0))
    seconds = time.perf_counter() - t
    # 100 placements on each of the five pairs, timed as a whole
    assert report(2, "global rigid-motion invariance", worst <= 1e-9 and seconds <= 10,
                  f"worst rel {worst:.2e}, {seconds:.2f} s")


def test_3_bilinear_form_identity():
    p = RigidPlacement((0.2, -0.1, 0.3), EulerAngles(0.5, 0.6, 0.7))
    worst = max(abs(bilinear_form(pr.a, I, pr.b, p) - interaction_energy(pr.a, I, pr.b, p).total)
                for pr in GAUSSIAN_PAIRS)
    assert report(3, "bilinear-form identity", worst <= 1e-10, f"worst abs {worst:.2e}")


def random_neutral_body(rng, name):
    nuclei = [Nucleus(tuple(rng.uniform(-2, 2, 3)), float(rng.integers(1, 7))) for _ in range(rng.integers(1, 4))]
    total = math.fsum(n.Z for n in nuclei)
    k = int(rng.integers(1, 5))
    w = rng.dirichlet(np.ones(k)) * total
    w[-1] = total - math.fsum(w[:-1])
    gaussians = [GaussianComponent(tuple(rng.uniform(-2, 2, 3)), float(rng.uniform(0.3, 2.0)), float(wi))
                 for wi in w]
    return ChargeBody(name, tuple(nuclei), tuple(gaussians))


def test_4_neutral_body_uniform_field_nullity():
    rng = np.random.default_rng(4)
    worst = 0.0
    for i in range(20):
        body = random_neutral_body(rng, f"n{i}")
        c = float(rng.uniform(-10, 10))
        p = sample_placement(rng, Bounds.cube(5.0))
        worst = max(worst, abs(field_energy(body, p, UniformField(c))))
    assert report(4, "neutral-body uniform-field nullity", worst <= 1e-10, f"worst |E| {worst:.2e}")


def sphere(name, Z, sigma, n):
    nuclei = (Nucleus((0, 0, 0), Z),) if Z else ()
    gaussians = (GaussianComponent((0, 0, 0), sigma, n),) if n else ()
    return ChargeBody(name, nuclei, gaussians)


CHARGED_PAIRS = [
    (sphere("cation", 3.0, 0.8, 2.0), sphere("anion", 1.0, 1.1, 2.0)),
    (sphere("alpha", 2.0, 0, 0), sphere("electron", 0, 1.0, 1.0)),
    (sphere("dication", 3.0, 0.9, 1.0), sphere("dication", 3.0, 0.9, 1.0)),
    (sphere("pair", 1.0, 0.5, 2.0), sphere("triple", 0, 1.3, 3.0)),
]


def test_5_far_field_monopole_limit():
    worst = 0.0
    for a, b in CHARGED_PAIRS:
        qa = sum(n.Z for n in a.nuclei) - a.electron_count
        qb = sum(n.Z for n in b.nuclei) - b.electron_count
        assert abs(qa * qb) >= 1
        smax = lambda body: max((g.sigma for g in body.gaussians), default=0.0)
        R = 10 * (smax(a) + smax(b))
        direction = np.array([1.0, -2.0, 0.5]) / np.linalg.norm([1.0, -2.0, 0.5])
        e = interaction_energy(a, I, b, RigidPlacement(tuple(R * direction))).total
        worst = max(worst, abs(e / (qa * qb / R) - 1))
    assert report(5, "far-field monopole limit", worst <= 1e-6, f"worst rel {worst:.2e}")


def test_6_normalization_identities():
    exact_ok = True
    worst_grid = 0.0
    for pair in GAUSSIAN_PAIRS:
        for body in (pair.a, pair.b):
            exact_ok &= total_electron_count(body) == math.fsum(g.weight for g in body.gaussians)
            smin = min(g.sigma for g in body.gaussians)
            h = smin / 4
            centers = np.array([g.center for g in body.gaussians])
            reach = 6 * max(g.sigma for g in body.gaussians)
            lo, hi = centers.min(axis=0) - reach, centers.max(axis=0) + reach
            counts = tuple(int(v) for v in np.ceil((hi - lo) / h) + 1)
            grid = sample_gaussians_on_grid(body.gaussians, tuple(lo), h, counts)
            gbody = ChargeBody(body.name, body.nuclei, grid=grid, electron_count=body.electron_count)
            worst_grid = max(worst_grid, abs(total_electron_count(gbody) / body.electron_count - 1))
    assert report(6, "normalization identities", exact_ok and worst_grid <= 1e-3,
                  f"gaussian exact {exact_ok}, worst grid rel {worst_grid:.2e}")


def test_7_gradient_check():
    from rigidq.benchmarks import proton
    worst = 0.0
    for R in (1.0, 2.0, 5.0):
        g = gradient(np.array([R, 0, 0, 0, 0, 0.0]), proton(), proton())
        worst = max(worst, abs(g[0] / (-1 / R**2) - 1))
    assert report(7, "finite-difference gradient", worst <= 1e-6, f"worst rel {worst:.2e}")


COARSE_AXES = [
    ScanAxis("tx", -5, 5, 7), ScanAxis("ty", -5, 5, 7), ScanAxis("tz", -5, 5, 7),
    ScanAxis("alpha", -math.pi, math.pi * 5 / 7, 7), ScanAxis("beta", 0, math.pi, 7),
    ScanAxis("gamma", -math.pi, math.pi * 5 / 7, 7),
]


def test_8_optimizer_beats_scan_oracle():
    t = time.perf_counter()
    cfg = OptimizerConfig(restarts=16, seed=1)
    details, ok = [], True
    for pair in OPTIMIZER_PAIRS:
        res = minimize_multistart(pair.a, pair.b, cfg)
        again = minimize_multistart(pair.a, pair.b, cfg)
        best = scan_minimum(scan(pair.a, pair.b, COARSE_AXES, config=cfg))
        monotone = all(b[1] <= a[1] for tr in res.trace for a, b in zip(tr, tr[1:]))
        identical = res.as_dict() == again.as_dict() and np.array_equal(res.best_params, again.best_params)
        pair_ok = res.best_energy <= best.objective + 1e-6 and monotone and identical
        ok &= pair_ok
        details.append(f"{pair.name} {res.best_energy:.6g} vs scan {best.objective:.6g}")
    seconds = time.perf_counter() - t
    ok &= seconds <= 600
    assert report(8, "optimizer vs scan oracle", ok, "; ".join(details) + f"; {seconds:.0f} s")


def test_9_cli_contract(capsys):
    f = lambda name: str(FIX / name)
    results = {}
    pa, pb = f("proton_a.yaml"), f("proton_b.yaml")

    code = main(["energy", "--body-a", pa, "--body-b", pb, "--placement-b", "1,0,0,0,0,0"])
    out = capsys.readouterr().out
    results["energy total 1.000000000000"] = code == EXIT_OK and "total        1.000000000000" in out.splitlines()
    results["exit 2 missing file"] = main(["energy", "--body-a", f("missing.yaml"), "--body-b", pb]) == EXIT_INPUT
    results["exit 2 bad sigma"] = main(["energy", "--body-a", f("bad_sigma.yaml"), "--body-b", pb]) == EXIT_INPUT
    results["exit 3 coincident"] = main(["energy", "--body-a", pa, "--body-b", pb]) == EXIT_SINGULAR
    results["exit 4 all restarts fail"] = main(["minimize", "--body-a", pa, "--body-b", pb, "--box", "0,0,0:0,0,0",
                                                "--restarts", "2"]) == EXIT_OPTIMIZE
    results["verify exit 0"] = main(["verify"]) == EXIT_OK
    capsys.readouterr()
    failed = [k for k, v in results.items() if not v]
    assert report(9, "CLI contract", not failed, "failed: " + ", ".join(failed) if failed else
                  f"{len(results)} checks"), failed
