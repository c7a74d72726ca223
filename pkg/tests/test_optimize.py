import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rigidq.benchmarks import OPTIMIZER_PAIRS, by_name, electron_cloud, hydrogen_like, polar, proton
from rigidq.charge_model import ChargeBody, Nucleus
from rigidq.coulomb import interaction_energy
from rigidq.errors import InvalidArgumentError, OptimizationError
from rigidq.geometry import Bounds, params_to_placement
from rigidq.optimize import (FD_STEP, InvalidStartError, OptimizerConfig, ScanAxis, _Problem, gradient,
                             match_pairs, minimize_local, minimize_multistart, objective, restart_start, scan,
                             scan_minimum)
from rigidq.coulomb import DEFAULT_QUAD

CFG = OptimizerConfig()


def at(tx, ty=0.0, tz=0.0, a=0.0, b=0.0, g=0.0):
    return np.array([tx, ty, tz, a, b, g], float)


def raw(params, a, b):
    return interaction_energy(a, params_to_placement(np.zeros(6)), b, params_to_placement(params)).total


def is_non_increasing(trace):
    return all(later[1] <= earlier[1] for earlier, later in zip(trace, trace[1:]))


# -- objective ---------------------------------------------------------------

def test_objective_equals_energy_when_far():
    a, b = proton(), proton()
    assert objective(at(3.0), a, b) == raw(at(3.0), a, b) == pytest.approx(1 / 3, rel=1e-15)


def test_penalty_active_below_min_separation():
    a, b = proton(), proton()
    got = objective(at(0.05), a, b)
    assert got > raw(at(0.05), a, b)
    assert got - raw(at(0.05), a, b) == pytest.approx(1e3 * 0.05**2, rel=1e-9)


def test_neutral_bodies_far_apart_vanish():
    assert abs(objective(at(100.0), hydrogen_like(), hydrogen_like())) <= 1e-8


# -- gradient ----------------------------------------------------------------

@pytest.mark.parametrize("R", [1.0, 2.0, 5.0])
def test_gradient_two_point_charges(R):
    g = gradient(at(R), proton(), proton())
    assert abs(g[0] / (-1 / R**2) - 1) <= 1e-6
    assert np.all(np.abs(g[1:]) <= 1e-9)


def test_sphere_has_no_angular_gradient():
    g = gradient(at(1.5, 0.7, -0.4, 0.3, 0.9, -1.2), polar(), hydrogen_like(sigma=0.9))
    assert np.all(np.abs(g[3:]) <= 1e-8)


@settings(max_examples=20, deadline=None)
@given(st.tuples(st.floats(1.5, 4), st.floats(-2, 2), st.floats(-2, 2),
                 st.floats(-3, 3), st.floats(0.2, 2.9), st.floats(-3, 3)))
def test_gradient_richardson_self_consistent(v):
    # central differences at h and h/2 share the leading error term;
    # the extrapolated estimate must agree with the h estimate closely
    a, b = OPTIMIZER_PAIRS[2].a, OPTIMIZER_PAIRS[2].b
    x = np.array(v)
    p = _Problem(a, b, CFG, DEFAULT_QUAD)
    g = p.gradient(x)
    half = np.empty(6)
    for i in range(6):
        e = np.zeros(6)
        e[i] = FD_STEP / 2
        half[i] = (p.objective(x + e) - p.objective(x - e)) / FD_STEP
    rich = (4 * half - g) / 3
    scale = max(np.linalg.norm(rich), 1e-6)
    assert np.linalg.norm(g - rich) <= 1e-4 * scale


# -- local descent -----------------------------------------------------------

def test_saddle_start_returned():
    a = ChargeBody("pair", (Nucleus((-1, 0, 0), 1.0), Nucleus((1, 0, 0), 1.0)))
    start = at(0.0)
    res = minimize_local(start, a, proton())
    assert res.iterations == 0 and res.status == "converged_gradient"
    assert np.array_equal(res.best_params, start)


def test_proton_vs_electron_cloud_falls_in():
    res = minimize_local(at(5.0), proton(), electron_cloud())
    assert res.status == "converged_gradient"
    assert res.gradient_norm <= CFG.gradient_tolerance
    # minimum of -erf(R/sqrt2)/R is at R = 0 with value -sqrt(2/pi)
    assert res.best_energy == pytest.approx(-math.sqrt(2 / math.pi), abs=1e-9)
    assert np.linalg.norm(res.best_params[:3]) <= 1e-2
    assert is_non_increasing(res.trace[0])


def test_penalty_balances_attraction():
    # proton against the narrow anion: the net -1/R attraction is balanced
    # where dE/dR = 2 k (d_min - R)
    pair = by_name(OPTIMIZER_PAIRS, "attractive-penalized")
    res = minimize_local(at(2.0), pair.a, pair.b)
    R = float(np.linalg.norm(res.best_params[:3]))
    k, d = CFG.penalty_stiffness, CFG.min_nucleus_separation
    from scipy.optimize import brentq
    from scipy.special import erf
    s = math.sqrt(2) * 0.05
    dE = lambda r: -1 / r**2 + 2 * (erf(r / s) / r**2 - 2 / (math.sqrt(math.pi) * s * r) * math.exp(-(r / s) ** 2))
    R_star = brentq(lambda r: dE(r) - 2 * k * (d - r), 0.05, d)
    assert abs(R - R_star) <= 1e-4
    assert res.penalty > 0


def test_invalid_start():
    with pytest.raises(InvalidStartError):
        minimize_local(at(0.0), proton(), proton())
    with pytest.raises(InvalidArgumentError):
        minimize_local([1.0, 2.0], proton(), proton())


def test_iteration_cap_reported():
    res = minimize_local(at(5.0), proton(), electron_cloud(), OptimizerConfig(max_iterations=2))
    assert res.status == "max_iterations" and res.iterations == 2


# -- multistart --------------------------------------------------------------

def test_single_restart_equals_local_from_sampled_start():
    pair = OPTIMIZER_PAIRS[2]
    cfg = OptimizerConfig(restarts=1, seed=4)
    multi = minimize_multistart(pair.a, pair.b, cfg)
    local = minimize_local(restart_start(cfg, 0), pair.a, pair.b, cfg)
    assert np.array_equal(multi.best_params, local.best_params)
    assert multi.best_energy == local.best_energy
    assert multi.trace == local.trace


def test_multistart_deterministic():
    pair = OPTIMIZER_PAIRS[0]
    cfg = OptimizerConfig(restarts=3, seed=7)
    r1 = minimize_multistart(pair.a, pair.b, cfg)
    r2 = minimize_multistart(pair.a, pair.b, cfg)
    assert r1.as_dict() == r2.as_dict()
    assert len(r1.trace) == 3 and all(is_non_increasing(t) for t in r1.trace)


def test_all_restarts_fail_aggregates_causes():
    cfg = OptimizerConfig(restarts=2, translation_box=Bounds((0, 0, 0), (0, 0, 0)))
    with pytest.raises(OptimizationError) as info:
        minimize_multistart(proton(), proton(), cfg)
    assert len(info.value.causes) == 2


def test_raw_energy_consistent_and_penalty_inactive():
    pair = OPTIMIZER_PAIRS[2]
    res = minimize_multistart(pair.a, pair.b, OptimizerConfig(restarts=2))
    assert abs(res.raw_energy - raw(res.best_params, pair.a, pair.b)) <= 1e-10
    assert res.best_energy == res.raw_energy


def test_config_invariants():
    for kw in ({"restarts": 0}, {"max_iterations": 0}, {"gradient_tolerance": 0.0}, {"step_tolerance": -1.0},
               {"min_nucleus_separation": 1e-7}, {"translation_box": Bounds((0, 0, 0), (1, 1, 0))}):
        with pytest.raises(InvalidArgumentError):
            OptimizerConfig(**kw)


# -- scans -------------------------------------------------------------------

def test_scan_two_protons_monotone():
    entries = scan(proton(), proton(), [ScanAxis("tx", 0.5, 5.0, 10)])
    e = [x.objective for x in entries]
    assert all(b < a for a, b in zip(e, e[1:]))
    np.testing.assert_allclose(e, 1 / np.linspace(0.5, 5, 10), rtol=1e-14)


def test_scan_flags_singular_point_and_continues():
    entries = scan(proton(), proton(), [ScanAxis("tx", -1.0, 1.0, 3)])
    assert entries[1].flag.startswith("singular") and entries[1].breakdown is None
    assert entries[2].objective == 1.0


def test_scan_neutral_plateau():
    entries = scan(hydrogen_like(), hydrogen_like(), [ScanAxis("tx", 40, 60, 5), ScanAxis("gamma", 0, 3, 3)])
    assert len(entries) == 15
    assert max(abs(e.objective) for e in entries) <= 1e-8


def test_fine_scan_argmin_matches_local_minimum():
    # a polar body in front of a proton: the 1D profile along x has an interior minimum
    a, b = polar(), proton()
    axis = ScanAxis("tx", 0.5, 3.0, 251)
    best = scan_minimum(scan(a, b, [axis]))
    cfg = OptimizerConfig(gradient_tolerance=1e-8)
    res = minimize_local(at(best.params[0] + 0.1), a, b, cfg)
    step = (axis.hi - axis.lo) / (axis.n - 1)
    assert abs(res.best_params[0] - best.params[0]) <= step
    assert res.best_energy <= best.objective + 1e-12


def test_scan_axis_validation():
    with pytest.raises(InvalidArgumentError):
        ScanAxis("tw", 0, 1, 3)
    with pytest.raises(InvalidArgumentError):
        ScanAxis("tx", 1, 0, 3)
    with pytest.raises(InvalidArgumentError):
        scan(proton(), proton(), [ScanAxis("tx", 1, 2, 2), ScanAxis("tx", 1, 2, 2)])


# -- matching ----------------------------------------------------------------

def test_match_identical_protons_positive():
    cfg = OptimizerConfig(restarts=2)
    m = match_pairs([proton("p1"), proton("p2"), proton("p3")], cfg)
    off = m.energies[~np.eye(3, dtype=bool)]
    assert np.all(off > 0)
    assert np.all(np.isnan(np.diag(m.energies)))


def test_match_attraction_and_exact_symmetry():
    cfg = OptimizerConfig(restarts=2)
    m = match_pairs([proton("p"), electron_cloud("e"), polar("d")], cfg)
    assert m.energies[0, 1] < 0 and m.energies[1, 0] < 0
    assert np.array_equal(m.energies, m.energies.T, equal_nan=True)
    assert m.best_partner[0] == 1
    # mirrored placement describes the same relative configuration
    e_ji = raw(np.array([*m.placements[(1, 0)].translation, *m.placements[(1, 0)].angles.as_tuple()]),
               electron_cloud(), proton())
    assert e_ji == pytest.approx(m.energies[0, 1], rel=1e-9)


def test_match_needs_two_bodies():
    with pytest.raises(InvalidArgumentError):
        match_pairs([proton()])
