"""Acceptance suite: the quantitative exit criteria, one pass/fail line each.

Each criterion is asserted at its stated tolerance. Criterion 7b (clamp onset
ordering along the chain) is implemented as stated and is expected to fail:
with an ideal-law chain the saturation threshold of agent k+1 decreases with
k, so the outermost engaging agent always saturates first. The analysis lives
in the project notes; everything else is green.
"""

import math
import time

import numpy as np
import pytest

from bearform.analysis import (detect_periodic_orbit, linearize_equilibrium,
                               lyapunov_dot_series, lyapunov_series)
from bearform.cli import main as cli_main
from bearform.config import config_to_dict, load_preset, parse_config_dict
from bearform.control import PotentialSpec, closed_form_alpha2
from bearform.estimator import MeasurementSeries, estimate_leader
from bearform.geometry import shape_from_world, wrap_angles
from bearform.integrator import IntegratorConfig, integrate_adaptive, integrate_fixed_rk4
from bearform.scenarios import _follower_commands, _two_agent_rhs, run_chain, run_two_agent
from bearform.trajcsv import write_trajectory_csv

PI = math.pi
TARGET = np.array([0.5, -PI / 2, PI / 2])


def announce(criterion: str, passed: bool, detail: str) -> None:
    print(f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} - {detail}")


def run_preset(name, **integrator_overrides):
    data = config_to_dict(load_preset(name))
    data["integrator"].update(integrator_overrides)
    return run_two_agent(parse_config_dict(data))


def test_criterion_1_cb_closed_form_equivalence():
    t0 = time.perf_counter()
    res = run_preset("paper-fig2a", t_span=[0.0, 10.0])
    runtime = time.perf_counter() - t0
    alpha2 = res.shapes[:, 0, 2]
    ref = closed_form_alpha2(res.times, alpha2[0], 2.0)
    sup = float(np.max(np.abs(alpha2 - ref)))
    ok = sup <= 1e-4 and runtime < 1.0
    announce("criterion 1 (CB closed form)",
             ok, f"sup|alpha2 - closed form| = {sup:.2e} (<= 1e-4), "
                 f"runtime {runtime:.2f} s (< 1 s)")
    assert sup <= 1e-4
    assert runtime < 1.0


def test_criterion_2_prop1_convergence():
    t0 = time.perf_counter()
    res = run_preset("paper-fig2a")
    runtime = time.perf_counter() - t0
    cfg = res.config

    final = res.shapes[-1, 0, :]
    terminal = max(abs(final[0] - TARGET[0]),
                   abs(float(wrap_angles(final[1] - TARGET[1]))),
                   abs(float(wrap_angles(final[2] - TARGET[2]))))

    # V1 non-increasing once inside the certified region with alpha2 settled:
    # (i) zero increases among unclamped steps from first gated entry
    report = res.descent[0]
    # (ii) from the final entry into the region, the raw series (no clamp
    # exclusions) is non-increasing within 1e-9 per sample
    v1 = lyapunov_series(res.shapes[:, 0, 0], res.shapes[:, 0, 1], cfg.controller.potential)
    gate = (v1 < 2.0) & (np.abs(wrap_angles(res.shapes[:, 0, 2] - PI / 2)) < 0.01)
    idx = len(v1) - 1
    while idx > 0 and gate[idx - 1]:
        idx -= 1
    max_increase_final = float(np.max(np.diff(v1[idx:])))

    # first-passage ordering of the bearing transients
    a2_off = np.abs(wrap_angles(res.shapes[:, 0, 2] - PI / 2))
    a1_off = np.abs(wrap_angles(res.shapes[:, 0, 1] + PI / 2))
    t_a2 = float(res.times[np.argmax(a2_off <= 0.05)])
    t_a1 = float(res.times[np.argmax(a1_off <= 0.05)])

    ok = (terminal < 1e-3 and report.monotone_increases == 0
          and max_increase_final <= 1e-9 and t_a2 < t_a1 and runtime < 2.0)
    announce("criterion 2 (Prop 1 convergence)",
             ok, f"|z(40) - z*| = {terminal:.2e} (< 1e-3), "
                 f"V1 increases: {report.monotone_increases} (unclamped), "
                 f"max dV1 after final entry = {max_increase_final:.1e} (<= 1e-9), "
                 f"alpha2 settles at {t_a2:.2f} s before alpha1 at {t_a1:.2f} s, "
                 f"runtime {runtime:.2f} s (< 2 s)")
    assert terminal < 1e-3
    assert report.monotone_increases == 0
    assert max_increase_final <= 1e-9
    assert t_a2 < t_a1
    assert runtime < 2.0


def test_criterion_3_prop2_iss_margin():
    # paper robust run: k_u / mu1 = 1.5 > 1, so the margin set is empty
    res_b = run_preset("paper-fig2b")
    a1 = res_b.shapes[:, 0, 1]
    empty = int(np.sum(np.abs(np.cos(a1)) >= 1.5))
    assert res_b.descent[0].n_checked == 0
    assert res_b.descent[0].passed

    # small-steering run: u1 = 0.2 + 0.1 sin(pi t), k_u = 0.3
    data = config_to_dict(load_preset("paper-fig2b"))
    data["leader"]["u1"] = {"sinusoid": {"offset": 0.2, "amplitude": 0.1, "omega": PI}}
    data["leader"]["bounds"] = {"k_v": 0.5, "k_u": 0.3}
    res = run_two_agent(parse_config_dict(data))
    cfg = res.config
    a1 = res.shapes[:, 0, 1]
    margin = np.abs(np.cos(a1)) >= 0.3 / cfg.controller.mu1
    vdot = lyapunov_dot_series(a1, res.controls[:, 0, 1], cfg.controller.mu1,
                               cfg.controller.mode)
    worst = float(np.max(vdot[margin])) if np.any(margin) else float("-inf")
    violations = int(np.sum(vdot[margin] > 1e-9))
    report = res.descent[0]
    ok = (empty == 0 and violations == 0 and report.passed
          and report.n_checked > 0 and not report.violations)
    announce("criterion 3 (Prop 2 ISS margin)",
             ok, f"paper run margin set empty ({empty} samples at |cos a1| >= 1.5); "
                 f"k_u=0.3 run: {int(np.sum(margin))} margin samples, "
                 f"max V1_dot = {worst:.2e} (<= 1e-9), {violations} violations, "
                 f"fd mismatch {report.fd_max_mismatch:.1e}")
    assert empty == 0
    assert violations == 0
    assert report.passed and report.n_checked > 0


def test_criterion_4_prop3_periodicity(tmp_path):
    t0 = time.perf_counter()
    res = run_preset("paper-fig2b")
    runtime = time.perf_counter() - t0
    good = detect_periodic_orbit(res.shape_traj(), 2.0, 30.0)
    bad = detect_periodic_orbit(res.shape_traj(), 1.5, 30.0)

    out = tmp_path / "fig2b"
    out.mkdir()
    write_trajectory_csv(res, out / "trajectory.csv")
    exit_good = cli_main(["analyze", str(out / "trajectory.csv"),
                          "--periodic", "2.0", "--settle", "30.0"])
    exit_bad = cli_main(["analyze", str(out / "trajectory.csv"),
                         "--periodic", "1.5", "--settle", "30.0"])

    ok = (good.residual < 1e-3 and good.converged and bad.residual > 1e-2
          and exit_good == 0 and exit_bad == 4 and runtime < 3.0)
    announce("criterion 4 (Prop 3 periodicity)",
             ok, f"T=2 residual {good.residual:.2e} (< 1e-3), "
                 f"T=1.5 residual {bad.residual:.2e} (> 1e-2), "
                 f"analyze exit codes {exit_good}/{exit_bad}, "
                 f"runtime {runtime:.2f} s (< 3 s)")
    assert good.residual < 1e-3 and good.converged
    assert bad.residual > 1e-2 and not bad.converged
    assert exit_good == 0
    assert exit_bad == 4
    assert runtime < 3.0


def test_criterion_5_linearization():
    rep = linearize_equilibrium(0.5, 1.0, PotentialSpec(2.0, 0.5))
    exact_a = rep.A == ((0.0, -0.5), (4.0, -1.0))
    root7 = math.sqrt(7.0)
    eig_err = max(abs(rep.eigenvalues[0] - complex(-0.5, root7 / 2)),
                  abs(rep.eigenvalues[1] - complex(-0.5, -root7 / 2)))

    rng = np.random.default_rng(123)
    hurwitz_all = True
    for _ in range(1000):
        r = linearize_equilibrium(rng.uniform(1e-3, 10.0), rng.uniform(1e-3, 10.0),
                                  PotentialSpec(rng.uniform(1e-3, 50.0),
                                                rng.uniform(1e-3, 5.0)))
        hurwitz_all &= r.hurwitz

    ok = exact_a and eig_err < 1e-12 and rep.hurwitz and hurwitz_all
    announce("criterion 5 (linearization)",
             ok, f"A exact: {exact_a}, eigenvalue error {eig_err:.1e} (< 1e-12), "
                 f"hurwitz over 1000 random configs: {hurwitz_all}")
    assert exact_a
    assert eig_err < 1e-12
    assert rep.hurwitz and hurwitz_all


def _fig2a_measurements(dt):
    """Tightly integrated fig2a sampled at dt, with ground truth and clamp mask."""
    data = config_to_dict(load_preset("paper-fig2a"))
    data["integrator"].update({"sample_dt": dt, "rtol": 1e-10, "atol": 1e-12,
                               "h_max": 0.2})
    cfg = parse_config_dict(data)
    rhs, wit = _two_agent_rhs(cfg.leader, cfg.controller, True)
    z0 = shape_from_world(cfg.leader_state0, cfg.follower_states0[0])
    y0 = np.array([z0.rho, z0.alpha1, z0.alpha2,
                   cfg.leader_state0.r.x, cfg.leader_state0.r.y, cfg.leader_state0.theta])
    tr = integrate_adaptive(rhs, y0, cfg.integrator, witness=wit)
    times = tr.times
    v1, u1 = cfg.leader.sample(times)
    n = len(times)
    v2 = np.empty(n)
    u2 = np.empty(n)
    clamped = np.zeros(n, dtype=bool)
    for i in range(n):
        v2[i], u2[i], sig = _follower_commands(tr.states[i, 0], tr.states[i, 1],
                                               tr.states[i, 2], v1[i], u1[i],
                                               cfg.controller, True)
        clamped[i] = sig != 0
    series = MeasurementSeries(times=times, rho=tr.states[:, 0],
                               alpha2=tr.states[:, 2], v2=v2, u2=u2)
    truth = {"v1": v1, "u1": u1, "alpha1": tr.states[:, 1]}
    return series, truth, clamped


def _kink_free(clamped, margin):
    """Mask of samples at least ``margin`` samples away from any clamp transition."""
    edges = np.nonzero(np.diff(clamped.astype(int)) != 0)[0]
    keep = np.ones(len(clamped), dtype=bool)
    for e in edges:
        keep[max(0, e - margin):e + margin + 2] = False
    return keep


def test_criterion_6_estimator():
    series, truth, clamped = _fig2a_measurements(1e-3)
    est = estimate_leader(series, window=3)
    sl = est.interior
    err_v1 = float(np.max(np.abs(est.v1_hat[sl] - truth["v1"][sl])))
    err_a1 = float(np.max(np.abs(wrap_angles(est.alpha1_hat[sl] - truth["alpha1"][sl]))))
    err_u1 = float(np.max(np.abs(est.u1_hat[sl] - truth["u1"][sl])))

    # convergence order, measured away from the speed-floor kinks where the
    # measured series has a jump in its second derivative
    orders = []
    for comp in ("v1", "alpha1"):
        errs = {}
        for stride in (2, 4):
            sub = MeasurementSeries(times=series.times[::stride],
                                    rho=series.rho[::stride],
                                    alpha2=series.alpha2[::stride],
                                    v2=series.v2[::stride], u2=series.u2[::stride])
            e = estimate_leader(sub, window=3)
            idx = np.arange(len(sub.times))
            good = _kink_free(clamped[::stride], 5)
            inner = np.zeros(len(sub.times), dtype=bool)
            inner[e.interior] = True
            sel = good & inner
            if comp == "v1":
                diff = np.abs(e.v1_hat - truth["v1"][::stride])
            else:
                diff = np.abs(wrap_angles(e.alpha1_hat - truth["alpha1"][::stride]))
            errs[stride] = float(np.max(diff[sel]))
        orders.append(math.log2(errs[4] / errs[2]))

    ok = (err_v1 < 1e-3 and err_a1 < 1e-3 and err_u1 < 0.05
          and all(o >= 1.8 for o in orders))
    announce("criterion 6 (leader estimation)",
             ok, f"sup errors: v1 {err_v1:.2e} (< 1e-3), alpha1 {err_a1:.2e} (< 1e-3), "
                 f"u1 {err_u1:.2e} (< 0.05); orders {[f'{o:.2f}' for o in orders]} (>= 1.8)")
    assert err_v1 < 1e-3
    assert err_a1 < 1e-3
    assert err_u1 < 0.05
    for o in orders:
        assert o >= 1.8


@pytest.fixture(scope="module")
def chain_result():
    t0 = time.perf_counter()
    res = run_chain(load_preset("paper-chain"))
    res.runtime = time.perf_counter() - t0
    return res


def _clamp_onsets(res):
    onsets = {}
    for tau, tag in res.events:
        if tag.endswith("clamp:on"):
            agent = int(tag.split(":")[0].removeprefix("agent"))
            onsets.setdefault(agent, tau)
    return onsets


def test_criterion_7a_chain_clamp_window(chain_result):
    onsets = _clamp_onsets(chain_result)
    in_window = [a for a, t in onsets.items() if 3.0 <= t <= 9.0]
    ok = len(in_window) >= 1 and sorted(onsets) == [4, 5] and chain_result.runtime < 5.0
    announce("criterion 7a (chain clamp engagement)",
             ok, f"onsets {onsets} - agents 4 and 5 clamp inside [3, 9] s, "
                 f"runtime {chain_result.runtime:.2f} s (< 5 s)")
    assert len(in_window) >= 1
    assert sorted(onsets) == [4, 5]
    assert chain_result.runtime < 5.0


def test_criterion_7b_chain_onset_ordering(chain_result):
    """Expected red: see the decisions ledger.

    The ideal speed law feeds the predecessor's applied steering through
    instantaneously (v_{k+1} = v1 + k rho0 u1 at equilibrium), so agent k+1
    saturates when u1 first exceeds (v_max - v1) / (k rho0) -- a threshold
    that decreases with k. The outermost engaging agent therefore always
    saturates first, and onset times are non-increasing, not non-decreasing,
    in agent index. The wave-like delay the chain does exhibit is in the
    recovery (clamp release), which test 7c's recovery bound covers.
    """
    onsets = _clamp_onsets(chain_result)
    agents = sorted(onsets)
    times = [onsets[a] for a in agents]
    nondecreasing = all(t2 >= t1 - 1e-12 for t1, t2 in zip(times, times[1:]))
    announce("criterion 7b (chain onset ordering)", nondecreasing,
             f"onsets by agent {dict(zip(agents, times))} - "
             "spec expects non-decreasing in agent index; the ideal-law "
             "feedforward saturates the outermost agent first (see ledger)")
    assert nondecreasing, (
        "clamp onsets are non-increasing in agent index by construction of the "
        "ideal-law chain; documented as a spec defect in the decisions ledger")


def test_criterion_7c_chain_recovery(chain_result):
    i25 = np.searchsorted(chain_result.times, 25.0)
    rho_dev = np.max(np.abs(chain_result.shapes[i25:, :, 0] - 0.5))
    a1_dev = np.max(np.abs(wrap_angles(chain_result.shapes[i25:, :, 1] + PI / 2)))
    a2_dev = np.max(np.abs(wrap_angles(chain_result.shapes[i25:, :, 2] - PI / 2)))
    ok = rho_dev <= 0.005 and a1_dev <= 0.01 * PI / 2 and a2_dev <= 0.01 * PI / 2
    announce("criterion 7c (chain recovery)",
             ok, f"max deviations for t >= 25 s: rho {rho_dev:.2e} (<= 5e-3), "
                 f"alpha1 {a1_dev:.2e}, alpha2 {a2_dev:.2e} (<= 1% of pi/2)")
    assert rho_dev <= 0.01 * 0.5
    assert a1_dev <= 0.01 * PI / 2
    assert a2_dev <= 0.01 * PI / 2


def test_criterion_8_numerical_integrity(tmp_path):
    cfg = load_preset("paper-fig2a")
    rhs, wit = _two_agent_rhs(cfg.leader, cfg.controller, True)
    z0 = shape_from_world(cfg.leader_state0, cfg.follower_states0[0])
    y0 = np.array([z0.rho, z0.alpha1, z0.alpha2,
                   cfg.leader_state0.r.x, cfg.leader_state0.r.y, cfg.leader_state0.theta])

    # (a) adaptive at the paper tolerances vs the fixed-step oracle
    res = run_two_agent(cfg)
    adaptive_states = np.concatenate([res.shapes[:, 0, :], res.poses[:, 0, :]], axis=1)
    oracle = integrate_fixed_rk4(rhs, y0, 1e-4, (0.0, 40.0), sample_every=100)
    agreement = float(np.max(np.abs(adaptive_states - oracle.states)))

    # (b) observed order of the fixed-step method on the closed loop, measured
    # on a floor-free trajectory where classical convergence theory applies
    y0_smooth = np.array([0.62, -1.75, PI / 2, 0.0, 0.0, PI / 4])
    ends = {h: integrate_fixed_rk4(rhs, y0_smooth, h, (0.0, 2.0)).states[-1]
            for h in (2e-2, 1e-2, 5e-3)}
    d1 = np.max(np.abs(ends[2e-2] - ends[1e-2]))
    d2 = np.max(np.abs(ends[1e-2] - ends[5e-3]))
    order = math.log2(d1 / d2)

    # (c) byte determinism of repeated runs
    res2 = run_two_agent(cfg)
    f1, f2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_trajectory_csv(res, f1)
    write_trajectory_csv(res2, f2)
    deterministic = f1.read_bytes() == f2.read_bytes()

    ok = agreement <= 1e-4 and 3.8 <= order <= 4.2 and deterministic
    announce("criterion 8 (numerical integrity)",
             ok, f"adaptive vs RK4(h=1e-4) sup = {agreement:.2e} (<= 1e-4), "
                 f"closed-loop order {order:.3f} (in [3.8, 4.2]), "
                 f"byte-deterministic: {deterministic}")
    assert agreement <= 1e-4
    assert 3.8 <= order <= 4.2
    assert deterministic
