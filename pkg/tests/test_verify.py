import json
import math

import numpy as np
import pytest

from dnls_torus.field import Field, make_grid
from dnls_torus.functionals import ProblemParams, ode_lower_bound
from dnls_torus.solver import (
    BlowupReport,
    SolverConfig,
    Trajectory,
    Trigger,
    Verdict,
    integrate,
    read_trajectory_csv,
    write_trajectory_csv,
)
from dnls_torus.verify import (
    CheckResult,
    calibrate_growth_constant,
    check_conservation_suite,
    check_growth_identity,
    check_holder_chain,
    check_lifespan,
    check_ode_comparison,
    checks_to_dict,
    checks_to_json,
    growth_residuals,
    resolved_prefix,
    run_checks,
    self_calibrated_growth_check,
    subsample,
)

TWO_PI = 2 * math.pi
HEADLINE = ProblemParams(3, 1, 1.0)


def exact_headline(h=1e-3, t_end=0.1):
    """Observables of the exact single-mode solution |c_1|^2 = 1/(1 - 2t)."""
    t = np.arange(0, t_end + h / 2, h)
    a2 = 1 / (1 - 2 * t)
    return Trajectory(times=t, M=TWO_PI * a2, total_density_abs=np.zeros_like(t),
                      l2=np.sqrt(TWO_PI * a2), lp1=(TWO_PI * a2 ** 2) ** 0.25,
                      sup=np.sqrt(a2), l1=TWO_PI * np.sqrt(a2),
                      tail_fraction=np.zeros_like(t), params=HEADLINE, sample_interval=h)


def report(detected=True, t=1.0, bound=2.0):
    from dnls_torus.solver import verdict_for
    return BlowupReport(detected, t if detected else None,
                        Trigger.DT_FLOOR if detected else Trigger.T_MAX_REACHED, bound,
                        verdict_for(detected, t, bound))


class TestGrowthIdentity:
    def test_exact_solution_second_order(self):
        coarse = check_growth_identity(exact_headline(1e-3), HEADLINE)
        fine = check_growth_identity(exact_headline(5e-4), HEADLINE)
        assert coarse.passed and fine.passed
        assert coarse.max_violation / fine.max_violation == pytest.approx(4.0, rel=0.05)

    def test_detects_wrong_rate(self):
        tr = exact_headline()
        res = check_growth_identity(tr, ProblemParams(3, 1.01, 1.0))
        assert not res.passed and res.max_violation > 5e-3

    def test_needs_five_samples(self):
        with pytest.raises(ValueError, match="5 samples"):
            growth_residuals(exact_headline(t_end=0.003), HEADLINE)

    def test_window_stops_at_under_resolved(self):
        tr = exact_headline()
        tr.tail_fraction = tr.tail_fraction.copy()
        tr.tail_fraction[50:] = 1e-2
        tr.M = tr.M.copy()
        tr.M[60:] *= 2
        assert resolved_prefix(tr) == 50
        assert check_growth_identity(tr, HEADLINE).passed
        assert check_growth_identity(tr, HEADLINE).detail["t_end"] < 0.05

    def test_window_stops_at_time_jump(self):
        tr = exact_headline()
        tr.sup = tr.sup.copy()
        tr.sup[40:] *= 1.01
        assert resolved_prefix(tr) == 40

    def test_calibration(self):
        c = calibrate_growth_constant(exact_headline(1e-3), exact_headline(5e-4), HEADLINE, 0.09)
        assert c > 0
        r = check_growth_identity(exact_headline(2e-3), HEADLINE, tolerance=None,
                                  growth_constant=c * 1.5)
        assert r.tolerance == pytest.approx(max(1e-5, 1.5 * c * 4e-6))

    def test_self_calibration_matches_truncation_constant(self):
        # centered-difference error of M = 2pi/(1-2t) is 4 h^2/(1-2t)^2 relative
        tr = exact_headline(1e-3, 0.3)
        r = self_calibrated_growth_check(tr, HEADLINE)
        t_end = r.detail["t_end"]
        assert r.passed
        assert r.detail["growth_constant"] == pytest.approx(4 / (1 - 2 * t_end) ** 2, rel=0.05)

    def test_self_calibration_keeps_rate_errors_visible(self):
        r = self_calibrated_growth_check(exact_headline(1e-3, 0.3), ProblemParams(3, 1.001, 1.0))
        assert not r.passed and r.detail["growth_constant"] == 0.0

    def test_subsample(self):
        tr = exact_headline()
        half = subsample(tr, 2)
        assert half.spacing() == pytest.approx(2e-3)
        assert np.array_equal(half.M, tr.M[::2])

    def test_nonuniform_rejected(self):
        tr = exact_headline()
        tr.times = tr.times.copy()
        tr.times[3] += 1e-5
        with pytest.raises(ValueError, match="uniform"):
            check_growth_identity(tr, HEADLINE)


class TestHolder:
    def test_exact_solution(self):
        r = check_holder_chain(exact_headline(), HEADLINE)
        assert r.passed and r.detail["links_checked"] == 2

    def test_violation(self):
        tr = exact_headline()
        tr.M = tr.M * 7.0  # |M| is 1/(2pi) of the middle term here
        assert not check_holder_chain(tr, HEADLINE).passed

    def test_outer_link_only_without_l1(self):
        tr = exact_headline()
        tr.l1 = None
        assert check_holder_chain(tr, HEADLINE).detail["links_checked"] == 1


class TestOde:
    def test_exact_solution_above_bound(self):
        assert check_ode_comparison(exact_headline(), HEADLINE).passed

    def test_violation(self):
        tr = exact_headline()
        tr.M = np.array([ode_lower_bound(tr.M[0], t, 3, 1, 1) for t in tr.times]) * (1 - 1e-3)
        tr.M[0] = TWO_PI
        assert not check_ode_comparison(tr, HEADLINE).passed

    def test_not_applicable(self):
        tr = exact_headline()
        assert not check_ode_comparison(tr, ProblemParams(3, -1, 1.0)).applicable
        tr.M = -tr.M
        r = check_ode_comparison(tr, HEADLINE)
        assert not r.applicable and r.passed


class TestLifespan:
    def test_cases(self):
        assert check_lifespan(report(True, 1.0, 2.0)).passed
        r = check_lifespan(report(True, 2.0 * (1 + 1e-5), 2.0))
        assert not r.passed and r.max_violation == pytest.approx(1e-5)
        assert not check_lifespan(report(False, None, 2.0)).applicable
        assert not check_lifespan(report(True, 1.0, None)).applicable


class TestConservation:
    def test_density_violation(self):
        tr = exact_headline()
        tr.total_density_abs = tr.total_density_abs + 1e-8
        names = {c.name: c for c in check_conservation_suite(tr, HEADLINE)}
        assert not names["total_density"].passed
        assert not names["charge"].applicable
        assert names["gauge_modulus"].detail["reason"].startswith("needs")

    def test_charge_drift(self):
        tr = exact_headline()
        params = ProblemParams(3, -1j, 1.0)
        names = {c.name: c for c in check_conservation_suite(tr, params)}
        assert not names["charge"].passed and not names["m_constancy"].passed
        assert names["gauge_modulus"].detail["reason"] == "no recorded states"


@pytest.fixture(scope="module")
def small_conservative():
    g = make_grid(32)
    cfg = SolverConfig(1e-3, 1e-12, 0.2, 1e-2)
    return integrate(Field.mode(g, 1, 0.01), ProblemParams(3, -1j), cfg)


class TestRunChecks:
    def test_all_pass(self, small_conservative):
        traj, rep = small_conservative
        checks = run_checks(traj, traj.params, rep)
        d = checks_to_dict(checks)
        assert d["all_passed"], [c.line() for c in checks]
        names = [c["name"] for c in d["checks"]]
        assert names == ["growth_identity", "holder_chain", "ode_comparison", "lifespan",
                         "total_density", "charge", "m_constancy", "gauge_modulus", "energy_E2"]
        assert "periodicity_mismatch_max" in d["checks"][-1]["detail"]

    def test_reproducible_from_csv(self, small_conservative, tmp_path):
        traj, rep = small_conservative
        path = tmp_path / "t.csv"
        write_trajectory_csv(traj, path)
        back = read_trajectory_csv(path, traj.params, traj.sample_interval)
        a = {c.name: c for c in run_checks(traj, traj.params, rep)}
        b = {c.name: c for c in run_checks(back, traj.params, rep)}
        for name in ("growth_identity", "holder_chain", "total_density", "charge"):
            assert a[name].max_violation == b[name].max_violation

    def test_short_trajectory(self):
        tr = exact_headline(t_end=0.002)
        checks = run_checks(tr, HEADLINE)
        assert not checks[0].applicable

    def test_json(self):
        r = CheckResult("x", math.inf, 1e-3, False)
        out = json.loads(checks_to_json([r]))
        assert out == {"all_passed": False, "checks": [
            {"name": "x", "max_violation": None, "tolerance": 1e-3, "passed": False,
             "worst_time": None, "applicable": True, "detail": {}}]}
        assert r.line().startswith("FAIL x")
        assert Verdict.CONSISTENT.value == "consistent"
