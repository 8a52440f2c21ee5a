"""Acceptance suite: one PASS/FAIL line per criterion.

The full validation run happens once per session (about 40 s on one core).
Each test prints its verdict lines straight to the terminal so they show up
with or without ``-s``.
"""

import numpy as np
import pytest

from levyreduction.decoherence import PLANCK_SIGMA_SQUARED, clock_bound, clock_report
from levyreduction.validation import CHECKS, run_validation



@pytest.fixture(scope="session")
def run():
    return run_validation(seed=12345)


@pytest.fixture
def say(request):
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(criterion, ok, detail):
        line = f"criterion {criterion:2d} {'PASS' if ok else 'FAIL'}  {detail}"
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        else:
            print(line)
    return emit


def _summary(reports):
    return "; ".join(f"{r.name} effect={r.effect:.3g} se={r.se:.3g} stat={r.statistic:.3g}" for r in reports)


def _verdict(say, k, reports, extra=True):
    ok = bool(reports) and all(r.passed for r in reports) and extra
    say(k, ok, _summary(reports))
    return ok


def test_criterion_01_born_rule(run, say):
    reps = run.for_criterion(1)
    assert len(reps) == 4
    tol = 3 * np.sqrt(0.21 / 5000)
    within = all(abs(r.info["frequency_level_2"] - 0.7) <= tol and r.info["seconds"] < 60.0 for r in reps)
    for r in reps:
        say(1, r.passed, f"{r.name} f2={r.info['frequency_level_2']:.4f} (0.7 +/- {tol:.4f}) "
                         f"{r.info['seconds']:.1f} s")
    assert _verdict(say, 1, reps, within)


def test_criterion_02_martingales(run, say):
    assert _verdict(say, 2, run.for_criterion(2))


def test_criterion_03_em_matches_closed_form(run, say):
    reps = run.for_criterion(3)
    assert _verdict(say, 3, reps)


def test_criterion_04_rate_formulas(run, say):
    reps = run.for_criterion(4)
    assert len(reps) == 4
    fast = all(r.info["seconds"] < 10.0 for r in reps)
    worst = max(r.effect for r in reps)
    say(4, worst <= 1e-6 and fast, f"worst relative disagreement {worst:.2e}")
    assert _verdict(say, 4, reps, fast and worst <= 1e-6)


def test_criterion_05_lindblad(run, say):
    reps = run.for_criterion(5)
    duality = [r for r in reps if r.name.startswith("lindblad_vs_mean_density")]
    assert len(duality) == 4
    assert _verdict(say, 5, reps, max(r.effect for r in duality) <= 1e-6)


def test_criterion_06_lln_decoherence(run, say):
    assert _verdict(say, 6, run.for_criterion(6))


def test_criterion_07_amplification(run, say):
    assert _verdict(say, 7, run.for_criterion(7))


def test_criterion_08_clock_bound(run, say):
    bound = clock_bound(3.801e-5, 1.0)
    rep = clock_report(3.801e-5, 1.0, PLANCK_SIGMA_SQUARED)
    exact = float(f"{bound:.4g}") == 0.5537e22 and rep["candidate_within_bound"]
    say(8, exact, f"sigma^2 < {bound:.4e} MeV^-2 s^-1, candidate 2.8 within bound: {rep['candidate_within_bound']}")
    assert _verdict(say, 8, run.for_criterion(8), exact)


def test_criterion_09_cantelli(run, say):
    reps = run.for_criterion(9)
    assert len(reps) >= 4
    assert _verdict(say, 9, reps)


def test_criterion_10_property_suites(run, say):
    everything = run.all_reports
    failed = [r.name for r in everything if not r.passed]
    assert set(run.reports) == {c.name for c in CHECKS}
    ok = not failed and run.total_seconds < 600.0 and run.audit.passed
    say(10, ok, f"{len(everything)} reports, {len(failed)} failed {failed}, "
                f"{run.total_seconds:.1f} s, {run.audit.line()}")
    assert ok
