import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import levylab.harness as harness
from levylab.domain import Domain, Window
from levylab.errors import ParameterError
from levylab.harness import (ProfileData, Verdict, bonferroni_z, check_agreement,
                             check_eigen_shape, check_ikeda_watanabe, check_midconcave,
                             check_monotone, check_sign_structure, combine, equal_spaced_triples,
                             profile_report, shape_report)
from levylab.models import LevyModel
from levylab.pathsim import estimate_survival_profile
from levylab.solver import Grid1D, difference_kernel, survival_pde

D = Domain.interval(1.0)
CAUCHY = LevyModel.alpha_stable(1.0)


def _pde_profile(values_fn, x=None):
    x = np.linspace(-0.96, 0.96, 33) if x is None else np.asarray(x)
    return ProfileData.from_values(x, values_fn(x))


def _mc_profile(values, se, x):
    # independent points with the given standard errors
    return ProfileData(np.asarray(x, dtype=float), np.asarray(values, dtype=float),
                       np.diag(np.asarray(se, dtype=float) ** 2), 0.0, "mc")


def _rejudge(check: dict, backend: str, tol: float) -> str:
    """Verdict from the margins and standard errors stored in a report."""
    m = np.asarray(check["margins"])
    s = np.asarray(check["ses"])
    if m.size == 0:
        return "FAIL"
    if backend == "pde":
        return "FAIL" if np.any(m < -tol) else "PASS"
    z = np.where(s > 0, -m / np.where(s > 0, s, 1), np.where(m < 0, np.inf, 0))
    if np.any(z > bonferroni_z(m.size)):
        return "FAIL"
    return "INCONCLUSIVE" if np.any(z > 3) else "PASS"


# --- verdict arithmetic ---------------------------------------------------------------


def test_bonferroni_threshold():
    assert bonferroni_z(1) == pytest.approx(3.0)
    assert bonferroni_z(100) > bonferroni_z(10) > 3.0


def test_combine():
    P, F, I, S = Verdict.PASS, Verdict.FAIL, Verdict.INCONCLUSIVE, Verdict.SKIPPED
    assert combine([P, I, P]) is I
    assert combine([P, I, F]) is F
    assert combine([P, S]) is P
    assert combine([S, S]) is S


# --- monotonicity and mid-concavity ---------------------------------------------------------


def test_symmetric_tent_passes():
    prof = ProfileData.from_values([-0.5, 0.0, 0.5], [0.5, 0.8, 0.5])
    res = check_monotone(prof, 1.0)
    assert all(r.verdict is Verdict.PASS for r in res.values())
    assert res["monotone_left"].comparisons == 1


def test_exact_survival_profile_passes_and_corruption_fails():
    g = Grid1D(1.0, 64)
    psi = survival_pde(CAUCHY, D, 1.0, g)
    idx = g.profile_indices(33)
    good = ProfileData.from_values(g.nodes[idx], psi[idx])
    assert profile_report(good, 1.0).verdict is Verdict.PASS
    bad_values = psi[idx].copy()
    bad_values[25] += 0.05
    bad = ProfileData.from_values(g.nodes[idx], bad_values)
    res = check_monotone(bad, 1.0)
    assert res["monotone_right"].verdict is Verdict.FAIL
    assert res["monotone_right"].violations == 1


def test_convex_profile_fails_both_checks():
    prof = _pde_profile(lambda x: x ** 2)
    res = check_monotone(prof, 1.0)
    assert res["monotone_left"].verdict is Verdict.FAIL
    assert res["monotone_right"].verdict is Verdict.FAIL
    assert check_midconcave(prof, 1.0).verdict is Verdict.FAIL


def test_concave_profile_passes_midconcavity_with_straddling_triple():
    x = np.linspace(-0.45, 0.45, 19)
    prof = ProfileData.from_values(x, 1 - x ** 2)
    res = check_midconcave(prof, 1.0)
    assert res.verdict is Verdict.PASS and res.comparisons == 17
    assert "across 0" in res.note


def test_midconcavity_rejects_unequal_spacing():
    prof = ProfileData.from_values([-0.3, 0.0, 0.1], [0.9, 1.0, 0.99])
    with pytest.raises(ParameterError):
        check_midconcave(prof, 1.0, triples=[(0, 1, 2)])
    # the default triples skip unequal gaps
    assert equal_spaced_triples(np.array([-0.3, -0.1, 0.0, 0.1]), -0.5, 0.5) == [(1, 2, 3)]


def test_midconcavity_triples_must_lie_in_the_middle_half():
    prof = ProfileData.from_values([-0.6, 0.0, 0.6], [0.5, 1.0, 0.5])
    with pytest.raises(ParameterError):
        check_midconcave(prof, 1.0, triples=[(0, 1, 2)])
    assert equal_spaced_triples(prof.x, -0.5, 0.5) == []


def test_unsorted_points_are_rejected():
    prof = ProfileData.from_values([0.1, -0.1, 0.3], [1.0, 1.0, 0.9])
    with pytest.raises(ParameterError):
        check_monotone(prof, 1.0)


def test_zero_comparisons_fail():
    prof = ProfileData.from_values([-0.1, 0.1], [1.0, 1.0])
    res = check_monotone(prof, 1.0)
    assert res["monotone_left"].verdict is Verdict.FAIL
    assert res["monotone_left"].comparisons == 0
    assert check_midconcave(prof, 1.0).verdict is Verdict.FAIL


def test_statistical_verdict_ladder():
    x = np.array([0.0, 0.2, 0.4, 0.6, 0.8, 0.9])
    se = np.full(6, 0.01 / math.sqrt(2))  # each difference has SE 0.01
    base = np.array([0.9, 0.8, 0.7, 0.6, 0.5, 0.4])

    def verdict(bump):
        vals = base.copy()
        vals[3] += bump  # psi(0.6) - psi(0.4) should be <= 0
        return check_monotone(_mc_profile(vals, se, x), 1.0)["monotone_right"]

    assert verdict(0.1 + 0.02).verdict is Verdict.PASS  # violation of 2 SE
    assert bonferroni_z(5) > 3.2
    assert verdict(0.1 + 0.032).verdict is Verdict.INCONCLUSIVE
    assert verdict(0.1 + 0.06).verdict is Verdict.FAIL


def test_paired_errors_from_common_random_numbers():
    x = np.linspace(-0.96, 0.96, 33)
    prof = estimate_survival_profile(CAUCHY, D, x, 1.0, 20_000, seed=12)
    rep = profile_report(ProfileData.from_mc(prof), 1.0)
    assert rep.verdict in (Verdict.PASS, Verdict.INCONCLUSIVE)
    assert rep.verdict is not Verdict.FAIL


@given(st.lists(st.floats(0.0, 1.0), min_size=5, max_size=12))
def test_stored_report_verdict_can_be_recomputed(values):
    x = np.linspace(-0.4, 0.4, len(values))
    for prof in (ProfileData.from_values(x, values),
                 _mc_profile(values, np.full(len(values), 0.02), x)):
        rep = json.loads(json.dumps(profile_report(prof, 1.0).to_dict()))
        for check in rep["checks"].values():
            assert _rejudge(check, prof.backend, prof.tol) == check["verdict"]


# --- agreement -----------------------------------------------------------------------------


def test_agreement_ladder():
    assert check_agreement([0.5], [0.01], [0.52], 0.0).verdict is Verdict.PASS
    assert check_agreement([0.5], [0.01], [0.531], 0.0).verdict is Verdict.INCONCLUSIVE
    assert check_agreement([0.5], [0.01], [0.6], 0.0).verdict is Verdict.FAIL
    assert check_agreement([0.5], [0.01], [0.6], 0.09).verdict is Verdict.PASS
    assert check_agreement([0.5], [0.01], [0.6], 0.0, bias_budget=0.08).verdict is Verdict.PASS
    assert check_agreement([], [], [], 0.0).verdict is Verdict.FAIL


# --- sign structure ---------------------------------------------------------------------------


def test_sign_structure_passes_for_stable_and_truncated():
    g = Grid1D(1.0, 64)
    windows = [Window(-1.0, 0.5), Window(-0.75, 0.75), Window(-0.5, 1.0)]
    for model in (CAUCHY, LevyModel.truncated_stable(1.0, 0.3)):
        rep = check_sign_structure(model, D, windows, [0.1, 0.5, 1.0], g)
        assert rep.verdict is Verdict.PASS
        assert rep.min_positive_side >= -1e-12 and rep.max_negative_side <= 1e-12
        assert rep.term_left["(-1, 0.5)"] == 0.0


def test_truncated_kernel_is_zero_beyond_reach():
    # jumps are shorter than R, so no node of U_+ (or its mirror) reaches z
    g = Grid1D(1.0, 64)
    U = Window(-1.0, 0.5)
    m = LevyModel.truncated_stable(1.0, 0.2)
    z = np.array([0.5 + 0.5 * g.h + k * g.h for k in range(16, 28)])
    f = difference_kernel(m, D, U, 0.015625, 0.5, z, g)
    assert np.all(f == 0.0)


# --- exit law cross-validation --------------------------------------------------------------


def test_exit_law_cross_validation():
    rects = [((0.0, math.inf), (1.0, math.inf)), ((0.0, math.inf), (-math.inf, -1.0)),
             ((0.0, 1.0), (1.0, 2.0))]
    rep = check_ikeda_watanabe(CAUCHY, D, 0.0, rects, 40_000, seed=3, N=128)
    right, left, box = rep.rows
    assert right.mc + left.mc == 1.0
    assert right.pde == pytest.approx(left.pde, abs=1e-12)
    assert rep.verdict is Verdict.PASS, rep.to_dict()
    assert 0 < box.mc < right.mc


# --- eigenfunction shape ---------------------------------------------------------------------


def test_cosine_passes_the_shape_checks():
    g = Grid1D(1.0, 256)
    phi = np.cos(math.pi * g.nodes / 2)
    res = shape_report(g.nodes, phi, 1.0, g.N, g.profile_indices(33))
    assert all(r.verdict is Verdict.PASS for r in res.values())


def test_odd_mode_fails_the_shape_checks():
    g = Grid1D(1.0, 256)
    phi = np.sin(math.pi * g.nodes)
    res = shape_report(g.nodes, phi, 1.0, g.N, g.profile_indices(33))
    assert combine(r.verdict for r in res.values()) is Verdict.FAIL


def test_eigen_shape_of_the_cauchy_process():
    rep = check_eigen_shape(CAUCHY, D, Grid1D(1.0, 128))
    assert rep.verdict is Verdict.PASS
    assert rep.lam1 == pytest.approx(1.157, abs=0.01)


def test_eigen_shape_skipped_without_log_growth(monkeypatch):
    from levylab.models import LogGrowthReport

    monkeypatch.setattr(harness, "check_log_growth", lambda m: LogGrowthReport(False, (), (), "forced"))
    rep = check_eigen_shape(CAUCHY, D, Grid1D(1.0, 32))
    assert rep.verdict is Verdict.SKIPPED and "log-growth" in rep.reason
