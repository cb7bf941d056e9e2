import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import linalg

from levylab.domain import Domain, Window
from levylab.errors import DomainError, GridAlignmentError, ParameterError
from levylab.models import LevyModel
from levylab.solver import (Grid1D, Grid2D, assemble_generator, check_difference_identity,
                            difference_kernel, eigen_limit_check, exit_kernel, exit_probability,
                            first_eigenpair, green_function, killed_kernel, lattice_weights,
                            survival_pde)
from levylab.solver.semigroup import node_interp

D = Domain.interval(1.0)
CAUCHY = LevyModel.alpha_stable(1.0)
JUMP_MODELS = [LevyModel.alpha_stable(0.5), CAUCHY, LevyModel.alpha_stable(1.5),
               LevyModel.tempered_stable(1.0, 2.0), LevyModel.truncated_stable(1.0, 0.4)]


# --- assembly -----------------------------------------------------------------------


@pytest.mark.parametrize("model", JUMP_MODELS + [LevyModel.brownian()])
def test_generator_is_a_killed_symmetric_q_matrix(model):
    op = assemble_generator(model, Grid1D(1.0, 64))
    L = op.matrix
    assert np.array_equal(L, L.T)
    off = L - np.diag(np.diag(L))
    assert off.min() >= 0
    assert np.all(op.killing >= 0)
    assert np.allclose(L.sum(axis=1), -op.killing, rtol=0, atol=1e-10 * abs(L).max())
    assert linalg.eigvalsh(L).max() < 0


@pytest.mark.parametrize("alpha", [0.1, 0.3, 0.5, 1.0, 1.5, 1.9])
def test_lattice_weights_positive_and_nonincreasing(alpha):
    W = lattice_weights(LevyModel.alpha_stable(alpha), 1.0 / 64, 200)
    assert W[0] == 0 and np.all(W[1:] > 0)
    assert np.all(np.diff(W[1:]) <= 0)


def test_lattice_weights_scale_like_the_density_far_out():
    m = LevyModel.alpha_stable(1.0)
    h = 1.0 / 128
    W = lattice_weights(m, h, 400)
    # W_k ~ nu(k h) h for k h >> h
    assert W[400] / (h / (math.pi * (400 * h) ** 2)) == pytest.approx(1.0, rel=1e-4)


def test_two_dimensional_generator_is_a_killed_symmetric_q_matrix():
    op = assemble_generator(LevyModel.alpha_stable(1.0, dimension=2), Grid2D(1.0, 1.0, 8))
    L = op.matrix
    assert np.allclose(L, L.T, rtol=0, atol=1e-14 * abs(L).max())
    assert (L - np.diag(np.diag(L))).min() >= 0
    assert np.all(op.killing >= 0)
    assert linalg.eigvalsh(0.5 * (L + L.T)).max() < 0


# --- survival ------------------------------------------------------------------------


def test_survival_at_time_zero_is_one():
    assert np.array_equal(survival_pde(CAUCHY, D, 0.0, Grid1D(1.0, 32)), np.ones(32))


@pytest.mark.parametrize("model", JUMP_MODELS)
def test_survival_profile_is_even_and_bounded(model):
    psi = survival_pde(model, D, 1.0, Grid1D(1.0, 128))
    assert np.all((psi >= 0) & (psi <= 1))
    assert np.max(np.abs(psi - psi[::-1])) < 1e-12


def test_survival_decreases_in_time():
    g = Grid1D(1.0, 128)
    vals = np.array([survival_pde(CAUCHY, D, t, g) for t in (0.1, 0.5, 1.0, 3.0)])
    assert np.all(np.diff(vals, axis=0) < 0)


def test_survival_needs_matching_grid():
    with pytest.raises(ParameterError):
        survival_pde(CAUCHY, D, 1.0, Grid1D(2.0, 32))


def test_chapman_kolmogorov():
    g = Grid1D(1.0, 96)
    P = lambda s: killed_kernel(CAUCHY, D, s, g).matrix
    assert np.max(np.abs(P(0.3) @ P(0.5) - P(0.8))) < 1e-10


def test_kernel_is_nonnegative_and_integrates_to_survival():
    g = Grid1D(1.0, 96)
    P = killed_kernel(CAUCHY, D, 0.7, g).matrix
    assert P.min() >= 0
    assert np.max(np.abs(P.sum(axis=1) - survival_pde(CAUCHY, D, 0.7, g))) < 1e-10


def test_green_function_inverts_the_generator():
    g = Grid1D(1.0, 128)
    G = green_function(CAUCHY, D, g)
    L = assemble_generator(CAUCHY, g).matrix
    assert np.max(np.abs(L @ G + np.eye(g.N))) < 1e-9
    assert G.min() > 0


@pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
def test_mean_exit_time_matches_closed_form(alpha):
    # E^x tau = (1 - x^2)^(alpha/2) / Gamma(1 + alpha) on (-1, 1) when psi = |xi|^alpha;
    # the lattice error is first order in h
    m = LevyModel.alpha_stable(alpha)
    errors = []
    for N in (256, 512):
        g = Grid1D(1.0, N)
        mean = green_function(m, D, g).sum(axis=1)
        x = g.nodes
        exact = (1 - x ** 2) ** (alpha / 2) / math.gamma(1 + alpha)
        mid = np.abs(x) < 0.8
        errors.append(np.max(np.abs(mean[mid] / exact[mid] - 1)))
    assert errors[1] < 1e-2
    assert 1.8 < errors[0] / errors[1] < 2.2


# --- exit law --------------------------------------------------------------------------


@pytest.mark.parametrize("model", [CAUCHY, LevyModel.alpha_stable(1.5),
                                   LevyModel.tempered_stable(1.0, 2.0)])
def test_exit_probabilities_sum_to_one(model):
    g = Grid1D(1.0, 128)
    for x in (0.0, 0.37, -0.8):
        right = exit_probability(model, D, x, (0.0, math.inf), (1.0, math.inf), g)
        left = exit_probability(model, D, x, (0.0, math.inf), (-math.inf, -1.0), g)
        assert left + right == pytest.approx(1.0, abs=1e-10)


def test_exit_law_is_mirror_symmetric():
    g = Grid1D(1.0, 128)
    a = exit_probability(CAUCHY, D, 0.3, (0.2, 1.5), (1.5, 3.0), g)
    b = exit_probability(CAUCHY, D, -0.3, (0.2, 1.5), (-3.0, -1.5), g)
    assert a == pytest.approx(b, abs=1e-12)
    assert 0 < a < 1


def test_exit_probability_splits_over_time_and_space():
    g = Grid1D(1.0, 128)
    whole = exit_probability(CAUCHY, D, 0.2, (0.0, 2.0), (1.0, 3.0), g)
    parts = (exit_probability(CAUCHY, D, 0.2, (0.0, 0.5), (1.0, 3.0), g)
             + exit_probability(CAUCHY, D, 0.2, (0.5, 2.0), (1.0, 2.0), g)
             + exit_probability(CAUCHY, D, 0.2, (0.5, 2.0), (2.0, 3.0), g))
    assert whole == pytest.approx(parts, abs=1e-12)


def test_lattice_exit_matches_continuous_exit_under_refinement():
    gaps = []
    for N in (64, 128, 256):
        g = Grid1D(1.0, N)
        lat = exit_probability(CAUCHY, D, 0.0, (0.0, math.inf), (1.5, math.inf), g)
        con = exit_probability(CAUCHY, D, 0.0, (0.0, math.inf), (1.5, math.inf), g, "continuous")
        gaps.append(abs(lat - con))
    assert gaps[-1] < gaps[0]


def test_exit_set_must_be_outside():
    with pytest.raises(DomainError):
        exit_probability(CAUCHY, D, 0.0, (0.0, 1.0), (0.5, 2.0), Grid1D(1.0, 32))


def test_exit_kernel_flip_symmetry():
    g = Grid1D(1.0, 64)
    i = 10
    a = exit_kernel(CAUCHY, D, i, 0.5, 1.7, g)
    b = exit_kernel(CAUCHY, D, g.N - 1 - i, 0.5, -1.7, g)
    assert a == pytest.approx(b, rel=1e-12)
    assert a > 0
    with pytest.raises(DomainError):
        exit_kernel(CAUCHY, D, i, 0.5, 0.5, g)


# --- reflection differences --------------------------------------------------------------


def test_difference_kernel_vanishes_at_the_midpoint():
    g = Grid1D(1.0, 64)
    U = Window(-1.0, 0.5 + g.h)  # odd node count: the midpoint is a node
    assert U.midpoint in set(g.nodes.tolist())
    z = np.array([0.5 + 1.5 * g.h, -1.0 - 0.5 * g.h])
    assert np.all(difference_kernel(CAUCHY, D, U, U.midpoint, 0.3, z, g) == 0.0)


@pytest.mark.parametrize("model", JUMP_MODELS)
def test_difference_kernel_signs(model):
    g = Grid1D(1.0, 64)
    U = Window(-0.75, 0.5)
    lattice = -1.0 + (np.arange(-32, 96) + 0.5) * g.h
    above = lattice[lattice > U.right]
    below = lattice[lattice < U.left]
    plus = g.nodes[U.in_plus(g.nodes)]
    for x in plus[[0, plus.size // 2, -1]]:
        for s in (0.1, 1.0):
            assert difference_kernel(model, D, U, x, s, above, g).min() >= -1e-12
            assert difference_kernel(model, D, U, x, s, below, g).max() <= 1e-12
    assert difference_kernel(model, D, U, plus[-1], 0.5, above[:1], g)[0] > 0


def test_difference_kernel_rejects_points_inside_window():
    g = Grid1D(1.0, 64)
    with pytest.raises(DomainError):
        difference_kernel(CAUCHY, D, Window(-1.0, 0.5), 0.203125, 0.3, [0.015625], g)


def test_window_must_be_face_aligned():
    with pytest.raises(GridAlignmentError):
        difference_kernel(CAUCHY, D, Window(-1.0, 0.51), 0.3, 0.3, [0.8], Grid1D(1.0, 64))


def test_identity_is_trivial_for_the_whole_domain():
    g = Grid1D(1.0, 64)
    chk = check_difference_identity(CAUCHY, D, Window(-1.0, 1.0), g.nodes[50], 1.0, g, panels=8)
    assert abs(chk.lhs) < 1e-12 and chk.rhs == 0.0


def test_identity_residual_shrinks_with_panels():
    g = Grid1D(1.0, 128)
    U = Window.for_pair(1.0, -0.5, 0.25)
    res = [check_difference_identity(CAUCHY, D, U, 0.5, 1.0, g, panels=p).residual
           for p in (8, 16, 32)]
    assert res[2] < 0.6 * res[1] < 0.36 * res[0]
    chk = check_difference_identity(CAUCHY, D, U, 0.5, 1.0, g, panels=32)
    assert chk.term_left == 0.0 and chk.lhs > 0


# --- eigenpairs ---------------------------------------------------------------------------


def test_brownian_eigenpair():
    g = Grid1D(1.0, 256)
    pair = first_eigenpair(LevyModel.brownian(), D, g)
    assert pair.extrapolated == pytest.approx(math.pi ** 2 / 4, rel=1e-6)
    assert np.max(np.abs(pair.phi - np.cos(math.pi * g.nodes / 2))) < 1e-3


def test_cauchy_eigenvalue_matches_known_value():
    # lambda_1 of the Cauchy process on (-1, 1) is 1.1577738836977...
    pair = first_eigenpair(CAUCHY, D, Grid1D(1.0, 256))
    assert pair.extrapolated == pytest.approx(1.1577738837, abs=1e-4)
    assert pair.lam < pair.lam2


@pytest.mark.parametrize("model", JUMP_MODELS)
def test_eigenfunction_positive_even_and_consistent(model):
    g = Grid1D(1.0, 128)
    pair = first_eigenpair(model, D, g, refine=False)
    assert np.all(pair.phi > 0)
    assert np.max(np.abs(pair.phi - pair.phi[::-1])) < 1e-9 * pair.phi.max()
    assert float(np.sum(pair.phi ** 2) * g.h) == pytest.approx(1.0, rel=1e-12)
    L = assemble_generator(model, g).matrix
    resid = np.linalg.norm(L @ pair.phi + pair.lam * pair.phi) / np.linalg.norm(pair.phi)
    assert resid < 1e-9 * pair.lam
    w = linalg.eigvalsh(L)
    assert -w.max() == pytest.approx(pair.lam, rel=1e-10)


def test_eigen_limit_deviation_decays():
    rep = eigen_limit_check(CAUCHY, D, Grid1D(1.0, 128), [0.5, 1.0, 2.0, 5.0])
    assert rep.nonincreasing
    assert rep.deviations[-1] < 1e-3
    assert rep.gap > 0
    with pytest.raises(ParameterError):
        eigen_limit_check(CAUCHY, D, Grid1D(1.0, 32), [0.0])


# --- two dimensions --------------------------------------------------------------------------


def test_two_dimensional_survival_has_the_box_symmetries():
    m = LevyModel.alpha_stable(1.0, dimension=2)
    box = Domain.box(1.0, 1.0)
    g = Grid2D(1.0, 1.0, 12)
    psi = survival_pde(m, box, 0.5, g).reshape(12, 12)
    assert np.max(np.abs(psi - psi[::-1, :])) < 1e-12
    assert np.max(np.abs(psi - psi[:, ::-1])) < 1e-12
    assert np.max(np.abs(psi - psi.T)) < 1e-12
    assert np.all((psi > 0) & (psi < 1))


def test_two_dimensional_eigenfunction_positive():
    m = LevyModel.alpha_stable(1.0, dimension=2)
    g = Grid2D(1.0, 1.0, 12)
    pair = first_eigenpair(m, Domain.box(1.0, 1.0), g, refine=False)
    assert np.all(pair.phi > 0)
    # domain monotonicity between the inscribed unit disc (lambda_1 = 2.0061...) and
    # the circumscribed disc of radius sqrt(2) (lambda_1 scaled by 2^(-1/2))
    assert 2.0061 / math.sqrt(2) < pair.lam < 2.0061


def test_rectangular_box_grid():
    g = Grid2D(1.0, 0.5, 8)
    assert g.Ny == 4 and g.size == 32
    with pytest.raises(ParameterError):
        Grid2D(1.0, 0.3, 8)


def test_grid_node_lookup():
    g = Grid1D(1.0, 8)
    assert g.node_index(g.nodes[3]) == 3
    with pytest.raises(GridAlignmentError):
        g.node_index(0.0)
    assert g.face_index(0.0) == 4
    assert node_interp(g, np.arange(8.0), 0.0) == pytest.approx(3.5)


@settings(max_examples=8)
@given(st.floats(0.05, 3.0), st.integers(0, 63))
def test_survival_matches_kernel_row_sum(t, i):
    g = Grid1D(1.0, 64)
    psi = survival_pde(CAUCHY, D, t, g)
    P = killed_kernel(CAUCHY, D, t, g).matrix
    assert P[i].sum() == pytest.approx(psi[i], abs=1e-10)
