import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from anisorib.geometry import Continuum, Domain2D, Square, checkerboard, unit_square
from anisorib.tensor import (
    ConstantField,
    PiecewiseConstantField,
    SpdTensor2,
    riemannian_norm_entries,
)
from anisorib.varifold import (
    AngularMeasure,
    F_infinity_fitted,
    F_infinity_min,
    FittedVarifold,
    angle_total_variation,
    disintegrate,
    empirical_varifold,
    f_infinity,
    optimality_deviation,
    pair_test,
    profile_square_integrals,
    square_sample_point,
)


def square_boundary():
    return Continuum([(0, 0, 1, 0), (1, 0, 1, 1), (1, 1, 0, 1), (0, 1, 0, 0)])


def quad_form(m: SpdTensor2):
    def phi(points, angles):
        return riemannian_norm_entries(m.entries(), angles) ** 2

    return phi


class TestAngularMeasure:
    def test_normalizes_to_probability(self):
        nu = AngularMeasure(np.array([0.0, np.pi / 2]), np.array([2.0, 2.0]))
        np.testing.assert_allclose(nu.weights, [0.5, 0.5])

    def test_merges_coincident_atoms(self):
        nu = AngularMeasure(np.array([0.3, 0.3, 1.0]), np.array([1.0, 1.0, 2.0]))
        assert nu.n_atoms == 2
        np.testing.assert_allclose(nu.weights, [0.5, 0.5])

    def test_angles_reduced_mod_pi(self):
        nu = AngularMeasure(np.array([np.pi + 0.25]), np.array([1.0]))
        assert nu.angles[0] == pytest.approx(0.25)

    def test_wraparound_atom_merges_with_zero(self):
        nu = AngularMeasure(np.array([0.0, np.pi - 1e-14]), np.array([1.0, 1.0]))
        assert nu.n_atoms == 1

    def test_rejects_zero_mass(self):
        with pytest.raises(ValueError):
            AngularMeasure(np.array([0.1]), np.array([0.0]))

    def test_rejects_negative_weight(self):
        with pytest.raises(ValueError):
            AngularMeasure(np.array([0.1, 0.2]), np.array([1.0, -0.5]))

    def test_mean_norm_two_atoms(self):
        # diag(4, 9): norm is 2 along angle 0 and 3 along pi/2,
        # equal-weight mix gives 2.5
        nu = AngularMeasure(np.array([0.0, np.pi / 2]), np.array([1.0, 1.0]))
        assert nu.mean_riemannian_norm(SpdTensor2.diag(4.0, 9.0)) == pytest.approx(2.5)

    def test_binned_masses_land_in_right_bins(self):
        nu = AngularMeasure(np.array([0.0, np.pi / 2]), np.array([0.25, 0.75]))
        h = nu.binned(36)
        assert h[0] == pytest.approx(0.25)
        assert h[18] == pytest.approx(0.75)
        assert h.sum() == pytest.approx(1.0)

    @given(
        angles=st.lists(st.floats(0, 3.1), min_size=1, max_size=6),
        weights=st.lists(st.floats(0.01, 5.0), min_size=6, max_size=6),
        lam=st.floats(0.5, 9.0),
    )
    @settings(max_examples=60, deadline=None)
    def test_mean_norm_between_sigma_bounds(self, angles, weights, lam):
        nu = AngularMeasure(np.array(angles), np.array(weights[: len(angles)]))
        val = nu.mean_riemannian_norm(SpdTensor2.diag(1.0, lam))
        lo, hi = np.sqrt(min(1.0, lam)), np.sqrt(max(1.0, lam))
        assert lo - 1e-9 <= val <= hi + 1e-9


class TestEmpiricalVarifold:
    def test_single_segment_atom(self):
        v = empirical_varifold(Continuum([(0, 0, 1, 0)]))
        assert v.n_atoms == 1
        np.testing.assert_allclose(v.points[0], [0.5, 0.0])
        assert v.angles[0] == pytest.approx(np.pi / 2)
        assert v.weights[0] == pytest.approx(1.0)

    def test_square_boundary_four_atoms(self):
        v = empirical_varifold(square_boundary())
        assert v.n_atoms == 4
        np.testing.assert_allclose(v.weights, 0.25)
        assert sorted(np.round(v.angles, 12)) == pytest.approx(
            [0.0, 0.0, np.pi / 2, np.pi / 2]
        )

    def test_weights_proportional_to_length(self):
        v = empirical_varifold(Continuum([(0, 0, 1, 0), (0, 1, 3, 1)]))
        np.testing.assert_allclose(v.weights, [0.25, 0.75])
        assert v.source_length == pytest.approx(4.0)

    def test_rejects_zero_length(self):
        with pytest.raises(ValueError):
            empirical_varifold(Continuum([(0, 0, 1, 0)], drop_degenerate=True).subset([]))


class TestPairTest:
    def test_constant_one_gives_mass(self):
        v = empirical_varifold(square_boundary())
        assert pair_test(v, lambda p, a: np.ones_like(a)) == pytest.approx(1.0)

    def test_quadratic_form_on_horizontal_segment(self):
        v = empirical_varifold(Continuum([(0, 0, 1, 0)]))
        assert pair_test(v, quad_form(SpdTensor2.diag(1.0, 4.0))) == pytest.approx(4.0)

    def test_quadratic_form_on_square_boundary(self):
        # half the mass has normal angle 0 (value 1), half pi/2 (value 4)
        v = empirical_varifold(square_boundary())
        assert pair_test(v, quad_form(SpdTensor2.diag(1.0, 4.0))) == pytest.approx(2.5)

    def test_linear_in_test_function(self):
        v = empirical_varifold(square_boundary())
        f = quad_form(SpdTensor2.diag(1.0, 4.0))
        g = lambda p, a: np.cos(2 * a)
        lhs = pair_test(v, lambda p, a: 2 * f(p, a) + 3 * g(p, a))
        assert lhs == pytest.approx(2 * pair_test(v, f) + 3 * pair_test(v, g))

    def test_invariant_under_subdivision_for_angle_tests(self):
        rng = np.random.default_rng(11)
        segs = rng.uniform(0, 1, size=(15, 4))
        halves = []
        for row in segs:
            mid = 0.5 * (row[:2] + row[2:])
            halves.append(np.concatenate([row[:2], mid]))
            halves.append(np.concatenate([mid, row[2:]]))
        v1 = empirical_varifold(Continuum(segs))
        v2 = empirical_varifold(Continuum(np.array(halves)))
        phi = quad_form(SpdTensor2(2.0, 0.5, 1.0))
        assert pair_test(v2, phi) == pytest.approx(pair_test(v1, phi), rel=1e-12)


class TestDisintegrate:
    def test_square_boundary_single_square(self):
        board = checkerboard(unit_square(), 1.0)
        v = empirical_varifold(square_boundary())
        fitted = disintegrate(v, board, unit_square())
        assert fitted.alphas[0] == pytest.approx(1.0)
        nu = fitted.nus[0]
        np.testing.assert_allclose(nu.angles, [0.0, np.pi / 2])
        np.testing.assert_allclose(nu.weights, [0.5, 0.5])

    def test_midline_single_square(self):
        board = checkerboard(unit_square(), 1.0)
        v = empirical_varifold(Continuum([(0, 0.5, 1, 0.5)]))
        fitted = disintegrate(v, board, unit_square())
        assert fitted.alphas[0] == pytest.approx(1.0)
        assert fitted.nus[0].n_atoms == 1
        assert fitted.nus[0].angles[0] == pytest.approx(np.pi / 2)

    def test_empty_square_gets_zero_alpha_and_placeholder(self):
        board = checkerboard(unit_square(), 0.5)
        v = empirical_varifold(Continuum([(0.1, 0.1, 0.2, 0.1), (0.6, 0.1, 0.9, 0.1)]))
        fitted = disintegrate(v, board, unit_square())
        empty = [i for i, a in enumerate(fitted.alphas) if a == 0]
        assert len(empty) == 2
        for i in empty:
            assert fitted.nus[i].n_atoms == 1
            assert fitted.nus[i].angles[0] == 0.0

    def test_mass_reconstructs_to_one(self):
        rng = np.random.default_rng(12)
        v = empirical_varifold(Continuum(rng.uniform(0, 1, size=(80, 4))))
        board = checkerboard(unit_square(), 0.25)
        fitted = disintegrate(v, board, unit_square())
        mass = np.dot(fitted.alphas, board.omega_areas)
        assert mass == pytest.approx(1.0, abs=1e-12)


class TestFittedInvariant:
    def test_rejects_wrong_mass(self):
        board = checkerboard(unit_square(), 0.5)
        with pytest.raises(ValueError):
            FittedVarifold(board, np.full(4, 2.0), [AngularMeasure.dirac(0.0)] * 4)

    def test_rejects_negative_alpha(self):
        board = checkerboard(unit_square(), 1.0)
        with pytest.raises(ValueError):
            FittedVarifold(board, np.array([-1.0]), [AngularMeasure.dirac(0.0)])


class TestLimitProfile:
    def test_isotropic_unit_square(self):
        prof = f_infinity(ConstantField(SpdTensor2.identity()), unit_square())
        assert prof["Z"] == pytest.approx(1.0)
        assert np.allclose(prof["values"], 1.0)

    def test_constant_anisotropic(self):
        # sigma_max = 4 everywhere: Z = 1/2, so the profile is constant 2
        prof = f_infinity(ConstantField(SpdTensor2.diag(1.0, 4.0)), unit_square())
        assert prof["Z"] == pytest.approx(0.5)
        # any constant field normalizes to the uniform profile 1/|Omega|
        assert np.allclose(prof["values"], 1.0)

    def test_piecewise_two_phase(self):
        # left half sigma_max 1, right half 4: Z = 0.5 + 0.25 = 0.75
        fld = PiecewiseConstantField(
            np.array([0.0, 0.5, 1.0]),
            np.array([0.0, 1.0]),
            np.array([[[1.0, 0.0, 1.0], [4.0, 0.0, 4.0]]]),
        )
        prof = f_infinity(fld, unit_square())
        assert prof["Z"] == pytest.approx(0.75)

    def test_profile_integrates_to_one(self):
        fld = PiecewiseConstantField(
            np.array([0.0, 0.5, 1.0]),
            np.array([0.0, 1.0]),
            np.array([[[1.0, 0.0, 1.0], [4.0, 0.0, 4.0]]]),
        )
        prof = f_infinity(fld, unit_square())
        assert np.dot(prof["values"], prof["weights"]) == pytest.approx(1.0)

    def test_triangle_domain_weights_see_shape(self):
        tri = Domain2D([[0, 0], [1, 0], [0, 1]])
        prof = f_infinity(ConstantField(SpdTensor2.identity()), tri)
        assert prof["Z"] == pytest.approx(0.5, rel=1e-9)

    def test_square_integrals_partition_z(self):
        fld = PiecewiseConstantField(
            np.array([0.0, 0.5, 1.0]),
            np.array([0.0, 1.0]),
            np.array([[[1.0, 0.0, 1.0], [4.0, 0.0, 4.0]]]),
        )
        board = checkerboard(unit_square(), 0.5)
        parts = profile_square_integrals(fld, unit_square(), board)
        assert parts.sum() == pytest.approx(0.75)
        by_idx = {(q.ix, q.iy): parts[i] for i, q in enumerate(board.squares)}
        assert by_idx[(0, 0)] == pytest.approx(0.25)
        assert by_idx[(1, 0)] == pytest.approx(0.125)


class TestLimitFunctional:
    def test_min_isotropic(self):
        val = F_infinity_min(ConstantField(SpdTensor2.identity()), unit_square())
        assert val == pytest.approx(1.0 / np.pi**2)

    def test_min_anisotropic(self):
        val = F_infinity_min(ConstantField(SpdTensor2.diag(1.0, 4.0)), unit_square())
        assert val == pytest.approx(0.25 / np.pi**2)

    def test_min_two_phase(self):
        fld = PiecewiseConstantField(
            np.array([0.0, 0.5, 1.0]),
            np.array([0.0, 1.0]),
            np.array([[[1.0, 0.0, 1.0], [4.0, 0.0, 4.0]]]),
        )
        val = F_infinity_min(fld, unit_square())
        assert val == pytest.approx(0.5625 / np.pi**2)

    def test_fitted_at_optimum_matches_min(self):
        # constant diag(1,4): optimal data is density 1 with normals along
        # the top eigendirection (angle pi/2)
        fld = ConstantField(SpdTensor2.diag(1.0, 4.0))
        board = checkerboard(unit_square(), 1.0)
        fitted = FittedVarifold(board, np.array([1.0]), [AngularMeasure.dirac(np.pi / 2)])
        val = F_infinity_fitted(fitted, fld)
        assert val == pytest.approx(1.0 / (4 * np.pi**2))
        assert val == pytest.approx(F_infinity_min(fld, unit_square()), rel=1e-9)

    def test_fitted_suboptimal_orientation_larger(self):
        fld = ConstantField(SpdTensor2.diag(1.0, 4.0))
        board = checkerboard(unit_square(), 1.0)
        bad = FittedVarifold(board, np.array([1.0]), [AngularMeasure.dirac(0.0)])
        assert F_infinity_fitted(bad, fld) == pytest.approx(1.0 / np.pi**2)

    def test_fitted_zero_density_square_is_infinite(self):
        fld = ConstantField(SpdTensor2.identity())
        board = checkerboard(unit_square(), 0.5)
        alphas = np.array([4.0 / 3, 4.0 / 3, 4.0 / 3, 0.0])
        fitted = FittedVarifold(board, alphas, [AngularMeasure.dirac(0.0)] * 4)
        assert F_infinity_fitted(fitted, fld) == float("inf")

    def test_fitted_dominates_min(self):
        rng = np.random.default_rng(13)
        fld = ConstantField(SpdTensor2(3.0, 0.7, 1.5))
        board = checkerboard(unit_square(), 0.5)
        fmin = F_infinity_min(fld, unit_square())
        for _ in range(10):
            raw = rng.uniform(0.2, 2.0, 4)
            alphas = raw / np.dot(raw, board.omega_areas)
            nus = [AngularMeasure.dirac(rng.uniform(0, np.pi)) for _ in range(4)]
            assert F_infinity_fitted(FittedVarifold(board, alphas, nus), fld) >= fmin - 1e-9


class TestAngleTV:
    def test_identical_measures(self):
        nu = AngularMeasure(np.array([0.2, 1.3]), np.array([0.4, 0.6]))
        assert angle_total_variation(nu, nu) == pytest.approx(0.0)

    def test_disjoint_diracs(self):
        a = AngularMeasure.dirac(0.0)
        b = AngularMeasure.dirac(np.pi / 2)
        assert angle_total_variation(a, b) == pytest.approx(1.0)

    def test_half_overlap(self):
        mix = AngularMeasure(np.array([0.0, np.pi / 2]), np.array([0.5, 0.5]))
        assert angle_total_variation(mix, AngularMeasure.dirac(0.0)) == pytest.approx(0.5)

    def test_weight_perturbation(self):
        a = AngularMeasure(np.array([0.0, np.pi / 2]), np.array([0.6, 0.4]))
        b = AngularMeasure(np.array([0.0, np.pi / 2]), np.array([0.5, 0.5]))
        assert angle_total_variation(a, b) == pytest.approx(0.1)

    def test_wraparound_atoms_match(self):
        a = AngularMeasure(np.array([np.pi - 1e-12]), np.array([1.0]))
        b = AngularMeasure.dirac(0.0)
        assert angle_total_variation(a, b) == pytest.approx(0.0, abs=1e-9)

    def test_symmetry_and_range(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            a = AngularMeasure(rng.uniform(0, np.pi, 3), rng.uniform(0.1, 1, 3))
            b = AngularMeasure(rng.uniform(0, np.pi, 4), rng.uniform(0.1, 1, 4))
            assert angle_total_variation(a, b) == pytest.approx(
                angle_total_variation(b, a)
            )
            assert 0 <= angle_total_variation(a, b) <= 1 + 1e-12


class TestSamplePoint:
    def test_interior_center_used_directly(self):
        q = Square(0.0, 0.0, 0.5)
        p = square_sample_point(unit_square(), q)
        np.testing.assert_allclose(p, [0.25, 0.25])

    def test_cut_square_point_lands_inside(self):
        tri = Domain2D([[0, 0], [1, 0], [0, 1]])
        q = Square(0.375, 0.375, 0.5)  # center (0.625, 0.625) is outside
        p = square_sample_point(tri, q)
        assert bool(tri.contains(p[None, :])[0])


class TestOptimalityDeviation:
    def test_boundary_only_single_square(self):
        # share 1 vs target 1; empirical angles split half/half while the
        # optimal orientation is the single top eigendirection
        fld = ConstantField(SpdTensor2.diag(1.0, 4.0))
        board = checkerboard(unit_square(), 1.0)
        rep = optimality_deviation(square_boundary(), fld, board, unit_square())
        assert rep.length_share[0] == pytest.approx(1.0)
        assert rep.target_share[0] == pytest.approx(1.0)
        assert rep.angle_tv[0] == pytest.approx(0.5)
        assert rep.applicable[0]

    def test_horizontal_comb_matches_optimum(self):
        rows = [(0.0, (k + 0.5) / 16, 1.0, (k + 0.5) / 16) for k in range(16)]
        fld = ConstantField(SpdTensor2.diag(1.0, 4.0))
        board = checkerboard(unit_square(), 0.5)
        rep = optimality_deviation(Continuum(rows), fld, board, unit_square())
        np.testing.assert_allclose(rep.length_share, 0.25, atol=1e-12)
        np.testing.assert_allclose(rep.target_share, 0.25, atol=1e-12)
        assert rep.max_share_gap == pytest.approx(0.0, abs=1e-12)
        assert rep.max_angle_tv == pytest.approx(0.0, abs=1e-12)

    def test_isotropic_flagged_not_applicable(self):
        fld = ConstantField(SpdTensor2.identity())
        board = checkerboard(unit_square(), 1.0)
        rep = optimality_deviation(square_boundary(), fld, board, unit_square())
        assert not rep.applicable[0]
        assert rep.max_angle_tv == 0.0

    def test_lopsided_set_flags_gap(self):
        fld = ConstantField(SpdTensor2.identity())
        board = checkerboard(unit_square(), 0.5)
        sigma = Continuum([(0.0, 0.25, 0.5, 0.25)])
        rep = optimality_deviation(sigma, fld, board, unit_square())
        assert rep.max_share_gap == pytest.approx(0.75)

    def test_two_phase_targets(self):
        fld = PiecewiseConstantField(
            np.array([0.0, 0.5, 1.0]),
            np.array([0.0, 1.0]),
            np.array([[[1.0, 0.0, 1.0], [4.0, 0.0, 4.0]]]),
        )
        board = checkerboard(unit_square(), 0.5)
        rep = optimality_deviation(square_boundary(), fld, board, unit_square())
        by_idx = {(q.ix, q.iy): rep.target_share[i] for i, q in enumerate(board.squares)}
        assert by_idx[(0, 0)] == pytest.approx(1.0 / 3)
        assert by_idx[(1, 1)] == pytest.approx(1.0 / 6)

    def test_shares_sum_to_one_when_contained(self):
        rng = np.random.default_rng(14)
        fld = ConstantField(SpdTensor2.identity())
        board = checkerboard(unit_square(), 0.25)
        sigma = Continuum(rng.uniform(0, 1, size=(60, 4)))
        rep = optimality_deviation(sigma, fld, board, unit_square())
        assert rep.length_share.sum() == pytest.approx(1.0, abs=1e-10)
        assert rep.target_share.sum() == pytest.approx(1.0, abs=1e-12)
