import numpy as np
import pytest

from helpers import random_periodic_field, spectral_d1, spectral_laplacian
from ricci_dynamo.errors import GridMismatch
from ricci_dynamo.geometry import Connection, Metric2, ricci_rotation_conformal
from ricci_dynamo.operator import (
    MagneticField,
    assemble_grid,
    assemble_reduced,
    curved_laplacian,
    d1,
    d2,
    divergence,
    grid_coordinates,
    grid_spacing,
    induction_rhs,
    poisson_bracket,
)

FLAT = Metric2.identity()
NOCONN = Connection.flat()


def field(b1, b2, solenoidal=False):
    return MagneticField.grid(b1, b2, solenoidal=solenoidal)


class TestStencils:
    def test_first_derivative_matches_spectral_oracle(self):
        # truncation at the band limit |k| = 3 is ~2.5e-4 relative at N=64
        rng = np.random.default_rng(10)
        n = 64
        f = random_periodic_field(rng, n)
        h = grid_spacing(n)
        for axis in (0, 1):
            oracle = spectral_d1(f, axis)
            err = np.max(np.abs(d1(f, axis, h) - oracle))
            assert err < 1e-3 * np.max(np.abs(oracle))

    def test_second_derivative_single_mode(self):
        n = 64
        x, _ = grid_coordinates(n)
        h = grid_spacing(n)
        # 4th-order truncation error of the k=1 symbol at N=64 is 1.04e-6
        assert np.max(np.abs(d2(np.sin(x), 0, h) + np.sin(x))) < 1.5e-6

    def test_divergence_of_solenoidal_mode_vanishes(self):
        n = 32
        _, y = grid_coordinates(n)
        v = np.stack([np.sin(y), np.zeros_like(y)])
        assert np.max(np.abs(divergence(v, grid_spacing(n)))) < 1e-14


class TestMagneticField:
    def test_reduced_shape(self):
        b = MagneticField.reduced(1.0, 2.0)
        assert b.data.shape == (2,)
        assert not b.is_grid

    def test_solenoidal_flag_accepts_divergence_free(self):
        n = 32
        _, y = grid_coordinates(n)
        b = field(np.sin(y), np.zeros_like(y), solenoidal=True)
        assert b.is_grid and b.n == n

    def test_solenoidal_flag_rejects_compressive(self):
        n = 32
        x, _ = grid_coordinates(n)
        with pytest.raises(ValueError):
            field(np.sin(x), np.zeros_like(x), solenoidal=True)

    def test_bad_shape(self):
        with pytest.raises(ValueError):
            MagneticField(np.zeros((3, 4, 4)))


class TestPoissonBracket:
    def test_self_bracket_vanishes(self):
        rng = np.random.default_rng(11)
        n = 32
        v = np.stack([random_periodic_field(rng, n), random_periodic_field(rng, n)])
        assert np.max(np.abs(poisson_bracket(v, MagneticField(v)))) < 1e-12

    def test_constants_vanish(self):
        n = 16
        v = np.ones((2, n, n))
        b = field(2.0 * np.ones((n, n)), -1.0 * np.ones((n, n)))
        assert np.max(np.abs(poisson_bracket(v, b))) < 1e-14

    def test_shear_on_uniform_field(self):
        # v = (sin y, 0), B = (0, 1): w = sin y, bracket = (-cos y, 0)
        n = 64
        _, y = grid_coordinates(n)
        v = np.stack([np.sin(y), np.zeros_like(y)])
        b = field(np.zeros_like(y), np.ones_like(y))
        br = poisson_bracket(v, b)
        assert np.max(np.abs(br[0] + np.cos(y))) < 1e-5
        assert np.max(np.abs(br[1])) < 1e-14

    def test_antisymmetry_with_swapped_roles(self):
        # -curl(v x B) = +curl(B x v), exactly in floating point
        rng = np.random.default_rng(12)
        n = 32
        v = np.stack([random_periodic_field(rng, n), random_periodic_field(rng, n)])
        b = np.stack([random_periodic_field(rng, n), random_periodic_field(rng, n)])
        forward = poisson_bracket(v, MagneticField(b))
        swapped = poisson_bracket(b, MagneticField(v))
        assert np.max(np.abs(forward + swapped)) <= 1e-12

    def test_grid_mismatch(self):
        v = np.zeros((2, 16, 16))
        b = field(np.zeros((32, 32)), np.zeros((32, 32)))
        with pytest.raises(GridMismatch):
            poisson_bracket(v, b)


class TestCurvedLaplacian:
    def test_constant_field_flat_metric(self):
        n = 16
        b = field(np.full((n, n), 3.0), np.full((n, n), -2.0))
        assert np.max(np.abs(curved_laplacian(b, FLAT, NOCONN))) < 1e-12

    def test_single_mode(self):
        n = 64
        x, _ = grid_coordinates(n)
        b = field(np.sin(x), np.zeros_like(x))
        lap = curved_laplacian(b, FLAT, NOCONN)
        assert np.max(np.abs(lap[0] + np.sin(x))) < 1.5e-6
        assert np.max(np.abs(lap[1])) < 1e-14

    def test_beltrami_slice(self):
        # in-plane part of a unit-curl eigenfield; its Laplacian is -B
        n = 64
        _, y = grid_coordinates(n)
        b = field(np.sin(y), np.zeros_like(y))
        lap = curved_laplacian(b, FLAT, NOCONN)
        assert np.max(np.abs(lap + b.data)) < 1.5e-6

    def test_matches_spectral_oracle_flat(self):
        rng = np.random.default_rng(13)
        n = 64
        b = np.stack([random_periodic_field(rng, n), random_periodic_field(rng, n)])
        lap = curved_laplacian(MagneticField(b), FLAT, NOCONN)
        oracle = spectral_laplacian(b)
        assert np.max(np.abs(lap - oracle)) < 1e-3 * np.max(np.abs(oracle))

    def test_conformal_metric_scales_inverse(self):
        n = 32
        x, _ = grid_coordinates(n)
        b = field(np.sin(x), np.zeros_like(x))
        lap_flat = curved_laplacian(b, FLAT, NOCONN)
        lap_scaled = curved_laplacian(b, Metric2.conformal(4.0), NOCONN)
        assert np.allclose(lap_scaled, lap_flat / 4.0, atol=1e-12)

    def test_uniform_frame_rotation_terms(self):
        # gamma^l_jk = -a delta^l_k for grad phi = (a, 0) adds
        # a^2 B^p - a d_x B^p on a flat background
        n = 64
        a = 0.5
        x, _ = grid_coordinates(n)
        conn = Connection(np.zeros((2, 2, 2)), ricci_rotation_conformal([a, 0.0]))
        b = field(np.sin(x), np.zeros_like(x))
        lap = curved_laplacian(b, FLAT, conn)
        expected = -np.sin(x) + a * a * np.sin(x) - a * np.cos(x)
        assert np.max(np.abs(lap[0] - expected)) < 1e-4
        assert np.max(np.abs(lap[1])) < 1e-14


class TestInductionRhs:
    def test_zero_velocity_zero_eta(self):
        rng = np.random.default_rng(14)
        n = 16
        b = field(random_periodic_field(rng, n), random_periodic_field(rng, n))
        rhs = induction_rhs(np.zeros((2, n, n)), b, 0.0, FLAT, NOCONN)
        assert np.max(np.abs(rhs)) == 0.0

    def test_pure_diffusion_single_mode(self):
        n = 64
        x, _ = grid_coordinates(n)
        b = field(np.sin(x), np.zeros_like(x))
        rhs = induction_rhs(np.zeros((2, n, n)), b, 1.0, FLAT, NOCONN)
        assert np.max(np.abs(rhs[0] + np.sin(x))) < 1.5e-6

    def test_constant_everything_vanishes(self):
        n = 16
        v = 0.7 * np.ones((2, n, n))
        b = field(np.ones((n, n)), np.ones((n, n)))
        rhs = induction_rhs(v, b, 0.0, FLAT, NOCONN)
        assert np.max(np.abs(rhs)) < 1e-13

    def test_div_sign_convention_switch(self):
        n = 32
        x, _ = grid_coordinates(n)
        v = np.stack([np.sin(x), np.zeros_like(x)])
        b = field(np.ones((n, n)), np.zeros((n, n)))
        plus = induction_rhs(v, b, 0.0, FLAT, NOCONN, div_sign=+1)
        minus = induction_rhs(v, b, 0.0, FLAT, NOCONN, div_sign=-1)
        h = grid_spacing(n)
        assert np.allclose(plus - minus, 2.0 * divergence(v, h) * b.data, atol=1e-13)

    def test_negative_eta_rejected(self):
        n = 16
        b = field(np.zeros((n, n)), np.zeros((n, n)))
        with pytest.raises(ValueError):
            induction_rhs(np.zeros((2, n, n)), b, -0.1, FLAT, NOCONN)


class TestReducedOperator:
    def test_trivial_coefficients(self):
        op = assemble_reduced(0.0, 0.0, 0.0)
        assert op.trace == 0.0 and op.determinant == 0.0
        assert np.allclose(np.linalg.eigvals(op.matrix), 0.0)

    def test_growing_then_decaying_pair(self):
        op = assemble_reduced(1.0, 1.0, 0.0)
        assert op.trace == pytest.approx(-3.0)
        assert op.determinant == pytest.approx(0.0, abs=1e-15)
        vals = sorted(np.linalg.eigvals(op.matrix).real)
        assert vals == pytest.approx([-3.0, 0.0], abs=1e-12)

    def test_defective_double_root(self):
        op = assemble_reduced(1.0, 0.0, 0.0)
        assert op.trace == pytest.approx(-2.0)
        assert op.determinant == pytest.approx(1.0)
        vals = np.linalg.eigvals(op.matrix)
        assert np.allclose(vals, -1.0, atol=1e-7)

    def test_coefficients_random_sweep(self):
        rng = np.random.default_rng(15)
        for _ in range(1000):
            r, th = rng.uniform(-5.0, 5.0, size=2)
            eta = rng.uniform(0.0, 5.0)
            op = assemble_reduced(r, th, eta)
            b = 2.0 * (r + th / 2.0 - eta)
            c = r * r + th * th + 2.0 * (eta - th) * r
            scale = 1.0 + abs(b) + abs(c)
            assert abs(op.trace + b) <= 1e-14 * scale
            assert abs(op.determinant - c) <= 1e-14 * scale


class TestGridOperator:
    def test_matches_induction_rhs_on_random_fields(self):
        rng = np.random.default_rng(16)
        n = 16
        v = np.stack([random_periodic_field(rng, n), random_periodic_field(rng, n)])
        op = assemble_grid(v, FLAT, NOCONN, 0.3, n)
        for _ in range(20):
            b = np.stack([random_periodic_field(rng, n), random_periodic_field(rng, n)])
            direct = induction_rhs(v, MagneticField(b), 0.3, FLAT, NOCONN)
            assert np.max(np.abs(op.apply(b) - direct)) <= 1e-12

    def test_zero_velocity_zero_eta_is_zero_operator(self):
        rng = np.random.default_rng(17)
        n = 16
        op = assemble_grid(np.zeros((2, n, n)), FLAT, NOCONN, 0.0, n)
        b = np.stack([random_periodic_field(rng, n), random_periodic_field(rng, n)])
        assert np.max(np.abs(op.apply(b))) == 0.0

    def test_diffusion_is_symmetric_negative(self):
        rng = np.random.default_rng(18)
        n = 16
        op = assemble_grid(np.zeros((2, n, n)), FLAT, NOCONN, 1.0, n)
        a = np.stack([random_periodic_field(rng, n), random_periodic_field(rng, n)])
        b = np.stack([random_periodic_field(rng, n), random_periodic_field(rng, n)])
        la, lb = op.apply(a), op.apply(b)
        scale = np.max(np.abs(a)) * np.max(np.abs(b)) * n * n
        assert abs(float(np.sum(a * lb) - np.sum(la * b))) <= 1e-10 * scale
        assert float(np.sum(b * lb)) <= 1e-12 * scale

    def test_fourier_modes_are_near_eigenvectors(self):
        # flat diffusion: mode (k1, k2) has eigenvalue -eta (k1^2 + k2^2)
        n = 64
        eta = 1.0
        op = assemble_grid(np.zeros((2, n, n)), FLAT, NOCONN, eta, n)
        x, y = grid_coordinates(n)
        for k1 in range(0, 5):
            for k2 in range(0, 5):
                if k1 == 0 and k2 == 0:
                    b = np.stack([np.ones((n, n)), np.zeros((n, n))])
                    assert np.max(np.abs(op.apply(b))) < 1e-12
                    continue
                mode = np.sin(k1 * x + k2 * y)
                b = np.stack([mode, np.zeros_like(mode)])
                lam = -eta * (k1 * k1 + k2 * k2)
                resid = np.max(np.abs(op.apply(b) - lam * b))
                assert resid <= 0.01 * abs(lam) * np.max(np.abs(b))

    def test_apply_block_matches_apply(self):
        rng = np.random.default_rng(19)
        n = 16
        v = np.stack([random_periodic_field(rng, n), random_periodic_field(rng, n)])
        op = assemble_grid(v, FLAT, NOCONN, 0.2, n)
        block = rng.standard_normal((3, 2, n, n))
        batched = op.apply_block(block)
        for i in range(3):
            assert np.max(np.abs(batched[i] - op.apply(block[i]))) <= 1e-14

    def test_small_grid_rejected(self):
        with pytest.raises(ValueError):
            assemble_grid(np.zeros((2, 4, 4)), FLAT, NOCONN, 1.0, 4)

    def test_velocity_shape_mismatch(self):
        with pytest.raises(GridMismatch):
            assemble_grid(np.zeros((2, 16, 16)), FLAT, NOCONN, 1.0, 32)
