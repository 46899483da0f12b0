import math

import pytest

from hessqr.errors import DomainError, ParameterError
from hessqr.params import (
    GlobalData,
    derive_constants,
    derive_degree,
    derive_globals,
    derive_run_params,
    globals_with_degree,
    required_precision,
)


class TestDeriveDegree:
    def test_b_equal_one(self):
        # k=2 gives 2^(2/1) = 4 > 3; k=4 gives 2^(2/3) ~ 1.587 <= 3
        assert derive_degree(1.0) == 4

    def test_degree_equation_boundary(self):
        for B, expect in ((1.05, 4), (1.1, 8), (2.0, 64)):
            k = derive_degree(B)
            assert k == expect
            lhs = B ** ((8 * math.log2(k) + 3) / (k - 1)) * (2 * B**4) ** (2 / (k - 1))
            assert lhs <= 3.0
            if k > 2:
                prev = k // 2
                lhs_prev = B ** ((8 * math.log2(prev) + 3) / (prev - 1)) * (
                    2 * B**4
                ) ** (2 / (prev - 1))
                assert lhs_prev > 3.0

    def test_domain(self):
        with pytest.raises(DomainError):
            derive_degree(0.5)


class TestDeriveConstants:
    def test_b_equal_one_values(self):
        alpha, theta = derive_constants(1.0, 4)
        assert alpha == pytest.approx(1.01**2, rel=1e-12)
        assert theta == pytest.approx(1.1019642058141677, rel=1e-12)

    def test_gamma_constant(self):
        for B in (1.0, 1.5, 4.0):
            gd = derive_globals(B, Gamma=1e-3, Sigma=1.0, n0=8)
            assert gd.gamma == 0.2

    def test_range_when_degree_honest(self):
        for B in (1.0, 1.05, 1.1, 2.0, 10.0):
            k = derive_degree(B)
            alpha, theta = derive_constants(B, k)
            assert 1.0 <= alpha <= 2.0
            assert 1.0 <= theta <= 2.0


class TestGlobalData:
    def test_degree_power_of_two(self):
        with pytest.raises(ParameterError):
            GlobalData(B=1.0, Gamma=1.0, Sigma=1.0, n0=4, k=6, alpha=1.0, theta=1.1)

    def test_positive_bounds(self):
        with pytest.raises(ParameterError):
            GlobalData(B=1.0, Gamma=0.0, Sigma=1.0, n0=4, k=4, alpha=1.0, theta=1.1)


class TestDeriveRunParams:
    def test_gap_term_dominates(self):
        gd = globals_with_degree(2.0, 4, Gamma=1e-2, Sigma=1.0, n0=10)
        rp = derive_run_params(10, 1e-3, 0.05, gd)
        # Gamma/(8 n^2 B^2) = 3.125e-6 < delta -> omega = 3.125e-6 / 40
        assert rp.omega == pytest.approx(7.8125e-8, rel=1e-12)

    def test_min_structure(self):
        gd = globals_with_degree(2.0, 4, Gamma=1e-2, Sigma=1.0, n0=10)
        tiny = derive_run_params(10, 1e-9, 0.05, gd)
        assert tiny.omega == pytest.approx(1e-9 / 40, rel=1e-12)
        huge = derive_run_params(10, 0.9, 0.05, gd)
        assert huge.omega == pytest.approx(1e-2 / (8 * 100 * 4) / 40, rel=1e-12)

    def test_iteration_budget(self):
        gd = globals_with_degree(2.0, 4, Gamma=1e-2, Sigma=1.0, n0=10)
        rp = derive_run_params(10, 1e-3, 0.05, gd)
        # log(1/omega)/log(1/0.8016) evaluates to 74.0008...
        assert rp.n_dec == pytest.approx(74.0008371, rel=1e-8)
        assert rp.n_dec_budget == 74

    def test_phi_working(self):
        gd = globals_with_degree(2.0, 4, Gamma=1e-2, Sigma=1.0, n0=10)
        rp = derive_run_params(10, 1e-3, 0.05, gd)
        assert rp.phi_working == pytest.approx(0.05 / (3 * 100) / rp.n_dec, rel=1e-12)

    def test_validation(self):
        gd = globals_with_degree(2.0, 4, Gamma=1e-2, Sigma=1.0, n0=10)
        with pytest.raises(DomainError):
            derive_run_params(10, 2.0, 0.05, gd)  # delta > Sigma
        with pytest.raises(DomainError):
            derive_run_params(10, 1e-3, 1.5, gd)


class TestRequiredPrecision:
    def test_first_min_term_example(self):
        # n=10, k=4, Sigma=1, omega=7.8125e-8, N_dec=74.0008:
        # omega/(4.5 k N_dec n nu Sigma) = 5.796e-15 -> 48 bits
        omega = 7.8125e-8
        n_dec = math.log(1 / omega) / math.log(1 / (1.002 * 0.8))
        nu = 32 * 10**1.5
        u = omega / (4.5 * 4 * n_dec * 10 * nu * 1.0)
        assert u == pytest.approx(5.796e-15, rel=1e-3)
        assert math.ceil(math.log2(1 / u)) == 48

    def test_full_budget_dominates_first_term(self):
        bits = required_precision(10, 4, 1.0, 2.0, 1e-2, 1e-3, 0.05)
        assert bits >= 48

    def test_monotonicity(self):
        base = required_precision(10, 4, 1.0, 2.0, 1e-2, 1e-3, 0.05)
        assert required_precision(20, 4, 1.0, 2.0, 1e-2, 1e-3, 0.05) >= base
        assert required_precision(10, 4, 1.0, 4.0, 1e-2, 1e-3, 0.05) >= base
        assert required_precision(10, 4, 2.0, 2.0, 1e-2, 1e-3, 0.05) >= base
        assert required_precision(10, 4, 1.0, 2.0, 1e-4, 1e-3, 0.05) >= base
        assert required_precision(10, 4, 1.0, 2.0, 1e-2, 1e-5, 0.05) >= base
        assert required_precision(10, 4, 1.0, 2.0, 1e-2, 1e-3, 1e-4) >= base

    def test_degree_doubling_roughly_doubles_bits(self):
        b4 = required_precision(10, 4, 1.0, 2.0, 1e-2, 1e-3, 0.05)
        b8 = required_precision(10, 8, 1.0, 2.0, 1e-2, 1e-3, 0.05)
        assert 1.5 * b4 <= b8 <= 2.5 * b4
