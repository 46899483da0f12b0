import math

import numpy as np
import pytest

from conftest import random_hessenberg
from hessqr.errors import DimensionError, DomainError, StructureError
from hessqr.iqr import (
    HessenbergMatrix,
    ShiftList,
    comp_tau,
    iqr_multi,
    iqr_single,
    potential,
    potential_pow_k,
)
from hessqr.kernel import UNIT_ROUNDOFF_64 as U
from hessqr.oracle import (
    accumulate_q,
    dense_en_p_norm,
    iqr_exact,
    ref_eigs,
    matched_distance,
    resolvent_tau,
    condition_report,
)

PERM2 = np.array([[0, 1], [1, 0]], dtype=complex)


class TestHessenbergMatrix:
    def test_structure_enforced(self):
        with pytest.raises(StructureError):
            HessenbergMatrix(np.ones((3, 3)))

    def test_nonfinite_rejected(self):
        a = np.triu(np.ones((3, 3), dtype=complex), -1)
        a[0, 0] = np.nan
        with pytest.raises(StructureError):
            HessenbergMatrix(a)

    def test_bottom_subdiagonals(self):
        a = np.triu(np.arange(16, dtype=float).reshape(4, 4) + 1, -1)
        h = HessenbergMatrix(a)
        assert h.bottom_subdiagonal_abs(2) == [abs(a[2, 1]), abs(a[3, 2])]


class TestShiftList:
    def test_nonempty(self):
        with pytest.raises(DomainError):
            ShiftList(())

    def test_finite(self):
        with pytest.raises(DomainError):
            ShiftList((complex("inf"),))

    def test_repeated(self):
        assert ShiftList.repeated(2j, 3).roots == (2j, 2j, 2j)


class TestIqrSingle:
    def test_permutation_fixed_point(self):
        res = iqr_single(HessenbergMatrix(PERM2), 0.0)
        np.testing.assert_allclose(res.next_h.a, PERM2)
        assert res.r_nn_per_step == [1.0]

    def test_triangular_noop(self):
        a = np.triu(np.array([[2.0, 1.0], [0.0, 3.0]], dtype=complex))
        res = iqr_single(HessenbergMatrix(a), 1.0)
        np.testing.assert_allclose(res.next_h.a, a, atol=4 * U)

    def test_rnn_matches_resolvent(self):
        # (R)_22 = ||e_2 (H - 2)^{-1}||^{-1} for H = [[2,1],[1,2]]
        h = HessenbergMatrix(np.array([[2, 1], [1, 2]], dtype=complex))
        res = iqr_single(h, 2.0)
        oracle = float(resolvent_tau(h, ShiftList((2.0,))))
        assert res.r_nn_per_step[0] == pytest.approx(oracle, rel=1e-3)

    def test_dimension_error(self):
        with pytest.raises(DimensionError):
            iqr_single(HessenbergMatrix(np.array([[1.0]])), 0.0)

    def test_structural_zeros_exact(self):
        rng = np.random.default_rng(11)
        h = random_hessenberg(rng, 9)
        res = iqr_multi(h, ShiftList((0.3, -0.2j, 1.1)))
        a = res.next_h.a
        for i in range(2, 9):
            assert not a[i, : i - 1].any()

    def test_backward_stability_sample(self):
        rng = np.random.default_rng(12)
        for n in (8, 32):
            for _ in range(10):
                h = random_hessenberg(rng, n)
                norm_h = np.linalg.norm(h.a, 2)
                s = complex(*rng.standard_normal(2)) * norm_h
                res = iqr_single(h, s, keep_rotations=True)
                q = accumulate_q(res.steps, n)
                shifted = h.a - s * np.eye(n)
                r = q.conj().T @ shifted
                norm_shift = np.linalg.norm(shifted, 2)
                assert np.linalg.norm(np.tril(r, -1), 2) <= 16 * n**1.5 * U * norm_shift
                assert (
                    np.linalg.norm(res.next_h.a - q.conj().T @ h.a @ q, 2)
                    <= 32 * n**1.5 * U * norm_shift
                )


class TestIqrMulti:
    def test_single_shift_equivalence(self):
        rng = np.random.default_rng(13)
        h = random_hessenberg(rng, 6)
        a = iqr_single(h, 0.7 - 0.1j).next_h.a
        b = iqr_multi(h, ShiftList((0.7 - 0.1j,))).next_h.a
        np.testing.assert_array_equal(a, b)

    def test_exact_shift_deflation(self):
        rng = np.random.default_rng(14)
        h = random_hessenberg(rng, 3)
        eigs = ref_eigs(h.a)
        res = iqr_multi(h, ShiftList((complex(eigs[0]), complex(eigs[1]))))
        tau = res.r_nn_per_step[0] * res.r_nn_per_step[1]
        assert tau <= 1e-12
        assert min(res.next_h.bottom_subdiagonal_abs(2)) <= 1e-7

    def test_spectrum_preserved(self):
        rng = np.random.default_rng(15)
        for _ in range(5):
            h = random_hessenberg(rng, 8)
            shifts = ShiftList(tuple(rng.standard_normal(4) + 1j * rng.standard_normal(4)))
            res = iqr_multi(h, shifts)
            rep = condition_report(h.a)
            dist = matched_distance(ref_eigs(res.next_h.a), ref_eigs(h.a))
            # Bauer-Fike conversion of the backward bound
            norm_h = np.linalg.norm(h.a, 2)
            c = max(abs(np.array(shifts.roots))) / norm_h
            backward = 1.4 * 4 * (1 + c) * norm_h * 32 * 8**1.5 * U
            assert dist <= max(rep.kappa_v * backward, 1e-12)


class TestCompTau:
    def test_two_by_two(self):
        h = HessenbergMatrix(PERM2)
        res = comp_tau(h, ShiftList((2.0,)))
        assert res.value == pytest.approx(3 / math.sqrt(5), rel=1e-3)

    def test_eigenvalue_shift_vanishes(self):
        h = HessenbergMatrix(PERM2)  # eigenvalues +-1
        res = comp_tau(h, ShiftList((1.0,)))
        assert res.value <= 1e-14

    def test_matches_resolvent_oracle(self):
        rng = np.random.default_rng(16)
        trials = 0
        for _ in range(40):
            h = random_hessenberg(rng, 6)
            norm_h = np.linalg.norm(h.a, 2)
            shifts = ShiftList(
                tuple(norm_h * (rng.standard_normal(2) + 1j * rng.standard_normal(2)))
            )
            eigs = ref_eigs(h.a)
            dist = min(abs(e - s) for e in eigs for s in shifts.roots)
            if dist < 1e-3 * norm_h:
                continue
            trials += 1
            oracle = float(resolvent_tau(h, shifts))
            assert comp_tau(h, shifts).value == pytest.approx(oracle, rel=1.1e-3)
        assert trials >= 30

    def test_trust_flag(self):
        h = HessenbergMatrix(PERM2)
        res = comp_tau(h, ShiftList((2.0,)), dist_bound=1.0, kappa_bound=1.0)
        assert res.trusted is True
        res = comp_tau(h, ShiftList((2.0,)), dist_bound=1e-12, kappa_bound=1e6)
        assert res.trusted is False
        assert comp_tau(h, ShiftList((2.0,))).trusted is None


class TestPotential:
    def test_unit_subdiagonals(self):
        a = np.triu(np.ones((5, 5), dtype=complex), -1)
        assert potential(HessenbergMatrix(a), 3) == pytest.approx(1.0, rel=1e-12)

    def test_geometric_mean(self):
        a = np.triu(np.ones((3, 3), dtype=complex), -1)
        a[1, 0] = 2.0
        a[2, 1] = 8.0
        assert potential(HessenbergMatrix(a), 2) == pytest.approx(4.0, rel=5e-4)

    def test_zero_subdiagonal(self):
        a = np.triu(np.ones((4, 4), dtype=complex), -1)
        a[3, 2] = 0.0
        assert potential(HessenbergMatrix(a), 2) == 0.0

    def test_dimension_guard(self):
        a = np.triu(np.ones((3, 3), dtype=complex), -1)
        with pytest.raises(DimensionError):
            potential(HessenbergMatrix(a), 3)

    def test_extreme_magnitudes(self):
        a = np.triu(np.ones((5, 5), dtype=complex), -1)
        for i, v in enumerate([1e-160, 1e-170, 1e-150, 1e-140]):
            a[i + 1, i] = v
        psi = potential(HessenbergMatrix(a), 4)
        assert psi == pytest.approx(10 ** (-155), rel=1e-3)
        mant, ex = potential_pow_k(HessenbergMatrix(a), 4)
        assert mant * 2.0**ex == 0 or ex < -1000  # raw product underflows floats

    def test_variational_identity_sample(self):
        # psi_k(H) = ||e_n* chi_k(H)||^(1/k) with chi_k from corner eigenvalues
        rng = np.random.default_rng(17)
        for n, k in ((6, 2), (8, 4)):
            h = random_hessenberg(rng, n)
            corner_eigs = ref_eigs(h.a[n - k :, n - k :], mp_out=True)
            lhs = float(dense_en_p_norm(h, ShiftList(tuple(complex(e) for e in corner_eigs)))) ** (1 / k)
            psi_exact = float(np.prod([float(v) for v in h.bottom_subdiagonal_abs(k)])) ** (1 / k)
            assert lhs == pytest.approx(psi_exact, rel=1e-10)


class TestForwardStability:
    def test_against_extended_precision(self):
        # well-separated shifts: binary64 IQR tracks the extended-precision one
        rng = np.random.default_rng(18)
        for _ in range(5):
            h = random_hessenberg(rng, 8)
            rep = condition_report(h.a)
            norm_h = rep.norm
            eigs = ref_eigs(h.a)
            shifts = []
            while len(shifts) < 2:
                s = complex(*rng.standard_normal(2)) * norm_h
                if min(abs(s - e) for e in eigs) >= 1e-2 * norm_h:
                    shifts.append(s)
            shifts = ShiftList(tuple(shifts))
            got = iqr_multi(h, shifts).next_h.a
            ref = iqr_exact(h, shifts).to_float().a
            dist = min(abs(s - e) for e in eigs for s in shifts.roots)
            c = max(abs(np.array(shifts.roots))) / norm_h
            bound = (
                32
                * rep.kappa_v
                * norm_h
                * ((2 + 2 * c) * norm_h / dist) ** 2
                * math.sqrt(8)
                * 32
                * 8**1.5
                * U
            )
            assert np.linalg.norm(got - ref) <= bound
