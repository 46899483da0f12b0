"""Implicit QR steps on Hessenberg matrices, tau products, and the potential.

A degree-1 step factors H - s = QR by a sweep of Givens rotations and forms
the next iterate R*Q + s; higher degrees compose degree-1 steps in root order.
Q is never materialized here -- tests accumulate it from the stored rotations.
The diagonal of each triangular factor is kept real nonnegative (the unique
positive-diagonal QR convention), which pins down the bottom-right entries
(R_l)_{nn} whose product approximates tau_p(H)^k = ||e_n* p(H)^{-1}||^{-1}.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional

import mpmath
import numpy as np

from .errors import DimensionError, DomainError, StructureError
from .kernel import IDENTITY_ROTATION, is_mp_array, kth_root, make_givens


def _finite_all(a):
    if is_mp_array(a):
        return all(mpmath.isfinite(z) for z in a.ravel())
    return bool(np.isfinite(a).all())


class HessenbergMatrix:
    """Dense complex upper Hessenberg matrix.

    Entries below the first subdiagonal are exact zeros; construction and
    every QR step enforce this.  The payload is either complex128 (production)
    or an object array of mpmath numbers (extended precision).
    """

    __slots__ = ("a",)

    def __init__(self, a, validate=True):
        a = np.array(a, copy=True)
        if a.dtype != object:
            a = a.astype(np.complex128)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {a.shape}")
        if validate:
            if not _finite_all(a):
                raise StructureError("matrix has non-finite entries")
            n = a.shape[0]
            for i in range(2, n):
                for j in range(i - 1):
                    if a[i, j] != 0:
                        raise StructureError(
                            f"entry ({i},{j}) below the subdiagonal is nonzero"
                        )
        self.a = a

    @property
    def n(self):
        return self.a.shape[0]

    @property
    def is_extended(self):
        return is_mp_array(self.a)

    def copy(self):
        return HessenbergMatrix(self.a, validate=False)

    def subdiagonal_abs(self):
        """Moduli of the n-1 subdiagonal entries, top to bottom."""
        n = self.n
        vals = [abs(self.a[i + 1, i]) for i in range(n - 1)]
        if self.is_extended:
            return vals
        return np.array(vals)

    def bottom_subdiagonal_abs(self, k):
        """Moduli of the bottom k subdiagonal entries h_(i,i-1), i=n-k+1..n."""
        n = self.n
        if not 1 <= k <= n - 1:
            raise DimensionError(f"bottom k={k} subdiagonals undefined for n={n}")
        return [abs(self.a[i, i - 1]) for i in range(n - k, n)]

    def is_unreduced(self, omega, k):
        return all(v > omega for v in self.bottom_subdiagonal_abs(k))

    def corner(self, k):
        """Bottom-right k x k corner (a copy)."""
        if not 1 <= k <= self.n:
            raise DimensionError(f"corner k={k} out of range for n={self.n}")
        return self.a[self.n - k :, self.n - k :].copy()

    def frobenius_norm(self):
        if self.is_extended:
            return mpmath.sqrt(mpmath.fsum(abs(z) ** 2 for z in self.a.ravel()))
        return float(np.linalg.norm(self.a))

    def to_extended(self):
        """Copy with entries converted exactly to mpmath numbers."""
        out = np.empty(self.a.shape, dtype=object)
        for i in range(self.n):
            for j in range(self.n):
                z = complex(self.a[i, j]) if not self.is_extended else self.a[i, j]
                out[i, j] = mpmath.mpc(z)
        return HessenbergMatrix(out, validate=False)

    def to_float(self):
        if not self.is_extended:
            return self.copy()
        out = np.array(
            [[complex(z) for z in row] for row in self.a], dtype=np.complex128
        )
        return HessenbergMatrix(out, validate=False)


@dataclass(frozen=True)
class ShiftList:
    """Roots s_1..s_m of a monic shift polynomial, applied in order."""

    roots: tuple

    def __post_init__(self):
        if len(self.roots) == 0:
            raise DomainError("ShiftList must be nonempty")
        for r in self.roots:
            ok = mpmath.isfinite(r) if isinstance(r, (mpmath.mpc, mpmath.mpf)) else (
                math.isfinite(complex(r).real) and math.isfinite(complex(r).imag)
            )
            if not ok:
                raise DomainError(f"non-finite shift {r!r}")

    @classmethod
    def repeated(cls, root, m):
        return cls((root,) * m)

    @property
    def degree(self):
        return len(self.roots)


class StepRotations(NamedTuple):
    """Givens sweep of one degree-1 step plus the last-diagonal phase fix."""

    rotations: list
    phase: complex


@dataclass
class IqrResult:
    next_h: HessenbergMatrix
    r_nn_per_step: list
    steps: Optional[list] = None  # list[StepRotations] when keep_rotations
    r_factors: Optional[list] = None  # per-step triangular factors, ditto


def _zero_below_subdiagonal(a):
    n = a.shape[0]
    for i in range(2, n):
        a[i, : i - 1] = 0


def iqr_single(h, s, keep_rotations=False):
    """One implicit QR step with shift s.

    Backward stable: there is a unitary Q (product of the stored rotations)
    with ||H - s - Q R|| <= 16 n^(3/2) u ||H - s|| and
    ||next_H - Q* H Q|| <= 32 n^(3/2) u ||H - s||.  Costs 7 n^2 operations.
    """
    n = h.n
    if n < 2:
        raise DimensionError("iqr_single needs n >= 2")
    extended = h.is_extended
    a = h.a.copy()
    if extended:
        s = mpmath.mpc(s)
        one = mpmath.mpf(1)
    else:
        s = complex(s)
        one = 1.0

    for i in range(n):
        a[i, i] = a[i, i] - s

    rotations = []
    for i in range(n - 1):
        x0, x1 = a[i, i], a[i + 1, i]
        if x0 == 0 and x1 == 0:
            g = IDENTITY_ROTATION
        else:
            g = make_givens(x0, x1)
            a[i : i + 2, i + 1 :] = g.left_matrix() @ a[i : i + 2, i + 1 :]
        a[i, i] = g.norm
        a[i + 1, i] = 0
        rotations.append(g)

    # Make the last diagonal entry real nonnegative; the phase is absorbed
    # into Q so the factorization keeps the positive-diagonal convention.
    rnn = a[n - 1, n - 1]
    if rnn == 0:
        phase = one
        r_nn = abs(rnn)
    else:
        r_nn = abs(rnn)
        phase = rnn / r_nn
    a[n - 1, n - 1] = r_nn
    r_factor = a.copy() if keep_rotations else None

    for i in range(n - 1):
        g = rotations[i]
        if g.is_identity():
            continue
        m = min(i + 2, n)
        a[:m, i : i + 2] = a[:m, i : i + 2] @ g.left_matrix().conj().T
    a[:, n - 1] = a[:, n - 1] * phase

    for i in range(n):
        a[i, i] = a[i, i] + s
    _zero_below_subdiagonal(a)

    out = HessenbergMatrix(a, validate=False)
    steps = [StepRotations(rotations, phase)] if keep_rotations else None
    r_factors = [r_factor] if keep_rotations else None
    return IqrResult(out, [r_nn], steps, r_factors)


def iqr_multi(h, shifts, keep_rotations=False):
    """Degree-m implicit QR step: degree-1 steps composed in root order."""
    if not isinstance(shifts, ShiftList):
        shifts = ShiftList(tuple(shifts))
    cur = h
    r_nns = []
    steps = [] if keep_rotations else None
    r_factors = [] if keep_rotations else None
    for s in shifts.roots:
        res = iqr_single(cur, s, keep_rotations=keep_rotations)
        cur = res.next_h
        r_nns.extend(res.r_nn_per_step)
        if keep_rotations:
            steps.extend(res.steps)
            r_factors.extend(res.r_factors)
    return IqrResult(cur, r_nns, steps, r_factors)


class CompTauResult(NamedTuple):
    value: float
    trusted: Optional[bool]


def comp_tau(h, shifts, dist_bound=None, kappa_bound=None):
    """tau_p(H)^m from the bottom-right entries of the triangular factors.

    Returns fl((R_1)_nn * ... * (R_m)_nn), which approximates
    ||e_n* p(H)^{-1}||^{-1} with relative error <= 0.001 when the shifts stay
    far enough from the spectrum for the working precision.  When the caller
    supplies a distance lower bound and a kappa_V upper bound, `trusted`
    reports whether that worst-case precision condition is certifiable;
    otherwise it is None and the value is returned as computed.
    """
    if not isinstance(shifts, ShiftList):
        shifts = ShiftList(tuple(shifts))
    res = iqr_multi(h, shifts)
    value = 1.0
    for v in res.r_nn_per_step:
        value = value * v
    if not h.is_extended:
        value = float(value)
    trusted = None
    if dist_bound is not None and kappa_bound is not None:
        trusted = comp_tau_precision_ok(
            h.n, shifts.degree, float(h.frobenius_norm()), kappa_bound, dist_bound
        )
    return CompTauResult(value, trusted)


def comp_tau_precision_ok(n, m, norm_bound, kappa_bound, dist_bound, bits=53):
    """Worst-case certificate u <= u_CompTau, evaluated in log2 space."""
    if dist_bound <= 0 or norm_bound <= 0:
        return False
    shift_radius_factor = 4.0  # (2 + 2C) with the shift radius C||H|| <= ||H||
    log2_u_req = (
        -math.log2(6.0e3 * kappa_bound * 32.0 * n**1.5)
        + 2.0 * m * (math.log2(dist_bound) - math.log2(shift_radius_factor * norm_bound))
    )
    return -(bits - 1) <= log2_u_req


def _scaled_product(values):
    """Product of nonnegative floats as (mantissa in [0.5, 1), exponent)."""
    m_acc, e_acc = 1.0, 0
    for v in values:
        mant, ex = math.frexp(v)
        m_acc *= mant
        e_acc += ex
        if m_acc < 2.0**-500:
            mant, ex = math.frexp(m_acc)
            m_acc, e_acc = mant, e_acc + ex
    mant, ex = math.frexp(m_acc)
    return mant, e_acc + ex


def potential_pow_k(h, k):
    """psi_k(H)^k as an exponent-tracked float pair (mantissa, exponent).

    The product of the bottom k subdiagonal moduli accumulates with relative
    error <= k*u, far inside the 1 - 0.999^(1/k) budget, and the split
    exponent avoids under/overflow for any desk-scale magnitudes.
    """
    n = h.n
    if n <= k:
        raise DimensionError(f"potential of order k={k} needs n > k, got n={n}")
    vals = [float(v) for v in h.bottom_subdiagonal_abs(k)]
    if any(v == 0.0 for v in vals):
        return 0.0, 0
    return _scaled_product(vals)


def potential(h, k):
    """psi_k(H): k-th root of the product of the bottom k subdiagonal moduli.

    Relative error at most 1 - 0.999^(1/k) (the floating k-th root bound)."""
    mant, ex = potential_pow_k(h, k)
    if mant == 0.0:
        return 0.0
    eps = 0.5 * (1.0 - 0.999 ** (1.0 / k))
    q, r = divmod(ex, k)
    root = kth_root(math.ldexp(mant, r), k, eps)
    return math.ldexp(root, q)


def scaled_to_float(mant, ex, scale=1.0):
    """scale * mant * 2**ex as a float; may under/overflow to 0/inf."""
    return math.ldexp(scale * mant, ex)
