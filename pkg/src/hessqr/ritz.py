"""Optimality testing, shift regularization, and the Ritz-or-decouple step.

A set of shifts is theta-optimal when ||e_n* p(H)||^(1/k) <= theta psi_k(H);
`optimal` certifies this one-sidedly from a k-step row iteration.  Forward
approximations of the corner eigenvalues come from a pluggable small solver,
get regularized by uniform disk noise so they keep their distance from the
spectrum, and are then either certified optimal or driven through the
decoupling loop: some regularized value must collapse a bottom subdiagonal in
a single degree-k step, or the probabilistic guarantee failed and the caller
may retry.
"""

import math
from dataclasses import dataclass
from typing import Optional, Protocol

import numpy as np

from .errors import DichotomyMiss, DimensionError, ParameterError, PreconditionError
from .iqr import (
    HessenbergMatrix,
    ShiftList,
    iqr_multi,
    potential_pow_k,
    scaled_to_float,
)
from .kernel import is_mp_array, sample_disk
from .params import GlobalData, regularization_scales


class SmallEigSolver(Protocol):
    """Forward-approximate eigensolver for matrices of dimension <= k.

    With probability at least 1 - phi the outputs match Spec(M) within
    absolute distance beta under some pairing."""

    def solve(self, m, beta: float, phi: float) -> list: ...


@dataclass(frozen=True)
class RegularizationParams:
    """Disk radii for shift regularization: exclusion eta1 <= noise eta2.

    The caller must also ensure eta1 + eta2 <= gap(H)/2 for the distance
    guarantee to hold."""

    eta1: float
    eta2: float
    beta: float

    def __post_init__(self):
        if self.eta1 < 0 or self.eta2 < 0:
            raise ParameterError("regularization radii must be nonnegative")
        if self.eta1 > self.eta2:
            raise ParameterError(
                f"eta1={self.eta1!r} must not exceed eta2={self.eta2!r}"
            )


@dataclass
class RitzOutcome:
    next_h: HessenbergMatrix
    ritz_values: ShiftList
    dec: bool
    culprit: Optional[complex] = None


def regularize(r_list, params, rng):
    """Add independent uniform D(0, eta2) noise to every shift.

    With probability >= 1 - k (eta1/eta2)^2 the perturbed set keeps distance
    eta1 from Spec(H), provided eta1 + eta2 <= gap(H)/2."""
    if not isinstance(r_list, ShiftList):
        r_list = ShiftList(tuple(r_list))
    if params.eta2 == 0.0:
        return r_list
    return ShiftList(
        tuple(r + sample_disk(0.0, params.eta2, rng) for r in r_list.roots)
    )


def _row_norm(v):
    if is_mp_array(v):
        import mpmath

        return mpmath.sqrt(mpmath.fsum(abs(z) ** 2 for z in v))
    return float(np.linalg.norm(v))


def optimal(h, shifts, gd):
    """One-sided theta-optimality certificate.

    True guarantees the shifts are theta-optimal; False guarantees they are
    not (0.998^(1/k) theta)-optimal.  Computes v_(j+1) = fl((H - s_(j+1))* v_j)
    from v_0 = e_n, using that v_j lives on the last j+1 coordinates."""
    if not isinstance(shifts, ShiftList):
        shifts = ShiftList(tuple(shifts))
    k = gd.k
    if shifts.degree != k:
        raise DimensionError(
            f"optimal needs degree k={k} shifts, got {shifts.degree}"
        )
    n = h.n
    if n <= k:
        raise DimensionError(f"optimal needs n > k, got n={n}")
    a = h.a
    if h.is_extended:
        import mpmath

        v = np.array([mpmath.mpc(0)] * n, dtype=object)
        v[n - 1] = mpmath.mpc(1)
    else:
        v = np.zeros(n, dtype=np.complex128)
        v[n - 1] = 1.0
    lo = n - 1
    for s in shifts.roots:
        lo_new = max(lo - 1, 0)
        # (H* v) on the active window, then subtract conj(s) v
        seg = a[lo:, lo_new:].conj().T @ v[lo:]
        if h.is_extended:
            import mpmath

            sc = mpmath.conj(mpmath.mpc(s))
        else:
            sc = np.conj(np.complex128(s))
        out = np.zeros_like(v)
        out[lo_new:] = seg
        out[lo:] = out[lo:] - sc * v[lo:]
        v = out
        lo = lo_new
    norm_v = _row_norm(v[lo:])
    mant, ex = potential_pow_k(h, k)
    threshold = scaled_to_float(mant, ex, 0.999 * gd.theta**k)
    return not (float(norm_v) >= threshold)


def ritz_or_decouple(h, omega, phi, solver, rng, gd):
    """Regularized corner eigenvalues: either theta-optimal or decoupling.

    Needs an omega-unreduced H with ||H|| <= Sigma, gap(H) >= 2 omega^2/Sigma,
    and k/phi >= 2.  On success returns either (dec=False, next_h=H) with
    theta-optimal regularized Ritz values, or (dec=True, next_h) where the
    culprit value collapsed some bottom-k subdiagonal below omega.  The
    probability-phi failure event surfaces as DichotomyMiss."""
    k = gd.k
    n = h.n
    if n <= k:
        raise DimensionError(f"ritz_or_decouple needs n > k, got n={n}")
    if k / phi < 2.0:
        raise PreconditionError(f"need k/phi >= 2, got k={k}, phi={phi!r}")
    if not h.is_unreduced(omega, k):
        raise PreconditionError(
            "input has a bottom-k subdiagonal at or below omega; deflate first"
        )
    beta, eta2, eta1 = regularization_scales(omega, gd.Sigma, k, phi)
    corner = h.corner(k)
    ritz = solver.solve(corner, beta / 2.0, phi / 2.0)
    if len(ritz) != k:
        raise ParameterError(
            f"small solver returned {len(ritz)} values for a {k}x{k} corner"
        )
    checked = regularize(
        ShiftList(tuple(ritz)), RegularizationParams(eta1, eta2, beta), rng
    )
    if optimal(h, checked, gd):
        return RitzOutcome(next_h=h, ritz_values=checked, dec=False)
    for rv in checked.roots:
        res = iqr_multi(h, ShiftList.repeated(rv, k))
        if not res.next_h.is_unreduced(omega, k):
            return RitzOutcome(
                next_h=res.next_h, ritz_values=checked, dec=True, culprit=rv
            )
    raise DichotomyMiss(
        "no regularized Ritz value was optimal or decoupling "
        f"(probability <= {phi:g} event, or preconditions violated)"
    )
