"""Potential-reduction step: promising-value search and exceptional shifts.

`find` binary-searches a theta-optimal Ritz set for an alpha-promising value
using tau products of half-set polynomials.  If the degree-k step with that
value stagnates, `exc` lays a randomly translated triangular-lattice net over
a disk around it; with high probability some net point either decouples the
matrix or contracts the potential.  `sh_step` wires the two together and
reports which branch fired.
"""

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np

from .errors import (
    DimensionError,
    DomainError,
    PreconditionError,
    StagnationFailure,
)
from .iqr import (
    HessenbergMatrix,
    ShiftList,
    comp_tau,
    iqr_multi,
    potential,
    potential_pow_k,
    scaled_to_float,
)
from .kernel import kth_root, sample_disk
from .params import GlobalData, exc_epsilon


class Branch(Enum):
    RITZ_SHIFT = "ritz_shift"
    EXCEPTIONAL = "exceptional"


@dataclass(frozen=True)
class ExcParams:
    """Exceptional-shift geometry: disk radius, net resolution, candidates."""

    r_hat: float
    epsilon: float
    xi: float
    net_points: tuple


@dataclass
class ShStepOutcome:
    next_h: HessenbergMatrix
    branch: Branch
    shift_used: ShiftList
    psi_before: float
    psi_after: float


def find(h, ritz, gd):
    """An alpha-promising member of a theta-optimal Ritz set.

    log2(k) halving rounds; round j keeps the half R_b whose polynomial
    p_(j,b)^(2^(j-1)) (degree k/2) has the smaller tau product.  Ties keep
    the index-0 half."""
    if not isinstance(ritz, ShiftList):
        ritz = ShiftList(tuple(ritz))
    k = ritz.degree
    if k != gd.k:
        raise DimensionError(f"find needs degree k={gd.k}, got {k}")
    if k < 2 or k & (k - 1):
        raise DomainError(f"find needs k a power of two, got {k}")
    if min(h.bottom_subdiagonal_abs(k)) == 0:
        raise PreconditionError("find needs psi_k(H) > 0")
    current = list(ritz.roots)
    rounds = k.bit_length() - 1
    for j in range(1, rounds + 1):
        half = len(current) // 2
        rep = 2 ** (j - 1)
        taus = []
        for cand in (current[:half], current[half:]):
            roots = tuple(r for r in cand for _ in range(rep))
            taus.append(comp_tau(h, ShiftList(roots)).value)
        current = current[:half] if taus[0] <= taus[1] else current[half:]
    return current[0]


@lru_cache(maxsize=32)
def build_net(epsilon):
    """Maximal 0.99 eps-net of D(0, 1 + eps).

    Equilateral triangular lattice with spacing sqrt(3) * 0.99 eps clipped to
    D(0, 1 + 1.99 * 0.99 eps), enumerated row-major by lattice coordinates.
    The point count is bounded by the packing function S(eps)."""
    if not (0.0 < epsilon <= 2.0):
        raise DomainError(f"net resolution must be in (0, 2], got {epsilon!r}")
    c = 0.99 * epsilon
    d = math.sqrt(3.0) * c
    radius = 1.0 + 1.99 * c
    points = []
    j_max = int(math.floor(radius / (d * math.sqrt(3.0) / 2.0))) + 1
    for j in range(-j_max, j_max + 1):
        y = j * d * math.sqrt(3.0) / 2.0
        if abs(y) > radius:
            continue
        half_width = math.sqrt(max(radius**2 - y**2, 0.0))
        x_off = j * d / 2.0
        i_lo = int(math.ceil((-half_width - x_off) / d))
        i_hi = int(math.floor((half_width - x_off) / d))
        for i in range(i_lo, i_hi + 1):
            points.append(complex(i * d + x_off, y))
    return tuple(points)


def net_size_bound(epsilon):
    """S(eps): hexagonal-density area bound plus a perimeter correction."""
    t = 1.99 + 1.0 / (0.99 * epsilon)
    return (
        (2.0 * math.pi / (3.0 * math.sqrt(3.0))) * t**2
        + (4.0 * math.sqrt(2.0) / math.sqrt(3.0)) * t
        + 1.0
    )


def exc_params(gd, xi, psi_hat):
    """Candidate-disk radius and net resolution from the global data."""
    k = gd.k
    eps_root = 1e-12
    r_hat = (
        kth_root(2.0, k, eps_root)
        * gd.alpha
        * kth_root(gd.B, k, eps_root)
        * gd.theta
        * psi_hat
    )
    epsilon = exc_epsilon(k, gd.alpha, gd.theta, gd.gamma, xi, gd.B)
    return r_hat, epsilon


def exc(h, r, omega, xi, phi, rng, gd):
    """Exceptional-shift candidates around a stagnating promising value.

    Scales and translates the cached net to D(r, R_hat) with a uniform random
    offset of radius eps * R_hat; points pushed outside the disk are projected
    radially back onto its boundary.  With probability >= 1 - phi some
    candidate decouples or contracts the potential."""
    k = gd.k
    if not h.is_unreduced(omega, k):
        raise PreconditionError("exc needs an omega-unreduced matrix")
    psi_hat = potential(h, k)
    r_hat, epsilon = exc_params(gd, xi, psi_hat)
    net = build_net(epsilon)
    w = sample_disk(0.0, epsilon * r_hat, rng)
    r = complex(r)
    out = []
    for p in net:
        s = r + w + r_hat * p
        d = abs(s - r)
        if d > r_hat:
            s = r + (s - r) * (r_hat / d)
        out.append(s)
    return ShiftList(tuple(out))


def sh_step(h, ritz, omega, phi, rng, gd):
    """One potential-reduction step of the degree-k shifting strategy.

    Either the promising Ritz value already contracts the tau product (ritz
    branch) or the exceptional-shift scan returns the first candidate, in net
    order, that decouples or lands below 1.002 (1 - gamma) psi_k(H).  The
    probability-phi failure surfaces as StagnationFailure."""
    k = gd.k
    if not h.is_unreduced(omega, k):
        raise PreconditionError("sh_step needs an omega-unreduced matrix")
    psi_before = potential(h, k)
    r = find(h, ritz, gd)

    tau_k = comp_tau(h, ShiftList.repeated(r, k)).value
    mant, ex = potential_pow_k(h, k)
    threshold = scaled_to_float(mant, ex, (1.0 - gd.gamma) ** k)
    if tau_k < threshold:
        res = iqr_multi(h, ShiftList.repeated(r, k))
        return ShStepOutcome(
            next_h=res.next_h,
            branch=Branch.RITZ_SHIFT,
            shift_used=ShiftList.repeated(r, k),
            psi_before=psi_before,
            psi_after=potential(res.next_h, k),
        )

    xi = 0.999 * (1.0 - gd.gamma)
    candidates = exc(h, r, omega, xi, phi, rng, gd)
    target = 1.002 * (1.0 - gd.gamma) * psi_before
    for s in candidates.roots:
        res = iqr_multi(h, ShiftList.repeated(s, k))
        psi_after = potential(res.next_h, k)
        if psi_after < target or not res.next_h.is_unreduced(omega, k):
            return ShStepOutcome(
                next_h=res.next_h,
                branch=Branch.EXCEPTIONAL,
                shift_used=ShiftList.repeated(s, k),
                psi_before=psi_before,
                psi_after=psi_after,
            )
    raise StagnationFailure(
        f"none of {candidates.degree} exceptional candidates reduced the "
        f"potential (probability <= {phi:g} event, or preconditions violated)"
    )
