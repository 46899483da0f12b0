"""Defining parameters, derived constants, and the precision budget.

The solver family is indexed by the condition bound B, the gap bound Gamma,
and the norm bound Sigma.  From B alone come the shift degree k (smallest
power of two taming the B-dependent blowup), the promising parameter alpha,
the optimality parameter theta, and the decoupling rate gamma = 0.2.  From
(n, delta, phi) come the working accuracy omega, the per-call failure budget,
and the iteration budget N_dec of each decoupling loop.  All precision
requirements are evaluated in log2 space so extreme parameters cannot
under- or overflow.
"""

import math
from dataclasses import dataclass, replace
from typing import Optional

from .errors import DomainError, ParameterError

GAMMA = 0.2
REDUCTION_FACTOR = 1.002 * (1.0 - GAMMA)  # per-iteration potential factor
_LOG2_3 = math.log2(3.0)


def derive_degree(B):
    """Smallest power of two k >= 2 with B^((8 lg k + 3)/(k-1)) (2B^4)^(2/(k-1)) <= 3."""
    if B < 1:
        raise DomainError(f"condition bound must satisfy B >= 1, got {B!r}")
    lB = math.log2(B)
    k = 2
    while True:
        lhs = ((8.0 * math.log2(k) + 3.0) * lB + 2.0 * (1.0 + 4.0 * lB)) / (k - 1)
        if lhs <= _LOG2_3:
            return k
        k *= 2
        if k > 2**62:
            raise ParameterError(f"no admissible shift degree for B={B!r}")


def derive_constants(B, k):
    """alpha and theta for a given (B, k) pair."""
    alpha = (1.01 * B) ** (4.0 * math.log2(k) / k)
    theta = (1.01 / 0.998 ** (1.0 / k)) * (2.0 * B**4) ** (1.0 / (2.0 * k))
    return alpha, theta


@dataclass(frozen=True)
class GlobalData:
    """Defining parameters (B, Gamma, Sigma) plus derived constants."""

    B: float
    Gamma: float
    Sigma: float
    n0: int
    k: int
    alpha: float
    theta: float
    gamma: float = GAMMA

    def __post_init__(self):
        if self.B < 1:
            raise DomainError(f"B must be >= 1, got {self.B!r}")
        if self.Gamma <= 0 or self.Sigma <= 0:
            raise ParameterError("Gamma and Sigma must be positive")
        if self.k < 2 or self.k & (self.k - 1):
            raise ParameterError(f"shift degree must be a power of two >= 2, got {self.k}")


def derive_globals(B, Gamma, Sigma, n0):
    """GlobalData with the degree k set honestly from B."""
    k = derive_degree(B)
    alpha, theta = derive_constants(B, k)
    return GlobalData(B=float(B), Gamma=float(Gamma), Sigma=float(Sigma),
                      n0=int(n0), k=k, alpha=alpha, theta=theta)


def globals_with_degree(B, k, Gamma, Sigma, n0):
    """GlobalData with an explicitly chosen degree (tests, overrides).

    alpha and theta still follow the (B, k) formulas; the degree equation is
    not enforced, so the worst-case convergence guarantee may not apply.
    """
    alpha, theta = derive_constants(B, k)
    return GlobalData(B=float(B), Gamma=float(Gamma), Sigma=float(Sigma),
                      n0=int(n0), k=int(k), alpha=alpha, theta=theta)


@dataclass(frozen=True)
class RunParams:
    """Per-run accuracy/failure/iteration budget."""

    delta: float
    phi: float
    omega: float
    phi_working: float
    n_dec: float          # real-valued bound from the budget equation
    n_dec_budget: int     # usable iterations: floor(n_dec)
    seed: Optional[int] = None

    def with_seed(self, seed):
        return replace(self, seed=seed)


def derive_run_params(n, delta, phi, gd, seed=None):
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    if not (0 < delta <= gd.Sigma):
        raise DomainError(f"need 0 < delta <= Sigma, got delta={delta!r}")
    if not (0.0 < phi < 1.0):
        raise DomainError(f"failure tolerance must be in (0,1), got {phi!r}")
    omega = min(delta, gd.Gamma / (8.0 * n**2 * gd.B**2)) / (4.0 * n)
    n_dec = math.log(gd.Sigma / omega) / math.log(1.0 / REDUCTION_FACTOR)
    if n_dec <= 0:
        raise ParameterError(f"degenerate iteration budget N_dec={n_dec!r}")
    phi_working = (phi / (3.0 * n**2)) / n_dec
    return RunParams(delta=float(delta), phi=float(phi), omega=omega,
                     phi_working=phi_working, n_dec=n_dec,
                     n_dec_budget=max(1, math.floor(n_dec)), seed=seed)


def regularization_scales(omega, Sigma, k, phi):
    """(beta, eta2, eta1) used when turning corner eigenvalues into shifts."""
    beta = omega**2 / (16.0 * 101.0 * Sigma)
    eta2 = beta / 2.0
    eta1 = eta2 / math.sqrt(2.0 * k / phi)
    return beta, eta2, eta1


def exc_epsilon(k, alpha, theta, gamma, xi, B):
    """Net resolution for the exceptional-shift disk."""
    base = xi * (1.0 - gamma) / ((13.0 * B**4) ** (1.0 / k) * alpha**2 * theta**2)
    return base ** (k / (k - 1.0))


# ---------------------------------------------------------------------------
# precision budget (everything in log2(u); bits = ceil(-log2 u))


def _nu_iqr_log2(n):
    return math.log2(32.0) + 1.5 * math.log2(n)


def _log2_u_psi(k):
    t = 1.0 - 0.999 ** (1.0 / k)
    return math.log2(t) - math.log2(k * (4.0 + t))


def _log2_u_optimal(n, k, C, Sigma, theta, psi_lower):
    return (
        -math.log2(2.0e3 * n**2)
        + k * (math.log2(psi_lower) - math.log2(theta * (2.0 + 2.0 * C) * Sigma))
    )


def _log2_u_iqr(n, k, Sigma, B, dist):
    return (
        -(math.log2(8.0 * B) + _nu_iqr_log2(n))
        + k * (math.log2(dist) - math.log2(Sigma))
    )


def _log2_u_comptau(n, m, C, Sigma, B, dist):
    return (
        -(math.log2(6.0e3 * B) + _nu_iqr_log2(n))
        + 2.0 * m * (math.log2(dist) - math.log2((2.0 + 2.0 * C) * Sigma))
    )


def _log2_u_potential_apx(n, k, C, Sigma, B, dist, omega):
    return (
        math.log2(0.001 * omega)
        + k * math.log2(dist)
        - (math.log2(32.0 * B) + 0.5 * math.log2(n) + _nu_iqr_log2(n))
        - (k + 1.0) * math.log2(Sigma)
        - k * math.log2(2.0 + 2.0 * C)
    )


def required_precision(n, k, Sigma, B, Gamma, delta, phi):
    """Mantissa bits demanded by the worst-case analysis, ceil(log2(1/u)).

    Unpacks the explicit minimum over the driver term, the dichotomy
    subroutine, and the shifting strategy, with the potential lower-bounded by
    the working accuracy.  The driver warns (does not abort) when configured
    below this.
    """
    alpha, theta = derive_constants(B, k)
    omega = min(delta, Gamma / (8.0 * n**2 * B**2)) / (4.0 * n)
    n_dec = math.log(Sigma / omega) / math.log(1.0 / REDUCTION_FACTOR)
    phi_working = (phi / (3.0 * n**2)) / n_dec
    _, _, eta1 = regularization_scales(omega, Sigma, k, phi_working)

    # driver term
    logs = [
        math.log2(omega)
        - math.log2(4.5 * k * max(n_dec, 1.0) * n * Sigma)
        - _nu_iqr_log2(n)
    ]
    # dichotomy subroutine
    logs.append(_log2_u_optimal(n, k, 1.1, Sigma, theta, omega))
    logs.append(
        math.log2(omega) - math.log2(8.0 * math.sqrt(n) * Sigma)
        + _log2_u_iqr(n, k, Sigma, B, eta1)
    )
    # shifting strategy (C = 3; regularized-shift distance eta1)
    C = 3.0
    logs.append(_log2_u_comptau(n, max(k // 2, 1), C, Sigma, B, eta1))
    xi = 0.999 * (1.0 - GAMMA)
    eps = exc_epsilon(k, alpha, theta, GAMMA, xi, B)
    logs.append(_log2_u_psi(k))
    logs.append(
        math.log2(0.1 * eps * 1.998 * theta * alpha * B * omega)
        - math.log2(4.0 * (eps + 2.0 * (1.0 + eps) * C * Sigma))
    )
    dist_exc = eps * 1.998 * theta * alpha * B ** (1.0 / k) * omega * math.sqrt(
        phi_working
    ) / math.sqrt(3.0 * n)
    logs.append(_log2_u_potential_apx(n, k, C, Sigma, B, dist_exc, omega))
    logs.append(_log2_u_potential_apx(n, k, C, Sigma, B, eta1, omega))

    return math.ceil(-min(logs))
