"""Recursive driver: decoupling loops, deflation, preprocessing, precision.

Each Hessenberg block larger than the shift degree k runs a while loop that
alternates the Ritz-or-decouple step with the potential-reduction step until a
bottom-k subdiagonal falls below the working accuracy omega; the block is then
deflated at every sub-threshold entry and the pieces recurse.  Blocks of
dimension at most k go straight to the small eigenvalue solver.  Probabilistic
failure events are retried a fixed number of times with fresh randomness
before the run aborts.  Every block owns a deterministic random substream
derived from the master seed and its position in the deflation tree, so
results are byte-reproducible for any thread count.
"""

import math
import time
import warnings
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import (
    BudgetExceeded,
    DimensionError,
    ParameterError,
    RetryableFailure,
    SolveFailure,
    StructureError,
)
from .iqr import HessenbergMatrix, potential
from .params import (
    GlobalData,
    RunParams,
    derive_globals,
    derive_run_params,
    required_precision,
)
from .ritz import ritz_or_decouple
from .shifting import Branch, sh_step
from .smalleig import DEFAULT_SOLVER

MAX_RETRIES = 3


def deflate(h, omega, k=None):
    """Zero the bottom-k subdiagonal entries at or below omega and split.

    The zeroing span matches the while-loop guard (bottom k entries; all n-1
    when k is omitted).  Splits also happen at subdiagonal entries that are
    already exact zeros anywhere.  Blocks come back in top-to-bottom order; a
    matrix with nothing at or below omega returns as a single block."""
    a = h.a.copy()
    n = h.n
    cuts = []
    for i in range(n - 1):
        if a[i + 1, i] == 0:
            cuts.append(i + 1)
    k_span = n - 1 if k is None else min(k, n - 1)
    for i in range(n - 1 - k_span, n - 1):
        if abs(a[i + 1, i]) <= omega and (i + 1) not in cuts:
            a[i + 1, i] = 0
            cuts.append(i + 1)
    cuts = sorted(set(cuts))
    blocks = []
    start = 0
    for c in cuts + [n]:
        if c > start:
            blocks.append(HessenbergMatrix(a[start:c, start:c], validate=False))
            start = c
    return blocks


@dataclass
class IterationRecord:
    index: int
    psi_before: float
    psi_after: float
    branch: str  # "decouple" | "ritz_shift" | "exceptional"
    shift: Optional[complex]
    retries: int


@dataclass
class DeflationNode:
    path: tuple
    start: int
    dim: int
    trace: list = field(default_factory=list)
    eigenvalues: Optional[list] = None  # set on leaves

    @property
    def block_id(self):
        return ".".join(str(p) for p in ("0",) + self.path)


@dataclass
class DeflationTree:
    nodes: dict = field(default_factory=dict)

    def add(self, node):
        self.nodes[node.path] = node

    def ordered(self):
        return [self.nodes[p] for p in sorted(self.nodes)]

    def leaves(self):
        return [n for n in self.ordered() if n.eigenvalues is not None]

    def total_sh_steps(self):
        return sum(
            1
            for n in self.nodes.values()
            for rec in n.trace
            if rec.branch in (Branch.RITZ_SHIFT.value, Branch.EXCEPTIONAL.value)
        )


def _node_rng(seed, path):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=path))


def _retry(fn, label):
    last = None
    for attempt in range(MAX_RETRIES + 1):
        try:
            return fn(), attempt
        except RetryableFailure as exc:
            last = exc
    raise SolveFailure(
        f"{label} failed {MAX_RETRIES + 1} times; last error: {last}"
    ) from last


def _process_block(node, h, gd, params, solver, seed, is_root):
    """Run one block to deflation (or solve it directly); returns children."""
    k = gd.k
    n0 = gd.n0
    if h.n <= k:
        if is_root:
            acc, tol = params.delta, params.phi
        else:
            acc, tol = params.delta / n0, params.phi / (3.0 * n0)
        vals = solver.solve(h.a, acc, tol)
        node.eigenvalues = [complex(v) for v in vals]
        return []

    rng = _node_rng(seed, node.path)
    omega, phi_w = params.omega, params.phi_working
    iteration = 0
    while h.is_unreduced(omega, k):
        iteration += 1
        if iteration > params.n_dec_budget:
            raise BudgetExceeded(
                f"block {node.block_id} exceeded N_dec={params.n_dec_budget} "
                "iterations",
                trace=node.trace,
            )
        psi_before = potential(h, k)
        outcome, retries_rod = _retry(
            lambda: ritz_or_decouple(h, omega, phi_w, solver, rng, gd),
            f"ritz_or_decouple (block {node.block_id})",
        )
        if outcome.dec:
            h = outcome.next_h
            node.trace.append(
                IterationRecord(
                    index=iteration,
                    psi_before=psi_before,
                    psi_after=potential(h, k),
                    branch="decouple",
                    shift=complex(outcome.culprit),
                    retries=retries_rod,
                )
            )
            break
        step, retries_sh = _retry(
            lambda: sh_step(h, outcome.ritz_values, omega, phi_w, rng, gd),
            f"sh_step (block {node.block_id})",
        )
        h = step.next_h
        node.trace.append(
            IterationRecord(
                index=iteration,
                psi_before=step.psi_before,
                psi_after=step.psi_after,
                branch=step.branch.value,
                shift=complex(step.shift_used.roots[0]),
                retries=retries_rod + retries_sh,
            )
        )

    blocks = deflate(h, omega, k)
    children = []
    offset = node.start
    for i, blk in enumerate(blocks):
        children.append((DeflationNode(path=node.path + (i,), start=offset, dim=blk.n), blk))
        offset += blk.n
    return children


@dataclass
class SolveResult:
    eigenvalues: np.ndarray
    tree: DeflationTree
    globals_used: GlobalData
    run_params: RunParams
    required_bits: int
    seed: int
    wall_time: float


def shifted_qr(h, delta, phi, gd, solver=None, seed=0, threads=1):
    """Eigenvalues of some H' with ||H' - H|| <= delta, w.p. >= 1 - phi.

    Needs Sigma >= 2||H||, B >= 2 kappa_V(H), Gamma <= gap(H)/2, delta <=
    Sigma (caller contracts; only cheap checks run here).  Returns the full
    SolveResult; .eigenvalues is the multiset Lambda."""
    if not isinstance(h, HessenbergMatrix):
        h = HessenbergMatrix(h)
    solver = solver or DEFAULT_SOLVER
    params = derive_run_params(h.n, delta, phi, gd, seed=seed)
    t0 = time.perf_counter()
    tree = DeflationTree()
    root = DeflationNode(path=(), start=0, dim=h.n)

    pending = [(root, h, True)]
    if threads <= 1:
        while pending:
            node, blk, is_root = pending.pop(0)
            tree.add(node)
            children = _process_block(node, blk, gd, params, solver, seed, is_root)
            pending = [(c, b, False) for c, b in children] + pending
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {}
            for node, blk, is_root in pending:
                tree.add(node)
                futures[pool.submit(
                    _process_block, node, blk, gd, params, solver, seed, is_root
                )] = node
            while futures:
                done, _ = wait(futures, return_when=FIRST_COMPLETED)
                for fut in done:
                    futures.pop(fut)
                    for child, blk in fut.result():
                        tree.add(child)
                        futures[pool.submit(
                            _process_block, child, blk, gd, params, solver, seed, False
                        )] = child

    eigs = []
    for leaf in sorted(tree.leaves(), key=lambda nd: nd.start):
        eigs.extend(leaf.eigenvalues)
    eigs = np.array(eigs, dtype=np.complex128)
    if len(eigs) != h.n:
        raise SolveFailure(f"eigenvalue count {len(eigs)} != dimension {h.n}")

    bits = required_precision(h.n, gd.k, gd.Sigma, gd.B, gd.Gamma, delta, phi)
    return SolveResult(
        eigenvalues=eigs,
        tree=tree,
        globals_used=gd,
        run_params=params,
        required_bits=bits,
        seed=seed,
        wall_time=time.perf_counter() - t0,
    )


def preprocess(a, delta, rng, B=None, Gamma=None, Sigma=None):
    """Arbitrary square matrix -> (Hessenberg form, GlobalData).

    Adds an iid complex Gaussian perturbation scaled to spectral norm
    delta*||A||/2 (norm measured, then scaled), reduces by Householder
    reflectors, and sets Sigma = 2 * Frobenius bound.  B and Gamma default to
    the perturbation-scale heuristic B = n/delta_pre, Gamma = (delta_pre/n)^2,
    both overridable."""
    a = np.asarray(a, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise StructureError("input matrix has non-finite entries")
    n = a.shape[0]
    if delta < 0:
        raise ParameterError(f"perturbation accuracy must be >= 0, got {delta!r}")

    norm_a = float(np.linalg.norm(a, 2)) if n > 1 else float(abs(a[0, 0]))
    delta_pre = delta * norm_a / 2.0
    if delta_pre > 0:
        g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        g_norm = float(np.linalg.norm(g, 2))
        a = a + g * (delta_pre / g_norm)

    already_hessenberg = not np.tril(a, -2).any()
    if n > 2 and not already_hessenberg:
        # gehrd directly: Householder reduction without LAPACK's balancing
        # pass (balancing would rescale the matrix under the caller)
        ht, _tau, info = scipy.linalg.lapack.zgehrd(a)
        if info != 0:
            raise StructureError(f"Hessenberg reduction failed (info={info})")
        hess = ht
    else:
        hess = a.copy()
    hess = np.triu(hess, -1)
    h = HessenbergMatrix(hess, validate=False)

    sigma = Sigma if Sigma is not None else 2.0 * float(np.linalg.norm(hess))
    if B is None or Gamma is None:
        if delta_pre <= 0:
            raise ParameterError(
                "auto B/Gamma need a positive perturbation scale; pass "
                "explicit bounds when delta = 0"
            )
        B = B if B is not None else max(1.0, n / delta_pre)
        Gamma = Gamma if Gamma is not None else (delta_pre / n) ** 2
    gd = derive_globals(B, Gamma, sigma, n)
    return h, gd


@dataclass
class SolveConfig:
    """Library entry-point configuration (everything overridable)."""

    delta: float = 1e-6
    phi: float = 0.01
    seed: Optional[int] = None
    bits: int = 53
    B: Optional[float] = None
    Gamma: Optional[float] = None
    Sigma: Optional[float] = None
    preprocess: bool = True
    threads: int = 1
    solver: object = None


def solve(a, config=None):
    """Eigenvalues of a square complex matrix with backward error delta*||A||.

    With preprocessing on, the input is Gaussian-perturbed by delta*||A||/2
    and Hessenberg-reduced, then the recursive driver runs with absolute
    accuracy delta*||A||/2; without it, the input must already be upper
    Hessenberg.  Warns when the configured precision is below the worst-case
    requirement (the run continues)."""
    config = config or SolveConfig()
    seed = config.seed
    if seed is None:
        seed = int(np.random.SeedSequence().entropy % (2**63))
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xFEED,)))

    if config.preprocess:
        h, gd = preprocess(
            a, config.delta, rng, B=config.B, Gamma=config.Gamma, Sigma=config.Sigma
        )
        a_arr = np.asarray(a, dtype=np.complex128)
        norm_a = (
            float(np.linalg.norm(a_arr, 2)) if a_arr.shape[0] > 1 else float(abs(a_arr[0, 0]))
        )
        delta_abs = max(config.delta * norm_a / 2.0, np.finfo(float).tiny)
    else:
        h = a if isinstance(a, HessenbergMatrix) else HessenbergMatrix(a)
        sigma = config.Sigma if config.Sigma is not None else 2.0 * float(h.frobenius_norm())
        norm_ref = float(h.frobenius_norm())
        delta_abs = max(config.delta * max(norm_ref, 1e-300), np.finfo(float).tiny)
        if config.B is None or config.Gamma is None:
            scale = delta_abs / 2.0
            B = config.B if config.B is not None else max(1.0, h.n / scale)
            Gamma = config.Gamma if config.Gamma is not None else (scale / h.n) ** 2
        else:
            B, Gamma = config.B, config.Gamma
        gd = derive_globals(B, Gamma, sigma, h.n)

    if config.bits > 53:
        if config.threads > 1:
            raise ParameterError("extended-precision runs are single-threaded")
        h = h.to_extended()

    bits_needed = required_precision(
        h.n, gd.k, gd.Sigma, gd.B, gd.Gamma, delta_abs, config.phi
    )
    if config.bits < bits_needed:
        warnings.warn(
            f"configured precision ({config.bits} bits) is below the "
            f"worst-case requirement ({bits_needed} bits); results are not "
            "covered by the convergence guarantee",
            stacklevel=2,
        )

    result = shifted_qr(
        h,
        delta_abs,
        config.phi,
        gd,
        solver=config.solver,
        seed=seed,
        threads=config.threads,
    )
    return result
