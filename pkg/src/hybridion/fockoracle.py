"""Brute-force number-basis oracle for the eight-pulse gate.

State vectors live in (4 qubit branches) x (N oscillator levels), branch-major.
Every propagator is a dense exponential of a Hermitian generator, built from
its eigendecomposition; no coherent-state algebra is used, so this engine is
an independent check on :mod:`hybridion.phasespace`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .core import BRANCHES, TrapParams
from .gateplan import PulseSchedule, entangling_phase
from .phasespace import (
    Coherent,
    FockDelegate,
    Thermal,
    phase_decomposition,
    wrap_near,
)

N_DEFAULT = 128
N_LADDER = (128, 256, 512)
EDGE_LEVELS = 8
LEAKAGE_TOL = 1e-8
MAX_SUBKICK = 0.25  # largest displacement per monitored sub-kick, in x0 units


class LeakageError(RuntimeError):
    """Truncated basis too small for the requested evolution."""

    def __init__(self, msg: str, leakage: float, N: int):
        super().__init__(msg)
        self.leakage = leakage
        self.N = N


@dataclass(frozen=True)
class Operators:
    a: np.ndarray
    adag: np.ndarray
    x_op: np.ndarray
    number: np.ndarray


def build_operators(N: int, trap: TrapParams) -> Operators:
    if N < 8:
        raise ValueError(f"truncation N must be >= 8, got {N}")
    sq = np.sqrt(np.arange(1, N, dtype=float))
    a = np.diag(sq, k=1).astype(complex)
    adag = a.conj().T.copy()
    x = trap.x0 * (a + adag)
    return Operators(a, adag, x, np.diag(np.arange(N, dtype=float)).astype(complex))


class HermitianPropagator:
    """exp(-i theta G) for a fixed Hermitian generator and any theta."""

    def __init__(self, generator: np.ndarray, tol: float = 1e-12):
        G = np.asarray(generator, dtype=complex)
        scale = max(1.0, float(np.max(np.abs(G))))
        if np.max(np.abs(G - G.conj().T)) > tol * scale:
            raise ValueError("generator is not Hermitian")
        self.eigvals, self.eigvecs = np.linalg.eigh(G)

    def apply(self, vec: np.ndarray, theta: float) -> np.ndarray:
        V = self.eigvecs
        return V @ (np.exp(-1j * theta * self.eigvals) * (V.conj().T @ vec))

    def matrix(self, theta: float) -> np.ndarray:
        V = self.eigvecs
        return (V * np.exp(-1j * theta * self.eigvals)) @ V.conj().T


@dataclass
class FockState:
    dim_osc: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (4 * self.dim_osc,):
            raise ValueError("amplitudes must have length 4*N")

    def block(self, i: int) -> np.ndarray:
        N = self.dim_osc
        return self.amplitudes[i * N:(i + 1) * N]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def edge_population(self, levels: int = EDGE_LEVELS) -> float:
        N = self.dim_osc
        blocks = self.amplitudes.reshape(4, N)
        return float(np.sum(np.abs(blocks[:, N - levels:]) ** 2))

    @classmethod
    def product(cls, motional: np.ndarray, weights=(0.5, 0.5, 0.5, 0.5)) -> "FockState":
        motional = np.asarray(motional, dtype=complex)
        return cls(len(motional), np.concatenate([w * motional for w in weights]))


def evolve(state: FockState, generator: np.ndarray, angle: float) -> FockState:
    """Apply exp(-i angle G).

    An N x N generator acts identically on every branch block; a 4N x 4N one
    acts on the full vector.
    """
    G = np.asarray(generator)
    N = state.dim_osc
    prop = HermitianPropagator(G)
    if G.shape == (N, N):
        blocks = state.amplitudes.reshape(4, N)
        new = np.concatenate([prop.apply(b, angle) for b in blocks])
    elif G.shape == (4 * N, 4 * N):
        new = prop.apply(state.amplitudes, angle)
    else:
        raise ValueError(f"generator shape {G.shape} does not match N={N}")
    return FockState(N, new)


def displaced_vacuum(ops: Operators, amp: complex) -> np.ndarray:
    """exp(amp a^dagger - conj(amp) a)|0>, as a dense exponential."""
    N = ops.a.shape[0]
    vac = np.zeros(N, dtype=complex)
    vac[0] = 1.0
    if amp == 0:
        return vac
    G = 1j * (amp * ops.adag - np.conj(amp) * ops.a)
    return HermitianPropagator(G).apply(vac, 1.0)


def initial_motional(ops: Operators, motional) -> np.ndarray:
    N = ops.a.shape[0]
    if isinstance(motional, FockDelegate):
        if motional.n >= N - EDGE_LEVELS:
            raise LeakageError(f"Fock level {motional.n} too close to truncation N={N}", 1.0, N)
        v = np.zeros(N, dtype=complex)
        v[motional.n] = 1.0
        return v
    if isinstance(motional, Thermal):
        raise ValueError("the Fock engine takes coherent or Fock inputs, not thermal")
    amp0 = motional.amp0 if isinstance(motional, Coherent) else motional
    return displaced_vacuum(ops, complex(amp0))


@dataclass
class FockRun:
    state: FockState
    fidelity: float
    entangling_alpha: float
    leakage: float
    norm_drift: float
    N: int
    branch_overlaps: list[complex] = field(default_factory=list)


def _evolve_sequence(psi0: np.ndarray, sched: PulseSchedule, trap: TrapParams,
                     xprop: HermitianPropagator, nprop: HermitianPropagator):
    """Evolve each branch block; returns the final state and worst edge population."""
    N = len(psi0)
    w = trap.omega_nu
    blocks = []
    worst = 0.0
    for b in BRANCHES:
        kA, kB, kC = sched.kicks(b.s, b.q)
        v = 0.5 * psi0
        v = nprop.apply(v, w * 2.0 * (sched.tau_q1 + sched.tau_q2))
        for k, t in ((kA, sched.t1), (kB, sched.t2), (kC, None)):
            # sub-kicks: a large kick can alias through the truncated x spectrum
            # without ever populating the edge, so watch the state move
            steps = max(1, math.ceil(abs(k) * trap.x0 / MAX_SUBKICK))
            for _ in range(steps):
                v = xprop.apply(v, k / steps)
                worst = max(worst, float(np.sum(np.abs(v[N - EDGE_LEVELS:]) ** 2)))
            if t is not None:
                v = nprop.apply(v, w * t)
        blocks.append(v)
    return FockState(N, np.concatenate(blocks)), worst


@lru_cache(maxsize=8)
def _propagators(N: int, x0: float):
    sq = np.sqrt(np.arange(1, N, dtype=float))
    x = x0 * (np.diag(sq, 1) + np.diag(sq, -1)).astype(complex)
    return HermitianPropagator(x), HermitianPropagator(np.diag(np.arange(N, dtype=float)).astype(complex))


def run_sequence_fock(
    sched: PulseSchedule,
    trap: TrapParams,
    motional=Coherent(0.0),
    N: int = N_DEFAULT,
    target_alpha: float = math.pi / 4,
    leakage_tol: float = LEAKAGE_TOL,
    check_leakage: bool = True,
) -> FockRun:
    """Full 4N-dimensional evolution at fixed truncation N."""
    if trap.omega_nu <= 0:
        raise ValueError("the Fock engine needs omega_nu > 0")
    ops = build_operators(N, trap)
    xprop, nprop = _propagators(N, trap.x0)
    psi0 = initial_motional(ops, motional)
    final, leak = _evolve_sequence(psi0, sched, trap, xprop, nprop)
    if check_leakage and leak >= leakage_tol:
        raise LeakageError(
            f"edge population {leak:.3g} >= {leakage_tol:g} at N={N}; increase N", leak, N
        )
    ideal = nprop.apply(psi0, trap.omega_nu * sched.duration)
    overlaps = [np.vdot(ideal, final.block(i)) / 0.5 for i in range(4)]
    ov = sum(0.25 * np.exp(1j * target_alpha * b.s * b.q) * o for b, o in zip(BRANCHES, overlaps))
    F = float(min(1.0, abs(ov) ** 2))

    # alpha from an amp0 = 0 run, per the branch-phase decomposition
    if isinstance(motional, Coherent) and motional.amp0 == 0:
        vac_overlaps = overlaps
    else:
        vac = initial_motional(ops, Coherent(0.0))
        vfinal, _ = _evolve_sequence(vac, sched, trap, xprop, nprop)
        vid = nprop.apply(vac, trap.omega_nu * sched.duration)
        vac_overlaps = [np.vdot(vid, vfinal.block(i)) / 0.5 for i in range(4)]
    phases = {b: float(np.angle(o)) for b, o in zip(BRANCHES, vac_overlaps)}
    ref = entangling_phase(sched, trap.mass)
    alpha = wrap_near(-phase_decomposition(phases)[3], ref, math.pi / 2)
    return FockRun(final, F, alpha, leak, abs(final.norm - np.linalg.norm(psi0)), N, overlaps)


def run_converged(
    sched: PulseSchedule,
    trap: TrapParams,
    motional=Coherent(0.0),
    ladder=N_LADDER,
    target_alpha: float = math.pi / 4,
) -> FockRun:
    """Run at the smallest truncation in ``ladder`` that passes the leakage check."""
    last = None
    for N in ladder:
        try:
            return run_sequence_fock(sched, trap, motional, N, target_alpha)
        except LeakageError as exc:
            last = exc
    raise LeakageError(
        f"leakage {last.leakage:.3g} still too large at N={last.N}; a larger truncation is required",
        last.leakage, last.N,
    )


@dataclass(frozen=True)
class SweepRow:
    N: int
    fidelity: float
    alpha: float
    leakage: float


@dataclass
class TruncationSweep:
    rows: list[SweepRow]
    converged_at: int | None


def truncation_sweep(sched, trap, motional, N_list, target_alpha: float = math.pi / 4,
                     tol: float = 1e-8) -> TruncationSweep:
    N_list = list(N_list)
    if N_list != sorted(N_list):
        raise ValueError("N_list must be ascending")
    rows = []
    converged = None
    for N in N_list:
        r = run_sequence_fock(sched, trap, motional, N, target_alpha, check_leakage=False)
        rows.append(SweepRow(N, r.fidelity, r.entangling_alpha, r.leakage))
        if converged is None and len(rows) > 1 and abs(rows[-1].fidelity - rows[-2].fidelity) < tol:
            converged = rows[-2].N
    return TruncationSweep(rows, converged)
