"""Eight-pulse conditional-displacement phase gate: schedules and analytics.

Right to left the sequence is

    kick(+K1) . free(t1) . kick(-(K1 + K2)) . free(t2) . kick(+K2)

with branch momenta K_i = z delta_k n_i s + kappa tau_i q. For a free particle
the p-linear terms cancel when n1 t1 = n2 t2 and tau1 t1 = tau2 t2, and the
s*q cross term of (hbar/2m)(K1^2 t1 + K2^2 t2) leaves exp(-i alpha sz sz) with

    alpha = z hbar delta_k kappa n1 tau1 t1 (t1 + t2) / (m t2)

Each coupling window of length tau is physically U_q(tau) = exp(-i kappa tau sz x);
the middle window U_q(-tau1-tau2) is realised by flipping the charge qubit
around a positive-time window.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from .core import CONST

REL_TOL = 1e-9
ROTATING_WINDOW_WARN = 0.01


class ScheduleError(ValueError):
    pass


class PlanningError(ValueError):
    pass


@dataclass(frozen=True)
class PulseSchedule:
    n_l1: int
    n_l2: int
    tau_q1: float
    tau_q2: float
    t1: float
    t2: float
    delta_k: float
    kappa: float
    z_l1: int = 1
    z_l2: int = 1

    def __post_init__(self):
        for name in ("n_l1", "n_l2"):
            n = getattr(self, name)
            if int(n) != n or n <= 0 or n % 2:
                raise ScheduleError(f"{name} must be a positive even integer, got {n}")
        for name in ("z_l1", "z_l2"):
            if getattr(self, name) not in (1, -1):
                raise ScheduleError(f"{name} must be +1 or -1")
        if self.z_l1 != self.z_l2:
            # n1 t1 = n2 t2 cancels the p-linear term only for equal directions
            raise ScheduleError("both kick groups must share one direction (z_l1 == z_l2)")
        for name in ("t1", "t2"):
            if not getattr(self, name) > 0:
                raise ScheduleError(f"{name} must be > 0, got {getattr(self, name)}")
        for name in ("tau_q1", "tau_q2"):
            if not getattr(self, name) >= 0:
                raise ScheduleError(f"{name} must be >= 0, got {getattr(self, name)}")
        if not self.delta_k > 0:
            raise ScheduleError("delta_k must be > 0")
        if not self.kappa >= 0:
            raise ScheduleError("kappa must be >= 0")
        if not _close(self.n_l1 * self.t1, self.n_l2 * self.t2):
            raise ScheduleError(
                f"matching condition violated: n_l1*t1={self.n_l1 * self.t1:.6e} "
                f"!= n_l2*t2={self.n_l2 * self.t2:.6e}"
            )
        if not _close(self.tau_q1 * self.t1, self.tau_q2 * self.t2):
            raise ScheduleError(
                f"matching condition violated: tau_q1*t1={self.tau_q1 * self.t1:.6e} "
                f"!= tau_q2*t2={self.tau_q2 * self.t2:.6e}"
            )

    @property
    def z(self) -> int:
        return self.z_l1

    @property
    def duration(self) -> float:
        """Wall-clock length: three coupling windows plus two free flights."""
        return 2.0 * (self.tau_q1 + self.tau_q2) + self.t1 + self.t2

    def kicks(self, s: int, q: int) -> tuple[float, float, float]:
        """Signed momenta (1/m) of the three combined kicks for branch (s, q)."""
        K1 = self.z * self.delta_k * self.n_l1 * s + self.kappa * self.tau_q1 * q
        K2 = self.z * self.delta_k * self.n_l2 * s + self.kappa * self.tau_q2 * q
        return K1, -(K1 + K2), K2

    def pulse_table(self) -> list[dict]:
        """Physical realisation of the eight pulses in time order."""
        z = self.z
        return [
            {"op": "U_q", "tau": self.tau_q1, "charge_flip": False},
            {"op": "U_l", "kicks": z * self.n_l1},
            {"op": "U_0", "t": self.t1},
            {"op": "U_q", "tau": self.tau_q1 + self.tau_q2, "charge_flip": True},
            {"op": "U_l", "kicks": -z * (self.n_l1 + self.n_l2)},
            {"op": "U_0", "t": self.t2},
            {"op": "U_q", "tau": self.tau_q2, "charge_flip": False},
            {"op": "U_l", "kicks": z * self.n_l2},
        ]

    def validity_warnings(self, omega_nu: float) -> list[str]:
        out = []
        worst = omega_nu * max(self.tau_q1, self.tau_q1 + self.tau_q2)
        if worst > ROTATING_WINDOW_WARN:
            out.append(
                f"omega_nu * tau_q = {worst:.3g} > {ROTATING_WINDOW_WARN}: "
                "coupling windows are not short against the trap period"
            )
        wt = omega_nu * self.duration
        if wt > 0.3:
            out.append(
                f"omega_nu * T = {wt:.3g}: far from the free-particle limit, gate degraded"
            )
        return out

    def as_dict(self) -> dict:
        return {
            "n_l1": self.n_l1,
            "n_l2": self.n_l2,
            "z_l": self.z,
            "tau_q1": self.tau_q1,
            "tau_q2": self.tau_q2,
            "t1": self.t1,
            "t2": self.t2,
            "delta_k": self.delta_k,
            "kappa": self.kappa,
        }


def _close(a: float, b: float, rel: float = REL_TOL) -> bool:
    return abs(a - b) <= rel * max(abs(a), abs(b), 1e-300)


def entangling_phase(sched: PulseSchedule, mass: float) -> float:
    """Closed-form sigma_z^s sigma_z^q phase alpha of a schedule."""
    return (
        sched.z * CONST.hbar * sched.kappa * sched.delta_k * sched.tau_q1 * sched.n_l1
        * sched.t1 * (sched.t1 + sched.t2) / (mass * sched.t2)
    )


def gate_time(sched: PulseSchedule, mass: float, tol: float = 1e-6) -> float:
    """Total time of a pi/4 gate from the kick/flight parameters alone."""
    alpha = entangling_phase(sched, mass)
    if abs(abs(alpha) - math.pi / 4) > tol * math.pi / 4:
        raise PlanningError(f"gate_time needs |alpha| = pi/4, schedule has alpha = {alpha!r}")
    hbar = CONST.hbar
    return (
        math.pi * mass / (4 * hbar * sched.kappa * sched.delta_k)
        * (1.0 / (sched.n_l1 * sched.t1) + 1.0 / (sched.n_l2 * sched.t2))
        + sched.t1 + sched.t2
    )


@dataclass(frozen=True)
class GatePlanResult:
    alpha: float
    T_gate: float
    schedule: PulseSchedule
    time_identity_residual: float | None = None


def _even_partner(n_l1: int, t1: float, t2: float) -> int:
    ideal = n_l1 * t1 / t2
    lo = max(2, 2 * math.floor(ideal / 2))
    cands = sorted({lo, lo + 2}, key=lambda n: (abs(n - ideal), n))
    best = cands[0]
    if abs(best - ideal) > 0.5 * ideal:
        raise PlanningError(
            f"no even kick count within 50% of n_l1*t1/t2 = {ideal:.4g}"
        )
    return best


def plan_schedule(
    mass: float,
    kappa: float,
    delta_k: float,
    n_l1: int,
    t1: float,
    t2: float,
    target_alpha: float = math.pi / 4,
    z_l: int = 1,
) -> GatePlanResult:
    """Solve the entangling phase for the coupling windows.

    n_l2 is the even integer nearest n_l1 t1/t2 and t2 is then readjusted so
    both matching conditions hold exactly.
    """
    if not target_alpha > 0:
        raise PlanningError(f"target_alpha must be > 0, got {target_alpha}")
    for name, v in (("mass", mass), ("kappa", kappa), ("delta_k", delta_k), ("t1", t1), ("t2", t2)):
        if not v > 0:
            raise PlanningError(f"{name} must be > 0, got {v}")
    if int(n_l1) != n_l1 or n_l1 <= 0 or n_l1 % 2:
        raise PlanningError(f"n_l1 must be a positive even integer, got {n_l1}")
    n_l1 = int(n_l1)
    n_l2 = _even_partner(n_l1, t1, t2)
    t2 = n_l1 * t1 / n_l2
    tau1 = target_alpha * mass * t2 / (
        CONST.hbar * kappa * delta_k * n_l1 * t1 * (t1 + t2)
    )
    tau2 = tau1 * t1 / t2
    sched = PulseSchedule(n_l1, n_l2, tau1, tau2, t1, t2, delta_k, kappa, z_l, z_l)
    alpha = entangling_phase(sched, mass)
    residual = None
    if abs(target_alpha - math.pi / 4) <= 1e-9:
        T = gate_time(sched, mass)
        residual = abs(T - sched.duration) / sched.duration
    else:
        T = sched.duration
    return GatePlanResult(alpha, T, sched, residual)


def rescale_alpha(sched: PulseSchedule, factor: float) -> PulseSchedule:
    """Same schedule with both coupling windows scaled by ``factor``."""
    return replace(sched, tau_q1=sched.tau_q1 * factor, tau_q2=sched.tau_q2 * factor)


# --- swap composition -------------------------------------------------------

I2 = np.eye(2, dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
PAULI_Z = np.diag([1.0, -1.0]).astype(complex)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


def zz_phase_gate(alpha: float) -> np.ndarray:
    """exp(-i alpha sz x sz) in the (++, +-, -+, --) basis."""
    zz = np.array([1, -1, -1, 1], dtype=float)
    return np.diag(np.exp(-1j * alpha * zz))


def rz(theta: float) -> np.ndarray:
    """exp(i theta sz)."""
    return np.diag([np.exp(1j * theta), np.exp(-1j * theta)])


class CircuitOp(NamedTuple):
    name: str
    qubits: tuple[int, ...]
    matrix: np.ndarray


def _local(op: np.ndarray, qubit: int) -> np.ndarray:
    return np.kron(op, I2) if qubit == 0 else np.kron(I2, op)


def _zz_alpha(U: np.ndarray, tol: float) -> float:
    """Return alpha if U = e^{i phi} exp(-i alpha sz sz), else raise."""
    U = np.asarray(U, dtype=complex)
    if U.shape != (4, 4):
        raise ValueError("expected a 4x4 matrix")
    off = U - np.diag(np.diag(U))
    if np.max(np.abs(off)) > tol:
        raise ValueError("entangling gate is not diagonal")
    d = np.diag(U)
    if np.max(np.abs(np.abs(d) - 1)) > tol:
        raise ValueError("entangling gate is not unitary")
    if abs(d[0] - d[3]) > tol or abs(d[1] - d[2]) > tol:
        raise ValueError("entangling gate is not of the exp(-i alpha sz sz) form")
    # d1/d0 = exp(2 i alpha)
    return 0.5 * float(np.angle(d[1] / d[0]))


def operator_distance(A: np.ndarray, B: np.ndarray) -> float:
    """min over phi of the spectral norm of e^{i phi} A - B."""
    phi0 = -float(np.angle(np.trace(B.conj().T @ A)))

    def dist(phi):
        return float(np.linalg.norm(np.exp(1j * phi) * A - B, 2))

    res = minimize_scalar(dist, bounds=(phi0 - 0.5, phi0 + 0.5), method="bounded",
                          options={"xatol": 1e-13})
    return min(dist(phi0), float(res.fun))


@dataclass
class SwapComposition:
    swap_circuit: list[CircuitOp]
    residual_error: float

    @property
    def product(self) -> np.ndarray:
        U = np.eye(4, dtype=complex)
        for op in self.swap_circuit:
            U = op.matrix @ U
        return U


def compose_swap(alpha_gate_unitary: np.ndarray, alpha_tol: float = 0.1) -> SwapComposition:
    """Build SWAP from three applications of a pi/4 zz phase gate.

    Each controlled-Z is the zz gate dressed by local exp(i a sz) rotations
    (a = nominal +-pi/4); CNOT is CZ conjugated by a Hadamard on its target,
    and SWAP = CNOT(0->1) CNOT(1->0) CNOT(0->1). Ops are listed in time order.
    """
    U = np.asarray(alpha_gate_unitary, dtype=complex)
    alpha = _zz_alpha(U, 1e-9)
    nominal = math.copysign(math.pi / 4, alpha)
    if abs(alpha - nominal) > alpha_tol:
        raise ValueError(f"entangling phase {alpha:.6g} is not close to +-pi/4")
    rot = rz(nominal)

    def cz_block() -> list[CircuitOp]:
        return [
            CircuitOp("ZZ", (0, 1), U),
            CircuitOp("RZ", (0,), _local(rot, 0)),
            CircuitOp("RZ", (1,), _local(rot, 1)),
        ]

    def cnot(control: int, target: int) -> list[CircuitOp]:
        h = CircuitOp("H", (target,), _local(HADAMARD, target))
        return [h, *cz_block(), h]

    ops = cnot(0, 1) + cnot(1, 0) + cnot(0, 1)
    comp = SwapComposition(ops, 0.0)
    comp.residual_error = operator_distance(comp.product, SWAP)
    return comp
