"""Cavity-loss noise: two-fluid resistance, effective impedance, noise
spectral density and the resulting dephasing rates.

Units audit for the two-fluid resistance R_r = sigma1 L / (lambda sigma2^2 b0):
sigma1/sigma2^2 is in ohm m and L/(lambda b0) in 1/m, so R_r comes out in
ohm. The expression is used as written; it is an order-of-magnitude model.

The absorbed-power conversion is a declared model, not a derived result:
each deposited energy Delta yields one quasiparticle (2Delta per broken pair,
two quasiparticles per pair) and nothing recombines during the pulse.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .circuit import CavityGeometry, CircuitParams, CouplingCapacitors
from .core import CONST

ABSORPTION_MODEL = "pair-breaking at Delta per quasiparticle, no recombination"


@dataclass(frozen=True)
class SuperconductorParams:
    lambda_pen: float
    tau_n: float
    n0: float
    Delta: float
    T: float
    R_n: float = 1e4

    def __post_init__(self):
        for name in ("lambda_pen", "tau_n", "n0", "Delta", "T", "R_n"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def normal_fraction(self) -> float:
        return math.exp(-2.0 * self.Delta / (CONST.k_B * self.T))


@dataclass(frozen=True)
class NoiseModel:
    R_r: float
    circ: CircuitParams
    T: float

    def __post_init__(self):
        if not self.R_r >= 0:
            raise ValueError("R_r must be >= 0")
        if not self.T > 0:
            raise ValueError("T must be > 0")


@dataclass(frozen=True)
class RateResult:
    gamma_q: float
    gamma_x: float
    x_r: float


def two_fluid_conductivity(sc: SuperconductorParams, omega: float) -> tuple[float, float]:
    e, me = CONST.e_charge, CONST.m_e
    n_n = sc.n0 * sc.normal_fraction
    n_s = sc.n0 - n_n
    return n_n * e**2 * sc.tau_n / me, n_s * e**2 / (me * omega)


def thermal_resistance(sc: SuperconductorParams, geom: CavityGeometry, omega: float) -> float:
    """Dark-cavity resistance from thermally activated quasiparticles."""
    if not omega > 0:
        raise ValueError("omega must be > 0")
    if omega >= sc.Delta / CONST.hbar:
        raise ValueError(
            f"omega = {omega:.3g} rad/s is above the gap Delta/hbar = {sc.Delta / CONST.hbar:.3g}"
        )
    s1, s2 = two_fluid_conductivity(sc, omega)
    return s1 * geom.length_L / (sc.lambda_pen * s2**2 * geom.b0)


def photon_excited_resistance(sc: SuperconductorParams, excited_fraction: float) -> float:
    if not 0.0 <= excited_fraction <= 1.0:
        raise ValueError(f"excited fraction must be in [0, 1], got {excited_fraction}")
    return sc.R_n * excited_fraction


@dataclass(frozen=True)
class ExcitedFraction:
    value: float
    clamped: bool
    model: str = ABSORPTION_MODEL


def excited_fraction_from_absorption(P_abs: float, duration: float, Delta: float,
                                     volume: float, n0: float) -> ExcitedFraction:
    if P_abs < 0 or duration < 0:
        raise ValueError("absorbed power and duration must be >= 0")
    raw = P_abs * duration / (Delta * volume * n0)
    return ExcitedFraction(min(raw, 1.0), raw > 1.0)


def required_pair_budget(P_abs: float, duration: float, target_fraction: float) -> float:
    """volume * n0 * Delta (J) that makes the absorption model give ``target_fraction``."""
    return P_abs * duration / target_fraction


def effective_impedance(model: NoiseModel, omega, C_m: float | None = None):
    """(R_r + i w L_r) in parallel with a capacitor (C_r + C_m)/4."""
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be > 0")
    circ = model.circ
    Cm = circ.caps.C_m if C_m is None else C_m
    C_eff = (circ.C_r + Cm) / 4.0
    z_ser = model.R_r + 1j * omega * circ.L_r
    # parallel Z = z_ser / (1 + i w C z_ser)
    z = z_ser / (1.0 + 1j * omega * C_eff * z_ser)
    return z if z.ndim else complex(z)


def impedance_resonance(model: NoiseModel) -> float:
    circ = model.circ
    return 1.0 / math.sqrt(circ.L_r * (circ.C_r + circ.caps.C_m) / 4.0)


def coupling_ratio(caps: CouplingCapacitors) -> float:
    return caps.C_m / (2.0 * caps.C_t)


def noise_spectrum(model: NoiseModel, caps: CouplingCapacitors, omega_grid) -> np.ndarray:
    """J(w) = (C_m/2C_t)^2 w Re Z_eff(w) coth(hbar w / 2 k_B T), ohm rad/s."""
    omega = np.asarray(omega_grid, dtype=float)
    z = np.asarray(effective_impedance(model, omega, caps.C_m))
    x = CONST.hbar * omega / (2.0 * CONST.k_B * model.T)
    return coupling_ratio(caps) ** 2 * omega * z.real / np.tanh(x)


def dephasing_rates(model: NoiseModel, caps: CouplingCapacitors, x_r: float, d_i: float) -> RateResult:
    """Low-frequency, high-temperature rates for the charge qubit and the motion."""
    pref = model.R_r / CONST.R_k * 2.0 * CONST.k_B * model.T / CONST.hbar
    return RateResult(pref * coupling_ratio(caps) ** 2, pref * (x_r / (4.0 * d_i)) ** 2, x_r)


def kick_separation(delta_k: float, n_l: int, t: float, mass: float) -> float:
    """Default dipole displacement hbar delta_k n t / m reached during a gate."""
    return CONST.hbar * delta_k * n_l * t / mass
