"""Lumped-element model of the two-rod transmission-line cavity and the static
couplings it mediates.

The cavity of length L is made of two parallel cylindrical rods (spacing d0,
radius b0). Its per-length capacitance and inductance give

    C_r = 4 pi eps0 L / (4 ln(d0/b0)),     L_r = mu0 ln(d0/b0) L / pi^3

Because L is far shorter than the charge-qubit wavelength, the cavity reduces
to two nodes (each C_r/2 to ground, joined by L_r). In the difference
coordinate psi = psi_1 - psi_2 with conjugate p = (p_1 - p_2)/2,

    H_cav = p^2 / (2 C_r/4) + psi^2 / (2 L_r)
    H_1   = p (e x/d_i + C_i V_i)/(C_i + C_r/2)
            - p (C_m/C_t)(p_phi + C_g V_g)/(C_m + C_r/2)

Eliminating the cavity to second order and putting p_phi -> e sigma_z gives
the effective ion-charge interaction used everywhere downstream:

    H_eff = (e^2/C_r)(C_m/C_t)(x/d_i + C_i V_i/e)(sigma_z + C_g V_g/e)

The two-node Hamiltonian is not simulated separately.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .core import CONST

#: ``"doubled"``: omega_r = 2/sqrt(L_r C_r); ``"lc"``: omega_r = 1/sqrt(L_r C_r)
OMEGA_CONVENTIONS = ("doubled", "lc")


class GeometryError(ValueError):
    pass


class LumpedModelWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CavityGeometry:
    d0: float
    b0: float
    length_L: float

    def __post_init__(self):
        if not self.b0 > 0:
            raise GeometryError(f"rod radius b0 must be > 0, got {self.b0}")
        if not self.d0 > 2 * self.b0:
            raise GeometryError(
                f"rods overlap: need d0 > 2*b0, got d0={self.d0}, b0={self.b0}"
            )
        if not self.length_L > 0:
            raise GeometryError(f"cavity length must be > 0, got {self.length_L}")

    @property
    def log_ratio(self) -> float:
        return math.log(self.d0 / self.b0)


@dataclass(frozen=True)
class CouplingCapacitors:
    C_i: float
    C_m: float
    C_J: float
    C_g: float

    def __post_init__(self):
        for name in ("C_i", "C_m", "C_J", "C_g"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")

    @property
    def C_t(self) -> float:
        return self.C_m + self.C_J + self.C_g

    @property
    def largest(self) -> float:
        return max(self.C_i, self.C_m, self.C_J, self.C_g)


def lumped_validity(C_r: float, caps: CouplingCapacitors) -> tuple[str, float]:
    """Grade the C_r >> C_i, C_m, C_J, C_g assumption.

    Returns ``(status, ratio)`` with status ``"pass"`` (ratio >= 5), ``"warn"``
    (2 <= ratio < 5) or ``"fail"``.
    """
    ratio = C_r / caps.largest
    if ratio >= 5:
        return "pass", ratio
    if ratio >= 2:
        return "warn", ratio
    return "fail", ratio


@dataclass(frozen=True)
class CircuitParams:
    C_r: float
    L_r: float
    caps: CouplingCapacitors
    d_i: float
    convention: str = "doubled"
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        for name in ("C_r", "L_r", "d_i"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0, got {getattr(self, name)}")
        if self.convention not in OMEGA_CONVENTIONS:
            raise ValueError(f"unknown omega_r convention {self.convention!r}")

    @property
    def omega_r_doubled(self) -> float:
        return 2.0 / math.sqrt(self.L_r * self.C_r)

    @property
    def omega_r_lc(self) -> float:
        return 1.0 / math.sqrt(self.L_r * self.C_r)

    @property
    def omega_r(self) -> float:
        return self.omega_r_doubled if self.convention == "doubled" else self.omega_r_lc


def cavity_capacitance(geom: CavityGeometry) -> float:
    return 4.0 * math.pi * CONST.eps0 * geom.length_L / (4.0 * geom.log_ratio)


def cavity_inductance(geom: CavityGeometry) -> float:
    return CONST.mu0 * geom.log_ratio * geom.length_L / math.pi**3


def derive_circuit(
    geom: CavityGeometry,
    caps: CouplingCapacitors,
    d_i: float,
    convention: str = "doubled",
) -> CircuitParams:
    """Lumped cavity parameters from the rod geometry.

    Violations of the lumped-model assumption are reported as
    :class:`LumpedModelWarning` and recorded on the result, never raised.
    """
    if not d_i > 0:
        raise GeometryError(f"ion-cavity distance d_i must be > 0, got {d_i}")
    C_r = cavity_capacitance(geom)
    L_r = cavity_inductance(geom)
    status, ratio = lumped_validity(C_r, caps)
    notes = []
    if status != "pass":
        notes.append(
            f"lumped model marginal: C_r / max(C_i, C_m, C_J, C_g) = {ratio:.3g} ({status})"
        )
    for msg in notes:
        warnings.warn(msg, LumpedModelWarning, stacklevel=2)
    return CircuitParams(C_r, L_r, caps, d_i, convention, tuple(notes))


@dataclass(frozen=True)
class KappaResult:
    kappa: float  # rad / (s m)
    hbar_kappa: float  # J / m
    full_prefactor: float  # (e^2/C_r)(C_m/C_t)/d_i, J / m

    @property
    def kappa_over_2pi(self) -> float:
        return self.kappa / (2 * math.pi)


def ion_charge_kappa(circ: CircuitParams) -> KappaResult:
    """hbar kappa = e^2 / (2 C_r d_i), plus the unreduced second-order prefactor."""
    e = CONST.e_charge
    hk = e**2 / (2.0 * circ.C_r * circ.d_i)
    full = e**2 / circ.C_r * (circ.caps.C_m / circ.caps.C_t) / circ.d_i
    return KappaResult(hk / CONST.hbar, hk, full)


@dataclass(frozen=True)
class BiasConfig:
    V_g: float = 0.0
    V_i: float = 0.0
    C_ib: float = 0.0
    V_ib: float = 0.0

    def residue_V(self, C_i: float) -> float:
        """Unbalanced trap voltage seen through C_i once the balance branch acts."""
        return self.V_i + (self.C_ib / C_i) * self.V_ib


@dataclass(frozen=True)
class EffectiveInteraction:
    xx_coupling: float  # J/m, coefficient of x sigma_z
    ion_force_shift: float  # N, static force from the gate voltage
    charge_bias_shift: float  # J, coefficient of sigma_z from the residue voltage

    @property
    def charge_bias_GHz(self) -> float:
        return self.charge_bias_shift / CONST.h / 1e9


def effective_interaction(circ: CircuitParams, bias: BiasConfig) -> EffectiveInteraction:
    """Split the second-order interaction into its coupling and bias parts.

    The trap voltage enters only through the balance residue.
    """
    e = CONST.e_charge
    caps = circ.caps
    pref = e**2 / circ.C_r * (caps.C_m / caps.C_t)
    xx = pref / circ.d_i
    # x * (C_g V_g / e) term: energy per metre, force is minus its coefficient
    force = -pref * (caps.C_g * bias.V_g / e) / circ.d_i
    residue = bias.residue_V(caps.C_i)
    bias_shift = pref * (caps.C_i * residue / e)
    return EffectiveInteraction(xx, force, bias_shift)


def ion_ion_coupling(circ: CircuitParams) -> float:
    """Coefficient of x1 x2 (J/m^2) for two ions at opposite cavity ends."""
    return CONST.e_charge**2 / (2.0 * (circ.C_r + 2.0 * circ.caps.C_i) * circ.d_i**2)


@dataclass(frozen=True)
class Enhancement:
    ion_charge: float
    ion_ion: float


def enhancement_factors(geom: CavityGeometry, d_i: float, r0: float) -> Enhancement:
    """Coupling gain of the cavity over direct free-space coupling.

    ``r0`` is the free-space ion-charge separation being replaced.
    """
    if not r0 > 0:
        raise ValueError(f"free-space distance r0 must be > 0, got {r0}")
    lr = geom.log_ratio
    return Enhancement(4.0 * lr * r0 / d_i, 4.0 * lr * (geom.length_L / d_i) ** 2)


def freespace_charge_dipole(r0: float) -> float:
    """Direct charge-dipole coupling e^2/(4 pi eps0 r0^2), J/m per unit x."""
    return CONST.e_charge**2 / (4.0 * math.pi * CONST.eps0 * r0**2)


def cavity_charge_dipole(circ: CircuitParams) -> float:
    """Cavity-mediated charge-dipole coupling at ideal contact (C_m/C_t -> 1)."""
    return CONST.e_charge**2 / (circ.C_r * circ.d_i)


def freespace_dipole_dipole(x_r: float, separation: float) -> float:
    e = CONST.e_charge
    return (e * x_r) ** 2 / (4.0 * math.pi * CONST.eps0 * separation**3)


def cavity_dipole_dipole(geom: CavityGeometry, x_r: float, d_i: float) -> float:
    """Magnitude 4 ln(d0/b0) e^2 x_r^2 / (4 pi eps0 d_i^2 L) of the cavity ion-ion coupling."""
    e = CONST.e_charge
    return (
        4.0 * geom.log_ratio * e**2 * x_r**2
        / (4.0 * math.pi * CONST.eps0 * d_i**2 * geom.length_L)
    )
