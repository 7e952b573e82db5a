"""Physical constants, unit handling, ion species and qubit-branch conventions.

Everything inside the package is SI. Human units appear only at the config/CLI
boundary and go through :func:`unit_convert`.

Position operator convention used by both simulation engines::

    x = x0 (a + a^dagger),   x0 = sqrt(hbar / (2 m omega_nu))
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple

import scipy.constants as sc


@dataclass(frozen=True)
class PhysicalConstants:
    hbar: float = sc.hbar
    e_charge: float = sc.e
    eps0: float = sc.epsilon_0
    mu0: float = sc.mu_0
    k_B: float = sc.k
    amu: float = sc.atomic_mass
    m_e: float = sc.m_e

    @property
    def R_k(self) -> float:
        """Quantum resistance hbar / (2e)^2 in ohm."""
        return self.hbar / (2.0 * self.e_charge) ** 2

    @property
    def h(self) -> float:
        return 2.0 * math.pi * self.hbar


CONST = PhysicalConstants()


class UnitError(ValueError):
    pass


# unit -> (dimension, factor to SI)
_UNITS: dict[str, tuple[str, float]] = {
    "m": ("length", 1.0),
    "um": ("length", 1e-6),
    "nm": ("length", 1e-9),
    "F": ("capacitance", 1.0),
    "pF": ("capacitance", 1e-12),
    "fF": ("capacitance", 1e-15),
    "H": ("inductance", 1.0),
    "pH": ("inductance", 1e-12),
    "Hz": ("frequency", 1.0),
    "kHz": ("frequency", 1e3),
    "MHz": ("frequency", 1e6),
    "GHz": ("frequency", 1e9),
    "THz": ("frequency", 1e12),
    "rad/s": ("angular_frequency", 1.0),
    "s": ("time", 1.0),
    "ns": ("time", 1e-9),
    "K": ("temperature", 1.0),
    "mK": ("temperature", 1e-3),
    "V": ("voltage", 1.0),
    "Ohm": ("resistance", 1.0),
    "J": ("energy", 1.0),
    "eV": ("energy", sc.e),
    "W": ("power", 1.0),
    "nW": ("power", 1e-9),
    "J/m": ("force", 1.0),
    "1/m": ("wavenumber", 1.0),
    "1/m^3": ("density", 1.0),
    "m^3": ("volume", 1.0),
    "kg": ("mass", 1.0),
    "rad": ("angle", 1.0),
    "1": ("dimensionless", 1.0),
}

_ALIASES = {
    "μm": "um",
    "µm": "um",
    "Ω": "Ohm",
    "ohm": "Ohm",
    "m-1": "1/m",
    "m^-1": "1/m",
    "m-3": "1/m^3",
    "m^-3": "1/m^3",
    "N": "J/m",
    "": "1",
}


def canonical_unit(unit: str) -> str:
    u = unit.strip()
    u = _ALIASES.get(u, u)
    if u not in _UNITS:
        raise UnitError(f"unknown unit {unit!r}")
    return u


def unit_dimension(unit: str) -> str:
    return _UNITS[canonical_unit(unit)][0]


def si_unit(dimension: str) -> str:
    """The SI base unit name used for serialising a dimension."""
    for name, (dim, factor) in _UNITS.items():
        if dim == dimension and factor == 1.0:
            return name
    raise UnitError(f"no SI unit for dimension {dimension!r}")


def unit_convert(value: float, from_unit: str, to_unit: str) -> float:
    """Convert ``value`` between two units of the same dimension.

    >>> unit_convert(100, "um", "m")
    0.0001
    """
    fu, tu = canonical_unit(from_unit), canonical_unit(to_unit)
    fdim, ff = _UNITS[fu]
    tdim, tf = _UNITS[tu]
    if fdim != tdim:
        raise UnitError(f"cannot convert {from_unit!r} ({fdim}) to {to_unit!r} ({tdim})")
    if fu == tu:
        return float(value)
    return float(value) * ff / tf


@dataclass(frozen=True)
class IonSpecies:
    name: str
    mass: float

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError(f"ion mass must be positive, got {self.mass}")


# masses in amu
SPECIES_TABLE: dict[str, float] = {
    "Be-9": 9.012,
    "Ca-43": 42.959,
}


def ion_species(name: str, mass: float | None = None) -> IonSpecies:
    if mass is not None:
        return IonSpecies(name, float(mass))
    try:
        return IonSpecies(name, SPECIES_TABLE[name] * CONST.amu)
    except KeyError:
        known = ", ".join(sorted(SPECIES_TABLE))
        raise KeyError(f"unknown ion species {name!r} (known: {known})") from None


def ion_mass(name: str, mass: float | None = None) -> float:
    """SI mass of a tabulated species, or ``mass`` if given explicitly."""
    return ion_species(name, mass).mass


@dataclass(frozen=True)
class TrapParams:
    omega_nu: float
    species: IonSpecies

    def __post_init__(self):
        if not self.omega_nu >= 0:
            raise ValueError(f"omega_nu must be >= 0, got {self.omega_nu}")

    @property
    def mass(self) -> float:
        return self.species.mass

    @property
    def x0(self) -> float:
        """Ground-state length sqrt(hbar / 2 m omega_nu)."""
        if self.omega_nu <= 0:
            raise ValueError("x0 is undefined for omega_nu = 0 (free particle)")
        return math.sqrt(CONST.hbar / (2.0 * self.mass * self.omega_nu))


class QubitBranch(NamedTuple):
    """Joint sigma_z eigenvalues of the spin qubit (s) and the charge qubit (q)."""

    s: int
    q: int


BRANCHES: tuple[QubitBranch, ...] = (
    QubitBranch(1, 1),
    QubitBranch(1, -1),
    QubitBranch(-1, 1),
    QubitBranch(-1, -1),
)


def iter_branches() -> Iterator[QubitBranch]:
    return iter(BRANCHES)


def branch_label(b: QubitBranch) -> str:
    return ("+" if b.s > 0 else "-") + ("+" if b.q > 0 else "-")
