import math

import numpy as np
import pytest

from hybridion.core import CONST, TrapParams, ion_species
from hybridion.gateplan import PulseSchedule, plan_schedule

HBAR_KAPPA_14NS = 1.17e-18  # J/m, the value that makes the Be-9 gate 14 ns

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def be9():
    return ion_species("Be-9")


@pytest.fixture
def trap_1mhz(be9):
    return TrapParams(2 * math.pi * 1e6, be9)


@pytest.fixture
def be9_plan(be9):
    return plan_schedule(be9.mass, HBAR_KAPPA_14NS / CONST.hbar, 1e8, 10, 5e-9, 5e-9)


def random_small_schedule(rng: np.random.Generator, trap: TrapParams) -> PulseSchedule:
    """A valid schedule whose branch amplitudes stay within a few x0.

    Spin and charge kicks are drawn in x0 units so the Fock basis converges
    at N <= 512; omega_nu * tau stays below 0.01.
    """
    x0 = trap.x0
    while True:
        n1 = int(rng.choice(np.arange(2, 21, 2)))
        n2 = int(rng.choice(np.arange(2, 21, 2)))
        t1 = rng.uniform(1e-9, 10e-9)
        t2 = n1 * t1 / n2
        if 1e-9 <= t2 <= 10e-9:
            break
    ks = rng.uniform(0.3, 2.0)
    kq = rng.uniform(0.3, 2.0)
    tau1 = rng.uniform(0.1e-9, 1.5e-9)
    tau2 = tau1 * t1 / t2
    if trap.omega_nu * (tau1 + tau2) > 0.01:
        tau1 *= 0.01 / (trap.omega_nu * (tau1 + tau2))
        tau2 = tau1 * t1 / t2
    delta_k = ks / (n1 * x0)
    kappa = kq / (tau1 * x0)
    return PulseSchedule(n1, n2, tau1, tau2, t1, t2, delta_k, kappa)
