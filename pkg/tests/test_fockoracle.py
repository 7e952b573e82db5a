import math
from dataclasses import replace

import numpy as np
import pytest

from hybridion.core import TrapParams
from hybridion.fockoracle import (
    FockState,
    LeakageError,
    build_operators,
    displaced_vacuum,
    evolve,
    run_converged,
    run_sequence_fock,
    truncation_sweep,
)
from hybridion.gateplan import PulseSchedule
from hybridion.phasespace import Coherent, FockDelegate, Thermal, run_sequence

from conftest import random_small_schedule

WIDE_LADDER = (128, 256, 512, 1024)


@pytest.fixture(scope="module")
def be9_case():
    from hybridion.core import CONST, ion_species
    from hybridion.gateplan import plan_schedule

    from conftest import HBAR_KAPPA_14NS

    be9 = ion_species("Be-9")
    trap = TrapParams(2 * math.pi * 1e6, be9)
    plan = plan_schedule(be9.mass, HBAR_KAPPA_14NS / CONST.hbar, 1e8, 10, 5e-9, 5e-9)
    return trap, plan.schedule


@pytest.fixture(scope="module")
def be9_fock(be9_case):
    trap, sched = be9_case
    return run_converged(sched, trap, Coherent(0.0), ladder=WIDE_LADDER)


def test_operator_examples(trap_1mhz):
    ops = build_operators(16, trap_1mhz)
    x0 = trap_1mhz.x0
    assert (ops.x_op @ ops.x_op)[0, 0].real == pytest.approx(x0**2, rel=1e-14)
    assert ops.x_op[1, 0].real == pytest.approx(x0, rel=1e-15)
    assert ops.a[2, 3] == pytest.approx(math.sqrt(3))
    comm = ops.a @ ops.adag - ops.adag @ ops.a
    assert np.allclose(comm[:15, :15], np.eye(15), atol=1e-14)
    with pytest.raises(ValueError):
        build_operators(4, trap_1mhz)


def test_evolve_examples(trap_1mhz):
    N = 64
    ops = build_operators(N, trap_1mhz)
    v = displaced_vacuum(ops, 0.8 + 0.3j)
    st = FockState.product(v)
    assert np.allclose(evolve(st, ops.x_op / trap_1mhz.x0, 0.0).amplitudes, st.amplitudes)
    flipped = evolve(st, ops.number, math.pi)
    assert np.max(np.abs(flipped.block(0) - 0.5 * displaced_vacuum(ops, -(0.8 + 0.3j)))) < 1e-12
    k = 1.3 / trap_1mhz.x0
    vac = np.zeros(N, complex)
    vac[0] = 1
    out = evolve(FockState.product(vac, (1, 0, 0, 0)), ops.x_op, k)
    nmean = np.vdot(out.block(0), ops.number @ out.block(0)).real
    assert nmean == pytest.approx((k * trap_1mhz.x0) ** 2, rel=1e-10)
    assert out.norm == pytest.approx(1.0, abs=1e-12)


def test_evolve_full_space_generator(trap_1mhz):
    N = 16
    ops = build_operators(N, trap_1mhz)
    G = np.kron(np.diag([1.0, -1.0, 2.0, 0.0]), ops.number)
    st = FockState.product(displaced_vacuum(ops, 0.5))
    out = evolve(st, G, 0.3)
    assert np.allclose(out.block(0), evolve(FockState.product(st.block(0) * 2), ops.number, 0.3).block(0))


def test_evolve_rejects_non_hermitian(trap_1mhz):
    ops = build_operators(16, trap_1mhz)
    st = FockState.product(displaced_vacuum(ops, 0.1))
    with pytest.raises(ValueError):
        evolve(st, ops.a, 1.0)
    with pytest.raises(ValueError):
        evolve(st, np.eye(5), 1.0)


def test_no_charge_coupling(trap_1mhz):
    sched = replace(random_small_schedule(np.random.default_rng(1), trap_1mhz), kappa=0.0)
    r = run_sequence_fock(sched, trap_1mhz, Coherent(0.0), N=128)
    assert r.entangling_alpha == pytest.approx(0.0, abs=1e-10)
    assert np.allclose(r.state.block(0), r.state.block(1), atol=1e-12)


def test_be9_schedule_needs_more_than_128(be9_case):
    trap, sched = be9_case
    with pytest.raises(LeakageError) as info:
        run_sequence_fock(sched, trap, Coherent(0.0), N=128)
    assert info.value.N == 128


def test_be9_schedule_matches_phasespace(be9_case, be9_fock):
    trap, sched = be9_case
    ps = run_sequence(sched, trap)
    assert be9_fock.fidelity == pytest.approx(ps.fidelity, abs=1e-6)
    assert be9_fock.entangling_alpha == pytest.approx(ps.entangling_alpha, abs=1e-6)
    assert be9_fock.norm_drift <= 1e-9


def test_single_phonon_input(be9_case, be9_fock):
    trap, sched = be9_case
    r1 = run_sequence_fock(sched, trap, FockDelegate(1), N=be9_fock.N)
    wT = trap.omega_nu * sched.duration
    assert abs(r1.fidelity - be9_fock.fidelity) <= wT**2


def gentle_schedule(trap):
    # spin and charge kicks of 0.5 x0 each keep every branch within |amp| ~ 2
    x0 = trap.x0
    return PulseSchedule(10, 10, 1e-9, 1e-9, 5e-9, 5e-9, 0.05 / x0, 0.5 / (1e-9 * x0))


def test_truncation_sweep_small_amplitudes(trap_1mhz):
    sched = gentle_schedule(trap_1mhz)
    for amp in (0.0, 0.7, 1.0j):
        sw = truncation_sweep(sched, trap_1mhz, Coherent(amp), [32, 64, 128])
        f = {r.N: r.fidelity for r in sw.rows}
        assert abs(f[128] - f[64]) < 1e-8
        assert sw.converged_at is not None and sw.converged_at <= 64
    with pytest.raises(ValueError):
        truncation_sweep(sched, trap_1mhz, Coherent(0.0), [64, 32])


def test_leakage_decreases_with_truncation(trap_1mhz):
    sched = random_small_schedule(np.random.default_rng(4), trap_1mhz)
    sw = truncation_sweep(sched, trap_1mhz, Coherent(2.0), [24, 32, 48, 64])
    leaks = [r.leakage for r in sw.rows]
    assert all(a >= b for a, b in zip(leaks, leaks[1:]))
    assert leaks[0] > leaks[-1]


def test_displaced_input_needs_larger_basis(trap_1mhz):
    sched = random_small_schedule(np.random.default_rng(4), trap_1mhz)
    N = 32
    l0 = run_sequence_fock(sched, trap_1mhz, Coherent(0.0), N=N, check_leakage=False).leakage
    l3 = run_sequence_fock(sched, trap_1mhz, Coherent(3.0), N=N, check_leakage=False).leakage
    assert l3 > l0


def test_fock_errors(trap_1mhz, be9):
    sched = random_small_schedule(np.random.default_rng(6), trap_1mhz)
    with pytest.raises(LeakageError):
        run_sequence_fock(sched, trap_1mhz, FockDelegate(60), N=64)
    with pytest.raises(ValueError):
        run_sequence_fock(sched, trap_1mhz, Thermal(1.0, 5, 0), N=64)
    with pytest.raises(ValueError):
        run_sequence_fock(sched, TrapParams(0.0, be9), Coherent(0.0), N=64)
    with pytest.raises(LeakageError, match="larger truncation"):
        run_converged(sched, trap_1mhz, Coherent(6.0), ladder=(16,))


def test_norm_preserved(trap_1mhz):
    sched = random_small_schedule(np.random.default_rng(8), trap_1mhz)
    r = run_sequence_fock(sched, trap_1mhz, Coherent(0.5 + 0.5j), N=128)
    assert r.norm_drift <= 1e-9
