import math

import numpy as np
import pytest
from scipy.linalg import expm

from hybridion.core import BRANCHES, QubitBranch, TrapParams
from hybridion.fockoracle import build_operators, run_sequence_fock
from hybridion.gateplan import PulseSchedule, entangling_phase
from hybridion.phasespace import (
    BranchState,
    Coherent,
    EngineError,
    FockDelegate,
    Thermal,
    apply_kick,
    apply_rotation,
    coherent_overlap,
    fidelity,
    phase_decomposition,
    run_sequence,
    sample_thermal_amplitudes,
    thermal_fidelity,
    thermal_fidelity_exact,
)

from conftest import random_small_schedule

PP = QubitBranch(1, 1)


def coherent_vector(N, amp):
    n = np.arange(N)
    logfact = np.array([math.lgamma(k + 1) for k in n])
    with np.errstate(divide="ignore"):
        mag = np.where(n == 0, 0.0, n * np.log(abs(amp) + 1e-300))
    return np.exp(-abs(amp) ** 2 / 2 + mag - logfact / 2) * np.exp(1j * n * np.angle(amp))


def test_kick_from_vacuum(trap_1mhz):
    st = apply_kick(BranchState(PP, 0j), 3e6, trap_1mhz)
    assert st.amp == pytest.approx(-1j * 3e6 * trap_1mhz.x0, rel=1e-15)
    assert st.phase == 0.0


@pytest.mark.parametrize("amp", [0.4, -0.7, 0.3 + 0.5j])
def test_kick_pair_against_dense_displacements(trap_1mhz, amp):
    x0 = trap_1mhz.x0
    k = 0.6 / x0
    st = apply_kick(apply_kick(BranchState(PP, amp), k, trap_1mhz), -k, trap_1mhz)
    assert st.amp == pytest.approx(amp, abs=1e-15)
    # the net phase is Im(beta conj(beta)) = 0 plus the Weyl term; compare the dense operators
    ops = build_operators(64, trap_1mhz)
    U = expm(1j * k * ops.x_op) @ expm(-1j * k * ops.x_op)
    v = coherent_vector(64, amp)
    dense_phase = np.angle(np.vdot(v, U @ v))
    assert math.remainder(st.phase - dense_phase, 2 * math.pi) == pytest.approx(0.0, abs=1e-10)
    # single kick: compare the full displaced state
    one = apply_kick(BranchState(PP, amp), k, trap_1mhz)
    expected = np.exp(1j * one.phase) * coherent_vector(64, one.amp)
    assert np.max(np.abs(expm(-1j * k * ops.x_op) @ v - expected)) < 1e-10


def test_opposite_spin_kicks_are_symmetric(trap_1mhz):
    amp = 0.2 + 0.1j
    a = apply_kick(BranchState(QubitBranch(1, 1), amp), 1e7, trap_1mhz)
    b = apply_kick(BranchState(QubitBranch(-1, 1), amp), -1e7, trap_1mhz)
    assert a.amp + b.amp == pytest.approx(2 * amp, abs=1e-15)


def test_kick_needs_trap(be9):
    with pytest.raises(EngineError):
        apply_kick(BranchState(PP, 0j), 1.0, TrapParams(0.0, be9))


def test_rotation_examples():
    st = BranchState(PP, 0.3 - 0.8j, phase=0.4)
    assert apply_rotation(st, 2 * math.pi).amp == pytest.approx(st.amp, abs=1e-15)
    assert apply_rotation(st, math.pi).amp == pytest.approx(-st.amp, abs=1e-15)
    assert apply_rotation(st, math.pi).phase == st.phase
    ab = apply_rotation(apply_rotation(st, 0.3), 1.1)
    assert ab.amp == pytest.approx(apply_rotation(st, 1.4).amp, abs=1e-15)


def test_no_charge_coupling(trap_1mhz, be9_plan):
    from dataclasses import replace

    sched = replace(be9_plan.schedule, kappa=0.0)
    res = run_sequence(sched, trap_1mhz)
    assert res.entangling_alpha == pytest.approx(0.0, abs=1e-12)
    by = {st.branch: st for st in res.per_branch}
    for s in (1, -1):
        assert by[(s, 1)].amp == pytest.approx(by[(s, -1)].amp, abs=1e-15)


def test_planned_gate_at_1mhz(trap_1mhz, be9_plan):
    res = run_sequence(be9_plan.schedule, trap_1mhz)
    assert res.entangling_alpha == pytest.approx(math.pi / 4, rel=0.01)
    assert res.fidelity >= 0.99


def test_alpha_error_quadratic(be9, be9_plan):
    err = {}
    for f in (1e3, 1e6):
        trap = TrapParams(2 * math.pi * f, be9)
        err[f] = abs(run_sequence(be9_plan.schedule, trap).entangling_alpha - math.pi / 4)
    assert err[1e6] / err[1e3] == pytest.approx(1e6, rel=0.05)


def test_fidelity_examples(be9_plan, be9):
    trap = TrapParams(2 * math.pi * 1e6, be9)
    sched = be9_plan.schedule
    a_id = 0.2 * np.exp(-1j * trap.omega_nu * sched.duration)
    ideal = [BranchState(b, a_id, phase=-math.pi / 4 * b.s * b.q + 0.9) for b in BRANCHES]
    assert fidelity(ideal, sched, trap, 0.2) == pytest.approx(1.0, abs=1e-14)

    shifted = list(ideal)
    # shift along a_id so the overlap carries no extra phase
    shifted[2] = BranchState(BRANCHES[2], a_id * (1 + 0.1 / abs(a_id)), phase=ideal[2].phase)
    expected = abs(0.75 + 0.25 * math.exp(-0.005)) ** 2
    assert fidelity(shifted, sched, trap, 0.2) == pytest.approx(expected, rel=1e-12)
    assert expected == pytest.approx(0.9975, abs=1e-4)

    delta = 0.37
    dephased = list(ideal)
    dephased[1] = BranchState(BRANCHES[1], a_id, phase=ideal[1].phase + delta)
    assert fidelity(dephased, sched, trap, 0.2) == pytest.approx(
        abs(0.75 + 0.25 * np.exp(1j * delta)) ** 2, rel=1e-12
    )


def test_displaced_branch_fidelity_matches_state_overlap(trap_1mhz, be9_plan):
    # |3/4 + 1/4 <a|a+0.1>|^2 from truncated number-basis vectors
    a = 0.3
    v0, v1 = coherent_vector(64, a), coherent_vector(64, a + 0.1)
    ov = 0.75 + 0.25 * np.vdot(v0, v1)
    assert abs(ov) ** 2 == pytest.approx(abs(0.75 + 0.25 * coherent_overlap(a, a + 0.1)) ** 2, rel=1e-12)


def test_unitarity_and_decomposition(trap_1mhz, be9_plan):
    res = run_sequence(be9_plan.schedule, trap_1mhz, Coherent(0.5 - 0.2j))
    assert sum(abs(st.weight) ** 2 for st in res.per_branch) == 1.0
    c = phase_decomposition({st.branch: st.phase for st in res.per_branch})
    for st in res.per_branch:
        s, q = st.branch
        assert c[0] + c[1] * s + c[2] * q + c[3] * s * q == pytest.approx(st.phase, abs=1e-12)


def test_input_kinds_rejected(trap_1mhz, be9_plan):
    with pytest.raises(EngineError):
        run_sequence(be9_plan.schedule, trap_1mhz, FockDelegate(1))
    with pytest.raises(EngineError):
        run_sequence(be9_plan.schedule, trap_1mhz, Thermal(1.0, 10, 0))
    with pytest.raises(ValueError):
        Thermal(1.0, 0, 0)


def test_thermal_zero_occupation(trap_1mhz, be9_plan):
    th = thermal_fidelity(be9_plan.schedule, trap_1mhz, 0.0, samples=20, seed=3)
    assert th.mean == run_sequence(be9_plan.schedule, trap_1mhz).fidelity
    assert th.stderr == 0.0


def test_thermal_determinism(trap_1mhz, be9_plan):
    a = thermal_fidelity(be9_plan.schedule, trap_1mhz, 5.0, samples=50, seed=7)
    b = thermal_fidelity(be9_plan.schedule, trap_1mhz, 5.0, samples=50, seed=7)
    assert a.mean == b.mean and a.stderr == b.stderr
    # sample i only depends on seed + i
    assert sample_thermal_amplitudes(5.0, 10, 7)[3] == sample_thermal_amplitudes(5.0, 1, 10)[0]


def test_thermal_sampling_statistics():
    amps = sample_thermal_amplitudes(5.0, 4000, 0)
    assert np.mean(np.abs(amps) ** 2) == pytest.approx(5.0, rel=0.08)


def test_thermal_exact_matches_monte_carlo(trap_1mhz, be9_plan):
    mc = thermal_fidelity(be9_plan.schedule, trap_1mhz, 5.0, samples=400, seed=11)
    exact = thermal_fidelity_exact(be9_plan.schedule, trap_1mhz, 5.0)
    assert abs(mc.mean - exact) <= 3 * mc.stderr
    assert thermal_fidelity_exact(be9_plan.schedule, trap_1mhz, 0.0) == pytest.approx(
        run_sequence(be9_plan.schedule, trap_1mhz).fidelity, abs=1e-12
    )


def test_thermal_samples_against_fock(trap_1mhz):
    # full-size kicks need N ~ 1e3; a few-x0 schedule keeps the spot checks cheap
    rng = np.random.default_rng(5)
    sched = random_small_schedule(rng, trap_1mhz)
    for amp in sample_thermal_amplitudes(1.0, 10, 21):
        ps = run_sequence(sched, trap_1mhz, amp, target_alpha=entangling_phase(sched, trap_1mhz.mass))
        fk = run_sequence_fock(sched, trap_1mhz, Coherent(amp), N=128,
                               target_alpha=entangling_phase(sched, trap_1mhz.mass))
        assert fk.fidelity == pytest.approx(ps.fidelity, abs=1e-6)


def test_branch_states_match_fock(trap_1mhz):
    rng = np.random.default_rng(9)
    sched = random_small_schedule(rng, trap_1mhz)
    amp0 = 0.4 + 0.3j
    ps = run_sequence(sched, trap_1mhz, amp0)
    fk = run_sequence_fock(sched, trap_1mhz, Coherent(amp0), N=128)
    N = 128
    for i, st in enumerate(ps.per_branch):
        assert abs(st.amp) <= 3
        expected = st.weight * np.exp(1j * st.phase) * coherent_vector(N, st.amp)
        assert np.max(np.abs(fk.state.block(i) - expected)) <= 1e-6
