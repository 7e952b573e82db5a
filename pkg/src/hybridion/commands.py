"""Command implementations shared by the CLI and the sweep driver.

Each ``cmd_*`` takes a :class:`RunConfig` and returns a result record: a plain
dict that validates against :data:`RECORD_SCHEMA`.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable

import jsonschema
import numpy as np

from . import __version__
from .circuit import (
    BiasConfig,
    CavityGeometry,
    CircuitParams,
    CouplingCapacitors,
    derive_circuit,
    effective_interaction,
    enhancement_factors,
    ion_charge_kappa,
    ion_ion_coupling,
)
from .config import ConfigError, RunConfig, sweep_values
from .core import CONST, TrapParams, branch_label, ion_species
from .decoherence import (
    ABSORPTION_MODEL,
    NoiseModel,
    SuperconductorParams,
    dephasing_rates,
    excited_fraction_from_absorption,
    kick_separation,
    noise_spectrum,
    photon_excited_resistance,
    thermal_resistance,
)
from .fockoracle import LeakageError, run_sequence_fock
from .gateplan import GatePlanResult, PlanningError, ScheduleError, plan_schedule
from .phasespace import (
    Coherent,
    FockDelegate,
    run_sequence,
    thermal_fidelity,
)

RECORD_VERSION = "1"
QUOTED_KAPPA_GHZ = 25.0  # kappa d_i / 2pi quoted for the example cavity
QUOTED_GAMMA_Q = 5e4  # 1/s, quoted charge dephasing for the illuminated cavity

RECORD_SCHEMA = {
    "type": "object",
    "required": ["command", "inputs_echo", "outputs", "warnings", "versions", "seed"],
    "additionalProperties": False,
    "properties": {
        "command": {"enum": ["design", "plan", "simulate", "noise", "sweep"]},
        "inputs_echo": {
            "type": "object",
            "additionalProperties": {"type": "object", "additionalProperties": {"type": "string"}},
        },
        "outputs": {"type": "object"},
        "warnings": {"type": "array", "items": {"type": "string"}},
        "versions": {
            "type": "object",
            "required": ["tool", "record"],
            "properties": {"tool": {"type": "string"}, "record": {"type": "string"}},
        },
        "seed": {"type": ["integer", "null"]},
    },
}


class InvariantBreach(RuntimeError):
    pass


def validate_record(rec: dict) -> dict:
    try:
        jsonschema.validate(rec, RECORD_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise InvariantBreach(f"result record failed schema validation: {exc.message}") from None
    return rec


def _record(command: str, cfg: RunConfig, outputs: dict, warns: list[str]) -> dict:
    seed = cfg.get("motional", "seed") if cfg.has("motional") else None
    rec = {
        "command": command,
        "inputs_echo": cfg.echo(),
        "outputs": _jsonable(outputs),
        "warnings": list(warns),
        "versions": {"tool": __version__, "record": RECORD_VERSION},
        "seed": seed,
    }
    return validate_record(rec)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


# --- builders ----------------------------------------------------------------


def build_circuit(cfg: RunConfig) -> tuple[CavityGeometry, CircuitParams, list[str]]:
    cfg.require("cavity")
    g = lambda k: cfg.get("cavity", k)  # noqa: E731
    try:
        geom = CavityGeometry(g("d0"), g("b0"), g("L"))
        caps = CouplingCapacitors(g("C_i"), g("C_m"), g("C_J"), g("C_g"))
    except ValueError as exc:
        raise ConfigError(f"cavity: {exc}") from None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        circ = derive_circuit(geom, caps, g("d_i"), g("convention"))
    return geom, circ, list(circ.warnings)


def build_trap(cfg: RunConfig) -> TrapParams:
    cfg.require("trap")
    try:
        sp = ion_species(cfg.get("trap", "species"), cfg.get("trap", "mass"))
        return TrapParams(cfg.get("trap", "omega_nu"), sp)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"trap: {exc.args[0]}") from None


def gate_kappa(cfg: RunConfig) -> tuple[float, str]:
    hk = cfg.get("gate", "hbar_kappa")
    if hk is not None:
        if not hk > 0:
            raise ConfigError("gate.hbar_kappa: must be > 0")
        return hk / CONST.hbar, "gate.hbar_kappa"
    if not cfg.has("cavity"):
        raise ConfigError("gate.hbar_kappa: required when no [cavity] section is given")
    _, circ, _ = build_circuit(cfg)
    return ion_charge_kappa(circ).kappa, "cavity"


def build_plan(cfg: RunConfig) -> tuple[TrapParams, GatePlanResult, str]:
    trap = build_trap(cfg)
    cfg.require("gate")
    kappa, source = gate_kappa(cfg)
    g = lambda k: cfg.get("gate", k)  # noqa: E731
    if g("target_alpha") <= 0:
        raise ConfigError("gate.target_alpha: must be > 0 (a zero phase gives a degenerate schedule)")
    try:
        plan = plan_schedule(trap.mass, kappa, g("delta_k"), g("n_l1"), g("t1"), g("t2"),
                             g("target_alpha"), g("z_l"))
    except (PlanningError, ScheduleError) as exc:
        raise ConfigError(f"gate: {exc}") from None
    return trap, plan, source


# --- commands ------------------------------------------------------------------


def cmd_design(cfg: RunConfig) -> dict:
    geom, circ, warns = build_circuit(cfg)
    kap = ion_charge_kappa(circ)
    bias = BiasConfig(cfg.get("cavity", "V_g"), cfg.get("cavity", "V_i"),
                      cfg.get("cavity", "C_ib"), cfg.get("cavity", "V_ib"))
    eff = effective_interaction(circ, bias)
    r0 = cfg.get("cavity", "r0") or geom.length_L
    enh = enhancement_factors(geom, circ.d_i, r0)
    kd = kap.kappa * circ.d_i / (2 * math.pi) / 1e9
    f_doubled = circ.omega_r_doubled / (2 * math.pi)
    f_lc = circ.omega_r_lc / (2 * math.pi)
    warns = warns + [
        f"omega_r conventions differ by 2: 2/sqrt(L_r C_r) -> {f_doubled / 1e12:.3g} THz, "
        f"1/sqrt(L_r C_r) -> {f_lc / 1e12:.3g} THz (quoted example: 1.5 THz)"
    ]
    out = {
        "C_r": circ.C_r,
        "L_r": circ.L_r,
        "C_t": circ.caps.C_t,
        "convention": circ.convention,
        "omega_r": circ.omega_r,
        "omega_r_doubled": circ.omega_r_doubled,
        "omega_r_lc": circ.omega_r_lc,
        "f_r_doubled": f_doubled,
        "f_r_lc": f_lc,
        "kappa": kap.kappa,
        "hbar_kappa": kap.hbar_kappa,
        "hbar_kappa_d_i": kap.hbar_kappa * circ.d_i,
        "kappa_d_i_over_2pi_GHz": kd,
        "quoted_kappa_ratio": QUOTED_KAPPA_GHZ / kd,
        "second_order_prefactor": kap.full_prefactor,
        "xx_coupling": eff.xx_coupling,
        "ion_force_shift": eff.ion_force_shift,
        "charge_bias_shift": eff.charge_bias_shift,
        "charge_bias_GHz": eff.charge_bias_GHz,
        "ion_ion_coupling": ion_ion_coupling(circ),
        "enhancement_ion_charge": enh.ion_charge,
        "enhancement_ion_ion": enh.ion_ion,
        "lumped_ratio": circ.C_r / circ.caps.largest,
    }
    return _record("design", cfg, out, warns)


def cmd_plan(cfg: RunConfig) -> dict:
    trap, plan, source = build_plan(cfg)
    warns = plan.schedule.validity_warnings(trap.omega_nu)
    out = {
        "species": trap.species.name,
        "mass": trap.mass,
        "kappa": plan.schedule.kappa,
        "kappa_source": source,
        "schedule": plan.schedule.as_dict(),
        "alpha": plan.alpha,
        "T_gate": plan.T_gate,
        "duration": plan.schedule.duration,
        "gate_time_residual": plan.time_identity_residual,
        "pulses": plan.schedule.pulse_table(),
    }
    return _record("plan", cfg, out, warns)


def _motional(cfg: RunConfig):
    cfg.require("motional")
    kind = cfg.get("motional", "kind")
    if kind == "coherent":
        return Coherent(cfg.get("motional", "amp0"))
    if kind == "fock":
        try:
            return FockDelegate(cfg.get("motional", "n"))
        except ValueError as exc:
            raise ConfigError(f"motional.n: {exc}") from None
    nbar, samples = cfg.get("motional", "nbar"), cfg.get("motional", "samples")
    if nbar < 0:
        raise ConfigError("motional.nbar: must be >= 0")
    if samples < 1:
        raise ConfigError("motional.samples: must be >= 1")
    return ("thermal", nbar, samples, cfg.get("motional", "seed"))


def _fock_ladder(cfg: RunConfig) -> list[int]:
    N = cfg.get("motional", "fock_N")
    top = cfg.get("motional", "fock_max_N")
    if N < 8 or top < N:
        raise ConfigError("motional.fock_N: need 8 <= fock_N <= fock_max_N")
    ladder = [N]
    while ladder[-1] < top:
        ladder.append(min(2 * ladder[-1], top))
    return ladder


def _fock_run(sched, trap, motional, ladder, target):
    last = None
    for N in ladder:
        try:
            return run_sequence_fock(sched, trap, motional, N, target)
        except LeakageError as exc:
            last = exc
    raise LeakageError(
        f"Fock engine leakage {last.leakage:.3g} at N={last.N}; raise motional.fock_max_N",
        last.leakage, last.N,
    )


def cmd_simulate(cfg: RunConfig, engine: str = "phasespace") -> dict:
    if engine not in ("phasespace", "fock", "both"):
        raise ConfigError(f"--engine: unknown engine {engine!r}")
    trap, plan, _ = build_plan(cfg)
    if trap.omega_nu <= 0:
        raise ConfigError("trap.omega_nu: simulation needs omega_nu > 0")
    sched = plan.schedule
    target = cfg.get("gate", "target_alpha")
    motional = _motional(cfg)
    warns = sched.validity_warnings(trap.omega_nu)
    out: dict[str, Any] = {"engine": engine, "closed_form_alpha": plan.alpha,
                           "T_gate": plan.T_gate, "omega_nu_T": trap.omega_nu * sched.duration}
    if isinstance(motional, tuple):
        _, nbar, samples, seed = motional
        if engine != "phasespace":
            raise ConfigError("motional.kind: thermal input is only supported by the phasespace engine")
        th = thermal_fidelity(sched, trap, nbar, samples, seed, target)
        zero = run_sequence(sched, trap, 0.0, target)
        out.update({"fidelity": th.mean, "infidelity": 1.0 - th.mean, "stderr": th.stderr, "samples": th.samples,
                    "nbar": nbar, "fidelity_nbar0": zero.fidelity,
                    "entangling_alpha": zero.entangling_alpha,
                    "residual_disp": zero.residual_disp})
        return _record("simulate", cfg, out, warns)
    if isinstance(motional, FockDelegate) and engine != "fock":
        raise ConfigError("motional.kind: Fock-state input requires --engine fock")
    if engine in ("phasespace", "both"):
        ps = run_sequence(sched, trap, motional, target)
        out.update({
            "fidelity": ps.fidelity,
            "infidelity": 1.0 - ps.fidelity,
            "entangling_alpha": ps.entangling_alpha,
            "alpha_error": abs(ps.entangling_alpha - plan.alpha),
            "residual_disp": ps.residual_disp,
            "per_branch": [
                {"branch": branch_label(st.branch), "amp": st.amp, "phase": st.phase}
                for st in ps.per_branch
            ],
        })
    if engine in ("fock", "both"):
        fr = _fock_run(sched, trap, motional, _fock_ladder(cfg), target)
        fock_out = {"fidelity": fr.fidelity, "infidelity": 1.0 - fr.fidelity,
                    "entangling_alpha": fr.entangling_alpha,
                    "N": fr.N, "leakage": fr.leakage, "norm_drift": fr.norm_drift}
        if engine == "fock":
            out.update(fock_out)
        else:
            out["fock"] = fock_out
            out["delta_fidelity"] = abs(ps.fidelity - fr.fidelity)
            out["delta_alpha"] = abs(ps.entangling_alpha - fr.entangling_alpha)
    return _record("simulate", cfg, out, warns)


def _resistance(cfg: RunConfig) -> tuple[float, dict, list[str]]:
    g = lambda k: cfg.get("noise", k)  # noqa: E731
    info: dict[str, Any] = {}
    warns: list[str] = []
    R_n = g("R_n")
    if g("excited_fraction") is not None:
        frac = g("excited_fraction")
        info["excited_fraction_source"] = "noise.excited_fraction"
    elif all(g(k) is not None for k in ("P_abs", "duration", "volume", "n0", "Delta")):
        ef = excited_fraction_from_absorption(g("P_abs"), g("duration"), g("Delta"), g("volume"), g("n0"))
        frac = ef.value
        info["excited_fraction_source"] = "absorption model"
        info["absorption_model"] = ABSORPTION_MODEL
        if ef.clamped:
            warns.append("absorbed energy exceeds the pair budget; excited fraction clamped to 1")
    else:
        raise ConfigError("noise.excited_fraction: give it, or P_abs, duration, volume, n0 and Delta")
    try:
        R_r = photon_excited_resistance(
            SuperconductorParams(1.0, 1.0, 1.0, 1.0, g("T"), R_n), frac)
    except ValueError as exc:
        raise ConfigError(f"noise.excited_fraction: {exc}") from None
    info["excited_fraction"] = frac
    if all(g(k) is not None for k in ("lambda_pen", "tau_n", "n0", "Delta")) and cfg.has("cavity"):
        sc = SuperconductorParams(g("lambda_pen"), g("tau_n"), g("n0"), g("Delta"), g("T"), R_n)
        geom, _, _ = build_circuit(cfg)
        w = g("omega_min")
        try:
            info["dark_resistance"] = thermal_resistance(sc, geom, w)
            info["dark_resistance_omega"] = w
        except ValueError as exc:
            warns.append(f"dark resistance skipped: {exc}")
    return R_r, info, warns


def noise_grid(cfg: RunConfig) -> np.ndarray:
    lo, hi, n = cfg.get("noise", "omega_min"), cfg.get("noise", "omega_max"), cfg.get("noise", "omega_points")
    if not (0 < lo < hi) or n < 2:
        raise ConfigError("noise.omega_points: need 0 < omega_min < omega_max and >= 2 points")
    return np.logspace(math.log10(lo), math.log10(hi), n)


def cmd_noise(cfg: RunConfig) -> dict:
    cfg.require("noise")
    _, circ, warns = build_circuit(cfg)
    R_r, info, w2 = _resistance(cfg)
    warns += w2
    T = cfg.get("noise", "T")
    model = NoiseModel(R_r, circ, T)
    omega = noise_grid(cfg)
    J = noise_spectrum(model, circ.caps, omega)
    x_r = cfg.get("noise", "x_r")
    plan = None
    if cfg.has("gate") and cfg.has("trap"):
        trap, plan, _ = build_plan(cfg)
        if x_r is None:
            s = plan.schedule
            x_r = kick_separation(s.delta_k, s.n_l1, s.t1, trap.mass)
            info["x_r_source"] = "kick separation hbar delta_k n_l1 t1 / m"
    if x_r is None:
        raise ConfigError("noise.x_r: required when no [gate]/[trap] sections are given")
    rates = dephasing_rates(model, circ.caps, x_r, circ.d_i)
    out: dict[str, Any] = {
        "R_r": R_r,
        **info,
        "T": T,
        "gamma_q": rates.gamma_q,
        "gamma_x": rates.gamma_x,
        "x_r": rates.x_r,
        "quoted_gamma_q_ratio": rates.gamma_q / QUOTED_GAMMA_Q,
        "R_k": CONST.R_k,
        "spectrum": {"omega": omega.tolist(), "J": J.tolist()},
    }
    if plan is not None:
        out["T_gate"] = plan.T_gate
        out["gamma_q_T_gate"] = rates.gamma_q * plan.T_gate
    return _record("noise", cfg, out, warns)


COMMANDS: dict[str, Callable[..., dict]] = {
    "design": cmd_design,
    "plan": cmd_plan,
    "simulate": cmd_simulate,
    "noise": cmd_noise,
}


def scalar_outputs(outputs: dict, prefix: str = "") -> dict[str, float]:
    """Flatten numeric leaves (dicts only, no lists) into dotted columns."""
    cols: dict[str, float] = {}
    for k, v in outputs.items():
        name = f"{prefix}{k}"
        if isinstance(v, bool):
            continue
        if isinstance(v, (int, float)) and v is not None:
            cols[name] = v
        elif isinstance(v, dict) and not {"re", "im"} >= set(v):
            cols.update(scalar_outputs(v, name + "."))
    return cols


def _sweep_point(args) -> dict:
    cfg, command, engine = args
    if command == "simulate":
        return cmd_simulate(cfg, engine)
    return COMMANDS[command](cfg)


def cmd_sweep(cfg: RunConfig, workers: int = 1, engine: str = "phasespace") -> dict:
    cfg.require("sweep")
    command = cfg.get("sweep", "command")
    path, values = sweep_values(cfg)
    base = RunConfig({k: v for k, v in cfg.sections.items() if k != "sweep"})
    jobs = [(base.with_value(path, v), command, engine) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    columns: list[str] = []
    rows = []
    warns: list[str] = []
    for v, rec in zip(values, results):
        sc = scalar_outputs(rec["outputs"])
        for c in sc:
            if c not in columns:
                columns.append(c)
        rows.append({"value": v, **sc})
        warns.extend(f"{path}={v!r}: {w}" for w in rec["warnings"])
    out = {"parameter": path, "command": command, "columns": ["value", *columns], "rows": rows}
    return _record("sweep", cfg, out, warns)


def sweep_csv(rec: dict) -> str:
    out = rec["outputs"]
    cols = out["columns"]
    header = [out["parameter"], *cols[1:]]
    lines = [",".join(header)]
    for row in out["rows"]:
        lines.append(",".join(repr(row[c]) if c in row else "" for c in cols))
    return "\n".join(lines) + "\n"


def table_csv(header: list[str], rows) -> str:
    lines = [",".join(header)]
    lines += [",".join(repr(float(x)) if not isinstance(x, str) else x for x in r) for r in rows]
    return "\n".join(lines) + "\n"


def record_csv(rec: dict) -> str:
    """Tabular view of a record for ``--format csv``."""
    cmd, out = rec["command"], rec["outputs"]
    if cmd == "sweep":
        return sweep_csv(rec)
    if cmd == "noise":
        sp = out["spectrum"]
        return table_csv(["omega", "J"], zip(sp["omega"], sp["J"]))
    if cmd == "simulate" and "per_branch" in out:
        rows = [(b["branch"], b["amp"]["re"], b["amp"]["im"], b["phase"]) for b in out["per_branch"]]
        return table_csv(["branch", "amp_re", "amp_im", "phase"], rows)
    sc = scalar_outputs(out)
    return "key,value\n" + "".join(f"{k},{v!r}\n" for k, v in sc.items())

