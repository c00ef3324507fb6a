"""Command-line interface: ``holosta compile|simulate|sweep|export``.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__, units
from .dynamics import (
    QUBIT,
    NoiseModel,
    avg_gate_fidelity,
    embed_qubit_state,
    gate_overlap,
    lindblad_evolve,
    propagate_unitary,
    qubit_block,
    state_fidelity,
)
from .errors import NumericalError
from .gates import (
    GateSpec,
    compile_nhqc_baseline,
    compile_noncyclic_gate,
    minimize_area,
    pulse_area,
    reference_envelope,
    scale_to_rabi_cap,
)
from .io import (
    ConfigError,
    RunConfig,
    dumps_record,
    format_waveform,
    load_config,
    merge_config,
    sweep_table,
    write_table,
)
from .platforms import PLATFORMS, map_to_platform
from .sweeps import (
    _provenance,
    area_vs_A,
    compare_schemes,
    default_theta_grid,
    default_workers,
    grid_statistics,
    population_trace,
    robustness_grid,
    robustness_schedule,
    smin_vs_theta,
)

EXIT_OK, EXIT_NUMERICAL, EXIT_USAGE = 0, 1, 2

FIGURE_GATES = {
    "4": [(math.pi / 2, math.pi / 2), (math.pi / 4, math.pi / 2)],
    "5": [(math.pi / 2, 0.0), (math.pi / 4, 0.0)],
}
TRACE_GATES = [(math.pi / 2, math.pi / 2), (math.pi / 4, math.pi / 2)]


# -- argument parsing -------------------------------------------------------


def _amplitude(text: str):
    if text == "auto":
        return "auto"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number or 'auto', got {text!r}") from None


def _pair(text: str) -> tuple[float, float]:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected two comma-separated numbers, got {text!r}")
    return float(parts[0]), float(parts[1])


def _grid(text: str) -> tuple[float, float, int]:
    """``lo,hi,n``; an empty or zero-point grid is rejected later as a usage error."""
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        return (0.0, 0.0, 0)
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected lo,hi,n, got {text!r}")
    return float(parts[0]), float(parts[1]), int(parts[2])


def _common(parser: argparse.ArgumentParser) -> None:
    g = parser.add_argument_group("gate and schedule")
    g.add_argument("--config", type=Path, help="JSON file of run settings; flags override it")
    g.add_argument("--theta", type=float, help="rotation angle in rad, in [0, pi]")
    g.add_argument("--phi", type=float, help="rotation-axis phase in rad")
    g.add_argument("--A", type=_amplitude, help="profile amplitude, or 'auto' to minimize the pulse area")
    g.add_argument("--T", type=float, help="gate time in ns (no Rabi-cap rescaling)")
    g.add_argument("--rabi-cap", dest="rabi_cap", type=float, help="peak coupling in rad/ns")
    g.add_argument("--dt", type=float, help="sample spacing in ns, before any Rabi-cap rescaling")
    g.add_argument("--scheme", choices=["noncyclic", "nhqc", "both"])
    n = parser.add_argument_group("noise")
    n.add_argument("--gamma1", type=float, help="decay rate in rad/ns")
    n.add_argument("--gamma2", type=float, help="dephasing rate in rad/ns")
    n.add_argument("--eps", type=_pair, help="static Rabi errors eps0,eps1")
    r = parser.add_argument_group("run")
    r.add_argument("--workers", type=int, help="worker processes (default: $HOLOSTA_WORKERS or 1)")
    r.add_argument(
        "--deterministic",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="omit wall-clock timestamps so reruns are byte-identical (default on)",
    )
    r.add_argument("-o", "--out", dest="output", help="output path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="holosta", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compile", help="compile a gate and write its waveform")
    _common(p)
    p.add_argument("--platform", choices=PLATFORMS)
    p.add_argument("--summary", type=Path, help="summary record path (default: <out>.json)")

    p = sub.add_parser("simulate", help="evolve a compiled gate and report fidelities")
    _common(p)
    p.add_argument("--metric", choices=["state", "gate", "both"])
    p.add_argument("--n-states", dest="n_states", type=int, help="input states for the gate average")
    p.add_argument(
        "--record",
        nargs="?",
        const="trace.csv",
        help="also write the population/fidelity time series (default path trace.csv)",
    )

    p = sub.add_parser("sweep", help="run a parameter sweep or a figure preset")
    _common(p)
    p.add_argument("--fig", choices=["2b", "2c", "3", "4", "5"])
    p.add_argument("--metric", choices=["state", "gate"], help="robustness-grid metric (default gate)")
    p.add_argument("--grid", dest="eps_grid", type=_grid, help="eps grid lo,hi,n per axis")
    p.add_argument("--A-grid", dest="A_grid", type=_grid, help="amplitude grid lo,hi,n (fig 2b)")
    p.add_argument("--theta-points", dest="theta_points", type=int, help="theta grid size (fig 2c)")
    p.add_argument("--n-states", dest="n_states", type=int)

    p = sub.add_parser("export", help="write a platform-labelled waveform")
    _common(p)
    p.add_argument("--platform", choices=PLATFORMS, required=True)
    p.add_argument("--format", choices=["text", "csv"], default="text")
    return parser


_CONFIG_KEYS = (
    "theta", "phi", "A", "T", "rabi_cap", "dt", "gamma1", "gamma2", "scheme", "metric",
    "platform", "n_states", "workers", "deterministic", "output", "eps_grid", "A_grid",
    "theta_points",
)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    file_values = load_config(args.config) if args.config else {}
    overrides = {k: getattr(args, k, None) for k in _CONFIG_KEYS}
    if args.eps is not None:
        overrides["eps0"], overrides["eps1"] = args.eps
    return merge_config(file_values, overrides)


# -- shared steps -----------------------------------------------------------


def _spec(cfg: RunConfig) -> GateSpec:
    try:
        return GateSpec(cfg.theta, cfg.phi)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _noise(cfg: RunConfig) -> NoiseModel:
    try:
        return NoiseModel(cfg.gamma1, cfg.gamma2, cfg.eps0, cfg.eps1)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def build_schedule(cfg: RunConfig, scheme: str | None = None):
    """Compile the configured gate; return ``(schedule, A)``."""
    spec = _spec(cfg)
    scheme = cfg.scheme if scheme is None else scheme
    if scheme == "both":
        raise ConfigError("choose a single scheme for this command")
    T = units.REFERENCE_T if cfg.T is None else cfg.T
    if scheme == "noncyclic":
        A = minimize_area(spec.theta, T, dt=cfg.dt).A if cfg.A == "auto" else float(cfg.A)
        sched = compile_noncyclic_gate(spec, A, T, cfg.dt)
    else:
        A = None
        sched = compile_nhqc_baseline(spec, reference_envelope(cfg.dt))
        if cfg.T is not None:
            sched = sched.rescaled(cfg.T / sched.T)
    if cfg.T is None:
        sched = scale_to_rabi_cap(sched, cfg.cap)
    return sched, A


def _summary(cfg: RunConfig, sched, A) -> dict:
    spec = _spec(cfg)
    U = propagate_unitary(sched)
    return {
        "gate": spec.as_dict(),
        "scheme": sched.scheme,
        "A": A,
        "S": pulse_area(sched),
        "T": sched.T,
        "dt": sched.dt,
        "peak_coupling": sched.peak_coupling("element"),
        "gate_residual": 1.0 - gate_overlap(spec.unitary(), qubit_block(U)),
        "leakage": float(np.max(np.abs(U[1, QUBIT]) ** 2)),
    }


def _record(cfg: RunConfig, command: str, **body) -> dict:
    meta = _provenance(cfg.deterministic, command=command)
    return {"metadata": meta, "config": cfg.as_dict(), **body}


def _emit(text: str, path) -> None:
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _sibling(path, suffix: str, tag: str = "") -> Path:
    p = Path(path)
    return p.with_name(f"{p.stem}{tag}{suffix}")


# -- subcommands ------------------------------------------------------------


def cmd_compile(args, cfg: RunConfig) -> int:
    sched, A = build_schedule(cfg)
    out = Path(cfg.output or "waveform.txt")
    platform = map_to_platform(_spec(cfg), cfg.platform) if cfg.platform else None
    out.write_text(format_waveform(sched, platform))
    summary = _summary(cfg, sched, A)
    summary["waveform"] = str(out)
    text = dumps_record(_record(cfg, "compile", summary=summary))
    _emit(text, args.summary or _sibling(out, ".json"))
    sys.stdout.write(
        f"A={summary['A']} S={summary['S']:.6f} T={summary['T']:.6f} "
        f"residual={summary['gate_residual']:.3e} -> {out}\n"
    )
    return EXIT_OK


def cmd_simulate(args, cfg: RunConfig) -> int:
    spec = _spec(cfg)
    noise = _noise(cfg)
    sched, A = build_schedule(cfg)
    result: dict = {"A": A, "T": sched.T, "S": pulse_area(sched)}
    if cfg.metric in ("state", "both") or args.record:
        psi0 = embed_qubit_state([1.0, 0.0])
        out = lindblad_evolve(sched, np.outer(psi0, psi0), noise, record=bool(args.record))
        rho = out[0] if args.record else out
        target = spec.unitary() @ np.array([1.0, 0.0])
        result["F"] = state_fidelity(rho, target)
        result["populations"] = np.real(np.diag(rho))
        if args.record:
            rec = out[1]
            f = embed_qubit_state(target)
            fid = np.real(np.einsum("i,kij,j->k", f.conj(), rec.rho, f))
            pops = rec.populations
            write_table(
                args.record,
                {"t": rec.t, "P0": pops[:, 0], "Pe": pops[:, 1], "P1": pops[:, 2],
                 "trace": pops.sum(axis=1), "F": fid},
            )
            result["trace_file"] = str(args.record)
    if cfg.metric in ("gate", "both"):
        result["F_G"] = avg_gate_fidelity(spec, sched, noise, cfg.n_states)
    _emit(dumps_record(_record(cfg, "simulate", result=result)), cfg.output)
    return EXIT_OK


def _schemes(cfg: RunConfig) -> list[str]:
    return ["noncyclic", "nhqc"] if cfg.scheme == "both" else [cfg.scheme]


def _gate_tag(theta: float, phi: float) -> str:
    return f"_theta{theta / math.pi:.4g}pi_phi{phi / math.pi:.4g}pi"


def cmd_sweep(args, cfg: RunConfig) -> int:
    out = Path(cfg.output or f"sweep_{args.fig or 'grid'}.json")
    metric = cfg.metric if cfg.metric in ("state", "gate") else "gate"
    workers = default_workers() if cfg.workers is None else cfg.workers
    body: dict = {"fig": args.fig}

    if args.fig == "2b":
        res = area_vs_A(cfg.theta, cfg.T or units.REFERENCE_T, cfg.grid("A_grid"))
        write_table(_sibling(out, ".csv"), sweep_table(res))
        body["results"] = [_result_dict(res)]
    elif args.fig == "2c":
        res = smin_vs_theta(default_theta_grid(cfg.theta_points), cfg.T or units.REFERENCE_T)
        write_table(_sibling(out, ".csv"), sweep_table(res))
        body["results"] = [_result_dict(res)]
    elif args.fig == "3":
        noise = _noise(cfg)
        body["results"] = []
        for theta, phi in TRACE_GATES:
            tr = population_trace(GateSpec(theta, phi), (1.0, 0.0), noise)
            tag = _gate_tag(theta, phi)
            write_table(_sibling(out, ".csv", tag), tr.columns())
            body["results"].append({"metadata": tr.metadata, "F_final": tr.fidelity[-1]})
    else:
        gates = FIGURE_GATES.get(args.fig, [(cfg.theta, cfg.phi)])
        eps = cfg.grid("eps_grid")
        noise = NoiseModel(cfg.gamma1, cfg.gamma2)
        body["results"], body["comparisons"] = [], []
        for theta, phi in gates:
            spec = _check_spec(theta, phi)
            grids = {}
            for scheme in _schemes(cfg):
                sched = robustness_schedule(spec, scheme, cfg.cap)
                res = robustness_grid(
                    spec, scheme, eps, eps, noise, metric,
                    schedule=sched, n_states=cfg.n_states, workers=workers,
                )
                res.metadata["statistics"] = grid_statistics(res)
                grids[scheme] = res
                write_table(_sibling(out, ".csv", f"_{scheme}{_gate_tag(theta, phi)}"), sweep_table(res))
                body["results"].append(_result_dict(res))
            if len(grids) == 2:
                cmp = compare_schemes(grids["noncyclic"], grids["nhqc"])
                body["comparisons"].append({"gate": spec.as_dict(), **cmp})
    out.write_text(dumps_record(_record(cfg, "sweep", **body)))
    sys.stdout.write(f"wrote {out}\n")
    for c in body.get("comparisons", []):
        sys.stdout.write(
            f"theta={c['gate']['theta']:.4f} phi={c['gate']['phi']:.4f}: "
            f"noncyclic mean {c['mean']:.6f}, nhqc mean {c['baseline_mean']:.6f}, "
            f"win fraction {c['win_fraction']:.3f}\n"
        )
    return EXIT_OK


def _check_spec(theta: float, phi: float) -> GateSpec:
    try:
        return GateSpec(theta, phi)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _result_dict(res) -> dict:
    return {
        "axes": res.axes,
        "values": res.values,
        "extra": res.extra,
        "metadata": res.metadata,
    }


def cmd_export(args, cfg: RunConfig) -> int:
    sched, _ = build_schedule(cfg)
    mapping = map_to_platform(_spec(cfg), cfg.platform)
    if args.format == "text":
        out = Path(cfg.output or f"waveform_{cfg.platform}.txt")
        out.write_text(format_waveform(sched, mapping))
    else:
        out = Path(cfg.output or f"waveform_{cfg.platform}.csv")
        n = sched.n_per_segment
        phi = np.where(np.arange(len(sched.t)) <= n, sched.phi_segment1, sched.phi_segment2)
        write_table(out, {"t": sched.t, "omega0": sched.omega0, "omega1": sched.omega1, "phi": phi})
    sys.stdout.write(f"{mapping.as_header()} -> {out}\n")
    return EXIT_OK


COMMANDS = {
    "compile": cmd_compile,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "export": cmd_export,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except ConfigError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"holosta: error: {exc}\n")
        return EXIT_USAGE
    except NumericalError as exc:
        sys.stderr.write(f"holosta: numerical failure: {exc}\n")
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
