"""Command-line front end: scenario execution, provenance, result files.

Every output file embeds the sha-256 of the config file plus the master
seed, and (config, seed) determines every output byte except wall_time
fields. Exit codes: 0 success, 1 runtime failure (partial results are
flushed first), 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .experiments import (
    CHEMICAL_ACCURACY,
    critical_depth_search,
    dissociation_sweep,
    entangler_phase_study,
    heisenberg_hamiltonian,
    heisenberg_sweep,
    molecular_hamiltonian,
    noise_scaling_study,
    sampling_scaling_study,
    single_run,
    task_seed,
)
from .fermion import (
    BINARY_TREE,
    JORDAN_WIGNER,
    PARITY,
    bogoliubov_diagonalize,
    encode,
    freeze_core,
    load_integrals,
    sector_from_electron_count,
    taper,
)
from .pauli import QubitHamiltonian, ground_energy, group_tpb
from .plotting import report_figure, save_png, trace_figure

__all__ = ["main", "entry"]

_SCHEMES = {
    "jordan_wigner": JORDAN_WIGNER,
    "parity": PARITY,
    "binary_tree": BINARY_TREE,
}
_CSV_HEADER = (
    "scenario",
    "parameter",
    "run",
    "seed",
    "e_final",
    "exact_reference",
    "error",
    "wall_time",
)


def _resolve(args, check_scenario: bool = True) -> tuple[RunConfig, str, Path, int | None]:
    """Load the config and fold in flag and environment overrides."""
    cfg, digest = load_config(args.config)
    # map and group only inspect the problem section, so they accept any
    # scenario's config; the run commands must match their declared scenario.
    if check_scenario and cfg.scenario != args.command:
        raise ConfigError(
            f"config declares scenario {cfg.scenario!r} but the command is"
            f" {args.command!r}"
        )
    updates = {}
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            raise ConfigError("seed: must fit in 64 bits")
        updates["seed"] = args.seed
    if args.tier is not None:
        updates["tier"] = args.tier
    if updates:
        cfg = replace(cfg, **updates)
    out = Path(args.out or os.environ.get("HEVQE_OUT") or cfg.out)
    threads = args.threads
    if threads is None:
        env = os.environ.get("HEVQE_THREADS")
        if env is not None:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError("HEVQE_THREADS must be an integer") from None
        else:
            threads = cfg.threads
    if threads is None:
        threads = os.cpu_count() or 1
    if threads < 1:
        raise ConfigError("threads: must be positive")
    out.mkdir(parents=True, exist_ok=True)
    return cfg, digest, out, threads


def _provenance(digest: str, seed: int) -> dict:
    return {"config_sha256": digest, "seed": seed}


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows, provenance: dict) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# config_sha256: {provenance['config_sha256']}\n")
        fh.write(f"# seed: {provenance['seed']}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _require_file(path_str: str, what: str) -> Path:
    path = Path(path_str)
    if not path.is_file():
        raise ConfigError(f"{what} not found: {path}")
    return path


def _load_problem(cfg: RunConfig) -> QubitHamiltonian:
    problem = cfg.problem
    if problem.heisenberg is not None:
        return heisenberg_hamiltonian(problem.heisenberg)
    if problem.hamiltonian_file is not None:
        path = _require_file(problem.hamiltonian_file, "hamiltonian file")
        try:
            return QubitHamiltonian.from_text(path.read_text())
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    path = _require_file(problem.integral_file, "integral file")
    try:
        return molecular_hamiltonian(
            path,
            _SCHEMES[problem.scheme],
            frozen_pairs=problem.frozen_pairs,
            taper_qubits=problem.taper,
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def _report_payload(report, provenance: dict) -> dict:
    payload = json.loads(report.to_json())
    payload["provenance"] = provenance
    return payload


def cmd_map(args) -> int:
    cfg, digest, out, _ = _resolve(args, check_scenario=False)
    problem = cfg.problem
    if problem.integral_file is None:
        raise ConfigError("map needs problem.integral_file")
    path = _require_file(problem.integral_file, "integral file")
    scheme = _SCHEMES[problem.scheme]
    try:
        fermionic = load_integrals(path)
        _, _, dressed = bogoliubov_diagonalize(fermionic)
        if problem.frozen_pairs:
            half = dressed.n_modes // 2
            frozen = tuple(range(problem.frozen_pairs)) + tuple(
                range(half, half + problem.frozen_pairs)
            )
            dressed = freeze_core(dressed, frozen)
        hq = encode(dressed, scheme)
        sector_text = "untapered"
        if problem.taper:
            if dressed.electron_count is None:
                raise ConfigError("integral file declares no electron count")
            sector = sector_from_electron_count(dressed.electron_count)
            hq = taper(hq, sector, scheme)
            sector_text = (
                f"m={sector.electron_count}"
                f" z_half={sector.z_half:+d} z_full={sector.z_full:+d}"
            )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    grouping = group_tpb(hq)
    header = (
        f"config_sha256: {digest}",
        f"seed: {cfg.seed}",
        f"scheme: {problem.scheme}",
        f"sector: {sector_text}",
        f"terms: {hq.term_count}",
        f"tpb_sets: {grouping.set_count}",
    )
    target = out / "hamiltonian.txt"
    target.write_text(hq.to_text(header=header))
    print(
        f"wrote {target}: {hq.n} qubits, {hq.term_count} terms,"
        f" {grouping.set_count} tpb sets ({problem.scheme}, {sector_text})"
    )
    return 0


def cmd_group(args) -> int:
    cfg, digest, out, _ = _resolve(args, check_scenario=False)
    if cfg.problem.source_count() == 0:
        raise ConfigError("group needs a problem source")
    hq = _load_problem(cfg)
    grouping = group_tpb(hq)
    lines = [
        f"# config_sha256: {digest}",
        f"# seed: {cfg.seed}",
        f"# terms: {hq.term_count}",
        f"# tpb_sets: {grouping.set_count}",
    ]
    for k, (members, basis) in enumerate(zip(grouping.sets, grouping.bases)):
        lines.append(f"set {k} basis {basis}")
        for idx in members:
            coeff, pauli = hq.terms[idx]
            lines.append(f"  {idx}\t{coeff!r}\t{pauli.letters}")
    target = out / "grouping.txt"
    target.write_text("\n".join(lines) + "\n")
    print(f"wrote {target}: {grouping.set_count} sets covering {hq.term_count} terms")
    return 0


def cmd_optimize(args) -> int:
    cfg, digest, out, threads = _resolve(args)
    provenance = _provenance(digest, cfg.seed)
    hq = _load_problem(cfg)
    ansatz = cfg.ansatz.build(hq.n)
    spsa_config = cfg.spsa.build(cfg.sampling.kind, cfg.budget)
    reference = ground_energy(hq)
    n_runs = cfg.run_count

    def run_one(idx: int):
        s = task_seed(cfg.seed, "optimize", 0.0, idx)
        trace, observed = single_run(
            hq, ansatz, cfg.noise, cfg.sampling, spsa_config, s
        )
        return idx, trace, observed

    def flush(idx, trace, observed):
        payload = json.loads(trace.to_json())
        payload["provenance"] = provenance
        payload["scenario"] = cfg.scenario
        payload["run"] = idx
        payload["observables"] = observed
        _write_json(out / f"trace_run{idx}.json", payload)
        return payload

    finals = {}
    try:
        if threads == 1 or n_runs == 1:
            for idx in range(n_runs):
                i, trace, observed = run_one(idx)
                flush(i, trace, observed)
                finals[i] = trace.e_final
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                for i, trace, observed in pool.map(run_one, range(n_runs)):
                    flush(i, trace, observed)
                    finals[i] = trace.e_final
    except Exception as exc:
        _write_json(
            out / "error.json",
            {
                "provenance": provenance,
                "error": str(exc),
                "completed_runs": sorted(finals),
            },
        )
        raise
    energies = [finals[i] for i in range(n_runs)]
    best = min(energies)
    error = best - reference
    verdict = "reached" if abs(error) <= CHEMICAL_ACCURACY else "not reached"
    summary = {
        "provenance": provenance,
        "scenario": cfg.scenario,
        "runs": n_runs,
        "energies": energies,
        "E_f": best,
        "exact_reference": reference,
        "error": error,
        "chemical_accuracy": verdict,
    }
    _write_json(out / "summary.json", summary)
    print(
        f"E_f {best:.8f}  exact {reference:.8f}  error {error:.3e}"
        f"  chemical accuracy {verdict}"
    )
    return 0


def _emit_report(report, provenance: dict, out: Path, stem: str) -> dict:
    payload = _report_payload(report, provenance)
    _write_json(out / f"{stem}.json", payload)
    _write_csv(out / f"{stem}.csv", _CSV_HEADER, report.csv_rows()[1:], provenance)
    return payload


def cmd_sweep(args) -> int:
    cfg, digest, out, threads = _resolve(args)
    provenance = _provenance(digest, cfg.seed)
    points = [
        (distance, str(_require_file(path, "integral file")))
        for distance, path in cfg.problem.integral_files
    ]
    report = dissociation_sweep(
        points,
        scheme=_SCHEMES[cfg.problem.scheme],
        frozen_pairs=cfg.problem.frozen_pairs,
        depth=cfg.ansatz.depth,
        topology=cfg.ansatz.topology,
        entangler_kind=cfg.ansatz.entangler_kind,
        phase=cfg.ansatz.phase,
        duration=cfg.ansatz.duration,
        variant=cfg.ansatz.variant,
        noise=cfg.noise,
        sampling=cfg.sampling,
        spsa_config=cfg.spsa.build(cfg.sampling.kind, cfg.budget),
        n_runs=cfg.run_count,
        seed=cfg.seed,
        threads=threads,
    )
    _emit_report(report, provenance, out, "report")
    for point in report.points:
        print(
            f"distance {point.parameter:g}: best {min(point.energies):.8f}"
            f"  exact {point.exact_reference:.8f}"
        )
    return 0


def cmd_heisenberg(args) -> int:
    cfg, digest, out, threads = _resolve(args)
    provenance = _provenance(digest, cfg.seed)
    section = cfg.problem.heisenberg
    j_values = cfg.study.j_values or (section.j,)
    report = heisenberg_sweep(
        j_values,
        b=section.b,
        depth=cfg.ansatz.depth,
        topology=cfg.ansatz.topology,
        entangler_kind=cfg.ansatz.entangler_kind,
        phase=cfg.ansatz.phase,
        duration=cfg.ansatz.duration,
        variant=cfg.ansatz.variant,
        noise=cfg.noise,
        sampling=cfg.sampling,
        spsa_config=cfg.spsa.build(cfg.sampling.kind, cfg.budget),
        n_runs=cfg.run_count,
        seed=cfg.seed,
        n_qubits=section.n_qubits,
        edges=section.edges,
        threads=threads,
    )
    _emit_report(report, provenance, out, "report")
    for point in report.points:
        print(
            f"J {point.parameter:g}: best {min(point.energies):.8f}"
            f"  exact {point.exact_reference:.8f}"
        )
    return 0


def cmd_depth_search(args) -> int:
    cfg, digest, out, threads = _resolve(args)
    provenance = _provenance(digest, cfg.seed)
    hq = _load_problem(cfg)
    result = critical_depth_search(
        hq,
        topology=cfg.ansatz.topology,
        seed=cfg.seed,
        variant=cfg.ansatz.variant,
        budget=cfg.budget,
        n_runs=cfg.run_count,
        d_max=cfg.study.d_max,
        phase=cfg.ansatz.phase,
        target=cfg.study.target,
        threads=threads,
    )
    payload = {
        "provenance": provenance,
        "scenario": cfg.scenario,
        "critical_depth": result.critical_depth,
        "target": result.target,
        "mean_errors": [[d, e] for d, e in result.mean_errors],
        "reports": [_report_payload(r, provenance) for r in result.reports],
    }
    _write_json(out / "depth_search.json", payload)
    rows = []
    for report in result.reports:
        rows.extend(report.csv_rows()[1:])
    _write_csv(out / "depth_search.csv", _CSV_HEADER, rows, provenance)
    if result.critical_depth is None:
        print(f"no depth up to {cfg.study.d_max} reached target {result.target:g}")
    else:
        print(f"critical depth {result.critical_depth} for target {result.target:g}")
    return 0


def cmd_phase_study(args) -> int:
    cfg, digest, out, threads = _resolve(args)
    provenance = _provenance(digest, cfg.seed)
    hq = _load_problem(cfg)
    depths = tuple(d for d in cfg.study.depths if d >= 1)
    if not depths:
        raise ConfigError("study.depths: phase study needs depths of at least 1")
    result = entangler_phase_study(
        hq,
        depths=depths,
        phases=cfg.study.phases,
        seed=cfg.seed,
        topology=cfg.ansatz.topology,
        budget=cfg.budget,
        n_runs=cfg.run_count,
        variant=cfg.ansatz.variant,
        threads=threads,
    )
    payload = {
        "provenance": provenance,
        "scenario": cfg.scenario,
        "depths": [
            {"depth": depth, "report": _report_payload(report, provenance)}
            for depth, report in result.reports
        ],
        "concurrence_curve": [[phase, c] for phase, c in result.concurrence_curve],
    }
    _write_json(out / "phase_study.json", payload)
    rows = []
    for _, report in result.reports:
        rows.extend(report.csv_rows()[1:])
    _write_csv(out / "phase_study.csv", _CSV_HEADER, rows, provenance)
    print(f"phase study over depths {list(depths)} done; see {out}")
    return 0


def cmd_noise_scaling(args) -> int:
    cfg, digest, out, threads = _resolve(args)
    provenance = _provenance(digest, cfg.seed)
    hq = _load_problem(cfg)
    results = noise_scaling_study(
        hq,
        depths=cfg.study.depths,
        xi_values=cfg.study.xi_values,
        seed=cfg.seed,
        topology=cfg.ansatz.topology,
        variant=cfg.ansatz.variant,
        budget=cfg.budget,
        n_runs=cfg.run_count,
        phase=cfg.ansatz.phase,
        threads=threads,
    )
    payload = {
        "provenance": provenance,
        "scenario": cfg.scenario,
        "depths": [
            {"depth": depth, "report": _report_payload(report, provenance)}
            for depth, report in results
        ],
    }
    _write_json(out / "noise_scaling.json", payload)
    rows = []
    for _, report in results:
        rows.extend(report.csv_rows()[1:])
    _write_csv(out / "noise_scaling.csv", _CSV_HEADER, rows, provenance)
    print(f"noise scaling over depths {list(cfg.study.depths)} done; see {out}")
    return 0


def cmd_sampling_scaling(args) -> int:
    cfg, digest, out, threads = _resolve(args)
    provenance = _provenance(digest, cfg.seed)
    hq = _load_problem(cfg)
    report = sampling_scaling_study(
        hq,
        depth=cfg.ansatz.depth,
        shot_values=cfg.study.shot_values,
        seed=cfg.seed,
        topology=cfg.ansatz.topology,
        variant=cfg.ansatz.variant,
        entangler_kind=cfg.ansatz.entangler_kind,
        phase=cfg.ansatz.phase,
        budget=cfg.budget,
        n_runs=cfg.run_count,
        threads=threads,
        surrogate_states=cfg.sampling.surrogate_states,
        reference_shots=cfg.sampling.reference_shots,
        final_shots=cfg.sampling.final_shots,
    )
    _emit_report(report, provenance, out, "sampling_scaling")
    for point in report.points:
        median_err = sorted(point.errors)[len(point.errors) // 2]
        print(f"shots {int(point.parameter)}: median error {median_err:.3e}")
    return 0


def _classify(payloads) -> str:
    kinds = set()
    for payload in payloads:
        if "points" in payload:
            kinds.add("report")
        elif "iterations" in payload:
            kinds.add("trace")
        else:
            raise ConfigError("input is neither a report nor a trace file")
    if len(kinds) != 1:
        raise ConfigError("cannot mix report and trace inputs")
    return kinds.pop()


def _merged_provenance(payloads) -> dict:
    tags = sorted(
        {
            (p.get("provenance", {}).get("config_sha256", "unknown"),
             p.get("provenance", {}).get("seed", p.get("seed", "unknown")))
            for p in payloads
        }
    )
    if len(tags) == 1:
        return {"config_sha256": tags[0][0], "seed": tags[0][1]}
    return {
        "config_sha256": "+".join(str(t[0]) for t in tags),
        "seed": "+".join(str(t[1]) for t in tags),
    }


def cmd_report(args) -> int:
    out = Path(args.out or os.environ.get("HEVQE_OUT") or "out")
    out.mkdir(parents=True, exist_ok=True)
    payloads = []
    for name in args.files:
        path = _require_file(name, "input file")
        try:
            payloads.append(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from None
    kind = _classify(payloads)
    provenance = _merged_provenance(payloads)
    if kind == "report":
        scenarios = {p["scenario"] for p in payloads}
        if len(scenarios) != 1:
            raise ConfigError(
                f"inputs mix scenarios: {', '.join(sorted(scenarios))}"
            )
        scenario = scenarios.pop()
        merged = {
            "scenario": scenario,
            "seed": provenance["seed"],
            "points": sorted(
                (pt for p in payloads for pt in p["points"]),
                key=lambda pt: pt["parameter"],
            ),
        }
        rows = []
        percentile_rows = []
        for pt in merged["points"]:
            for run, trace in enumerate(pt["runs"]):
                rows.append(
                    [
                        scenario,
                        pt["parameter"],
                        run,
                        trace["seed"],
                        trace["E_f"],
                        pt["exact_reference"],
                        trace["E_f"] - pt["exact_reference"],
                        trace["wall_time"],
                    ]
                )
            band = pt["percentiles"]
            percentile_rows.append(
                [
                    scenario,
                    pt["parameter"],
                    len(pt["runs"]),
                    pt["min"],
                    band["5"],
                    band["25"],
                    band["50"],
                    band["75"],
                    band["95"],
                    pt["exact_reference"],
                ]
            )
        _write_csv(out / "report.csv", _CSV_HEADER, rows, provenance)
        _write_csv(
            out / "percentiles.csv",
            (
                "scenario",
                "parameter",
                "n_runs",
                "min",
                "p5",
                "p25",
                "p50",
                "p75",
                "p95",
                "exact_reference",
            ),
            percentile_rows,
            provenance,
        )
        save_png(report_figure(merged), out / "report.png")
        print(
            f"wrote {out / 'report.csv'}, {out / 'percentiles.csv'},"
            f" {out / 'report.png'} ({len(rows)} rows)"
        )
        return 0
    rows = []
    for payload in payloads:
        rows.append(
            [
                payload.get("scenario", "optimize"),
                0.0,
                payload.get("run", 0),
                payload["seed"],
                payload["E_f"],
                "",
                "",
                payload["wall_time"],
            ]
        )
    rows.sort(key=lambda r: (r[3], r[2]))
    _write_csv(out / "report.csv", _CSV_HEADER, rows, provenance)
    save_png(trace_figure(payloads[0]), out / "trace.png")
    print(f"wrote {out / 'report.csv'} and {out / 'trace.png'} ({len(rows)} rows)")
    return 0


_HANDLERS = {
    "map": cmd_map,
    "group": cmd_group,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "heisenberg": cmd_heisenberg,
    "depth-search": cmd_depth_search,
    "phase-study": cmd_phase_study,
    "noise-scaling": cmd_noise_scaling,
    "sampling-scaling": cmd_sampling_scaling,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hevqe",
        description="Variational ground-state toolkit: mapping, optimization,"
        " and scaling studies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in (
        "map",
        "group",
        "optimize",
        "sweep",
        "heisenberg",
        "depth-search",
        "phase-study",
        "noise-scaling",
        "sampling-scaling",
    ):
        cmd = sub.add_parser(name, help=f"run the {name} scenario")
        cmd.add_argument("--config", required=True, help="YAML run configuration")
        cmd.add_argument("--seed", type=int, default=None, help="override config seed")
        cmd.add_argument(
            "--tier", choices=("smoke", "paper"), default=None, help="budget tier"
        )
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--threads", type=int, default=None, help="worker threads")
        cmd.set_defaults(handler=_HANDLERS[name])
    rep = sub.add_parser("report", help="aggregate trace or report files")
    rep.add_argument("files", nargs="+", help="trace or report JSON files")
    rep.add_argument("--out", default=None, help="output directory")
    rep.set_defaults(handler=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - partial results were flushed
        print(f"error: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    sys.exit(main())
