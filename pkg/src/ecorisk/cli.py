"""Command-line interface wiring ingestion, metrics, and interventions.

Subcommands
-----------
validate            check snapshot invariants and print a report
simulate            cascade an arbitrary contributor-state shock
rank-contributors   impact of every contributor's departure
rank-libraries      order libraries by rts|transitive|downloads|stars|age
intervene           sweep developer allocations over K for one strategy
report              concentration stats, rank comparisons, and figures

Every run writes CSV output plus a manifest.json capturing input digests and
parameters; runs with equal manifests produce byte-identical CSVs. Exit
status is 0 on success, 1 on validation or data failure, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import figures, intervention, metrics
from .cascade import TOLERANCE, default_max_iter, propagate
from .ingest import (
    EcosystemSnapshot,
    SnapshotError,
    break_cycles,
    load_snapshot,
    parse_timestamp,
    validate_snapshot,
)
from .manifest import RunManifest, file_digest
from .model import EcosystemModel, build_model, matrix_triplets
from .production import ProductionFunction


class CliError(Exception):
    """Data or validation failure that should exit with status 1."""


def _data_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--libraries", required=True, help="libraries.csv path")
    parser.add_argument("--dependencies", required=True, help="dependencies.csv path")
    parser.add_argument("--commits", required=True, help="commits.csv path")
    parser.add_argument("--bots", default=None, help="optional bots.csv path")
    parser.add_argument("--window-start", required=True,
                        help="observation window start, ISO-8601")
    parser.add_argument("--window-end", required=True,
                        help="observation window end, ISO-8601")
    parser.add_argument("--raw-commits", action="store_true",
                        help="commits.csv holds raw per-commit timestamps")
    parser.add_argument("--break-cycles", action="store_true",
                        help="drop the smallest edge of each dependency cycle")


def _engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--production", default="cobb-douglas",
                        choices=["cobb-douglas", "leontief", "linear"])
    parser.add_argument("--cd-exponent", type=float, default=0.5,
                        help="contributor exponent of the Cobb-Douglas form")
    parser.add_argument("--tolerance", type=float, default=TOLERANCE)
    parser.add_argument("--max-iter", type=int, default=None)
    parser.add_argument("--jobs", type=int, default=1,
                        help="concurrent scenario evaluations")
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--output-dir", default="ecorisk-out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ecorisk",
        description="Systemic risk in open-source ecosystems: cascade "
                    "simulation, rankings, and interventions.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("validate", help="check snapshot invariants")
    _data_flags(p)
    p.add_argument("--export-matrices", action="store_true",
                   help="write matrix triplet CSVs for debugging")
    p.add_argument("--output-dir", default="ecorisk-out")

    p = sub.add_parser("simulate", help="cascade one contributor-state shock")
    _data_flags(p)
    _engine_flags(p)
    p.add_argument("--remove", default=None,
                   help="comma-separated contributor ids to remove")
    p.add_argument("--state-csv", default=None,
                   help="CSV contributor_id,state with fractional states")
    p.add_argument("--immunize", default=None,
                   help="comma-separated library ids held at state 1")

    p = sub.add_parser("rank-contributors", help="impact of each departure")
    _data_flags(p)
    _engine_flags(p)

    p = sub.add_parser("rank-libraries", help="order libraries by importance")
    _data_flags(p)
    _engine_flags(p)
    p.add_argument("--method", required=True,
                   choices=["rts", "transitive", "downloads", "stars", "age"])
    p.add_argument("--transitive-direction", default="downstream",
                   choices=["downstream", "upstream"])

    p = sub.add_parser("intervene", help="sweep developer allocations over K")
    _data_flags(p)
    _engine_flags(p)
    p.add_argument("--strategy", required=True,
                   choices=list(intervention.STRATEGIES))
    p.add_argument("--k", required=True,
                   help="comma-separated ascending K values, e.g. 1,2,5,10")
    p.add_argument("--e", type=float, default=None,
                   help="commit volume per allocated developer "
                        "(default: 5/7 per window day)")
    p.add_argument("--transitive-direction", default="downstream",
                   choices=["downstream", "upstream"])
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("report", help="concentration and rank-comparison report")
    _data_flags(p)
    _engine_flags(p)
    p.add_argument("--top", type=int, default=10,
                   help="top-k cutoff for concentration shares")
    p.add_argument("--transitive-direction", default="downstream",
                   choices=["downstream", "upstream"])
    p.add_argument("--no-figures", action="store_true")
    return parser


def _load(args: argparse.Namespace) -> tuple[EcosystemSnapshot, list[str]]:
    window = (parse_timestamp(args.window_start), parse_timestamp(args.window_end))
    snapshot = load_snapshot(
        args.libraries, args.dependencies, args.commits, args.bots,
        window=window, raw_commits=args.raw_commits)
    notes: list[str] = []
    report = validate_snapshot(snapshot)
    if report.cycle_edges and args.break_cycles:
        snapshot, dropped = break_cycles(snapshot)
        notes.extend(f"broke cycle by dropping edge {dep} -> {on}"
                     for dep, on in dropped)
        report = validate_snapshot(snapshot)
    if not report.accepted:
        details = []
        if report.cycle_edges:
            details.append(f"cycle edges: {report.cycle_edges}")
        if report.dangling_refs:
            details.append(f"dangling refs: {report.dangling_refs}")
        raise CliError("snapshot rejected: " + "; ".join(details))
    return snapshot, notes


def _production(args: argparse.Namespace) -> ProductionFunction:
    return ProductionFunction(kind=args.production, exponent=args.cd_exponent)


def _manifest(args: argparse.Namespace, command: str,
              parameters: dict | None = None) -> RunManifest:
    digests = {
        "libraries": file_digest(args.libraries),
        "dependencies": file_digest(args.dependencies),
        "commits": file_digest(args.commits),
    }
    if args.bots:
        digests["bots"] = file_digest(args.bots)
    return RunManifest(
        command=command,
        input_digests=digests,
        window=(parse_timestamp(args.window_start).isoformat(),
                parse_timestamp(args.window_end).isoformat()),
        production=getattr(args, "production", "cobb-douglas"),
        cd_exponent=getattr(args, "cd_exponent", 0.5),
        tolerance=getattr(args, "tolerance", TOLERANCE),
        max_iter=getattr(args, "max_iter", None),
        seed=getattr(args, "seed", None),
        parameters=parameters or {},
    )


def _outdir(args: argparse.Namespace) -> Path:
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header: list[str], rows: list[tuple]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _cmd_validate(args: argparse.Namespace) -> int:
    window = (parse_timestamp(args.window_start), parse_timestamp(args.window_end))
    snapshot = load_snapshot(
        args.libraries, args.dependencies, args.commits, args.bots,
        window=window, raw_commits=args.raw_commits)
    report = validate_snapshot(snapshot)
    broken: list[tuple[str, str]] = []
    if report.cycle_edges and args.break_cycles:
        snapshot, broken = break_cycles(snapshot)
        report = validate_snapshot(snapshot)
        report.warnings.extend(
            f"broke cycle by dropping edge {dep} -> {on}" for dep, on in broken)

    print(f"libraries: {len(snapshot.libraries)}")
    print(f"contributors: {len(snapshot.contributors)}")
    print(f"commit cells: {len(snapshot.commit_counts)}")
    print(f"dependency edges: {len(snapshot.dependency_edges)}")
    print(f"dropped bot contributors: {report.dropped_bot_contributors}")
    for warning in report.warnings:
        print(f"warning: {warning}")
    if report.cycle_edges:
        print(f"cycle edges: {report.cycle_edges}")
    if report.dangling_refs:
        print(f"dangling refs: {report.dangling_refs}")
    print("accepted" if report.accepted else "rejected")

    if args.export_matrices and report.accepted:
        model = build_model(snapshot)
        out = _outdir(args)
        _write_csv(out / "contribution_matrix.csv",
                   ["row_id", "col_id", "value"],
                   matrix_triplets(model.contribution.shares,
                                   model.contributor_ids, model.library_ids))
        _write_csv(out / "dependency_matrix.csv",
                   ["row_id", "col_id", "value"],
                   matrix_triplets(model.dependency.shares,
                                   model.library_ids, model.library_ids))
        _manifest(args, "validate", {"export_matrices": True,
                                     "warnings": report.warnings}).write(out)
    return 0 if report.accepted else 1


def _contributor_state(args: argparse.Namespace, model: EcosystemModel) -> np.ndarray:
    sc = np.ones(len(model.contributor_ids))
    if args.state_csv:
        with open(args.state_csv, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames != ["contributor_id", "state"]:
                raise CliError(f"{args.state_csv}: expected header "
                               f"contributor_id,state")
            for row in reader:
                value = float(row["state"])
                if not 0.0 <= value <= 1.0:
                    raise CliError(f"state outside [0, 1] for "
                                   f"{row['contributor_id']!r}: {value}")
                sc[model.contributor_index(row["contributor_id"])] = value
    if args.remove:
        for cid in args.remove.split(","):
            sc[model.contributor_index(cid.strip())] = 0.0
    return sc


def _cmd_simulate(args: argparse.Namespace) -> int:
    snapshot, notes = _load(args)
    model = build_model(snapshot)
    sc = _contributor_state(args, model)
    immunized = frozenset(
        model.library_index(lib.strip())
        for lib in (args.immunize.split(",") if args.immunize else []))
    result = propagate(sc, model.contribution, model.dependency,
                       immunized=immunized, pf=_production(args),
                       tol=args.tolerance, max_iter=args.max_iter)
    if not result.converged:
        raise CliError(f"cascade did not converge within "
                       f"{args.max_iter or default_max_iter(model.topology.depth)} "
                       f"iterations")

    out = _outdir(args)
    rows = [(lib_id, float(result.final_state[i]), float(1.0 - result.final_state[i]))
            for i, lib_id in enumerate(model.library_ids)]
    _write_csv(out / "final_state.csv", ["library_id", "final_state", "risk"], rows)
    manifest = _manifest(args, "simulate", {
        "remove": args.remove or "", "state_csv": args.state_csv or "",
        "immunize": args.immunize or "", "iterations": result.iterations,
        "notes": notes,
    })
    manifest.write(out)
    print(f"wrote {out / 'final_state.csv'} ({result.iterations} iterations)")
    return 0


def _cmd_rank_contributors(args: argparse.Namespace) -> int:
    snapshot, notes = _load(args)
    model = build_model(snapshot)
    table = metrics.all_contributor_impacts(model, pf=_production(args),
                                            jobs=args.jobs)
    ranked = sorted(table.impacts.items(), key=lambda p: (-p[1], p[0]))
    out = _outdir(args)
    _write_csv(out / "contributors.csv", ["contributor_id", "impact"], ranked)
    _manifest(args, "rank-contributors",
              {"global_risk": table.global_risk, "notes": notes}).write(out)
    print(f"wrote {out / 'contributors.csv'} (global risk {table.global_risk!r})")
    return 0


def _cmd_rank_libraries(args: argparse.Namespace) -> int:
    snapshot, notes = _load(args)
    model = build_model(snapshot)
    out = _outdir(args)
    method = args.method
    if method == "rts":
        table = metrics.risk_transmission_scores(model, pf=_production(args),
                                                 jobs=args.jobs)
        ranked = sorted(table.scores.items(), key=lambda p: (-p[1], p[0]))
        _write_csv(out / "libraries.csv", ["library_id", "rts"], ranked)
        parameters = {"method": method, "baseline": table.baseline, "notes": notes}
    else:
        order = intervention.rank_libraries(
            model, method, seed=args.seed,
            transitive_direction=args.transitive_direction)
        scores = _method_scores(model, method, args.transitive_direction)
        rows = [(lib_id, scores[lib_id]) for lib_id in order]
        _write_csv(out / "libraries.csv", ["library_id", method], rows)
        parameters = {"method": method, "notes": notes}
    _manifest(args, "rank-libraries", parameters).write(out)
    print(f"wrote {out / 'libraries.csv'}")
    return 0


def _method_scores(model: EcosystemModel, method: str, direction: str) -> dict:
    if method == "transitive":
        counts = intervention.transitive_counts(model, direction)
        return {lib_id: int(c) for lib_id, c in zip(model.library_ids, counts)}
    if method == "downloads":
        return {lib_id: int(v) for lib_id, v in zip(model.library_ids, model.downloads)}
    if method == "stars":
        return {lib_id: int(v) for lib_id, v in zip(model.library_ids, model.stars)}
    if method == "age":
        return {lib_id: ts.isoformat()
                for lib_id, ts in zip(model.library_ids, model.created_at)}
    raise ValueError(f"unknown method {method!r}")


def _cmd_intervene(args: argparse.Namespace) -> int:
    snapshot, notes = _load(args)
    model = build_model(snapshot)
    try:
        k_values = tuple(int(k) for k in args.k.split(","))
    except ValueError:
        raise CliError(f"bad --k list: {args.k!r}")
    e = args.e if args.e is not None else intervention.default_commit_volume(
        snapshot.window_days())
    config = intervention.InterventionConfig(e=e, k_values=k_values)
    curve = intervention.intervention_sweep(
        model, args.strategy, config, pf=_production(args), seed=args.seed,
        transitive_direction=args.transitive_direction, jobs=args.jobs)

    out = _outdir(args)
    rows = [(curve.strategy, k, g, intervention.cumulative_reduction(curve, k))
            for k, g in curve.points]
    _write_csv(out / "intervention.csv",
               ["strategy", "k", "global_risk", "cumulative_reduction"], rows)
    manifest = _manifest(args, "intervene", {
        "strategy": args.strategy, "k_values": list(k_values), "e": e,
        "baseline": curve.baseline, "integration": "trapezoidal over recorded k",
        "notes": notes,
    })
    manifest.write(out)
    if not args.no_figures:
        figures.intervention_curves([curve], out / "intervention.png")
    print(f"wrote {out / 'intervention.csv'} (baseline {curve.baseline!r})")
    return 0


def _cmd_report(args: argparse.Namespace) -> int:
    snapshot, notes = _load(args)
    model = build_model(snapshot)
    pf = _production(args)
    out = _outdir(args)

    impacts = metrics.all_contributor_impacts(model, pf=pf, jobs=args.jobs)
    rts = metrics.risk_transmission_scores(model, pf=pf, jobs=args.jobs)
    ranked_impacts = sorted(impacts.impacts.items(), key=lambda p: (-p[1], p[0]))
    ranked_rts = sorted(rts.scores.items(), key=lambda p: (-p[1], p[0]))
    _write_csv(out / "contributors.csv", ["contributor_id", "impact"], ranked_impacts)
    _write_csv(out / "libraries_rts.csv", ["library_id", "rts"], ranked_rts)

    top = max(1, args.top)
    concentration_rows = []
    if impacts.global_risk > 0:
        concentration_rows.append(
            ("contributor_impact", top,
             metrics.top_share(impacts.impacts, top), impacts.global_risk))
    rts_total = sum(rts.scores.values())
    if rts_total > 0:
        concentration_rows.append(
            ("library_rts", top, metrics.top_share(rts.scores, top), rts_total))
    _write_csv(out / "concentration.csv",
               ["series", "k", "top_share", "total"], concentration_rows)

    # rank-vs-rank table: systemic rank against structural/popularity ranks
    transitive = intervention.transitive_counts(model, args.transitive_direction)
    direct = np.diff(model.dependency.shares.tocsr().indptr)
    series = {
        "rts": {lib_id: rts.scores.get(lib_id, 0.0) for lib_id in model.library_ids},
        "transitive_dependents": dict(zip(model.library_ids, map(int, transitive))),
        "direct_dependents": dict(zip(model.library_ids, map(int, direct))),
        "downloads": dict(zip(model.library_ids, map(int, model.downloads))),
        "stars": dict(zip(model.library_ids, map(int, model.stars))),
    }
    ranks = {name: _dense_ranks(vals) for name, vals in series.items()}
    rank_rows = [
        (lib_id, ranks["rts"][lib_id], ranks["transitive_dependents"][lib_id],
         ranks["direct_dependents"][lib_id], ranks["downloads"][lib_id],
         ranks["stars"][lib_id])
        for lib_id in sorted(model.library_ids,
                             key=lambda l: (ranks["rts"][l], l))]
    _write_csv(out / "rank_comparison.csv",
               ["library_id", "rts_rank", "transitive_rank", "direct_rank",
                "downloads_rank", "stars_rank"], rank_rows)

    correlation_rows = []
    for name in ("direct_dependents", "transitive_dependents", "stars", "downloads"):
        try:
            rho = metrics.spearman_rank_correlation(series["rts"], series[name])
        except ValueError:
            continue
        if np.isnan(rho):
            continue  # constant series, correlation undefined
        correlation_rows.append(("rts", name, rho))
    _write_csv(out / "correlations.csv", ["series_a", "series_b", "spearman"],
               correlation_rows)

    _manifest(args, "report", {
        "global_risk": impacts.global_risk, "top": top, "notes": notes,
    }).write(out)

    if not args.no_figures:
        figures.rank_curve([v for _, v in ranked_impacts if v > 0],
                           "contributor impact", "contributor impact by rank",
                           out / "contributor_impacts.png")
        figures.rank_curve([v for _, v in ranked_rts if v > 0],
                           "risk transmission score", "library RTS by rank",
                           out / "library_rts.png")
        figures.rank_scatter(
            [ranks["rts"][lib_id] for lib_id in model.library_ids],
            [ranks["transitive_dependents"][lib_id] for lib_id in model.library_ids],
            list(model.library_ids),
            "RTS rank", "transitive dependents rank",
            "systemic vs structural importance",
            out / "rts_vs_transitive.png")
    print(f"wrote report to {out}")
    return 0


def _dense_ranks(values: dict[str, float]) -> dict[str, int]:
    ordered = sorted(values.items(), key=lambda p: (-p[1], p[0]))
    return {lib_id: rank for rank, (lib_id, _) in enumerate(ordered, start=1)}


_COMMANDS = {
    "validate": _cmd_validate,
    "simulate": _cmd_simulate,
    "rank-contributors": _cmd_rank_contributors,
    "rank-libraries": _cmd_rank_libraries,
    "intervene": _cmd_intervene,
    "report": _cmd_report,
}


def execute(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.subcommand](args)
    except (SnapshotError, CliError, KeyError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(execute())


if __name__ == "__main__":
    main()
