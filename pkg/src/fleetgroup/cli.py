"""Command-line front end: generate | cluster | sweep | report."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from fleetgroup.community import detect_communities
from fleetgroup.errors import FleetGroupError, TooFewPoints
from fleetgroup.fleet_data import load_fleet_csv
from fleetgroup.graph import threshold_graph, write_matrix_csv
from fleetgroup.meta_validation import SweepConfig, find_elbow, lambda_sweep
from fleetgroup.pipeline import dissimilarity
from fleetgroup.regression import BasisSpec
from fleetgroup.synthgen import KIND_ALIASES, KINDS, ScenarioConfig, generate_scenario, read_labels_csv, write_labeled_fleet

log = logging.getLogger("fleetgroup")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
EXIT_RECORD_FAILURES = 3

DEFAULTS = {
    "degree": 1,
    "quantiles": 40,
    "split": 0.7,
    "seed": 0,
    "elbow_clear": 0.5,
    "elbow_fuzzy": 0.15,
    "kind": "clear_grouping",
    "n_curves": 30,
    "points": 100,
    "noise": 1.0,
}


def _write_csv(path: Path, header, rows) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _fmt(v: float) -> str:
    return "" if v is None or not np.isfinite(v) else repr(float(v))


def write_partition_csv(path: Path, entity_ids, assignment) -> None:
    _write_csv(path, ["entity_id", "community_index"], zip(entity_ids, (int(c) for c in assignment)))


def membership(entity_ids, assignment) -> dict[str, list[str]]:
    groups: dict[str, list[str]] = {}
    for eid, c in zip(entity_ids, assignment):
        groups.setdefault(str(int(c)), []).append(eid)
    return groups


# -- subcommands -------------------------------------------------------------------


def cmd_generate(args) -> int:
    cfg = ScenarioConfig(
        kind=args.kind,
        n_curves=args.n_curves,
        points_per_curve=args.points,
        noise_std=args.noise,
        seed=args.seed,
        component_std=args.component_std,
    )
    lf = generate_scenario(cfg)
    stamp = datetime.now(timezone.utc).isoformat(timespec="seconds")
    paths = write_labeled_fleet(lf, args.out, timestamp=stamp)
    print(f"wrote {len(lf.fleet)} {cfg.kind} entities to {paths['fleet'].parent}")
    return EXIT_OK


def cmd_cluster(args) -> int:
    fleet = load_fleet_csv(args.input)
    _, _, dis = dissimilarity(fleet, BasisSpec(args.degree))
    graph = threshold_graph(dis, args.lam)
    part = detect_communities(graph)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_matrix_csv(dis, out / "rprime.csv")
    write_partition_csv(out / "partition.csv", fleet.entity_ids, part.assignment)
    ids = fleet.entity_ids
    _write_csv(out / "edges.csv", ["source", "target"], ((ids[i], ids[j]) for i, j in graph.edges()))
    _write_json(
        out / "cluster.json",
        {
            "lambda": args.lam,
            "k": part.k,
            "modularity": part.modularity_q,
            "n_edges": graph.n_edges,
            "bisections": [{"size": len(b.group), "delta_q": b.delta_q} for b in part.bisections],
        },
    )
    print(f"lambda={args.lam:g}: {part.k} communities, Q={part.modularity_q:.6f}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    fleet = load_fleet_csv(args.input)
    basis = BasisSpec(args.degree)
    config = SweepConfig(quantiles=args.quantiles, fraction=args.split, seed=args.seed)
    _, _, dis = dissimilarity(fleet, basis)
    sweep = lambda_sweep(fleet, dis, basis, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    write_matrix_csv(dis, out / "rprime.csv")
    _write_csv(
        out / "sweep.csv",
        ["lambda", "k", "eta", "failed"],
        ((repr(r.lam), r.k, _fmt(r.eta), int(r.failed)) for r in sweep.records),
    )
    ks, etas = sweep.curve()
    _write_csv(out / "curve.csv", ["k", "eta"], ((int(k), repr(float(e))) for k, e in zip(ks, etas)))

    report = {
        "thresholds": {"clear": args.elbow_clear, "fuzzy": args.elbow_fuzzy},
        "failed_records": sweep.n_failed,
    }
    try:
        elbow = find_elbow(sweep, args.elbow_clear, args.elbow_fuzzy)
    except TooFewPoints as exc:
        report.update(verdict=None, k_star=None, candidate_k=None, curvature_score=None, membership=None, error=str(exc))
        _write_json(out / "elbow.json", report)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RECORD_FAILURES if sweep.n_failed else EXIT_ERROR

    chosen = sweep.best_per_k.get(elbow.candidate_k) if elbow.candidate_k is not None else None
    report.update(
        verdict=elbow.verdict,
        k_star=elbow.k_star,
        candidate_k=elbow.candidate_k,
        curvature_score=elbow.curvature_score,
        lam=chosen.lam if chosen else None,
        eta=chosen.eta if chosen else None,
        membership=membership(fleet.entity_ids, chosen.partition.assignment) if chosen else None,
    )
    report["lambda"] = report.pop("lam")
    _write_json(out / "elbow.json", report)
    if chosen is not None:
        write_partition_csv(out / "partition.csv", fleet.entity_ids, chosen.partition.assignment)

    k_text = f"k*={elbow.k_star}" if elbow.k_star is not None else f"candidate k={elbow.candidate_k}"
    print(f"{elbow.verdict} ({k_text}, score {elbow.curvature_score:.3f}) from {len(sweep.records)} lambda values")
    if sweep.n_failed:
        print(f"error: {sweep.n_failed} sweep records failed; see sweep.csv", file=sys.stderr)
        return EXIT_RECORD_FAILURES
    return EXIT_OK


def cmd_report(args) -> int:
    src = Path(args.input)
    elbow_path = src / "elbow.json"
    if not elbow_path.is_file():
        print(f"error: no elbow.json in {src}; run the sweep subcommand first", file=sys.stderr)
        return EXIT_ERROR
    report = json.loads(elbow_path.read_text(encoding="utf-8"))
    print(f"verdict: {report['verdict']}")
    print(f"k*: {report['k_star']}  candidate k: {report['candidate_k']}  score: {report['curvature_score']:.4f}")
    curve_path = src / "curve.csv"
    if curve_path.is_file():
        with curve_path.open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                print(f"  k={int(row['k']):>3}  eta={float(row['eta']):.4f}")
    groups = report.get("membership")
    if groups:
        for c, members in sorted(groups.items(), key=lambda kv: int(kv[0])):
            print(f"  group {c}: {', '.join(members)}")
    if args.labels:
        from sklearn.metrics import adjusted_rand_score

        truth = read_labels_csv(args.labels)
        if not groups:
            print("error: the report has no chosen partition to compare", file=sys.stderr)
            return EXIT_ERROR
        pred = {eid: int(c) for c, members in groups.items() for eid in members}
        missing = sorted(set(pred) ^ set(truth))
        if missing:
            print(f"error: labels and partition disagree on entities: {', '.join(missing[:5])}", file=sys.stderr)
            return EXIT_ERROR
        ids = sorted(pred)
        ari = adjusted_rand_score([truth[i] for i in ids], [pred[i] for i in ids])
        print(f"adjusted Rand index vs labels: {ari:.4f}")
    return EXIT_OK


# -- parser ------------------------------------------------------------------------


def _kind(value: str) -> str:
    kind = KIND_ALIASES.get(value, value)
    if kind not in KINDS:
        raise argparse.ArgumentTypeError(f"invalid kind {value!r} (choose from {', '.join(KINDS)} or none/fuzzy/clear)")
    return kind


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--show-config", action="store_true", help="print the resolved options as JSON and exit")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    fit = argparse.ArgumentParser(add_help=False)
    fit.add_argument("--in", dest="input", required=True, help="fleet CSV (entity_id, x1..xp, y)")
    fit.add_argument("--out", required=True, help="output directory")
    fit.add_argument("--degree", type=int, default=DEFAULTS["degree"], help="polynomial degree of the entity models")

    p = argparse.ArgumentParser(prog="fleetgroup", description="Group fleet entities by regression-model similarity.")
    p.add_argument("--show-config", action="store_true", help="print every default and exit")
    sub = p.add_subparsers(dest="command", metavar="{generate,cluster,sweep,report}")

    g = sub.add_parser("generate", parents=[common], help="write a synthetic labelled fleet")
    g.add_argument("--kind", type=_kind, default=DEFAULTS["kind"], help="no_grouping | fuzzy_grouping | clear_grouping")
    g.add_argument("--seed", type=int, default=DEFAULTS["seed"])
    g.add_argument("--out", required=True, help="output directory")
    g.add_argument("--n-curves", type=int, default=DEFAULTS["n_curves"])
    g.add_argument("--points", type=int, default=DEFAULTS["points"], help="observations per curve")
    g.add_argument("--noise", type=float, default=DEFAULTS["noise"], help="noise standard deviation")
    g.add_argument("--component-std", type=float, default=None, help="mixture component std (kind default if omitted)")
    g.set_defaults(func=cmd_generate)

    c = sub.add_parser("cluster", parents=[common, fit], help="communities of the threshold graph at one lambda")
    c.add_argument("--lambda", dest="lam", type=float, required=True, help="dissimilarity threshold")
    c.set_defaults(func=cmd_cluster)

    s = sub.add_parser("sweep", parents=[common, fit], help="sweep lambda, build the accuracy curve, find its elbow")
    s.add_argument("--quantiles", type=int, default=DEFAULTS["quantiles"])
    s.add_argument("--split", type=float, default=DEFAULTS["split"], help="training fraction per entity")
    s.add_argument("--seed", type=int, default=DEFAULTS["seed"], help="train/validation split seed")
    s.add_argument("--elbow-clear", type=float, default=DEFAULTS["elbow_clear"])
    s.add_argument("--elbow-fuzzy", type=float, default=DEFAULTS["elbow_fuzzy"])
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", parents=[common], help="summarise a sweep output directory")
    r.add_argument("--in", dest="input", required=True, help="directory written by sweep")
    r.add_argument("--labels", help="labels CSV (entity_id, true_label) for an adjusted Rand index")
    r.set_defaults(func=cmd_report)
    return p


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "show_config", "verbose")}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        if args.show_config:
            print(json.dumps(DEFAULTS, indent=2, sort_keys=True))
            return EXIT_OK
        parser.print_usage(sys.stderr)
        print("error: a subcommand is required", file=sys.stderr)
        return EXIT_USAGE
    if args.show_config:
        print(json.dumps(_resolved(args), indent=2, sort_keys=True))
        return EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except FleetGroupError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
