"""Command-line front end.

Exit status: 0 on success, 1 on input errors, 2 when no generalization
satisfies the constraints or a plan fails validation.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .anonymizer import EXHAUSTIVE, OBJECTIVES, PRUNED_BFS, SearchConfig, apply, audit, search
from .dataset import Dataset, drop_identifiers, load_csv, load_schema, restrict_to, select_rows, write_csv
from .errors import AnonError, InputError, NoSolution
from .hierarchy import GeneralizationScheme, load_hierarchies
from .metrics import loss_report, risk_report
from .ontology import explain, load_graph, load_plan, validate_plan
from .privacy_models import DeltaPresence, KAnonymity, LDiversity, TCloseness

log = logging.getLogger("recanon")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_FAIL = 2

ANONYMIZED = "anonymized.csv"
SEARCH_REPORT = "search_report.json"
METRICS = "metrics.json"
VALIDATION = "validation.json"
SUPPRESSED = "suppressed_rows.txt"
MANIFEST = "manifest.json"


# ------------------------------------------------------------------- helpers


def _sha256_file(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def config_digest(params: dict, inputs: dict[str, str | list[str] | None]) -> str:
    """Digest of the run parameters and the content of every input file."""
    files = {}
    for role, paths in sorted(inputs.items()):
        if paths is None:
            continue
        if isinstance(paths, (list, tuple)):
            files[role] = [_sha256_file(p) for p in paths]
        else:
            files[role] = _sha256_file(paths)
    blob = json.dumps({"params": params, "inputs": files}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _write(out: Path, name: str, text: str, inputs: set[Path]) -> Path:
    path = (out / name).resolve()
    if path in inputs:
        raise InputError(f"refusing to overwrite input file {path}")
    path.write_text(text, encoding="utf-8", newline="")
    return path


def _with_context(path, exc: InputError) -> InputError:
    exc.args = (f"{path}: {exc}",) + exc.args[1:]
    return exc


def _parse_hierarchy_flags(flags: list[str] | None) -> dict[str, str]:
    out = {}
    for item in flags or []:
        if "=" in item:
            name, path = item.split("=", 1)
        else:
            name, path = Path(item).stem, item
        out[name.strip()] = path.strip()
    return out


def _parse_scheme(text: str | None, d: Dataset) -> GeneralizationScheme | None:
    if not text:
        return None
    levels = {}
    for part in text.split(","):
        name, _, lvl = part.partition("=")
        name = name.strip()
        if name not in d.quasi_identifiers:
            raise InputError(f"--scheme names {name!r}, which is not a quasi-identifier")
        levels[name] = int(lvl)
    return GeneralizationScheme(d.quasi_identifiers, [levels.get(a, 0) for a in d.quasi_identifiers])


def _load_table(path, schema, args, generalized=False) -> Dataset:
    try:
        return load_csv(
            path, schema, delimiter=args.delimiter, missing_token=args.missing_token,
            data_format=getattr(args, "data_format", "plaintext"), generalized=generalized,
        )
    except InputError as exc:
        raise _with_context(path, exc) from None


def _load_by_header(path, schema, args, generalized=False) -> Dataset:
    """Load a CSV whose columns are any subset of the schema, in any order."""
    try:
        with open(path, encoding="utf-8", newline="") as fh:
            header = next(csv.reader(fh, delimiter=args.delimiter), [])
    except FileNotFoundError:
        raise InputError(f"data file not found: {path}") from None
    except UnicodeDecodeError:
        raise InputError(f"{path} is not UTF-8 text") from None
    by_name = {a.name: a for a in schema}
    unknown = [h for h in header if h.strip() not in by_name]
    if unknown:
        raise InputError(f"{path}: columns {unknown} are not in the schema")
    return drop_identifiers(_load_table(path, [by_name[h.strip()] for h in header], args, generalized))


def _load_population(path, schema, args) -> Dataset:
    return _load_by_header(path, schema, args)


def _constraints(args, d: Dataset, population: Dataset | None) -> list:
    sensitive = args.sensitive
    if sensitive is None and (args.l is not None or args.t is not None):
        candidates = [a.name for a in d.schema if a.role.value == "sensitive"]
        if not candidates:
            raise InputError("--l/--t need a sensitive attribute in the schema")
        sensitive = candidates[0]
    out = []
    if args.k is not None:
        out.append(KAnonymity(args.k))
    if args.l is not None:
        out.append(LDiversity(args.l, sensitive))
    if args.t is not None:
        out.append(TCloseness(args.t, sensitive))
    if args.delta_min is not None or args.delta_max is not None:
        if population is None:
            raise InputError("--delta-min/--delta-max need --population")
        out.append(DeltaPresence(args.delta_min or 0.0, 1.0 if args.delta_max is None else args.delta_max, population))
    if not out:
        raise InputError("give at least one of --k, --l, --t, --delta-min/--delta-max")
    return out


# ------------------------------------------------------------------ commands


def cmd_anonymize(args) -> int:
    schema, fmt = load_schema(args.schema)
    args.data_format = fmt
    original = _load_table(args.data, schema, args)
    d = drop_identifiers(original)
    hierarchies = load_hierarchies(d.schema, _parse_hierarchy_flags(args.hierarchy))
    population = _load_population(args.population, schema, args) if args.population else None
    constraints = _constraints(args, d, population)
    cfg = SearchConfig(constraints, args.budget, args.objective, args.strategy, args.workers)

    hierarchy_files = [
        str(p) for _, p in sorted(_parse_hierarchy_flags(args.hierarchy).items())
    ] or [a.hierarchy for a in d.schema if a.is_qi]
    params = {
        "command": "anonymize", "constraints": [c.name for c in constraints], "budget": args.budget,
        "objective": args.objective, "strategy": args.strategy, "delimiter": args.delimiter,
        "missing_token": args.missing_token,
    }
    inputs = {"data": args.data, "schema": args.schema, "hierarchies": hierarchy_files,
              "population": args.population, "plan": args.plan, "ontology": args.override_ontology}
    digest = config_digest(params, inputs)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    input_paths = {Path(p).resolve() for v in inputs.values() if v for p in (v if isinstance(v, list) else [v])}

    status = EXIT_OK
    if args.plan:
        report = validate_plan(load_graph(args.override_ontology), load_plan(args.plan))
        _write(out, VALIDATION, _dump({"config_digest": digest, **report.to_dict()}), input_paths)
        if not report.passed:
            status = EXIT_FAIL

    try:
        result = search(d, hierarchies, cfg)
    except NoSolution as exc:
        _write(out, SEARCH_REPORT, _dump({"config_digest": digest, **exc.result.to_dict()}), input_paths)
        print(f"no solution: {exc}", file=sys.stderr)
        return EXIT_FAIL
    best = result.best
    dz, dropped = apply(d, best, hierarchies)
    failed = [v.model for v in audit(dz, best, cfg, hierarchies) if not v.satisfied]
    if failed:  # pragma: no cover - guarded by the search itself
        raise AnonError(f"post-condition audit failed for {failed}")

    kept = restrict_to(d, dz.row_ids)
    risk = risk_report(dz, population, best.scheme, hierarchies)
    loss = loss_report(kept, dz, suppressed_rows=len(dropped))
    metrics = {
        "config_digest": digest,
        "k": args.k,
        "scheme": best.scheme.as_dict(),
        "suppressed_rows": len(dropped),
        "risk": risk.to_dict(include_individual=args.individual),
        "loss": loss.to_dict(),
    }
    write_path = _write(out, ANONYMIZED, "", input_paths)
    write_csv(dz, write_path, delimiter=args.delimiter, missing_token=args.missing_token)
    _write(out, SUPPRESSED, "".join(f"{i}\n" for i in dropped), input_paths)
    _write(out, SEARCH_REPORT, _dump({"config_digest": digest, **result.to_dict()}), input_paths)
    _write(out, METRICS, _dump(metrics), input_paths)
    artifacts = [ANONYMIZED, SUPPRESSED, SEARCH_REPORT, METRICS] + ([VALIDATION] if args.plan else [])
    manifest = {
        "config_digest": digest,
        "version": __version__,
        "artifacts": {name: _sha256_file(out / name) for name in artifacts},
    }
    _write(out, MANIFEST, _dump(manifest), input_paths)
    if args.human:
        print(f"scheme {best.scheme} ({', '.join(f'{k}={v}' for k, v in best.scheme.as_dict().items())})")
        print(f"suppressed {len(dropped)} of {d.n} records; evaluated {result.evaluated_count}/{len(result.nodes)} nodes")
        print(f"max RR {risk.maximum_rr:.2f}%  avg RR {risk.average_rr:.2f}%  "
              f"NUE {loss.nue_overall:.2f}%  IG {loss.ig:.2f}%  GG {loss.gg_mean:.2f}%")
    return status


def cmd_assess(args) -> int:
    schema, fmt = load_schema(args.schema)
    args.data_format = fmt
    released = _load_by_header(args.data, schema, args, generalized=True)
    overrides = _parse_hierarchy_flags(args.hierarchy)
    population = _load_population(args.population, schema, args) if args.population else None
    hierarchies = load_hierarchies(released.schema, overrides) if population is not None and args.scheme else {}
    scheme = _parse_scheme(args.scheme, released)
    report: dict = {}
    params = {"command": "assess", "k": args.k, "scheme": args.scheme, "delimiter": args.delimiter,
              "missing_token": args.missing_token}
    inputs = {"data": args.data, "schema": args.schema, "original": args.original,
              "suppressed": args.suppressed_rows, "population": args.population}
    report["config_digest"] = config_digest(params, inputs)
    report["k"] = args.k
    if scheme is not None:
        report["scheme"] = scheme.as_dict()
    risk = risk_report(released, population, scheme, hierarchies)
    report["risk"] = risk.to_dict(include_individual=args.individual)
    if args.original:
        original = _load_by_header(args.original, schema, args)
        dropped: list[int] = []
        if args.suppressed_rows:
            text = Path(args.suppressed_rows).read_text(encoding="utf-8")
            dropped = [int(x) for x in text.split()]
            gone = set(dropped)
            original = select_rows(original, [i for i in range(original.n) if i not in gone])
        report["suppressed_rows"] = len(dropped)
        report["loss"] = loss_report(original, released, suppressed_rows=len(dropped)).to_dict()
    text = _dump(report)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write(out, METRICS, text, {Path(p).resolve() for p in inputs.values() if p})
    if args.human or not args.out:
        if args.human:
            print(f"max RR {risk.maximum_rr:.2f}%  avg RR {risk.average_rr:.2f}%  classes {risk.class_count}/{risk.n}")
            if "loss" in report:
                loss = report["loss"]
                print(f"NUE {loss['nue']['overall']:.2f}%  IG {loss['ig']:.2f}%  GG {loss['gg']['mean']:.2f}%")
        else:
            sys.stdout.write(text)
    return EXIT_OK


def cmd_validate_plan(args) -> int:
    graph = load_graph(args.override_ontology)
    plan = load_plan(args.plan)
    report = validate_plan(graph, plan)
    params = {"command": "validate-plan"}
    digest = config_digest(params, {"plan": args.plan, "ontology": args.override_ontology})
    text = _dump({"config_digest": digest, **report.to_dict()})
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write(out, VALIDATION, text, {Path(args.plan).resolve()})
    if args.human:
        for c in report.checks:
            print(f"[{'PASS' if c.passed else 'FAIL'}] ({c.id}) {c.name}: {'; '.join(c.explanation)}")
        for w in report.warnings:
            print(f"warning: {w}")
    elif not args.out:
        sys.stdout.write(text)
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_explain(args) -> int:
    sys.stdout.write(explain(load_graph(args.override_ontology), args.term))
    return EXIT_OK


# ---------------------------------------------------------------------- parser


def _io_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="input CSV")
    p.add_argument("--schema", required=True, help="schema JSON")
    p.add_argument("--hierarchy", action="append", metavar="ATTR=PATH",
                   help="hierarchy file for a quasi-identifier (repeatable; overrides the schema)")
    p.add_argument("--population", help="population CSV for delta-presence and journalist risk")
    p.add_argument("--delimiter", default=",")
    p.add_argument("--missing-token", default="")
    p.add_argument("--individual", action="store_true", help="include per-record risks in metrics.json")
    p.add_argument("--human", action="store_true", help="print a human-readable summary")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="recanon", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("anonymize", help="search for and apply a privacy-satisfying generalization")
    _io_flags(p)
    p.add_argument("--k", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--t", type=float)
    p.add_argument("--sensitive", help="sensitive attribute for --l/--t (default: first sensitive column)")
    p.add_argument("--delta-min", type=float)
    p.add_argument("--delta-max", type=float)
    p.add_argument("--budget", type=float, default=0.0, help="max fraction of records to suppress")
    p.add_argument("--objective", choices=sorted(OBJECTIVES), default="nue")
    p.add_argument("--strategy", choices=[PRUNED_BFS, EXHAUSTIVE], default=PRUNED_BFS)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--plan", help="study plan JSON to validate alongside")
    p.add_argument("--override-ontology", help="knowledge JSON merged over the builtin graph")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_anonymize)

    p = sub.add_parser("assess", help="risk report for a table, plus loss metrics against an original")
    _io_flags(p)
    p.add_argument("--original", help="original CSV; enables the information-loss report")
    p.add_argument("--suppressed-rows", help="suppressed_rows.txt aligning the original with the release")
    p.add_argument("--scheme", help="levels used for the release, e.g. age=1,sex=0 (for journalist risk)")
    p.add_argument("--k", type=int, help="k echoed into the report")
    p.add_argument("--out", help="output directory (default: print JSON)")
    p.set_defaults(func=cmd_assess)

    p = sub.add_parser("validate-plan", help="check a study plan against the knowledge graph")
    p.add_argument("--plan", required=True)
    p.add_argument("--override-ontology")
    p.add_argument("--out")
    p.add_argument("--human", action="store_true")
    p.set_defaults(func=cmd_validate_plan)

    p = sub.add_parser("explain", help="print the glossary entry of a term")
    p.add_argument("term")
    p.add_argument("--override-ontology")
    p.set_defaults(func=cmd_explain)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def run() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    run()
