"""Command line: ``frob validate|report|sweep|examples``.

Exit codes: 0 all verdicts pass, 2 input error, 3 inadmissible spec,
4 verdict failure (the report is still written).
"""
from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import jsonschema
import numpy as np
import yaml

from . import catalog
from .meromorphic import SpecError, SuperpotentialSpec, validate
from .pipeline import (DEFAULT_TOLERANCES, REJECTIONS, PointReport, Rejected, Target,
                       aggregate, evaluate, sample_and_evaluate)
from .schemas import CONFIG_SCHEMA, SCHEMA_VERSION

EXIT_OK, EXIT_INPUT, EXIT_INADMISSIBLE, EXIT_FAIL = 0, 2, 3, 4
DEFAULT_POINTS = {"report": 1, "sweep": 20}


class InputError(Exception):
    pass


@dataclass
class Settings:
    command: str
    example: str | None
    spec: SuperpotentialSpec | None
    point: dict | None
    seed: int
    points: int
    tolerances: dict
    out: str | None
    format: str
    compact: bool
    timing: bool
    jobs: int


# ---------------------------------------------------------------------------
# input


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config: {exc}") from None
    except yaml.YAMLError as exc:
        raise InputError(f"config is not valid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise InputError("config must be a mapping")
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InputError(f"config schema error at {where}: {exc.message}") from None
    return data


def parse_complex(v) -> complex:
    if isinstance(v, list):
        return complex(v[0], v[1])
    try:
        return complex(str(v).replace(" ", "")) if isinstance(v, str) else complex(v)
    except ValueError:
        raise InputError(f"cannot read {v!r} as a complex number") from None


def settings(args: argparse.Namespace) -> Settings:
    cfg = load_config(args.config) if args.config else {"schema_version": SCHEMA_VERSION}
    example = args.example if args.example is not None else cfg.get("example")
    spec = None
    if "spec" in cfg:
        if args.example is not None:
            raise InputError("give either --example or a spec in the config, not both")
        s = cfg["spec"]
        spec = SuperpotentialSpec(s["s"], s["L"], s.get("m0", 0), tuple(s.get("poles", ())))
    if example is not None:
        try:
            spec = catalog.get(example).spec
        except KeyError as exc:
            raise InputError(exc.args[0]) from None
    if spec is None and args.command != "examples":
        raise InputError("no spec: pass --example NAME or a config with 'example' or 'spec'")
    tolerances = dict(DEFAULT_TOLERANCES)
    unknown = set(cfg.get("tolerances", {})) - set(tolerances)
    if unknown:
        raise InputError(f"unknown verdict names in tolerances: {', '.join(sorted(unknown))}")
    tolerances.update(cfg.get("tolerances", {}))
    tol = args.tol if args.tol is not None else cfg.get("tol")
    if tol is not None:
        if not tol > 0:
            raise InputError("--tol must be positive")
        tolerances = {k: float(tol) for k in tolerances}
    points = args.points if args.points is not None else cfg.get("points",
                                                                  DEFAULT_POINTS.get(args.command, 1))
    if points < 1:
        raise InputError("--points must be at least 1")
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    if not 0 <= seed < 2 ** 64:
        raise InputError("--seed must be an unsigned 64-bit integer")
    return Settings(args.command, example, spec, cfg.get("point"), int(seed), int(points),
                    tolerances, args.out if args.out is not None else cfg.get("out"),
                    args.format or cfg.get("format", "json"), args.compact, args.timing,
                    args.jobs)


# ---------------------------------------------------------------------------
# commands


def _header(st: Settings, command: str) -> dict:
    return {"schema_version": SCHEMA_VERSION, "command": command}


def cmd_examples(st: Settings) -> tuple[dict, int]:
    doc = _header(st, "examples")
    doc["examples"] = [ex.to_dict() for ex in catalog.EXAMPLES.values()]
    return doc, EXIT_OK


def cmd_validate(st: Settings) -> tuple[dict, int]:
    rep = validate(st.spec)
    for w in rep.warnings:
        print(f"warning: {w}", file=sys.stderr)
    doc = _header(st, "validate")
    doc.update(spec=st.spec.to_dict(), admissibility=rep.to_dict())
    return doc, EXIT_OK if rep.admissible else EXIT_INADMISSIBLE


def _target(st: Settings) -> Target:
    if st.example is not None:
        return Target.from_example(catalog.get(st.example))
    return Target(st.spec)


def _explicit_point(st: Settings, target: Target) -> np.ndarray:
    (kind, values), = st.point.items()
    vals = [parse_complex(v) for v in values]
    if len(vals) != st.spec.N:
        raise InputError(f"point needs {st.spec.N} coordinates, got {len(vals)}")
    try:
        if kind == "t":
            return target.from_chart(vals)
        return np.array(vals, dtype=complex)
    except SpecError as exc:
        raise InputError(f"invalid point: {exc}") from None


def _worker(job):
    example, spec, chart, seed, index, tolerances, timing = job
    target = Target.from_example(catalog.get(example)) if example else Target(spec, None, chart)
    return sample_and_evaluate(target, seed, index, tolerances, timing)


def run_points(st: Settings, target: Target) -> tuple[list[PointReport], list[dict]]:
    if st.point is not None:
        xv = _explicit_point(st, target)
        try:
            return [evaluate(target, xv, st.tolerances, None, st.timing)], []
        except (Rejected,) + REJECTIONS as exc:
            raise InputError(f"the given point is not generic: {exc}") from None
    reports: list[PointReport] = []
    rejections: list[dict] = []
    # the first point fixes the library chart of a custom spec
    first, rej = sample_and_evaluate(target, st.seed, 0, st.tolerances, st.timing)
    rejections += rej
    if first is not None:
        reports.append(first)
    rest = range(1, st.points)
    if st.jobs > 1 and len(rest) > 1 and (target.example or target._chart):
        jobs = [(st.example, st.spec, target._chart, st.seed, i, st.tolerances, st.timing)
                for i in rest]
        with ProcessPoolExecutor(max_workers=st.jobs) as pool:
            results = list(pool.map(_worker, jobs))
    else:
        results = [sample_and_evaluate(target, st.seed, i, st.tolerances, st.timing) for i in rest]
    for rep, rej in results:
        rejections += rej
        if rep is not None:
            reports.append(rep)
    return reports, rejections


def cmd_report(st: Settings, command: str = "report") -> tuple[dict, int]:
    adm = validate(st.spec)
    if not adm.admissible:
        raise Inadmissible(adm)
    for w in adm.warnings:
        print(f"warning: {w}", file=sys.stderr)
    target = _target(st)
    start = time.perf_counter()
    reports, rejections = run_points(st, target)
    full = command == "report"
    doc = _header(st, command)
    doc.update(
        target=target.name,
        spec=st.spec.to_dict(),
        admissibility=adm.to_dict(),
        seed=st.seed,
        tolerances=st.tolerances,
        points=[r.to_dict(full) for r in reports],
        rejections=rejections,
        verdicts=aggregate(reports),
    )
    expected = 1 if st.point is not None else st.points
    passed = len(reports) == expected and all(r.passed for r in reports)
    doc["passed"] = passed
    doc["timing"] = {"total": round(time.perf_counter() - start, 6)} if st.timing else None
    return doc, EXIT_OK if passed else EXIT_FAIL


class Inadmissible(Exception):
    def __init__(self, report):
        super().__init__("; ".join(report.reasons))
        self.report = report


# ---------------------------------------------------------------------------
# output


def _fmt(x: float) -> str:
    return f"{x:.3e}"


def render_table(doc: dict) -> str:
    cmd = doc["command"]
    lines = []
    if cmd == "examples":
        lines.append(f"{'name':<12} {'N':>2}  title")
        for ex in doc["examples"]:
            lines.append(f"{ex['name']:<12} {ex['N']:>2}  {ex['title']}")
        return "\n".join(lines) + "\n"
    adm = doc["admissibility"]
    lines.append(f"spec  {doc['spec']}")
    lines.append(f"status  {adm['status']}  N={adm['N']}  n={adm['n']}")
    lines += [f"reason  {r}" for r in adm["reasons"]]
    lines += [f"warning  {w}" for w in adm["warnings"]]
    if cmd == "validate":
        return "\n".join(lines) + "\n"
    lines.append(f"target  {doc['target']}  seed={doc['seed']}  points={len(doc['points'])}"
                 f"  rejected={len(doc['rejections'])}")
    lines.append(f"{'verdict':<20} {'max residual':>12} {'tolerance':>10}  result")
    for v in doc["verdicts"]:
        res = "skipped" if v["skipped"] else ("pass" if v["passed"] else "FAIL")
        lines.append(f"{v['name']:<20} {_fmt(v['max_residual']):>12} {_fmt(v['tolerance']):>10}  {res}")
    lines.append("PASS" if doc["passed"] else "FAIL")
    return "\n".join(lines) + "\n"


def dump(doc: dict, compact: bool) -> str:
    if compact:
        return json.dumps(doc, separators=(",", ":")) + "\n"
    return json.dumps(doc, indent=2) + "\n"


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML run config")
    common.add_argument("--example", metavar="NAME", help="built-in example name")
    common.add_argument("--seed", type=int, metavar="U64", help="base seed (default 0)")
    common.add_argument("--tol", type=float, metavar="FLOAT",
                        help="use this tolerance for every verdict")
    common.add_argument("--points", type=int, metavar="INT",
                        help="sample points (report: 1, sweep: 20)")
    common.add_argument("--out", metavar="PATH", help="also write the JSON report here")
    common.add_argument("--format", choices=["json", "table"], help="stdout format")
    common.add_argument("--compact", action="store_true", help="single-line JSON")
    common.add_argument("--timing", action="store_true",
                        help="record wall-clock timings (reports are then not reproducible)")
    common.add_argument("--jobs", type=int, default=1, metavar="INT",
                        help="worker processes for sweeps")
    parser = argparse.ArgumentParser(
        prog="frob", description="Frobenius manifolds from meromorphic superpotentials.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="classify a spec")
    sub.add_parser("report", parents=[common], help="full pipeline at sampled points")
    sub.add_parser("sweep", parents=[common], help="verdicts over many sampled points")
    sub.add_parser("examples", parents=[common], help="list the built-in examples")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        st = settings(args)
        if st.command == "examples":
            doc, code = cmd_examples(st)
        elif st.command == "validate":
            doc, code = cmd_validate(st)
        else:
            doc, code = cmd_report(st, st.command)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Inadmissible as exc:
        print(f"inadmissible: {exc}", file=sys.stderr)
        return EXIT_INADMISSIBLE
    text = dump(doc, st.compact)
    if st.out:
        try:
            with open(st.out, "w") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"error: cannot write report: {exc}", file=sys.stderr)
            return EXIT_INPUT
    sys.stdout.write(render_table(doc) if st.format == "table" else text)
    return code


if __name__ == "__main__":
    sys.exit(main())
