"""Command-line entry point wiring all modules over one workspace.

Exit codes are a stable scripting contract:

  0  success
  2  input validation failed
  3  backend or configuration problem
  4  pipeline state incomplete (missing ingest, results, or grades)

Every command is safe to re-run: stores are append-only and `run` skips
cases that already have results.
"""

from __future__ import annotations

import argparse
import json
import sys
import uuid
from datetime import datetime, timezone
from pathlib import Path

from .errors import (
    EvaluationError,
    GatewayError,
    IncompleteInputs,
    InvalidFrameCount,
    ManifestError,
    MissingGrade,
    RomdxError,
    RuleFileError,
    WorkspaceLocked,
)
from .evaluation import EvalConfig, SCENARIOS, build_report
from .gateway import BackendConfig, DefectProfile, ModelGateway, generate_synthetic_corpus
from .ingest import CaseSet, PrepConfig, ingest_manifest, run_preprocess
from .pipelines import FRAMEWORKS, run_cases
from .prompts import PromptKind, default_rule_set, load_rule_set, render_prompt
from .workspace import Workspace

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_BACKEND = 3
EXIT_INCOMPLETE = 4


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _eval_config(config: dict, bootstrap_b: int | None, seed: int | None, alpha: float | None) -> EvalConfig:
    weights = config.get("weights", {})
    bootstrap = config.get("bootstrap", {})
    return EvalConfig(
        w_d=float(weights.get("d", 0.5)),
        w_r=float(weights.get("r", 0.3)),
        w_a=float(weights.get("a", 0.2)),
        bootstrap_b=int(bootstrap_b if bootstrap_b is not None else bootstrap.get("b", 10000)),
        alpha=float(alpha if alpha is not None else bootstrap.get("alpha", 0.05)),
        seed=int(seed if seed is not None else bootstrap.get("seed", 0)),
    )


def _rules(args) -> object:
    if getattr(args, "rules", None):
        return load_rule_set(args.rules)
    return default_rule_set()


def cmd_ingest(args, workspace: Workspace, config: dict) -> int:
    cases = ingest_manifest(args.manifest)
    workspace.ensure_layout()
    workspace.save_cases(cases)
    summary = cases.summary
    print(f"{summary['total']} cases ({summary['abnormal']} abnormal / {summary['normal']} normal)")
    for key in ("age_bands", "genders"):
        breakdown = ", ".join(f"{k}: {v}" for k, v in summary[key].items())
        print(f"  {key.replace('_', ' ')}: {breakdown}")
    return EXIT_OK


def cmd_preprocess(args, workspace: Workspace, config: dict) -> int:
    if not workspace.has_cases():
        print("no ingested cases; run `ingest` first", file=sys.stderr)
        return EXIT_INCOMPLETE
    cases = workspace.load_cases()
    prep = PrepConfig(exec_template=args.exec_template) if args.exec_template else PrepConfig()
    updated = []
    failures = 0
    for case in cases.cases:
        if case.preprocess_done:
            updated.append(case)
            continue
        if args.dry_run:
            from .ingest import plan_preprocess

            plan = plan_preprocess(case, prep)
            print(f"{case.case_id}: {' -> '.join(plan.steps)}\n  $ {plan.command}")
            updated.append(case)
            continue
        try:
            updated.append(run_preprocess(case, prep))
        except RomdxError as exc:
            print(f"{case.case_id}: FAILED: {exc}", file=sys.stderr)
            updated.append(case)
            failures += 1
    if not args.dry_run:
        workspace.save_cases(CaseSet(cases=tuple(updated)))
    done = sum(1 for case in updated if case.preprocess_done)
    print(f"{done}/{len(updated)} cases preprocessed")
    return EXIT_BACKEND if failures else EXIT_OK


def cmd_simulate(args, workspace: Workspace, config: dict) -> int:
    if args.n < 1:
        print("--n must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    rules = _rules(args)
    defects = DefectProfile(
        omit_movement_prob=args.omit,
        contradiction_prob=args.contradiction,
        logic_leap_prob=args.leap,
    )
    corpus = generate_synthetic_corpus(
        args.n, defects, seed=args.seed, rules=rules, abnormal_rate=args.abnormal_rate
    )
    workspace.ensure_layout()
    workspace.save_cases(CaseSet(cases=tuple(case.record for case in corpus)))
    workspace.save_synthetic(corpus)
    abnormal = sum(1 for case in corpus if case.record.label == "abnormal")
    print(
        f"simulated {len(corpus)} cases ({abnormal} abnormal / {len(corpus) - abnormal} normal), "
        f"seed={args.seed}, defects: omit={args.omit} contradiction={args.contradiction} "
        f"leap={args.leap}"
    )
    return EXIT_OK


def cmd_run(args, workspace: Workspace, config: dict) -> int:
    if args.framework == "baseline" and args.frames < 1:
        print("--frames must be >= 1 for the baseline framework", file=sys.stderr)
        return EXIT_VALIDATION
    if not workspace.has_cases():
        print("no ingested cases; run `ingest` or `simulate` first", file=sys.stderr)
        return EXIT_INCOMPLETE
    rules = _rules(args)
    cases = workspace.load_cases()
    if args.backend == "sim":
        corpus = workspace.load_synthetic()
        if not corpus:
            print("simulated backend needs a synthetic corpus; run `simulate` first", file=sys.stderr)
            return EXIT_INCOMPLETE
        gateway = ModelGateway(
            BackendConfig(backend="simulated", seed=args.seed), rules=rules, corpus=corpus
        )
    else:
        try:
            cfg = BackendConfig.remote_from_env(
                max_retries=args.max_retries, rate_limit_per_min=args.rate_limit
            )
        except ValueError as exc:
            print(f"backend configuration error: {exc}", file=sys.stderr)
            return EXIT_BACKEND
        gateway = ModelGateway(cfg, rules=rules)
    workspace.ensure_layout()
    for kind in (PromptKind.DIAGNOSE, PromptKind.DESCRIBE, PromptKind.JUDGE):
        prompt = render_prompt(kind, rules)
        name = f"{kind.name.lower()}-{prompt.rule_set_version}.txt"
        (workspace.prompts_dir / name).write_text(prompt.body, encoding="utf-8")
    store = workspace.results_store()
    started = datetime.now(timezone.utc).isoformat()
    run_id = f"{args.framework}-{uuid.uuid4().hex[:12]}"
    outcome = run_cases(
        cases.cases, args.framework, rules, gateway, store,
        n_frames=args.frames, concurrency=args.concurrency,
    )
    workspace.record_run({
        "run_id": run_id,
        "framework": args.framework,
        "backend": args.backend,
        "rule_set_version": rules.version,
        "config": {
            "frames": args.frames,
            "concurrency": args.concurrency,
            "seed": args.seed,
            "max_retries": args.max_retries,
            "rate_limit_per_min": args.rate_limit,
        },
        "started_at": started,
        "finished_at": datetime.now(timezone.utc).isoformat(),
        "completed": len(outcome.completed),
        "skipped": len(outcome.skipped),
        "failed": len(outcome.failures),
    })
    print(
        f"{args.framework}: {len(outcome.completed)} completed, {len(outcome.skipped)} skipped, "
        f"{len(outcome.failures)} failed"
    )
    for case_id, message in sorted(outcome.failures.items()):
        print(f"  {case_id}: {message}", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args, workspace: Workspace, config: dict) -> int:
    import uvicorn

    from .api import create_app

    ui_dir = args.ui_dir
    if ui_dir is None:
        candidate = Path("frontend") / "dist"
        ui_dir = candidate if candidate.is_dir() else None
    app = create_app(workspace, hide_raw=args.hide_raw, ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def _collect_eval_inputs(workspace: Workspace):
    store = workspace.results_store()
    finals: dict[tuple[str, str], str] = {}
    results = {}
    for framework in FRAMEWORKS:
        for result in store.load(framework):
            finals[(framework, result.case_id)] = result.output.final
            results[(framework, result.case_id)] = result
    return finals, results


def cmd_eval(args, workspace: Workspace, config: dict) -> int:
    finals, results = _collect_eval_inputs(workspace)
    if not finals:
        print("no results to evaluate; run `run` first", file=sys.stderr)
        return EXIT_INCOMPLETE
    if not workspace.has_cases():
        print("no case set; run `ingest` or `simulate` first", file=sys.stderr)
        return EXIT_INCOMPLETE
    truths = {case.case_id: case.label for case in workspace.load_cases().cases}
    grading = workspace.grading_store()
    synthetic = {case.record.case_id: case for case in workspace.load_synthetic()}
    grades = {}
    ungraded = []
    for key in finals:
        framework, case_id = key
        final = grading.final_grade(case_id, framework)
        if final is None and case_id in synthetic:
            final = grading.auto_grade_simulated(results[key], synthetic[case_id])
        if final is None:
            ungraded.append(f"{framework}:{case_id}")
        else:
            grades[key] = final
    if ungraded:
        print(f"{len(ungraded)} ungraded case(s): {', '.join(sorted(ungraded))}", file=sys.stderr)
        return EXIT_INCOMPLETE
    scenarios = tuple(f"S{token.strip()}" for token in args.scenarios.split(","))
    for scenario in scenarios:
        if scenario not in SCENARIOS:
            print(f"bad scenario list {args.scenarios!r}", file=sys.stderr)
            return EXIT_VALIDATION
    cfg = _eval_config(config, args.bootstrap, args.seed, args.alpha)
    paths = build_report(finals, grades, truths, cfg, workspace.reports_dir, scenarios)
    for name, path in paths.items():
        print(f"{name}: {path}")
    return EXIT_OK


def cmd_report(args, workspace: Workspace, config: dict) -> int:
    metrics = workspace.reports_dir / "comprehensive_metrics.csv"
    usability = workspace.reports_dir / "usability_index.csv"
    summary = workspace.reports_dir / "report.md"
    if not metrics.exists() or not usability.exists():
        print("no evaluation artifacts; run `eval` first", file=sys.stderr)
        return EXIT_INCOMPLETE
    if args.format == "csv":
        print(metrics.read_text(encoding="utf-8"))
        print(usability.read_text(encoding="utf-8"))
    else:
        print(summary.read_text(encoding="utf-8"))
    return EXIT_OK


def cmd_export(args, workspace: Workspace, config: dict) -> int:
    grading = workspace.grading_store()
    count = grading.export_gradings(args.out)
    print(f"exported {count} grading records to {args.out}")
    return EXIT_OK


def cmd_import(args, workspace: Workspace, config: dict) -> int:
    grading = workspace.grading_store()
    count = grading.import_gradings(args.path)
    print(f"imported {count} grading records from {args.path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="romdx",
        description="Video-based shoulder range-of-motion diagnosis workbench",
    )
    parser.add_argument("--workspace", default="workspace", help="workspace directory")
    parser.add_argument("--config", default=None, help="JSON config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="load and validate a case manifest CSV")
    p.add_argument("--manifest", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("preprocess", help="run the privacy/engineering pipeline per case")
    p.add_argument("--exec-template", default=None,
                   help="command template with {input} {output} {crop} {target_kbps}")
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("simulate", help="generate a synthetic case corpus")
    p.add_argument("--n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--omit", type=float, default=0.0, help="movement omission probability")
    p.add_argument("--contradiction", type=float, default=0.0)
    p.add_argument("--leap", type=float, default=0.0, help="logic-leap probability")
    p.add_argument("--abnormal-rate", type=float, default=0.6)
    p.add_argument("--rules", default=None, help="rule file (default: shipped rules)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("run", help="run one framework over the ingested cases")
    p.add_argument("--framework", choices=FRAMEWORKS, required=True)
    p.add_argument("--backend", choices=("sim", "remote"), default="sim")
    p.add_argument("--frames", type=int, default=16, help="frame count for the baseline")
    p.add_argument("--concurrency", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-retries", type=int, default=2)
    p.add_argument("--rate-limit", type=float, default=60.0, help="requests per minute")
    p.add_argument("--rules", default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("serve", help="serve the grading API and review UI")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--hide-raw", action="store_true",
                   help="hide raw transcripts from the review UI")
    p.add_argument("--ui-dir", default=None, help="built UI assets directory")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("eval", help="compute metrics and usability indices")
    p.add_argument("--scenarios", default="1,2,3")
    p.add_argument("--bootstrap", type=int, default=None, help="bootstrap replicates")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="print the evaluation report")
    p.add_argument("--format", choices=("csv", "md"), default="md")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("export", help="export grading records")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("import", help="import grading records")
    p.add_argument("--path", required=True)
    p.set_defaults(func=cmd_import)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    workspace = Workspace(args.workspace)
    try:
        config = _load_config(args.config)
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        workspace.acquire_lock()
    except WorkspaceLocked as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_BACKEND
    try:
        return args.func(args, workspace, config)
    except (ManifestError, RuleFileError, InvalidFrameCount, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (MissingGrade, IncompleteInputs) as exc:
        print(f"incomplete pipeline state: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE
    except GatewayError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except EvaluationError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    finally:
        workspace.release_lock()


if __name__ == "__main__":
    sys.exit(main())
