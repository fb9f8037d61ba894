#!/usr/bin/env python3
"""End-to-end study on a synthetic corpus, no network required.

Walks the whole bench: generate cases with injected output defects, run all
three diagnosis frameworks against the simulated backend, auto-grade from the
defect bookkeeping, then evaluate under the three constraint scenarios.
"""

import tempfile
from pathlib import Path

from romdx.evaluation import EvalConfig, build_report
from romdx.gateway import BackendConfig, DefectProfile, ModelGateway, generate_synthetic_corpus
from romdx.grading import GradingStore
from romdx.pipelines import ResultsStore, run_cases
from romdx.prompts import default_rule_set


def main() -> None:
    rules = default_rule_set()
    defects = DefectProfile(omit_movement_prob=0.2, contradiction_prob=0.1, logic_leap_prob=0.1)
    corpus = generate_synthetic_corpus(150, defects, seed=7, rules=rules)
    abnormal = sum(1 for case in corpus if case.record.label == "abnormal")
    print(f"corpus: {len(corpus)} cases, {abnormal} abnormal / {len(corpus) - abnormal} normal")
    print(f"defects injected: omit 20%, contradiction 10%, logic leap 10%\n")

    gateway = ModelGateway(BackendConfig(backend="simulated", seed=7), rules=rules, corpus=corpus)
    workdir = Path(tempfile.mkdtemp(prefix="romdx-demo-"))
    store = ResultsStore(workdir / "results")
    records = [case.record for case in corpus]
    for framework in ("baseline", "dvdx", "hmvdx"):
        outcome = run_cases(records, framework, rules, gateway, store, n_frames=16, concurrency=4)
        print(f"{framework}: {len(outcome.completed)} cases diagnosed")

    grading = GradingStore(workdir / "grades.jsonl")
    finals = {}
    grades = {}
    truths = {case.record.case_id: case.record.label for case in corpus}
    by_id = {case.record.case_id: case for case in corpus}
    for framework in ("baseline", "dvdx", "hmvdx"):
        for result in store.load(framework):
            finals[(framework, result.case_id)] = result.final
            grades[(framework, result.case_id)] = grading.auto_grade_simulated(
                result, by_id[result.case_id]
            )

    cfg = EvalConfig(bootstrap_b=2000, seed=0)
    paths = build_report(finals, grades, truths, cfg, workdir / "reports")
    print(f"\nreport written to {workdir / 'reports'}\n")
    print(paths["summary"].read_text(encoding="utf-8"))


if __name__ == "__main__":
    main()
