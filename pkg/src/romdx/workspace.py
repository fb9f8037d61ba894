"""Workspace directory layout and single-owner locking.

All CLI commands and the grading API agree on one layout so no path
configuration is needed:

    <workspace>/
      cases/cases.jsonl        ingested or simulated case set
      cases/synthetic.jsonl    synthetic specs + defect bookkeeping
      prompts/                 compiled prompt texts
      results/<framework>.jsonl
      grades/events.jsonl
      reports/
"""

from __future__ import annotations

import json
import os
from pathlib import Path

from .errors import WorkspaceLocked
from .gateway import SyntheticCase
from .grading import GradingStore
from .ingest import CaseSet, load_caseset, save_caseset
from .pipelines import ResultsStore


class Workspace:
    def __init__(self, root: str | Path):
        self.root = Path(root)

    # -- paths ---------------------------------------------------------------

    @property
    def cases_file(self) -> Path:
        return self.root / "cases" / "cases.jsonl"

    @property
    def synthetic_file(self) -> Path:
        return self.root / "cases" / "synthetic.jsonl"

    @property
    def prompts_dir(self) -> Path:
        return self.root / "prompts"

    @property
    def results_dir(self) -> Path:
        return self.root / "results"

    @property
    def grades_file(self) -> Path:
        return self.root / "grades" / "events.jsonl"

    @property
    def runs_file(self) -> Path:
        return self.root / "runs.jsonl"

    @property
    def reports_dir(self) -> Path:
        return self.root / "reports"

    @property
    def lock_file(self) -> Path:
        return self.root / ".lock"

    def ensure_layout(self) -> None:
        for path in (self.root / "cases", self.prompts_dir, self.results_dir,
                     self.grades_file.parent, self.reports_dir):
            path.mkdir(parents=True, exist_ok=True)

    # -- locking ---------------------------------------------------------------

    def acquire_lock(self) -> None:
        """One CLI process owns a workspace at a time. Stale locks from dead
        processes are reclaimed."""
        self.root.mkdir(parents=True, exist_ok=True)
        if self.lock_file.exists():
            try:
                owner = int(self.lock_file.read_text(encoding="utf-8").strip())
            except ValueError:
                owner = -1
            if owner > 0 and _pid_alive(owner) and owner != os.getpid():
                raise WorkspaceLocked(f"workspace {self.root} is locked by pid {owner}")
        self.lock_file.write_text(str(os.getpid()), encoding="utf-8")

    def release_lock(self) -> None:
        try:
            self.lock_file.unlink()
        except FileNotFoundError:
            pass

    # -- stores ------------------------------------------------------------------

    def save_cases(self, cases: CaseSet) -> None:
        save_caseset(cases, self.cases_file)

    def load_cases(self) -> CaseSet:
        return load_caseset(self.cases_file)

    def has_cases(self) -> bool:
        return self.cases_file.exists()

    def save_synthetic(self, corpus: list[SyntheticCase]) -> None:
        self.synthetic_file.parent.mkdir(parents=True, exist_ok=True)
        with self.synthetic_file.open("w", encoding="utf-8") as handle:
            for case in corpus:
                handle.write(json.dumps(case.to_json_dict(), sort_keys=True) + "\n")

    def load_synthetic(self) -> list[SyntheticCase]:
        if not self.synthetic_file.exists():
            return []
        corpus = []
        for line in self.synthetic_file.read_text(encoding="utf-8").splitlines():
            if line.strip():
                corpus.append(SyntheticCase.from_json_dict(json.loads(line)))
        return corpus

    def results_store(self) -> ResultsStore:
        return ResultsStore(self.results_dir)

    def record_run(self, manifest: dict) -> None:
        """Append one run manifest entry; run_id must be new."""
        existing = {entry["run_id"] for entry in self.load_runs()}
        if manifest["run_id"] in existing:
            raise ValueError(f"duplicate run_id {manifest['run_id']!r}")
        self.runs_file.parent.mkdir(parents=True, exist_ok=True)
        with self.runs_file.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(manifest, sort_keys=True) + "\n")

    def load_runs(self) -> list[dict]:
        if not self.runs_file.exists():
            return []
        return [
            json.loads(line)
            for line in self.runs_file.read_text(encoding="utf-8").splitlines()
            if line.strip()
        ]

    def grading_store(self) -> GradingStore:
        store = self.results_store()
        known: set[tuple[str, str]] = set()
        for framework in ("baseline", "dvdx", "hmvdx"):
            for result in store.load(framework):
                known.add((result.case_id, framework))
        return GradingStore(self.grades_file, known_keys=known or None)


def _pid_alive(pid: int) -> bool:
    try:
        os.kill(pid, 0)
    except ProcessLookupError:
        return False
    except PermissionError:
        return True
    return True
