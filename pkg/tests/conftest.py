import csv
from pathlib import Path

import pytest

from romdx.gateway import BackendConfig, DefectProfile, ModelGateway, generate_synthetic_corpus
from romdx.prompts import default_rule_set

MANIFEST_HEADER = ["case_id", "video_path", "label", "age_band", "gender", "view", "duration_s"]


@pytest.fixture(scope="session")
def rules():
    return default_rule_set()


def write_manifest(path: Path, rows: list[dict]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=MANIFEST_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


def manifest_row(case_id: str, label: str = "normal", **overrides) -> dict:
    row = {
        "case_id": case_id,
        "video_path": f"videos/{case_id}.mp4",
        "label": label,
        "age_band": "50-59",
        "gender": "female",
        "view": "front",
        "duration_s": "12.5",
    }
    row.update(overrides)
    return row


@pytest.fixture
def manifest_761(tmp_path):
    """Manifest mirroring the reported corpus shape: 504 abnormal + 257 normal."""
    rows = [manifest_row(f"c{i:04d}", "abnormal") for i in range(504)]
    rows += [manifest_row(f"c{i:04d}", "normal") for i in range(504, 761)]
    return write_manifest(tmp_path / "manifest.csv", rows)


@pytest.fixture
def sim_setup(rules):
    """Zero-defect 20-case corpus with a simulated gateway."""
    corpus = generate_synthetic_corpus(20, DefectProfile(), seed=7, rules=rules)
    gateway = ModelGateway(BackendConfig(backend="simulated", seed=7), rules=rules, corpus=corpus)
    return corpus, gateway
