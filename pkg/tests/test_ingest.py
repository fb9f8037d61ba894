import math

import pytest
from hypothesis import given, strategies as st

from romdx.errors import (
    DuplicateCaseId,
    EmptyManifest,
    InvalidFrameCount,
    InvalidRow,
    MissingFile,
    UnknownLabel,
    UnresolvableVideoRef,
)
from romdx.ingest import (
    CaseRecord,
    PrepConfig,
    check_privacy_gate,
    ingest_manifest,
    load_caseset,
    plan_preprocess,
    run_preprocess,
    sample_frames,
    save_caseset,
)

from conftest import manifest_row, write_manifest


def _case(**overrides) -> CaseRecord:
    base = dict(
        case_id="c001", video_path="videos/c001.mp4", label="normal",
        age_band="50-59", gender="female", view="front", duration_s=12.5,
    )
    base.update(overrides)
    return CaseRecord(**base)


# --- manifest ingestion ---------------------------------------------------------


def test_ingest_full_corpus_summary(manifest_761):
    cases = ingest_manifest(manifest_761)
    summary = cases.summary
    assert summary["total"] == 761
    assert summary["abnormal"] == 504
    assert summary["normal"] == 257
    assert summary["abnormal"] + summary["normal"] == summary["total"]
    assert sum(summary["age_bands"].values()) == summary["total"]
    assert sum(summary["genders"].values()) == summary["total"]


def test_missing_file(tmp_path):
    with pytest.raises(MissingFile):
        ingest_manifest(tmp_path / "nope.csv")


def test_empty_file(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("", encoding="utf-8")
    with pytest.raises(EmptyManifest):
        ingest_manifest(path)


def test_header_only(tmp_path):
    write_manifest(tmp_path / "m.csv", [])
    with pytest.raises(EmptyManifest):
        ingest_manifest(tmp_path / "m.csv")


def test_duplicate_case_id(tmp_path):
    path = write_manifest(
        tmp_path / "m.csv", [manifest_row("c001"), manifest_row("c001", "abnormal")]
    )
    with pytest.raises(DuplicateCaseId, match="c001"):
        ingest_manifest(path)


def test_unknown_label(tmp_path):
    path = write_manifest(tmp_path / "m.csv", [manifest_row("c001", label="maybe")])
    with pytest.raises(UnknownLabel):
        ingest_manifest(path)


def test_bad_duration_rejected_not_repaired(tmp_path):
    path = write_manifest(tmp_path / "m.csv", [manifest_row("c001", duration_s="-3")])
    with pytest.raises(InvalidRow):
        ingest_manifest(path)
    path = write_manifest(tmp_path / "m.csv", [manifest_row("c002", duration_s="soon")])
    with pytest.raises(InvalidRow):
        ingest_manifest(path)


def test_wrong_header_rejected(tmp_path):
    path = tmp_path / "m.csv"
    path.write_text("id,video,label\nc1,v,normal\n", encoding="utf-8")
    with pytest.raises(InvalidRow):
        ingest_manifest(path)


def test_export_reingest_round_trip(tmp_path):
    rows = [manifest_row(f"c{i}", "abnormal" if i % 2 else "normal") for i in range(10)]
    cases = ingest_manifest(write_manifest(tmp_path / "m.csv", rows))
    out = tmp_path / "cases.jsonl"
    save_caseset(cases, out)
    again = load_caseset(out)
    assert again == cases
    # a second export is byte-identical
    out2 = tmp_path / "cases2.jsonl"
    save_caseset(again, out2)
    assert out.read_bytes() == out2.read_bytes()


# --- privacy gate ------------------------------------------------------------------


@pytest.mark.parametrize(
    "privacy,audio,passed,reasons",
    [
        ("masked", "removed", True, ()),
        ("raw", "removed", False, ("faces_unmasked",)),
        ("masked", "present", False, ("audio_present",)),
        ("raw", "present", False, ("faces_unmasked", "audio_present")),
    ],
)
def test_privacy_gate_all_states(privacy, audio, passed, reasons):
    decision = check_privacy_gate(_case(privacy_state=privacy, audio_state=audio))
    assert decision.passed is passed
    assert decision.reasons == reasons


# --- preprocessing plans -------------------------------------------------------------


def test_default_plan_order():
    plan = plan_preprocess(_case())
    assert plan.steps[0] == "mask_faces"
    assert plan.steps[1] == "strip_audio"
    assert plan.steps[2].startswith("crop(")
    assert plan.steps[3].startswith("compress(")


def test_plan_keeps_mandatory_steps_when_crop_disabled():
    plan = plan_preprocess(_case(), PrepConfig(enable_crop=False, enable_compress=False))
    assert plan.steps == ("mask_faces", "strip_audio")


def test_plan_deterministic():
    config = PrepConfig()
    first = plan_preprocess(_case(), config)
    second = plan_preprocess(_case(), config)
    assert first == second
    assert first.command == second.command


def test_plan_rejects_empty_video_ref():
    with pytest.raises(UnresolvableVideoRef):
        plan_preprocess(_case(video_path=""))


def test_run_preprocess_flips_flags_only_on_success():
    case = _case()
    seen = []
    done = run_preprocess(case, runner=lambda argv: seen.append(argv) or 0)
    assert done.privacy_state == "masked" and done.audio_state == "removed"
    assert done.preprocess_done
    assert seen and seen[0][0] == "transcode"
    with pytest.raises(UnresolvableVideoRef):
        run_preprocess(case, runner=lambda argv: 1)
    assert case.privacy_state == "raw"  # original untouched


# --- frame sampling ---------------------------------------------------------------


def test_sample_frames_even_split():
    assert sample_frames(10.0, 5) == [1.0, 3.0, 5.0, 7.0, 9.0]


def test_sample_frames_single():
    assert sample_frames(10.0, 1) == [5.0]


def test_sample_frames_midpoints_hand_checked():
    # midpoint rule at (k + 0.5) * 7/3
    expected = [7.0 / 6.0, 3.5, 35.0 / 6.0]
    got = sample_frames(7.0, 3)
    assert all(math.isclose(a, b) for a, b in zip(got, expected))


def test_sample_frames_zero_count():
    with pytest.raises(InvalidFrameCount):
        sample_frames(10.0, 0)


def test_sample_frames_bad_duration():
    with pytest.raises(ValueError):
        sample_frames(0.0, 4)


@given(
    duration=st.floats(min_value=0.1, max_value=7200.0, allow_nan=False),
    n=st.integers(min_value=1, max_value=500),
)
def test_sample_frames_properties(duration, n):
    frames = sample_frames(duration, n)
    assert len(frames) == n
    assert all(0.0 < t < duration for t in frames)
    assert all(a < b for a, b in zip(frames, frames[1:]))
