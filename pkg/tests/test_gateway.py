import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from romdx.errors import (
    EmptyDescription,
    EmptyFrameSet,
    GatewayTimeout,
    MalformedResponse,
    NotSynthetic,
    PrivacyGateRejected,
    RateLimited,
)
from romdx.gateway import (
    BackendConfig,
    DefectOutcome,
    DefectProfile,
    FrameSet,
    ModelGateway,
    SideSpec,
    SyntheticCase,
    SyntheticCaseSpec,
    generate_synthetic_corpus,
    render_description,
    render_transcript,
)
from romdx.ingest import CaseRecord
from romdx.ladder import Landmark
from romdx.prompts import PromptKind, render_prompt


FULL = SideSpec(Landmark.ABOVE_HEAD, Landmark.TOP_OF_HEAD, Landmark.CHEST)


def _record(case_id="sim-0000", privacy="masked", audio="removed"):
    return CaseRecord(
        case_id=case_id, video_path=f"videos/{case_id}.mp4", label="normal",
        age_band="40-49", gender="male", view="front", duration_s=20.0,
        privacy_state=privacy, audio_state=audio,
    )


def _synthetic(case_id, spec, outcome=None):
    from romdx.evaluation import rule_oracle
    from romdx.prompts import default_rule_set

    record = CaseRecord(
        case_id=case_id, video_path=f"videos/{case_id}.mp4",
        label=rule_oracle(spec, default_rule_set()),
        age_band="40-49", gender="male", view="front", duration_s=20.0,
        privacy_state="masked", audio_state="removed",
    )
    return SyntheticCase(
        record=record, spec=spec, outcome=outcome or DefectOutcome(),
        expected_a=1.0, expected_r=1.0,
    )


def _sim_gateway(rules, cases):
    return ModelGateway(BackendConfig(backend="simulated"), rules=rules, corpus=cases)


# --- config invariants ---------------------------------------------------------


def test_backend_config_invariants():
    with pytest.raises(ValueError):
        BackendConfig(timeout_s=0)
    with pytest.raises(ValueError):
        BackendConfig(rate_limit_per_min=0)
    with pytest.raises(ValueError):
        BackendConfig(backend="local")


def test_defect_profile_bounds():
    with pytest.raises(ValueError):
        DefectProfile(omit_movement_prob=1.5)


# --- corpus generation -----------------------------------------------------------


def test_zero_defect_corpus_expectations(rules):
    corpus = generate_synthetic_corpus(4, DefectProfile(), seed=7, rules=rules)
    assert len(corpus) == 4
    assert all(case.expected_a == 1.0 and case.expected_r == 1.0 for case in corpus)
    assert all(case.outcome == DefectOutcome() for case in corpus)


def test_symmetric_full_reach_is_normal(rules):
    from romdx.evaluation import rule_oracle

    spec = SyntheticCaseSpec(left=FULL, right=FULL)
    assert rule_oracle(spec, rules) == "normal"


def test_always_omit_bounds_expected_a(rules):
    corpus = generate_synthetic_corpus(
        50, DefectProfile(omit_movement_prob=1.0), seed=3, rules=rules
    )
    assert all(case.expected_a in (0.0, 0.5) for case in corpus)
    assert all(case.outcome.omitted for case in corpus)


def test_corpus_deterministic_under_seed(rules):
    first = generate_synthetic_corpus(30, DefectProfile(0.3, 0.2, 0.1), seed=42, rules=rules)
    second = generate_synthetic_corpus(30, DefectProfile(0.3, 0.2, 0.1), seed=42, rules=rules)
    assert first == second


def test_corpus_size_validated(rules):
    with pytest.raises(ValueError):
        generate_synthetic_corpus(0, DefectProfile(), seed=1, rules=rules)


def test_normal_specs_are_symmetric(rules):
    corpus = generate_synthetic_corpus(100, DefectProfile(), seed=5, rules=rules)
    for case in corpus:
        if case.spec.affected_side == "none":
            assert case.spec.left == case.spec.right


# --- simulated backend -----------------------------------------------------------


def test_describe_symmetric_full_elevation(rules):
    spec = SyntheticCaseSpec(left=FULL, right=FULL)
    case = _synthetic("sim-0000", spec)
    gateway = _sim_gateway(rules, [case])
    response = gateway.describe_video(case.record, render_prompt(PromptKind.DESCRIBE, rules))
    assert "forward elevation" in response.text
    assert "reaches above head" in response.text
    assert "symmetric" in response.text
    assert response.model_id == "sim-describe-v1"


def test_describe_deterministic(rules, sim_setup):
    corpus, gateway = sim_setup
    prompt = render_prompt(PromptKind.DESCRIBE, rules)
    record = corpus[0].record
    assert gateway.describe_video(record, prompt).text == gateway.describe_video(record, prompt).text


def test_judge_limited_behind_back_positive(rules):
    spec = SyntheticCaseSpec(
        left=FULL,
        right=SideSpec(Landmark.ABOVE_HEAD, Landmark.TOP_OF_HEAD, Landmark.BUTTOCK),
        affected_side="right",
    )
    description = render_description("sim-0009", spec, DefectOutcome())
    gateway = _sim_gateway(rules, [])
    response = gateway.judge_text(description, render_prompt(PromptKind.JUDGE, rules))
    assert response.text.rstrip().endswith("POSITIVE")
    assert "hand behind back: limited" in response.text


def test_judge_symmetric_full_negative(rules):
    description = render_description("sim-0001", SyntheticCaseSpec(left=FULL, right=FULL), DefectOutcome())
    gateway = _sim_gateway(rules, [])
    response = gateway.judge_text(description, render_prompt(PromptKind.JUDGE, rules))
    assert response.text.rstrip().endswith("NEGATIVE")


def test_judge_empty_description(rules):
    gateway = _sim_gateway(rules, [])
    with pytest.raises(EmptyDescription):
        gateway.judge_text("   ", render_prompt(PromptKind.JUDGE, rules))


def test_diagnose_affected_right_side(rules):
    spec = SyntheticCaseSpec(
        left=FULL,
        right=SideSpec(Landmark.ACROMION, Landmark.TOP_OF_HEAD, Landmark.CHEST),
        affected_side="right",
    )
    case = _synthetic("sim-0002", spec)
    gateway = _sim_gateway(rules, [case])
    response = gateway.diagnose_direct(case.record, render_prompt(PromptKind.DIAGNOSE, rules))
    assert "right hand reaches no higher than the acromion" in response.text
    assert response.text.rstrip().endswith("POSITIVE")


def test_diagnose_contradiction_claims_success(rules):
    spec = SyntheticCaseSpec(
        left=FULL,
        right=SideSpec(Landmark.ABOVE_HEAD, Landmark.TOP_OF_HEAD, Landmark.BUTTOCK),
        affected_side="right",
    )
    outcome = DefectOutcome(
        contradiction=True, contradiction_target="hand_behind_back",
        contradiction_mode="claim_normal",
    )
    text = render_transcript("sim-0003", spec, outcome, rules)
    assert "hand behind back: normal" in text
    assert "flexibly" in text
    # the movements section still shows the true limitation
    assert "right hand reaches the buttock" in text


def test_empty_frame_set(rules):
    gateway = _sim_gateway(rules, [])
    frames = FrameSet(case=_record(), timestamps=())
    with pytest.raises(EmptyFrameSet):
        gateway.diagnose_direct(frames, render_prompt(PromptKind.DIAGNOSE, rules))


def test_unregistered_case_is_not_synthetic(rules):
    gateway = _sim_gateway(rules, [])
    with pytest.raises(NotSynthetic):
        gateway.diagnose_direct(_record("ghost"), render_prompt(PromptKind.DIAGNOSE, rules))


def test_spec_round_trips_through_json(rules):
    corpus = generate_synthetic_corpus(25, DefectProfile(0.5, 0.5, 0.5), seed=9, rules=rules)
    for case in corpus:
        assert SyntheticCase.from_json_dict(json.loads(json.dumps(case.to_json_dict()))) == case


# --- remote backend --------------------------------------------------------------------


def _remote_cfg(**overrides):
    defaults = dict(
        backend="remote", endpoint="http://backend.test/v1", api_key="k",
        timeout_s=5.0, max_retries=2, rate_limit_per_min=6000.0,
    )
    defaults.update(overrides)
    return BackendConfig(**defaults)


def test_privacy_gate_blocks_before_any_network(rules):
    calls = []

    def transport(url, payload, headers, timeout_s):
        calls.append(payload)
        return 200, {"transcript": "x", "model_id": "m"}

    gateway = ModelGateway(_remote_cfg(), rules=rules, transport=transport)
    raw_case = _record(privacy="raw")
    with pytest.raises(PrivacyGateRejected):
        gateway.describe_video(raw_case, render_prompt(PromptKind.DESCRIBE, rules))
    with pytest.raises(PrivacyGateRejected):
        gateway.diagnose_direct(raw_case, render_prompt(PromptKind.DIAGNOSE, rules))
    noisy_case = _record(audio="present")
    with pytest.raises(PrivacyGateRejected):
        gateway.diagnose_direct(noisy_case, render_prompt(PromptKind.DIAGNOSE, rules))
    assert calls == []


def test_remote_success_and_payload_shape(rules):
    seen = {}

    def transport(url, payload, headers, timeout_s):
        seen.update(url=url, payload=payload, headers=headers)
        return 200, {"transcript": "== FINAL ==\nNEGATIVE", "model_id": "prov-1"}

    gateway = ModelGateway(_remote_cfg(), rules=rules, transport=transport)
    response = gateway.describe_video(_record(), render_prompt(PromptKind.DESCRIBE, rules))
    assert response.model_id == "prov-1"
    assert response.attempts == 1
    assert seen["payload"]["task"] == "describe"
    assert seen["payload"]["media_url"].endswith(".mp4")
    assert seen["payload"]["frames"] is None
    assert seen["headers"]["Authorization"] == "Bearer k"


def test_remote_frames_payload(rules):
    seen = {}

    def transport(url, payload, headers, timeout_s):
        seen.update(payload=payload)
        return 200, {"transcript": "ok", "model_id": "m"}

    gateway = ModelGateway(_remote_cfg(), rules=rules, transport=transport)
    frames = FrameSet(case=_record(), timestamps=(1.25, 3.75))
    gateway.diagnose_direct(frames, render_prompt(PromptKind.DIAGNOSE, rules))
    assert seen["payload"]["task"] == "diagnose"
    assert seen["payload"]["frames"] == ["videos/sim-0000.mp4#t=1.250", "videos/sim-0000.mp4#t=3.750"]
    assert seen["payload"]["media_url"] is None


def test_retry_then_success(rules):
    statuses = iter([500, 200])
    attempts = []

    def transport(url, payload, headers, timeout_s):
        status = next(statuses)
        attempts.append(status)
        return status, {"transcript": "ok", "model_id": "m"} if status == 200 else {}

    gateway = ModelGateway(_remote_cfg(), rules=rules, transport=transport)
    response = gateway.judge_text("desc", render_prompt(PromptKind.JUDGE, rules))
    assert response.attempts == 2
    assert attempts == [500, 200]


def test_retries_never_exceed_budget(rules):
    calls = []

    def transport(url, payload, headers, timeout_s):
        calls.append(1)
        raise GatewayTimeout("boom")

    gateway = ModelGateway(_remote_cfg(max_retries=3), rules=rules, transport=transport)
    with pytest.raises(GatewayTimeout):
        gateway.judge_text("desc", render_prompt(PromptKind.JUDGE, rules))
    assert len(calls) == 4  # initial try + 3 retries


def test_rate_limited_after_exhaustion(rules):
    gateway = ModelGateway(
        _remote_cfg(max_retries=1), rules=rules,
        transport=lambda *a: (429, {}),
    )
    with pytest.raises(RateLimited):
        gateway.judge_text("desc", render_prompt(PromptKind.JUDGE, rules))


def test_client_error_is_fatal_not_retried(rules):
    calls = []

    def transport(url, payload, headers, timeout_s):
        calls.append(1)
        return 400, {}

    gateway = ModelGateway(_remote_cfg(max_retries=5), rules=rules, transport=transport)
    with pytest.raises(MalformedResponse):
        gateway.judge_text("desc", render_prompt(PromptKind.JUDGE, rules))
    assert len(calls) == 1


def test_missing_transcript_is_malformed(rules):
    gateway = ModelGateway(
        _remote_cfg(), rules=rules, transport=lambda *a: (200, {"model_id": "m"})
    )
    with pytest.raises(MalformedResponse):
        gateway.judge_text("desc", render_prompt(PromptKind.JUDGE, rules))


def test_rate_limiter_paces_with_mock_clock(rules):
    now = [0.0]
    sleeps = []

    def clock():
        return now[0]

    def sleep(duration):
        sleeps.append(duration)
        now[0] += duration

    gateway = ModelGateway(
        _remote_cfg(rate_limit_per_min=60.0),  # one request per second
        rules=rules,
        transport=lambda *a: (200, {"transcript": "ok", "model_id": "m"}),
        clock=clock, sleep=sleep,
    )
    prompt = render_prompt(PromptKind.JUDGE, rules)
    gateway.judge_text("a", prompt)
    gateway.judge_text("b", prompt)
    gateway.judge_text("c", prompt)
    assert len(sleeps) == 2
    assert all(abs(duration - 1.0) < 1e-9 for duration in sleeps)


def test_remote_over_real_http(rules):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            length = int(self.headers["Content-Length"])
            payload = json.loads(self.rfile.read(length))
            body = json.dumps(
                {"transcript": f"echo:{payload['task']}", "model_id": "stub-model"}
            ).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        cfg = _remote_cfg(endpoint=f"http://127.0.0.1:{server.server_port}/v1")
        gateway = ModelGateway(cfg, rules=rules)
        response = gateway.judge_text("desc", render_prompt(PromptKind.JUDGE, rules))
        assert response.text == "echo:judge"
        assert response.model_id == "stub-model"
    finally:
        server.shutdown()
