import json

import pytest
from fastapi.testclient import TestClient

from matra.corpus import EOS_ID
from matra.service import ServeConfig, TokenBucket, create_app

from conftest import rigged_checkpoint


@pytest.fixture()
def client(memorized, tmp_path):
    ckpt, _ = memorized
    config = ServeConfig(checkpoint_path="unused", annotation_store=tmp_path / "ann.jsonl")
    app = create_app(config, checkpoint=ckpt)
    return TestClient(app)


@pytest.fixture()
def cheap_client_factory(toy_setup, tmp_path):
    _, vocab, config = toy_setup

    def make(**overrides):
        serve = ServeConfig(checkpoint_path="unused", annotation_store=tmp_path / "ann.jsonl", **overrides)
        ckpt = rigged_checkpoint(vocab, config, favored_id=EOS_ID)
        return TestClient(create_app(serve, checkpoint=ckpt))

    return make


class TestHealth:
    def test_health_ok(self, client):
        response = client.get("/health")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "ok"
        assert body["model"]["embed_size"] == 32
        assert body["model"]["mode"] == "bidirectional"


class TestTransliterate:
    def test_unknown_language_is_400_with_allowed_set(self, client):
        response = client.post(
            "/transliterate", json={"text": "KT", "source_lang": "french", "target_lang": "hindi"}
        )
        assert response.status_code == 400
        assert "english" in response.json()["detail"]

    def test_script_violation_is_422_naming_character(self, client):
        response = client.post(
            "/transliterate", json={"text": "K9", "source_lang": "english", "target_lang": "hindi"}
        )
        assert response.status_code == 422
        assert "'9'" in response.json()["detail"]

    def test_same_languages_is_400(self, client):
        response = client.post(
            "/transliterate", json={"text": "KT", "source_lang": "hindi", "target_lang": "hindi"}
        )
        assert response.status_code == 400

    def test_sentence_preserves_word_count(self, client, toy_setup):
        corpus, _, _ = toy_setup
        words = [t.source for t in corpus.triples if t.source_lang.value == "english"][:4]
        response = client.post(
            "/transliterate",
            json={"text": " ".join(words), "source_lang": "english", "target_lang": "hindi"},
        )
        assert response.status_code == 200
        body = response.json()
        assert len(body["output"].split()) == 4
        assert "intermediate" not in body

    def test_indic_to_indic_exposes_intermediate(self, client, toy_setup):
        corpus, _, _ = toy_setup
        word = next(t.source for t in corpus.triples if t.source_lang.value == "hindi")
        response = client.post(
            "/transliterate", json={"text": word, "source_lang": "hindi", "target_lang": "kannada"}
        )
        assert response.status_code == 200
        body = response.json()
        assert isinstance(body["intermediate"], list) and len(body["intermediate"]) == 1

    def test_rate_limit_third_request_within_minute_is_429(self, cheap_client_factory):
        client = cheap_client_factory(rate_limit_per_minute=2)
        payload = {"text": "KT", "source_lang": "english", "target_lang": "hindi"}
        assert client.post("/transliterate", json=payload).status_code == 200
        assert client.post("/transliterate", json=payload).status_code == 200
        response = client.post("/transliterate", json=payload)
        assert response.status_code == 429

    def test_oversized_body_is_413(self, cheap_client_factory):
        client = cheap_client_factory(max_body_bytes=200)
        payload = {"text": "K" * 500, "source_lang": "english", "target_lang": "hindi"}
        assert client.post("/transliterate", json=payload).status_code == 413


class TestTokenBucket:
    def test_refills_over_time(self):
        bucket = TokenBucket(per_minute=60)
        now = 100.0
        assert bucket.allow("c", now)
        for _ in range(59):
            bucket.allow("c", now)
        assert not bucket.allow("c", now)
        assert bucket.allow("c", now + 1.01)  # one token back after ~a second

    def test_clients_are_independent(self):
        bucket = TokenBucket(per_minute=1)
        assert bucket.allow("a", 0.0)
        assert not bucket.allow("a", 0.0)
        assert bucket.allow("b", 0.0)


ANNOTATION = {
    "id": "a1",
    "source_lang": "hindi",
    "target_lang": "bengali",
    "input": "कत",
    "prediction": "কত",
    "verdict": "correct",
    "reference": None,
    "annotator": "tester",
}


class TestAnnotations:
    def test_empty_store_reports_zero(self, client):
        response = client.get("/metrics/phonetic")
        assert response.status_code == 200
        assert response.json() == {"correct_sounding_count": 0, "total_count": 0, "phonetic_accuracy": None}

    def test_post_array_then_metrics_match_formula(self, client):
        records = []
        for i in range(3):
            records.append({**ANNOTATION, "id": f"c{i}"})
        records.append({**ANNOTATION, "id": "w0", "verdict": "incorrect", "reference": "কতন"})
        response = client.post("/annotations", json=records)
        assert response.status_code == 201
        assert response.json() == {"accepted": 4}
        summary = client.get("/metrics/phonetic").json()
        assert summary == {"correct_sounding_count": 3, "total_count": 4, "phonetic_accuracy": 0.75}

    def test_post_json_lines_body(self, client):
        lines = "\n".join(json.dumps({**ANNOTATION, "id": f"l{i}"}) for i in range(2))
        response = client.post("/annotations", content=lines.encode("utf-8"))
        assert response.status_code == 201
        assert response.json() == {"accepted": 2}

    def test_incorrect_without_reference_is_422(self, client):
        bad = {**ANNOTATION, "verdict": "incorrect", "reference": None}
        response = client.post("/annotations", json=[bad])
        assert response.status_code == 422

    def test_garbage_body_is_400(self, client):
        response = client.post("/annotations", content=b"not json at all {{{")
        assert response.status_code == 400

    def test_metrics_accumulate_across_posts(self, client):
        client.post("/annotations", json=[{**ANNOTATION, "id": "x0"}])
        first = client.get("/metrics/phonetic").json()["total_count"]
        client.post("/annotations", json=[{**ANNOTATION, "id": "x1"}])
        assert client.get("/metrics/phonetic").json()["total_count"] == first + 1
