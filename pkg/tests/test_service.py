import dataclasses
import io
import zipfile

import pytest
from fastapi.testclient import TestClient

from metaglyph.config import EngineConfig, SearchConfig
from metaglyph.service import SqliteStore, create_app

from conftest import BURGER_CSV


FAST_SEARCH = SearchConfig(iterations=400, time_budget_ms=None)


@pytest.fixture
def client(corpus_dir):
    cfg = dataclasses.replace(EngineConfig(), corpus_dir=str(corpus_dir),
                              seed=7, search=FAST_SEARCH)
    return TestClient(create_app(config=cfg))


def upload(client, name="burger.csv", data=BURGER_CSV):
    return client.post("/sessions", files={"file": (name, data, "text/csv")})


def generate(client, session):
    r = client.post(f"/sessions/{session['session_id']}/generate",
                    json={"revision": session["revision"]})
    assert r.status_code == 200, r.text
    return r.json()


def test_create_session_summary(client):
    r = upload(client)
    assert r.status_code == 201
    s = r.json()
    assert s["topic"] == "burger"
    assert len(s["dimensions"]) == 6
    assert s["revision"] == 0
    types = {d["id"]: d["data_type"] for d in s["dimensions"]}
    assert types["d0"] == "categorical"
    assert types["d1"] == "numerical"


def test_malformed_csv_returns_field_level_error(client):
    r = upload(client, data=b"a,b\n1,2\n3\n")
    assert r.status_code == 400
    body = r.json()
    assert body["code"] == "ragged_rows"
    assert body["detail"] == {"row": 3}


def test_duplicate_upload_distinct_sessions(client):
    a, b = upload(client).json(), upload(client).json()
    assert a["session_id"] != b["session_id"]


def test_generate_returns_ranked_results(client):
    session = upload(client).json()
    g = generate(client, session)
    rewards = [r["reward"] for r in g["results"]]
    assert rewards == sorted(rewards, reverse=True)
    assert len(g["results"]) >= 1
    assert {c["candidate_id"] for c in g["diagnostics"]} >= {"burger.svg"}
    for r in g["results"]:
        assert r["svg"].startswith("<svg")
        assert r["reward_breakdown"]["r"] == r["reward"]


def test_generate_is_deterministic_per_seed(client):
    s1 = upload(client).json()
    s2 = upload(client).json()
    g1, g2 = generate(client, s1), generate(client, s2)
    assert [r["svg"] for r in g1["results"]] == [r["svg"] for r in g2["results"]]
    assert [r["result_id"] for r in g1["results"]] == \
        [r["result_id"] for r in g2["results"]]


def test_stale_revision_conflict(client):
    session = upload(client).json()
    generate(client, session)
    r = client.post(f"/sessions/{session['session_id']}/generate",
                    json={"revision": session["revision"]})
    assert r.status_code == 409
    assert r.json()["code"] == "stale_revision"


def test_unknown_session_and_result(client):
    assert client.get("/sessions/nope").status_code == 404
    session = upload(client).json()
    generate(client, session)
    r = client.get(f"/sessions/{session['session_id']}/results/nope")
    assert r.status_code == 404
    assert r.json()["code"] == "unknown_result"


def test_pins_are_honored_in_all_results(client):
    session = upload(client).json()
    sid = session["session_id"]
    g = generate(client, session)
    r = client.patch(f"/sessions/{sid}/mappings", json={
        "revision": g["revision"],
        "edits": [{"dimension": "d2", "target": {"kind": "element", "index": 1}}],
    })
    assert r.status_code == 200, r.text
    p = r.json()
    assert p["results"], "pinned regeneration must still produce results"
    for result in p["results"]:
        sol = result["solution"]
        pair_by_slot = {slot["id"]: pair
                        for slot, pair in zip(sol["slots"], sol["pairs"])}
        assert pair_by_slot["d2"] == {"kind": "element", "index": 1}


def test_pin_to_none_and_unpin_restores_baseline(client):
    session = upload(client).json()
    sid = session["session_id"]
    g = generate(client, session)
    baseline = [r["svg"] for r in g["results"]]
    p = client.patch(f"/sessions/{sid}/mappings", json={
        "revision": g["revision"],
        "edits": [{"dimension": "d3", "target": {"kind": "none"}}],
    }).json()
    for result in p["results"]:
        sol = result["solution"]
        pair_by_slot = {slot["id"]: pair
                        for slot, pair in zip(sol["slots"], sol["pairs"])}
        assert pair_by_slot["d3"]["kind"] == "none"
    q = client.patch(f"/sessions/{sid}/mappings", json={
        "revision": p["revision"],
        "edits": [{"dimension": "d3", "unpin": True}],
    }).json()
    assert [r["svg"] for r in q["results"]] == baseline


def test_unsatisfiable_pins_rejected(client):
    session = upload(client).json()
    sid = session["session_id"]
    g = generate(client, session)
    # categorical dimension on the vertical axis
    r = client.patch(f"/sessions/{sid}/mappings", json={
        "revision": g["revision"],
        "edits": [{"dimension": "d0", "target": {"kind": "axis", "index": 2}}]})
    assert r.status_code == 422
    # both pins on the same axis
    r = client.patch(f"/sessions/{sid}/mappings", json={
        "revision": g["revision"],
        "edits": [{"dimension": "d1", "target": {"kind": "axis", "index": 1}},
                  {"dimension": "d2", "target": {"kind": "axis", "index": 1}}]})
    assert r.status_code == 422
    # pinning a group to an axis
    r2 = client.post(f"/sessions/{sid}/groups", json={
        "revision": g["revision"],
        "groups": [{"name": "macros", "members": ["d3", "d4"]}]})
    assert r2.status_code == 200
    rev = r2.json()["revision"]
    r3 = client.patch(f"/sessions/{sid}/mappings", json={
        "revision": rev,
        "edits": [{"dimension": "g0", "target": {"kind": "axis", "index": 1}}]})
    assert r3.status_code == 422
    assert r3.json()["code"] == "unsatisfiable_pin"


def test_groups_endpoint_clears_results_and_validates(client):
    session = upload(client).json()
    sid = session["session_id"]
    g = generate(client, session)
    r = client.post(f"/sessions/{sid}/groups", json={
        "revision": g["revision"],
        "groups": [{"name": "macros", "members": ["d3", "d4"]}]})
    assert r.status_code == 200
    s = r.json()
    assert s["groups"] == [{"id": "g0", "name": "macros", "members": ["d3", "d4"]}]
    assert s["result_count"] == 0
    bad = client.post(f"/sessions/{sid}/groups", json={
        "revision": s["revision"],
        "groups": [{"name": "bad", "members": ["d0", "d1"]}]})
    assert bad.status_code == 422


def test_export_svg_matches_render_and_bundle_layout(client):
    session = upload(client).json()
    sid = session["session_id"]
    g = generate(client, session)
    rid = g["results"][0]["result_id"]
    svg = client.get(f"/sessions/{sid}/results/{rid}/export?format=svg")
    assert svg.status_code == 200
    assert svg.headers["content-type"].startswith("image/svg+xml")
    assert svg.content.decode() == g["results"][0]["svg"]
    again = client.get(f"/sessions/{sid}/results/{rid}/export?format=svg")
    assert again.content == svg.content
    bundle = client.get(f"/sessions/{sid}/results/{rid}/export?format=bundle")
    bundle2 = client.get(f"/sessions/{sid}/results/{rid}/export?format=bundle")
    assert bundle.content == bundle2.content
    zf = zipfile.ZipFile(io.BytesIO(bundle.content))
    names = set(zf.namelist())
    assert {"scene.svg", "legend.svg", "mapping.json", "metaphor.svg"} <= names
    element_files = [n for n in names if n.startswith("elements/")]
    detail = client.get(f"/sessions/{sid}/results/{rid}").json()
    assert len(element_files) == len(detail["elements"])
    assert zf.read("scene.svg") == svg.content


def test_unknown_export_format_is_bad_request(client):
    session = upload(client).json()
    g = generate(client, session)
    rid = g["results"][0]["result_id"]
    r = client.get(
        f"/sessions/{session['session_id']}/results/{rid}/export?format=pdf")
    assert r.status_code == 400
    assert r.json()["code"] == "bad_request"


def test_stored_reward_matches_breakdown(client):
    session = upload(client).json()
    g = generate(client, session)
    for r in g["results"]:
        bd = r["reward_breakdown"]
        products = bd["pair_products"]
        n = len(r["solution"]["pairs"])
        if bd["gate_passed"] and not bd["axis_conflict"]:
            expected = bd["overlap_ok"] * sum(products) / n
            assert r["reward"] == pytest.approx(expected, abs=1e-12)
        else:
            assert r["reward"] == 0.0


def test_shuffle_changes_seed_and_results_stay_valid(client):
    session = upload(client).json()
    sid = session["session_id"]
    g = generate(client, session)
    r = client.post(f"/sessions/{sid}/generate",
                    json={"revision": g["revision"], "shuffle": True})
    assert r.status_code == 200
    debug = client.get(f"/sessions/{sid}/debug").json()
    assert debug["seed"] == 8  # configured seed 7, shuffled once


def test_no_candidates_is_a_404(tmp_path):
    empty = tmp_path / "empty-corpus"
    empty.mkdir()
    cfg = dataclasses.replace(EngineConfig(), corpus_dir=str(empty), seed=7,
                              search=FAST_SEARCH)
    client = TestClient(create_app(config=cfg))
    session = upload(client).json()
    r = client.post(f"/sessions/{session['session_id']}/generate",
                    json={"revision": session["revision"]})
    assert r.status_code == 404
    assert r.json()["code"] == "no_candidates"


def test_all_candidates_rejected_returns_empty_with_diagnostics(tmp_path):
    corpus = tmp_path / "corpus"
    corpus.mkdir()
    # a single-drawable image matches the topic but fails the element gate
    (corpus / "burger.svg").write_bytes(
        b'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 10 10">'
        b'<rect x="1" y="1" width="8" height="8" fill="#000"/></svg>')
    cfg = dataclasses.replace(EngineConfig(), corpus_dir=str(corpus), seed=7,
                              search=FAST_SEARCH)
    client = TestClient(create_app(config=cfg))
    session = upload(client).json()
    g = generate(client, session)
    assert g["results"] == []
    reasons = {c["candidate_id"]: c["reason"] for c in g["diagnostics"]}
    assert reasons["burger.svg"] == "too_simple"


def test_sqlite_store_round_trip(tmp_path):
    store = SqliteStore(str(tmp_path / "sessions.db"), ttl_s=3600)
    store.put("abc", {"id": "abc", "revision": 3})
    assert store.get("abc") == {"id": "abc", "revision": 3}
    assert store.get("missing") is None
    expired = SqliteStore(str(tmp_path / "sessions.db"), ttl_s=0)
    assert expired.get("abc") is None


def test_sqlite_backed_service_flow(tmp_path, corpus_dir):
    cfg = dataclasses.replace(EngineConfig(), corpus_dir=str(corpus_dir),
                              seed=7, search=FAST_SEARCH)
    client = TestClient(create_app(config=cfg,
                                   store_path=str(tmp_path / "s.db")))
    session = upload(client).json()
    g = generate(client, session)
    assert g["results"]
    detail = client.get(
        f"/sessions/{session['session_id']}/results/{g['results'][0]['result_id']}")
    assert detail.status_code == 200
