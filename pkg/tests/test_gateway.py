import json

import pytest
from fastapi.testclient import TestClient

from edgeprov.env import Environment
from edgeprov.gateway import create_app
from edgeprov.scenario import load_scenario

DRONE_INTENT = "I'm building a drone swarm to search for stray animals in a rural area"
DRONE_DETAILS = "latency under 50 ms, 4 drones, cell-1, 5 Mbps uplink each"


@pytest.fixture
def client(drone_scenario_path):
    env = Environment(load_scenario(drone_scenario_path))
    app = create_app(env)
    with TestClient(app) as c:
        c.env = env
        yield c


def full_conversation(client) -> str:
    r = client.post("/sessions", json={"description": DRONE_INTENT})
    assert r.status_code == 201
    sid = r.json()["session_id"]
    r = client.post(f"/sessions/{sid}/messages", json={"text": DRONE_DETAILS})
    assert r.status_code == 200
    assert r.json()["stage"] == "AWAIT_MODEL_CHOICE"
    session = client.get(f"/sessions/{sid}").json()
    ids = [c["model_id"] for c in session["candidates"]]
    r = client.post(f"/sessions/{sid}/model-choice", json={"index": ids.index("skyeye/uav-animal-detector")})
    assert r.status_code == 200
    assert r.json()["plan"]["node_id"] == "edge-cell-1"
    r = client.post(f"/sessions/{sid}/deploy-confirm", json={"accept": True})
    assert r.status_code == 200
    return sid


def test_empty_description_is_400(client):
    assert client.post("/sessions", json={"description": "  "}).status_code == 400


def test_unknown_session_is_404(client):
    assert client.get("/sessions/session-9999").status_code == 404
    assert (
        client.post("/sessions/session-9999/messages", json={"text": "hi"}).status_code == 404
    )


def test_full_drone_conversation_reaches_complete(client):
    sid = full_conversation(client)
    state = client.get(f"/sessions/{sid}").json()
    assert state["stage"] == "COMPLETE"
    assert state["plan"]["node_id"] == "edge-cell-1"
    assert len(state["xapp_ids"]) == 1


def test_message_during_noninteractive_stage_is_409(client):
    r = client.post("/sessions", json={"description": DRONE_INTENT})
    sid = r.json()["session_id"]
    client.post(f"/sessions/{sid}/messages", json={"text": DRONE_DETAILS})
    client.post(f"/sessions/{sid}/model-choice", json={"index": 0})
    client.post(f"/sessions/{sid}/deploy-confirm", json={"accept": True})
    # session is COMPLETE now; messages are out of turn
    r = client.post(f"/sessions/{sid}/messages", json={"text": "status?"})
    assert r.status_code == 409


def test_invalid_model_index_is_400(client):
    r = client.post("/sessions", json={"description": DRONE_INTENT})
    sid = r.json()["session_id"]
    client.post(f"/sessions/{sid}/messages", json={"text": DRONE_DETAILS})
    assert client.post(f"/sessions/{sid}/model-choice", json={"index": 99}).status_code == 400


def test_npcf_endpoints(client):
    body = {
        "target_ue_ids": ["drone-1"],
        "slice_id": "edge-ai",
        "gbr_ul_mbps": 5.0,
        "priority_level": 5,
    }
    r = client.post("/npcf/policies", json=body)
    assert r.status_code == 201
    policy = r.json()
    pid = policy["policy_id"]
    assert policy["gbr_ul_mbps"] == 5.0

    r = client.get(f"/npcf/policies/{pid}")
    assert r.status_code == 200

    body["gbr_ul_mbps"] = 7.0
    r = client.put(f"/npcf/policies/{pid}", json=body)
    assert r.status_code == 200 and r.json()["gbr_ul_mbps"] == 7.0

    r = client.get("/npcf/ues/drone-1/effective-rules")
    assert r.status_code == 200
    assert r.json()["gbr_ul_mbps"] == 7.0

    assert client.get("/npcf/policies/pol-9999").status_code == 404
    bad = dict(body, gbr_ul_mbps=50.0, mbr_ul_mbps=10.0)
    assert client.post("/npcf/policies", json=bad).status_code == 400


def test_edge_endpoints(client):
    nodes = client.get("/edge/nodes").json()
    assert [n["node_id"] for n in nodes] == ["edge-cell-1", "edge-regional-1"]

    r = client.post(
        "/edge/services",
        json={"model_id": "skyeye/uav-animal-detector", "node_id": "edge-regional-1"},
    )
    assert r.status_code == 201
    instance = r.json()
    assert instance["state"] == "pending"

    client.post("/sim/advance", json={"ms": 20})
    r = client.get(f"/edge/services/{instance['instance_id']}")
    assert r.json()["state"] == "running"

    r = client.delete(f"/edge/services/{instance['instance_id']}")
    assert r.json()["state"] == "terminated"
    assert client.delete(f"/edge/services/{instance['instance_id']}").status_code == 404

    # a model that fails servability cannot be deployed over the API
    r = client.post(
        "/edge/services",
        json={"model_id": "percept/retinanet-r101", "node_id": "edge-regional-1"},
    )
    assert r.status_code == 400


def test_sim_time_endpoints(client):
    assert client.get("/sim/time").json() == {"t_ms": 0}
    assert client.post("/sim/advance", json={"ms": 500}).json() == {"t_ms": 500}
    assert client.post("/sim/advance", json={"ms": 15}).status_code == 400


def test_stream_carries_stage_metric_alert_events(client):
    sid = full_conversation(client)
    client.post("/sim/advance", json={"ms": 1000})
    with client.stream("GET", "/stream", params={"timeout_s": 0.5}) as resp:
        lines = [json.loads(line) for line in resp.iter_lines() if line]
    kinds = {e["event"] for e in lines if e.get("event") != "heartbeat"}
    assert {"stage", "metric"} <= kinds
    stage_events = [e for e in lines if e["event"] == "stage"]
    assert stage_events[-1]["data"]["to"] == "COMPLETE"
    # events are unique and ordered per subscriber
    ids = [e["id"] for e in lines if e["event"] != "heartbeat"]
    assert ids == sorted(ids) and len(ids) == len(set(ids))


def test_stream_resume_by_last_event_id(client):
    full_conversation(client)
    with client.stream("GET", "/stream", params={"timeout_s": 0.3}) as resp:
        first = [json.loads(line) for line in resp.iter_lines() if line]
    first = [e for e in first if e["event"] != "heartbeat"]
    cut = first[len(first) // 2]["id"]
    with client.stream(
        "GET", "/stream", params={"timeout_s": 0.3, "last_event_id": cut}
    ) as resp:
        rest = [json.loads(line) for line in resp.iter_lines() if line]
    rest = [e for e in rest if e["event"] != "heartbeat"]
    assert [e["id"] for e in rest] == [e["id"] for e in first if e["id"] > cut]
