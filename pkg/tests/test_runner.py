import json
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from edgeprov.env import Environment
from edgeprov.errors import SchemaError
from edgeprov.gateway import create_app
from edgeprov.runner import load_script, run_scenario
from edgeprov.scenario import load_scenario

GOLDEN = Path(__file__).parent / "golden" / "drone_result.json"


@pytest.fixture(scope="module")
def script_path(fixtures_dir):
    return fixtures_dir / "scripts" / "drone_script.json"


def test_drone_run_matches_golden(drone_scenario_path, script_path, tmp_path):
    out = tmp_path / "result.json"
    result, code = run_scenario(drone_scenario_path, script_path, seed=42, out_file=out)
    assert code == 0
    assert result["final_stage"] == "COMPLETE"
    assert out.read_text() == GOLDEN.read_text()


def test_same_seed_twice_byte_identical(drone_scenario_path, script_path, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run_scenario(drone_scenario_path, script_path, seed=42, out_file=a)
    run_scenario(drone_scenario_path, script_path, seed=42, out_file=b)
    assert a.read_bytes() == b.read_bytes()


def test_script_omitting_model_choice_fails_with_stage(drone_scenario_path, tmp_path):
    script = tmp_path / "incomplete.json"
    script.write_text(
        json.dumps(
            {
                "description": "I'm building a drone swarm to search for stray animals",
                "steps": [{"say": "latency under 50 ms, 4 drones, cell-1, 5 Mbps uplink each"}],
            }
        )
    )
    out = tmp_path / "result.json"
    result, code = run_scenario(drone_scenario_path, script, seed=1, out_file=out)
    assert code == 1
    assert result["exit"]["stage"] == "AWAIT_MODEL_CHOICE"


def test_unknown_step_rejected(drone_scenario_path, tmp_path):
    script = tmp_path / "bad.json"
    script.write_text(json.dumps({"description": "x", "steps": [{"fly": 1}]}))
    with pytest.raises(SchemaError):
        run_scenario(drone_scenario_path, script, seed=1)


def test_script_schema_validation(tmp_path):
    path = tmp_path / "s.json"
    path.write_text("[1, 2]")
    with pytest.raises(SchemaError):
        load_script(path)
    path.write_text("{nope")
    with pytest.raises(SchemaError):
        load_script(path)


def test_api_cli_parity(drone_scenario_path, script_path):
    """The HTTP call sequence equivalent to the script yields the same final
    session state as the headless runner."""
    result, _ = run_scenario(drone_scenario_path, script_path, seed=42)
    cli_state = result["session"]

    env = Environment(load_scenario(drone_scenario_path), seed=42)
    with TestClient(create_app(env)) as client:
        script = json.loads(script_path.read_text())
        r = client.post("/sessions", json={"description": script["description"]})
        sid = r.json()["session_id"]
        for step in script["steps"]:
            if "say" in step:
                client.post(f"/sessions/{sid}/messages", json={"text": step["say"]})
            elif "choose_model" in step:
                client.post(f"/sessions/{sid}/model-choice", json={"index": step["choose_model"]})
            elif "confirm_deploy" in step:
                client.post(f"/sessions/{sid}/deploy-confirm", json=step["confirm_deploy"])
            elif "advance_ms" in step:
                client.post("/sim/advance", json={"ms": step["advance_ms"]})
            elif "infer" in step:
                state = client.get(f"/sessions/{sid}").json()
                for _ in range(step["infer"]["count"]):
                    env.edge.serve_request(state["instance_id"], step["infer"].get("payload_kb", 64))
        api_state = client.get(f"/sessions/{sid}").json()

    assert json.dumps(api_state, sort_keys=True) == json.dumps(cli_state, sort_keys=True)


def test_cli_run_subcommand(drone_scenario_path, script_path, tmp_path, capsys):
    from edgeprov.cli import main

    out = tmp_path / "capsys_result.json"
    code = main(
        [
            "run",
            "--scenario",
            str(drone_scenario_path),
            "--script",
            str(script_path),
            "--seed",
            "42",
            "--out",
            str(out),
        ]
    )
    assert code == 0
    assert "COMPLETE" in capsys.readouterr().out
    assert out.exists()


def test_cli_models_search(model_fixture_dir, capsys):
    from edgeprov.cli import main

    code = main(
        [
            "models",
            "search",
            "--task",
            "object_detection",
            "--backend",
            "fixture",
            "--limit",
            "3",
            "--fixture-dir",
            str(model_fixture_dir),
        ]
    )
    assert code == 0
    rows = json.loads(capsys.readouterr().out)
    assert [r["model_id"] for r in rows] == [
        "vistalab/yolov8n-coco",
        "detectron-hub/frcnn-r50",
        "acme-vision/ssd-mobilenet-v2",
    ]
