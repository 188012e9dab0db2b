import pytest
from fastapi.testclient import TestClient

from kirchwave.service.app import create_app
from kirchwave.service.schemas import default_problem_config


@pytest.fixture(scope="module")
def client():
    return TestClient(create_app())


@pytest.fixture(scope="module")
def config():
    return default_problem_config().model_dump(by_alias=True)


def _small(config):
    doc = dict(config)
    doc["domain"] = {"length": config["domain"]["length"], "n_modes": 6, "n_phys": 12}
    doc["kernel"] = dict(config["kernel"], M=16)
    return doc


def test_healthz(client):
    resp = client.get("/healthz")
    assert resp.status_code == 200
    assert resp.json()["status"] == "ok"


def test_default_problem_document(client):
    doc = client.get("/problems/default").json()
    assert doc["lyapunov"] == {"alpha": 0.05, "lambda": 1.2}
    assert doc["kernel"]["delta1"] == 1.0
    assert set(doc) == {"domain", "kernel", "epsilon", "m", "delta", "f", "g", "h", "lyapunov"}


def test_check_ok(client, config):
    resp = client.post("/check", json={"problem": config})
    assert resp.status_code == 200
    body = resp.json()
    assert body["ok"] is True
    assert body["violations"] == []
    assert len(body["lyapunov_checks"]) == 5


def test_check_reports_violations(client, config):
    bad = dict(config)
    bad["delta"] = 1.5
    body = client.post("/check", json={"problem": bad}).json()
    assert body["ok"] is False
    assert any(v["equation"] == "§1" for v in body["violations"])


def test_unknown_keys_rejected(client, config):
    bad = dict(config)
    bad["extra_knob"] = 1
    resp = client.post("/check", json={"problem": bad})
    assert resp.status_code == 422


def test_nested_unknown_keys_rejected(client, config):
    bad = dict(config)
    bad["kernel"] = dict(config["kernel"], surprise=2)
    assert client.post("/check", json={"problem": bad}).status_code == 422


def test_simulate_columns(client, config):
    req = {"problem": _small(config), "t_final": 0.05, "dt": 1e-2}
    body = client.post("/simulate", json=req).json()
    assert body["energy"]["columns"] == [
        "t",
        "normH",
        "normH1",
        "I1",
        "A1",
        "B1",
        "diss_residual",
        "hist_lhs",
        "hist_rhs",
    ]
    assert len(body["energy"]["rows"]) == 6
    assert body["n_steps"] == 5


def test_simulate_numerical_abort(client, config):
    req = {
        "problem": _small(config),
        "t_final": 0.1,
        "dt": 1e-2,
        "ic": {"u0_mode": 1, "u0_amp": 1e200, "v0_mode": 1, "v0_amp": 0.0},
    }
    resp = client.post("/simulate", json=req)
    assert resp.status_code == 500
    assert resp.json()["detail"]["kind"] == "numerical-abort"


def test_bad_history_cells_is_config_error(client, config):
    bad = dict(config)
    bad["kernel"] = dict(config["kernel"], M=2)
    resp = client.post("/check", json={"problem": bad})
    assert resp.status_code == 400
    assert resp.json()["detail"]["kind"] == "config-error"


def test_decompose_endpoint(client, config):
    req = {"problem": _small(config), "t_final": 0.5, "dt": 5e-3}
    body = client.post("/decompose", json=req).json()
    assert body["series"]["columns"] == ["t", "H1_full", "H1_w1", "H1_w2", "additivity_defect"]
    assert body["max_additivity_defect"] < 1e-10


def test_pair_endpoint(client, config):
    req = {"problem": _small(config), "t_final": 0.2, "dt": 5e-3}
    body = client.post("/pair", json=req).json()
    assert body["E"] == [2.0 * a for a in body["Atilde1"]]
    assert body["T"] == pytest.approx(0.2)


def test_converge_guard(client, config):
    req = {"problem": _small(config), "dts": [1e-2], "t_final": 0.05, "dt_ref": 5e-3}
    resp = client.post("/converge", json=req)
    assert resp.status_code == 400
    assert resp.json()["detail"]["kind"] == "config-error"


def test_absorb_endpoint_auto_threshold(client, config):
    req = {
        "problem": _small(config),
        "ensemble": {"n_traj": 1, "radii": [1.0], "seed": 4, "t_final": 2.0, "dt": 1e-2},
    }
    body = client.post("/absorb", json=req).json()
    assert body["threshold_R"] > 0
    assert len(body["entries"]) == 1
