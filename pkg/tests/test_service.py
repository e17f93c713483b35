import math

import pytest
from fastapi.testclient import TestClient

from qmag.service import create_app, handle_sweep
from qmag.service.schemas import SweepRequest, resolve_spec
from qmag.sweeps import SweepKind, preset_spec, run_sweep, sweep_csv_text


@pytest.fixture(scope="module")
def client():
    with TestClient(create_app()) as c:
        yield c


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["version"]


def test_presets_endpoint(client):
    body = client.get("/presets").json()
    assert body["presets"]["fig1"] == "qfi-curve"
    assert body["presets"]["validate"] == "validate"
    assert body["defaults"]["snr-curve"] == "fig6"


def test_qfi_curve_json(client):
    resp = client.post("/v1/qfi-curve", json={"preset": "fig1"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["kind"] == "qfi-curve"
    assert body["preset"] == "fig1"
    assert body["columns"] == ["t", "f_q", "sqrtN_delta_b", "alpha",
                               "dyson_trusted"]
    assert len(body["rows"]) == 1002
    # infinities travel as strings so the payload stays strict JSON
    assert body["rows"][0][2] == "inf"
    assert body["metadata"]["t_star[alpha=0]"] == pytest.approx(6.3516, abs=5e-3)
    assert "timestamp" in body["metadata"]


def test_csv_format_matches_library(client):
    resp = client.post("/v1/sensitivity-curve",
                       params={"format": "csv"},
                       json={"preset": "fig2"})
    assert resp.status_code == 200
    assert resp.headers["content-type"].startswith("text/csv")
    expected = sweep_csv_text(run_sweep(preset_spec("fig2")))
    assert resp.text == expected


def test_param_override_via_c(client):
    resp = client.post("/v1/qfi-curve", json={
        "params": {"c": 0.3, "j": 0.1},
        "t_range": {"lo": 0.0, "hi": 2.0, "points": 5},
        "alphas": [0.0],
    })
    assert resp.status_code == 200
    body = resp.json()
    assert body["preset"] is None
    assert body["metadata"]["c"] == pytest.approx(0.3)
    assert body["metadata"]["j"] == 0.1
    assert len(body["rows"]) == 5


def test_ambiguous_c_rejected(client):
    resp = client.post("/v1/qfi-curve", json={
        "params": {"c": 0.3, "gamma_phi": 0.1},
    })
    assert resp.status_code == 400
    assert "detail" in resp.json()


def test_unknown_preset_rejected(client):
    resp = client.post("/v1/qfi-curve", json={"preset": "fig9"})
    assert resp.status_code == 400


def test_wrong_kind_preset_rejected(client):
    resp = client.post("/v1/qfi-curve", json={"preset": "fig6"})
    assert resp.status_code == 400


def test_extra_fields_rejected(client):
    resp = client.post("/v1/qfi-curve", json={"preset": "fig1", "bogus": 1})
    assert resp.status_code == 422
    resp = client.post("/v1/qfi-curve", json={"params": {"j": 0.1, "bogus": 1}})
    assert resp.status_code == 422


def test_bad_format_rejected(client):
    resp = client.post("/v1/qfi-curve", params={"format": "xml"},
                       json={"preset": "fig1"})
    assert resp.status_code == 422


def test_heatmap_axis2_defaults_from_preset(client):
    resp = client.post("/v1/heatmap-tc", json={
        "t_range": {"lo": 0.0, "hi": 1.0, "points": 3},
        "axis2_range": {"lo": 0.0, "hi": 0.4, "points": 3},
    })
    assert resp.status_code == 200
    body = resp.json()
    assert body["preset"] is None
    assert body["metadata"]["axis2_hi"] == 0.4
    assert len(body["rows"]) == 9
    # axis2 grid falls back to the figure preset when omitted
    resp = client.post("/v1/heatmap-tc", json={
        "t_range": {"lo": 0.0, "hi": 1.0, "points": 3},
    })
    assert resp.status_code == 200
    assert resp.json()["metadata"]["axis2_points"] == 201


def test_validate_json(client):
    resp = client.post("/v1/validate", json={"draws": 20, "seed": 3})
    assert resp.status_code == 200
    body = resp.json()
    rows = {row[0]: row for row in body["rows"]}
    assert all(row[3] for row in body["rows"])
    assert rows["normalization"][2] <= 1e-12
    assert body["metadata"]["all_pass"] is True


def test_probability_trace_json(client):
    resp = client.post("/v1/probability-trace", json={
        "params": {"c": 0.2, "gamma": 1.0, "j": 0.0, "omega_x": 0.0,
                   "omega_y": 0.0},
        "t_range": {"lo": 0.0, "hi": 5.0, "points": 6},
        "source": "closed_form",
    })
    assert resp.status_code == 200
    body = resp.json()
    assert body["columns"] == ["t", "p00", "p01", "p10", "p11", "source",
                               "margin"]
    last = body["rows"][-1]
    assert last[0] == 5.0
    assert last[1] == pytest.approx(2.0 / 3.0, abs=1e-12)
    assert last[2] == pytest.approx(1.0 / 6.0, abs=1e-12)
    assert last[5] == "closed_form"


def test_probability_trace_csv(client):
    payload = {
        "t_range": {"lo": 0.0, "hi": 1.0, "points": 3},
        "source": "numeric_dyson",
    }
    resp = client.post("/v1/probability-trace", params={"format": "csv"},
                       json=payload)
    assert resp.status_code == 200
    lines = resp.text.splitlines()
    header_idx = next(i for i, line in enumerate(lines)
                      if not line.startswith("# "))
    assert lines[header_idx] == "t,p00,p01,p10,p11,source,margin"


def test_probability_trace_bad_source(client):
    resp = client.post("/v1/probability-trace", json={
        "t_range": {"lo": 0.0, "hi": 1.0, "points": 3},
        "source": "magic",
    })
    assert resp.status_code == 400


def test_resolve_spec_merges_preset_and_flags():
    req = SweepRequest(preset="fig1", seed=9,
                       t_range={"lo": 0.0, "hi": 4.0, "points": 7})
    spec = resolve_spec(SweepKind.QFI_CURVE, req)
    assert spec.preset == "fig1"
    assert spec.seed == 9
    assert spec.t_range == (0.0, 4.0, 7)
    assert spec.params == preset_spec("fig1").params


def test_handle_sweep_defaults_to_kind_preset():
    result = handle_sweep(SweepKind.SNR_CURVE, SweepRequest())
    assert result.spec.preset == "fig6"
    assert math.isfinite(result.metadata["xi_min"])
