import json
import shutil
import socket
import subprocess
import sys
import time

import httpx
import pytest

from qmag.cli import main
from qmag.service import handle_sweep
from qmag.service.schemas import SweepRequest
from qmag.sweeps import SweepKind, sweep_csv_text


def data_rows(text):
    lines = [line for line in text.splitlines() if not line.startswith("# ")]
    return lines[0], lines[1:]


def metadata(text):
    out = {}
    for line in text.splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(" = ")
            out[key] = value
    return out


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.startswith("qmag ")


def test_stdout_default(capsys):
    assert main(["qfi-curve", "--preset", "fig1", "--t-lo", "0",
                 "--t-hi", "1", "--t-points", "5"]) == 0
    text = capsys.readouterr().out
    header, rows = data_rows(text)
    assert header == "t,f_q,sqrtN_delta_b,alpha,dyson_trusted"
    assert len(rows) == 5 * 2
    assert metadata(text)["preset"] == "fig1"


def test_out_file_roundtrip(tmp_path, capsys):
    out = tmp_path / "snr.csv"
    assert main(["snr-curve", "--preset", "fig6", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    expected = sweep_csv_text(handle_sweep(SweepKind.SNR_CURVE,
                                           SweepRequest(preset="fig6")))
    assert out.read_text(encoding="utf-8") == expected


def test_repeat_runs_byte_identical(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    for path in (a, b):
        assert main(["validate", "--draws", "15", "--seed", "11",
                     "--out", str(path)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_validate_exit_zero(capsys):
    assert main(["validate", "--draws", "10", "--seed", "1"]) == 0
    text = capsys.readouterr().out
    _, rows = data_rows(text)
    assert all(row.rsplit(",", 1)[1] == "true" for row in rows)


def test_config_file_with_flag_override(tmp_path, capsys):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({
        "params": {"c": 0.3, "j": 0.1},
        "t_range": {"lo": 0.0, "hi": 2.0, "points": 11},
        "seed": 1,
    }), encoding="utf-8")
    assert main(["qfi-curve", "--config", str(config), "--seed", "2"]) == 0
    meta = metadata(capsys.readouterr().out)
    assert meta["seed"] == "2"
    assert meta["t_points"] == "11"
    assert float(meta["c"]) == pytest.approx(0.3)
    assert "preset" not in meta


def test_alpha_flags(capsys):
    assert main(["sensitivity-curve", "--t-lo", "0.1", "--t-hi", "1",
                 "--t-points", "4", "--alpha", "0", "--alpha", "0.5"]) == 0
    text = capsys.readouterr().out
    assert metadata(text)["alphas"] == "0,0.5"
    _, rows = data_rows(text)
    assert len(rows) == 8


def test_heatmap_axis_flags(capsys):
    assert main(["heatmap-tc", "--t-lo", "0", "--t-hi", "1", "--t-points", "3",
                 "--axis2-lo", "0", "--axis2-hi", "0.5",
                 "--axis2-points", "3"]) == 0
    _, rows = data_rows(capsys.readouterr().out)
    assert len(rows) == 9


def test_partial_range_is_usage_error(capsys):
    assert main(["qfi-curve", "--t-lo", "0", "--t-hi", "5"]) == 2
    assert "t-lo" in capsys.readouterr().err


def test_unknown_preset_is_usage_error(capsys):
    assert main(["qfi-curve", "--preset", "fig9"]) == 2
    assert "fig9" in capsys.readouterr().err


def test_malformed_config_is_usage_error(tmp_path, capsys):
    config = tmp_path / "bad.json"
    config.write_text("not json", encoding="utf-8")
    assert main(["qfi-curve", "--config", str(config)]) == 2
    capsys.readouterr()


def test_ambiguous_params_config_is_usage_error(tmp_path, capsys):
    config = tmp_path / "ambiguous.json"
    config.write_text(json.dumps({"params": {"c": 0.1, "gamma_phi": 0.2}}),
                      encoding="utf-8")
    assert main(["qfi-curve", "--config", str(config)]) == 2
    capsys.readouterr()


def test_unwritable_output_is_io_error(capsys):
    assert main(["qfi-curve", "--preset", "fig1", "--t-lo", "0", "--t-hi", "1",
                 "--t-points", "3",
                 "--out", "/nonexistent-qmag-dir/out.csv"]) == 3
    capsys.readouterr()


def test_unreachable_server_is_io_error(capsys):
    assert main(["qfi-curve", "--preset", "fig1",
                 "--server", "http://127.0.0.1:9"]) == 3
    capsys.readouterr()


def test_console_script_smoke(tmp_path):
    exe = shutil.which("qmag")
    assert exe is not None
    out = tmp_path / "fig1.csv"
    proc = subprocess.run(
        [exe, "qfi-curve", "--preset", "fig1", "--out", str(out)],
        capture_output=True, text=True, timeout=120)
    assert proc.returncode == 0, proc.stderr
    in_process = sweep_csv_text(handle_sweep(SweepKind.QFI_CURVE,
                                             SweepRequest(preset="fig1")))
    assert out.read_text(encoding="utf-8") == in_process


def _free_port() -> int:
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def test_server_roundtrip_matches_in_process(tmp_path):
    port = _free_port()
    proc = subprocess.Popen(
        [sys.executable, "-m", "qmag.cli", "serve", "--port", str(port)],
        stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL)
    url = f"http://127.0.0.1:{port}"
    try:
        deadline = time.monotonic() + 30.0
        while True:
            try:
                if httpx.get(url + "/health", timeout=0.5).status_code == 200:
                    break
            except httpx.TransportError:
                pass
            if time.monotonic() > deadline:
                pytest.fail("server did not come up")
            time.sleep(0.2)
        out = tmp_path / "remote.csv"
        assert main(["sensitivity-curve", "--preset", "fig2",
                     "--server", url, "--out", str(out)]) == 0
        local = sweep_csv_text(handle_sweep(SweepKind.SENSITIVITY_CURVE,
                                            SweepRequest(preset="fig2")))
        assert out.read_text(encoding="utf-8") == local
    finally:
        proc.terminate()
        proc.wait(timeout=10)
