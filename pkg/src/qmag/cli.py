"""Command-line client for the sweep operations.

Each subcommand mirrors one service endpoint and runs the same handler
in-process by default; pass --server to send the request to a running
service instead (the bytes written are identical either way). A JSON config
file supplies any request field, and explicit flags override the config.

Exit codes: 0 success, 1 validation report failed (or server-side error),
2 bad arguments or config, 3 I/O or connection failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from pathlib import Path

import httpx
from pydantic import ValidationError

from . import __version__
from .linalg import ContractViolationError, ConvergenceError
from .service.app import handle_sweep
from .service.schemas import SweepRequest
from .sweeps import SweepKind, sweep_csv_text

__all__ = ["main", "build_parser"]

_SWEEP_COMMANDS = (
    SweepKind.QFI_CURVE,
    SweepKind.SENSITIVITY_CURVE,
    SweepKind.HEATMAP_TC,
    SweepKind.HEATMAP_TJ,
    SweepKind.DECOHERENCE_COMPARE,
    SweepKind.SNR_CURVE,
    SweepKind.VALIDATE,
)

_HELP = {
    SweepKind.QFI_CURVE: "Fisher information and sensitivity versus time",
    SweepKind.SENSITIVITY_CURVE: "sensitivity bound versus time",
    SweepKind.HEATMAP_TC: "sensitivity over the (t, C) plane",
    SweepKind.HEATMAP_TJ: "sensitivity over the (t, J) plane",
    SweepKind.DECOHERENCE_COMPARE: "sensitivity with and without dephasing",
    SweepKind.SNR_CURVE: "contrast readout versus the Fisher bound",
    SweepKind.VALIDATE: "run the randomized self-check report",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qmag",
        description="two-qubit driven-probe magnetometry sweeps")
    parser.add_argument("--version", action="version", version=f"qmag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for kind in _SWEEP_COMMANDS:
        p = sub.add_parser(kind.value, help=_HELP[kind])
        p.add_argument("--preset", help="named preset supplying defaults")
        p.add_argument("--config", help="JSON file with request fields")
        p.add_argument("--out", help="output CSV path (default: stdout)")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--shots", type=int, default=None,
                       help="shots per point (n_shots)")
        p.add_argument("--t-lo", type=float, default=None)
        p.add_argument("--t-hi", type=float, default=None)
        p.add_argument("--t-points", type=int, default=None)
        p.add_argument("--axis2-lo", type=float, default=None)
        p.add_argument("--axis2-hi", type=float, default=None)
        p.add_argument("--axis2-points", type=int, default=None)
        p.add_argument("--alpha", type=float, action="append", default=None,
                       help="phase offset; repeat for one curve per value")
        p.add_argument("--draws", type=int, default=None,
                       help="randomized draws for the validate report")
        p.add_argument("--server", default=None,
                       help="base URL of a running service; default in-process")
        p.set_defaults(func=_run_sweep_command, kind=kind)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.set_defaults(func=_run_serve)
    return parser


def _load_config(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text)
    if not isinstance(data, dict):
        raise ContractViolationError("config must be a JSON object")
    return data


def _range_flags(data: dict, key: str, lo, hi, points, flag_stem: str) -> None:
    given = [v for v in (lo, hi, points) if v is not None]
    if not given:
        return
    if len(given) != 3:
        raise ContractViolationError(
            f"--{flag_stem}-lo, --{flag_stem}-hi and --{flag_stem}-points "
            "must be given together")
    data[key] = {"lo": lo, "hi": hi, "points": points}


def _build_request(args) -> SweepRequest:
    data = _load_config(args.config) if args.config else {}
    if args.preset is not None:
        data["preset"] = args.preset
    _range_flags(data, "t_range", args.t_lo, args.t_hi, args.t_points, "t")
    _range_flags(data, "axis2_range", args.axis2_lo, args.axis2_hi,
                 args.axis2_points, "axis2")
    if args.shots is not None:
        data["n_shots"] = args.shots
    if args.seed is not None:
        data["seed"] = args.seed
    if args.alpha is not None:
        data["alphas"] = args.alpha
    if args.draws is not None:
        data["draws"] = args.draws
    return SweepRequest.model_validate(data)


def _fetch_remote_csv(server: str, kind: SweepKind, request: SweepRequest) -> str:
    url = server.rstrip("/") + f"/v1/{kind.value}"
    body = request.model_dump(exclude_unset=True, exclude_none=True)
    response = httpx.post(url, params={"format": "csv"}, json=body, timeout=600.0)
    if response.status_code >= 400:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        code = 2 if response.status_code < 500 else 1
        raise _CommandError(f"server rejected request ({response.status_code}): {detail}",
                            code)
    return response.text


class _CommandError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _failed_checks(csv_text: str) -> list[str]:
    lines = [l for l in csv_text.splitlines() if l and not l.startswith("#")]
    reader = csv.reader(io.StringIO("\n".join(lines)))
    header = next(reader, None)
    if header is None or "pass" not in header or "check_name" not in header:
        return ["malformed validation report"]
    idx = header.index("pass")
    name = header.index("check_name")
    return [row[name] for row in reader if row[idx] != "true"]


def _write_output(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
        return
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _run_sweep_command(args) -> int:
    request = _build_request(args)
    if args.server is not None:
        text = _fetch_remote_csv(args.server, args.kind, request)
    else:
        text = sweep_csv_text(handle_sweep(args.kind, request))
    _write_output(text, args.out)
    if args.kind is SweepKind.VALIDATE:
        failed = _failed_checks(text)
        if failed:
            print("validate: failing checks: " + ", ".join(failed), file=sys.stderr)
            return 1
    return 0


def _run_serve(args) -> int:
    import uvicorn

    from .service.app import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _CommandError as exc:
        print(f"qmag: {exc}", file=sys.stderr)
        return exc.code
    except (ContractViolationError, ValidationError, json.JSONDecodeError) as exc:
        print(f"qmag: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"qmag: {exc}", file=sys.stderr)
        return 1
    except (OSError, httpx.TransportError) as exc:
        print(f"qmag: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
