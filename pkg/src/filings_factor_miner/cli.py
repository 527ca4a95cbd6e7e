"""Command-line client for the pipeline service.

Every subcommand is a thin HTTP client. By default requests run against
an in-process instance of the FastAPI app (no network, no server to
start); pass ``--server URL`` to target a running instance instead.

Exit codes: 0 success, 1 input/config error, 2 network error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import asyncio
import json
import sys
from pathlib import Path

import httpx

from .config import STAGES, resolve_config_paths
from .errors import InputError

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NETWORK = 2
EXIT_NUMERICAL = 3

_KIND_EXIT = {"input": EXIT_INPUT, "network": EXIT_NETWORK, "numerical": EXIT_NUMERICAL}


class ServiceClient:
    """Sends requests to a live server or the in-process ASGI app."""

    def __init__(self, server: str | None = None):
        self.server = server

    def request(self, method: str, path: str, payload: dict | None = None) -> tuple[int, dict]:
        if self.server:
            try:
                with httpx.Client(base_url=self.server, timeout=None) as client:
                    resp = client.request(method, path, json=payload)
                    try:
                        return resp.status_code, resp.json()
                    except ValueError:
                        return resp.status_code, {"message": resp.text[:500]}
            except httpx.TransportError as exc:
                return 502, {"kind": "network", "message": f"cannot reach {self.server}: {exc}"}
        return asyncio.run(self._in_process(method, path, payload))

    async def _in_process(self, method: str, path: str, payload: dict | None) -> tuple[int, dict]:
        from .service.app import create_app

        transport = httpx.ASGITransport(app=create_app())
        async with httpx.AsyncClient(transport=transport, base_url="http://service") as client:
            resp = await client.request(method, path, json=payload)
            return resp.status_code, resp.json()


def _exit_code(status: int, body: dict) -> int:
    if 200 <= status < 300:
        return EXIT_OK
    kind = body.get("kind")
    if kind in _KIND_EXIT:
        return _KIND_EXIT[kind]
    if status == 422:
        return EXIT_INPUT
    return EXIT_INPUT


def _print_error(status: int, body: dict) -> None:
    kind = body.get("kind", f"http {status}")
    message = body.get("message") or body.get("detail") or json.dumps(body)
    stage = body.get("stage")
    where = f" [stage {stage}]" if stage else ""
    print(f"error ({kind}){where}: {message}", file=sys.stderr)


def _load_config_payload(args) -> dict:
    path = Path(args.config)
    if not path.is_file():
        raise InputError(f"config file not found: {path}")
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed config {path}: line {exc.lineno}: {exc.msg}") from exc
    if not isinstance(raw, dict):
        raise InputError(f"config {path} must be a JSON object")
    raw = resolve_config_paths(raw, path.parent.resolve())

    overrides = {
        "cache_dir": args.cache_dir,
        "local_corpus": args.local_corpus,
        "prices_dir": args.prices_dir,
        "output_dir": args.output_dir,
        "run_id": args.run_id,
        "rate_limit": args.rate_limit,
        "user_agent": args.user_agent,
    }
    for key, value in overrides.items():
        if value is not None:
            raw[key] = value
    if args.views is not None:
        raw["views"] = [v.strip() for v in args.views.split(",") if v.strip()]
    if args.word_boundary:
        raw["word_boundary"] = True
    if args.center:
        raw["center"] = True
    # Paths given on the command line resolve against the caller's cwd,
    # unlike config-file paths, which resolve against the config location.
    cwd = Path.cwd()
    for key in ("cache_dir", "local_corpus", "prices_dir", "output_dir"):
        if overrides.get(key) is not None and not Path(raw[key]).is_absolute():
            raw[key] = str((cwd / raw[key]).resolve())
    return raw


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", required=True, help="JSON run config file")
    parser.add_argument("--server", default=None, help="service URL (default: in-process)")
    parser.add_argument("--cache-dir", dest="cache_dir", default=None, help="filing cache directory")
    parser.add_argument("--local-corpus", dest="local_corpus", default=None, help="local corpus mirror directory")
    parser.add_argument("--prices-dir", dest="prices_dir", default=None, help="per-ticker price CSV directory")
    parser.add_argument("--output-dir", dest="output_dir", default=None, help="output directory")
    parser.add_argument("--run-id", dest="run_id", default=None, help="report bundle id")
    parser.add_argument("--rate-limit", dest="rate_limit", type=float, default=None, help="max EDGAR requests per second")
    parser.add_argument("--user-agent", dest="user_agent", default=None, help="EDGAR contact string")
    parser.add_argument("--views", default=None, help="comma-separated matrix views (dummy,count)")
    parser.add_argument("--word-boundary", action="store_true", help="require word boundaries around phrases")
    parser.add_argument("--center", action="store_true", help="column-center the matrix before SVD")


def _config_field_help() -> str:
    """Describe every run-config field, generated from the model itself."""
    from .config import RunConfig

    lines = ["config file fields (JSON object):"]
    for name, field in RunConfig.model_fields.items():
        default = field.get_default(call_default_factory=True)
        if hasattr(default, "model_dump"):
            default = default.model_dump(mode="json")
        elif isinstance(default, Path):
            default = str(default)
        lines.append(f"  {name:20s} default: {default!r}")
    lines.append("relative paths resolve against the config file's directory")
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="filings-factor-miner",
        description="ESG keyword mining of SEC filings with an SVD factor track",
        epilog=_config_field_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in [
        ("fetch", "populate the filing cache (EDGAR or local mirror)"),
        ("analyze", "run scan through report in one go"),
        *[(s, f"run only the {s} stage") for s in STAGES],
    ]:
        p = sub.add_parser(name, help=help_text, epilog=_config_field_help(),
                           formatter_class=argparse.RawDescriptionHelpFormatter)
        _add_run_options(p)

    p = sub.add_parser("lexicon", help="lexicon utilities")
    p.add_argument("action", choices=["dump"], help="dump the builtin lexicon as JSON")
    p.add_argument("--output", default=None, help="write to a file instead of stdout")
    p.add_argument("--server", default=None)

    p = sub.add_parser("tickers", help="ticker-universe utilities")
    p.add_argument("action", choices=["dump"], help="dump the example ticker list")
    p.add_argument("--output", default=None, help="write to a file instead of stdout")
    p.add_argument("--server", default=None)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _run_pipeline_command(args) -> int:
    client = ServiceClient(args.server)
    payload = {"config": _load_config_payload(args)}
    if args.command == "fetch":
        status, body = client.request("POST", "/fetch", payload)
        if status != 200:
            _print_error(status, body)
            return _exit_code(status, body)
        print(
            f"fetched {body['records']} filings across {body['companies']} companies "
            f"({body['mode']} mode)"
        )
        print(f"cache hits: {body['cache_hits']}, network calls: {body['network_calls']}")
        print(f"index: {body['index_path']}")
        if body["unresolved"]:
            for t in body["unresolved"]:
                print(f"unresolved ticker: {t}", file=sys.stderr)
            return EXIT_INPUT
        return EXIT_OK
    if args.command == "analyze":
        status, body = client.request("POST", "/analyze", payload)
        if status != 200:
            _print_error(status, body)
            return _exit_code(status, body)
        print(f"report bundle: {body['report_dir']} ({len(body['tables'])} tables)")
        return EXIT_OK
    status, body = client.request("POST", f"/stage/{args.command}", payload)
    if status != 200:
        _print_error(status, body)
        return _exit_code(status, body)
    summary = body["summary"]
    for artifact in summary.get("artifacts", []):
        print(artifact)
    extras = {k: v for k, v in summary.items() if k not in ("artifacts", "tables")}
    if extras:
        print(json.dumps(extras, sort_keys=True))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("lexicon", "tickers"):
            client = ServiceClient(args.server)
            path = "/lexicon" if args.command == "lexicon" else "/tickers/example"
            status, body = client.request("GET", path)
            if status != 200:
                _print_error(status, body)
                return _exit_code(status, body)
            if args.command == "tickers":
                text = "\n".join(body["tickers"]) + "\n"
            else:
                text = json.dumps(body, indent=2) + "\n"
            if args.output:
                Path(args.output).write_text(text, encoding="utf-8")
                print(f"wrote {args.output}")
            else:
                sys.stdout.write(text)
            return EXIT_OK
        if args.command == "serve":
            import uvicorn

            from .service.app import app

            uvicorn.run(app, host=args.host, port=args.port)
            return EXIT_OK
        return _run_pipeline_command(args)
    except InputError as exc:
        print(f"error (input): {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
