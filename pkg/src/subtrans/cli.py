"""Command-line interface, a thin client over the HTTP service.

Without --server the app runs in-process; with --server URL the same
requests go over the network.  Exit codes: 0 success (and clean
validation), 1 pipeline or data errors (including validation findings),
2 usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

import httpx

from .memory import KB_SUFFIXES

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2


class ServiceClient:
    """POSTs to either an in-process app or a remote server."""

    def __init__(self, server: str | None):
        if server:
            self._client = httpx.Client(base_url=server.rstrip("/"), timeout=600.0)
        else:
            # the test client import warns about its own internals; that
            # is library chatter, not something for the user's stderr
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

            from .service import build_app

            self._client = TestClient(build_app(), raise_server_exceptions=False)

    def post(self, path: str, payload: dict) -> tuple[int, dict]:
        response = self._client.post(path, json=payload)
        try:
            body = response.json()
        except ValueError:
            body = {"error": "BadResponse", "detail": response.text[:500]}
        return response.status_code, body


def _print(data: dict) -> None:
    print(json.dumps(data, indent=2, ensure_ascii=False, sort_keys=True))


def _fail(body: dict) -> int:
    print(json.dumps(body, ensure_ascii=False, sort_keys=True), file=sys.stderr)
    return EXIT_ERROR


def _usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EXIT_USAGE


def _read_file(path: str, label: str) -> str | None:
    p = Path(path)
    if not p.is_file():
        return None
    return p.read_text(encoding="utf-8")


def cmd_run(args) -> int:
    if args.server is None:
        # in-process service shares our filesystem; catch obvious misses early
        if not Path(args.input).exists():
            return _usage(f"input {args.input} does not exist")
        if not Path(args.config).exists():
            return _usage(f"config {args.config} does not exist")
    client = ServiceClient(args.server)
    payload = {
        "input_path": args.input,
        "config_path": args.config,
        "overrides": {
            "domain": args.domain,
            "source_language": args.src,
            "target_language": args.tgt,
            "user_instruction": args.instruction,
            "output_dir": args.output,
        },
    }
    status, body = client.post("/jobs/run", payload)
    if status != 200:
        return _fail(body)
    _print(body)
    return EXIT_OK


def cmd_validate(args) -> int:
    text = _read_file(args.srt, "subtitle file")
    if text is None:
        return _usage(f"subtitle file {args.srt} does not exist")
    client = ServiceClient(args.server)
    status, body = client.post(
        "/subtitles/validate",
        {"srt_text": text, "gap_threshold_ms": args.gap_threshold_ms},
    )
    if status != 200:
        return _fail(body)
    _print(body)
    return EXIT_OK if body.get("ok") else EXIT_ERROR


def cmd_eval(args) -> int:
    hyp_text = _read_file(args.hyp, "hypothesis")
    if hyp_text is None:
        return _usage(f"hypothesis file {args.hyp} does not exist")
    ref_text = _read_file(args.ref, "reference")
    if ref_text is None:
        return _usage(f"reference file {args.ref} does not exist")
    client = ServiceClient(args.server)
    status, body = client.post(
        "/metrics/evaluate",
        {
            "metric": args.metric,
            "hyp_srt": hyp_text,
            "ref_srt": ref_text,
            "tokenizer": args.tokenizer,
        },
    )
    if status != 200:
        return _fail(body)
    _print(body)
    return EXIT_OK


def cmd_kb_check(args) -> int:
    root = Path(args.path)
    if root.is_file():
        files = [root]
    elif root.is_dir():
        files = sorted(p for p in root.rglob("*") if p.suffix.lower() in KB_SUFFIXES)
    else:
        return _usage(f"knowledge base path {args.path} does not exist")
    if not files:
        return _usage(f"no knowledge base files ({', '.join(KB_SUFFIXES)}) under {args.path}")
    docs = [
        {"name": p.stem, "text": p.read_text(encoding="utf-8")} for p in files
    ]
    client = ServiceClient(args.server)
    status, body = client.post("/kb/check", {"docs": docs})
    if status != 200:
        return _fail(body)
    _print(body)
    return EXIT_OK if body.get("ok") else EXIT_ERROR


def cmd_serve(args) -> int:
    import uvicorn

    from .service import build_app

    uvicorn.run(build_app(), host=args.host, port=args.port)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="subtrans",
        description="Backend-pluggable long-form subtitling and translation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_server(p):
        p.add_argument(
            "--server",
            default=None,
            help="base URL of a running subtrans service (default: run in-process)",
        )

    p_run = sub.add_parser("run", help="run the full pipeline on one input")
    p_run.add_argument("input", help="media file or asset spec (.wav/.yaml/.json)")
    p_run.add_argument("--config", required=True, help="pipeline config YAML")
    p_run.add_argument("--domain", default=None)
    p_run.add_argument("--src", default=None, help="source language override")
    p_run.add_argument("--tgt", default=None, help="target language override")
    p_run.add_argument("--instruction", default=None, help="user instruction for the editor")
    p_run.add_argument("--output", default=None, help="output directory override")
    add_server(p_run)
    p_run.set_defaults(func=cmd_run)

    p_val = sub.add_parser("validate", help="validate an SRT file's timeline")
    p_val.add_argument("srt")
    p_val.add_argument("--gap-threshold-ms", type=int, default=0)
    add_server(p_val)
    p_val.set_defaults(func=cmd_validate)

    p_eval = sub.add_parser("eval", help="score a hypothesis SRT against a reference")
    p_eval.add_argument("--hyp", required=True)
    p_eval.add_argument("--ref", required=True)
    p_eval.add_argument("--metric", choices=("bleu", "suber"), default="bleu")
    p_eval.add_argument(
        "--tokenizer", choices=("auto", "whitespace", "character"), default="auto"
    )
    add_server(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_kb = sub.add_parser("kb", help="knowledge base utilities")
    kb_sub = p_kb.add_subparsers(dest="kb_command", required=True)
    p_kb_check = kb_sub.add_parser("check", help="lint knowledge base documents")
    p_kb_check.add_argument("path", help="KB directory or single document")
    add_server(p_kb_check)
    p_kb_check.set_defaults(func=cmd_kb_check)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except httpx.HTTPError as exc:
        print(f"error: cannot reach server: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
