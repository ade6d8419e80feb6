"""HTTP service wrapping the pipeline, validation, metrics, and KB checks.

The CLI talks to this app (in-process by default, over the network with
--server), so every capability the CLI exposes lives here as a typed
endpoint.  Domain errors map to 400 with the exception class name;
anything else is a genuine 500.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import __version__
from .assets import load_asset
from .config import apply_overrides, load_config
from .errors import SubtransError
from .memory import check_knowledge_text
from .metrics import bleu, suber_lite
from .pipeline import run
from .srt import SubtitleFile, parse_srt, validate_timeline

# rough CJK coverage: unified ideographs + kana + hangul + fullwidth forms
_CJK_RANGES = (
    (0x2E80, 0x9FFF),
    (0x3400, 0x4DBF),
    (0xAC00, 0xD7AF),
    (0xF900, 0xFAFF),
    (0xFF00, 0xFF60),
)


def _mostly_cjk(texts) -> bool:
    total = 0
    cjk = 0
    for text in texts:
        for ch in text:
            if ch.isspace():
                continue
            total += 1
            code = ord(ch)
            if any(lo <= code <= hi for lo, hi in _CJK_RANGES):
                cjk += 1
    return total > 0 and cjk * 2 > total


def _entry_texts(file: SubtitleFile) -> list[str]:
    return [" ".join(entry.lines) for entry in file.entries]


class ValidateRequest(BaseModel):
    srt_text: str
    gap_threshold_ms: int = Field(default=0, ge=0)


class BleuRequest(BaseModel):
    hypotheses: list[str]
    references: list[str]
    tokenizer: Literal["whitespace", "character"] = "whitespace"


class SuberRequest(BaseModel):
    hyp_srt: str
    ref_srt: str


class EvaluateRequest(BaseModel):
    metric: Literal["bleu", "suber"]
    hyp_srt: str
    ref_srt: str
    tokenizer: Literal["auto", "whitespace", "character"] = "auto"


class KbDocRequest(BaseModel):
    name: str
    text: str


class KbCheckRequest(BaseModel):
    docs: list[KbDocRequest]


class JobOverrides(BaseModel):
    domain: str | None = None
    source_language: str | None = None
    target_language: str | None = None
    user_instruction: str | None = None
    output_dir: str | None = None


class RunRequest(BaseModel):
    input_path: str
    config_path: str
    overrides: JobOverrides = JobOverrides()


def build_app() -> FastAPI:
    app = FastAPI(title="subtrans", version=__version__)

    @app.exception_handler(SubtransError)
    async def _domain_error(request: Request, exc: SubtransError):
        return JSONResponse(
            status_code=400,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/health")
    def health():
        return {"status": "ok", "version": __version__}

    @app.post("/subtitles/validate")
    def validate(req: ValidateRequest):
        file = parse_srt(req.srt_text)
        report = validate_timeline(file, gap_threshold_ms=req.gap_threshold_ms)
        return {
            "ok": report.ok,
            "entry_count": len(file.entries),
            "overlaps": [list(pair) for pair in report.overlaps],
            "gaps": [list(pair) for pair in report.gaps],
            "order_violations": list(report.order_violations),
        }

    @app.post("/metrics/bleu")
    def metrics_bleu(req: BleuRequest):
        score = bleu(req.hypotheses, req.references, tokenizer=req.tokenizer)
        return {"metric": score.name, "value": score.value, "details": score.details}

    @app.post("/metrics/suber")
    def metrics_suber(req: SuberRequest):
        score = suber_lite(parse_srt(req.hyp_srt), parse_srt(req.ref_srt))
        return {"metric": score.name, "value": score.value, "details": score.details}

    @app.post("/metrics/evaluate")
    def metrics_evaluate(req: EvaluateRequest):
        hyp_file = parse_srt(req.hyp_srt)
        ref_file = parse_srt(req.ref_srt)
        if req.metric == "suber":
            score = suber_lite(hyp_file, ref_file)
            return {"metric": score.name, "value": score.value, "details": score.details}
        refs = _entry_texts(ref_file)
        tokenizer = req.tokenizer
        if tokenizer == "auto":
            tokenizer = "character" if _mostly_cjk(refs) else "whitespace"
        score = bleu(_entry_texts(hyp_file), refs, tokenizer=tokenizer)
        return {
            "metric": score.name,
            "value": score.value,
            "tokenizer": tokenizer,
            "details": score.details,
        }

    @app.post("/kb/check")
    def kb_check(req: KbCheckRequest):
        results = []
        for doc in req.docs:
            parsed, errors = check_knowledge_text(doc.name, doc.text)
            results.append(
                {
                    "name": doc.name,
                    "ok": not errors,
                    "errors": errors,
                    "terms": [
                        {
                            "source_term": t.source_term,
                            "target_term": t.target_term,
                            "note": t.note,
                        }
                        for t in (parsed.terms if parsed else ())
                    ],
                }
            )
        return {"ok": all(r["ok"] for r in results), "docs": results}

    @app.post("/jobs/run")
    def jobs_run(req: RunRequest):
        config = load_config(req.config_path)
        ov = req.overrides
        config = apply_overrides(
            config,
            domain=ov.domain,
            source_language=ov.source_language,
            target_language=ov.target_language,
            user_instruction=ov.user_instruction,
            output_dir=Path(ov.output_dir) if ov.output_dir else None,
        )
        asset = load_asset(req.input_path, tools=config.media_tools)
        result = run(asset, config)
        return {
            "segments": len(result.records),
            "paths": {
                "source_srt": str(result.source_path),
                "target_srt": str(result.target_path),
                "report": str(result.report_path),
                "muxed_video": str(result.muxed_video_path)
                if result.muxed_video_path
                else None,
            },
            "validation": result.report["validation"],
            "warnings": result.report["warnings"],
            "report": result.report,
        }

    return app
