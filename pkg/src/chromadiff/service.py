"""HTTP service around the colorization pipeline.

Heavy work (colorize, enhance) runs asynchronously on a bounded worker
pool; clients get a job id and poll GET /jobs/{id}. The gray anchor and
color residual of every colorize job are persisted, so changing the
color scale afterwards (POST /rescale) or ranking scales (POST /rank)
decodes from cache without re-running diffusion. All outputs are
deterministic: replaying a request reproduces the artifact bit for bit.
"""

from __future__ import annotations

import base64
import dataclasses
import hashlib
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import Response
from PIL import Image

from chromadiff import enhance as enhance_mod
from chromadiff import ranker as ranker_mod
from chromadiff import sampler as sampler_mod
from chromadiff.codec import load_codec
from chromadiff.colorspace import load_image, save_image, to_grayscale
from chromadiff.denoiser import load_denoiser
from chromadiff.embedders import DualTowerEmbedder, FeatureEmbedder
from chromadiff.jobs import JobStore

__all__ = ["AppConfig", "AppState", "load_config", "create_app"]

_ENV_PREFIX = "CHROMADIFF_"


@dataclasses.dataclass
class AppConfig:
    denoiser_path: str | None = None
    codec_kind: str = "identity"
    codec_path: str | None = None
    ranker_path: str | None = None
    embedder_path: str | None = None
    jobs_dir: str = "jobs"
    host: str = "127.0.0.1"
    port: int = 8765
    workers: int = 2
    steps: int = 10
    guidance_scale: float = 1.6
    color_scale: float = 0.8


def load_config(path) -> AppConfig:
    """Read the JSON config; CHROMADIFF_<FIELD> env vars override."""
    raw = json.loads(Path(path).read_text())
    known = {f.name for f in dataclasses.fields(AppConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    for field in dataclasses.fields(AppConfig):
        env = os.environ.get(_ENV_PREFIX + field.name.upper())
        if env is not None:
            raw[field.name] = json.loads(env) if field.type in ("int", "float") else env
    cfg = AppConfig(**raw)
    for name in ("denoiser_path", "codec_path", "ranker_path", "embedder_path"):
        p = getattr(cfg, name)
        if p is not None and not Path(p).exists():
            raise FileNotFoundError(f"{name} does not exist: {p}")
    return cfg


class AppState:
    """Loaded models plus the job store and worker pool."""

    def __init__(self, cfg: AppConfig):
        self.cfg = cfg
        self.codec = load_codec(cfg.codec_kind, cfg.codec_path)
        self.denoiser = load_denoiser(cfg.denoiser_path) if cfg.denoiser_path else None
        self.embedder = (
            DualTowerEmbedder.load(cfg.embedder_path)
            if cfg.embedder_path else FeatureEmbedder()
        )
        self.ranker = (
            ranker_mod.RankerModel.load(cfg.ranker_path, embedder=self.embedder)
            if cfg.ranker_path else None
        )
        self.store = JobStore(cfg.jobs_dir)
        self.pool = ThreadPoolExecutor(max_workers=cfg.workers)

    def sampler_config(self, body: dict) -> sampler_mod.SamplerConfig:
        return sampler_mod.SamplerConfig(
            steps=int(body.get("steps", self.cfg.steps)),
            guidance_scale=float(body.get("guidance", self.cfg.guidance_scale)),
            color_scale=float(body.get("color_scale", self.cfg.color_scale)),
            prompt=str(body.get("prompt", "")),
            negative_prompt=str(body.get("negative", sampler_mod.NEGATIVE_PROMPT)),
            trace=bool(body.get("trace", False)),
        )


def _decode_image_b64(data: str) -> np.ndarray:
    try:
        raw = base64.b64decode(data, validate=True)
        with Image.open(io.BytesIO(raw)) as im:
            im.load()
            return np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    except Exception as exc:
        raise HTTPException(400, f"invalid image: {exc}") from exc


def _encode_image_file(path: Path) -> str:
    return base64.b64encode(path.read_bytes()).decode()


def _run_colorize(state: AppState, job_id: str) -> None:
    store = state.store
    store.transition(job_id, "running")
    try:
        body = store.request(job_id)
        img = load_image(store.artifact_path(job_id, "input.png"))
        gray = to_grayscale(img) if img.ndim == 3 else img
        cfg = state.sampler_config(body)
        chosen_scale = None
        result = sampler_mod.colorize(gray, cfg, state.denoiser, state.codec)
        if body.get("use_ranker"):
            if state.ranker is None:
                raise RuntimeError("ranker requested but no ranker model is loaded")
            chosen_scale, _ = ranker_mod.rank_scales(
                result.gray_latent, result.residual, state.ranker, state.codec
            )
            image = sampler_mod.rescale(result, chosen_scale, state.codec, gray)
        else:
            image = result.image
        save_image(image, store.artifact_path(job_id, "result.png"))
        store.write_array(job_id, "gray_latent.npy", result.gray_latent)
        store.write_array(job_id, "residual.npy", result.residual)
        store.write_array(job_id, "gray.npy", gray)
        meta = {"chosen_scale": chosen_scale, "steps": cfg.steps,
                "guidance": cfg.guidance_scale, "color_scale": cfg.color_scale}
        store.write_json(job_id, "meta.json", meta)
        if cfg.trace:
            store.write_json(job_id, "trace.json", result.trace)
            for i, frame in enumerate(result.frames):
                save_image(frame, store.artifact_path(job_id, f"frame_{i:03d}.png"))
        store.transition(job_id, "done")
    except Exception as exc:
        store.transition(job_id, "failed", error=f"{type(exc).__name__}: {exc}")


def _run_enhance(state: AppState, job_id: str) -> None:
    store = state.store
    store.transition(job_id, "running")
    try:
        body = store.request(job_id)
        img = load_image(store.artifact_path(job_id, "input.png"))
        if img.ndim != 3:
            raise ValueError("enhancement needs a color image")
        cfg = enhance_mod.EnhanceConfig(
            chroma_seeds=tuple(body.get("seeds", enhance_mod.DEFAULT_SEEDS)),
            start_steps=tuple(int(k) for k in body.get("starts", enhance_mod.DEFAULT_STARTS)),
            sampler=state.sampler_config(body),
        )
        grid = enhance_mod.enhance_grid(img, cfg, state.denoiser, state.codec)
        manifest = enhance_mod.grid_index(grid)
        for entry in manifest:
            if not entry["failed"]:
                cell = grid[entry["row"]][entry["col"]]
                name = f"cell_r{entry['row']}c{entry['col']}.png"
                save_image(cell.image, store.artifact_path(job_id, name))
                entry["file"] = name
            else:
                entry["file"] = None
        sheet = enhance_mod.contact_sheet(grid)
        save_image(sheet, store.artifact_path(job_id, "sheet.png"))
        store.write_json(job_id, "manifest.json", manifest)
        store.transition(job_id, "done")
    except Exception as exc:
        store.transition(job_id, "failed", error=f"{type(exc).__name__}: {exc}")


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="chromadiff")
    store = state.store

    def _require_models():
        if state.denoiser is None or state.codec is None:
            raise HTTPException(503, "model not loaded")

    def _submit(kind: str, body: dict, worker) -> dict:
        image_b64 = body.get("image")
        if not image_b64:
            raise HTTPException(400, "missing 'image' (base64 PNG)")
        img = _decode_image_b64(image_b64)
        payload = {k: v for k, v in body.items() if k != "image"}
        payload["image_sha"] = hashlib.sha256(base64.b64decode(image_b64)).hexdigest()[:16]
        job = store.create(kind, payload)
        save_image(img, store.artifact_path(job.id, "input.png"))
        state.pool.submit(worker, state, job.id)
        return {"job_id": job.id, "status": "queued", "config_hash": job.config_hash}

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "codec": state.codec.kind,
            "denoiser_loaded": state.denoiser is not None,
            "ranker_loaded": state.ranker is not None,
        }

    @app.post("/colorize")
    def post_colorize(body: dict):
        _require_models()
        if body.get("use_ranker") and state.ranker is None:
            raise HTTPException(503, "ranker model not loaded")
        try:
            state.sampler_config(body)  # fail fast on bad params
        except (ValueError, TypeError) as exc:
            raise HTTPException(400, str(exc)) from exc
        return _submit("colorize", body, _run_colorize)

    @app.post("/enhance")
    def post_enhance(body: dict):
        _require_models()
        try:
            enhance_mod.EnhanceConfig(
                chroma_seeds=tuple(body.get("seeds", enhance_mod.DEFAULT_SEEDS)),
                start_steps=tuple(int(k) for k in body.get("starts", enhance_mod.DEFAULT_STARTS)),
                sampler=state.sampler_config(body),
            )
        except (ValueError, TypeError) as exc:
            raise HTTPException(400, str(exc)) from exc
        return _submit("enhance", body, _run_enhance)

    @app.post("/rescale")
    def post_rescale(body: dict):
        _require_models()
        job_id = body.get("job_id")
        if not job_id:
            raise HTTPException(400, "missing 'job_id'")
        try:
            s_prime = float(body.get("color_scale"))
        except (TypeError, ValueError):
            raise HTTPException(400, "missing or invalid 'color_scale'")
        if s_prime < 0:
            raise HTTPException(400, "color_scale must be >= 0")
        try:
            job = store.get(job_id)
        except KeyError:
            raise HTTPException(404, f"no such job {job_id}")
        if job.kind != "colorize" or job.status != "done":
            raise HTTPException(400, "rescale needs a finished colorize job")
        z_gray = store.read_array(job_id, "gray_latent.npy")
        residual = store.read_array(job_id, "residual.npy")
        gray = store.read_array(job_id, "gray.npy")
        image = sampler_mod.render_scaled(z_gray, residual, s_prime, state.codec, gray)
        buf = io.BytesIO()
        Image.fromarray(
            np.clip(np.round(image * 255.0), 0, 255).astype(np.uint8)
        ).save(buf, format="PNG")
        return {
            "job_id": job_id,
            "color_scale": s_prime,
            "image": base64.b64encode(buf.getvalue()).decode(),
        }

    @app.post("/rank")
    def post_rank(body: dict):
        _require_models()
        if state.ranker is None:
            raise HTTPException(503, "ranker model not loaded")
        job_id = body.get("job_id")
        if not job_id:
            raise HTTPException(400, "missing 'job_id'")
        try:
            job = store.get(job_id)
        except KeyError:
            raise HTTPException(404, f"no such job {job_id}")
        if job.kind != "colorize" or job.status != "done":
            raise HTTPException(400, "rank needs a finished colorize job")
        z_gray = store.read_array(job_id, "gray_latent.npy")
        residual = store.read_array(job_id, "residual.npy")
        best, scored = ranker_mod.rank_scales(z_gray, residual, state.ranker, state.codec)
        return {
            "job_id": job_id,
            "best_scale": best,
            "scores": [{"scale": s, "score": v} for s, v in scored],
        }

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        try:
            job = store.get(job_id)
        except KeyError:
            raise HTTPException(404, f"no such job {job_id}")
        out = {
            "id": job.id, "kind": job.kind, "status": job.status,
            "error": job.error, "config_hash": job.config_hash,
            "artifacts": store.artifacts(job.id),
        }
        if job.status == "done":
            if job.kind == "colorize":
                out["result"] = {
                    "image": _encode_image_file(store.artifact_path(job.id, "result.png")),
                    **json.loads(store.artifact_path(job.id, "meta.json").read_text()),
                }
                trace = store.artifact_path(job.id, "trace.json")
                if trace.exists():
                    out["result"]["trace"] = json.loads(trace.read_text())
            elif job.kind == "enhance":
                out["manifest"] = json.loads(
                    store.artifact_path(job.id, "manifest.json").read_text()
                )
        return out

    @app.get("/jobs/{job_id}/artifacts/{name}")
    def get_artifact(job_id: str, name: str):
        try:
            store.get(job_id)
            path = store.artifact_path(job_id, name)
        except KeyError:
            raise HTTPException(404, "not found")
        if not path.exists():
            raise HTTPException(404, f"no artifact {name}")
        media = "image/png" if name.endswith(".png") else "application/json"
        return Response(path.read_bytes(), media_type=media)

    return app
