"""Command-line surface: training, inference, evaluation, serving.

Every subcommand maps onto one library entry point; the CLI only parses
arguments, loads checkpoints, and writes artifacts. Validation problems
exit nonzero with the underlying message instead of a traceback.
"""

import csv
import dataclasses
import functools
import json
import math
from pathlib import Path

import click
import numpy as np

from . import metrics as M
from . import toydata
from .codec import PROBE_SCALES, linearity_probe, load_codec, train_conv_codec
from .colorspace import (
    InputValidationError,
    gray_to_rgb,
    load_image,
    save_image,
    to_grayscale,
)
from .denoiser import load_denoiser
from .diffusion import TrainConfig, train_denoiser
from .embedders import DualTowerEmbedder, FeatureEmbedder
from .enhance import EnhanceConfig, contact_sheet, enhance_grid, grid_index
from .ranker import (
    RANKER_GRID,
    RankerTrainingError,
    pair_accuracy,
    read_pair_file,
    synthetic_scale_pairs,
    train_ranker,
)
from .sampler import SamplerConfig
from .sampler import colorize as run_colorize
from .service import load_config

_ERRORS = (
    InputValidationError,
    RankerTrainingError,
    ValueError,
    FileNotFoundError,
    KeyError,
    json.JSONDecodeError,
)


def _friendly(fn):
    # library errors become exit-code-1 messages, not tracebacks
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _ERRORS as exc:
            raise click.ClickException(str(exc)) from exc

    return wrapper


def _load_corpus(images_dir, captions_file, synthetic, size, seed):
    """Corpus from a directory of images, or the synthetic generator."""
    if images_dir is None:
        images, captions = toydata.make_corpus(n=synthetic, size=size, seed=seed)
        return images, captions
    paths = sorted(
        p for p in Path(images_dir).iterdir()
        if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    if not paths:
        raise click.ClickException(f"no images found in {images_dir}")
    images = np.stack([load_image(p) for p in paths])
    if captions_file is not None:
        captions = Path(captions_file).read_text().splitlines()
        if len(captions) != len(paths):
            raise click.ClickException(
                f"{len(captions)} captions for {len(paths)} images"
            )
    else:
        captions = [p.stem.replace("_", " ") for p in paths]
    return images, captions


def _resolve_runtime(config, model, codec):
    """Denoiser + codec from explicit flags, falling back to a config file."""
    cfg = load_config(config) if config else None
    model_path = model or (cfg.denoiser_path if cfg else None)
    if model_path is None:
        raise click.ClickException("no denoiser: pass --model or a --config with denoiser_path")
    denoiser = load_denoiser(model_path)
    if codec:
        backend = load_codec("identity") if codec == "identity" else load_codec(
            "learned-autoencoder", codec
        )
    elif cfg:
        backend = load_codec(cfg.codec_kind, cfg.codec_path)
    else:
        backend = load_codec("identity")
    return denoiser, backend, cfg


def _parse_floats(text, flag):
    try:
        return tuple(float(v) for v in text.split(",") if v.strip() != "")
    except ValueError as exc:
        raise click.ClickException(f"{flag}: expected comma-separated numbers, got {text!r}") from exc


def _parse_ints(text, flag):
    vals = _parse_floats(text, flag)
    if any(v != int(v) for v in vals):
        raise click.ClickException(f"{flag}: expected integers, got {text!r}")
    return tuple(int(v) for v in vals)


_corpus_options = [
    click.option("--images-dir", type=click.Path(exists=True, file_okay=False), default=None,
                 help="Directory of training images (png/jpg)."),
    click.option("--captions", "captions_file", type=click.Path(exists=True, dir_okay=False),
                 default=None, help="Caption file, one line per image (sorted pairing)."),
    click.option("--synthetic", type=int, default=2048, show_default=True,
                 help="Generate this many synthetic images when no --images-dir."),
    click.option("--size", type=int, default=32, show_default=True),
    click.option("--seed", type=int, default=0, show_default=True),
]


def _with(options):
    def deco(fn):
        for opt in reversed(options):
            fn = opt(fn)
        return fn
    return deco


@click.group()
def main():
    """Text-guided colorization: train, colorize, enhance, evaluate, serve."""


@main.command("train-codec")
@_with(_corpus_options)
@click.option("--width", type=int, default=32, show_default=True)
@click.option("--channels", type=int, default=4, show_default=True)
@click.option("--epochs", type=int, default=16, show_default=True)
@click.option("--holdout", type=int, default=128, show_default=True,
              help="Images reserved for the reconstruction check.")
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_friendly
def train_codec_cmd(images_dir, captions_file, synthetic, size, seed, width, channels,
                    epochs, holdout, out):
    """Train the convolutional latent autoencoder."""
    images, _ = _load_corpus(images_dir, captions_file, synthetic, size, seed)
    codec, history = train_conv_codec(
        images, width=width, epochs=epochs, seed=seed, channels=channels, holdout=holdout
    )
    codec.save(out)
    click.echo(
        f"wrote {out} (final loss {history['train_loss'][-1]:.5f}, "
        f"holdout MAE {history['holdout_mae']:.4f})"
    )


@main.command("train-denoiser")
@_with(_corpus_options)
@click.option("--codec", default="identity", show_default=True,
              help="'identity' or a trained codec checkpoint path.")
@click.option("--lr", type=float, default=TrainConfig.learning_rate, show_default=True)
@click.option("--batch-size", type=int, default=TrainConfig.batch_size, show_default=True)
@click.option("--total-steps", type=int, default=TrainConfig.total_steps, show_default=True)
@click.option("--base-width", type=int, default=32, show_default=True)
@click.option("--text-dim", type=int, default=64, show_default=True)
@click.option("--checkpoint-every", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(file_okay=False), required=True,
              help="Output directory for checkpoints and history.")
@_friendly
def train_denoiser_cmd(images_dir, captions_file, synthetic, size, seed, codec, lr,
                       batch_size, total_steps, base_width, text_dim, checkpoint_every, out):
    """Train the residual denoiser."""
    images, captions = _load_corpus(images_dir, captions_file, synthetic, size, seed)
    backend = load_codec("identity") if codec == "identity" else load_codec(
        "learned-autoencoder", codec
    )
    cfg = TrainConfig(learning_rate=lr, batch_size=batch_size, total_steps=total_steps)
    out_dir = Path(out)
    _, history = train_denoiser(
        images, captions, backend, cfg,
        seed=seed, base_width=base_width, text_dim=text_dim,
        checkpoint_every=checkpoint_every, out_dir=out_dir,
    )
    (out_dir / "history.json").write_text(json.dumps(history))
    click.echo(f"wrote {out_dir / 'denoiser.pt'} (final loss {history['loss'][-1]:.5f})")


@main.command("train-ranker")
@_with(_corpus_options)
@click.option("--pairs", type=click.Path(exists=True, file_okay=False), default=None,
              help="Labelled pair directory; otherwise synthetic pairs are generated.")
@click.option("--n-pairs", type=int, default=600, show_default=True)
@click.option("--embedder", "embedder_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Dual-tower checkpoint; default: handcrafted features.")
@click.option("--grid", default=",".join(str(s) for s in RANKER_GRID), show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@_friendly
def train_ranker_cmd(images_dir, captions_file, synthetic, size, seed, pairs, n_pairs,
                     embedder_path, grid, out):
    """Fit the linear scale ranker on preference pairs."""
    embedder = (
        DualTowerEmbedder.load(embedder_path) if embedder_path else FeatureEmbedder()
    )
    if pairs is not None:
        labelled = read_pair_file(pairs)
        holdout = []
    else:
        images, _ = _load_corpus(images_dir, captions_file, synthetic, size, seed)
        labelled = synthetic_scale_pairs(images, n_pairs=n_pairs, seed=seed)
        cut = max(1, int(len(labelled) * 5 / 6))
        labelled, holdout = labelled[:cut], labelled[cut:]
    model = train_ranker(labelled, embedder, grid=_parse_floats(grid, "--grid"))
    model.save(out)
    line = f"wrote {out} (train accuracy {pair_accuracy(model, labelled):.3f}"
    if holdout:
        line += f", holdout {pair_accuracy(model, holdout):.3f}"
    click.echo(line + ")")


@main.command("colorize")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out", type=click.Path(dir_okay=False), default="out.png", show_default=True)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--model", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--codec", default=None, help="'identity' or codec checkpoint path.")
@click.option("--prompt", default="")
@click.option("--negative", default=None, help="Override the default negative prompt.")
@click.option("--steps", type=int, default=None)
@click.option("--guidance", type=float, default=None)
@click.option("--color-scale", type=float, default=None)
@click.option("--trace/--no-trace", default=True, show_default=True,
              help="Write per-step colorfulness trace next to the output.")
@click.option("--frames-dir", type=click.Path(file_okay=False), default=None,
              help="Also dump intermediate frames as PNGs.")
@_friendly
def colorize_cmd(input_path, out, config, model, codec, prompt, negative, steps,
                 guidance, color_scale, trace, frames_dir):
    """Colorize one grayscale image; writes the PNG plus trace.json."""
    denoiser, backend, app_cfg = _resolve_runtime(config, model, codec)
    kwargs = {"prompt": prompt, "trace": trace}
    kwargs["steps"] = steps if steps is not None else (app_cfg.steps if app_cfg else 10)
    if guidance is not None:
        kwargs["guidance_scale"] = guidance
    elif app_cfg:
        kwargs["guidance_scale"] = app_cfg.guidance_scale
    if color_scale is not None:
        kwargs["color_scale"] = color_scale
    elif app_cfg:
        kwargs["color_scale"] = app_cfg.color_scale
    if negative is not None:
        kwargs["negative_prompt"] = negative
    cfg = SamplerConfig(**kwargs)

    gray = load_image(input_path, gray=True)
    result = run_colorize(gray, cfg, denoiser, backend)
    out = Path(out)
    save_image(result.image, out)
    lines = [f"wrote {out}"]
    if trace:
        trace_path = out.parent / "trace.json"
        trace_path.write_text(json.dumps(result.trace, indent=1))
        lines.append(f"wrote {trace_path}")
    if frames_dir and result.frames:
        frames = Path(frames_dir)
        frames.mkdir(parents=True, exist_ok=True)
        for i, frame in enumerate(result.frames):
            save_image(frame, frames / f"frame_{i:03d}.png")
        lines.append(f"wrote {len(result.frames)} frames to {frames}")
    click.echo("; ".join(lines))


@main.command("enhance")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default="enhance_out", show_default=True)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--model", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--codec", default=None)
@click.option("--seeds", default="0,0.001,0.003,0.005", show_default=True)
@click.option("--starts", default="0,1,2,3", show_default=True)
@click.option("--prompt", default="")
@click.option("--steps", type=int, default=None)
@_friendly
def enhance_cmd(input_path, out_dir, config, model, codec, seeds, starts, prompt, steps):
    """Render the enhancement grid for a faded color photo."""
    denoiser, backend, app_cfg = _resolve_runtime(config, model, codec)
    sampler = SamplerConfig(
        steps=steps if steps is not None else (app_cfg.steps if app_cfg else 10),
        prompt=prompt,
    )
    cfg = EnhanceConfig(
        chroma_seeds=_parse_floats(seeds, "--seeds"),
        start_steps=_parse_ints(starts, "--starts"),
        sampler=sampler,
    )
    faded = load_image(input_path)
    grid = enhance_grid(faded, cfg, denoiser, backend)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    index = grid_index(grid)
    for entry in index:
        entry["file"] = None
        if not entry["failed"]:
            name = f"cell_r{entry['row']}c{entry['col']}.png"
            save_image(grid[entry["row"]][entry["col"]].image, out / name)
            entry["file"] = name
    (out / "index.json").write_text(json.dumps(index, indent=1))
    save_image(contact_sheet(grid), out / "sheet.png")
    failed = sum(1 for e in index if e["failed"])
    click.echo(f"wrote {len(index) - failed}/{len(index)} cells + sheet.png to {out}")


def _load_dir(path):
    paths = sorted(
        p for p in Path(path).iterdir()
        if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    if not paths:
        raise click.ClickException(f"no images in {path}")
    return [load_image(p) for p in paths]


def _metric_row(method, preds, gts, feats_pred, feats_gt, captions, embedder):
    psnrs = [M.psnr(p, g) for p, g in zip(preds, gts)]
    # ssim is a single-channel metric; score the luma plane
    ssims = [M.ssim(to_grayscale(p), to_grayscale(g)) for p, g in zip(preds, gts)]
    row = {
        "method": method,
        "FID": M.frechet_distance(feats_pred, feats_gt),
        "CLR": M.mean_colorfulness(preds),
        "dCLR": M.delta_colorfulness(preds, gts),
        "PSNR": float(np.mean(psnrs)),
        "SSIM": float(np.mean(ssims)),
    }
    if captions:
        row["CLIPSIM"] = float(np.mean([
            M.embedding_similarity(p, c, embedder) for p, c in zip(preds, captions)
        ]))
    return row


@main.command("eval")
@click.option("--manifest", type=click.Path(exists=True, dir_okay=False), required=True,
              help="JSON with gray_dir, pred_dir, gt_dir and optional captions file.")
@click.option("--out-dir", type=click.Path(file_okay=False), default="eval_out", show_default=True)
@click.option("--embedder", "embedder_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Dual-tower checkpoint for FID features and CLIPSIM.")
@_friendly
def eval_cmd(manifest, out_dir, embedder_path):
    """Score predictions against ground truth; writes metrics.csv/.json."""
    spec = json.loads(Path(manifest).read_text())
    for key in ("pred_dir", "gt_dir"):
        if key not in spec:
            raise click.ClickException(f"manifest missing {key!r}")
    preds = _load_dir(spec["pred_dir"])
    gts = _load_dir(spec["gt_dir"])
    if len(preds) != len(gts):
        raise click.ClickException(f"{len(preds)} predictions vs {len(gts)} references")

    captions = None
    if spec.get("captions"):
        captions = Path(spec["captions"]).read_text().splitlines()
        if len(captions) != len(gts):
            raise click.ClickException(f"{len(captions)} captions for {len(gts)} images")
        if embedder_path is None:
            raise click.ClickException("captions given but no --embedder for CLIPSIM")
    embedder = DualTowerEmbedder.load(embedder_path) if embedder_path else FeatureEmbedder()

    def feats(images):
        return np.stack([embedder.embed_image(img) for img in images])

    feats_gt = feats(gts)
    rows = [_metric_row("prediction", preds, gts, feats(preds), feats_gt, captions, embedder)]
    if spec.get("gray_dir"):
        grays = _load_dir(spec["gray_dir"])
        if len(grays) != len(gts):
            raise click.ClickException(f"{len(grays)} gray images vs {len(gts)} references")
        grays = [g if g.ndim == 3 else gray_to_rgb(g) for g in grays]
        rows.append(_metric_row(
            "grayscale_baseline", grays, gts, feats(grays), feats_gt, captions, embedder
        ))

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    columns = list(rows[0].keys())
    with (out / "metrics.csv").open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        writer.writerows(rows)
    safe = [
        {k: ("inf" if isinstance(v, float) and math.isinf(v) else v) for k, v in r.items()}
        for r in rows
    ]
    (out / "metrics.json").write_text(json.dumps(safe, indent=1))
    click.echo(f"wrote {out / 'metrics.csv'} ({len(rows)} rows)")


@main.command("probe-linearity")
@_with(_corpus_options)
@click.option("--codec", default="identity", show_default=True)
@click.option("--count", type=int, default=24, show_default=True,
              help="Number of corpus images to probe.")
@click.option("--scales", default=",".join(str(s) for s in PROBE_SCALES), show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), default="probe.json", show_default=True)
@_friendly
def probe_cmd(images_dir, captions_file, synthetic, size, seed, codec, count, scales, out):
    """Measure how linearly latent chroma scaling maps to colorfulness."""
    images, _ = _load_corpus(images_dir, captions_file, synthetic, size, seed)
    backend = load_codec("identity") if codec == "identity" else load_codec(
        "learned-autoencoder", codec
    )
    report = linearity_probe(images[:count], backend, scales=_parse_floats(scales, "--scales"))
    Path(out).write_text(json.dumps(dataclasses.asdict(report), indent=1))
    click.echo(f"wrote {out} (rank correlation {report.rank_correlation:.4f})")


@main.command("serve")
@click.option("--config", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--host", default=None, help="Override the configured bind address.")
@click.option("--port", type=int, default=None, help="Override the configured port.")
@_friendly
def serve_cmd(config, host, port):
    """Run the HTTP service."""
    import uvicorn

    from .service import AppState, create_app

    cfg = load_config(config)
    state = AppState(cfg)
    uvicorn.run(create_app(state), host=host or cfg.host, port=port or cfg.port)


if __name__ == "__main__":
    main()
