"""Command-line entry point.

Every command is deterministic given its flags (all randomness flows from
``--seed``) and writes a JSON snapshot of its configuration next to its
outputs, so a run can be reproduced from the artifacts alone.

Exit codes: 0 success, 1 validation problem (bad flags, missing or malformed
inputs), 2 unexpected runtime failure.
"""

from __future__ import annotations

import dataclasses
import functools
import json
import sys
from pathlib import Path

import click
import numpy as np

from .data.manifest import manifest_stats, save_manifest
from .data.store import load_sequence, read_jsonl, save_sequence, sequence_dirs, write_jsonl
from .data.synthetic import SynthParams, synth_dataset
from .data.transforms import downscale
from .geometry import Box, generate_anchors
from .inference import Detection, NmsParams, infer
from .metrics import EvalParams, aggregate, classification_metrics, match_detections
from .nets import (
    NetConfig,
    ToyNet,
    classifier_schedule,
    detector_schedule,
    grad_cam,
    load_net,
    save_net,
    train_classifier,
    train_detector,
)
from .nets.training import standardize_images
from .tracking import TrackerParams, propagate


def _snapshot(params: dict, path: Path):
    path.write_text(json.dumps(params, indent=1, sort_keys=True, default=str) + "\n")


def _output_snapshot(out: Path, command: str, params: dict):
    target = out / "run_config.json" if out.is_dir() else out.with_suffix(out.suffix + ".config.json")
    _snapshot({"command": command, **params}, target)


def cli_errors(fn):
    """Map validation problems to exit 1 and unexpected failures to exit 2."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValueError, KeyError, OSError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(1)
        except click.ClickException:
            raise
        except Exception as exc:  # pragma: no cover - defensive
            click.echo(f"unexpected failure: {exc!r}", err=True)
            sys.exit(2)

    return wrapper


def _int_tuple(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(","))


def _float_tuple(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(","))


@click.group()
def main():
    """Stenosis detection toolkit: synthetic data, tracking, training, evaluation."""


@main.command()
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--sequences", type=int, default=8, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--size", type=int, default=64, show_default=True)
@click.option("--frames", default="2,2,8,3", show_default=True,
              help="phase lengths: no-contrast,introducing,optimal,vanishing")
@click.option("--stenoses", type=int, default=1, show_default=True)
@click.option("--lesion-rate", type=float, default=0.8, show_default=True)
@click.option("--vessel-width", type=float, default=4.0, show_default=True)
@click.option("--narrowing", type=float, default=0.45, show_default=True)
@click.option("--noise", type=float, default=5.0, show_default=True)
@click.option("--drift", default="0,0", show_default=True, help="per-frame drift dx,dy")
@cli_errors
def synth(out, sequences, seed, size, frames, stenoses, lesion_rate, vessel_width,
          narrowing, noise, drift):
    """Generate a synthetic dataset tree."""
    params = SynthParams(
        image_size=size,
        vessel_width=vessel_width,
        stenosis_count=stenoses,
        narrowing=narrowing,
        phase_lengths=_int_tuple(frames),
        noise_level=noise,
        drift=_float_tuple(drift),
        seed=seed,
    )
    out.mkdir(parents=True, exist_ok=True)
    manifests = []
    for frame_stack, manifest in synth_dataset(sequences, params, seed=seed, lesion_rate=lesion_rate):
        save_sequence(out, frame_stack, manifest)
        manifests.append(manifest)
    stats = manifest_stats(manifests)
    (out / "stats.json").write_text(json.dumps(stats, indent=1, sort_keys=True) + "\n")
    _output_snapshot(out, "synth", {
        "sequences": sequences, "seed": seed, "lesion_rate": lesion_rate,
        "params": dataclasses.asdict(params),
    })
    click.echo(f"wrote {sequences} sequences to {out}")
    click.echo(json.dumps(stats["total"]))


@main.command("propagate")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--apply", "apply_boxes", is_flag=True,
              help="write propagated boxes back into the manifests")
@click.option("--learn-rate", type=float, default=0.02, show_default=True)
@click.option("--psr-threshold", type=float, default=5.0, show_default=True)
@cli_errors
def propagate_cmd(data, out, apply_boxes, learn_rate, psr_threshold):
    """Propagate reference-frame boxes across every sequence."""
    params = TrackerParams(learn_rate=learn_rate, psr_threshold=psr_threshold)
    records = []
    flagged_total = 0
    for seq_dir in sequence_dirs(data):
        frame_stack, manifest = load_sequence(seq_dir)
        ref = manifest.reference_index
        ref_boxes = manifest.frames[ref].boxes
        if not ref_boxes:
            continue
        results = propagate(frame_stack.astype(np.float64), ref, ref_boxes, params)
        for k, row in enumerate(results):
            flags = [bool(r.flagged) for r in row]
            flagged_total += sum(flags)
            records.append({
                "sequence": manifest.sequence_id,
                "frame": k,
                "boxes": [[r.box.cx, r.box.cy, r.box.w, r.box.h] for r in row],
                "flagged": flags,
            })
            if apply_boxes and k != ref and manifest.frames[k].interval != "no_contrast":
                manifest.frames[k].boxes = [r.box for r in row]
        if apply_boxes:
            save_manifest(manifest, seq_dir / "manifest.json")
    write_jsonl(out, records)
    _output_snapshot(out, "propagate", {
        "data": str(data), "apply": apply_boxes,
        "tracker": dataclasses.asdict(params),
    })
    click.echo(f"propagated {len(records)} frames, {flagged_total} flagged boxes -> {out}")


def _load_detection_frames(data: Path, intervals: tuple[str, ...]):
    """(image, boxes, sequence_id, frame_index, is_reference) per kept frame."""
    samples = []
    for seq_dir in sequence_dirs(data):
        frame_stack, manifest = load_sequence(seq_dir)
        for rec in manifest.frames:
            if rec.interval not in intervals:
                continue
            boxes = np.array([[b.cx, b.cy, b.w, b.h] for b in rec.boxes]).reshape(-1, 4)
            samples.append((
                frame_stack[rec.index].astype(np.float64),
                boxes,
                manifest.sequence_id,
                rec.index,
                rec.is_reference,
            ))
    if not samples:
        raise ValueError(f"no frames with intervals {intervals} under {data}")
    return samples


@main.command("train-detector")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--steps", type=int, default=3500, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--lr", type=float, default=8e-4, show_default=True)
@click.option("--momentum", type=float, default=0.9, show_default=True)
@click.option("--l2", type=float, default=4e-4, show_default=True)
@click.option("--base-sizes", default="16,32", show_default=True)
@click.option("--channels", default="8,16,32,48", show_default=True)
@click.option("--augment-brightness", type=float, default=10.0, show_default=True)
@click.option("--augment-contrast", type=float, default=0.15, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@cli_errors
def train_detector_cmd(data, out, steps, batch_size, lr, momentum, l2, base_sizes,
                       channels, augment_brightness, augment_contrast, seed):
    """Train the lesion detector on the optimal-interval frames."""
    samples = _load_detection_frames(data, ("optimal",))
    images = np.stack([s[0] for s in samples])
    boxes = [s[1] for s in samples]
    cfg = NetConfig(
        head="detector",
        block_channels=_int_tuple(channels),
        base_sizes=_float_tuple(base_sizes),
    )
    net = ToyNet(cfg, seed=seed)
    schedule = detector_schedule(
        learning_rate=lr, momentum=momentum, l2_lambda=l2, steps=steps,
        batch_size=batch_size, augment_brightness=augment_brightness,
        augment_contrast=augment_contrast, seed=seed,
    )
    history = train_detector(net, images, boxes, schedule)
    save_net(out, net, extra={"schedule": schedule.to_dict(), "kind": "detector"})
    write_jsonl(out.with_suffix(".log.jsonl"), history)
    _output_snapshot(out, "train-detector", {
        "data": str(data), "config": cfg.to_dict(), "schedule": schedule.to_dict(),
    })
    last = history[-1]["total"] if history else float("nan")
    click.echo(f"trained {steps} steps on {len(images)} frames, final loss {last:.4f} -> {out}")


@main.command("train-classifier")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--epochs", type=int, default=30, show_default=True)
@click.option("--batch-size", type=int, default=32, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--freeze-epochs", type=int, default=15, show_default=True)
@click.option("--image-size", type=int, default=32, show_default=True)
@click.option("--channels", default="8,16,32", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@cli_errors
def train_classifier_cmd(data, out, epochs, batch_size, lr, freeze_epochs,
                         image_size, channels, seed):
    """Train the viewing-angle classifier on downscaled optimal frames."""
    samples = _load_detection_frames(data, ("optimal",))
    views = {}
    for seq_dir in sequence_dirs(data):
        _, manifest = load_sequence(seq_dir)
        views[manifest.sequence_id] = manifest.view
    classes = sorted(set(views.values()))
    images = np.stack([downscale(s[0], image_size) for s in samples]).astype(np.float64)
    labels = np.array([classes.index(views[s[2]]) for s in samples])

    block_channels = _int_tuple(channels)
    cfg = NetConfig(head="classifier", block_channels=block_channels, num_classes=len(classes))
    net = ToyNet(cfg, seed=seed)
    schedule = classifier_schedule(
        num_blocks=len(block_channels), learning_rate=lr, epochs=epochs,
        batch_size=batch_size, freeze_epochs=freeze_epochs, seed=seed,
    )
    history = train_classifier(net, images, labels, schedule)
    save_net(out, net, extra={
        "schedule": schedule.to_dict(), "kind": "classifier",
        "classes": classes, "image_size": image_size,
    })
    write_jsonl(out.with_suffix(".log.jsonl"), history)
    _output_snapshot(out, "train-classifier", {
        "data": str(data), "config": cfg.to_dict(), "schedule": schedule.to_dict(),
        "classes": classes, "image_size": image_size,
    })
    click.echo(f"trained {epochs} epochs on {len(images)} frames, "
               f"final loss {history[-1]['train_loss']:.4f} -> {out}")


def _format_report(report) -> dict:
    return {
        "recall": report.recall,
        "precision": report.precision,
        "at_least_one": report.at_least_one,
        "tp": report.total_tp,
        "fp": report.total_fp,
        "fn": report.total_fn,
        "sequences": report.num_sequences,
    }


@main.command("eval-det")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--dets", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--iou", type=float, default=0.2, show_default=True)
@click.option("--score", type=float, default=0.5, show_default=True)
@click.option("--all-frames", is_flag=True, help="evaluate every annotated frame, not just references")
@click.option("--out", type=click.Path(path_type=Path), default=None)
@cli_errors
def eval_det(data, dets, iou, score, all_frames, out):
    """Score a detections file against dataset ground truth (max-1 and max-5)."""
    det_records = {}
    for rec in read_jsonl(dets):
        det_records[(rec["sequence"], rec["frame"])] = [
            Detection(Box(cx, cy, w, h), s) for cx, cy, w, h, s in rec["boxes"]
        ]
    table = {}
    for max_dets in (1, 5):
        params = EvalParams(iou_thr=iou, score_thr=score, max_dets=max_dets)
        evals, sids, refs = [], [], []
        for seq_dir in sequence_dirs(data):
            _, manifest = load_sequence(seq_dir)
            for rec in manifest.frames:
                if not all_frames and not rec.is_reference:
                    continue
                frame_dets = det_records.get((manifest.sequence_id, rec.index), [])
                evals.append(match_detections(frame_dets, rec.boxes, params))
                sids.append(manifest.sequence_id)
                refs.append(rec.is_reference)
        table[f"max_{max_dets}"] = _format_report(aggregate(evals, sids, refs))

    def fmt(v):
        return "-" if v is None else f"{v:.3f}"

    click.echo(f"{'':14}{'max 1 det':>18}{'max 5 dets':>18}")
    for name in ("recall", "precision"):
        click.echo(f"{name:<14}{fmt(table['max_1'][name]):>18}{fmt(table['max_5'][name]):>18}")
    click.echo(f"{'at least one':<14}{fmt(table['max_5']['at_least_one']):>36}")
    if out is not None:
        out.write_text(json.dumps(table, indent=1, sort_keys=True) + "\n")
        _output_snapshot(out, "eval-det", {
            "data": str(data), "dets": str(dets), "iou": iou, "score": score,
            "all_frames": all_frames,
        })


@main.command("eval-cls")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--model", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", type=click.Path(path_type=Path), default=None)
@cli_errors
def eval_cls(data, model, out):
    """Evaluate a classifier checkpoint on the optimal-interval frames."""
    net, extra = load_net(model)
    if extra.get("kind") != "classifier":
        raise ValueError(f"{model} is not a classifier checkpoint")
    classes = extra["classes"]
    image_size = extra["image_size"]
    samples = _load_detection_frames(data, ("optimal",))
    views = {}
    for seq_dir in sequence_dirs(data):
        _, manifest = load_sequence(seq_dir)
        views[manifest.sequence_id] = manifest.view
    images = np.stack([downscale(s[0], image_size) for s in samples]).astype(np.float64)
    labels = np.array([classes.index(views[s[2]]) for s in samples])
    logits = net.forward(standardize_images(images))
    z = logits - logits.max(axis=1, keepdims=True)
    probs = np.exp(z) / np.exp(z).sum(axis=1, keepdims=True)
    report = classification_metrics(probs, labels)
    result = {
        "accuracy": report.accuracy,
        "macro_f1": report.macro_f1,
        "cross_entropy": report.cross_entropy,
        "frames": len(labels),
    }
    click.echo(json.dumps(result, indent=1, sort_keys=True))
    if out is not None:
        out.write_text(json.dumps(result, indent=1, sort_keys=True) + "\n")
        _output_snapshot(out, "eval-cls", {"data": str(data), "model": str(model)})


@main.command("detect")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--model", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--score", type=float, default=0.5, show_default=True)
@click.option("--nms-iou", type=float, default=0.5, show_default=True)
@click.option("--max-out", type=int, default=5, show_default=True)
@cli_errors
def detect(data, model, out, score, nms_iou, max_out):
    """Run a detector checkpoint over a dataset, writing a detections file."""
    net, extra = load_net(model)
    if extra.get("kind") != "detector":
        raise ValueError(f"{model} is not a detector checkpoint")
    nms_params = NmsParams(score_thr=score, iou_thr=nms_iou, max_out=max_out)
    records = []
    for seq_dir in sequence_dirs(data):
        frame_stack, manifest = load_sequence(seq_dir)
        w, h = manifest.frame_size
        grid = generate_anchors(net.anchor_config(), w, h)
        for rec in manifest.frames:
            frame = standardize_images(frame_stack[rec.index].astype(np.float64)[None])
            probs, regs = net.forward(frame)
            found = infer(probs[0], regs[0], grid, w, h, nms_params)
            records.append({
                "sequence": manifest.sequence_id,
                "frame": rec.index,
                "boxes": [[d.box.cx, d.box.cy, d.box.w, d.box.h, d.score] for d in found],
            })
    write_jsonl(out, records)
    _output_snapshot(out, "detect", {
        "data": str(data), "model": str(model), "score": score,
        "nms_iou": nms_iou, "max_out": max_out,
    })
    click.echo(f"wrote detections for {len(records)} frames -> {out}")


@main.command("gradcam")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--model", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--count", type=int, default=8, show_default=True)
@cli_errors
def gradcam_cmd(data, model, out, count):
    """Write class-activation overlays for reference frames."""
    from PIL import Image

    net, extra = load_net(model)
    if extra.get("kind") != "classifier":
        raise ValueError(f"{model} is not a classifier checkpoint")
    image_size = extra["image_size"]
    out.mkdir(parents=True, exist_ok=True)
    written = 0
    for seq_dir in sequence_dirs(data):
        if written >= count:
            break
        frame_stack, manifest = load_sequence(seq_dir)
        frame = downscale(frame_stack[manifest.reference_index], image_size).astype(np.float64)
        model_input = standardize_images(frame[None])[0]
        logits = net.forward(model_input[None, None])
        class_id = int(np.argmax(logits[0]))
        cam = grad_cam(net, model_input, class_id)
        gray = np.clip(frame, 0, 255).astype(np.uint8)
        heat = (cam.heat * 255).astype(np.uint8)
        rgb = np.stack([
            np.maximum(gray, heat),
            gray,
            gray,
        ], axis=-1)
        name = f"{manifest.sequence_id}_class{extra['classes'][class_id]}.png"
        Image.fromarray(rgb, mode="RGB").save(out / name)
        written += 1
    _output_snapshot(out, "gradcam", {"data": str(data), "model": str(model), "count": count})
    click.echo(f"wrote {written} overlays to {out}")


@main.command("stats")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@cli_errors
def stats_cmd(data):
    """Print dataset statistics (patients, sequences, frames per interval, boxes)."""
    manifests = [load_sequence(d)[1] for d in sequence_dirs(data)]
    click.echo(json.dumps(manifest_stats(manifests), indent=1, sort_keys=True))


@main.command("serve")
@click.option("--data", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--ui", type=click.Path(path_type=Path), default=None,
              help="directory with the built review UI to serve at /")
@click.option("--frame-cap", type=int, default=256, show_default=True)
@cli_errors
def serve(data, host, port, ui, frame_cap):
    """Start the annotation review service."""
    import uvicorn

    from .service import create_app

    app = create_app(data, frame_cap=frame_cap, ui_dir=ui)
    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
