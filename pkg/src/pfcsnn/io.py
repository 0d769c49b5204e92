"""Artifact export: spike rasters (CSV), weight images (PGM + CSV sidecar),
result summaries and run manifests (flat key=value text).

All writes are atomic (temp file in the target directory, then rename) and
deterministic: rewriting the same object produces byte-identical files. The
manifest is the one artifact that is not reproducible across runs (it records
wall-clock duration), so it lives in its own file.
"""

from __future__ import annotations

import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .stdp import SynapseProjection


@dataclass
class RunManifest:
    config_snapshot: dict          # fully resolved flat config
    seed: int
    artifacts: dict = field(default_factory=dict)
    tool_version: str = "0.1.0"
    duration_s: float = 0.0


def _atomic_write_bytes(path, payload: bytes) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_write_text(path, text: str) -> None:
    _atomic_write_bytes(path, text.encode())


def export_raster(raster, path) -> None:
    """CSV of spikes: header `neuron_id,time_ms`, one row per spike, sorted by
    time then neuron id. `raster` is an (n, 2) array of (neuron_id, time_ms)
    rows or any iterable of such pairs; times are written at 0.1 us precision,
    ample for any dt down to 1e-4 ms."""
    rows = np.asarray(list(raster) if not isinstance(raster, np.ndarray) else raster,
                      dtype=np.float64)
    if rows.size == 0:
        rows = rows.reshape(0, 2)
    if rows.ndim != 2 or rows.shape[1] != 2:
        raise ValueError(f"raster must be (n, 2) of (neuron_id, time_ms), got {rows.shape}")
    order = np.lexsort((rows[:, 0], rows[:, 1]))
    lines = ["neuron_id,time_ms"]
    for nid, t in rows[order]:
        lines.append(f"{int(nid)},{t:.4f}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def read_raster(path) -> np.ndarray:
    """Inverse of export_raster; returns the (n, 2) array."""
    lines = Path(path).read_text().strip().splitlines()
    if lines[0] != "neuron_id,time_ms":
        raise ValueError(f"{path}: not a raster CSV")
    out = []
    for line in lines[1:]:
        nid, t = line.split(",")
        out.append((float(nid), float(t)))
    return np.asarray(out, dtype=np.float64).reshape(len(out), 2)


def export_weight_image(proj: SynapseProjection, post_index: int, path) -> None:
    """28x28 view of one post-neuron's 784 incoming weights.

    Writes binary PGM (P5, maxval 255) with [0, w_max] scaled linearly onto
    [0, 255], plus a lossless CSV of the raw weights at `path` with a .csv
    suffix."""
    if proj.n_pre != 784:
        raise ValueError(f"weight image requires 784 pre-neurons, got {proj.n_pre}")
    if not 0 <= post_index < proj.n_post:
        raise ValueError(f"post index {post_index} out of range for {proj.n_post} post-neurons")
    w = proj.weights[:, post_index]
    scaled = np.rint(np.clip(w / proj.params.w_max, 0.0, 1.0) * 255.0).astype(np.uint8)
    payload = b"P5\n28 28\n255\n" + scaled.reshape(28, 28).tobytes()
    _atomic_write_bytes(path, payload)

    csv_path = Path(path).with_suffix(".csv")
    lines = [",".join(repr(float(v)) for v in row) for row in w.reshape(28, 28)]
    _atomic_write_text(csv_path, "\n".join(lines) + "\n")


def export_weights_csv(weights: np.ndarray, path) -> None:
    """Full-precision CSV dump of a weight matrix."""
    lines = [",".join(repr(float(v)) for v in row) for row in np.asarray(weights)]
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _summary_lines(summary) -> list:
    lines = [
        f"condition.connectivity={summary.connectivity}",
        f"condition.schedule={summary.schedule}",
        f"condition.lesion_p={summary.lesion_p:g}",
    ]
    for cat in sorted(summary.accuracy):
        lines.append(f"accuracy.{cat}={summary.accuracy[cat]:.4f}")
    for cat in sorted(summary.counts):
        correct, total = summary.counts[cat]
        lines.append(f"counts.{cat}.correct={correct}")
        lines.append(f"counts.{cat}.total={total}")
    lines.append(f"n_trials={summary.n_trials}")
    lines.append(f"assignment.n_t={summary.assignment.n_t}")
    lines.append(f"assignment.n_nt={summary.assignment.n_nt}")
    lines.append(f"seed={summary.seed}")
    for name in sorted(summary.artifacts):
        lines.append(f"artifact.{name}={summary.artifacts[name]}")
    return lines


def write_summary(summary, manifest: RunManifest, path) -> None:
    """Results in stable key=value order, followed by the resolved config
    snapshot, so the file alone pins the run. Byte-identical when re-run
    from the same snapshot."""
    lines = _summary_lines(summary)
    for key in sorted(manifest.config_snapshot):
        lines.append(f"config.{key}={_fmt(manifest.config_snapshot[key])}")
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_manifest(manifest: RunManifest, path) -> None:
    """Run record including wall-clock duration (not byte-reproducible)."""
    lines = [
        f"tool_version={manifest.tool_version}",
        f"seed={manifest.seed}",
        f"duration_s={manifest.duration_s:.3f}",
    ]
    for name in sorted(manifest.artifacts):
        lines.append(f"artifact.{name}={manifest.artifacts[name]}")
    for key in sorted(manifest.config_snapshot):
        lines.append(f"config.{key}={_fmt(manifest.config_snapshot[key])}")
    _atomic_write_text(path, "\n".join(lines) + "\n")
