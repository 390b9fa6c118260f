"""File formats: frame files, run manifests, CSV/SVG reports, image patches.

A frame file is a single JSON header line followed by m CSV rows of N
full-precision floats (one row per dimension). The header records the
coherence at save time; loading recomputes it and refuses files that do not
match, so silent corruption cannot pass. Saving a loaded frame reproduces
the file byte for byte.
"""
from __future__ import annotations

import csv
import io
import json
import platform
import sys
from pathlib import Path

import numpy as np

from ._version import __version__ as _version
from .errors import FrameFormatError, InvalidInput
from .frames import Frame, frame_metrics, mutual_coherence

_FORMAT_NAME = "incoframes-frame"
_FORMAT_VERSION = 1
_LOAD_UNIT_TOL = 1e-8
_LOAD_MU_TOL = 1e-8
# Frame's own constructor tolerance; see frames.py.
_STRICT_UNIT_TOL = 1e-10


def environment_fingerprint():
    """Versions and platform of the producing run, for manifests."""
    import scipy

    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }


def write_frame(path, frame, seed=None, nonneg=False, extra=None):
    """Write a frame file: one JSON header line, then m rows of repr floats."""
    header = {
        "format": _FORMAT_NAME,
        "version": _FORMAT_VERSION,
        "m": frame.m,
        "n_vectors": frame.n_vectors,
        "coherence": mutual_coherence(frame),
        "nonneg": bool(nonneg),
        "creator": f"incoframes {_version}",
    }
    if seed is not None:
        header["seed"] = int(seed)
    if extra:
        header.update(extra)
    lines = [json.dumps(header, sort_keys=True)]
    for row in frame.vectors:
        lines.append(",".join(repr(float(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_frame(path):
    """Load a frame file, verifying unit norms and the recorded coherence.

    Returns ``(frame, header)``. Raises FrameFormatError on parse errors,
    shape mismatches, non-unit columns (beyond 1e-8), or a header coherence
    that disagrees with the matrix by more than 1e-8.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise FrameFormatError(f"cannot read frame file {path}: {exc}") from exc
    lines = text.splitlines()
    if not lines:
        raise FrameFormatError(f"{path}: empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FrameFormatError(f"{path}: bad JSON header: {exc}") from exc
    if not isinstance(header, dict) or header.get("format") != _FORMAT_NAME:
        raise FrameFormatError(f"{path}: not a frame file")
    if header.get("version") != _FORMAT_VERSION:
        raise FrameFormatError(f"{path}: unsupported version {header.get('version')!r}")
    try:
        m, n = int(header["m"]), int(header["n_vectors"])
        recorded_mu = float(header["coherence"])
    except (KeyError, TypeError, ValueError) as exc:
        raise FrameFormatError(f"{path}: incomplete header: {exc}") from exc

    rows = [line for line in lines[1:] if line.strip()]
    if len(rows) != m:
        raise FrameFormatError(f"{path}: expected {m} rows, found {len(rows)}")
    try:
        mat = np.array([[float(x) for x in row.split(",")] for row in rows])
    except ValueError as exc:
        raise FrameFormatError(f"{path}: bad payload row: {exc}") from exc
    if mat.shape != (m, n):
        raise FrameFormatError(f"{path}: payload shape {mat.shape} != ({m}, {n})")
    if not np.isfinite(mat).all():
        raise FrameFormatError(f"{path}: non-finite entries")
    norms = np.linalg.norm(mat, axis=0)
    worst = float(np.abs(norms - 1.0).max())
    if worst > _LOAD_UNIT_TOL:
        raise FrameFormatError(f"{path}: columns not unit norm (deviation {worst:.3e})")
    if worst > _STRICT_UNIT_TOL:
        mat = mat / norms  # tolerate hand-made files, our own are exact
    try:
        frame = Frame(mat)
    except InvalidInput as exc:
        raise FrameFormatError(f"{path}: {exc}") from exc
    actual_mu = mutual_coherence(frame)
    if abs(actual_mu - recorded_mu) > _LOAD_MU_TOL:
        raise FrameFormatError(
            f"{path}: recorded coherence {recorded_mu!r} != recomputed {actual_mu!r}"
        )
    return frame, header


def write_manifest(path, cfg, report, wall_seconds):
    """JSON record of a design run: config echo, trace, metrics, environment."""
    fm = report.final_metrics
    doc = {
        "creator": f"incoframes {_version}",
        "config": {
            "m": cfg.m,
            "n_vectors": cfg.n_vectors,
            "sweeps": cfg.sweeps,
            "seed": cfg.seed,
            "eps_stop": cfg.eps_stop,
            "radius_slack": cfg.radius_slack,
            "solver_tol": cfg.solver_tol,
            "nonneg": cfg.nonneg,
            "escape_enabled": cfg.escape_enabled,
        },
        "raw_coherence": report.raw_coherence,
        "initial_coherence": report.initial_coherence,
        "trace": list(report.trace),
        "escape_sweeps": list(report.escape_sweeps),
        "escape_coherence": list(report.escape_coherence),
        "stalled": list(report.stalled),
        "best_sweep": report.best_sweep,
        "wall_seconds": wall_seconds,
        "final_metrics": None
        if fm is None
        else {
            "mu": fm.mu,
            "mu_avg": fm.mu_avg,
            "frame_potential": fm.frame_potential,
            "welch": fm.welch,
            "sparsity_cap": fm.sparsity_cap,
        },
        "environment": environment_fingerprint(),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def write_correlation_profile(path, frame):
    """CSV of all pairwise |correlations| sorted descending, with summary comments.

    Returns ``(fraction_above_099mu, fraction_above_095mu)``.
    """
    g = frame.gram()
    vals = np.sort(np.abs(g[np.triu_indices(frame.n_vectors, k=1)]))[::-1]
    mu = float(vals[0])
    frac99 = float((vals >= 0.99 * mu).mean()) if mu > 0.0 else 0.0
    frac95 = float((vals >= 0.95 * mu).mean()) if mu > 0.0 else 0.0
    fm = frame_metrics(frame)
    buf = io.StringIO()
    buf.write(f"# m={frame.m},n_vectors={frame.n_vectors}\n")
    buf.write(f"# mu={mu!r},mu_avg={fm.mu_avg!r},welch={fm.welch!r}\n")
    buf.write(f"# frac_above_099mu={frac99!r},frac_above_095mu={frac95!r}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rank", "abs_correlation"])
    for rank, v in enumerate(vals, start=1):
        writer.writerow([rank, repr(float(v))])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")
    return frac99, frac95


def write_cs_table(path, results):
    """CSV of the recovery benchmark: one row per (m, source) with config echo."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        [
            "m",
            "source",
            "sensing_coherence",
            "mean_error",
            "q25",
            "q50",
            "q75",
            "support_rate",
            "trials",
            "n_signal",
            "n_atoms",
            "sparsity",
            "seed",
        ]
    )
    for m, source, res in results:
        e = res.experiment
        writer.writerow(
            [
                m,
                source,
                repr(res.sensing_coherence),
                repr(res.mean_error),
                repr(res.quantiles["q25"]),
                repr(res.quantiles["q50"]),
                repr(res.quantiles["q75"]),
                repr(res.support_rate),
                e.trials,
                e.n_signal,
                e.n_atoms,
                e.sparsity,
                e.seed,
            ]
        )
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_error_trace(path, trace, context=None):
    """CSV of a per-iteration relative-error trace."""
    buf = io.StringIO()
    if context:
        buf.write("# " + ",".join(f"{k}={v}" for k, v in sorted(context.items())) + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["iteration", "relative_error"])
    for it, err in enumerate(trace):
        writer.writerow([it, repr(float(err))])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def write_line_chart(path, series, xlabel, ylabel, title):
    """Minimal deterministic SVG line chart.

    ``series`` is a list of (label, xs, ys) triples sharing the x axis. The y
    axis switches to log10 when every value is positive.
    """
    width, height = 640, 420
    lpad, rpad, tpad, bpad = 70, 20, 40, 50
    xs_all = [x for _, xs, _ in series for x in xs]
    ys_all = [y for _, _, ys in series for y in ys]
    if not xs_all or not ys_all:
        raise InvalidInput("cannot plot empty series")
    logy = all(y > 0.0 for y in ys_all)
    import math

    def ty(v):
        return math.log10(v) if logy else v

    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ty(y) for y in ys_all), max(ty(y) for y in ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    plot_w = width - lpad - rpad
    plot_h = height - tpad - bpad

    def px(x):
        return lpad + plot_w * (x - x_lo) / (x_hi - x_lo)

    def py(y):
        return tpad + plot_h * (1.0 - (ty(y) - y_lo) / (y_hi - y_lo))

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#8c564b"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="24" text-anchor="middle" '
        f'font-family="sans-serif" font-size="15">{title}</text>',
        f'<line x1="{lpad}" y1="{tpad}" x2="{lpad}" y2="{height - bpad}" stroke="black"/>',
        f'<line x1="{lpad}" y1="{height - bpad}" x2="{width - rpad}" '
        f'y2="{height - bpad}" stroke="black"/>',
        f'<text x="{(lpad + width - rpad) / 2:.1f}" y="{height - 12}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12">{xlabel}</text>',
        f'<text x="18" y="{(tpad + height - bpad) / 2:.1f}" text-anchor="middle" '
        f'font-family="sans-serif" font-size="12" '
        f'transform="rotate(-90 18 {(tpad + height - bpad) / 2:.1f})">{ylabel}</text>',
    ]
    for x in sorted(set(xs_all)):
        parts.append(
            f'<text x="{px(x):.1f}" y="{height - bpad + 18}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="11">{x:g}</text>'
        )
        parts.append(
            f'<line x1="{px(x):.1f}" y1="{height - bpad}" x2="{px(x):.1f}" '
            f'y2="{height - bpad + 4}" stroke="black"/>'
        )
    n_ticks = 5
    for t in range(n_ticks + 1):
        yv = y_lo + (y_hi - y_lo) * t / n_ticks
        ypix = tpad + plot_h * (1.0 - t / n_ticks)
        label = f"1e{yv:.1f}" if logy else f"{yv:.3g}"
        parts.append(
            f'<text x="{lpad - 8}" y="{ypix + 4:.1f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="11">{label}</text>'
        )
        parts.append(
            f'<line x1="{lpad - 4}" y1="{ypix:.1f}" x2="{lpad}" y2="{ypix:.1f}" stroke="black"/>'
        )
    for idx, (label, xs, ys) in enumerate(series):
        color = colors[idx % len(colors)]
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        for x, y in zip(xs, ys):
            parts.append(f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>')
        ly = tpad + 16 + 18 * idx
        parts.append(
            f'<line x1="{width - rpad - 130}" y1="{ly - 4}" x2="{width - rpad - 105}" '
            f'y2="{ly - 4}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{width - rpad - 100}" y="{ly}" font-family="sans-serif" '
            f'font-size="12">{label}</text>'
        )
    parts.append("</svg>")
    Path(path).write_text("\n".join(parts) + "\n", encoding="utf-8")


def read_pgm(path):
    """Read a PGM image (P2 ascii or P5 binary) into floats in [0, 1]."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise FrameFormatError(f"cannot read image {path}: {exc}") from exc

    # Header tokens may be interleaved with '#' comments.
    tokens = []
    pos = 0
    while len(tokens) < 4 and pos < len(raw):
        if raw[pos : pos + 1] == b"#":
            eol = raw.find(b"\n", pos)
            pos = len(raw) if eol < 0 else eol + 1
            continue
        if raw[pos : pos + 1].isspace():
            pos += 1
            continue
        end = pos
        while end < len(raw) and not raw[end : end + 1].isspace() and raw[end : end + 1] != b"#":
            end += 1
        tokens.append(raw[pos:end])
        pos = end
    if len(tokens) < 4 or tokens[0] not in (b"P2", b"P5"):
        raise FrameFormatError(f"{path}: not a PGM file")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    except ValueError as exc:
        raise FrameFormatError(f"{path}: bad PGM header: {exc}") from exc
    if width < 1 or height < 1 or not (0 < maxval < 65536):
        raise FrameFormatError(f"{path}: bad PGM dimensions")

    if tokens[0] == b"P2":
        try:
            vals = np.array([int(v) for v in raw[pos:].split()], dtype=float)
        except ValueError as exc:
            raise FrameFormatError(f"{path}: bad PGM data: {exc}") from exc
    else:
        pos += 1  # single whitespace byte after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype(np.uint8)
        data = raw[pos : pos + width * height * dtype.itemsize]
        vals = np.frombuffer(data, dtype=dtype).astype(float)
    if vals.size != width * height:
        raise FrameFormatError(
            f"{path}: expected {width * height} pixels, found {vals.size}"
        )
    return vals.reshape(height, width) / maxval


def read_image(path):
    """Read a grayscale image: PGM natively, PNG via Pillow when available."""
    suffix = Path(path).suffix.lower()
    if suffix == ".pgm":
        return read_pgm(path)
    if suffix == ".png":
        try:
            from PIL import Image
        except ImportError as exc:
            raise FrameFormatError("PNG support requires the Pillow package") from exc
        try:
            with Image.open(path) as img:
                return np.asarray(img.convert("L"), dtype=float) / 255.0
        except OSError as exc:
            raise FrameFormatError(f"cannot read image {path}: {exc}") from exc
    raise FrameFormatError(f"unsupported image type: {path}")


def extract_patches(image, patch=8):
    """Non-overlapping patch columns: mean-removed, unit-normalized.

    Tiles the image into patch x patch blocks (truncating ragged edges),
    flattens each block row-major, subtracts its mean, drops blocks with
    norm below 1e-6, and normalizes the rest. Returns (patch*patch, count).
    """
    image = np.asarray(image, dtype=float)
    if image.ndim != 2 or min(image.shape) < patch:
        raise InvalidInput(f"image too small for {patch}x{patch} patches: {image.shape}")
    rows = image.shape[0] // patch
    cols = image.shape[1] // patch
    blocks = []
    for r in range(rows):
        for c in range(cols):
            b = image[r * patch : (r + 1) * patch, c * patch : (c + 1) * patch].ravel()
            b = b - b.mean()
            norm = float(np.linalg.norm(b))
            if norm < 1e-6:
                continue
            blocks.append(b / norm)
    if not blocks:
        raise InvalidInput("no usable patches (all constant)")
    return np.column_stack(blocks)


def load_patch_matrix(directory, patch=8):
    """Patch columns from every PGM/PNG image in a directory, name-sorted."""
    paths = sorted(
        p for p in Path(directory).iterdir() if p.suffix.lower() in (".pgm", ".png")
    )
    if not paths:
        raise FrameFormatError(f"no PGM or PNG images in {directory}")
    mats = [extract_patches(read_image(p), patch=patch) for p in paths]
    return np.concatenate(mats, axis=1)
