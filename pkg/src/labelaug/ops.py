"""The 16-operation augmentation kernel.

Images are (H, W, C) uint8 arrays with C in {1, 3}. Every operation returns
a new array and never mutates its input. Geometric operations use
nearest-neighbor resampling and fill vacated pixels with neutral gray 128.

Pixel semantics are defined purely by integer and IEEE-754 double
arithmetic (no PIL), so an external evaluator in another runtime can
reproduce pointwise results bit-exactly; see docs/protocol.md.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, ShapeError

FILL_GRAY = 128


class OpKind(enum.IntEnum):
    Identity = 0
    ShearX = 1
    ShearY = 2
    TranslateX = 3
    TranslateY = 4
    Rotate = 5
    AutoContrast = 6
    Invert = 7
    Equalize = 8
    Solarize = 9
    Posterize = 10
    Contrast = 11
    Color = 12
    Brightness = 13
    Sharpness = 14
    Cutout = 15


OP_NAMES = [k.name for k in OpKind]

# Ordered triple of op codes; duplicates permitted, so the space is 16^3.
AugTriple = tuple[int, int, int]

NUM_TRIPLES = len(OpKind) ** 3

SIGNED_OPS = frozenset({
    OpKind.ShearX, OpKind.ShearY, OpKind.TranslateX, OpKind.TranslateY,
    OpKind.Rotate, OpKind.Contrast, OpKind.Color, OpKind.Brightness,
    OpKind.Sharpness,
})

ENHANCE_OPS = frozenset({
    OpKind.Contrast, OpKind.Color, OpKind.Brightness, OpKind.Sharpness,
})

MAGNITUDE_FREE_OPS = frozenset({
    OpKind.Identity, OpKind.AutoContrast, OpKind.Invert, OpKind.Equalize,
})


@dataclass(frozen=True)
class MagnitudeSpec:
    uses_magnitude: bool
    lo: float
    hi: float
    signed: bool


MAGNITUDE_SPECS: dict[OpKind, MagnitudeSpec] = {
    OpKind.Identity: MagnitudeSpec(False, 0.0, 0.0, False),
    OpKind.ShearX: MagnitudeSpec(True, 0.0, 0.3, True),
    OpKind.ShearY: MagnitudeSpec(True, 0.0, 0.3, True),
    OpKind.TranslateX: MagnitudeSpec(True, 0.0, 0.45, True),  # fraction of width
    OpKind.TranslateY: MagnitudeSpec(True, 0.0, 0.45, True),  # fraction of height
    OpKind.Rotate: MagnitudeSpec(True, 0.0, 30.0, True),  # degrees
    OpKind.AutoContrast: MagnitudeSpec(False, 0.0, 0.0, False),
    OpKind.Invert: MagnitudeSpec(False, 0.0, 0.0, False),
    OpKind.Equalize: MagnitudeSpec(False, 0.0, 0.0, False),
    OpKind.Solarize: MagnitudeSpec(True, 256.0, 0.0, False),  # threshold, m=0 is identity
    OpKind.Posterize: MagnitudeSpec(True, 8.0, 4.0, False),  # bits kept
    OpKind.Contrast: MagnitudeSpec(True, 0.1, 1.9, True),  # enhance factor
    OpKind.Color: MagnitudeSpec(True, 0.1, 1.9, True),
    OpKind.Brightness: MagnitudeSpec(True, 0.1, 1.9, True),
    OpKind.Sharpness: MagnitudeSpec(True, 0.1, 1.9, True),
    OpKind.Cutout: MagnitudeSpec(True, 0.0, 0.2, False),  # side / min(H, W)
}


def list_ops() -> list[OpKind]:
    """Canonical 16-element op list in stable code order."""
    return list(OpKind)


def triple_code(triple: AugTriple) -> int:
    """Lexicographic integer code of an ordered triple (base-16 digits)."""
    a, b, c = triple
    return (a << 8) | (b << 4) | c


def code_to_triple(code: int) -> AugTriple:
    return ((code >> 8) & 15, (code >> 4) & 15, code & 15)


def sample_magnitude(kind: OpKind, rng) -> tuple[float, object]:
    """Draw a normalized magnitude and resolve it to op units.

    Draw order (fixed; external evaluators must match): one uniform for the
    magnitude, then one uniform for the sign if the op is signed, then two
    uniforms for the cutout center. Returns (m, resolved) where resolved is
    a float for all ops except Cutout, which gets (side_fraction, ux, uy).
    """
    kind = OpKind(kind)
    m = rng.random()
    sign = 1.0
    if kind in SIGNED_OPS:
        sign = 1.0 if rng.random() < 0.5 else -1.0
    if kind == OpKind.Cutout:
        ux = rng.random()
        uy = rng.random()
        return m, (m * MAGNITUDE_SPECS[kind].hi, ux, uy)
    if kind in MAGNITUDE_FREE_OPS:
        return m, 0.0
    if kind in ENHANCE_OPS:
        return m, 1.0 + sign * 0.9 * m
    spec = MAGNITUDE_SPECS[kind]
    return m, sign * (spec.lo + m * (spec.hi - spec.lo))


def _check_image(image: np.ndarray) -> np.ndarray:
    image = np.asarray(image)
    if image.dtype != np.uint8 or image.ndim != 3 or image.shape[2] not in (1, 3):
        raise ShapeError(
            f"image must be uint8 (H, W, C) with C in {{1,3}}, got "
            f"dtype={image.dtype} shape={image.shape}")
    return image


def _round_half_up(x):
    return np.floor(x + 0.5)


def _luminance(image: np.ndarray) -> np.ndarray:
    """Integer luma; for 3-channel uses (299R + 587G + 114B + 500) // 1000."""
    if image.shape[2] == 1:
        return image[:, :, 0].astype(np.int64)
    r = image[:, :, 0].astype(np.int64)
    g = image[:, :, 1].astype(np.int64)
    b = image[:, :, 2].astype(np.int64)
    return (299 * r + 587 * g + 114 * b + 500) // 1000


def _blend(degenerate: np.ndarray, original: np.ndarray, factor: float) -> np.ndarray:
    """out = degenerate + factor * (original - degenerate), rounded half-up."""
    deg = degenerate.astype(np.float64)
    org = original.astype(np.float64)
    out = _round_half_up(deg + factor * (org - deg))
    return np.clip(out, 0.0, 255.0).astype(np.uint8)


def _equalize_channel(chan: np.ndarray) -> np.ndarray:
    hist = np.bincount(chan.ravel(), minlength=256)
    nonzero = hist[hist > 0]
    if nonzero.size <= 1:
        return chan.copy()
    step = (int(hist.sum()) - int(nonzero[-1])) // 255
    if step == 0:
        return chan.copy()
    lut = np.empty(256, dtype=np.int64)
    n = step // 2
    for i in range(256):
        lut[i] = n // step
        n += int(hist[i])
    lut = np.clip(lut, 0, 255).astype(np.uint8)
    return lut[chan]


def _autocontrast_channel(chan: np.ndarray) -> np.ndarray:
    hist = np.bincount(chan.ravel(), minlength=256)
    present = np.nonzero(hist)[0]
    lo, hi = int(present[0]), int(present[-1])
    if hi <= lo:
        return chan.copy()
    scale = 255.0 / (hi - lo)
    offset = -lo * scale
    lut = np.floor(np.arange(256, dtype=np.float64) * scale + offset)
    lut = np.clip(lut, 0.0, 255.0).astype(np.uint8)
    return lut[chan]


def _smooth(image: np.ndarray) -> np.ndarray:
    """3x3 kernel [[1,1,1],[1,5,1],[1,1,1]]/13 on the interior; border copied."""
    h, w, _ = image.shape
    out = image.astype(np.int64).copy()
    if h < 3 or w < 3:
        return image.copy()
    src = image.astype(np.float64)
    acc = (src[:-2, :-2] + src[:-2, 1:-1] + src[:-2, 2:]
           + src[1:-1, :-2] + 5.0 * src[1:-1, 1:-1] + src[1:-1, 2:]
           + src[2:, :-2] + src[2:, 1:-1] + src[2:, 2:])
    out_f = out.astype(np.float64)
    out_f[1:-1, 1:-1] = np.clip(_round_half_up(acc / 13.0), 0.0, 255.0)
    return out_f.astype(np.uint8)


_GRID_CACHE: dict[tuple[int, int], tuple[np.ndarray, np.ndarray]] = {}


def _grids(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    key = (h, w)
    if key not in _GRID_CACHE:
        ys, xs = np.meshgrid(np.arange(h, dtype=np.float64),
                             np.arange(w, dtype=np.float64), indexing="ij")
        _GRID_CACHE[key] = (ys, xs)
    return _GRID_CACHE[key]


def _gather(image: np.ndarray, src_y: np.ndarray, src_x: np.ndarray) -> np.ndarray:
    """Nearest-neighbor gather with gray fill outside the source raster."""
    h, w, c = image.shape
    yi = _round_half_up(src_y).astype(np.int64)
    xi = _round_half_up(src_x).astype(np.int64)
    valid = (yi >= 0) & (yi < h) & (xi >= 0) & (xi < w)
    out = np.full((h, w, c), FILL_GRAY, dtype=np.uint8)
    out[valid] = image[yi[valid], xi[valid]]
    return out


def apply_op(image: np.ndarray, kind: OpKind, magnitude) -> np.ndarray:
    """Apply one operation at a resolved magnitude; returns a new image."""
    image = _check_image(image)
    try:
        kind = OpKind(kind)
    except ValueError:
        raise InvalidInputError(f"unknown op kind {kind!r}") from None
    h, w, c = image.shape

    if kind == OpKind.Identity:
        return image.copy()
    if kind == OpKind.Invert:
        return (255 - image.astype(np.int16)).astype(np.uint8)
    if kind == OpKind.Solarize:
        return np.where(image.astype(np.float64) >= magnitude,
                        255 - image.astype(np.int16), image).astype(np.uint8)
    if kind == OpKind.Posterize:
        bits = int(np.floor(magnitude + 0.5))
        bits = min(8, max(1, bits))
        mask = (0xFF << (8 - bits)) & 0xFF
        return (image & np.uint8(mask)).copy()
    if kind == OpKind.AutoContrast:
        return np.stack([_autocontrast_channel(image[:, :, i])
                         for i in range(c)], axis=2)
    if kind == OpKind.Equalize:
        return np.stack([_equalize_channel(image[:, :, i])
                         for i in range(c)], axis=2)
    if kind == OpKind.Brightness:
        return _blend(np.zeros_like(image), image, float(magnitude))
    if kind == OpKind.Contrast:
        lum = _luminance(image)
        mean = int(np.floor(lum.sum() / lum.size + 0.5))
        return _blend(np.full_like(image, mean), image, float(magnitude))
    if kind == OpKind.Color:
        if c == 1:
            return image.copy()  # no chroma on grayscale
        gray = _luminance(image).astype(np.uint8)
        return _blend(np.repeat(gray[:, :, None], 3, axis=2), image,
                      float(magnitude))
    if kind == OpKind.Sharpness:
        return _blend(_smooth(image), image, float(magnitude))

    if kind == OpKind.Cutout:
        side_frac, ux, uy = magnitude
        side = int(np.floor(side_frac * min(h, w) + 0.5))
        out = image.copy()
        if side <= 0:
            return out
        cx = int(np.floor(ux * w))
        cy = int(np.floor(uy * h))
        half = side // 2
        y0, x0 = max(0, cy - half), max(0, cx - half)
        y1, x1 = min(h, cy - half + side), min(w, cx - half + side)
        out[y0:y1, x0:x1] = FILL_GRAY
        return out

    ys, xs = _grids(h, w)
    if kind == OpKind.ShearX:
        return _gather(image, ys, xs + float(magnitude) * ys)
    if kind == OpKind.ShearY:
        return _gather(image, ys + float(magnitude) * xs, xs)
    if kind == OpKind.TranslateX:
        dx = math.floor(float(magnitude) * w + 0.5)
        return _gather(image, ys, xs + dx)
    if kind == OpKind.TranslateY:
        dy = math.floor(float(magnitude) * h + 0.5)
        return _gather(image, ys + dy, xs)
    if kind == OpKind.Rotate:
        theta = math.radians(float(magnitude))
        cos_t, sin_t = math.cos(theta), math.sin(theta)
        cy_c, cx_c = (h - 1) / 2.0, (w - 1) / 2.0
        dx = xs - cx_c
        dy = ys - cy_c
        src_x = cx_c + cos_t * dx + sin_t * dy
        src_y = cy_c - sin_t * dx + cos_t * dy
        return _gather(image, src_y, src_x)

    raise InvalidInputError(f"unhandled op kind {kind!r}")  # pragma: no cover


def apply_triple(image: np.ndarray, triple: AugTriple, rng) -> np.ndarray:
    """Apply the three ops in order, each with a freshly sampled magnitude.

    Consumes exactly one magnitude draw per op plus the sign/position draws
    documented in sample_magnitude; draw counts depend only on op kinds.
    """
    if len(triple) != 3:
        raise InvalidInputError(f"triple must have exactly 3 ops, got {triple!r}")
    out = image
    for kind in triple:
        _, resolved = sample_magnitude(OpKind(kind), rng)
        out = apply_op(out, OpKind(kind), resolved)
    return out


def apply_triple_traced(image: np.ndarray, triple: AugTriple, rng
                        ) -> tuple[np.ndarray, list[tuple[str, object]]]:
    """apply_triple plus a (op name, resolved magnitude) trace."""
    if len(triple) != 3:
        raise InvalidInputError(f"triple must have exactly 3 ops, got {triple!r}")
    out = image
    trace = []
    for kind in triple:
        kind = OpKind(kind)
        _, resolved = sample_magnitude(kind, rng)
        trace.append((kind.name, resolved))
        out = apply_op(out, kind, resolved)
    return out, trace
