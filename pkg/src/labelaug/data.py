"""Dataset loading, train/val splitting, and synthetic desk-scale data.

On-disk interchange is the CIFAR-10 binary record layout generalized to any
raster size: each record is 1 label byte followed by H*W*C pixel bytes in
planar channel order (all of channel 0, then channel 1, ...). For 32x32x3
that is the standard 3073-byte CIFAR-10 record.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DataFormatError, InvalidInputError

CIFAR10_RECORD_BYTES = 3073


@dataclass
class LabeledDataset:
    images: np.ndarray  # (N, H, W, C) uint8
    labels: np.ndarray  # (N,) int64
    num_classes: int

    def __post_init__(self):
        self.images = np.ascontiguousarray(self.images, dtype=np.uint8)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim != 4:
            raise InvalidInputError(
                f"images must be (N, H, W, C), got shape {self.images.shape}")
        if len(self.images) != len(self.labels):
            raise InvalidInputError("images and labels differ in length")
        if self.num_classes < 1:
            raise InvalidInputError("num_classes must be >= 1")
        if len(self.labels) and (self.labels.min() < 0
                                 or self.labels.max() >= self.num_classes):
            raise InvalidInputError("labels must lie in [0, num_classes)")

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def image_shape(self) -> tuple[int, int, int]:
        return tuple(self.images.shape[1:])  # type: ignore[return-value]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes)

    def indices_by_label(self) -> dict[int, np.ndarray]:
        """Per label, the dataset positions holding that label (ascending)."""
        return {y: np.nonzero(self.labels == y)[0]
                for y in range(self.num_classes)}

    def subset(self, indices) -> "LabeledDataset":
        idx = np.asarray(indices, dtype=np.int64)
        return LabeledDataset(self.images[idx], self.labels[idx],
                              self.num_classes)


@dataclass
class SplitSpec:
    mode: str  # "total" | "per-class"
    val_size: int
    seed: int = 0

    def __post_init__(self):
        if self.mode not in ("total", "per-class"):
            raise ConfigError(f"unknown split mode {self.mode!r}")
        if self.val_size <= 0:
            raise ConfigError("val_size must be positive")


def load_records(paths, height: int, width: int, channels: int,
                 num_classes: int) -> LabeledDataset:
    """Load one or more binary record files into a dataset."""
    if isinstance(paths, (str, bytes)):
        paths = [paths]
    record = 1 + height * width * channels
    images, labels = [], []
    for path in paths:
        with open(path, "rb") as fh:
            raw = fh.read()
        if len(raw) == 0 or len(raw) % record != 0:
            raise DataFormatError(
                f"{path}: size {len(raw)} is not a positive multiple of "
                f"record size {record}")
        arr = np.frombuffer(raw, dtype=np.uint8).reshape(-1, record)
        lab = arr[:, 0].astype(np.int64)
        if lab.max() >= num_classes:
            raise DataFormatError(
                f"{path}: label byte {int(lab.max())} >= num_classes {num_classes}")
        pix = arr[:, 1:].reshape(-1, channels, height, width)
        images.append(np.transpose(pix, (0, 2, 3, 1)))
        labels.append(lab)
    return LabeledDataset(np.concatenate(images), np.concatenate(labels),
                          num_classes)


def save_records(ds: LabeledDataset, path: str) -> None:
    """Write a dataset in the binary record layout (round-trips exactly)."""
    n, h, w, c = ds.images.shape
    planar = np.transpose(ds.images, (0, 3, 1, 2)).reshape(n, -1)
    out = np.empty((n, 1 + h * w * c), dtype=np.uint8)
    out[:, 0] = ds.labels.astype(np.uint8)
    out[:, 1:] = planar
    with open(path, "wb") as fh:
        fh.write(out.tobytes())


def load_cifar10_binary(paths) -> LabeledDataset:
    """CIFAR-10 binary batches: 3073-byte records, 32x32x3, 10 classes."""
    return load_records(paths, 32, 32, 3, num_classes=10)


def split_train_val(ds: LabeledDataset, spec: SplitSpec
                    ) -> tuple[LabeledDataset, LabeledDataset]:
    """Disjoint, exhaustive, seeded split; deterministic given spec.seed."""
    n = len(ds)
    rng = np.random.default_rng(spec.seed)
    if spec.mode == "total":
        if spec.val_size >= n:
            raise ConfigError(f"val_size {spec.val_size} >= dataset size {n}")
        perm = rng.permutation(n)
        val_idx = np.sort(perm[:spec.val_size])
    else:
        counts = ds.class_counts()
        if counts.min() == 0:
            raise ConfigError("per-class split requires every class non-empty")
        if spec.val_size >= counts.min():
            raise ConfigError(
                f"val_size {spec.val_size} >= smallest class count {counts.min()}")
        picks = []
        for y in range(ds.num_classes):
            members = np.nonzero(ds.labels == y)[0]
            picks.append(rng.permutation(members)[:spec.val_size])
        val_idx = np.sort(np.concatenate(picks))
    mask = np.zeros(n, dtype=bool)
    mask[val_idx] = True
    train_idx = np.nonzero(~mask)[0]
    return ds.subset(train_idx), ds.subset(val_idx)


# --- synthetic invariance-structured data ---------------------------------
#
# Pattern vocabulary. Class evidence is destroyed by different op families
# by construction:
#   blob_bright / blob_dark   polarity-coded radial blobs; Invert maps one
#                             onto the other, any geometric op is harmless
#                             (rotation-invariant shape).
#   hstripe_even / hstripe_odd phase-coded horizontal stripes (period 4);
#                             vertical displacement (TranslateY, ShearY,
#                             Rotate) swaps or smears the phase code, while
#                             horizontal displacement is a no-op.
#   bar_any / cross_any       centered thin bar (or cross) at a uniformly
#                             random tilt in [-30 deg, 30 deg]; the tilt is a
#                             nuisance, so Rotate supplies exactly the right
#                             coverage, while displacement ops (Translate,
#                             Shear, Cutout) move or delete the evidence.
#   plain_dim / plain_bright  level-coded uniform fields; the brightness
#                             family (Brightness, Contrast, AutoContrast,
#                             Equalize, Invert, Solarize) collapses the code,
#                             and geometric ops inject neutral-gray fill
#                             between the two levels.

SYNTHETIC_PATTERNS = ("blob_bright", "blob_dark", "hstripe_even",
                      "hstripe_odd", "bar_any", "cross_any", "plain_dim",
                      "plain_bright")

DEFAULT_PLANS = {
    2: ["blob_bright", "hstripe_even"],
    4: ["bar_any", "plain_dim", "plain_bright", "cross_any"],
}


def _blob(rng, h, w, bg, fg, jitter):
    base = np.full((h, w), float(bg))
    cy = (h - 1) / 2.0 + rng.uniform(-jitter, jitter)
    cx = (w - 1) / 2.0 + rng.uniform(-jitter, jitter)
    sigma = min(h, w) / 5.0 * rng.uniform(0.75, 1.25)
    ys, xs = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    bump = np.exp(-((ys - cy) ** 2 + (xs - cx) ** 2) / (2 * sigma**2))
    return base + (fg - bg) * bump


def _hstripes(rng, h, w, phase):
    rows = (np.arange(h) + phase) % 4 < 2
    img = np.where(rows[:, None], 200.0, 55.0)
    return np.broadcast_to(img, (h, w)).copy()


def _oriented(rng, h, w, cross):
    # canonical crisp bar/cross, then a random tilt through the augmentation
    # kernel's own rotation so the natural angle nuisance and the Rotate op
    # generate the same pixel family
    from .ops import OpKind, apply_op

    img = np.full((h, w), 60.0)
    cy, cx = (h - 1) // 2, (w - 1) // 2
    img[cy - 1:cy + 2, 2:w - 2] = 200.0
    if cross:
        img[2:h - 2, cx - 1:cx + 2] = 200.0
    u8 = np.clip(img, 0, 255).astype(np.uint8)[:, :, None]
    angle = rng.uniform(-30.0, 30.0)
    rotated = apply_op(u8, OpKind.Rotate, angle).astype(np.float64)[:, :, 0]
    scale = rng.uniform(0.55, 1.15)  # global intensity nuisance
    return rotated * scale


def _render(pattern: str, rng, h: int, w: int, jitter: float) -> np.ndarray:
    if pattern == "blob_bright":
        return _blob(rng, h, w, bg=30, fg=225, jitter=jitter)
    if pattern == "blob_dark":
        return _blob(rng, h, w, bg=225, fg=30, jitter=jitter)
    if pattern == "hstripe_even":
        return _hstripes(rng, h, w, phase=0)
    if pattern == "hstripe_odd":
        return _hstripes(rng, h, w, phase=2)
    if pattern == "bar_any":
        return _oriented(rng, h, w, cross=False)
    if pattern == "cross_any":
        return _oriented(rng, h, w, cross=True)
    if pattern == "plain_dim":
        return np.full((h, w), 70.0)
    if pattern == "plain_bright":
        return np.full((h, w), 185.0)  # 255-70: Invert maps the two plains onto each other
    raise ConfigError(f"unknown synthetic pattern {pattern!r}")


def make_synthetic(num_classes: int, per_class: int, size: int = 16,
                   channels: int = 1, plan: list[str] | None = None,
                   noise: float = 8.0, jitter: float = 3.0,
                   seed: int = 0) -> LabeledDataset:
    """Generate the invariance-structured synthetic dataset.

    plan maps each class to a pattern name; per-label best augmentations
    differ by construction (see pattern vocabulary above). noise is the
    per-pixel gaussian sigma; jitter the blob position range in pixels.
    """
    if num_classes <= 0 or per_class <= 0 or size <= 0:
        raise ConfigError("counts and size must be positive")
    if channels not in (1, 3):
        raise ConfigError("channels must be 1 or 3")
    if plan is None:
        plan = DEFAULT_PLANS.get(num_classes)
        if plan is None:
            plan = [SYNTHETIC_PATTERNS[i % len(SYNTHETIC_PATTERNS)]
                    for i in range(num_classes)]
    if len(plan) != num_classes:
        raise ConfigError("plan must name one pattern per class")

    rng = np.random.default_rng(seed)
    images = np.empty((num_classes * per_class, size, size, channels),
                      dtype=np.uint8)
    labels = np.empty(num_classes * per_class, dtype=np.int64)
    i = 0
    for y, pattern in enumerate(plan):
        for _ in range(per_class):
            img = _render(pattern, rng, size, size, jitter)
            img = img + rng.uniform(-10.0, 10.0)  # mild global intensity jitter
            img = img + rng.normal(0.0, noise, size=img.shape)
            u8 = np.clip(img, 0, 255).astype(np.uint8)
            images[i] = u8[:, :, None] if channels == 1 else \
                np.repeat(u8[:, :, None], 3, axis=2)
            labels[i] = y
            i += 1
    return LabeledDataset(images, labels, num_classes)
