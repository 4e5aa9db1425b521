"""Dataset module tests: record format, splits, synthetic generation."""

import numpy as np
import pytest

from labelaug import data
from labelaug.errors import ConfigError, DataFormatError, InvalidInputError


def fake_cifar_file(path, n_records, seed=0, bad_label=None):
    rng = np.random.default_rng(seed)
    buf = np.empty((n_records, 3073), dtype=np.uint8)
    buf[:, 0] = rng.integers(0, 10, size=n_records)
    if bad_label is not None:
        buf[0, 0] = bad_label
    buf[:, 1:] = rng.integers(0, 256, size=(n_records, 3072))
    path.write_bytes(buf.tobytes())
    return buf


class TestCifarLoader:
    def test_three_records(self, tmp_path):
        p = tmp_path / "batch.bin"
        fake_cifar_file(p, 3)
        ds = data.load_cifar10_binary(str(p))
        assert len(ds) == 3
        assert ds.image_shape == (32, 32, 3)
        assert ds.num_classes == 10

    def test_five_batch_archive_counts(self, tmp_path):
        # desk-scale analog of the 5 x 10,000 = 50,000 training archive
        paths = []
        for i in range(5):
            p = tmp_path / f"data_batch_{i + 1}.bin"
            fake_cifar_file(p, 100, seed=i)
            paths.append(str(p))
        ds = data.load_cifar10_binary(paths)
        assert len(ds) == 500

    def test_truncated_file(self, tmp_path):
        p = tmp_path / "bad.bin"
        p.write_bytes(b"\x00" * 3072)  # one byte short of a record
        with pytest.raises(DataFormatError):
            data.load_cifar10_binary(str(p))

    def test_bad_label_byte(self, tmp_path):
        p = tmp_path / "bad.bin"
        fake_cifar_file(p, 2, bad_label=11)
        with pytest.raises(DataFormatError):
            data.load_cifar10_binary(str(p))

    def test_planar_channel_order(self, tmp_path):
        # one record: label 3, R plane all 10, G all 20, B all 30
        rec = bytearray([3]) + bytes([10] * 1024 + [20] * 1024 + [30] * 1024)
        p = tmp_path / "one.bin"
        p.write_bytes(bytes(rec))
        ds = data.load_cifar10_binary(str(p))
        assert ds.labels[0] == 3
        assert np.all(ds.images[0, :, :, 0] == 10)
        assert np.all(ds.images[0, :, :, 1] == 20)
        assert np.all(ds.images[0, :, :, 2] == 30)

    def test_round_trip(self, tmp_path):
        ds = data.make_synthetic(3, 5, size=8, seed=1)
        p = tmp_path / "rt.bin"
        data.save_records(ds, str(p))
        back = data.load_records(str(p), 8, 8, 1, num_classes=3)
        assert np.array_equal(back.images, ds.images)
        assert np.array_equal(back.labels, ds.labels)


class TestSplit:
    def test_cifar_protocol_sizes(self, tmp_path):
        # scaled-down analog of the 50,000 -> 46,000 / 4,000 protocol
        ds = data.make_synthetic(10, 50, size=8, seed=2)
        train, val = data.split_train_val(ds, data.SplitSpec("total", 40, seed=0))
        assert (len(train), len(val)) == (460, 40)

    def test_per_class_counts(self):
        ds = data.make_synthetic(20, 50, size=8, seed=3)
        train, val = data.split_train_val(
            ds, data.SplitSpec("per-class", 5, seed=1))
        assert len(val) == 100
        assert np.all(val.class_counts() == 5)
        assert np.all(train.class_counts() == 45)

    def test_disjoint_exhaustive(self):
        ds = data.make_synthetic(4, 25, size=8, seed=4)
        train, val = data.split_train_val(
            ds, data.SplitSpec("per-class", 6, seed=2))
        assert len(train) + len(val) == len(ds)
        # recover index partition via image identity
        seen = set()
        for img in np.concatenate([train.images, val.images]):
            seen.add(img.tobytes())
        originals = {img.tobytes() for img in ds.images}
        assert seen == originals

    def test_same_seed_identical(self):
        ds = data.make_synthetic(4, 25, size=8, seed=4)
        a_train, a_val = data.split_train_val(
            ds, data.SplitSpec("total", 20, seed=9))
        b_train, b_val = data.split_train_val(
            ds, data.SplitSpec("total", 20, seed=9))
        assert np.array_equal(a_val.images, b_val.images)
        assert np.array_equal(a_train.images, b_train.images)

    def test_val_too_large(self):
        ds = data.make_synthetic(2, 10, size=8, seed=5)
        with pytest.raises(ConfigError):
            data.split_train_val(ds, data.SplitSpec("total", 20, seed=0))
        with pytest.raises(ConfigError):
            data.split_train_val(ds, data.SplitSpec("per-class", 10, seed=0))

    def test_bad_mode(self):
        with pytest.raises(ConfigError):
            data.SplitSpec("half", 5, seed=0)


class TestSynthetic:
    def test_balanced_two_class(self):
        ds = data.make_synthetic(2, 100, size=16, channels=1, seed=6)
        assert len(ds) == 200
        assert np.all(ds.class_counts() == 100)
        assert ds.image_shape == (16, 16, 1)

    def test_same_seed_bit_identical(self):
        a = data.make_synthetic(4, 10, seed=7)
        b = data.make_synthetic(4, 10, seed=7)
        assert np.array_equal(a.images, b.images)
        assert np.array_equal(a.labels, b.labels)

    def test_three_channel(self):
        ds = data.make_synthetic(2, 4, size=8, channels=3, seed=8)
        assert ds.image_shape == (8, 8, 3)

    def test_custom_plan(self):
        ds = data.make_synthetic(
            2, 4, plan=["plain_dim", "plain_bright"], noise=1.0, seed=9)
        dim = ds.images[ds.labels == 0].mean()
        bright = ds.images[ds.labels == 1].mean()
        assert dim < 100 < bright

    def test_bad_config(self):
        with pytest.raises(ConfigError):
            data.make_synthetic(0, 10)
        with pytest.raises(ConfigError):
            data.make_synthetic(2, 10, channels=2)
        with pytest.raises(ConfigError):
            data.make_synthetic(2, 10, plan=["blob_bright"])
        with pytest.raises(ConfigError):
            data.make_synthetic(2, 10, plan=["blob_bright", "nope"])


class TestLabeledDataset:
    def test_label_range_checked(self):
        with pytest.raises(InvalidInputError):
            data.LabeledDataset(np.zeros((2, 4, 4, 1), dtype=np.uint8),
                                np.array([0, 5]), num_classes=2)

    def test_length_mismatch(self):
        with pytest.raises(InvalidInputError):
            data.LabeledDataset(np.zeros((2, 4, 4, 1), dtype=np.uint8),
                                np.array([0]), num_classes=2)

    def test_indices_by_label_ascending(self):
        ds = data.make_synthetic(3, 4, size=8, seed=10)
        by = ds.indices_by_label()
        for y, idx in by.items():
            assert np.all(np.diff(idx) > 0)
            assert np.all(ds.labels[idx] == y)
