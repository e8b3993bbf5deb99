import numpy as np
import pytest

from eigenderm.dataset import (
    NEGATIVE,
    POSITIVE,
    Manifest,
    PixelConfig,
    SampleRecord,
    build_labeled_matrix,
    build_split_manifest,
    decode_and_flatten,
    load_manifest,
    manifest_from_records,
    merge_manifests,
    save_manifest,
    scan_directory,
)
from eigenderm.errors import (
    DecodeError,
    IngestError,
    InvalidInputError,
    ShapeError,
)

from conftest import solid_png, write_png

CFG2 = PixelConfig(height=2, width=2)


class TestScanDirectory:
    def test_empty_directory(self, tmp_path):
        assert scan_directory(tmp_path, POSITIVE, "train") == []

    def test_ignores_non_images_and_sorts(self, tmp_path):
        solid_png(tmp_path / "c.png", 2, 2, (1, 2, 3))
        solid_png(tmp_path / "a.png", 2, 2, (1, 2, 3))
        solid_png(tmp_path / "b.jpg", 2, 2, (1, 2, 3))
        (tmp_path / "notes.txt").write_text("not an image")
        records = scan_directory(tmp_path, NEGATIVE, "test")
        names = [r.path.rsplit("/", 1)[-1] for r in records]
        assert names == ["a.png", "b.jpg", "c.png"]
        assert all(r.label == NEGATIVE and r.split == "test" for r in records)

    def test_recursive_traversal(self, tmp_path):
        expected = {
            solid_png(tmp_path / "top.png", 2, 2, (0, 0, 0)),
            solid_png(tmp_path / "sub" / "one.png", 2, 2, (0, 0, 0)),
            solid_png(tmp_path / "sub" / "deep" / "two.jpeg", 2, 2, (0, 0, 0)),
        }
        records = scan_directory(tmp_path, POSITIVE, "train")
        assert {r.path for r in records} == expected
        assert [r.path for r in records] == sorted(r.path for r in records)

    def test_missing_root(self, tmp_path):
        with pytest.raises(OSError):
            scan_directory(tmp_path / "nope", POSITIVE, "train")


def _records(tmp_path, n, label=POSITIVE):
    return [
        SampleRecord(path=solid_png(tmp_path / f"img_{i:03d}.png", 2, 2, (i % 256, 0, 0)),
                     label=label, split="train")
        for i in range(n)
    ]


class TestSplitManifest:
    def test_default_positive_split_sizes(self, tmp_path):
        records = _records(tmp_path, 300)
        manifest = build_split_manifest(records, 250, 50, seed=7)
        assert manifest.count(split="train") == 250
        assert manifest.count(split="validation") == 50
        train = {r.path for r in manifest.select("train")}
        val = {r.path for r in manifest.select("validation")}
        assert not train & val

    def test_default_negative_split_sizes(self, tmp_path):
        records = _records(tmp_path, 600, label=NEGATIVE)
        manifest = build_split_manifest(records, 500, 100, seed=7)
        assert manifest.count(label=NEGATIVE, split="train") == 500
        assert manifest.count(label=NEGATIVE, split="validation") == 100

    def test_counts_exceeding_records(self, tmp_path):
        records = _records(tmp_path, 8)
        with pytest.raises(InvalidInputError):
            build_split_manifest(records, 5, 10, seed=0)

    def test_same_seed_reproduces(self, tmp_path):
        records = _records(tmp_path, 30)
        a = build_split_manifest(records, 20, 5, seed=11)
        b = build_split_manifest(records, 20, 5, seed=11)
        assert a.records == b.records

    def test_different_seeds_shuffle_differently(self, tmp_path):
        records = _records(tmp_path, 30)
        a = build_split_manifest(records, 20, 5, seed=1)
        b = build_split_manifest(records, 20, 5, seed=2)
        assert a.records != b.records

    def test_missing_file_rejected(self, tmp_path):
        rec = SampleRecord(path=str(tmp_path / "ghost.png"), label=POSITIVE, split="train")
        with pytest.raises(InvalidInputError):
            build_split_manifest([rec], 1, 0, seed=0)

    def test_duplicate_paths_rejected(self, tmp_path):
        path = solid_png(tmp_path / "x.png", 2, 2, (0, 0, 0))
        rec = SampleRecord(path=path, label=POSITIVE, split="train")
        with pytest.raises(InvalidInputError):
            Manifest(records=(rec, rec), created_at="2024-01-01T00:00:00+00:00", seed=0)

    def test_roundtrip_is_identical(self, tmp_path):
        records = _records(tmp_path / "data", 12)
        manifest = merge_manifests(
            build_split_manifest(records, 8, 2, seed=3),
            manifest_from_records(
                [SampleRecord(path=solid_png(tmp_path / "t.png", 2, 2, (9, 9, 9)),
                              label=NEGATIVE, split="test")],
                seed=3,
            ),
        )
        out = tmp_path / "manifests" / "split.jsonl"
        save_manifest(manifest, out)
        assert load_manifest(out) == manifest

    def test_tampered_manifest_rejected(self, tmp_path):
        records = _records(tmp_path, 3)
        manifest = build_split_manifest(records, 2, 1, seed=5)
        out = tmp_path / "m.jsonl"
        save_manifest(manifest, out)
        lines = out.read_text().splitlines()
        lines[1] = lines[1].replace("train", "test", 1)
        out.write_text("\n".join(lines) + "\n")
        with pytest.raises(InvalidInputError):
            load_manifest(out)

    def test_merge_requires_matching_seeds(self, tmp_path):
        records = _records(tmp_path, 4)
        a = build_split_manifest(records[:2], 2, 0, seed=1)
        b = build_split_manifest(records[2:], 2, 0, seed=2)
        with pytest.raises(InvalidInputError):
            merge_manifests(a, b)


class TestDecodeAndFlatten:
    def test_uniform_gray(self, tmp_path):
        path = solid_png(tmp_path / "gray.png", 2, 2, (128, 128, 128))
        vec = decode_and_flatten(path, CFG2)
        assert np.array_equal(vec, np.full(12, 128.0 / 255.0))

    def test_reject_policy_on_size_mismatch(self, tmp_path):
        path = solid_png(tmp_path / "small.png", 2, 2, (0, 0, 0))
        cfg = PixelConfig(height=4, width=4, resize_policy="reject")
        with pytest.raises(ShapeError):
            decode_and_flatten(path, cfg)

    def test_bilinear_policy_resizes(self, tmp_path):
        path = solid_png(tmp_path / "small.png", 2, 2, (50, 100, 150))
        cfg = PixelConfig(height=4, width=4, resize_policy="bilinear")
        vec = decode_and_flatten(path, cfg)
        assert vec.shape == (48,)
        assert np.array_equal(vec.reshape(4, 4, 3)[0, 0], [50 / 255, 100 / 255, 150 / 255])

    def test_flat_layout_matches_hand_enumeration(self, tmp_path):
        # distinct value per (y, x, c) so every flat index is checkable
        pixels = np.arange(12, dtype=np.uint8).reshape(2, 2, 3) * 20
        path = write_png(tmp_path / "grid.png", pixels)
        vec = decode_and_flatten(path, CFG2)
        for y in range(2):
            for x in range(2):
                for c in range(3):
                    flat = (y * 2 + x) * 3 + c
                    assert vec[flat] == pixels[y, x, c] / 255.0

    def test_undecodable_file(self, tmp_path):
        bad = tmp_path / "junk.png"
        bad.write_bytes(b"this is not a png")
        with pytest.raises(DecodeError):
            decode_and_flatten(bad, CFG2)

    def test_single_nonzero_pixel_layout(self, tmp_path):
        for y, x, c in [(0, 0, 0), (1, 2, 1), (2, 1, 2)]:
            pixels = np.zeros((3, 3, 3), dtype=np.uint8)
            pixels[y, x, c] = 255
            path = write_png(tmp_path / f"dot_{y}{x}{c}.png", pixels)
            vec = decode_and_flatten(path, PixelConfig(height=3, width=3))
            (nz,) = np.nonzero(vec)
            assert list(nz) == [(y * 3 + x) * 3 + c]


class TestBuildLabeledMatrix:
    def _manifest(self, tmp_path, n=3):
        records = [
            SampleRecord(
                path=solid_png(tmp_path / f"s{i}.png", 2, 2, (10 * i, 0, 0)),
                label=POSITIVE,
                split="train",
            )
            for i in range(n)
        ]
        return manifest_from_records(records, seed=0)

    def test_empty_class_rejected(self, tmp_path):
        manifest = self._manifest(tmp_path)
        with pytest.raises(InvalidInputError):
            build_labeled_matrix(manifest, "train", NEGATIVE, CFG2)

    def test_columns_match_individual_decodes(self, tmp_path):
        manifest = self._manifest(tmp_path)
        lm = build_labeled_matrix(manifest, "train", POSITIVE, CFG2)
        assert lm.matrix.shape == (12, 3)
        for i, rec in enumerate(manifest.records):
            assert np.array_equal(lm.matrix[:, i], decode_and_flatten(rec.path, CFG2))
            assert lm.paths[i] == rec.path

    def test_duplicate_files_give_identical_columns(self, tmp_path):
        a = solid_png(tmp_path / "a.png", 2, 2, (3, 141, 59))
        b = tmp_path / "b.png"
        b.write_bytes((tmp_path / "a.png").read_bytes())
        manifest = manifest_from_records(
            [
                SampleRecord(path=a, label=POSITIVE, split="train"),
                SampleRecord(path=str(b), label=POSITIVE, split="train"),
            ],
            seed=0,
        )
        lm = build_labeled_matrix(manifest, "train", POSITIVE, CFG2)
        assert np.array_equal(lm.matrix[:, 0], lm.matrix[:, 1])

    def test_decode_failures_are_aggregated(self, tmp_path):
        good = solid_png(tmp_path / "good.png", 2, 2, (1, 1, 1))
        bad = tmp_path / "bad.png"
        bad.write_bytes(b"nope")
        manifest = manifest_from_records(
            [
                SampleRecord(path=good, label=POSITIVE, split="train"),
                SampleRecord(path=str(bad), label=POSITIVE, split="train"),
            ],
            seed=0,
        )
        with pytest.raises(IngestError) as err:
            build_labeled_matrix(manifest, "train", POSITIVE, CFG2)
        assert err.value.paths == [str(bad)]

    def test_worker_count_does_not_change_result(self, tmp_path, rng):
        records = []
        for i in range(10):
            pixels = rng.integers(0, 256, size=(2, 2, 3)).astype(np.uint8)
            records.append(
                SampleRecord(
                    path=write_png(tmp_path / f"r{i}.png", pixels),
                    label=POSITIVE,
                    split="train",
                )
            )
        manifest = manifest_from_records(records, seed=0)
        serial = build_labeled_matrix(manifest, "train", POSITIVE, CFG2, workers=1)
        threaded = build_labeled_matrix(manifest, "train", POSITIVE, CFG2, workers=4)
        assert np.array_equal(serial.matrix, threaded.matrix)
