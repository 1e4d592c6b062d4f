"""Exit criteria, each at its stated tolerance on synthetic fixtures.

Every test carries ``acceptance(n, title)``; the conftest hook prints one
PASS/FAIL line per criterion in the terminal summary.
"""

import hashlib
import json
import re
import time

import numpy as np
import pytest

from helpers import (
    check_paste_invariants,
    make_sample,
    random_boxes,
    random_case,
    random_image,
    synthetic_samples,
    write_dataset,
)
from oracles import brute_force_ap, expected_mosaic_boxes, mosaic_mask_boxes
from uavaug.boxes import Annotation, Box
from uavaug.cli import main
from uavaug.config import PRESETS, AugmentConfig
from uavaug.copy_paste import CopyPasteParams, copy_paste
from uavaug.dataset_io import InMemoryDataset, parse_label_file, write_label_file
from uavaug.evaluation import Detection, evaluate
from uavaug.fog import FogParams, apply_fog, fog_image
from uavaug.global_ops import MosaicParams, mosaic_boxes, mosaic_center
from uavaug.imaging import to_uint8
from uavaug.photometric import HsvGains, hsv_adjust, hsv_to_rgb, rgb_to_hsv
from uavaug.pipeline import augment_sample, materialize, read_output_manifest


def tree_hashes(root):
    return {
        p.relative_to(root).as_posix(): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


@pytest.mark.acceptance(1, "mosaic geometry oracle")
def test_mosaic_geometry(record_property):
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    kept_total = dropped_total = 0
    worst = 0.0
    for _ in range(200):
        # output sizes vary too; the box map does not depend on S but runtime does
        size = int(rng.choice([160, 256, 320, 416, 640]))
        p = MosaicParams(size=size, center_jitter=float(rng.uniform(0, 0.5)))
        sizes = [(int(rng.integers(64, 513)), int(rng.integers(64, 513))) for _ in range(4)]
        boxes = [random_boxes(rng, w, h, int(rng.integers(0, 9))) for w, h in sizes]
        samples = [make_sample(np.zeros((h, w, 3), np.uint8), b) for (w, h), b in zip(sizes, boxes)]
        center = mosaic_center(p, rng)

        got = [a.box.as_tuple() for a in mosaic_boxes(samples, center, p)]
        expected = expected_mosaic_boxes(sizes, boxes, center, size, p.min_box_side, p.min_area_ratio)
        survivors = [e for e in expected if e is not None]
        assert len(got) == len(survivors)
        assert all(np.allclose(g, e, rtol=0, atol=1e-9) for g, e in zip(got, survivors))

        masks = mosaic_mask_boxes(sizes, boxes, center, size)
        for e, m in zip(expected, masks):
            if e is None:
                dropped_total += 1
                continue
            kept_total += 1
            assert m is not None, f"surviving box {e} has no mask pixels"
            err = max(abs(a - b) for a, b in zip(e, m))
            worst = max(worst, err)
            assert err <= 1.0, f"box {e} vs mask {m}"
    elapsed = time.perf_counter() - start
    record_property(
        "detail",
        f"{kept_total} kept, {dropped_total} dropped, max edge error {worst:.3f} px, {elapsed:.1f}s",
    )
    assert elapsed < 60.0


@pytest.mark.acceptance(2, "AP oracle equivalence")
def test_ap_oracle(record_property):
    worked_dets = [(0.9, (0, 0, 10, 10)), (0.7, (50, 50, 60, 60)), (0.6, (20, 20, 30, 30))]
    worked_gts = [(0, 0, 10, 10), (20, 20, 30, 30)]
    cases = [(worked_dets, worked_gts)]
    rng = np.random.default_rng(99)
    cases += [random_case(rng) for _ in range(1000)]
    worst = 0.0
    for dets, gts in cases:
        preds = {"a": [Detection(0, Box(*b), c) for c, b in dets]}
        truth = {"a": [Annotation(0, Box(*g)) for g in gts]}
        got = evaluate(preds, truth).map50
        worst = max(worst, abs(got - brute_force_ap(dets, gts)))
    first = evaluate(
        {"a": [Detection(0, Box(*b), c) for c, b in worked_dets]},
        {"a": [Annotation(0, Box(*g)) for g in worked_gts]},
    ).map50
    record_property("detail", f"{len(cases)} sets, max |diff| {worst:.2e}, worked example {first:.6f}")
    assert abs(first - 5 / 6) <= 1e-9
    assert worst <= 1e-9


@pytest.mark.acceptance(3, "HSV identity and round trip")
def test_hsv(record_property):
    rng = np.random.default_rng(3)
    for _ in range(50):
        img = random_image(rng, int(rng.integers(1, 200)), int(rng.integers(1, 200)))
        assert np.array_equal(hsv_adjust(img, HsvGains(0, 0, 0), rng), img)
    levels = np.unique(np.append(np.arange(0, 256, 5), 255))
    grid = np.stack(np.meshgrid(levels, levels, levels, indexing="ij"), axis=-1).reshape(1, -1, 3)
    grid = grid.astype(np.uint8)
    back = to_uint8(hsv_to_rgb(*rgb_to_hsv(grid)))
    err = int(np.abs(back.astype(int) - grid.astype(int)).max())
    record_property("detail", f"50 identity fixtures, {grid.shape[1]} grid colors, max error {err}")
    assert grid.shape[1] >= 100_000
    assert err <= 1


@pytest.mark.acceptance(4, "probability calibration")
def test_probability_calibration(record_property):
    ds = InMemoryDataset(synthetic_samples(10, w=16, h=16, max_boxes=1))
    mosaic_cfg = AugmentConfig.from_preset("context_aware", size=16, mosaic_prob=0.75)
    mixup_cfg = AugmentConfig.from_preset("global_mixing", size=16, mixup_prob=0.1)
    mos = mix = 0
    n = 0
    for seed in range(1000):
        for i in range(len(ds)):
            mos += augment_sample(ds, i, 0, mosaic_cfg, seed).meta["mosaic"]
            mix += augment_sample(ds, i, 0, mixup_cfg, seed).meta["mixup"]
            n += 1
    rate_mos, rate_mix = mos / n, mix / n
    record_property("detail", f"n={n}, mosaic rate {rate_mos:.4f}, mixup rate {rate_mix:.4f}")
    assert 0.73 <= rate_mos <= 0.77
    assert 0.085 <= rate_mix <= 0.115


@pytest.mark.acceptance(5, "close-mosaic schedule")
def test_close_mosaic(tmp_path, record_property):
    ds = InMemoryDataset(synthetic_samples(100, w=16, h=16, max_boxes=1))
    cfg = AugmentConfig.from_preset("context_aware", size=16, epochs=100, close_mosaic=10, mosaic_prob=0.75)
    materialize(ds, cfg, range(100), 5, tmp_path / "out", jobs=4)
    rows = read_output_manifest(tmp_path / "out" / "manifest.csv")
    assert len(rows) == 100 * 100
    per_epoch = np.zeros(100, int)
    for r in rows:
        per_epoch[r["epoch"]] += r["mosaic_applied"]
    record_property(
        "detail",
        f"min mosaics per epoch 0-89: {per_epoch[:90].min()}, total in 90-99: {per_epoch[90:].sum()}",
    )
    assert per_epoch[90:].sum() == 0
    assert (per_epoch[:90] > 0).all()


@pytest.mark.acceptance(6, "copy-paste constraints")
def test_copy_paste_constraints(record_property):
    rng = np.random.default_rng(6)
    pasted = identity_pasted = 0
    for _ in range(500):
        w, h = int(rng.integers(64, 320)), int(rng.integers(64, 320))
        bg = make_sample(random_image(rng, w, h), random_boxes(rng, w, h, int(rng.integers(0, 6))))
        sources = [
            make_sample(random_image(rng, 96, 96), random_boxes(rng, 96, 96, int(rng.integers(1, 4))))
            for _ in range(3)
        ]
        params = CopyPasteParams(dropout_max=0.3)
        out = copy_paste(bg, sources, params, rng)
        check_paste_invariants(bg, sources, out, params, identity=False)
        pasted += out.meta["pastes"]

        plain = CopyPasteParams(gamma_range=(1, 1), brightness_range=(0, 0), dropout_max=0.0)
        out = copy_paste(bg, sources, plain, rng)
        check_paste_invariants(bg, sources, out, plain, identity=True)
        identity_pasted += out.meta["pastes"]
    record_property("detail", f"500 runs, {pasted} adjusted pastes, {identity_pasted} verbatim pastes")
    assert pasted > 0 and identity_pasted > 0


@pytest.mark.acceptance(7, "fog properties")
def test_fog(record_property):
    rng = np.random.default_rng(7)
    worst = 0
    for _ in range(20):
        img = random_image(rng, int(rng.integers(8, 64)), int(rng.integers(8, 64)))
        a = tuple(float(v) for v in rng.integers(0, 256, 3))
        assert np.array_equal(fog_image(img, FogParams(beta=0.0, airlight=a)), img)
        assert (apply_fog(img, 0.0, a) == np.array(a, np.uint8)).all()
        prev = None
        for beta in (0, 0.5, 1, 2, 4):
            out = fog_image(img, FogParams(beta=beta)).astype(int)
            if prev is not None:
                assert np.all(out >= prev)
            prev = out
        t1, t2 = rng.uniform(0, 1, 2)
        twice = apply_fog(apply_fog(img, t1, a), t2, a).astype(int)
        once = apply_fog(img, t1 * t2, a).astype(int)
        worst = max(worst, int(np.abs(twice - once).max()))
    record_property("detail", f"20 fixtures, max composition error {worst}")
    assert worst <= 1


@pytest.mark.acceptance(8, "determinism across --jobs")
def test_determinism(tmp_path, record_property):
    data = write_dataset(tmp_path / "data", synthetic_samples(12))
    for preset in ("context_aware", "heavy_instance"):
        args = ["augment", "--data", str(data), "--strategy", preset, "--epochs", "0-1", "--seed", "17", "--size", "96"]
        assert main(args + ["--out", str(tmp_path / f"{preset}1"), "--jobs", "1"]) == 0
        assert main(args + ["--out", str(tmp_path / f"{preset}4"), "--jobs", "4"]) == 0
        a, b = tree_hashes(tmp_path / f"{preset}1"), tree_hashes(tmp_path / f"{preset}4")
        assert a == b and len(a) == 2 * 2 * 12 + 2
    record_property("detail", "context_aware and heavy_instance trees hash-identical for jobs 1 and 4")


@pytest.mark.acceptance(9, "label round trip")
def test_label_round_trip(record_property):
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(1000):
        w, h = int(rng.integers(1, 4000)), int(rng.integers(1, 4000))
        anns = []
        for _ in range(int(rng.integers(0, 20))):
            x0, x1 = sorted(rng.uniform(0, w, 2))
            y0, y1 = sorted(rng.uniform(0, h, 2))
            # keep boxes wide enough to survive 6-decimal formatting
            x1, y1 = max(x1, x0 + w * 2e-6), max(y1, y0 + h * 2e-6)
            anns.append(Annotation(int(rng.integers(0, 100)), Box(x0, y0, min(x1, w), min(y1, h))))
        back = parse_label_file(write_label_file(anns, w, h), w, h)
        assert [a.class_id for a in back] == [a.class_id for a in anns]
        for a, b in zip(anns, back):
            worst = max(worst, float(np.max(np.abs(np.subtract(a.box.as_tuple(), b.box.as_tuple())))))
    record_property("detail", f"1000 sets, max corner error {worst:.4f} px")
    assert worst <= 1.0


@pytest.mark.acceptance(10, "end-to-end smoke")
def test_end_to_end(tmp_path, record_property, capsys):
    data = write_dataset(tmp_path / "data", synthetic_samples(10))
    out = tmp_path / "aug"
    assert main(["augment", "--data", str(data), "--out", str(out), "--strategy", "baseline"]) == 0
    labels = out / "epoch_0" / "labels"
    js = tmp_path / "report.json"
    rc = main(["eval", "--gt", str(labels), "--pred", str(labels), "--pred-format", "label", "--json", str(js)])
    assert rc == 0
    report = json.loads(js.read_text())
    record_property("detail", f"mAP@50 {report['map50']!r}, precision {report['precision']!r}")
    assert report["map50"] == 1.0
    assert report["precision"] == 1.0


@pytest.mark.acceptance(11, "bench")
def test_bench(tmp_path, record_property, capsys):
    data = write_dataset(tmp_path / "data", synthetic_samples(100))
    capsys.readouterr()
    rc = main(["bench", "--data", str(data), "--n", "100", "--size", "320"])
    text = capsys.readouterr().out
    assert rc == 0
    rows = {}
    for line in text.splitlines():
        m = re.match(r"(\w+)\s+(\d+) samples\s+\S+s\s+(\S+) samples/s\s+\[(.*)\]", line)
        if m:
            stages = dict(kv.split("=") for kv in m.group(4).split())
            assert set(stages) == {"load", "augment", "encode", "write"}
            rows[m.group(1)] = float(m.group(3))
    assert set(rows) == set(PRESETS)
    order = list(rows)
    assert order == sorted(rows, key=lambda k: -rows[k])
    record_property(
        "detail",
        f"baseline {rows['baseline']:.1f}/s, heavy_instance {rows['heavy_instance']:.1f}/s",
    )
    assert rows["baseline"] > rows["heavy_instance"]
