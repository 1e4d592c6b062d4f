"""Synthetic fixture builders shared by the test modules."""

from pathlib import Path

import numpy as np

from uavaug.boxes import Annotation, Box, Sample, iou
from uavaug.copy_paste import extract_instance
from uavaug.dataset_io import write_label_file
from uavaug.imaging import encode_png


def random_image(rng, w, h):
    return rng.integers(0, 256, size=(h, w, 3), dtype=np.uint8)


def random_boxes(rng, w, h, n, integer=True, min_side=1):
    out = []
    for _ in range(n):
        bw = int(rng.integers(min_side, max(min_side + 1, w // 2)))
        bh = int(rng.integers(min_side, max(min_side + 1, h // 2)))
        x0 = int(rng.integers(0, w - bw + 1))
        y0 = int(rng.integers(0, h - bh + 1))
        if integer:
            out.append((x0, y0, x0 + bw, y0 + bh))
        else:
            out.append((x0 + rng.random() * 0.5, y0 + rng.random() * 0.5, min(x0 + bw + rng.random() * 0.5, w), y0 + bh))
    return out


def make_sample(img, boxes=(), class_id=0, source_id="s"):
    anns = [Annotation(class_id, Box(*b)) for b in boxes]
    return Sample(image=img, annotations=anns, source_id=source_id)


def synthetic_samples(n, w=96, h=72, max_boxes=3, seed=0):
    """Smooth-gradient images with a few bright 'drone' blobs labelled as class 0."""
    rng = np.random.default_rng(seed)
    samples = []
    yy, xx = np.mgrid[0:h, 0:w]
    for i in range(n):
        base = np.stack(
            [
                (xx * 255 / w + 40 * i) % 256,
                (yy * 255 / h) % 256,
                np.full_like(xx, (17 * i) % 256),
            ],
            axis=-1,
        ).astype(np.uint8)
        boxes = []
        for _ in range(int(rng.integers(1, max_boxes + 1))):
            # 4 px up to a quarter of the frame, or 2-3 px on tiny frames
            bw = int(rng.integers(4, w // 4)) if w >= 24 else int(rng.integers(2, 4))
            bh = int(rng.integers(4, h // 4)) if h >= 24 else int(rng.integers(2, 4))
            x0, y0 = int(rng.integers(0, w - bw)), int(rng.integers(0, h - bh))
            base[y0 : y0 + bh, x0 : x0 + bw] = (250, 250, 250)
            boxes.append((x0, y0, x0 + bw, y0 + bh))
        samples.append(make_sample(base, boxes, source_id=f"img_{i:04d}"))
    return samples


def write_dataset(root: Path, samples):
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "labels").mkdir(parents=True, exist_ok=True)
    for s in samples:
        (root / "images" / f"{s.source_id}.png").write_bytes(encode_png(s.image))
        (root / "labels" / f"{s.source_id}.txt").write_text(
            write_label_file(s.annotations, s.width, s.height)
        )
    return root


def random_case(rng, max_dets=20, max_gts=10):
    """Single-image, single-class detection set on a small grid so IoU ties and near-misses occur."""

    def box():
        x, y = rng.integers(0, 8, 2)
        w, h = rng.integers(1, 5, 2)
        return (float(x), float(y), float(x + w), float(y + h))

    gts = [box() for _ in range(int(rng.integers(1, max_gts + 1)))]
    confs = np.round(rng.random(int(rng.integers(1, max_dets + 1))), 1)
    dets = [(float(c), box() if rng.random() < 0.5 else gts[int(rng.integers(len(gts)))]) for c in confs]
    return dets, gts


def check_paste_invariants(bg, sources, out, params, identity):
    """Placement and untouched-background checks for one copy_paste call.

    With ``identity`` the pasted regions must also equal a source crop byte for byte.
    """
    c = params.constraints
    n0 = len(bg.annotations)
    assert out.annotations[:n0] == bg.annotations
    added = out.annotations[n0:]
    assert len(added) == out.meta["pastes"] <= c.max_instances
    H, W = bg.height, bg.width
    regions = []
    for k, a in enumerate(added):
        b = a.box
        assert c.margin <= b.x_min and b.x_max <= W - c.margin
        assert c.margin <= b.y_min and b.y_max <= H - c.margin
        for prev in out.annotations[: n0 + k]:
            assert iou(b, prev.box) <= c.iou_max
        regions.append(tuple(int(v) for v in b.as_tuple()))
    touched = np.zeros((H, W), bool)
    for x0, y0, x1, y1 in regions:
        touched[y0:y1, x0:x1] = True
    assert np.array_equal(out.image[~touched], bg.image[~touched])
    if not identity:
        return
    crops = [extract_instance(s, i).pixels for s in sources for i in range(len(s.annotations))]
    for k, (x0, y0, x1, y1) in enumerate(regions):
        # later pastes may graze this one; compare only pixels they leave alone
        keep = np.ones((y1 - y0, x1 - x0), bool)
        for u0, v0, u1, v1 in regions[k + 1 :]:
            keep[max(v0 - y0, 0) : max(v1 - y0, 0), max(u0 - x0, 0) : max(u1 - x0, 0)] = False
        got = out.image[y0:y1, x0:x1]
        assert any(
            crop.shape == got.shape and np.array_equal(crop[keep], got[keep]) for crop in crops
        )
