"""
Deterministic strategy pipeline.

All randomness for one output sample comes from a stream derived from
``(master_seed, epoch, sample_index)``. Given the dataset and config, an
augmented sample depends on that triple alone, so outputs can be produced in
any order or in parallel without changing a single byte.
"""

from __future__ import annotations

import logging
import math
import shutil
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .boxes import Sample
from .config import AugmentConfig
from .copy_paste import copy_paste
from .dataset_io import DatasetEntry, DatasetIndex, write_label_file
from .global_ops import flip_horizontal, mixup, mosaic, place_on_canvas, resize_sample, scale_jitter
from .imaging import encode_png
from .photometric import HsvGains, hsv_adjust

log = logging.getLogger(__name__)

RandomStream = np.random.Generator

# number of partner images used as Copy-Paste sources
CP_SOURCES = 3
INCOMPLETE_SENTINEL = ".incomplete"
MANIFEST_NAME = "manifest.csv"
MANIFEST_COLUMNS = "source_id,epoch,index,preset,mosaic_applied,mixup_applied,pastes"


def derive_stream(master_seed: int, epoch: int, sample_index: int) -> RandomStream:
    """Independent generator for one (seed, epoch, index) triple."""
    if epoch < 0 or sample_index < 0:
        raise ValueError("epoch and sample_index must be non-negative")
    seq = np.random.SeedSequence(
        entropy=int(master_seed) & 0xFFFF_FFFF_FFFF_FFFF, spawn_key=(int(epoch), int(sample_index))
    )
    return np.random.Generator(np.random.PCG64(seq))


def is_mosaic_active(epoch: int, total_epochs: int, close_mosaic: int) -> bool:
    if not 0 <= epoch < total_epochs:
        raise ValueError(f"epoch {epoch} outside [0, {total_epochs})")
    return epoch < total_epochs - close_mosaic


def _resize(s: Sample, size: int) -> Sample:
    return resize_sample(s, size, size)


def _distort(s: Sample, cfg: AugmentConfig, gains: HsvGains, rng: RandomStream) -> Sample:
    """Flip, scale jitter, translation and HSV jitter at fixed output size."""
    size = cfg.size
    if rng.random() < cfg.flip_prob:
        s = flip_horizontal(s)
    s = scale_jitter(s, (cfg.jitter_lo, cfg.jitter_hi), rng)
    tx, ty = rng.uniform(-cfg.translate_max_frac, cfg.translate_max_frac, 2) * size
    # recentre the jittered image in the S x S frame, then shift
    dx = int(math.floor((size - s.width) / 2 + tx + 0.5))
    dy = int(math.floor((size - s.height) / 2 + ty + 0.5))
    s = place_on_canvas(
        s, size, size, dx, dy, cfg.mosaic_min_box_side, cfg.mosaic_min_area_ratio
    )
    return s.replace(image=hsv_adjust(s.image, gains, rng))


def _paste(s: Sample, dataset, cfg: AugmentConfig, rng: RandomStream) -> Sample:
    picks = rng.integers(len(dataset), size=CP_SOURCES)
    sources = [_resize(dataset.load(int(j)), cfg.size) for j in picks]
    if not any(src.annotations for src in sources):
        return s
    return copy_paste(s, sources, cfg.copy_paste_params(), rng)


def augment_sample(dataset, index: int, epoch: int, cfg: AugmentConfig, master_seed: int) -> Sample:
    """Produce the augmented version of ``dataset[index]`` for ``epoch``.

    The returned sample is ``cfg.size`` square and carries provenance flags in
    ``meta``: ``mosaic`` and ``mixup`` (bool) and ``pastes`` (int).
    """
    n = len(dataset)
    if n == 0:
        raise ValueError("empty dataset")
    if not 0 <= index < n:
        raise IndexError(f"sample index {index} out of range for dataset of {n}")
    rng = derive_stream(master_seed, epoch, index)
    sample = dataset.load(index)
    size = cfg.size
    flags = {"mosaic": False, "mixup": False, "pastes": 0}
    preset = cfg.strategy

    if preset == "baseline":
        out = _resize(sample, size)

    elif preset == "context_aware":
        draw = rng.random()
        if draw < cfg.mosaic_prob and is_mosaic_active(epoch, cfg.epochs, cfg.close_mosaic):
            partners = rng.integers(n, size=3)
            group = [sample] + [dataset.load(int(j)) for j in partners]
            out = mosaic(group, cfg.mosaic_params(), rng)
            flags["mosaic"] = True
        else:
            out = _resize(sample, size)
        # only the value channel is jittered here
        gains = HsvGains(0.0, 0.0, cfg.hsv_v)
        out = out.replace(image=hsv_adjust(out.image, gains, rng))

    elif preset == "heavy_instance":
        out = _paste(_resize(sample, size), dataset, cfg, rng)
        flags["pastes"] = out.meta.get("pastes", 0)
        out = _distort(out, cfg, cfg.hsv_gains(), rng)

    elif preset == "pixel_level":
        out = _distort(_resize(sample, size), cfg, cfg.hsv_gains(), rng)

    elif preset == "instance_aware":
        out = _paste(_resize(sample, size), dataset, cfg, rng)
        flags["pastes"] = out.meta.get("pastes", 0)

    elif preset == "global_mixing":
        if rng.random() < cfg.mixup_prob:
            partner = dataset.load(int(rng.integers(n)))
            lam = float(rng.beta(cfg.mixup_alpha, cfg.mixup_alpha))
            out = mixup(_resize(sample, size), _resize(partner, size), lam)
            flags["mixup"] = True
        else:
            out = _resize(sample, size)

    else:
        raise ValueError(f"unknown strategy {preset!r}")

    return out.replace(source_id=sample.source_id, meta=flags)


class AugmentedDataset:
    """Online view: ``ds[i]`` is ``augment_sample(dataset, i, epoch, cfg, seed)``."""

    def __init__(self, dataset, cfg: AugmentConfig, master_seed: int, epoch: int = 0):
        self.dataset = dataset
        self.cfg = cfg
        self.master_seed = master_seed
        self.epoch = epoch

    def __len__(self) -> int:
        return len(self.dataset)

    def __getitem__(self, i: int) -> Sample:
        if not 0 <= i < len(self):
            raise IndexError(i)
        return augment_sample(self.dataset, i, self.epoch, self.cfg, self.master_seed)

    load = __getitem__

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch


def manifest_line(s: Sample, epoch: int, index: int, preset: str) -> str:
    m = s.meta
    return (
        f"{s.source_id},{epoch},{index},{preset},"
        f"{int(bool(m.get('mosaic')))},{int(bool(m.get('mixup')))},{int(m.get('pastes', 0))}\n"
    )


def parse_manifest_line(line: str) -> dict:
    # source ids may contain commas; the six trailing fields never do
    parts = line.rstrip("\n").rsplit(",", 6)
    if len(parts) != 7:
        raise ValueError(f"bad manifest line: {line!r}")
    sid, epoch, index, preset, mos, mix, pastes = parts
    return {
        "source_id": sid,
        "epoch": int(epoch),
        "index": int(index),
        "preset": preset,
        "mosaic_applied": mos == "1",
        "mixup_applied": mix == "1",
        "pastes": int(pastes),
    }


def read_output_manifest(path: Union[str, Path]) -> List[dict]:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line and not line.startswith("#"):
            rows.append(parse_manifest_line(line))
    return rows


def _write_bytes(path: Path, data: bytes) -> None:
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
    except OSError as exc:
        raise OSError(f"failed to write {path}: {exc}") from exc


def materialize(
    dataset,
    cfg: AugmentConfig,
    epochs_to_emit: Iterable[int],
    master_seed: int,
    out_root: Union[str, Path],
    jobs: int = 1,
) -> DatasetIndex:
    """Write augmented images and labels under ``out_root/epoch_<e>/``.

    Images go to ``images/<source_id>.png`` and labels to
    ``labels/<source_id>.txt``. ``manifest.csv`` gets one line per sample and
    ``config.txt`` the effective config. A ``.incomplete`` sentinel exists
    until every file has been written. Output bytes do not depend on ``jobs``.
    """
    n = len(dataset)
    if n == 0:
        raise ValueError("empty dataset")
    epochs = sorted(set(int(e) for e in epochs_to_emit))
    if epochs and not 0 <= epochs[0] <= epochs[-1] < cfg.epochs:
        raise ValueError(f"epochs to emit must lie in [0, {cfg.epochs})")
    out_root = Path(out_root)
    out_root.mkdir(parents=True, exist_ok=True)
    sentinel = out_root / INCOMPLETE_SENTINEL
    sentinel.write_text("materialization in progress\n", encoding="utf-8")

    tasks: List[Tuple[int, int]] = [(e, i) for e in epochs for i in range(n)]

    def work(task: Tuple[int, int]) -> Tuple[str, DatasetEntry]:
        e, i = task
        s = augment_sample(dataset, i, e, cfg, master_seed)
        epoch_dir = out_root / f"epoch_{e}"
        img_path = epoch_dir / "images" / f"{s.source_id}.png"
        lbl_path = epoch_dir / "labels" / f"{s.source_id}.txt"
        _write_bytes(img_path, encode_png(s.image))
        _write_bytes(lbl_path, write_label_file(s.annotations, s.width, s.height).encode("utf-8"))
        entry = DatasetEntry(img_path, lbl_path, f"epoch_{e}/{s.source_id}")
        return manifest_line(s, e, i, cfg.strategy), entry

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, tasks))
    else:
        results = [work(t) for t in tasks]

    header = f"# seed={master_seed} preset={cfg.strategy}\n# {MANIFEST_COLUMNS}\n"
    _write_bytes(out_root / MANIFEST_NAME, (header + "".join(r[0] for r in results)).encode("utf-8"))
    _write_bytes(out_root / "config.txt", cfg.to_text().encode("utf-8"))
    sentinel.unlink()
    return DatasetIndex([r[1] for r in results], strict=True)


def clear_output(out_root: Union[str, Path]) -> None:
    """Remove a previous materialization tree (only if it looks like one)."""
    out_root = Path(out_root)
    if (out_root / MANIFEST_NAME).exists() or (out_root / INCOMPLETE_SENTINEL).exists():
        shutil.rmtree(out_root)
