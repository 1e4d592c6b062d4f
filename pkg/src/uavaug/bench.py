"""Preprocessing throughput benchmark."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

from .config import AugmentConfig
from .dataset_io import write_label_file
from .imaging import encode_png
from .pipeline import augment_sample

STAGES = ("load", "augment", "encode", "write")


@dataclass
class BenchResult:
    preset: str
    samples: int
    wall_time: float
    stages: Dict[str, float] = field(default_factory=dict)

    @property
    def throughput(self) -> float:
        return self.samples / self.wall_time if self.wall_time > 0 else float("inf")

    def to_text(self) -> str:
        stages = "  ".join(f"{k}={self.stages.get(k, 0.0):.3f}s" for k in STAGES)
        return (
            f"{self.preset:<15} {self.samples:>6} samples  {self.wall_time:8.3f}s  "
            f"{self.throughput:9.2f} samples/s  [{stages}]"
        )


class _TimedLoader:
    """Wraps a dataset and accumulates time spent in ``load``."""

    def __init__(self, dataset):
        self.dataset = dataset
        self.elapsed = 0.0

    def __len__(self) -> int:
        return len(self.dataset)

    def load(self, i: int):
        t0 = time.perf_counter()
        try:
            return self.dataset.load(i)
        finally:
            self.elapsed += time.perf_counter() - t0


def run_bench(
    dataset,
    cfg: AugmentConfig,
    n_samples: int,
    master_seed: int = 0,
    write_dir: Optional[Union[str, Path]] = None,
) -> BenchResult:
    """Augment ``n_samples`` samples in memory and time each stage.

    Samples are visited in index order (wrapping around the dataset) so every
    preset sees the same load order. Files are only written with ``write_dir``.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    loader = _TimedLoader(dataset)
    aug_total = encode = write = 0.0
    out_dir = Path(write_dir) / cfg.strategy if write_dir is not None else None
    start = time.perf_counter()
    for k in range(n_samples):
        i = k % len(dataset)
        t0 = time.perf_counter()
        s = augment_sample(loader, i, 0, cfg, master_seed)
        t1 = time.perf_counter()
        png = encode_png(s.image)
        label = write_label_file(s.annotations, s.width, s.height)
        t2 = time.perf_counter()
        if out_dir is not None:
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / f"{k:06d}.png").write_bytes(png)
            (out_dir / f"{k:06d}.txt").write_text(label, encoding="utf-8")
        t3 = time.perf_counter()
        aug_total += t1 - t0
        encode += t2 - t1
        write += t3 - t2
    wall = time.perf_counter() - start
    stages = {
        "load": loader.elapsed,
        "augment": aug_total - loader.elapsed,
        "encode": encode,
        "write": write,
    }
    return BenchResult(cfg.strategy, n_samples, wall, stages)


def bench_presets(
    dataset, configs: Sequence[AugmentConfig], n_samples: int, master_seed: int = 0, write_dir=None
) -> List[BenchResult]:
    """Run every config and return results ordered by throughput, fastest first."""
    results = [run_bench(dataset, cfg, n_samples, master_seed, write_dir) for cfg in configs]
    return sorted(results, key=lambda r: -r.throughput)
