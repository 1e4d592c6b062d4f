"""
YOLO-format dataset I/O.

Label files hold one object per line, ``<class> <cx> <cy> <w> <h>``, with the
box in normalized center-size form. A dataset is an images directory plus a
parallel labels directory whose files share the image stems.
"""

from __future__ import annotations

import logging
import math
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from .boxes import Annotation, Box, NormalizedBox, Sample, clip_box, to_normalized, to_pixel
from .imaging import IMAGE_SUFFIXES, image_size, load_image

log = logging.getLogger(__name__)

PathLike = Union[str, Path]


class LabelParseError(ValueError):
    """A malformed label line. ``line`` is 1-based."""

    def __init__(self, message: str, line: int, path: Optional[PathLike] = None):
        self.reason = message
        self.line = line
        self.path = path
        where = f"{path}: " if path else ""
        super().__init__(f"{where}{message}, line {line}")


def _parse_line(tokens: List[str], lineno: int, width: float, height: float) -> Annotation:
    if len(tokens) != 5:
        raise LabelParseError(f"expected 5 fields, got {len(tokens)}", lineno)
    try:
        values = [float(t) for t in tokens]
    except ValueError:
        raise LabelParseError("non-numeric token", lineno) from None
    if not all(math.isfinite(v) for v in values):
        raise LabelParseError("non-finite value", lineno)
    cls, cx, cy, w, h = values
    if cls < 0 or cls != int(cls):
        raise LabelParseError(f"invalid class id {tokens[0]!r}", lineno)
    for name, v in (("cx", cx), ("cy", cy), ("w", w), ("h", h)):
        if not 0.0 <= v <= 1.0:
            raise LabelParseError(f"{name} outside [0, 1]", lineno)
    if w == 0:
        raise LabelParseError("zero-width box", lineno)
    if h == 0:
        raise LabelParseError("zero-height box", lineno)
    return Annotation(int(cls), to_pixel(NormalizedBox(cx, cy, w, h), width, height))


def parse_label_file(
    text: str, width: float, height: float, strict: bool = True, path: Optional[PathLike] = None
) -> List[Annotation]:
    """Parse YOLO label text into pixel-space annotations.

    With ``strict`` a malformed line raises :class:`LabelParseError`; otherwise
    the line is logged and skipped.
    """
    out = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        try:
            out.append(_parse_line(tokens, lineno, width, height))
        except LabelParseError as exc:
            if strict:
                raise LabelParseError(exc.reason, lineno, path) from None
            log.warning("skipping malformed label: %s", exc)
    return out


def format_label_line(class_id: int, n: NormalizedBox, conf: Optional[float] = None) -> str:
    head = f"{class_id}" if conf is None else f"{class_id} {conf:.6f}"
    return f"{head} {n.cx:.6f} {n.cy:.6f} {n.w:.6f} {n.h:.6f}\n"


def clipped_normalized(box: Box, width: float, height: float) -> Optional[NormalizedBox]:
    clipped = clip_box(box, width, height)
    if clipped is None:
        return None
    n = to_normalized(clipped, width, height)
    # keep serialized values inside [0, 1] despite float noise
    n = NormalizedBox(*(min(max(v, 0.0), 1.0) for v in (n.cx, n.cy, n.w, n.h)))
    if round(n.w, 6) <= 0 or round(n.h, 6) <= 0:
        return None
    return n


def write_label_file(annotations: Iterable[Annotation], width: float, height: float) -> str:
    lines = []
    for ann in annotations:
        n = clipped_normalized(ann.box, width, height)
        if n is None:
            log.debug("not serializing degenerate box %s", ann.box)
            continue
        lines.append(format_label_line(ann.class_id, n))
    return "".join(lines)


@dataclass(frozen=True)
class DatasetEntry:
    image_path: Path
    label_path: Optional[Path]
    source_id: str


@dataclass
class DatasetIndex:
    entries: List[DatasetEntry]
    class_names: List[str] = field(default_factory=list)
    strict: bool = True

    def __len__(self) -> int:
        return len(self.entries)

    def load(self, i: int) -> Sample:
        entry = self.entries[i]
        image = load_image(entry.image_path)
        h, w = image.shape[:2]
        anns = self._read_labels(entry, w, h)
        return Sample(image=image, annotations=anns, source_id=entry.source_id)

    def _read_labels(self, entry: DatasetEntry, width: float, height: float) -> List[Annotation]:
        if entry.label_path is None or not entry.label_path.exists():
            return []
        text = entry.label_path.read_text(encoding="utf-8")
        anns = parse_label_file(text, width, height, strict=self.strict, path=entry.label_path)
        if self.class_names:
            n = len(self.class_names)
            bad = [a.class_id for a in anns if a.class_id >= n]
            if bad and self.strict:
                raise LabelParseError(f"class id {bad[0]} >= class count {n}", 0, entry.label_path)
            anns = [a for a in anns if a.class_id < n]
        return anns


class InMemoryDataset:
    """A list of samples behind the same ``len``/``load`` surface as :class:`DatasetIndex`."""

    def __init__(self, samples: Sequence[Sample]):
        self.samples = list(samples)

    def __len__(self) -> int:
        return len(self.samples)

    def load(self, i: int) -> Sample:
        return self.samples[i]


def load_dataset(
    root: PathLike,
    images: str = "images",
    labels: str = "labels",
    class_names: Optional[Sequence[str]] = None,
    strict: bool = True,
) -> DatasetIndex:
    """Index ``root/images`` with labels from ``root/labels``.

    Every present label file is parsed once here so malformed labels surface
    at load time rather than mid-run.
    """
    root = Path(root)
    image_dir = root / images
    label_dir = root / labels
    if not image_dir.is_dir():
        raise FileNotFoundError(f"image directory not found: {image_dir}")
    if class_names is None:
        names_file = root / "classes.txt"
        class_names = names_file.read_text(encoding="utf-8").split() if names_file.exists() else []

    entries = []
    seen = set()
    for path in sorted(image_dir.rglob("*")):
        if path.suffix.lower() not in IMAGE_SUFFIXES or not path.is_file():
            continue
        rel = path.relative_to(image_dir).with_suffix("")
        source_id = rel.as_posix()
        if source_id in seen:
            raise ValueError(f"duplicate image stem {source_id!r} in {image_dir}")
        seen.add(source_id)
        label_path = label_dir / (source_id + ".txt")
        entries.append(DatasetEntry(path, label_path if label_path.exists() else None, source_id))

    index = DatasetIndex(entries, list(class_names), strict=strict)
    for entry in entries:
        # normalized space is enough for validation; no image decode needed
        index._read_labels(entry, 1.0, 1.0)
    return index


# Frame manifests -----------------------------------------------------------


@dataclass(frozen=True)
class Frame:
    path: str
    timestamp: float


def read_manifest(text: str) -> List[Frame]:
    frames = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        path, sep, ts = line.rpartition(",")
        if not sep:
            raise ValueError(f"manifest line {lineno}: expected 'path,timestamp'")
        try:
            t = float(ts)
        except ValueError:
            raise ValueError(f"manifest line {lineno}: bad timestamp {ts!r}") from None
        if not math.isfinite(t) or t < 0:
            raise ValueError(f"manifest line {lineno}: timestamp must be finite and >= 0")
        if frames and t < frames[-1].timestamp:
            raise ValueError(f"manifest line {lineno}: timestamps must be non-decreasing")
        frames.append(Frame(path.strip(), t))
    return frames


def write_manifest(frames: Iterable[Frame]) -> str:
    return "".join(f"{f.path},{f.timestamp!r}\n" for f in frames)


def subsample_manifest(frames: Sequence[Frame], interval: float) -> List[Frame]:
    """Greedy time subsampling: keep a frame once ``interval`` seconds have passed.

    A 1e-9 s slack absorbs float noise in timestamps like ``5 * 0.1``.
    """
    if not interval > 0:
        raise ValueError("interval must be > 0")
    kept: List[Frame] = []
    for f in frames:
        if not kept or f.timestamp >= kept[-1].timestamp + interval - 1e-9:
            kept.append(f)
    return kept


# Statistics ----------------------------------------------------------------


@dataclass
class DatasetStats:
    image_count: int
    annotation_count: int
    area_min: Optional[float] = None
    area_median: Optional[float] = None
    area_mean: Optional[float] = None
    area_max: Optional[float] = None
    below_1pct: Optional[float] = None
    errors: List[Tuple[str, str]] = field(default_factory=list)

    def to_text(self) -> str:
        lines = [f"images: {self.image_count}", f"annotations: {self.annotation_count}"]
        if self.annotation_count:
            lines += [
                f"box area fraction min: {self.area_min:.6g}",
                f"box area fraction median: {self.area_median:.6g}",
                f"box area fraction mean: {self.area_mean:.6g}",
                f"box area fraction max: {self.area_max:.6g}",
                f"fraction of boxes below 1% of frame: {self.below_1pct:.4f}",
            ]
        for path, err in self.errors:
            lines.append(f"error: {path}: {err}")
        return "\n".join(lines) + "\n"


def summarize_fractions(fractions: Sequence[float], image_count: int, errors=()) -> DatasetStats:
    if not fractions:
        return DatasetStats(image_count, 0, errors=list(errors))
    return DatasetStats(
        image_count=image_count,
        annotation_count=len(fractions),
        area_min=min(fractions),
        area_median=statistics.median(fractions),
        area_mean=statistics.fmean(fractions),
        area_max=max(fractions),
        below_1pct=sum(f < 0.01 for f in fractions) / len(fractions),
        errors=list(errors),
    )


def dataset_stats(d: DatasetIndex) -> DatasetStats:
    fractions = []
    errors = []
    images = 0
    for entry in d.entries:
        try:
            w, h = image_size(entry.image_path)
        except Exception as exc:  # noqa: BLE001 - any decode failure is recorded per file
            errors.append((str(entry.image_path), str(exc)))
            continue
        images += 1
        for ann in d._read_labels(entry, w, h):
            clipped = clip_box(ann.box, w, h)
            frac = 0.0 if clipped is None else clipped.area / (w * h)
            # strip float noise so the 1% boundary is exact for round inputs
            fractions.append(round(frac, 12))
    return summarize_fractions(fractions, images, errors)
