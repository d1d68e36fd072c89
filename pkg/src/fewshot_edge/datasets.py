"""Few-shot edge dataset construction and manifest persistence.

Two builders are provided:

* ``build_fse1000``: consumes an FSS-1000-style source tree
  (``<source>/<class>/<k>.jpg`` + binary mask ``<k>.png``), extracts edge
  labels, and splits classes into train/test by a seeded shuffle.
* ``build_sbd5i``: consumes a 20-class semantic-label source
  (``<source>/images/<name>.{jpg,png}`` + ``<source>/labels/<name>.png`` with
  integer class ids 0..20) and projects each image onto every class it
  contains, using the canonical 4-way class split.

Built datasets live at ``<out_root>/<class>/<sample>.{img.png,seg.png,edge.png}``
with a JSON-lines manifest at ``<out_root>/manifest.jsonl`` (one header record,
then one record per sample).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from . import raster

MANIFEST_SCHEMA = 1
MANIFEST_NAME = "manifest.jsonl"

# canonical 20-class order; split i takes classes [5i, 5i+5) as test
SBD_CLASS_NAMES = (
    "aeroplane", "bike", "bird", "boat", "bottle",
    "bus", "car", "cat", "chair", "cow",
    "table", "dog", "horse", "mbike", "person",
    "plant", "sheep", "sofa", "train", "tv",
)


class DatasetError(Exception):
    pass


class SourceLayoutError(DatasetError):
    """Source tree is missing or structurally wrong (absent classes, no pairs)."""


class InvalidSourceError(DatasetError):
    """Source files exist but their content is unusable (e.g. non-binary mask)."""


class ManifestError(DatasetError):
    pass


class ManifestSchemaError(ManifestError):
    pass


class ManifestOverlapError(ManifestError):
    """A class appears in both the train and test splits."""


class ManifestFileMissingError(ManifestError):
    pass


@dataclass(frozen=True)
class SplitSpec:
    """How classes partition into train/test for one dataset build."""

    scheme: str                      # "fse1000" | "sbd5i"
    split_index: int | None = None   # sbd5i: i in {0,1,2,3}
    seed: int = 0                    # fse1000: seed of the class shuffle

    def __post_init__(self):
        if self.scheme not in ("fse1000", "sbd5i"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "sbd5i" and self.split_index not in (0, 1, 2, 3):
            raise ValueError(
                f"sbd5i split index must be in 0..3, got {self.split_index}"
            )


def sbd5i_test_classes(split_index: int) -> tuple[str, ...]:
    if split_index not in (0, 1, 2, 3):
        raise ValueError(f"sbd5i split index must be in 0..3, got {split_index}")
    return SBD_CLASS_NAMES[5 * split_index:5 * split_index + 5]


@dataclass(frozen=True)
class SampleRecord:
    class_name: str
    image: str   # paths relative to the dataset root
    seg: str
    edge: str
    height: int
    width: int


@dataclass
class DatasetManifest:
    name: str
    scheme: str
    params: dict
    class_roles: dict[str, str]          # class name -> "train" | "test"
    records: tuple[SampleRecord, ...]
    root: Path | None = field(default=None, compare=False)

    def classes(self, role: str) -> list[str]:
        if role not in ("train", "test"):
            raise ValueError(f"role must be 'train' or 'test', got {role!r}")
        return [c for c, r in self.class_roles.items() if r == role]

    def records_for(self, class_name: str) -> list[SampleRecord]:
        return [r for r in self.records if r.class_name == class_name]

    def resolve(self, rel: str) -> Path:
        if self.root is None:
            raise ManifestError("manifest has no root directory attached")
        return Path(self.root) / rel


def _check_binary_mask_file(path: Path) -> np.ndarray:
    arr = np.asarray(Image.open(path).convert("L"))
    values = np.unique(arr)
    if not np.isin(values, (0, 255)).all():
        if not np.isin(values, (0, 1)).all():
            raise InvalidSourceError(f"mask {path} is not binary (values {values[:8]})")
        return arr.astype(np.uint8)
    return (arr > 127).astype(np.uint8)


def _write_sample(out_root: Path, class_name: str, stem: str,
                  image: Image.Image, seg: np.ndarray, thickness: int) -> SampleRecord:
    edge = raster.extract_boundary(seg, thickness)
    class_dir = out_root / class_name
    class_dir.mkdir(parents=True, exist_ok=True)
    image.save(class_dir / f"{stem}.img.png")
    raster.save_mask_png(class_dir / f"{stem}.seg.png", seg)
    raster.save_mask_png(class_dir / f"{stem}.edge.png", edge)
    h, w = seg.shape
    rel = f"{class_name}/{stem}"
    return SampleRecord(class_name, f"{rel}.img.png", f"{rel}.seg.png",
                        f"{rel}.edge.png", h, w)


def build_fse1000(source_root, out_root, spec: SplitSpec,
                  thickness: int = 2, train_fraction: float = 0.8) -> DatasetManifest:
    """Build an FSE-1000-style dataset from per-class image+mask folders."""
    if spec.scheme != "fse1000":
        raise ValueError(f"spec scheme is {spec.scheme!r}, expected 'fse1000'")
    source_root = Path(source_root)
    out_root = Path(out_root)
    if not source_root.is_dir():
        raise SourceLayoutError(f"source root {source_root} does not exist")
    class_dirs = sorted(d for d in source_root.iterdir() if d.is_dir())
    if not class_dirs:
        raise SourceLayoutError(f"source root {source_root} contains no class folders")

    records: list[SampleRecord] = []
    empty: list[str] = []
    for class_dir in class_dirs:
        pairs = _image_mask_pairs(class_dir)
        if not pairs:
            empty.append(class_dir.name)
            continue
        for stem, img_path, mask_path in pairs:
            seg = _check_binary_mask_file(mask_path)
            image = Image.open(img_path).convert("RGB")
            if image.size != (seg.shape[1], seg.shape[0]):
                raise InvalidSourceError(
                    f"{img_path} and {mask_path} differ in size"
                )
            records.append(_write_sample(out_root, class_dir.name, stem, image, seg, thickness))
    if empty:
        raise SourceLayoutError(
            "classes without image/mask pairs: " + ", ".join(empty)
        )

    names = [d.name for d in class_dirs]
    rng = np.random.default_rng(spec.seed)
    order = [names[i] for i in rng.permutation(len(names))]
    n_train = int(len(names) * train_fraction)
    roles = {c: ("train" if c in set(order[:n_train]) else "test") for c in names}

    manifest = DatasetManifest(
        name=out_root.name or "fse1000",
        scheme="fse1000",
        params={"thickness": thickness, "seed": spec.seed,
                "train_fraction": train_fraction, "resize": "none"},
        class_roles=roles,
        records=tuple(records),
        root=out_root,
    )
    save_manifest(manifest, out_root / MANIFEST_NAME)
    return manifest


def _image_mask_pairs(class_dir: Path):
    pairs = []
    for img_path in sorted(class_dir.iterdir()):
        if img_path.suffix.lower() not in (".jpg", ".jpeg"):
            continue
        mask_path = img_path.with_suffix(".png")
        if mask_path.exists():
            pairs.append((img_path.stem, img_path, mask_path))
    return pairs


def build_sbd5i(source_root, out_root, spec: SplitSpec,
                thickness: int = 3) -> DatasetManifest:
    """Build an SBD-5^i-style dataset: one record per (image, contained class)."""
    if spec.scheme != "sbd5i":
        raise ValueError(f"spec scheme is {spec.scheme!r}, expected 'sbd5i'")
    source_root = Path(source_root)
    out_root = Path(out_root)
    images_dir = source_root / "images"
    labels_dir = source_root / "labels"
    if not images_dir.is_dir() or not labels_dir.is_dir():
        raise SourceLayoutError(
            f"source root {source_root} must contain images/ and labels/"
        )

    test_set = set(sbd5i_test_classes(spec.split_index))
    records: list[SampleRecord] = []
    for img_path in sorted(images_dir.iterdir()):
        if img_path.suffix.lower() not in (".jpg", ".jpeg", ".png"):
            continue
        label_path = labels_dir / f"{img_path.stem}.png"
        if not label_path.exists():
            raise SourceLayoutError(f"no label file for image {img_path.name}")
        label = np.asarray(Image.open(label_path))
        if label.ndim != 2:
            raise InvalidSourceError(f"label {label_path} is not single-channel")
        if label.max(initial=0) > len(SBD_CLASS_NAMES):
            raise InvalidSourceError(
                f"label {label_path} has ids above {len(SBD_CLASS_NAMES)}"
            )
        image = Image.open(img_path).convert("RGB")
        present = [int(c) for c in np.unique(label) if c > 0]
        for c in present:
            class_name = SBD_CLASS_NAMES[c - 1]
            seg = (label == c).astype(np.uint8)
            records.append(
                _write_sample(out_root, class_name, img_path.stem, image, seg, thickness)
            )
    if not records:
        raise SourceLayoutError(f"no image/label pairs found under {source_root}")

    present_classes = {r.class_name for r in records}
    roles = {c: ("test" if c in test_set else "train")
             for c in SBD_CLASS_NAMES if c in present_classes}

    manifest = DatasetManifest(
        name=out_root.name or "sbd5i",
        scheme="sbd5i",
        params={"thickness": thickness, "split_index": spec.split_index,
                "resize": "train:320x320,eval:pad512"},
        class_roles=roles,
        records=tuple(records),
        root=out_root,
    )
    save_manifest(manifest, out_root / MANIFEST_NAME)
    return manifest


def save_manifest(manifest: DatasetManifest, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header = {
        "type": "header",
        "schema": MANIFEST_SCHEMA,
        "name": manifest.name,
        "scheme": manifest.scheme,
        "params": manifest.params,
        "classes": [{"name": c, "role": r} for c, r in manifest.class_roles.items()],
    }
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for r in manifest.records:
            rec = {"type": "record", "class": r.class_name, "image": r.image,
                   "seg": r.seg, "edge": r.edge, "height": r.height, "width": r.width}
            f.write(json.dumps(rec, sort_keys=True) + "\n")
    tmp.replace(path)


def load_manifest(path, check_files: bool = True) -> DatasetManifest:
    """Load and validate a manifest; raises distinct errors per violation."""
    path = Path(path)
    if not path.exists():
        raise ManifestFileMissingError(f"manifest {path} does not exist")
    root = path.parent
    with open(path) as f:
        lines = [ln for ln in f.read().splitlines() if ln.strip()]
    if not lines:
        raise ManifestSchemaError(f"manifest {path} is empty")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as e:
        raise ManifestSchemaError(f"manifest header is not valid JSON: {e}") from e
    if header.get("type") != "header" or header.get("schema") != MANIFEST_SCHEMA:
        raise ManifestSchemaError(
            f"manifest {path} has no schema-{MANIFEST_SCHEMA} header record"
        )

    roles: dict[str, str] = {}
    for entry in header.get("classes", []):
        name, role = entry.get("name"), entry.get("role")
        if role not in ("train", "test") or not name:
            raise ManifestSchemaError(f"bad class entry {entry!r}")
        if name in roles and roles[name] != role:
            raise ManifestOverlapError(
                f"class {name!r} appears in both train and test splits"
            )
        roles[name] = role

    records = []
    for ln in lines[1:]:
        try:
            rec = json.loads(ln)
        except json.JSONDecodeError as e:
            raise ManifestSchemaError(f"bad record line: {e}") from e
        if rec.get("type") != "record":
            raise ManifestSchemaError(f"unexpected record type {rec.get('type')!r}")
        try:
            sample = SampleRecord(rec["class"], rec["image"], rec["seg"],
                                  rec["edge"], int(rec["height"]), int(rec["width"]))
        except KeyError as e:
            raise ManifestSchemaError(f"record missing field {e}") from e
        if sample.class_name not in roles:
            raise ManifestSchemaError(
                f"record class {sample.class_name!r} not declared in header"
            )
        records.append(sample)

    manifest = DatasetManifest(
        name=header.get("name", root.name),
        scheme=header.get("scheme", ""),
        params=header.get("params", {}),
        class_roles=roles,
        records=tuple(records),
        root=root,
    )
    if check_files:
        _check_record_files(manifest)
    return manifest


def _check_record_files(manifest: DatasetManifest) -> None:
    for r in manifest.records:
        dims = []
        for rel in (r.image, r.seg, r.edge):
            p = manifest.resolve(rel)
            if not p.exists():
                raise ManifestFileMissingError(f"manifest references missing file {p}")
            with Image.open(p) as im:
                dims.append(im.size)
        if len(set(dims)) != 1 or dims[0] != (r.width, r.height):
            raise ManifestSchemaError(
                f"record {r.image} files disagree on dimensions: {dims}"
            )
