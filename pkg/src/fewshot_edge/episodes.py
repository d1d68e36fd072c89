"""Episodic sampling, preprocessing, and model-ready label derivation.

An episode is one few-shot task: ``n_way`` classes, each with ``n_shot``
support and ``n_query`` query items. Items carry the image, the edge label,
the dense segmentation mask, and the valid-region rectangle that padding
introduces (the evaluator counts positives outside it as false positives).
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, replace

import numpy as np
from PIL import Image

from . import raster
from .datasets import DatasetManifest

ENCODER_STRIDE = 32


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class EpisodeItem:
    class_name: str
    sample_id: str
    image: np.ndarray        # float32 [3, H, W] in [0, 1]
    edge: np.ndarray         # uint8 [H, W]
    seg: np.ndarray          # uint8 [H, W]
    valid: tuple[int, int, int, int]   # (top, left, height, width)


@dataclass(frozen=True)
class Episode:
    classes: tuple[str, ...]
    support: tuple[tuple[EpisodeItem, ...], ...]   # per class
    query: tuple[tuple[EpisodeItem, ...], ...]

    @property
    def n_way(self) -> int:
        return len(self.classes)

    @property
    def n_shot(self) -> int:
        return len(self.support[0])

    @property
    def n_query(self) -> int:
        return len(self.query[0])

    def all_items(self):
        for group in (self.support, self.query):
            for items in group:
                yield from items


@dataclass(frozen=True)
class EpisodeBatch:
    """Episode plus segmentation labels pooled down to the top feature grid."""

    episode: Episode
    m_support: tuple[np.ndarray, ...]   # per class [N_s, h, w] float64
    m_query: tuple[np.ndarray, ...]     # per class [N_q, h, w] float64


@functools.lru_cache(maxsize=64)
def _load_record(image_path: str, seg_path: str, edge_path: str):
    img = np.asarray(Image.open(image_path).convert("RGB"), dtype=np.float32) / 255.0
    img = np.ascontiguousarray(img.transpose(2, 0, 1))
    seg = raster.load_mask_png(seg_path, binary=True)
    edge = raster.load_mask_png(edge_path, binary=True)
    for a in (img, seg, edge):
        a.setflags(write=False)
    return img, seg, edge


def _item_from_record(manifest: DatasetManifest, rec) -> EpisodeItem:
    img, seg, edge = _load_record(str(manifest.resolve(rec.image)),
                                  str(manifest.resolve(rec.seg)),
                                  str(manifest.resolve(rec.edge)))
    h, w = seg.shape
    return EpisodeItem(rec.class_name, rec.image, img, edge, seg, (0, 0, h, w))


def sample_episode(manifest: DatasetManifest, role: str, n_way: int, n_shot: int,
                   n_query: int, rng: np.random.Generator) -> Episode:
    """Draw classes and per-class disjoint support/query sets without replacement."""
    if role not in ("train", "test"):
        raise SamplingError(f"role must be 'train' or 'test', got {role!r}")
    class_names = sorted(manifest.classes(role))
    if n_way > len(class_names):
        raise SamplingError(
            f"cannot sample {n_way} classes from {len(class_names)} {role} classes"
        )
    chosen = [class_names[i] for i in rng.choice(len(class_names), size=n_way, replace=False)]

    support, query = [], []
    for name in chosen:
        recs = manifest.records_for(name)
        need = n_shot + n_query
        if len(recs) < need:
            raise SamplingError(
                f"class {name!r} has {len(recs)} samples, needs {need}"
            )
        idx = rng.choice(len(recs), size=need, replace=False)
        items = [_item_from_record(manifest, recs[i]) for i in idx]
        support.append(tuple(items[:n_shot]))
        query.append(tuple(items[n_shot:]))
    return Episode(tuple(chosen), tuple(support), tuple(query))


def _resize_item(item: EpisodeItem, size: int) -> EpisodeItem:
    c, h, w = item.image.shape
    if (h, w) == (size, size):
        return item
    chans = [
        np.asarray(Image.fromarray(item.image[i], mode="F").resize((size, size), Image.BILINEAR))
        for i in range(c)
    ]
    image = np.clip(np.stack(chans), 0.0, 1.0).astype(np.float32)
    # nearest lookup keeps labels binary
    ys = (np.arange(size) * h / size).astype(int).clip(max=h - 1)
    xs = (np.arange(size) * w / size).astype(int).clip(max=w - 1)
    seg = item.seg[np.ix_(ys, xs)]
    edge = item.edge[np.ix_(ys, xs)]
    return replace(item, image=image, seg=seg, edge=edge, valid=(0, 0, size, size))


def _rotate_item(item: EpisodeItem, turns: int) -> EpisodeItem:
    if turns == 0:
        return item
    h, w = item.seg.shape
    new_valid = (0, 0, w, h) if turns % 2 else (0, 0, h, w)
    return replace(
        item,
        image=raster.rotate90(item.image, turns),
        edge=raster.rotate90(item.edge, turns),
        seg=raster.rotate90(item.seg, turns),
        valid=new_valid,
    )


def _pad_item(item: EpisodeItem, target_h: int, target_w: int) -> EpisodeItem:
    h, w = item.seg.shape
    if (h, w) == (target_h, target_w):
        return item
    image, valid = raster.pad_to(item.image, target_h, target_w)
    edge, _ = raster.pad_to(item.edge, target_h, target_w)
    seg, _ = raster.pad_to(item.seg, target_h, target_w)
    return replace(item, image=image.astype(np.float32), edge=edge, seg=seg, valid=valid)


def _round_up(n: int, k: int) -> int:
    return ((n + k - 1) // k) * k


def preprocess(episode: Episode, mode: str, scheme: str,
               rng: np.random.Generator | None = None,
               stride: int = ENCODER_STRIDE) -> Episode:
    """Apply the scheme's geometry: rotation augmentation in train mode,
    resizing/zero-padding per scheme, and a final pad to stride-divisible
    common dims shared by every item."""
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    if scheme not in ("fse1000", "sbd5i"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if mode == "train" and rng is None:
        raise ValueError("train-mode preprocessing needs an rng for augmentation")

    def transform(item: EpisodeItem) -> EpisodeItem:
        if scheme == "sbd5i" and mode == "train":
            item = _resize_item(item, 320)
        if mode == "train":
            item = _rotate_item(item, int(rng.integers(0, 4)))
        if scheme == "sbd5i" and mode == "eval":
            item = _pad_item(item, 512, 512)
        return item

    support = tuple(tuple(transform(i) for i in items) for items in episode.support)
    query = tuple(tuple(transform(i) for i in items) for items in episode.query)

    all_items = [i for items in support + query for i in items]
    target_h = _round_up(max(i.seg.shape[0] for i in all_items), stride)
    target_w = _round_up(max(i.seg.shape[1] for i in all_items), stride)
    support = tuple(tuple(_pad_item(i, target_h, target_w) for i in items) for items in support)
    query = tuple(tuple(_pad_item(i, target_h, target_w) for i in items) for items in query)
    return Episode(episode.classes, support, query)


def derive_soft_labels(episode: Episode, encoder_stride: int = ENCODER_STRIDE) -> EpisodeBatch:
    """Pool dense segmentation masks down to the top-level feature resolution."""
    if encoder_stride < 1:
        raise ValueError(f"encoder stride must be >= 1, got {encoder_stride}")

    def soft(items):
        return np.stack([
            raster.downsample_avg(i.seg.astype(np.float64), encoder_stride) for i in items
        ])

    return EpisodeBatch(
        episode=episode,
        m_support=tuple(soft(items) for items in episode.support),
        m_query=tuple(soft(items) for items in episode.query),
    )


def stack_images(items) -> np.ndarray:
    return np.stack([i.image for i in items])


def stack_edges(items) -> np.ndarray:
    return np.stack([i.edge for i in items])
