"""Category taxonomy and the panoptic edge label encoding.

A panoptic edge label packs a category and an instance ID into one integer,
``category * stride + instance_id``. Zero is reserved for non-edge pixels.
Stuff categories always carry instance ID 0; thing instances are numbered
from 1 within their category.

Label maps are plain 2-D integer numpy arrays.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

from .errors import (
    CategoryOutOfRange,
    InstanceIdOverflow,
    InvalidTaxonomy,
    MalformedLabel,
    StuffWithNonzeroInstance,
)

NON_EDGE = (0, 0)
DEFAULT_STRIDE = 1000

# Cityscapes train IDs shifted by one: road..sky are stuff, person..bicycle things.
CITYSCAPES_NAMES = (
    "road", "sidewalk", "building", "wall", "fence", "pole", "traffic light",
    "traffic sign", "vegetation", "terrain", "sky",
    "person", "rider", "car", "truck", "bus", "train", "motorcycle", "bicycle",
)


@dataclass(frozen=True)
class CategoryTaxonomy:
    num_categories: int
    thing_categories: frozenset
    stuff_categories: frozenset
    stride: int = DEFAULT_STRIDE
    names: tuple = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "thing_categories", frozenset(int(c) for c in self.thing_categories))
        object.__setattr__(self, "stuff_categories", frozenset(int(c) for c in self.stuff_categories))
        k = self.num_categories
        if not isinstance(k, (int, np.integer)) or k < 1:
            raise InvalidTaxonomy(f"number of categories must be a positive integer, got {k!r}")
        if self.stride < 1:
            raise InvalidTaxonomy(f"stride must be positive, got {self.stride}")
        if self.thing_categories & self.stuff_categories:
            raise InvalidTaxonomy(
                f"categories {sorted(self.thing_categories & self.stuff_categories)} are both thing and stuff")
        if self.thing_categories | self.stuff_categories != set(range(1, k + 1)):
            raise InvalidTaxonomy(f"thing and stuff categories must partition 1..{k}")
        if self.names and len(self.names) != k:
            raise InvalidTaxonomy(f"expected {k} names, got {len(self.names)}")

    @classmethod
    def cityscapes(cls, stride: int = DEFAULT_STRIDE) -> "CategoryTaxonomy":
        return cls(19, frozenset(range(12, 20)), frozenset(range(1, 12)), stride, CITYSCAPES_NAMES)

    @classmethod
    def from_dict(cls, d: dict) -> "CategoryTaxonomy":
        try:
            return cls(
                int(d["num_categories"]),
                frozenset(d["thing_categories"]),
                frozenset(d["stuff_categories"]),
                int(d.get("stride", DEFAULT_STRIDE)),
                tuple(d.get("names", ())),
            )
        except (KeyError, TypeError) as exc:
            raise InvalidTaxonomy(f"bad taxonomy document: {exc}") from exc

    @classmethod
    def load(cls, path) -> "CategoryTaxonomy":
        with open(path) as f:
            try:
                return cls.from_dict(json.load(f))
            except json.JSONDecodeError as exc:
                raise InvalidTaxonomy(f"{path}: {exc}") from exc

    def to_dict(self) -> dict:
        d = {
            "num_categories": int(self.num_categories),
            "thing_categories": sorted(self.thing_categories),
            "stuff_categories": sorted(self.stuff_categories),
            "stride": int(self.stride),
        }
        if self.names:
            d["names"] = list(self.names)
        return d

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    def is_thing(self, category: int) -> bool:
        return int(category) in self.thing_categories

    def thing_lookup(self) -> np.ndarray:
        """Boolean table indexed by category (index 0 is non-edge)."""
        table = np.zeros(self.num_categories + 1, dtype=bool)
        table[sorted(self.thing_categories)] = True
        return table


def encode_label(category: int, instance_id: int, taxonomy: CategoryTaxonomy) -> int:
    if not 1 <= category <= taxonomy.num_categories:
        raise CategoryOutOfRange(f"category {category} outside 1..{taxonomy.num_categories}")
    if instance_id < 0 or instance_id >= taxonomy.stride:
        raise InstanceIdOverflow(f"instance id {instance_id} outside 0..{taxonomy.stride - 1}")
    if instance_id != 0 and category in taxonomy.stuff_categories:
        raise StuffWithNonzeroInstance(f"stuff category {category} given instance id {instance_id}")
    return int(category) * taxonomy.stride + int(instance_id)


def decode_label(encoded: int, taxonomy: CategoryTaxonomy) -> tuple[int, int]:
    """Inverse of :func:`encode_label`. Zero decodes to ``NON_EDGE``."""
    encoded = int(encoded)
    if encoded == 0:
        return NON_EDGE
    if encoded < 0:
        raise MalformedLabel(f"negative label {encoded}")
    category, instance_id = divmod(encoded, taxonomy.stride)
    if not 1 <= category <= taxonomy.num_categories:
        raise MalformedLabel(f"label {encoded} has category {category} outside 1..{taxonomy.num_categories}")
    return category, instance_id


def semantic_of(labels: np.ndarray, taxonomy: CategoryTaxonomy) -> np.ndarray:
    """Drop instance IDs, leaving the category map (0 = non-edge)."""
    return np.asarray(labels, dtype=np.int64) // taxonomy.stride


class Violation(NamedTuple):
    kind: str
    row: int | None
    col: int | None
    label: int | None
    message: str

    def __str__(self):
        where = "" if self.row is None else f" at ({self.row}, {self.col})"
        return f"{self.kind}{where}: {self.message}"


def validate_map(labels, taxonomy: CategoryTaxonomy) -> list[Violation]:
    """Check a panoptic edge map; returns one entry per violated rule, empty when valid.

    Each entry points at the first offending pixel in row-major order.
    """
    arr = np.asarray(labels)
    if arr.ndim != 2:
        return [Violation("shape", None, None, None, f"expected a 2-D map, got shape {arr.shape}")]
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.isfinite(arr)) or np.any(arr != np.round(arr)):
            return [Violation("dtype", None, None, None, f"non-integer labels of dtype {arr.dtype}")]
    arr = arr.astype(np.int64)
    d = taxonomy.stride
    cat, inst = np.divmod(arr, d)
    nonzero = arr != 0
    thing = taxonomy.thing_lookup()
    valid_cat = (cat >= 1) & (cat <= taxonomy.num_categories)
    is_thing = np.zeros(arr.shape, dtype=bool)
    is_thing[valid_cat] = thing[cat[valid_cat]]

    rules = [
        ("negative_label", arr < 0, "labels must be non-negative"),
        ("malformed_category", nonzero & (arr > 0) & ~valid_cat,
         f"category outside 1..{taxonomy.num_categories}"),
        ("stuff_nonzero_instance", nonzero & valid_cat & ~is_thing & (inst != 0),
         "stuff edges must carry instance id 0"),
        ("thing_zero_instance", nonzero & valid_cat & is_thing & (inst == 0),
         "thing edges must carry an instance id >= 1"),
    ]
    report = []
    for kind, mask, msg in rules:
        hits = np.flatnonzero(mask)
        if hits.size:
            r, c = divmod(int(hits[0]), arr.shape[1])
            report.append(Violation(kind, r, c, int(arr[r, c]), msg))
    return report


def canonicalize_instance_ids(labels, taxonomy: CategoryTaxonomy) -> np.ndarray:
    """Renumber thing instances to 1..n per category by first row-major occurrence."""
    arr = np.asarray(labels, dtype=np.int64)
    flat = arr.ravel()
    uniq, first, inverse = np.unique(flat, return_index=True, return_inverse=True)
    d = taxonomy.stride
    cats = uniq // d
    movable = (uniq > 0) & (uniq % d > 0)
    new = uniq.copy()
    for c in np.unique(cats[movable]):
        if int(c) not in taxonomy.thing_categories:
            continue
        members = np.flatnonzero(movable & (cats == c))
        members = members[np.argsort(first[members], kind="stable")]
        new[members] = c * d + np.arange(1, members.size + 1)
    return new[inverse].reshape(arr.shape)
