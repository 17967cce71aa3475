"""Corpus filtering and category-balanced dynamic sampling.

Raw short-video corpora are heavily skewed toward a few popular categories.
The sampler rebalances them with a sigmoid ratio law

    f(x) = a / (1 + exp(1 - b/x))

where ``x`` is the category's record count: small categories are kept at
ratios near ``a`` while large ones shrink toward ``a / (1 + e)``.  ``f`` is
strictly decreasing, and ``f(b) = a/2`` exactly.

Selection inside a category is a seeded shuffle (SplitMix64 driving a
Fisher-Yates pass over the lexicographically sorted ids), so a plan is a
bit-for-bit reproducible function of (manifest, config).

Filtering is a pluggable ordered rule chain; the shipped rules cover the
common hygiene checks (duration floor, metadata presence, artifact
presence) and user predicates slot in through FilterRule.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .corpus import Manifest, VideoRecord
from .errors import ConfigError, InputError

DEFAULT_A = 0.5
DEFAULT_B = 1000.0

_MASK64 = (1 << 64) - 1


class PlanError(InputError):
    """Plan construction failed (empty manifest or category set)."""


@dataclass(frozen=True)
class SamplingConfig:
    a: float = DEFAULT_A
    b: float = DEFAULT_B
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.a <= 1:
            raise ConfigError(f"a must be in (0, 1], got {self.a}")
        if self.b <= 0:
            raise ConfigError(f"b must be positive, got {self.b}")
        if not 0 <= self.seed <= _MASK64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")


@dataclass(frozen=True)
class CategoryPlan:
    original_count: int
    ratio: float
    target_count: int
    selected_ids: tuple[str, ...]


@dataclass(frozen=True)
class SamplingPlan:
    per_category: dict[str, CategoryPlan]
    config: SamplingConfig

    @property
    def total_selected(self) -> int:
        return sum(c.target_count for c in self.per_category.values())


@dataclass(frozen=True)
class FilterRule:
    """Named predicate over records; a False verdict drops the record."""

    name: str
    predicate: Callable[[VideoRecord], bool]


def min_duration(seconds: float, name: str = "min_duration") -> FilterRule:
    return FilterRule(name=name, predicate=lambda rec: rec.duration_s >= seconds)


def require_metadata(key: str, name: str = "require_metadata") -> FilterRule:
    def pred(rec: VideoRecord) -> bool:
        if key == "category":
            return bool(rec.category)
        return bool(rec.metadata.get(key))

    return FilterRule(name=name, predicate=pred)


def require_artifacts(base_dir: str | Path | None = None, name: str = "require_artifacts") -> FilterRule:
    base = Path(base_dir) if base_dir is not None else None

    def pred(rec: VideoRecord) -> bool:
        for ref in (rec.embedding_ref, rec.asr_ref, rec.ocr_ref):
            if ref is None:
                return False
            path = Path(ref)
            if base is not None and not path.is_absolute():
                path = base / path
            if not path.exists():
                return False
        return True

    return FilterRule(name=name, predicate=pred)


def apply_filters(
    manifest: Manifest, rules: list[FilterRule]
) -> tuple[Manifest, list[tuple[str, str]]]:
    """Evaluate rules in order; the first failing rule records the drop."""
    names = [r.name for r in rules]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ConfigError(f"duplicate filter rule names: {dupes}")
    kept: list[VideoRecord] = []
    dropped: list[tuple[str, str]] = []
    for rec in manifest.records:
        for rule in rules:
            if not rule.predicate(rec):
                dropped.append((rec.video_id, rule.name))
                break
        else:
            kept.append(rec)
    return Manifest(records=tuple(kept)), dropped


def sampling_ratio(x: int, cfg: SamplingConfig) -> float:
    """f(x) = a / (1 + exp(1 - b/x)) for a category of x records."""
    if x <= 0:
        raise InputError(f"category count must be positive, got {x}")
    # 1 - b/x < 1 always, so exp never overflows; underflow to 0 is benign
    return cfg.a / (1.0 + math.exp(1.0 - cfg.b / x))


def _target_count(count: int, ratio: float) -> int:
    target = math.floor(ratio * count + 0.5)
    if target < 1 and count >= 1 and ratio > 0:
        target = 1
    return min(target, count)


def _splitmix64(state: int) -> tuple[int, int]:
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


class _Rng:
    """SplitMix64 stream with unbiased bounded draws."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_u64(self) -> int:
        self._state, z = _splitmix64(self._state)
        return z

    def next_below(self, bound: int) -> int:
        limit = (_MASK64 + 1) - ((_MASK64 + 1) % bound)
        while True:
            z = self.next_u64()
            if z < limit:
                return z % bound


def _category_seed(seed: int, category: str) -> int:
    digest = hashlib.sha256(category.encode("utf-8")).digest()
    return seed ^ int.from_bytes(digest[:8], "little")


def _shuffle(ids: list[str], rng: _Rng) -> None:
    for i in range(len(ids) - 1, 0, -1):
        j = rng.next_below(i + 1)
        ids[i], ids[j] = ids[j], ids[i]


def build_plan(manifest: Manifest, cfg: SamplingConfig) -> SamplingPlan:
    """Stratify the manifest by category and select each stratum's quota.

    Selection order inside a category is the seeded shuffle order, so the
    plan doubles as a priority list: truncating selected_ids preserves
    the deterministic choice.
    """
    if len(manifest) == 0:
        raise PlanError("cannot build a sampling plan over an empty manifest")
    by_category: dict[str, list[str]] = {}
    for rec in manifest.records:
        by_category.setdefault(rec.category, []).append(rec.video_id)
    if not by_category:
        raise PlanError("manifest has no categories")

    per_category: dict[str, CategoryPlan] = {}
    for category in sorted(by_category):
        ids = sorted(by_category[category])
        count = len(ids)
        ratio = sampling_ratio(count, cfg)
        target = _target_count(count, ratio)
        rng = _Rng(_category_seed(cfg.seed, category))
        _shuffle(ids, rng)
        per_category[category] = CategoryPlan(
            original_count=count,
            ratio=ratio,
            target_count=target,
            selected_ids=tuple(ids[:target]),
        )
    return SamplingPlan(per_category=per_category, config=cfg)


def select_records(manifest: Manifest, plan: SamplingPlan) -> Manifest:
    """Materialize the plan: the sub-manifest of all selected records."""
    chosen: set[str] = set()
    for cat_plan in plan.per_category.values():
        chosen.update(cat_plan.selected_ids)
    records = tuple(rec for rec in manifest.records if rec.video_id in chosen)
    return Manifest(records=records)


def plan_to_json_dict(plan: SamplingPlan) -> dict:
    return {
        "config": {"a": plan.config.a, "b": plan.config.b, "seed": plan.config.seed},
        "categories": {
            category: {
                "original_count": cat.original_count,
                "ratio": round(cat.ratio, 10),
                "target_count": cat.target_count,
                "selected_ids": list(cat.selected_ids),
            }
            for category, cat in sorted(plan.per_category.items())
        },
    }


def write_plan(plan: SamplingPlan, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(plan_to_json_dict(plan), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_plan(path: str | Path) -> SamplingPlan:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    cfg = SamplingConfig(**data["config"])
    per_category = {
        category: CategoryPlan(
            original_count=block["original_count"],
            ratio=block["ratio"],
            target_count=block["target_count"],
            selected_ids=tuple(block["selected_ids"]),
        )
        for category, block in data["categories"].items()
    }
    return SamplingPlan(per_category=per_category, config=cfg)
