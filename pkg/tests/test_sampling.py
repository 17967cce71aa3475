"""Sampling law, filters, and plan determinism."""

import json
import math
from decimal import Decimal, getcontext

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidbench.corpus import Manifest, VideoRecord
from vidbench.errors import ConfigError, InputError
from vidbench.sampling import (
    FilterRule,
    PlanError,
    SamplingConfig,
    apply_filters,
    build_plan,
    load_plan,
    min_duration,
    plan_to_json_dict,
    require_artifacts,
    require_metadata,
    sampling_ratio,
    select_records,
    write_plan,
)


def rec(vid: str, category: str = "c", duration: float = 10.0, **kwargs) -> VideoRecord:
    return VideoRecord(video_id=vid, duration_s=duration, category=category, **kwargs)


def manifest_of(*records: VideoRecord) -> Manifest:
    return Manifest(records=tuple(records))


# --- the ratio law -----------------------------------------------------------

def test_midpoint_is_exactly_half_a():
    for a, b in [(0.5, 1000.0), (1.0, 1.0), (0.25, 7.0)]:
        cfg = SamplingConfig(a=a, b=b)
        assert sampling_ratio(int(b), cfg) == a / 2.0


def test_ratio_at_two_thousand():
    cfg = SamplingConfig(a=0.5, b=1000.0)
    got = sampling_ratio(2000, cfg)
    # high-precision reference: 0.5 / (1 + e^0.5) via Decimal
    getcontext().prec = 40
    e_half = (Decimal(1) / Decimal(2)).exp()
    want = Decimal("0.5") / (1 + e_half)
    assert got == pytest.approx(float(want), abs=1e-12)
    assert got == pytest.approx(0.18877, abs=5e-6)


def test_ratio_bounds_and_limits():
    cfg = SamplingConfig(a=0.5, b=1000.0)
    # tiny categories approach a (saturating at double precision),
    # huge ones approach a / (1 + e)
    assert sampling_ratio(1, cfg) == pytest.approx(0.5, abs=1e-9)
    floor = 0.5 / (1.0 + math.e)
    assert sampling_ratio(10**9, cfg) == pytest.approx(floor, abs=1e-6)
    for x in (1, 10, 100, 1000, 10**6):
        assert floor < sampling_ratio(x, cfg) <= 0.5


@settings(max_examples=200, deadline=None)
@given(
    a=st.floats(min_value=0.01, max_value=1.0),
    b=st.floats(min_value=0.5, max_value=10**6),
    offset=st.integers(min_value=0, max_value=10**6),
)
def test_ratio_strictly_decreasing(a, b, offset):
    # below ~b/37 the exponential underflows and f saturates at a, so
    # strictness is checked over the numerically live domain
    cfg = SamplingConfig(a=a, b=b)
    x = max(1, math.ceil(b / 30.0)) + offset
    assert sampling_ratio(x, cfg) > sampling_ratio(x + 1, cfg)


def test_ratio_rejects_nonpositive_counts():
    cfg = SamplingConfig()
    with pytest.raises(InputError):
        sampling_ratio(0, cfg)
    with pytest.raises(InputError):
        sampling_ratio(-5, cfg)


def test_config_validation():
    with pytest.raises(ConfigError):
        SamplingConfig(a=0.0)
    with pytest.raises(ConfigError):
        SamplingConfig(a=1.5)
    with pytest.raises(ConfigError):
        SamplingConfig(b=0.0)
    with pytest.raises(ConfigError):
        SamplingConfig(seed=-1)


# --- target counts -----------------------------------------------------------

def test_minority_majority_example():
    records = [rec(f"min-{i:03d}", "minority") for i in range(10)]
    records += [rec(f"maj-{i:05d}", "majority") for i in range(10000)]
    plan = build_plan(manifest_of(*records), SamplingConfig(a=0.5, b=1000.0, seed=1))

    minority = plan.per_category["minority"]
    assert minority.ratio == pytest.approx(0.5, abs=1e-9)
    assert minority.target_count == 5

    majority = plan.per_category["majority"]
    want_ratio = 0.5 / (1.0 + math.exp(1.0 - 1000.0 / 10000.0))
    assert majority.ratio == pytest.approx(want_ratio, abs=1e-12)
    assert majority.target_count == math.floor(want_ratio * 10000 + 0.5)
    assert plan.total_selected == minority.target_count + majority.target_count


def test_rounding_is_half_up():
    # ratio f(b) = a/2 = 0.5 exactly over 5 records: 2.5 rounds up to 3
    plan = build_plan(
        manifest_of(*[rec(f"v{i}", "only") for i in range(5)]),
        SamplingConfig(a=1.0, b=5.0, seed=0),
    )
    cat = plan.per_category["only"]
    assert cat.ratio == 0.5
    assert cat.target_count == 3


def test_nonempty_categories_keep_at_least_one():
    plan = build_plan(
        manifest_of(rec("solo", "niche")), SamplingConfig(a=0.01, b=1000.0, seed=0)
    )
    assert plan.per_category["niche"].target_count == 1


def test_target_never_exceeds_count():
    plan = build_plan(
        manifest_of(*[rec(f"v{i}", "cat") for i in range(3)]),
        SamplingConfig(a=1.0, b=10**6, seed=0),
    )
    assert plan.per_category["cat"].target_count <= 3


# --- determinism -------------------------------------------------------------

def big_manifest() -> Manifest:
    records = [rec(f"a-{i:04d}", "alpha") for i in range(40)]
    records += [rec(f"b-{i:04d}", "beta") for i in range(25)]
    records += [rec(f"g-{i:04d}", "gamma") for i in range(7)]
    return manifest_of(*records)


def test_same_seed_same_plan():
    cfg = SamplingConfig(seed=42)
    p1 = build_plan(big_manifest(), cfg)
    p2 = build_plan(big_manifest(), cfg)
    assert plan_to_json_dict(p1) == plan_to_json_dict(p2)


def test_different_seeds_differ():
    p1 = build_plan(big_manifest(), SamplingConfig(seed=1))
    p2 = build_plan(big_manifest(), SamplingConfig(seed=2))
    assert plan_to_json_dict(p1) != plan_to_json_dict(p2)


def test_input_order_does_not_matter():
    records = list(big_manifest().records)
    shuffled = list(reversed(records))
    cfg = SamplingConfig(seed=9)
    p1 = build_plan(manifest_of(*records), cfg)
    p2 = build_plan(manifest_of(*shuffled), cfg)
    assert plan_to_json_dict(p1) == plan_to_json_dict(p2)


def test_selection_is_a_prefix_priority_list():
    # raising a has to keep every id selected under a smaller a, in order
    m = big_manifest()
    small = build_plan(m, SamplingConfig(a=0.25, b=30.0, seed=5))
    large = build_plan(m, SamplingConfig(a=0.5, b=30.0, seed=5))
    for cat in small.per_category:
        s_ids = small.per_category[cat].selected_ids
        l_ids = large.per_category[cat].selected_ids
        assert l_ids[: len(s_ids)] == s_ids


def test_selected_ids_unique_and_from_category():
    plan = build_plan(big_manifest(), SamplingConfig(seed=3))
    for cat, cat_plan in plan.per_category.items():
        assert len(set(cat_plan.selected_ids)) == len(cat_plan.selected_ids)
        prefix = {"alpha": "a-", "beta": "b-", "gamma": "g-"}[cat]
        assert all(vid.startswith(prefix) for vid in cat_plan.selected_ids)


def test_select_records_materializes_plan():
    m = big_manifest()
    plan = build_plan(m, SamplingConfig(seed=3))
    sub = select_records(m, plan)
    assert len(sub) == plan.total_selected
    assert {r.video_id for r in sub.records} == {
        vid for cat in plan.per_category.values() for vid in cat.selected_ids
    }


def test_empty_manifest_is_a_plan_error():
    with pytest.raises(PlanError):
        build_plan(Manifest(records=()), SamplingConfig())


def test_plan_round_trip(tmp_path):
    plan = build_plan(big_manifest(), SamplingConfig(seed=11))
    path = tmp_path / "plan.json"
    write_plan(plan, path)
    loaded = load_plan(path)
    assert plan_to_json_dict(loaded) == plan_to_json_dict(plan)
    payload = json.loads(path.read_text(encoding="utf-8"))
    assert set(payload) == {"config", "categories"}
    for block in payload["categories"].values():
        assert set(block) == {"original_count", "ratio", "target_count", "selected_ids"}


# --- filters -----------------------------------------------------------------

def test_min_duration_filter():
    m = manifest_of(rec("short", duration=2.0), rec("long", duration=9.0))
    kept, dropped = apply_filters(m, [min_duration(5.0)])
    assert [r.video_id for r in kept.records] == ["long"]
    assert dropped == [("short", "min_duration")]


def test_require_metadata_filter():
    m = manifest_of(
        rec("with", metadata={"title": "x"}),
        rec("without"),
    )
    kept, dropped = apply_filters(m, [require_metadata("title")])
    assert [r.video_id for r in kept.records] == ["with"]
    assert dropped == [("without", "require_metadata")]


def test_require_artifacts_filter(tmp_path):
    emb = tmp_path / "e.evem"
    asr = tmp_path / "a.jsonl"
    ocr = tmp_path / "o.jsonl"
    for p in (emb, asr, ocr):
        p.write_text("")
    complete = rec(
        "complete", embedding_ref="e.evem", asr_ref="a.jsonl", ocr_ref="o.jsonl"
    )
    partial = rec("partial", embedding_ref="e.evem")
    kept, dropped = apply_filters(
        manifest_of(complete, partial), [require_artifacts(base_dir=tmp_path)]
    )
    assert [r.video_id for r in kept.records] == ["complete"]
    assert dropped == [("partial", "require_artifacts")]


def test_first_failing_rule_wins():
    m = manifest_of(rec("bad", duration=1.0))
    rules = [min_duration(5.0), require_metadata("title")]
    _, dropped = apply_filters(m, rules)
    assert dropped == [("bad", "min_duration")]


def test_duplicate_rule_names_rejected():
    rules = [min_duration(5.0), min_duration(8.0)]
    with pytest.raises(ConfigError):
        apply_filters(manifest_of(rec("v")), rules)


def test_custom_rule_slots_in():
    m = manifest_of(rec("keep", "shoes"), rec("drop", "bags"))
    rule = FilterRule(name="shoes_only", predicate=lambda r: r.category == "shoes")
    kept, dropped = apply_filters(m, [rule])
    assert [r.video_id for r in kept.records] == ["keep"]
    assert dropped == [("drop", "shoes_only")]


def test_filters_preserve_record_order():
    m = manifest_of(rec("c"), rec("a"), rec("b"))
    kept, _ = apply_filters(m, [min_duration(1.0)])
    assert [r.video_id for r in kept.records] == ["c", "a", "b"]
