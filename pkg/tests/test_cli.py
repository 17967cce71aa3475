"""CLI wiring: exit codes, config precedence, headers, reproducible outputs."""

from __future__ import annotations

import json
import re

import pytest

from vidbench.cli import main
from vidbench.corpus import load_manifest
from vidbench.qa import EvidenceItem, Modality, QaItem, TaskKind, make_qa_id, save_items

from conftest import candidate_payload, fenced, unit, write_corpus, write_scenario


def small_corpus(root):
    """Two videos with embeddings, narration and on-screen text."""
    return write_corpus(
        root,
        [
            {
                "video_id": "vid-a",
                "duration_s": 3.0,
                "category": "kitchen",
                "vectors": [unit(1, 0), unit(1, 0), unit(1, 0)],
                "asr": [(0.0, 3.0, "the new blender costs twenty dollars")],
                "ocr": [(0, ["SALE"]), (1, ["BUY NOW"])],
            },
            {
                "video_id": "vid-b",
                "duration_s": 2.0,
                "category": "fitness",
                "vectors": [unit(1, 0), unit(0, 1)],
                "asr": [(0.0, 2.0, "take the stairs")],
            },
        ],
    )


def qa_fixture_file(path) -> list[QaItem]:
    items = [
        QaItem(
            qa_id=make_qa_id("vid-a", TaskKind.BP, "What color is the blender?"),
            video_id="vid-a",
            task=TaskKind.BP,
            difficulty="L1",
            question="What color is the blender?",
            answer="Red",
            reasoning="Visible throughout.",
            evidence=(EvidenceItem(Modality.V, 0, 1, ""),),
        ),
        QaItem(
            qa_id=make_qa_id("vid-b", TaskKind.ML, "What behavior does the ad push?"),
            video_id="vid-b",
            task=TaskKind.ML,
            difficulty="L3",
            question="What behavior does the ad push?",
            answer="Taking the stairs",
            reasoning="Stated as the call to action.",
            evidence=(EvidenceItem(Modality.A, 0, 2, "take the stairs"),),
        ),
    ]
    save_items(items, path)
    return items


# ---------------------------------------------------------------- exit codes


def test_version_flag_reports_and_exits_zero(capsys):
    with pytest.raises(SystemExit) as excinfo:
        main(["--version"])
    assert excinfo.value.code == 0
    assert "vidbench" in capsys.readouterr().out


def test_no_subcommand_prints_help_and_exits_one(capsys):
    assert main([]) == 1
    assert "subcommand" in capsys.readouterr().err


def test_unknown_subcommand_exits_one(capsys):
    assert main(["frobnicate"]) == 1
    err = capsys.readouterr().err
    assert "usage" in err
    assert "error:" in err


def test_missing_required_flag_exits_one(capsys):
    assert main(["density"]) == 1
    assert "--manifest" in capsys.readouterr().err


def test_out_of_range_parameter_exits_one(tmp_path, capsys):
    manifest = small_corpus(tmp_path)
    code = main(
        ["sample", "--manifest", str(manifest), "--out", str(tmp_path / "plan.json"),
         "--a", "1.5"]
    )
    assert code == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_filter_rule_exits_one(tmp_path, capsys):
    manifest = small_corpus(tmp_path)
    code = main(
        ["sample", "--manifest", str(manifest), "--out", str(tmp_path / "plan.json"),
         "--rule", "newest_first=1"]
    )
    assert code == 1
    assert "unknown filter rule" in capsys.readouterr().err


def test_missing_mock_scenario_exits_one(tmp_path, capsys):
    qa_path = tmp_path / "qa.jsonl"
    qa_fixture_file(qa_path)
    (tmp_path / "pred.jsonl").write_text("", encoding="utf-8")
    code = main(
        ["evaluate", "--qa", str(qa_path), "--pred", str(tmp_path / "pred.jsonl"),
         "--judge-backend", "mock:absent", "--out", str(tmp_path / "report.json"),
         "--fixtures-dir", str(tmp_path / "mock")]
    )
    assert code == 1


def test_transport_exhaustion_exits_two(tmp_path, capsys):
    qa_path = tmp_path / "qa.jsonl"
    items = qa_fixture_file(qa_path)
    preds = tmp_path / "pred.jsonl"
    preds.write_text(
        json.dumps({"qa_id": items[0].qa_id, "prediction": "Red"}) + "\n",
        encoding="utf-8",
    )
    write_scenario(tmp_path, "judge-down", [{"fail": "connection refused"}])
    code = main(
        ["evaluate", "--qa", str(qa_path), "--pred", str(preds),
         "--judge-backend", "mock:judge-down", "--out", str(tmp_path / "report.json"),
         "--max-retries", "0", "--fixtures-dir", str(tmp_path / "mock")]
    )
    assert code == 2
    assert "runtime error:" in capsys.readouterr().err


def test_invalid_toml_config_exits_one(tmp_path, capsys):
    manifest = small_corpus(tmp_path)
    bad = tmp_path / "cfg.toml"
    bad.write_text("[density\nalpha = ", encoding="utf-8")
    code = main(
        ["density", "--config", str(bad), "--manifest", str(manifest),
         "--out", str(tmp_path / "d.json")]
    )
    assert code == 1
    assert main(
        ["density", "--config", str(tmp_path / "nope.toml"), "--manifest", str(manifest),
         "--out", str(tmp_path / "d.json")]
    ) == 1


# ---------------------------------------------------------------- config, header


def test_flags_override_config_file_and_header_reports_both(tmp_path, capsys):
    manifest = small_corpus(tmp_path)
    cfg = tmp_path / "cfg.toml"
    cfg.write_text("[density]\nneighborhood_d = 2\nalpha = 50.0\n", encoding="utf-8")
    code = main(
        ["density", "--config", str(cfg), "--alpha", "100",
         "--manifest", str(manifest), "--out", str(tmp_path / "d.json")]
    )
    assert code == 0
    err_lines = capsys.readouterr().err.splitlines()
    assert re.fullmatch(
        r"# vidbench \S+ \| density \| config_hash=[0-9a-f]{12} \| seed=0", err_lines[0]
    )
    effective = json.loads(err_lines[1].removeprefix("# effective config: "))
    assert effective["neighborhood_d"] == 2  # from the config file
    assert effective["alpha"] == 100.0  # flag wins over the file
    assert effective["clamp_negative_cosine"] is True


def test_seed_flag_lands_in_the_header(tmp_path, capsys):
    manifest = small_corpus(tmp_path)
    code = main(
        ["sample", "--manifest", str(manifest), "--out", str(tmp_path / "plan.json"),
         "--seed", "7"]
    )
    assert code == 0
    assert "| seed=7" in capsys.readouterr().err.splitlines()[0]


# ---------------------------------------------------------------- density


def test_density_outputs_are_reproducible(tmp_path, capsys):
    manifest = small_corpus(tmp_path)
    outs = []
    for run in ("one", "two"):
        out = tmp_path / f"density-{run}.json"
        table = tmp_path / f"density-{run}.tsv"
        assert main(
            ["density", "--manifest", str(manifest), "--out", str(out),
             "--table", str(table)]
        ) == 0
        outs.append((out.read_bytes(), table.read_bytes()))
    assert outs[0] == outs[1]

    report = json.loads(outs[0][0])
    by_id = {p["video_id"]: p for p in report["per_video"]}
    assert by_id["vid-a"]["v_den"] == 0.0  # static frames
    assert by_id["vid-b"]["v_den"] == 100.0  # orthogonal pair
    assert by_id["vid-b"]["o_den"] is None  # no on-screen text channel
    header, *rows = outs[0][1].decode("utf-8").splitlines()
    assert header.split("\t") == ["corpus", "n_videos", "V_den", "A_den", "O_den"]
    assert rows[0].split("\t")[1] == "2"


# ---------------------------------------------------------------- sample


def test_sample_plan_records_filters_and_drops(tmp_path):
    manifest = small_corpus(tmp_path)
    out = tmp_path / "plan.json"
    selected_out = tmp_path / "selected.jsonl"
    assert main(
        ["sample", "--manifest", str(manifest), "--out", str(out),
         "--rule", "min_duration=2.5", "--selected-out", str(selected_out)]
    ) == 0
    plan = json.loads(out.read_text(encoding="utf-8"))
    assert plan["filters"] == ["min_duration"]
    assert plan["dropped"] == [["vid-b", "min_duration"]]
    assert sorted(plan["categories"]) == ["kitchen"]
    selected = load_manifest(selected_out)
    assert [r.video_id for r in selected.records] == ["vid-a"]


def test_sample_runs_are_byte_identical(tmp_path):
    manifest = small_corpus(tmp_path)
    blobs = []
    for run in ("one", "two"):
        out = tmp_path / f"plan-{run}.json"
        assert main(
            ["sample", "--manifest", str(manifest), "--out", str(out), "--seed", "11"]
        ) == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]
    plan = json.loads(blobs[0])
    assert "filters" not in plan  # only present when rules were given


# ---------------------------------------------------------------- align


def test_align_single_video_and_whole_corpus(tmp_path):
    manifest = small_corpus(tmp_path)
    single = tmp_path / "vid-a.single.json"
    assert main(
        ["align", "--manifest", str(manifest), "--video", "vid-a", "--out", str(single)]
    ) == 0
    out_dir = tmp_path / "ctx"
    assert main(
        ["align", "--manifest", str(manifest), "--out-dir", str(out_dir)]
    ) == 0
    assert single.read_bytes() == (out_dir / "vid-a.context.json").read_bytes()
    context = json.loads(single.read_text(encoding="utf-8"))
    assert context["video_id"] == "vid-a"
    joined = "".join(slot["alpha"] for slot in context["slots"])
    assert joined == "the new blender costs twenty dollars"

    assert main(["align", "--manifest", str(manifest), "--video", "vid-a"]) == 1
    assert main(
        ["align", "--manifest", str(manifest), "--video", "vid-z", "--out", str(single)]
    ) == 1
    assert main(["align", "--manifest", str(manifest)]) == 1


# ---------------------------------------------------------------- annotate


def annotate_args(tmp_path, manifest, out):
    return [
        "annotate", "--manifest", str(manifest), "--contexts", str(tmp_path / "ctx"),
        "--out", str(out), "--gen-backend", "mock:gen", "--judge-backend", "mock:judge",
        "--tasks", "BP", "--candidates", "1",
        "--fixtures-dir", str(tmp_path / "mock"),
    ]


def test_annotate_pipeline_writes_reproducible_items(tmp_path):
    manifest = write_corpus(
        tmp_path,
        [
            {
                "video_id": "vid-a",
                "duration_s": 3.0,
                "category": "kitchen",
                "vectors": [unit(1, 0), unit(1, 0), unit(1, 0)],
                "asr": [(0.0, 3.0, "the new blender costs twenty dollars")],
                "ocr": [(0, ["SALE"])],
            }
        ],
    )
    assert main(["align", "--manifest", str(manifest), "--out-dir", str(tmp_path / "ctx")]) == 0
    write_scenario(tmp_path, "gen", [{"reply": fenced([candidate_payload()]), "times": 0}])
    good = candidate_payload(
        evidence=[{"modality": "A", "t_start": 0, "t_end": 3, "excerpt": "twenty dollars"}]
    )
    write_scenario(tmp_path, "judge", [{"reply": fenced(good), "times": 0}])

    blobs = []
    for run in ("one", "two"):
        out = tmp_path / f"qa-{run}.jsonl"
        assert main(annotate_args(tmp_path, manifest, out)) == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]

    (record,) = [json.loads(line) for line in blobs[0].decode("utf-8").splitlines()]
    assert record["task"] == "BP"
    assert record["status"] == "pending"
    assert record["cycle"] == 0
    assert record["question"] == "What does the narrator say the blender costs?"
    assert record["qa_id"] == make_qa_id("vid-a", TaskKind.BP, record["question"])


def test_annotate_requires_context_files(tmp_path, capsys):
    manifest = small_corpus(tmp_path)
    (tmp_path / "ctx").mkdir()
    write_scenario(tmp_path, "gen", [{"reply": "x", "times": 0}])
    write_scenario(tmp_path, "judge", [{"reply": "x", "times": 0}])
    assert main(annotate_args(tmp_path, manifest, tmp_path / "qa.jsonl")) == 1
    assert "context file missing" in capsys.readouterr().err


# ---------------------------------------------------------------- evaluate


def test_evaluate_report_and_table_are_reproducible(tmp_path):
    qa_path = tmp_path / "qa.jsonl"
    items = qa_fixture_file(qa_path)
    preds = tmp_path / "pred.jsonl"
    preds.write_text(
        "".join(
            json.dumps({"qa_id": item.qa_id, "prediction": "some answer"}) + "\n"
            for item in items
        ),
        encoding="utf-8",
    )
    write_scenario(tmp_path, "judge", [{"reply": "score: 0.5", "times": 0}])
    blobs = []
    for run in ("one", "two"):
        out = tmp_path / f"report-{run}.json"
        table = tmp_path / f"report-{run}.tsv"
        assert main(
            ["evaluate", "--qa", str(qa_path), "--pred", str(preds),
             "--judge-backend", "mock:judge", "--out", str(out), "--table", str(table),
             "--fixtures-dir", str(tmp_path / "mock")]
        ) == 0
        blobs.append((out.read_bytes(), table.read_bytes()))
    assert blobs[0] == blobs[1]

    report = json.loads(blobs[0][0])
    assert report["condition"] == "base"
    assert report["all"]["n"] == 2
    assert report["all"]["mean_r5"] == 0.5
    header, row = blobs[0][1].decode("utf-8").splitlines()
    columns = dict(zip(header.split("\t"), row.split("\t")))
    assert columns["BP_R5"] == "0.5000"
    assert columns["ALL_R5"] == "0.5000"
    assert columns["CM_S"] == ""


def test_evaluate_condition_flag_maps_to_report_field(tmp_path):
    qa_path = tmp_path / "qa.jsonl"
    items = qa_fixture_file(qa_path)
    preds = tmp_path / "pred.jsonl"
    preds.write_text(
        json.dumps({"qa_id": items[0].qa_id, "prediction": "Red"}) + "\n",
        encoding="utf-8",
    )
    write_scenario(tmp_path, "judge", [{"reply": "score: 1", "times": 0}])
    out = tmp_path / "report.json"
    assert main(
        ["evaluate", "--qa", str(qa_path), "--pred", str(preds),
         "--judge-backend", "mock:judge", "--condition", "base+asr",
         "--out", str(out), "--fixtures-dir", str(tmp_path / "mock")]
    ) == 0
    assert json.loads(out.read_text(encoding="utf-8"))["condition"] == "base_plus_asr"


# ---------------------------------------------------------------- reward score


def reward_fixture(tmp_path):
    qa_path = tmp_path / "qa.jsonl"
    items = qa_fixture_file(qa_path)
    rollouts = tmp_path / "rollouts.jsonl"
    rollouts.write_text(
        json.dumps(
            {
                "prompt_id": items[0].qa_id,
                "traces": [
                    "<think>looks crimson</think><answer>red</answer>",
                    "<think>maybe blue</think><answer>blue</answer>",
                ],
            }
        )
        + "\n",
        encoding="utf-8",
    )
    write_scenario(
        tmp_path,
        "judge",
        [{"reply": r} for r in ("score: 1", "score: 1", "score: 0", "score: 0")],
    )
    return qa_path, rollouts


def test_reward_score_fills_columns_reproducibly(tmp_path):
    qa_path, rollouts = reward_fixture(tmp_path)
    blobs = []
    for run in ("one", "two"):
        out = tmp_path / f"scored-{run}.jsonl"
        assert main(
            ["reward", "score", "--rollouts", str(rollouts), "--qa", str(qa_path),
             "--judge-backend", "mock:judge", "--out", str(out),
             "--fixtures-dir", str(tmp_path / "mock")]
        ) == 0
        blobs.append(out.read_bytes())
    assert blobs[0] == blobs[1]
    (group,) = [json.loads(line) for line in blobs[0].decode("utf-8").splitlines()]
    assert group["x_a"] == [1.0, 0.0]
    assert group["x_t"] == [1.0, 0.0]
    assert group["R"] == [1.0, 0.0]
    assert group["A"][0] == pytest.approx(0.5 / (0.5 + 1e-4))
    assert group["A"][1] == pytest.approx(-0.5 / (0.5 + 1e-4))


def test_reward_score_without_ground_truth_exits_one(tmp_path, capsys):
    _, rollouts = reward_fixture(tmp_path)
    assert main(
        ["reward", "score", "--rollouts", str(rollouts),
         "--judge-backend", "mock:judge", "--out", str(tmp_path / "scored.jsonl"),
         "--fixtures-dir", str(tmp_path / "mock")]
    ) == 1
    assert "error:" in capsys.readouterr().err
