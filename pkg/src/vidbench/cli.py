"""Command-line entry point for the full pipeline.

Subcommands mirror the pipeline stages: density, sample, align, annotate,
evaluate, reward score, serve.  Every subcommand accepts ``--config
FILE.toml``; flags override file values, and the effective configuration is
echoed to stderr together with a reproducibility header (version, config
hash, seed).  All randomness flows from the single ``--seed``.

Exit codes: 0 success, 1 input/validation error, 2 runtime or backend
error.  Logs go to stderr; data goes only to the declared output paths, so
reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from . import __version__
from .alignment import build_timeline, context_to_json_dict, load_context, merge_slots, write_context
from .annotate import AnnotationBackends, AnnotatorConfig, run_annotation_cycle
from .backends import BackendProfile, resolve_backend
from .corpus import load_artifacts, load_manifest, save_manifest
from .density import DensityConfig, corpus_density_report, write_density_report, write_density_table
from .errors import ConfigError, InputError, RuntimeFailure, ToolkitError
from .judging import JudgeCache, load_predictions, run_evaluation, write_report, write_report_table
from .qa import TaskKind, load_items, save_items
from .rewards import RewardConfig, load_rollouts, save_rollouts, score_group
from .review.store import ReviewStore
from .sampling import (
    SamplingConfig,
    apply_filters,
    build_plan,
    min_duration,
    plan_to_json_dict,
    require_artifacts,
    require_metadata,
    select_records,
)

logger = logging.getLogger(__name__)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # exit 1 on usage problems instead of argparse's default 2
    def error(self, message):
        raise _UsageError(message)


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as handle:
            return tomllib.load(handle)
    except FileNotFoundError as exc:
        raise InputError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc


def _pick(flag_value, config: dict, section: str, key: str, default):
    """Precedence: explicit flag, then config file section, then default."""
    if flag_value is not None:
        return flag_value
    if section in config and key in config[section]:
        return config[section][key]
    if key in config:
        return config[key]
    return default


def _emit_header(subcommand: str, effective: dict) -> None:
    digest = hashlib.sha256(
        json.dumps(effective, sort_keys=True, default=str).encode("utf-8")
    ).hexdigest()[:12]
    seed = effective.get("seed", 0)
    print(
        f"# vidbench {__version__} | {subcommand} | config_hash={digest} | seed={seed}",
        file=sys.stderr,
    )
    print(f"# effective config: {json.dumps(effective, sort_keys=True, default=str)}",
          file=sys.stderr)


def _backend_pair(name: str, endpoint: str, timeout: float, retries: int) -> tuple:
    profile = BackendProfile(name=name, endpoint=endpoint, timeout_s=timeout,
                             max_retries=retries)
    return profile, resolve_backend(profile, fixtures_dir=None)


def _cmd_density(args, config: dict) -> int:
    cfg = DensityConfig(
        neighborhood_d=int(_pick(args.d, config, "density", "neighborhood_d", 5)),
        alpha=float(_pick(args.alpha, config, "density", "alpha", 100.0)),
        clamp_negative_cosine=not args.no_clamp,
    )
    effective = {"manifest": args.manifest, "out": args.out, "table": args.table,
                 "neighborhood_d": cfg.neighborhood_d, "alpha": cfg.alpha,
                 "clamp_negative_cosine": cfg.clamp_negative_cosine}
    _emit_header("density", effective)
    manifest = load_manifest(args.manifest)
    base_dir = args.base_dir or str(Path(args.manifest).parent)
    report = corpus_density_report(manifest, cfg, base_dir=base_dir)
    write_density_report(report, args.out)
    if args.table:
        write_density_table(report, args.table)
    print(f"density report written to {args.out}", file=sys.stderr)
    return 0


_RULE_FACTORIES = {
    "min_duration": lambda arg: min_duration(float(arg)),
    "require_metadata": lambda arg: require_metadata(arg or "category"),
    "require_artifacts": lambda arg: require_artifacts(arg or None),
}


def _parse_rules(specs: list[str]):
    rules = []
    for spec in specs:
        name, _, arg = spec.partition("=")
        factory = _RULE_FACTORIES.get(name)
        if factory is None:
            raise ConfigError(
                f"unknown filter rule {name!r}; available: {', '.join(sorted(_RULE_FACTORIES))}"
            )
        rules.append(factory(arg))
    return rules


def _cmd_sample(args, config: dict) -> int:
    cfg = SamplingConfig(
        a=float(_pick(args.a, config, "sample", "a", 0.5)),
        b=float(_pick(args.b, config, "sample", "b", 1000.0)),
        seed=int(_pick(args.seed, config, "sample", "seed", 0)),
    )
    effective = {"manifest": args.manifest, "out": args.out, "a": cfg.a, "b": cfg.b,
                 "seed": cfg.seed, "rules": args.rule, "selected_out": args.selected_out}
    _emit_header("sample", effective)
    manifest = load_manifest(args.manifest)
    rules = _parse_rules(args.rule)
    kept, dropped = apply_filters(manifest, rules)
    plan = build_plan(kept, cfg)
    payload = plan_to_json_dict(plan)
    if rules:
        payload["filters"] = [r.name for r in rules]
        payload["dropped"] = [[vid, rule] for vid, rule in dropped]
    Path(args.out).write_text(
        json.dumps(payload, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )
    if args.selected_out:
        save_manifest(select_records(kept, plan), args.selected_out)
    print(
        f"plan written to {args.out}: {plan.total_selected} of {len(kept)} kept records "
        f"selected, {len(dropped)} dropped by filters",
        file=sys.stderr,
    )
    return 0


def _cmd_align(args, config: dict) -> int:
    effective = {"manifest": args.manifest, "video": args.video,
                 "out": args.out, "out_dir": args.out_dir}
    _emit_header("align", effective)
    manifest = load_manifest(args.manifest)
    base_dir = args.base_dir or str(Path(args.manifest).parent)
    if args.video:
        try:
            records = [manifest.by_id(args.video)]
        except KeyError:
            raise InputError(f"video {args.video} not in manifest") from None
        if not args.out:
            raise InputError("--out is required with --video")
    else:
        records = list(manifest.records)
        if not args.out_dir:
            raise InputError("--out-dir is required without --video")
        Path(args.out_dir).mkdir(parents=True, exist_ok=True)
    for record in records:
        artifacts = load_artifacts(record, base_dir=base_dir)
        context = merge_slots(
            build_timeline(record, artifacts.embeddings, artifacts.asr or [],
                           artifacts.ocr or [])
        )
        out_path = args.out if args.video else str(
            Path(args.out_dir) / f"{record.video_id}.context.json"
        )
        write_context(context, out_path)
    print(f"aligned {len(records)} context(s)", file=sys.stderr)
    return 0


def _parse_tasks(spec: str) -> list[TaskKind]:
    try:
        return [TaskKind(token.strip()) for token in spec.split(",") if token.strip()]
    except ValueError as exc:
        raise InputError(f"unknown task kind in {spec!r}") from exc


def _cmd_annotate(args, config: dict) -> int:
    tasks = _parse_tasks(_pick(args.tasks, config, "annotate", "tasks", "BP,CM,ML,CI,RC"))
    retries = int(_pick(args.max_retries, config, "annotate", "max_retries", 2))
    timeout = float(_pick(args.timeout, config, "annotate", "timeout_s", 30.0))
    effective = {"manifest": args.manifest, "contexts": args.contexts, "out": args.out,
                 "gen_backend": args.gen_backend, "judge_backend": args.judge_backend,
                 "tasks": [t.value for t in tasks], "max_retries": retries,
                 "fixtures_dir": args.fixtures_dir,
                 "candidates_per_persona": args.candidates}
    _emit_header("annotate", effective)
    manifest = load_manifest(args.manifest)
    gen_profile = BackendProfile("generator", args.gen_backend, timeout, retries)
    judge_profile = BackendProfile("judge", args.judge_backend, timeout, retries)
    backends = AnnotationBackends.from_profiles(
        gen_profile, judge_profile, fixtures_dir=args.fixtures_dir
    )
    cfg = AnnotatorConfig(
        candidates_per_persona=int(
            _pick(args.candidates, config, "annotate", "candidates_per_persona", 2)
        )
    )
    items = []
    for record in manifest.records:
        context_path = Path(args.contexts) / f"{record.video_id}.context.json"
        if not context_path.exists():
            raise InputError(f"context file missing for {record.video_id}: {context_path}")
        context = load_context(context_path)
        items.extend(run_annotation_cycle(context, tasks, backends, cfg))
    save_items(items, args.out)
    print(f"wrote {len(items)} QA item(s) to {args.out}", file=sys.stderr)
    return 0


def _cmd_evaluate(args, config: dict) -> int:
    condition = _pick(args.condition, config, "evaluate", "condition", "base")
    condition_internal = {"base": "base", "base+asr": "base_plus_asr",
                          "base_plus_asr": "base_plus_asr"}.get(condition)
    if condition_internal is None:
        raise InputError(f"condition must be base or base+asr, got {condition!r}")
    retries = int(_pick(args.max_retries, config, "evaluate", "max_retries", 2))
    effective = {"manifest": args.manifest, "qa": args.qa, "pred": args.pred,
                 "judge_backend": args.judge_backend, "condition": condition_internal,
                 "out": args.out, "table": args.table, "max_retries": retries}
    _emit_header("evaluate", effective)
    manifest = load_manifest(args.manifest) if args.manifest else None
    qa_items = load_items(args.qa)
    predictions = load_predictions(args.pred)
    profile = BackendProfile("judge", args.judge_backend, 30.0, retries)
    backend = resolve_backend(profile, fixtures_dir=args.fixtures_dir)
    report = run_evaluation(
        qa_items, predictions, backend, profile,
        condition=condition_internal, manifest=manifest, cache=JudgeCache(),
    )
    write_report(report, args.out)
    if args.table:
        write_report_table(report, args.table)
    print(
        f"evaluated {report.all_micro.n} prediction(s), "
        f"{len(report.excluded)} excluded; report at {args.out}",
        file=sys.stderr,
    )
    return 0


def _cmd_reward_score(args, config: dict) -> int:
    cfg = RewardConfig(
        alpha1=float(_pick(args.alpha1, config, "reward", "alpha1", 0.8)),
        alpha2=float(_pick(args.alpha2, config, "reward", "alpha2", 0.2)),
        epsilon=float(_pick(args.eps, config, "reward", "epsilon", 1e-4)),
    )
    effective = {"rollouts": args.rollouts, "judge_backend": args.judge_backend,
                 "alpha1": cfg.alpha1, "alpha2": cfg.alpha2, "epsilon": cfg.epsilon,
                 "out": args.out, "qa": args.qa}
    _emit_header("reward score", effective)
    groups = load_rollouts(args.rollouts)
    qa_by_id = {}
    if args.qa:
        qa_by_id = {item.qa_id: item for item in load_items(args.qa)}
    profile = BackendProfile("judge", args.judge_backend, 30.0,
                             int(args.max_retries if args.max_retries is not None else 2))
    backend = resolve_backend(profile, fixtures_dir=args.fixtures_dir)
    cache = JudgeCache()
    scored = [
        score_group(group, backend, profile, cfg,
                    qa_item=qa_by_id.get(group.prompt_id), cache=cache)
        for group in groups
    ]
    save_rollouts(scored, args.out)
    print(f"scored {len(scored)} group(s) to {args.out}", file=sys.stderr)
    return 0


def _cmd_serve(args, config: dict) -> int:
    import uvicorn

    from .review.service import create_app

    ttl = float(_pick(args.lease_ttl, config, "serve", "lease_ttl_s", 1800.0))
    effective = {"store": args.store, "host": args.host, "port": args.port,
                 "contexts": args.contexts, "lease_ttl_s": ttl}
    _emit_header("serve", effective)
    store = ReviewStore(args.store, lease_ttl_s=ttl)
    contexts = {}
    if args.contexts:
        for path in sorted(Path(args.contexts).glob("*.context.json")):
            context = load_context(path)
            contexts[context.video_id] = context
    app = create_app(store, contexts)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="vidbench", description=__doc__)
    parser.add_argument("--version", action="version", version=f"vidbench {__version__}")
    sub = parser.add_subparsers(dest="subcommand", metavar="subcommand")

    def common(p):
        p.add_argument("--config", help="TOML config file; flags override its values")
        p.add_argument("--seed", type=int, default=None, help="seed for all randomness")

    p = sub.add_parser("density", help="per-video and corpus density report")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--table", help="optional TSV summary path")
    p.add_argument("--d", type=int, default=None, help="neighborhood half-width")
    p.add_argument("--alpha", type=float, default=None, help="scale factor")
    p.add_argument("--no-clamp", action="store_true",
                   help="allow negative cosines instead of clamping to [0, 1]")
    p.add_argument("--base-dir", help="base directory for artifact refs")
    p.set_defaults(func=_cmd_density)

    p = sub.add_parser("sample", help="filter the corpus and build a sampling plan")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="plan.json path")
    p.add_argument("--a", type=float, default=None, help="ratio upper bound")
    p.add_argument("--b", type=float, default=None, help="inflection count")
    p.add_argument("--rule", action="append", default=[],
                   help="filter rule name=arg, repeatable, applied in order")
    p.add_argument("--selected-out", help="optional manifest of selected records")
    p.set_defaults(func=_cmd_sample)

    p = sub.add_parser("align", help="build structured timeline contexts")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--video", help="align one video id")
    p.add_argument("--out", help="output path (single video)")
    p.add_argument("--out-dir", help="output directory (all videos)")
    p.add_argument("--base-dir", help="base directory for artifact refs")
    p.set_defaults(func=_cmd_align)

    p = sub.add_parser("annotate", help="generate QA items over contexts")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--contexts", required=True, help="directory of *.context.json")
    p.add_argument("--out", required=True, help="qa_items.jsonl path")
    p.add_argument("--gen-backend", required=True,
                   help="endpoint URL or mock:<scenario>")
    p.add_argument("--judge-backend", required=True,
                   help="endpoint URL or mock:<scenario>")
    p.add_argument("--tasks", default=None, help="comma-separated task kinds")
    p.add_argument("--candidates", type=int, default=None,
                   help="candidates requested per persona")
    p.add_argument("--max-retries", type=int, default=None)
    p.add_argument("--timeout", type=float, default=None)
    p.add_argument("--fixtures-dir", help="directory holding mock scenario files")
    p.set_defaults(func=_cmd_annotate)

    p = sub.add_parser("evaluate", help="judge predictions and aggregate a report")
    common(p)
    p.add_argument("--manifest", help="optional manifest for video reconciliation")
    p.add_argument("--qa", required=True, help="qa_items.jsonl path")
    p.add_argument("--pred", required=True, help="predictions.jsonl path")
    p.add_argument("--judge-backend", required=True)
    p.add_argument("--condition", choices=["base", "base+asr"], default=None)
    p.add_argument("--out", required=True, help="eval_report.json path")
    p.add_argument("--table", help="optional TSV table path")
    p.add_argument("--max-retries", type=int, default=None)
    p.add_argument("--fixtures-dir", help="directory holding mock scenario files")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("reward", help="reward-engine operations")
    reward_sub = p.add_subparsers(dest="reward_subcommand", metavar="op")
    ps = reward_sub.add_parser("score", help="score rollout groups")
    common(ps)
    ps.add_argument("--rollouts", required=True)
    ps.add_argument("--judge-backend", required=True)
    ps.add_argument("--alpha1", type=float, default=None)
    ps.add_argument("--alpha2", type=float, default=None)
    ps.add_argument("--eps", type=float, default=None)
    ps.add_argument("--out", required=True)
    ps.add_argument("--qa", help="qa_items.jsonl supplying ground truth by prompt_id")
    ps.add_argument("--max-retries", type=int, default=None)
    ps.add_argument("--fixtures-dir", help="directory holding mock scenario files")
    ps.set_defaults(func=_cmd_reward_score)

    p = sub.add_parser("serve", help="run the review service")
    common(p)
    p.add_argument("--store", required=True, help="SQLite store path")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--contexts", help="directory of *.context.json for review display")
    p.add_argument("--lease-ttl", type=float, default=None)
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return 1
    try:
        config = _load_config(args.config)
        return args.func(args, config)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (RuntimeFailure, ToolkitError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
