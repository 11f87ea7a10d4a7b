"""Command-line entry point wiring the toolkit's workflows.

Commands: validate, split, classify, eval, agree, augment, compare,
report. Global flags: --config (flat TOML), --mock (fixture JSON),
--concurrency, --frozen-clock. Exit codes: 0 success, 1 validation
violations, 2 configuration error, 3 I/O error, 4 authentication error,
5 run/dataset mismatch.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .agreement import (
    DegenerateChanceError,
    DegenerateMarginalsError,
    fleiss_kappa,
    gwet_ac1_overall,
    gwet_ac1_per_category,
    load_count_matrix_csv,
    load_raw_labels_csv,
)
from .augment import (
    AugmentationPolicy,
    augment_dataset,
    default_generation_template,
    similarity_report,
    similarity_table_csv,
)
from .backend import AuthError, BackendConfig, ChatCompletionsBackend, MockBackend
from .classify import (
    EmptySplitError,
    TemplateError,
    classify_split,
    default_template,
    load_run,
    load_template,
    save_run,
    RunStore,
)
from .corpus import (
    EmptyCategoryError,
    InvalidRatiosError,
    MalformedRecordError,
    Split,
    ValidationProfile,
    load_dataset,
    save_dataset,
    stratified_split,
    validate_dataset,
)
from .metrics import (
    SplitMismatchError,
    compare_runs,
    comparison_table,
    comparison_to_dict,
    confusion_csv,
    confusion_svg,
    evaluate,
    report_from_dict,
    report_table_csv,
    report_to_json,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_AUTH = 4
EXIT_MISMATCH = 5

FROZEN_TIMESTAMP = "1970-01-01T00:00:00+00:00"


class MismatchError(ValueError):
    """Run and dataset disagree on identity, split, or sentence ids."""


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except AuthError as exc:
        return _fail(f"auth error: {exc}", EXIT_AUTH)
    except (MismatchError, SplitMismatchError) as exc:
        return _fail(f"mismatch: {exc}", EXIT_MISMATCH)
    except MalformedRecordError as exc:
        return _fail(f"malformed dataset: {exc}", EXIT_IO)
    except FileNotFoundError as exc:
        return _fail(f"file not found: {exc.filename or exc}", EXIT_IO)
    except OSError as exc:
        return _fail(f"i/o error: {exc}", EXIT_IO)
    except (
        TemplateError,
        EmptySplitError,
        InvalidRatiosError,
        EmptyCategoryError,
        DegenerateMarginalsError,
        DegenerateChanceError,
        tomllib.TOMLDecodeError,
        json.JSONDecodeError,
        ValueError,
    ) as exc:
        return _fail(f"config error: {exc}", EXIT_CONFIG)


def _fail(message: str, code: int) -> int:
    print(message, file=sys.stderr)
    return code


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key-value TOML config file")
    common.add_argument("--mock", help="fixture JSON file; run offline against it")
    common.add_argument("--concurrency", type=int, default=4, help="bound on in-flight requests")
    common.add_argument(
        "--frozen-clock",
        action="store_true",
        help="fixed timestamps and deterministic run ids, for reproducible artifacts",
    )

    parser = argparse.ArgumentParser(
        prog="scisent", description="Rhetorical-role sentence classification toolkit"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check dataset invariants")
    p.add_argument("--dataset", required=True)
    p.add_argument("--profile", choices=[v.value for v in ValidationProfile], default="none")
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("split", parents=[common], help="reassign splits with a seeded shuffle")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--ratios", default="0.7,0.1,0.2", help="train,validation,test fractions")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(handler=_cmd_split)

    p = sub.add_parser("classify", parents=[common], help="classify one split with a backend")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", choices=[v.value for v in Split], default="test")
    p.add_argument("--template", help="prompt template file (default: packaged template)")
    p.add_argument("--out", required=True, help="run output directory")
    p.add_argument("--store", help="prediction cache directory (default: <out>/cache)")
    _add_backend_flags(p)
    p.set_defaults(handler=_cmd_classify)

    p = sub.add_parser("eval", parents=[common], help="score a run against gold labels")
    p.add_argument("--run", required=True, help="run directory or manifest file")
    p.add_argument("--dataset", required=True)
    p.add_argument("--split", choices=[v.value for v in Split], help="expected split (defaults to the run's)")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--heatmap", action="store_true", help="also emit confusion.svg")
    p.set_defaults(handler=_cmd_eval)

    p = sub.add_parser("agree", parents=[common], help="inter-annotator agreement statistics")
    p.add_argument("--ratings", required=True, help="ratings CSV file")
    p.add_argument("--format", choices=["raw", "counts"], default="raw")
    p.add_argument("--out", help="write the statistics as JSON")
    p.set_defaults(handler=_cmd_agree)

    p = sub.add_parser("augment", parents=[common], help="generate gated synthetic variants")
    p.add_argument("--dataset", required=True)
    p.add_argument("--out", required=True, help="augmented dataset file")
    p.add_argument("--profile", choices=["base", "none"], default="base")
    p.add_argument("--report", help="write the completion report as JSON")
    p.add_argument("--similarity", help="write the similarity table as CSV")
    p.add_argument("--variants", type=int, help="variants per sentence")
    p.add_argument("--min-distance", type=float, help="diversity gate threshold")
    p.add_argument("--max-attempts", type=int, help="regeneration attempts per slot")
    p.add_argument("--gen-template", help="paraphrase prompt file")
    _add_backend_flags(p)
    p.set_defaults(handler=_cmd_augment)

    p = sub.add_parser("compare", parents=[common], help="delta table between two eval reports")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument("--out", help="write the deltas as JSON")
    p.set_defaults(handler=_cmd_compare)

    p = sub.add_parser("report", parents=[common], help="re-emit tables from a stored eval report")
    p.add_argument("--report", required=True, dest="report_path", help="eval report JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--heatmap", action="store_true")
    p.set_defaults(handler=_cmd_report)

    return parser


def _add_backend_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--endpoint", help="chat-completions base URL")
    parser.add_argument("--model", help="model identifier")
    parser.add_argument("--temperature", type=float)
    parser.add_argument("--top-p", type=float, dest="top_p")
    parser.add_argument("--top-k", dest="top_k", help="positive integer, or 'none' to omit")
    parser.add_argument("--max-tokens", type=int, dest="max_tokens")
    parser.add_argument("--timeout", type=float)
    parser.add_argument("--max-retries", type=int, dest="max_retries")
    parser.add_argument("--clamp-top-p-min", action="store_true", dest="clamp_top_p_min")


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    with open(path, "rb") as handle:
        return tomllib.load(handle)


_BACKEND_FLAG_KEYS = {
    "endpoint": "endpoint_url",
    "model": "model_id",
    "temperature": "temperature",
    "top_p": "top_p",
    "max_tokens": "max_tokens",
    "timeout": "timeout",
    "max_retries": "max_retries",
}


def _backend_config(args, file_cfg: dict, *, mock: bool) -> BackendConfig:
    """Resolve the effective config: flags beat the file, the file beats defaults."""
    kwargs: dict = {}
    for field in (
        "endpoint_url",
        "model_id",
        "temperature",
        "top_p",
        "top_k",
        "max_tokens",
        "timeout",
        "max_retries",
        "clamp_top_p_min",
    ):
        if field in file_cfg:
            kwargs[field] = file_cfg[field]
    for flag, field in _BACKEND_FLAG_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            kwargs[field] = value
    top_k = getattr(args, "top_k", None)
    if top_k is not None:
        kwargs["top_k"] = None if top_k.lower() in ("none", "null", "na") else int(top_k)
    if getattr(args, "clamp_top_p_min", False):
        kwargs["clamp_top_p_min"] = True
    if mock:
        kwargs.setdefault("endpoint_url", "mock://local")
        kwargs.setdefault("model_id", "mock")
    return BackendConfig(**kwargs)


def _make_backend(args, file_cfg: dict):
    if args.mock:
        table, default = _load_mock_file(args.mock)
        return MockBackend(table, default=default, config=_backend_config(args, file_cfg, mock=True))
    return ChatCompletionsBackend(
        _backend_config(args, file_cfg, mock=False), max_concurrency=args.concurrency
    )


def _load_mock_file(path: str) -> tuple[dict, str | None]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, dict):
        raise ValueError(f"{path}: mock fixture file must be a JSON object")
    default = data.get("__default__")
    table = {key: value for key, value in data.items() if key != "__default__"}
    return table, default


def _frozen_run_id(model_id: str, dataset_name: str, split: str, template_text: str) -> str:
    digest = hashlib.sha256(
        f"{model_id}|{dataset_name}|{split}|{template_text}".encode("utf-8")
    ).hexdigest()
    return f"frozen-{digest[:16]}"


def _cmd_validate(args) -> int:
    dataset = load_dataset(args.dataset)
    violations = validate_dataset(dataset, ValidationProfile(args.profile))
    if violations:
        for violation in violations:
            print(violation)
        print(f"INVALID: {dataset.name}: {len(violations)} violations (profile {args.profile})")
        return EXIT_INVALID
    print(f"OK: {dataset.name}: {len(dataset)} records valid under profile {args.profile}")
    return EXIT_OK


def _cmd_split(args) -> int:
    dataset = load_dataset(args.dataset)
    try:
        ratios = tuple(float(part) for part in args.ratios.split(","))
    except ValueError:
        raise InvalidRatiosError(f"cannot parse ratios: {args.ratios!r}") from None
    if len(ratios) != 3:
        raise InvalidRatiosError(f"need three ratios, got {args.ratios!r}")
    result = stratified_split(dataset, ratios, args.seed)
    save_dataset(result, args.out)
    counts = {split.value: len(result.by_split(split)) for split in Split}
    print(
        f"split {dataset.name} with seed {args.seed}: "
        + " ".join(f"{name}={count}" for name, count in counts.items())
        + f" -> {args.out}"
    )
    return EXIT_OK


def _cmd_classify(args) -> int:
    file_cfg = _load_config_file(args.config)
    dataset = load_dataset(args.dataset)
    split = Split(args.split)
    template_text = (
        Path(args.template).read_text(encoding="utf-8")
        if args.template
        else default_template_text()
    )
    template = load_template(args.template) if args.template else default_template()
    backend = _make_backend(args, file_cfg)
    store = RunStore(args.store if args.store else Path(args.out) / "cache")
    run_kwargs = {}
    if args.frozen_clock:
        run_kwargs["now"] = lambda: FROZEN_TIMESTAMP
        run_kwargs["run_id"] = _frozen_run_id(
            backend.config.model_id, dataset.name, split.value, template_text
        )
    run = classify_split(
        dataset,
        split,
        template,
        backend,
        store,
        concurrency=args.concurrency,
        **run_kwargs,
    )
    save_run(run, args.out)
    print(
        f"run {run.run_id}: {len(run.predictions)} predictions "
        f"({run.parsed_count} parsed, {run.unparsed_count} unparsed) -> {args.out}"
    )
    return EXIT_OK


def default_template_text() -> str:
    from importlib import resources

    return resources.files("scisent").joinpath("data/zsl_prompt.txt").read_text("utf-8")


def _cmd_eval(args) -> int:
    run = load_run(args.run)
    dataset = load_dataset(args.dataset)
    if args.split and Split(args.split) is not run.split:
        raise MismatchError(f"run covers split {run.split.value!r}, requested {args.split!r}")
    if run.dataset_name != dataset.name:
        raise MismatchError(
            f"run was produced on dataset {run.dataset_name!r}, given {dataset.name!r}"
        )
    gold_by_id = {record.id: record for record in dataset.by_split(run.split)}
    prediction_ids = {p.sentence_id for p in run.predictions}
    if prediction_ids != set(gold_by_id):
        missing = sorted(set(gold_by_id) - prediction_ids)[:3]
        extra = sorted(prediction_ids - set(gold_by_id))[:3]
        raise MismatchError(
            f"run and dataset sentence ids differ (missing {missing}, extra {extra})"
        )
    gold = [gold_by_id[p.sentence_id].label for p in run.predictions]
    predicted = [p.predicted for p in run.predictions]
    report = evaluate(gold, predicted, run_id=run.run_id, split=run.split.value)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report_to_json(report), encoding="utf-8")
    (out / "report.csv").write_text(report_table_csv(report), encoding="utf-8", newline="")
    (out / "confusion.csv").write_text(confusion_csv(report.matrix), encoding="utf-8", newline="")
    if args.heatmap:
        (out / "confusion.svg").write_text(confusion_svg(report.matrix), encoding="utf-8")
    print(
        f"macro precision={report.macro.precision:.3f} "
        f"recall={report.macro.recall:.3f} f1={report.macro.f1:.3f} "
        f"unparsed={report.unparsed_count} -> {args.out}"
    )
    return EXIT_OK


def _cmd_agree(args) -> int:
    if args.format == "counts":
        matrix = load_count_matrix_csv(args.ratings)
    else:
        matrix = load_raw_labels_csv(args.ratings)
    kappa = fleiss_kappa(matrix)
    ac1 = gwet_ac1_overall(matrix)
    per_category = {label: gwet_ac1_per_category(matrix, label) for label in matrix.categories}
    print(f"fleiss_kappa={kappa:.3f} gwet_ac1={ac1:.3f} items={len(matrix.items)} raters={matrix.raters}")
    for label, value in per_category.items():
        print(f"  {label}: {value:.3f}")
    if args.out:
        artifact = {
            "fleiss_kappa": kappa,
            "gwet_ac1_overall": ac1,
            "gwet_ac1_per_category": per_category,
            "items": len(matrix.items),
            "raters": matrix.raters,
            "categories": list(matrix.categories),
        }
        Path(args.out).write_text(
            json.dumps(artifact, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    return EXIT_OK


def _cmd_augment(args) -> int:
    file_cfg = _load_config_file(args.config)
    dataset = load_dataset(args.dataset)
    policy_kwargs: dict = {}
    for flag, field in (
        ("variants", "variants_per_sentence"),
        ("min_distance", "min_distance"),
        ("max_attempts", "max_regeneration_attempts"),
    ):
        value = getattr(args, flag, None)
        if value is None:
            value = file_cfg.get(field)
        if value is not None:
            policy_kwargs[field] = value
    if args.gen_template:
        policy_kwargs["generation_template"] = Path(args.gen_template).read_text(encoding="utf-8")
    else:
        policy_kwargs.setdefault("generation_template", default_generation_template())
    policy = AugmentationPolicy(**policy_kwargs)
    backend = _make_backend(args, file_cfg)
    profile = ValidationProfile.BASE if args.profile == "base" else ValidationProfile.NONE
    outcome = augment_dataset(dataset, backend, policy, profile=profile)
    save_dataset(outcome.dataset, args.out)
    if args.report:
        Path(args.report).write_text(
            json.dumps(outcome.report.to_dict(), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    if args.similarity:
        table = similarity_report(outcome.dataset)
        Path(args.similarity).write_text(similarity_table_csv(table), encoding="utf-8", newline="")
    report = outcome.report
    print(
        f"augmented {report.sources_total} sources: {report.new_records} new records, "
        f"{report.sets_exhausted} exhausted -> {args.out}"
    )
    return EXIT_OK


def _cmd_compare(args) -> int:
    report_a = report_from_dict(json.loads(Path(args.report_a).read_text(encoding="utf-8")))
    report_b = report_from_dict(json.loads(Path(args.report_b).read_text(encoding="utf-8")))
    comparison = compare_runs(report_a, report_b)
    print(comparison_table(comparison), end="")
    if args.out:
        Path(args.out).write_text(
            json.dumps(comparison_to_dict(comparison), indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    return EXIT_OK


def _cmd_report(args) -> int:
    report = report_from_dict(json.loads(Path(args.report_path).read_text(encoding="utf-8")))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.csv").write_text(report_table_csv(report), encoding="utf-8", newline="")
    (out / "confusion.csv").write_text(confusion_csv(report.matrix), encoding="utf-8", newline="")
    if args.heatmap:
        (out / "confusion.svg").write_text(confusion_svg(report.matrix), encoding="utf-8")
    print(f"report tables for run {report.run_id!r} -> {args.out}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
