"""Command-line surface: validate corpora, generate fixtures, run experiments.

Subcommands::

    biascope validate <corpus>                 check a corpus file pair
    biascope synth <params.json> -o DIR        write synthetic fixture corpora
    biascope sceat [config] [flags]            intrinsic effect sizes only
    biascope run [config] [flags]              one experiment -> report files
    biascope suite [config] [flags]            many experiments + aggregate rho
    biascope oracle-check [config] [flags]     engine vs naive oracle diff

Run configs are JSON: {"corpora": {model: {corpus_name: base_path}},
"presets": [...] and/or "specs": [...], "output_dir": ..., "seed": ...,
"jobs": ...}. ``--synth-default`` substitutes the built-in synthetic model so
no corpus files are needed. A ``--seed`` (or config seed) overrides every
spec's seed, so all randomness flows from that single value. Exit codes:
0 success, 1 validation/check failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from ._version import ENGINE_VERSION
from .corpus import EmbeddingCorpus, corpus_paths, load_corpus, save_corpus
from .errors import BiascopeError, ConfigError
from .experiments import (
    CSV_HEADER,
    ExperimentSpec,
    PRESET_NAMES,
    json_dumps,
    preset,
    report_csv_rows,
    report_to_json_dict,
    run_experiment,
    intrinsic_profile,
    run_suite,
    spec_from_json_dict,
    suite_csv,
    suite_to_json_dict,
    _policy_label,
)
from .oracle import compare_reports, oracle_run
from .synth import default_model_fixture, generate_group_corpus, generate_valence_corpus, params_from_json

ORACLE_TOLERANCE = 1e-9


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BiascopeError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="biascope",
                                     description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=ENGINE_VERSION)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="validate a corpus file pair")
    p.add_argument("corpus", help="corpus base path (or its .json manifest)")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("synth", help="generate synthetic fixture corpora")
    p.add_argument("params", nargs="?", help="fixture params JSON "
                   "({'seed':..., 'valence': {...}, 'group': {...}})")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--default", action="store_true",
                   help="write the built-in default model fixture")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_synth)

    for name, fn in (("sceat", _cmd_sceat), ("run", _cmd_run),
                     ("suite", _cmd_suite), ("oracle-check", _cmd_oracle_check)):
        p = sub.add_parser(name)
        p.add_argument("config", nargs="?", help="run config JSON path")
        p.add_argument("--preset", action="append", default=[],
                       help="preset name, 'all', or 'all-small' (repeatable)")
        p.add_argument("--synth-default", action="store_true",
                       help="use the built-in synthetic model corpora")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--jobs", type=int, default=None)
        p.add_argument("-o", "--output", default=None, help="output directory")
        p.set_defaults(func=fn)
    return parser


def _cmd_validate(args) -> int:
    manifest, matrix = corpus_paths(args.corpus)
    corpus = load_corpus(manifest, matrix)
    modalities = sorted({it.modality for it in corpus.items})
    print(f"ok: {manifest} ({corpus.count} x {corpus.dim}, "
          f"modalities {modalities}, {corpus.fingerprint()})")
    return 0


def _cmd_synth(args) -> int:
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)
    written: dict[str, EmbeddingCorpus] = {}
    if args.default or not args.params:
        seed = args.seed if args.seed is not None else 0
        written.update(default_model_fixture(seed))
    else:
        doc = json.loads(Path(args.params).read_text(encoding="utf-8"))
        if not isinstance(doc, dict) or not ({"valence", "group"} & set(doc)):
            raise ConfigError("fixture params must contain 'valence' and/or 'group'")
        seed = args.seed if args.seed is not None else doc.get("seed", 0)
        if "valence" in doc:
            params = params_from_json({**doc["valence"], "seed": seed})
            images, texts = generate_valence_corpus(params)
            written["images_valence"] = images
            written["text_valence"] = texts
        if "group" in doc:
            params = params_from_json({**doc["group"], "seed": seed})
            images, texts = generate_group_corpus(params)
            written["images_group"] = images
            written["text_group"] = texts
    for name, corpus in written.items():
        manifest, matrix = corpus_paths(out / name)
        save_corpus(corpus, manifest, matrix)
        print(f"wrote {manifest} and {matrix} ({corpus.count} x {corpus.dim})")
    return 0


# -- run config ------------------------------------------------------------------

def _load_config(args) -> tuple[dict[str, dict[str, EmbeddingCorpus]],
                                list[ExperimentSpec], Path, int]:
    doc: dict = {}
    if args.config:
        doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(doc, dict):
            raise ConfigError("run config must be a JSON object")
    seed = args.seed if args.seed is not None else doc.get("seed")
    jobs = args.jobs if args.jobs is not None else int(doc.get("jobs", 1))

    specs: list[ExperimentSpec] = []
    preset_names = list(args.preset)
    if not preset_names:
        preset_names = list(doc.get("presets", []))
        if isinstance(doc.get("preset"), str):
            preset_names.append(doc["preset"])
    for name in preset_names:
        if name == "all":
            specs.extend(preset(p) for p in PRESET_NAMES)
        elif name == "all-small":
            specs.extend(preset(f"{p}/small") for p in PRESET_NAMES)
        else:
            specs.append(preset(name))
    for spec_doc in doc.get("specs", []):
        specs.append(spec_from_json_dict(spec_doc))
    if isinstance(doc.get("spec"), dict):
        specs.append(spec_from_json_dict(doc["spec"]))
    if not specs:
        raise ConfigError("no experiments requested: pass --preset or put "
                          "'presets'/'specs' in the config")
    if seed is not None:
        specs = [replace(spec, seed=int(seed)) for spec in specs]
    effective_seed = int(seed) if seed is not None else 0

    corpora_by_model: dict[str, dict[str, EmbeddingCorpus]] = {}
    if args.synth_default:
        corpora_by_model["synthetic"] = default_model_fixture(effective_seed)
    for model, paths in doc.get("corpora", {}).items():
        loaded = {}
        for name, base in paths.items():
            manifest, matrix = corpus_paths(base)
            loaded[name] = load_corpus(manifest, matrix)
        corpora_by_model[model] = loaded
    if not corpora_by_model:
        raise ConfigError("no corpora: pass --synth-default or put 'corpora' "
                          "in the config")

    out = Path(args.output or doc.get("output_dir", "out"))
    return corpora_by_model, specs, out, jobs


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def _cmd_run(args) -> int:
    corpora_by_model, specs, out, jobs = _load_config(args)
    if len(specs) != 1:
        raise ConfigError("'run' takes exactly one experiment; use 'suite' for many")
    if len(corpora_by_model) != 1:
        raise ConfigError("'run' takes exactly one model; use 'suite' for many")
    (model, corpora), = corpora_by_model.items()
    report = run_experiment(specs[0], corpora, jobs=jobs)
    _write(out / "report.json", json_dumps(report_to_json_dict(report)))
    _write(out / "report.csv",
           "\n".join([CSV_HEADER] + report_csv_rows(report, model)) + "\n")
    lines = [f"experiment {report.spec.name} on model {model} "
             f"({report.n_targets} targets, templates {list(report.template_ids)})"]
    for c in report.correlations:
        lines.append(f"  {c.stratum}: rho = {c.rho:+.6f} (p = {c.p_value:.3g}, "
                     f"n = {c.n}, {c.method})")
    summary = "\n".join(lines) + "\n"
    _write(out / "summary.txt", summary)
    print(summary, end="")
    return 0


def _cmd_sceat(args) -> int:
    corpora_by_model, specs, out, jobs = _load_config(args)
    if len(specs) != 1 or len(corpora_by_model) != 1:
        raise ConfigError("'sceat' takes exactly one experiment and one model")
    (model, corpora), = corpora_by_model.items()
    spec = specs[0]
    records = intrinsic_profile(spec, corpora, jobs=jobs)
    doc = {
        "schema": "sceat-profile/1",
        "engine_version": ENGINE_VERSION,
        "seed": spec.seed,
        "experiment": spec.name,
        "model": model,
        "records": [{"target": r.target, "group": r.group, "intrinsic": r.intrinsic}
                    for r in records],
    }
    _write(out / "sceat.json", json_dumps(doc))
    label = _policy_label(spec.template_policy)
    rows = [f"{spec.name},{model},{r.group or ''},{label},{r.intrinsic!r},"
            for r in records]
    _write(out / "sceat.csv", "\n".join([CSV_HEADER] + rows) + "\n")
    print(f"wrote {len(records)} intrinsic records to {out / 'sceat.json'}")
    return 0


def _cmd_suite(args) -> int:
    corpora_by_model, specs, out, jobs = _load_config(args)
    suite = run_suite(specs, corpora_by_model, jobs=jobs)
    _write(out / "suite.json", json_dumps(suite_to_json_dict(suite)))
    _write(out / "suite.csv", suite_csv(suite))
    lines = [f"suite: {len(suite.experiments)} experiment runs, "
             f"{suite.scenario_count} scenarios"]
    for s in suite.scenarios:
        lines.append(f"  {s.model} {s.experiment} [{s.stratum}]: "
                     f"rho = {s.rho:+.6f} (p = {s.p_value:.3g}, n = {s.n})")
    for model, name, err in suite.failures:
        lines.append(f"  FAILED {model} {name}: {err}")
    lines.append(f"rho = {suite.rho_mean:.4f} ± {suite.rho_std:.4f} "
                 f"over {suite.scenario_count} scenarios")
    summary = "\n".join(lines) + "\n"
    _write(out / "summary.txt", summary)
    print(summary, end="")
    return 0


def _cmd_oracle_check(args) -> int:
    corpora_by_model, specs, out, jobs = _load_config(args)
    worst = 0.0
    lines = []
    for model in sorted(corpora_by_model):
        for spec in specs:
            engine_report = run_experiment(spec, corpora_by_model[model], jobs=jobs)
            oracle_report = oracle_run(spec, corpora_by_model[model])
            delta = compare_reports(engine_report, oracle_report)
            worst = max(worst, delta)
            lines.append(f"  {model} {spec.name}: max |drho| = {delta:.3e}")
    ok = worst <= ORACLE_TOLERANCE
    lines.append(f"max |drho| = {worst:.3e} over {len(lines)} runs "
                 f"(tolerance {ORACLE_TOLERANCE:.0e}): {'OK' if ok else 'FAIL'}")
    text = "\n".join(lines) + "\n"
    _write(out / "oracle-check.txt", text)
    print(text, end="")
    return 0 if ok else 1


if __name__ == "__main__":
    sys.exit(main())
