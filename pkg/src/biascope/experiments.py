"""End-to-end propagation experiments and the eight preset configurations.

One experiment measures, for every target item: (1) an intrinsic association
effect size against an attribute pair, (2) a top-k cross-modal retrieval,
(3) an extrinsic score over the retrieved items, and finally (4) the Spearman
correlation between intrinsic and extrinsic values per stratum.

When templated text corpora are involved, steps 1-3 run once per template id
and the per-target intrinsic and extrinsic values are averaged across
templates before correlating. Text targets are identified across templates by
their id stem (``<stem>#t<template_id>``).

Group attribute pairs come in two shapes:

* targets carry group labels (group-group baselines): each target is measured
  against its own group's one-vs-all pair, and strata partition the targets
  by group;
* targets carry no group labels (group-signal probes on valence corpora):
  every target is measured against all six group pairs, yielding one
  correlation per group over the full target set.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np

from ._version import ENGINE_VERSION
from .association import build_group_one_vs_all, sc_eat
from .corpus import (
    GROUPS,
    AttributeSetPair,
    EmbeddingCorpus,
    ItemMeta,
    ItemSubset,
    stem_of,
    top_valence_split,
)
from .errors import (
    BiascopeError,
    ConfigError,
    ConstantInput,
    DegenerateSpread,
    DimensionMismatch,
    EmptyInput,
    KTooLarge,
    LengthMismatch,
    MalformedTemplateBlock,
    MissingGroupLabel,
    MissingValence,
    SelectorEmpty,
    TooFewSamples,
    UnknownPreset,
)
from .metrics import group_proportion, mean_valence
from .retrieval import top_k
from .stats import aggregate, spearman, zscore

DIRECTIONS = ("image_to_text", "text_to_image")
CONTENTS = ("valence", "group")
EXTRINSICS = ("mean_valence", "group_proportion")
POLICY_MODES = ("average_over_templates", "single_template", "not_applicable")


# -- spec ----------------------------------------------------------------------

@dataclass(frozen=True)
class Selector:
    """Names a corpus and optionally narrows it by metadata.

    ``valence_extremes`` (target selectors only) restricts the selection to
    the n most and n least valenced targets.
    """

    corpus: str
    modality: str | None = None
    group: str | None = None
    template_id: int | None = None
    source: str | None = None
    valence_extremes: int | None = None


@dataclass(frozen=True)
class AttributeBuilder:
    kind: str  # "valence_poles" | "group_one_vs_all"
    n: int
    corpus: str


@dataclass(frozen=True)
class TemplatePolicy:
    mode: str  # one of POLICY_MODES
    template_id: int | None = None  # required for single_template


@dataclass(frozen=True)
class ExperimentSpec:
    name: str
    direction: str
    content: str
    target_selector: Selector
    attribute_builder: AttributeBuilder
    retrieval_corpus_selector: Selector
    k: int
    extrinsic: str
    stratify_by_group: bool
    template_policy: TemplatePolicy
    seed: int

    def validate(self) -> None:
        if self.direction not in DIRECTIONS:
            raise ConfigError(f"direction must be one of {DIRECTIONS}")
        if self.content not in CONTENTS:
            raise ConfigError(f"content must be one of {CONTENTS}")
        if self.extrinsic not in EXTRINSICS:
            raise ConfigError(f"extrinsic must be one of {EXTRINSICS}")
        if self.attribute_builder.kind not in ("valence_poles", "group_one_vs_all"):
            raise ConfigError("attribute_builder.kind must be "
                              "valence_poles or group_one_vs_all")
        expected_kind = "valence_poles" if self.content == "valence" else "group_one_vs_all"
        if self.attribute_builder.kind != expected_kind:
            raise ConfigError(
                f"content {self.content!r} requires attribute builder {expected_kind!r}")
        if self.attribute_builder.n < 1:
            raise ConfigError("attribute_builder.n must be positive")
        if self.k < 1:
            raise ConfigError("k must be positive")
        if self.template_policy.mode not in POLICY_MODES:
            raise ConfigError(f"template_policy.mode must be one of {POLICY_MODES}")
        if self.template_policy.mode == "single_template" \
                and self.template_policy.template_id is None:
            raise ConfigError("single_template policy needs a template_id")
        if self.retrieval_corpus_selector.valence_extremes is not None:
            raise ConfigError("valence_extremes applies only to the target selector")


# -- spec (de)serialization -----------------------------------------------------

_SPEC_FIELDS = ("name", "direction", "content", "target_selector",
                "attribute_builder", "retrieval_corpus_selector", "k",
                "extrinsic", "stratify_by_group", "template_policy", "seed")
_SELECTOR_FIELDS = ("corpus", "modality", "group", "template_id", "source",
                    "valence_extremes")


def _selector_to_json(sel: Selector) -> dict:
    doc = {"corpus": sel.corpus}
    for f in _SELECTOR_FIELDS[1:]:
        v = getattr(sel, f)
        if v is not None:
            doc[f] = v
    return doc


def _selector_from_json(doc: object, where: str) -> Selector:
    if not isinstance(doc, dict) or "corpus" not in doc:
        raise ConfigError(f"{where}: selector must be an object with a corpus name")
    unknown = set(doc) - set(_SELECTOR_FIELDS)
    if unknown:
        raise ConfigError(f"{where}: unknown selector fields {sorted(unknown)}")
    return Selector(**doc)


def spec_to_json_dict(spec: ExperimentSpec) -> dict:
    policy: dict = {"mode": spec.template_policy.mode}
    if spec.template_policy.template_id is not None:
        policy["template_id"] = spec.template_policy.template_id
    return {
        "name": spec.name,
        "direction": spec.direction,
        "content": spec.content,
        "target_selector": _selector_to_json(spec.target_selector),
        "attribute_builder": {"kind": spec.attribute_builder.kind,
                              "n": spec.attribute_builder.n,
                              "corpus": spec.attribute_builder.corpus},
        "retrieval_corpus_selector": _selector_to_json(spec.retrieval_corpus_selector),
        "k": spec.k,
        "extrinsic": spec.extrinsic,
        "stratify_by_group": spec.stratify_by_group,
        "template_policy": policy,
        "seed": spec.seed,
    }


def spec_from_json_dict(doc: object) -> ExperimentSpec:
    if not isinstance(doc, dict):
        raise ConfigError("experiment spec must be a JSON object")
    unknown = set(doc) - set(_SPEC_FIELDS)
    if unknown:
        raise ConfigError(f"unknown experiment spec fields {sorted(unknown)}")
    missing = set(_SPEC_FIELDS) - set(doc)
    if missing:
        raise ConfigError(f"experiment spec missing fields {sorted(missing)}")
    builder = doc["attribute_builder"]
    if not isinstance(builder, dict) or set(builder) != {"kind", "n", "corpus"}:
        raise ConfigError("attribute_builder must have exactly kind, n, corpus")
    policy = doc["template_policy"]
    if not isinstance(policy, dict) or "mode" not in policy \
            or set(policy) - {"mode", "template_id"}:
        raise ConfigError("template_policy must be {mode, template_id?}")
    spec = ExperimentSpec(
        name=str(doc["name"]),
        direction=doc["direction"],
        content=doc["content"],
        target_selector=_selector_from_json(doc["target_selector"], "target_selector"),
        attribute_builder=AttributeBuilder(kind=builder["kind"], n=int(builder["n"]),
                                           corpus=builder["corpus"]),
        retrieval_corpus_selector=_selector_from_json(
            doc["retrieval_corpus_selector"], "retrieval_corpus_selector"),
        k=int(doc["k"]),
        extrinsic=doc["extrinsic"],
        stratify_by_group=bool(doc["stratify_by_group"]),
        template_policy=TemplatePolicy(mode=policy["mode"],
                                       template_id=policy.get("template_id")),
        seed=int(doc["seed"]),
    )
    spec.validate()
    return spec


# -- report --------------------------------------------------------------------

@dataclass(frozen=True)
class TargetRecord:
    target: str
    group: str | None
    intrinsic: float
    extrinsic: float


@dataclass(frozen=True)
class StratumCorrelation:
    stratum: str  # "overall" or a group label
    rho: float
    p_value: float
    n: int
    method: str


@dataclass(frozen=True)
class ExperimentReport:
    spec: ExperimentSpec
    engine_version: str
    seed: int
    corpus_fingerprints: Mapping[str, str]
    template_ids: tuple[int, ...]
    n_targets: int
    records: tuple[TargetRecord, ...]
    correlations: tuple[StratumCorrelation, ...]
    intrinsic_group_zmeans: Mapping[str, float] | None


def report_to_json_dict(report: ExperimentReport) -> dict:
    return {
        "schema": "experiment-report/1",
        "engine_version": report.engine_version,
        "seed": report.seed,
        "spec": spec_to_json_dict(report.spec),
        "corpus_fingerprints": dict(report.corpus_fingerprints),
        "template_ids": list(report.template_ids),
        "n_targets": report.n_targets,
        "records": [{"target": r.target, "group": r.group,
                     "intrinsic": r.intrinsic, "extrinsic": r.extrinsic}
                    for r in report.records],
        "correlations": [{"stratum": c.stratum, "rho": c.rho, "p_value": c.p_value,
                          "n": c.n, "method": c.method}
                         for c in report.correlations],
        "intrinsic_group_zscored_means": (
            dict(report.intrinsic_group_zmeans)
            if report.intrinsic_group_zmeans is not None else None),
    }


def _policy_label(policy: TemplatePolicy) -> str:
    if policy.mode == "single_template":
        return f"single_template:{policy.template_id}"
    return policy.mode


def report_csv_rows(report: ExperimentReport, model_tag: str) -> list[str]:
    """One CSV line per target record: experiment, model, group, template policy, intrinsic, extrinsic."""
    label = _policy_label(report.spec.template_policy)
    return [
        f"{report.spec.name},{model_tag},{r.group or ''},{label},{r.intrinsic!r},{r.extrinsic!r}"
        for r in report.records
    ]


CSV_HEADER = "experiment,model,group,template_policy,intrinsic,extrinsic"


# -- internal planning ----------------------------------------------------------

@dataclass(frozen=True)
class _Entity:
    """One correlation point: a corpus item, or a text stem across templates."""

    key: str
    group: str | None
    valence: float | None
    rows: Mapping[int | None, int]

    def row_for(self, template_id: int | None) -> int:
        if template_id in self.rows:
            return self.rows[template_id]
        return self.rows[None]

    def min_row(self) -> int:
        return min(self.rows.values())


def _apply_selector(corpus: EmbeddingCorpus, sel: Selector) -> ItemSubset:
    return corpus.filter(modality=sel.modality, group=sel.group,
                         template_id=sel.template_id, source=sel.source)


def _scope_template_ids(items: Sequence[ItemMeta]) -> tuple[int, ...]:
    return tuple(sorted({it.template_id for it in items if it.template_id is not None}))


def _group_by_stem(items: Sequence[ItemMeta],
                   template_ids: tuple[int, ...]) -> list[_Entity]:
    by_stem: dict[str, dict[int, ItemMeta]] = {}
    for it in items:
        if it.template_id is None:
            raise MalformedTemplateBlock(
                f"item {it.id!r} has no template_id in a templated target corpus")
        block = by_stem.setdefault(stem_of(it), {})
        if it.template_id in block:
            raise MalformedTemplateBlock(
                f"stem {stem_of(it)!r} has duplicate template {it.template_id}")
        block[it.template_id] = it
    entities = []
    for stem, block in by_stem.items():
        if tuple(sorted(block)) != template_ids:
            raise MalformedTemplateBlock(
                f"stem {stem!r} covers templates {sorted(block)}, expected {list(template_ids)}")
        groups = {it.group for it in block.values()}
        valences = {it.valence for it in block.values()}
        if len(groups) > 1 or len(valences) > 1:
            raise MalformedTemplateBlock(f"stem {stem!r} has inconsistent metadata")
        entities.append(_Entity(key=stem, group=groups.pop(), valence=valences.pop(),
                                rows={t: it.row for t, it in block.items()}))
    entities.sort(key=lambda e: e.min_row())
    return entities


def _select_extreme_entities(entities: list[_Entity], n: int) -> list[_Entity]:
    for e in entities:
        if e.valence is None:
            raise MissingValence(e.min_row())
    if len(entities) < 2 * n:
        raise SelectorEmpty(
            f"valence_extremes={n} needs {2 * n} rated targets, have {len(entities)}")
    top = sorted(entities, key=lambda e: (-e.valence, e.key))[:n]
    taken = {e.key for e in top}
    rest = [e for e in entities if e.key not in taken]
    bottom = sorted(rest, key=lambda e: (e.valence, e.key))[:n]
    keep = {e.key for e in top} | {e.key for e in bottom}
    return [e for e in entities if e.key in keep]


def _child_seed(seed: int, template_id: int | None, group_index: int) -> int:
    t_slot = 0 if template_id is None else template_id + 1
    ss = np.random.SeedSequence(seed, spawn_key=(t_slot, group_index))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass
class _Plan:
    spec: ExperimentSpec
    target_corpus: EmbeddingCorpus
    attr_corpus: EmbeddingCorpus
    retr_corpus: EmbeddingCorpus
    template_ids: tuple[int | None, ...]
    entities: list[_Entity]
    pair_mode: str  # "single" | "own_group" | "per_group"
    pair_groups: tuple[str, ...]  # groups needing pairs (GROUPS order)
    pairs: dict[tuple[int | None, str | None], AttributeSetPair]
    retrieval_scopes: dict[int | None, ItemSubset]


def _resolve_plan(spec: ExperimentSpec, corpora: Mapping[str, EmbeddingCorpus],
                  with_retrieval: bool = True) -> _Plan:
    spec.validate()

    def corpus_for(name: str) -> EmbeddingCorpus:
        if name not in corpora:
            raise ConfigError(f"corpus {name!r} not provided "
                              f"(available: {sorted(corpora)})")
        return corpora[name]

    target_c = corpus_for(spec.target_selector.corpus)
    attr_c = corpus_for(spec.attribute_builder.corpus)
    retr_c = corpus_for(spec.retrieval_corpus_selector.corpus)
    if not (target_c.dim == attr_c.dim == retr_c.dim):
        raise DimensionMismatch(
            f"corpora dims differ: target {target_c.dim}, "
            f"attributes {attr_c.dim}, retrieval {retr_c.dim}")

    target_modality = "image" if spec.direction == "image_to_text" else "text"
    retr_modality = "text" if spec.direction == "image_to_text" else "image"

    target_subset = _apply_selector(target_c, spec.target_selector)
    target_items = target_subset.items()
    if not target_items:
        raise SelectorEmpty(f"target selector matched nothing in "
                            f"{spec.target_selector.corpus!r}")
    if any(it.modality != target_modality for it in target_items):
        raise ConfigError(f"direction {spec.direction} requires {target_modality} targets")

    retr_all = _apply_selector(retr_c, spec.retrieval_corpus_selector)
    retr_items = retr_all.items()
    if not retr_items:
        raise SelectorEmpty("retrieval selector matched nothing in "
                            f"{spec.retrieval_corpus_selector.corpus!r}")
    if any(it.modality != retr_modality for it in retr_items):
        raise ConfigError(
            f"direction {spec.direction} requires a {retr_modality} retrieval corpus")

    attr_all = attr_c.all_rows()
    attr_items = attr_all.items()
    if not attr_items:
        raise SelectorEmpty(f"attribute corpus {spec.attribute_builder.corpus!r} is empty")

    # template plan
    policy = spec.template_policy
    target_tids = _scope_template_ids(target_items)
    attr_tids = _scope_template_ids(attr_items)
    retr_tids = _scope_template_ids(retr_items)
    if policy.mode == "not_applicable":
        template_ids: tuple[int | None, ...] = (None,)
    elif policy.mode == "single_template":
        template_ids = (policy.template_id,)
    else:
        present = [tids for tids in (target_tids, attr_tids, retr_tids) if tids]
        if not present:
            template_ids = (None,)
        else:
            if any(tids != present[0] for tids in present):
                raise MalformedTemplateBlock(
                    f"templated corpora disagree on template ids: "
                    f"targets {list(target_tids)}, attributes {list(attr_tids)}, "
                    f"retrieval {list(retr_tids)}")
            template_ids = present[0]

    # target entities
    slicing = policy.mode != "not_applicable"
    if policy.mode == "average_over_templates" and target_tids and template_ids != (None,):
        entities = _group_by_stem(target_items, tuple(t for t in template_ids))
    else:
        if policy.mode == "single_template" and target_tids:
            target_items = [it for it in target_items
                            if it.template_id == policy.template_id]
            if not target_items:
                raise SelectorEmpty(
                    f"no targets carry template_id {policy.template_id}")
        entities = [_Entity(key=it.id, group=it.group, valence=it.valence,
                            rows={None: it.row}) for it in target_items]
    if spec.target_selector.valence_extremes is not None:
        entities = _select_extreme_entities(entities, spec.target_selector.valence_extremes)

    # pair mode
    builder = spec.attribute_builder
    if builder.kind == "valence_poles":
        pair_mode = "single"
        pair_groups: tuple[str, ...] = ()
    else:
        labeled = [e.group is not None for e in entities]
        if all(labeled):
            pair_mode = "own_group"
            pair_groups = tuple(g for g in GROUPS if any(e.group == g for e in entities))
        elif not any(labeled):
            pair_mode = "per_group"
            pair_groups = GROUPS
        else:
            raise ConfigError("targets mix group-labeled and unlabeled items")
    if pair_mode == "per_group" and not spec.stratify_by_group:
        raise ConfigError("group pairs over unlabeled targets require "
                          "stratify_by_group=true (one correlation per group)")

    # attribute pairs per template slice
    attr_sliced = slicing and bool(attr_tids)
    pairs: dict[tuple[int | None, str | None], AttributeSetPair] = {}
    for t in template_ids:
        scope = attr_c.filter(template_id=t) if (attr_sliced and t is not None) else attr_all
        if builder.kind == "valence_poles":
            pairs[(t, None)] = top_valence_split(attr_c, scope, builder.n)
        else:
            for g in pair_groups:
                seed = _child_seed(spec.seed, t, GROUPS.index(g))
                pairs[(t, g)] = build_group_one_vs_all(
                    attr_c, g, builder.n, seed, within=scope)

    # retrieval scopes per template slice
    retr_sliced = slicing and bool(retr_tids) and spec.retrieval_corpus_selector.template_id is None
    retrieval_scopes: dict[int | None, ItemSubset] = {}
    if with_retrieval:
        for t in template_ids:
            if retr_sliced and t is not None:
                sel = replace(spec.retrieval_corpus_selector, template_id=t)
                scope = _apply_selector(retr_c, sel)
            else:
                scope = retr_all
            if len(scope) == 0:
                raise SelectorEmpty(f"retrieval slice for template {t} is empty")
            if spec.k > len(scope):
                raise KTooLarge(f"k={spec.k} exceeds retrieval slice of {len(scope)} "
                                f"items (template {t})")
            _check_extrinsic_metadata(spec.extrinsic, scope)
            retrieval_scopes[t] = scope

    return _Plan(spec=spec, target_corpus=target_c, attr_corpus=attr_c,
                 retr_corpus=retr_c, template_ids=template_ids, entities=entities,
                 pair_mode=pair_mode, pair_groups=pair_groups, pairs=pairs,
                 retrieval_scopes=retrieval_scopes)


def _check_extrinsic_metadata(extrinsic: str, scope: ItemSubset) -> None:
    for it in scope.items():
        if extrinsic == "mean_valence" and it.valence is None:
            raise MissingValence(it.row)
        if extrinsic == "group_proportion" and it.group is None:
            raise MissingGroupLabel(it.row)


# -- execution -------------------------------------------------------------------

def _measure_entity(plan: _Plan, entity: _Entity, with_retrieval: bool
                    ) -> tuple[dict[str | None, float], dict[str | None, float]]:
    """Template-averaged intrinsic and extrinsic values for one entity."""
    spec = plan.spec
    if plan.pair_mode == "single":
        gkeys: tuple[str | None, ...] = (None,)
    elif plan.pair_mode == "own_group":
        gkeys = (entity.group,)
    else:
        gkeys = plan.pair_groups
    intr: dict[str | None, list[float]] = {g: [] for g in gkeys}
    extr: dict[str | None, list[float]] = {g: [] for g in gkeys}
    for t in plan.template_ids:
        row = entity.row_for(t)
        w = plan.target_corpus.matrix64[row]
        for g in gkeys:
            pair = plan.pairs[(t, None if plan.pair_mode == "single" else g)]
            intr[g].append(sc_eat(w, pair, target_row=row).value)
        if with_retrieval:
            result = top_k(w, plan.retrieval_scopes[t], spec.k, query_row=row)
            if spec.extrinsic == "mean_valence":
                value = mean_valence(result, plan.retr_corpus).value
                for g in gkeys:
                    extr[g].append(value)
            else:
                for g in gkeys:
                    target_group = entity.group if plan.pair_mode == "own_group" else g
                    extr[g].append(
                        group_proportion(result, plan.retr_corpus, target_group).value)
    return ({g: _template_average(v) for g, v in intr.items()},
            {g: _template_average(v) for g, v in extr.items()}
            if with_retrieval else {})


def _template_average(vals: list[float]) -> float:
    """Mean across templates, canonical for rank statistics.

    Sorted + exactly-rounded summation so per-template multisets with equal
    true sums average to identical floats; identical values average to
    themselves bit-exactly.
    """
    s = sorted(vals)
    if s[0] == s[-1]:
        return s[0]
    return math.fsum(s) / len(s)


def _build_records(plan: _Plan, measured: list[tuple[dict, dict]],
                   with_retrieval: bool) -> tuple[TargetRecord, ...]:
    records = []
    for entity, (intr, extr) in zip(plan.entities, measured):
        if plan.pair_mode == "per_group":
            for g in plan.pair_groups:
                records.append(TargetRecord(
                    target=entity.key, group=g, intrinsic=intr[g],
                    extrinsic=extr[g] if with_retrieval else float("nan")))
        else:
            gkey = None if plan.pair_mode == "single" else entity.group
            records.append(TargetRecord(
                target=entity.key, group=entity.group, intrinsic=intr[gkey],
                extrinsic=extr[gkey] if with_retrieval else float("nan")))
    return tuple(records)


def _correlate(plan: _Plan, records: tuple[TargetRecord, ...]
               ) -> tuple[StratumCorrelation, ...]:
    spec = plan.spec

    def corr(stratum: str, subset: list[TargetRecord]) -> StratumCorrelation:
        try:
            c = spearman([r.intrinsic for r in subset], [r.extrinsic for r in subset])
        except (TooFewSamples, ConstantInput, LengthMismatch) as exc:
            raise type(exc)(f"stratum {stratum!r}: {exc}") from exc
        return StratumCorrelation(stratum=stratum, rho=c.rho, p_value=c.p_value,
                                  n=c.n, method=c.method)

    if not spec.stratify_by_group:
        return (corr("overall", list(records)),)
    if plan.pair_mode == "per_group":
        return tuple(corr(g, [r for r in records if r.group == g])
                     for g in plan.pair_groups)
    if any(r.group is None for r in records):
        raise ConfigError("stratify_by_group=true requires group-labeled targets")
    strata = tuple(g for g in GROUPS if any(r.group == g for r in records))
    return tuple(corr(g, [r for r in records if r.group == g]) for g in strata)


def _zscored_group_means(records: tuple[TargetRecord, ...]) -> dict[str, float] | None:
    labeled = [r for r in records if r.group is not None]
    if len(labeled) != len(records) or len(records) < 2:
        return None
    try:
        z = zscore(np.asarray([r.intrinsic for r in records]))
    except (DegenerateSpread, TooFewSamples):
        return None
    means: dict[str, float] = {}
    for g in GROUPS:
        idx = [i for i, r in enumerate(records) if r.group == g]
        if idx:
            means[g] = float(np.mean(z[idx]))
    return means


def run_experiment(spec: ExperimentSpec, corpora: Mapping[str, EmbeddingCorpus],
                   jobs: int = 1) -> ExperimentReport:
    """Run one propagation experiment; deterministic for fixed (spec, corpora)."""
    plan = _resolve_plan(spec, corpora, with_retrieval=True)
    measured = _measure_all(plan, jobs, with_retrieval=True)
    records = _build_records(plan, measured, with_retrieval=True)
    correlations = _correlate(plan, records)
    used = {spec.target_selector.corpus, spec.attribute_builder.corpus,
            spec.retrieval_corpus_selector.corpus}
    fingerprints = {name: corpora[name].fingerprint() for name in sorted(used)}
    return ExperimentReport(
        spec=spec,
        engine_version=ENGINE_VERSION,
        seed=spec.seed,
        corpus_fingerprints=fingerprints,
        template_ids=tuple(t for t in plan.template_ids if t is not None),
        n_targets=len(plan.entities),
        records=records,
        correlations=correlations,
        intrinsic_group_zmeans=_zscored_group_means(records),
    )


def _measure_all(plan: _Plan, jobs: int, with_retrieval: bool) -> list[tuple[dict, dict]]:
    if jobs <= 1 or len(plan.entities) <= 1:
        return [_measure_entity(plan, e, with_retrieval) for e in plan.entities]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda e: _measure_entity(plan, e, with_retrieval),
                             plan.entities))


def intrinsic_profile(spec: ExperimentSpec, corpora: Mapping[str, EmbeddingCorpus],
                      jobs: int = 1) -> tuple[TargetRecord, ...]:
    """Intrinsic effect sizes only (no retrieval); extrinsic is NaN."""
    plan = _resolve_plan(spec, corpora, with_retrieval=False)
    measured = _measure_all(plan, jobs, with_retrieval=False)
    return _build_records(plan, measured, with_retrieval=False)


# -- presets ---------------------------------------------------------------------

_VALENCE_POLES_N = 25
_GROUP_N_FULL = 140
_GROUP_N_SMALL = 20
_K_FULL = 500
_K_SMALL = 50

PRESET_NAMES = ("1*-a", "1*-b", "2*-a", "2*-b", "1-a", "1-b", "2-a", "2-b")


def _base_preset(name: str) -> ExperimentSpec:
    avg = TemplatePolicy("average_over_templates")
    poles = lambda corpus: AttributeBuilder("valence_poles", _VALENCE_POLES_N, corpus)
    one_vs_all = lambda corpus: AttributeBuilder("group_one_vs_all", _GROUP_N_FULL, corpus)
    common = dict(k=_K_FULL, template_policy=avg, seed=0)
    if name == "1*-a":
        return ExperimentSpec(
            name=name, direction="image_to_text", content="valence",
            target_selector=Selector("images_valence", modality="image",
                                     valence_extremes=_VALENCE_POLES_N),
            attribute_builder=poles("text_valence"),
            retrieval_corpus_selector=Selector("text_valence", modality="text"),
            extrinsic="mean_valence", stratify_by_group=False, **common)
    if name == "1*-b":
        return ExperimentSpec(
            name=name, direction="text_to_image", content="valence",
            target_selector=Selector("text_valence", modality="text",
                                     valence_extremes=_VALENCE_POLES_N),
            attribute_builder=poles("images_valence"),
            retrieval_corpus_selector=Selector("images_valence", modality="image"),
            extrinsic="mean_valence", stratify_by_group=False, **common)
    if name == "2*-a":
        return ExperimentSpec(
            name=name, direction="image_to_text", content="group",
            target_selector=Selector("images_group", modality="image"),
            attribute_builder=one_vs_all("text_group"),
            retrieval_corpus_selector=Selector("text_group", modality="text"),
            extrinsic="group_proportion", stratify_by_group=True, **common)
    if name == "2*-b":
        return ExperimentSpec(
            name=name, direction="text_to_image", content="group",
            target_selector=Selector("text_group", modality="text"),
            attribute_builder=one_vs_all("images_group"),
            retrieval_corpus_selector=Selector("images_group", modality="image"),
            extrinsic="group_proportion", stratify_by_group=True, **common)
    if name == "1-a":
        return ExperimentSpec(
            name=name, direction="image_to_text", content="valence",
            target_selector=Selector("images_group", modality="image"),
            attribute_builder=poles("text_valence"),
            retrieval_corpus_selector=Selector("text_valence", modality="text"),
            extrinsic="mean_valence", stratify_by_group=True, **common)
    if name == "1-b":
        return ExperimentSpec(
            name=name, direction="text_to_image", content="valence",
            target_selector=Selector("text_group", modality="text"),
            attribute_builder=poles("images_valence"),
            retrieval_corpus_selector=Selector("images_valence", modality="image"),
            extrinsic="mean_valence", stratify_by_group=True, **common)
    if name == "2-a":
        return ExperimentSpec(
            name=name, direction="image_to_text", content="group",
            target_selector=Selector("images_valence", modality="image"),
            attribute_builder=one_vs_all("text_group"),
            retrieval_corpus_selector=Selector("text_group", modality="text"),
            extrinsic="group_proportion", stratify_by_group=True, **common)
    if name == "2-b":
        return ExperimentSpec(
            name=name, direction="text_to_image", content="group",
            target_selector=Selector("text_valence", modality="text"),
            attribute_builder=one_vs_all("images_group"),
            retrieval_corpus_selector=Selector("images_group", modality="image"),
            extrinsic="group_proportion", stratify_by_group=True, **common)
    raise UnknownPreset(f"unknown preset {name!r}")


def preset(name: str) -> ExperimentSpec:
    """One of the eight experiment presets, or its ``<name>/small`` variant.

    Small variants shrink the retrieval depth to k=50 and group sampling to
    20 per group so oracle comparisons run in seconds on synthetic fixtures.
    """
    small = False
    base_name = name
    if name.endswith("/small"):
        small = True
        base_name = name[: -len("/small")]
    if base_name not in PRESET_NAMES:
        raise UnknownPreset(f"unknown preset {name!r}; choose from "
                            f"{PRESET_NAMES} (optionally with /small)")
    spec = _base_preset(base_name)
    if small:
        builder = spec.attribute_builder
        if builder.kind == "group_one_vs_all":
            builder = replace(builder, n=_GROUP_N_SMALL)
        spec = replace(spec, name=name, k=_K_SMALL, attribute_builder=builder)
    return spec


# -- suite -----------------------------------------------------------------------

@dataclass(frozen=True)
class SuiteScenario:
    model: str
    experiment: str
    stratum: str
    rho: float
    p_value: float
    n: int
    method: str


@dataclass(frozen=True)
class SuiteReport:
    engine_version: str
    models: tuple[str, ...]
    experiments: tuple[tuple[str, ExperimentReport], ...]  # (model, report)
    scenarios: tuple[SuiteScenario, ...]
    scenario_count: int
    rho_mean: float
    rho_std: float
    failures: tuple[tuple[str, str, str], ...]  # (model, spec name, error)


def run_suite(specs: Sequence[ExperimentSpec],
              corpora_by_model: Mapping[str, Mapping[str, EmbeddingCorpus]],
              jobs: int = 1) -> SuiteReport:
    """Run every spec against every model's corpora and aggregate the rhos."""
    if not specs:
        raise EmptyInput("suite needs at least one experiment spec")
    if not corpora_by_model:
        raise EmptyInput("suite needs at least one model corpus set")
    experiments: list[tuple[str, ExperimentReport]] = []
    scenarios: list[SuiteScenario] = []
    failures: list[tuple[str, str, str]] = []
    for model in sorted(corpora_by_model):
        for spec in specs:
            try:
                report = run_experiment(spec, corpora_by_model[model], jobs=jobs)
            except BiascopeError as exc:
                failures.append((model, spec.name, f"{type(exc).__name__}: {exc}"))
                continue
            experiments.append((model, report))
            for c in report.correlations:
                scenarios.append(SuiteScenario(
                    model=model, experiment=spec.name, stratum=c.stratum,
                    rho=c.rho, p_value=c.p_value, n=c.n, method=c.method))
    if not experiments:
        details = "; ".join(f"{m}/{s}: {e}" for m, s, e in failures)
        raise ConfigError(f"every experiment in the suite failed: {details}")
    agg = aggregate([s.rho for s in scenarios])
    return SuiteReport(
        engine_version=ENGINE_VERSION,
        models=tuple(sorted(corpora_by_model)),
        experiments=tuple(experiments),
        scenarios=tuple(scenarios),
        scenario_count=len(scenarios),
        rho_mean=agg.mean,
        rho_std=agg.std,
        failures=tuple(failures),
    )


def suite_to_json_dict(suite: SuiteReport) -> dict:
    return {
        "schema": "suite-report/1",
        "engine_version": suite.engine_version,
        "models": list(suite.models),
        "experiments": [{"model": model, "report": report_to_json_dict(report)}
                        for model, report in suite.experiments],
        "scenarios": [{"model": s.model, "experiment": s.experiment,
                       "stratum": s.stratum, "rho": s.rho, "p_value": s.p_value,
                       "n": s.n, "method": s.method}
                      for s in suite.scenarios],
        "scenario_count": suite.scenario_count,
        "rho_mean": suite.rho_mean,
        "rho_std": suite.rho_std,
        "failures": [{"model": m, "experiment": s, "error": e}
                     for m, s, e in suite.failures],
    }


def suite_csv(suite: SuiteReport) -> str:
    lines = [CSV_HEADER]
    for model, report in suite.experiments:
        lines.extend(report_csv_rows(report, model))
    return "\n".join(lines) + "\n"


def json_dumps(doc: dict) -> str:
    """Canonical JSON used for all report files (byte-stable across runs)."""
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=True) + "\n"
