"""Naive reference implementation of the experiment pipeline.

Everything measured here is recomputed through deliberately simple code
paths: per-pair cosines with norms recomputed on the fly, retrieval by
building and fully sorting the whole score list, means as plain sums, and a
second Spearman written from scratch on hand-rolled fractional ranks. None of
the engine's arithmetic is reused, so agreement between the two is a real
cross-check of the pipeline.

The pieces that *define* an experiment rather than measure it are shared on
purpose: metadata selection, the seeded one-vs-all sampler (its draws are
part of the experiment definition and could not be reproduced independently),
and the report containers.
"""

from __future__ import annotations

import math
from itertools import permutations

import numpy as np
from scipy.stats import t as student_t

from ._version import ENGINE_VERSION
from .association import build_group_one_vs_all
from .corpus import GROUPS, EmbeddingCorpus, ItemMeta, stem_of
from .errors import (
    ConfigError,
    ConstantInput,
    DegenerateAttributes,
    InsufficientItems,
    KTooLarge,
    MalformedTemplateBlock,
    MissingGroupLabel,
    MissingValence,
    SelectorEmpty,
    TooFewSamples,
)
from .experiments import (
    ExperimentReport,
    ExperimentSpec,
    Selector,
    StratumCorrelation,
    TargetRecord,
)

_EXACT_P_MAX_N = 9


# -- naive arithmetic ------------------------------------------------------------

def _cos(u: np.ndarray, v: np.ndarray) -> float:
    dot = float(np.dot(u, v))
    nu = math.sqrt(float(np.dot(u, u)))
    nv = math.sqrt(float(np.dot(v, v)))
    return dot / (nu * nv)


def _mean(values) -> float:
    return sum(values) / len(values)


def _tmpl_avg(values) -> float:
    # mirrors the engine's canonical template average: sorted, exactly
    # rounded, identical values average to themselves
    s = sorted(values)
    if s[0] == s[-1]:
        return s[0]
    return math.fsum(s) / len(s)


def _sample_std(values) -> float:
    m = _mean(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / (len(values) - 1))


def _naive_ranks(values) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg_rank = (i + j) / 2 + 1.0
        for pos in range(i, j + 1):
            ranks[order[pos]] = avg_rank
        i = j + 1
    return ranks


def _naive_rho(x, y) -> float:
    rx = _naive_ranks(x)
    ry = _naive_ranks(y)
    mx = _mean(rx)
    my = _mean(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))
    if den <= 0.0:
        raise ConstantInput("oracle correlation input has no variance")
    return max(-1.0, min(1.0, num / den))


def _naive_spearman(x, y) -> StratumCorrelation:
    n = len(x)
    if n < 3:
        raise TooFewSamples(f"need n >= 3, have {n}")
    if len(set(x)) == 1 or len(set(y)) == 1:
        raise ConstantInput("oracle correlation inputs must not be constant")
    rho = _naive_rho(x, y)
    if n <= _EXACT_P_MAX_N:
        hits = sum(1 for perm in permutations(y)
                   if abs(_naive_rho(x, list(perm))) >= abs(rho) - 1e-12)
        return StratumCorrelation(stratum="", rho=rho,
                                  p_value=hits / math.factorial(n), n=n,
                                  method="exact_permutation")
    if abs(rho) >= 1.0:
        p = 0.0
    else:
        t_stat = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = min(1.0, max(0.0, 2.0 * float(student_t.sf(abs(t_stat), n - 2))))
    return StratumCorrelation(stratum="", rho=rho, p_value=p, n=n,
                              method="t_approximation")


def _naive_sc_eat(w: np.ndarray, corpus: EmbeddingCorpus,
                  a_rows, b_rows) -> float:
    # value-sorted arrays are part of the effect-size contract (exact
    # antisymmetry and equal-multiset nullity)
    a_cos = sorted(_cos(w, corpus.matrix64[r]) for r in a_rows)
    b_cos = sorted(_cos(w, corpus.matrix64[r]) for r in b_rows)
    spread = _sample_std(sorted(a_cos + b_cos))
    if not spread > 1e-12:
        raise DegenerateAttributes("oracle attribute cosines have no spread")
    return (_mean(a_cos) - _mean(b_cos)) / spread


def _naive_top_k(w: np.ndarray, corpus: EmbeddingCorpus, rows, k: int) -> list[int]:
    scored = [(-_cos(w, corpus.matrix64[r]), r) for r in rows]
    scored.sort()
    return [r for _, r in scored[:k]]


# -- experiment definition (mirrors the engine's documented semantics) ------------

def _select(corpus: EmbeddingCorpus, sel: Selector) -> list[ItemMeta]:
    out = []
    for it in corpus.items:
        if sel.modality is not None and it.modality != sel.modality:
            continue
        if sel.group is not None and it.group != sel.group:
            continue
        if sel.template_id is not None and it.template_id != sel.template_id:
            continue
        if sel.source is not None and it.source != sel.source:
            continue
        out.append(it)
    return out


def _template_ids(items) -> tuple[int, ...]:
    return tuple(sorted({it.template_id for it in items if it.template_id is not None}))


def _child_seed(seed: int, template_id: int | None, group_index: int) -> int:
    t_slot = 0 if template_id is None else template_id + 1
    ss = np.random.SeedSequence(seed, spawn_key=(t_slot, group_index))
    return int(ss.generate_state(1, np.uint64)[0])


class _OracleEntity:
    def __init__(self, key, group, valence, rows):
        self.key = key
        self.group = group
        self.valence = valence
        self.rows = rows  # template id (or None) -> row

    def row_for(self, t):
        return self.rows[t] if t in self.rows else self.rows[None]

    def min_row(self):
        return min(self.rows.values())


def oracle_run(spec: ExperimentSpec, corpora) -> ExperimentReport:
    """Recompute an experiment end to end through the naive paths."""
    spec.validate()
    for name in (spec.target_selector.corpus, spec.attribute_builder.corpus,
                 spec.retrieval_corpus_selector.corpus):
        if name not in corpora:
            raise ConfigError(f"corpus {name!r} not provided")
    target_c = corpora[spec.target_selector.corpus]
    attr_c = corpora[spec.attribute_builder.corpus]
    retr_c = corpora[spec.retrieval_corpus_selector.corpus]

    target_items = _select(target_c, spec.target_selector)
    if not target_items:
        raise SelectorEmpty("oracle: target selector matched nothing")
    retr_items = _select(retr_c, spec.retrieval_corpus_selector)
    if not retr_items:
        raise SelectorEmpty("oracle: retrieval selector matched nothing")
    attr_items = list(attr_c.items)

    policy = spec.template_policy
    target_tids = _template_ids(target_items)
    attr_tids = _template_ids(attr_items)
    retr_tids = _template_ids(retr_items)
    if policy.mode == "not_applicable":
        tids: tuple[int | None, ...] = (None,)
    elif policy.mode == "single_template":
        tids = (policy.template_id,)
    else:
        present = [s for s in (target_tids, attr_tids, retr_tids) if s]
        if not present:
            tids = (None,)
        else:
            if any(s != present[0] for s in present):
                raise MalformedTemplateBlock("oracle: template ids disagree")
            tids = present[0]

    # entities
    if policy.mode == "average_over_templates" and target_tids and tids != (None,):
        blocks: dict[str, dict[int, ItemMeta]] = {}
        for it in target_items:
            blocks.setdefault(stem_of(it), {})[it.template_id] = it
        entities = []
        for stem, block in blocks.items():
            if tuple(sorted(block)) != tids:
                raise MalformedTemplateBlock(f"oracle: stem {stem!r} incomplete")
            any_item = next(iter(block.values()))
            entities.append(_OracleEntity(stem, any_item.group, any_item.valence,
                                          {t: it.row for t, it in block.items()}))
        entities.sort(key=lambda e: e.min_row())
    else:
        items = target_items
        if policy.mode == "single_template" and target_tids:
            items = [it for it in items if it.template_id == policy.template_id]
        entities = [_OracleEntity(it.id, it.group, it.valence, {None: it.row})
                    for it in items]

    if spec.target_selector.valence_extremes is not None:
        n = spec.target_selector.valence_extremes
        for e in entities:
            if e.valence is None:
                raise MissingValence(e.min_row())
        if len(entities) < 2 * n:
            raise InsufficientItems("oracle: not enough rated targets")
        top = sorted(entities, key=lambda e: (-e.valence, e.key))[:n]
        taken = {e.key for e in top}
        rest = [e for e in entities if e.key not in taken]
        bottom = sorted(rest, key=lambda e: (e.valence, e.key))[:n]
        keep = taken | {e.key for e in bottom}
        entities = [e for e in entities if e.key in keep]

    builder = spec.attribute_builder
    if builder.kind == "valence_poles":
        pair_mode = "single"
        pair_groups: tuple[str, ...] = ()
    elif all(e.group is not None for e in entities):
        pair_mode = "own_group"
        pair_groups = tuple(g for g in GROUPS if any(e.group == g for e in entities))
    elif not any(e.group is not None for e in entities):
        pair_mode = "per_group"
        pair_groups = GROUPS
    else:
        raise ConfigError("oracle: targets mix labeled and unlabeled items")

    slicing = policy.mode != "not_applicable"
    pairs: dict[tuple[int | None, str | None], tuple[list[int], list[int]]] = {}
    for t in tids:
        if slicing and attr_tids and t is not None:
            scope = [it for it in attr_items if it.template_id == t]
        else:
            scope = attr_items
        if builder.kind == "valence_poles":
            for it in scope:
                if it.valence is None:
                    raise MissingValence(it.row)
            if len(scope) < 2 * builder.n:
                raise InsufficientItems("oracle: attribute scope too small")
            top = sorted(scope, key=lambda it: (-it.valence, it.id))[:builder.n]
            taken = {it.row for it in top}
            rest = [it for it in scope if it.row not in taken]
            bottom = sorted(rest, key=lambda it: (it.valence, it.id))[:builder.n]
            pairs[(t, None)] = (sorted(it.row for it in top),
                                sorted(it.row for it in bottom))
        else:
            scope_subset = _as_subset(attr_c, scope)
            for g in pair_groups:
                pair = build_group_one_vs_all(
                    attr_c, g, builder.n,
                    _child_seed(spec.seed, t, GROUPS.index(g)),
                    within=scope_subset)
                pairs[(t, g)] = (list(pair.a.indices), list(pair.b.indices))

    retr_scopes: dict[int | None, list[int]] = {}
    retr_sliced = (slicing and retr_tids
                   and spec.retrieval_corpus_selector.template_id is None)
    for t in tids:
        if retr_sliced and t is not None:
            rows = [it.row for it in retr_items if it.template_id == t]
        else:
            rows = [it.row for it in retr_items]
        if spec.k > len(rows):
            raise KTooLarge(f"oracle: k={spec.k} exceeds {len(rows)} candidates")
        retr_scopes[t] = rows

    # measurement
    records: list[TargetRecord] = []
    per_entity: list[tuple[_OracleEntity, dict, dict]] = []
    for e in entities:
        gkeys = ((None,) if pair_mode == "single"
                 else (e.group,) if pair_mode == "own_group" else pair_groups)
        intr = {g: [] for g in gkeys}
        extr = {g: [] for g in gkeys}
        for t in tids:
            w = target_c.matrix64[e.row_for(t)]
            for g in gkeys:
                a_rows, b_rows = pairs[(t, None if pair_mode == "single" else g)]
                intr[g].append(_naive_sc_eat(w, attr_c, a_rows, b_rows))
            retrieved = _naive_top_k(w, retr_c, retr_scopes[t], spec.k)
            if spec.extrinsic == "mean_valence":
                # metrics depend on the retrieved SET only: gather in row order
                vals = []
                for r in sorted(retrieved):
                    if retr_c.items[r].valence is None:
                        raise MissingValence(r)
                    vals.append(retr_c.items[r].valence)
                value = math.fsum(vals) / len(vals)
                for g in gkeys:
                    extr[g].append(value)
            else:
                for r in retrieved:
                    if retr_c.items[r].group is None:
                        raise MissingGroupLabel(r)
                for g in gkeys:
                    want = e.group if pair_mode == "own_group" else g
                    hits = sum(1 for r in retrieved if retr_c.items[r].group == want)
                    extr[g].append(hits / spec.k)
        per_entity.append((e, {g: _tmpl_avg(v) for g, v in intr.items()},
                           {g: _tmpl_avg(v) for g, v in extr.items()}))

    for e, intr, extr in per_entity:
        if pair_mode == "per_group":
            for g in pair_groups:
                records.append(TargetRecord(e.key, g, intr[g], extr[g]))
        else:
            gkey = None if pair_mode == "single" else e.group
            records.append(TargetRecord(e.key, e.group, intr[gkey], extr[gkey]))

    # correlations
    def corr(name: str, subset: list[TargetRecord]) -> StratumCorrelation:
        c = _naive_spearman([r.intrinsic for r in subset],
                            [r.extrinsic for r in subset])
        return StratumCorrelation(stratum=name, rho=c.rho, p_value=c.p_value,
                                  n=c.n, method=c.method)

    if not spec.stratify_by_group:
        correlations = (corr("overall", records),)
    elif pair_mode == "per_group":
        correlations = tuple(corr(g, [r for r in records if r.group == g])
                             for g in pair_groups)
    else:
        strata = tuple(g for g in GROUPS if any(r.group == g for r in records))
        correlations = tuple(corr(g, [r for r in records if r.group == g])
                             for g in strata)

    zmeans = None
    labeled = [r for r in records if r.group is not None]
    if len(labeled) == len(records) and len(records) >= 2:
        vals = [r.intrinsic for r in records]
        std = _sample_std(vals)
        if std > 1e-12:
            m = _mean(vals)
            z = [(v - m) / std for v in vals]
            zmeans = {}
            for g in GROUPS:
                zs = [z[i] for i, r in enumerate(records) if r.group == g]
                if zs:
                    zmeans[g] = _mean(zs)

    used = {spec.target_selector.corpus, spec.attribute_builder.corpus,
            spec.retrieval_corpus_selector.corpus}
    return ExperimentReport(
        spec=spec,
        engine_version=ENGINE_VERSION,
        seed=spec.seed,
        corpus_fingerprints={name: corpora[name].fingerprint()
                             for name in sorted(used)},
        template_ids=tuple(t for t in tids if t is not None),
        n_targets=len(entities),
        records=tuple(records),
        correlations=correlations,
        intrinsic_group_zmeans=zmeans,
    )


def _as_subset(corpus: EmbeddingCorpus, items):
    from .corpus import ItemSubset
    return ItemSubset(corpus, tuple(it.row for it in items))


def compare_reports(engine: ExperimentReport, oracle: ExperimentReport) -> float:
    """Maximum absolute rho difference across matching strata."""
    by_stratum = {c.stratum: c.rho for c in oracle.correlations}
    if {c.stratum for c in engine.correlations} != set(by_stratum):
        raise ConfigError("engine and oracle reports have different strata")
    return max(abs(c.rho - by_stratum[c.stratum]) for c in engine.correlations)
