from __future__ import annotations

import math
from dataclasses import replace

import numpy as np
import pytest

from biascope.association import batch_sc_eat
from biascope.corpus import GROUPS, top_valence_split
from biascope.errors import (
    ConfigError,
    EmptyInput,
    KTooLarge,
    SelectorEmpty,
    UnknownPreset,
)
from biascope.experiments import (
    AttributeBuilder,
    ExperimentSpec,
    Selector,
    TemplatePolicy,
    preset,
    PRESET_NAMES,
    report_to_json_dict,
    run_experiment,
    run_suite,
    spec_from_json_dict,
    spec_to_json_dict,
)
from biascope.metrics import mean_valence
from biascope.retrieval import batch_retrieve
from biascope.stats import spearman
from conftest import make_corpus


def tiny_spec(**overrides) -> ExperimentSpec:
    base = ExperimentSpec(
        name="tiny",
        direction="image_to_text",
        content="valence",
        target_selector=Selector(corpus="imgs", modality="image"),
        attribute_builder=AttributeBuilder(kind="valence_poles", n=2, corpus="txts"),
        retrieval_corpus_selector=Selector(corpus="txts", modality="text"),
        k=2,
        extrinsic="mean_valence",
        stratify_by_group=False,
        template_policy=TemplatePolicy("not_applicable"),
        seed=0,
    )
    return replace(base, **overrides)


def tiny_corpora():
    """Hand-checkable 3-image / 4-text fixture (integer vectors, exact cosines)."""
    imgs = make_corpus([[1, 0], [1, 1], [0, 1]], modality="image",
                       ids=["i0", "i1", "i2"])
    txts = make_corpus([[1, 0], [4, 3], [3, 4], [0, 1]], modality="text",
                       valences=[0.1, 0.4, 0.6, 0.9],
                       ids=["t0", "t1", "t2", "t3"])
    return {"imgs": imgs, "txts": txts}


def test_tiny_run_hand_values():
    report = run_experiment(tiny_spec(), tiny_corpora())
    intr = [r.intrinsic for r in report.records]
    extr = [r.extrinsic for r in report.records]
    es0 = -0.6 / math.sqrt(0.56 / 3)  # pooled cosines {0, .6, 1, .8}
    assert intr[0] == pytest.approx(es0, abs=1e-12)
    assert intr[1] == 0.0
    assert intr[2] == pytest.approx(-es0, abs=1e-12)
    assert extr == pytest.approx([0.25, 0.5, 0.75], abs=1e-12)
    c = report.correlations[0]
    assert c.stratum == "overall" and c.rho == 1.0
    assert c.method == "exact_permutation"
    assert c.p_value == pytest.approx(2 / 6, abs=1e-15)


def test_composition_fidelity():
    """run_experiment equals hand-composing the public module operations."""
    corpora = tiny_corpora()
    report = run_experiment(tiny_spec(), corpora)

    imgs, txts = corpora["imgs"], corpora["txts"]
    pair = top_valence_split(txts, txts.all_rows(), 2)
    intr = [e.value for e in batch_sc_eat(imgs.all_rows(), pair)]
    results = batch_retrieve(imgs.all_rows(), txts.all_rows(), 2)
    extr = [mean_valence(res, txts).value for res in results]
    c = spearman(intr, extr)

    assert [r.intrinsic for r in report.records] == intr
    assert [r.extrinsic for r in report.records] == extr
    assert report.correlations[0].rho == c.rho
    assert report.correlations[0].p_value == c.p_value


def test_spec_json_round_trip_and_strictness():
    spec = preset("2*-a/small")
    doc = spec_to_json_dict(spec)
    assert spec_from_json_dict(doc) == spec
    doc_bad = dict(doc)
    doc_bad["surprise"] = 1
    with pytest.raises(ConfigError):
        spec_from_json_dict(doc_bad)
    doc_missing = dict(doc)
    del doc_missing["k"]
    with pytest.raises(ConfigError):
        spec_from_json_dict(doc_missing)


def test_preset_parameters():
    assert preset("1*-a").k == 500
    assert preset("2*-a").attribute_builder.kind == "group_one_vs_all"
    assert preset("2*-a").attribute_builder.n == 140
    assert preset("1-a").attribute_builder.kind == "valence_poles"
    assert preset("1-a").attribute_builder.n == 25
    assert preset("1*-a").target_selector.valence_extremes == 25
    assert preset("2-b/small").k == 50
    assert preset("2-b/small").attribute_builder.n == 20
    assert preset("1*-b/small").attribute_builder.n == 25
    with pytest.raises(UnknownPreset):
        preset("3-z")


@pytest.mark.parametrize("name", PRESET_NAMES)
def test_preset_direction_consistency(name):
    spec = preset(name)
    spec.validate()
    if spec.direction == "image_to_text":
        assert spec.target_selector.corpus.startswith("images")
        assert spec.retrieval_corpus_selector.corpus.startswith("text")
    else:
        assert spec.target_selector.corpus.startswith("text")
        assert spec.retrieval_corpus_selector.corpus.startswith("images")


def test_k_too_large_before_computation():
    report_spec = tiny_spec(k=5)
    with pytest.raises(KTooLarge):
        run_experiment(report_spec, tiny_corpora())


def test_selector_empty():
    spec = tiny_spec(target_selector=Selector(corpus="imgs", modality="image",
                                              group="BlackWomen"))
    with pytest.raises(SelectorEmpty):
        run_experiment(spec, tiny_corpora())


def test_missing_corpus_name():
    spec = tiny_spec(retrieval_corpus_selector=Selector(corpus="nope"))
    with pytest.raises(ConfigError):
        run_experiment(spec, tiny_corpora())


def test_stratified_run_partitions_targets(model_fixture):
    report = run_experiment(preset("2*-a/small"), model_fixture)
    n_targets = model_fixture["images_group"].count
    assert report.n_targets == n_targets
    assert len(report.records) == n_targets
    assert sum(c.n for c in report.correlations) == n_targets
    assert [c.stratum for c in report.correlations] == list(GROUPS)
    # every stratum's n equals that stratum's record count
    for c in report.correlations:
        assert c.n == sum(1 for r in report.records if r.group == c.stratum)
    assert set(report.intrinsic_group_zmeans) == set(GROUPS)


def test_per_group_mode_records(model_fixture):
    report = run_experiment(preset("2-a/small"), model_fixture)
    n_targets = model_fixture["images_valence"].count
    assert report.n_targets == n_targets
    assert len(report.records) == n_targets * 6
    for c in report.correlations:
        assert c.n == n_targets
    # partition identity surfaces in the records: per-target proportions sum to 1
    by_target: dict[str, float] = {}
    for r in report.records:
        by_target[r.target] = by_target.get(r.target, 0.0) + r.extrinsic
    assert all(abs(total - 1.0) <= 1e-12 for total in by_target.values())


def test_identical_templates_average_to_single_template_exactly():
    from biascope.synth import PlantedParams, generate_valence_corpus

    iv, tv = generate_valence_corpus(PlantedParams(
        n_images=80, n_texts=120, noise_sigma=0.0, templates=6, seed=2))
    fx = {"images_valence": iv, "text_valence": tv}
    spec = preset("1*-a/small")
    averaged = run_experiment(spec, fx)
    for t in range(6):
        single = replace(spec, template_policy=TemplatePolicy("single_template", t))
        assert run_experiment(single, fx).records == averaged.records


def test_group_baseline_recovers_planted_clusters(model_fixture):
    # nearest text cluster is the image's own group: own-group retrieval
    # dominates and propagation is strongly positive in every stratum
    report = run_experiment(preset("2*-a/small"), model_fixture)
    own = [r.extrinsic for r in report.records]
    assert float(np.mean(own)) > 0.45
    assert all(c.rho > 0.7 for c in report.correlations)


def test_determinism_across_jobs(model_fixture):
    spec = preset("2*-b/small")
    r1 = run_experiment(spec, model_fixture, jobs=1)
    r2 = run_experiment(spec, model_fixture, jobs=4)
    r3 = run_experiment(spec, model_fixture, jobs=1)
    assert report_to_json_dict(r1) == report_to_json_dict(r2)
    assert report_to_json_dict(r1) == report_to_json_dict(r3)


def test_run_suite_scenario_counting(model_fixture):
    specs = [preset(f"{name}/small") for name in PRESET_NAMES]
    suite = run_suite(specs, {"synthetic": model_fixture})
    # 2 unstratified baselines + 6 stratified experiments x 6 groups
    assert suite.scenario_count == 2 + 6 * 6
    assert suite.models == ("synthetic",)
    assert not suite.failures
    rhos = [s.rho for s in suite.scenarios]
    assert suite.rho_mean == pytest.approx(float(np.mean(rhos)), abs=1e-12)


def test_run_suite_collects_failures(model_fixture):
    good = preset("1*-a/small")
    bad = replace(preset("1*-b/small"), k=10_000, name="bad-k")
    suite = run_suite([good, bad], {"synthetic": model_fixture})
    assert len(suite.failures) == 1
    assert suite.failures[0][1] == "bad-k"
    with pytest.raises(ConfigError):
        run_suite([bad], {"synthetic": model_fixture})
    with pytest.raises(EmptyInput):
        run_suite([], {"synthetic": model_fixture})


def test_report_fingerprints_cover_used_corpora(model_fixture):
    report = run_experiment(preset("1-a/small"), model_fixture)
    assert set(report.corpus_fingerprints) == {"images_group", "text_valence"}
    for v in report.corpus_fingerprints.values():
        assert v.startswith("sha256:")
