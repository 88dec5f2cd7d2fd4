"""biascope: deterministic auditing of bias propagation from embedding spaces
into zero-shot cross-modal retrieval."""

from ._version import ENGINE_VERSION as __version__
from .association import AttributeSetPair, EffectSize, batch_sc_eat, build_group_one_vs_all, sc_eat
from .corpus import (
    GROUPS,
    EmbeddingCorpus,
    ItemMeta,
    ItemSubset,
    load_corpus,
    save_corpus,
    top_valence_split,
)
from .experiments import (
    ExperimentReport,
    ExperimentSpec,
    SuiteReport,
    preset,
    run_experiment,
    run_suite,
)
from .metrics import ExtrinsicScore, group_proportion, mean_valence
from .retrieval import RetrievalResult, batch_retrieve, cosine, top_k
from .stats import Correlation, aggregate, spearman, zscore
from .synth import (
    PlantedParams,
    default_model_fixture,
    generate_group_corpus,
    generate_valence_corpus,
    oracle_run,
)

__all__ = [
    "__version__",
    "GROUPS",
    "EmbeddingCorpus",
    "ItemMeta",
    "ItemSubset",
    "load_corpus",
    "save_corpus",
    "top_valence_split",
    "AttributeSetPair",
    "EffectSize",
    "sc_eat",
    "batch_sc_eat",
    "build_group_one_vs_all",
    "RetrievalResult",
    "cosine",
    "top_k",
    "batch_retrieve",
    "ExtrinsicScore",
    "mean_valence",
    "group_proportion",
    "Correlation",
    "spearman",
    "zscore",
    "aggregate",
    "ExperimentSpec",
    "ExperimentReport",
    "SuiteReport",
    "preset",
    "run_experiment",
    "run_suite",
    "PlantedParams",
    "generate_valence_corpus",
    "generate_group_corpus",
    "default_model_fixture",
    "oracle_run",
]
