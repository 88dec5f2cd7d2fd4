"""Planted-signal synthetic corpora for validating the whole pipeline.

Two constructions with provable rank behavior:

* valence corpora place each item on a short arc in a fixed 2-plane (basis
  axes 0 and 1): the unit vector at angle ``valence * valence_angle_span``.
  With zero noise, cross-modal cosine is strictly decreasing in valence
  distance, so retrieval and association orderings are known analytically.

* group corpora place the six groups at mutually equiangular unit centroids
  (a regular simplex over basis axes 2..7) scaled by a separation factor;
  items are their centroid plus Gaussian noise. Optional per-group valence
  offsets tilt a group's centroid along the positive-valence axis to couple
  group identity with valence signal.

Item source tags mirror the dataset roles ("oasis", "nrc-vad", "cfd",
"group-labels") so metadata filters behave identically on synthetic and real
corpora; generation parameters are recorded in the manifest-level source note.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .corpus import GROUPS, EmbeddingCorpus, ItemMeta
from .errors import InvalidParams

_ARC_AXES = (0, 1)
_SIMPLEX_AXES = (2, 3, 4, 5, 6, 7)


@dataclass(frozen=True)
class PlantedParams:
    """Knobs for both fixture generators; group fields are ignored by the
    valence generator and vice versa."""

    n_images: int = 240
    n_texts: int = 400
    dim: int = 16
    valence_angle_span: float = 1.2
    group_centroid_separation: float = 1.0
    noise_sigma: float = 0.0
    group_counts: Mapping[str, int] | int = 40
    templates: int = 6
    seed: int = 0
    image_valence_range: tuple[float, float] = (0.0, 1.0)
    text_valence_range: tuple[float, float] = (0.0, 1.0)
    group_valence_offsets: Mapping[str, float] | None = None

    def validate_common(self) -> None:
        if self.dim < 2:
            raise InvalidParams("dim must be at least 2")
        if not 0.0 < self.valence_angle_span < math.pi / 2:
            raise InvalidParams("valence_angle_span must lie in (0, pi/2)")
        if self.noise_sigma < 0:
            raise InvalidParams("noise_sigma must be >= 0")
        if self.templates not in (1, 6):
            raise InvalidParams("templates must be 1 or 6")

    def counts_by_group(self) -> dict[str, int]:
        if isinstance(self.group_counts, int):
            counts = {g: self.group_counts for g in GROUPS}
        else:
            counts = dict(self.group_counts)
            if set(counts) != set(GROUPS):
                raise InvalidParams(f"group_counts must cover exactly {GROUPS}")
        if any(c < 1 for c in counts.values()):
            raise InvalidParams("every group count must be positive")
        return counts


def params_from_json(doc: object) -> PlantedParams:
    if not isinstance(doc, dict):
        raise InvalidParams("fixture params must be a JSON object")
    known = {f for f in PlantedParams.__dataclass_fields__}
    unknown = set(doc) - known
    if unknown:
        raise InvalidParams(f"unknown fixture params {sorted(unknown)}")
    kwargs = dict(doc)
    for key in ("image_valence_range", "text_valence_range"):
        if key in kwargs:
            lo, hi = kwargs[key]
            kwargs[key] = (float(lo), float(hi))
    return PlantedParams(**kwargs)


def _valence_grid(count: int, vrange: tuple[float, float]) -> np.ndarray:
    lo, hi = vrange
    if not (0.0 <= lo < hi <= 1.0):
        raise InvalidParams(f"valence range {vrange} must satisfy 0 <= lo < hi <= 1")
    if count < 2:
        raise InvalidParams("valence corpora need at least 2 items")
    return lo + (hi - lo) * np.arange(count, dtype=np.float64) / (count - 1)


def _arc_vectors(valences: np.ndarray, span: float, dim: int) -> np.ndarray:
    vecs = np.zeros((valences.shape[0], dim), dtype=np.float64)
    theta = valences * span
    vecs[:, _ARC_AXES[0]] = np.cos(theta)
    vecs[:, _ARC_AXES[1]] = np.sin(theta)
    return vecs


def _add_noise(vecs: np.ndarray, sigma: float, rng: np.random.Generator) -> np.ndarray:
    if sigma > 0:
        vecs = vecs + sigma * rng.standard_normal(vecs.shape)
    return vecs


def generate_valence_corpus(params: PlantedParams
                            ) -> tuple[EmbeddingCorpus, EmbeddingCorpus]:
    """Valence-rated (image corpus, text corpus) on the same arc construction."""
    params.validate_common()
    note = (f"synth:valence seed={params.seed} n_images={params.n_images} "
            f"n_texts={params.n_texts} dim={params.dim} "
            f"span={params.valence_angle_span} noise={params.noise_sigma} "
            f"templates={params.templates}")

    img_v = _valence_grid(params.n_images, params.image_valence_range)
    img_rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=(0,)))
    img_vecs = _add_noise(_arc_vectors(img_v, params.valence_angle_span, params.dim),
                          params.noise_sigma, img_rng)
    img_items = [ItemMeta(id=f"oasis-{i:05d}", row=i, modality="image",
                          source="oasis", valence=float(img_v[i]))
                 for i in range(params.n_images)]
    images = EmbeddingCorpus(img_vecs.astype(np.float32), img_items, source_note=note)

    txt_v = _valence_grid(params.n_texts, params.text_valence_range)
    stem_vecs = _arc_vectors(txt_v, params.valence_angle_span, params.dim)
    rows = np.repeat(stem_vecs, params.templates, axis=0)
    txt_rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=(1,)))
    rows = _add_noise(rows, params.noise_sigma, txt_rng)
    txt_items = []
    for j in range(params.n_texts):
        for t in range(params.templates):
            row = j * params.templates + t
            txt_items.append(ItemMeta(id=f"nrc-{j:05d}#t{t}", row=row,
                                      modality="text", source="nrc-vad",
                                      valence=float(txt_v[j]), template_id=t))
    texts = EmbeddingCorpus(rows.astype(np.float32), txt_items, source_note=note)
    return images, texts


def group_centroids(params: PlantedParams) -> np.ndarray:
    """Six mutually equiangular unit vectors, scaled by the separation factor,
    with optional per-group valence offsets along the positive-valence axis."""
    if params.dim < _SIMPLEX_AXES[-1] + 1:
        raise InvalidParams(f"group fixtures need dim >= {_SIMPLEX_AXES[-1] + 1}")
    if params.group_centroid_separation <= 0:
        raise InvalidParams("group_centroid_separation must be positive")
    basis = np.zeros((len(GROUPS), params.dim), dtype=np.float64)
    for gi, axis in enumerate(_SIMPLEX_AXES):
        basis[gi, axis] = 1.0
    centered = basis - basis.mean(axis=0)
    centered /= np.linalg.norm(centered, axis=1, keepdims=True)

    gram = centered @ centered.T
    off = gram[~np.eye(len(GROUPS), dtype=bool)]
    if np.max(np.abs(off - off[0])) > 1e-9:
        raise InvalidParams("centroid construction lost equiangularity")

    centroids = params.group_centroid_separation * centered
    if params.group_valence_offsets:
        for g, offset in params.group_valence_offsets.items():
            if g not in GROUPS:
                raise InvalidParams(f"valence offset for unknown group {g!r}")
            centroids[GROUPS.index(g), _ARC_AXES[1]] += float(offset)
    return centroids


def generate_group_corpus(params: PlantedParams
                          ) -> tuple[EmbeddingCorpus, EmbeddingCorpus]:
    """Group-labeled (image corpus, text corpus) around matching centroids."""
    params.validate_common()
    counts = params.counts_by_group()
    centroids = group_centroids(params)
    note = (f"synth:group seed={params.seed} counts={sorted(counts.items())} "
            f"dim={params.dim} separation={params.group_centroid_separation} "
            f"noise={params.noise_sigma} templates={params.templates} "
            f"offsets={sorted((params.group_valence_offsets or {}).items())}")

    img_rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=(0,)))
    img_vecs = []
    img_items = []
    row = 0
    for gi, g in enumerate(GROUPS):
        for i in range(counts[g]):
            img_vecs.append(centroids[gi])
            img_items.append(ItemMeta(id=f"cfd-{g}-{i:04d}", row=row,
                                      modality="image", source="cfd", group=g))
            row += 1
    img_matrix = _add_noise(np.asarray(img_vecs), params.noise_sigma, img_rng)
    images = EmbeddingCorpus(img_matrix.astype(np.float32), img_items, source_note=note)

    txt_rng = np.random.default_rng(np.random.SeedSequence(params.seed, spawn_key=(1,)))
    txt_vecs = []
    txt_items = []
    row = 0
    for gi, g in enumerate(GROUPS):
        for i in range(counts[g]):
            for t in range(params.templates):
                txt_vecs.append(centroids[gi])
                txt_items.append(ItemMeta(id=f"gl-{g}-{i:04d}#t{t}", row=row,
                                          modality="text", source="group-labels",
                                          group=g, template_id=t))
                row += 1
    txt_matrix = _add_noise(np.asarray(txt_vecs), params.noise_sigma, txt_rng)
    texts = EmbeddingCorpus(txt_matrix.astype(np.float32), txt_items, source_note=note)
    return images, texts


# -- standard fixtures -----------------------------------------------------------

def default_model_fixture(seed: int, small: bool = True
                          ) -> dict[str, EmbeddingCorpus]:
    """The standard four-corpus synthetic "model" keyed for the presets.

    Valence corpora are noise-free; group corpora carry enough noise that
    retrieval mixes groups near the top-k boundary (with pure clusters the
    own-group proportion saturates at a constant and per-stratum correlations
    become degenerate).
    """
    if small:
        valence = PlantedParams(n_images=240, n_texts=400, dim=16,
                                noise_sigma=0.0, templates=6,
                                seed=_sub_seed(seed, 0))
        group = PlantedParams(dim=16, group_counts=40, noise_sigma=0.35,
                              templates=6, seed=_sub_seed(seed, 1))
    else:
        valence = PlantedParams(n_images=900, n_texts=2000, dim=16,
                                noise_sigma=0.0, templates=6,
                                seed=_sub_seed(seed, 0))
        group = PlantedParams(dim=16, group_counts=300, noise_sigma=0.35,
                              templates=6, seed=_sub_seed(seed, 1))
    images_valence, text_valence = generate_valence_corpus(valence)
    images_group, text_group = generate_group_corpus(group)
    return {
        "images_valence": images_valence,
        "text_valence": text_valence,
        "images_group": images_group,
        "text_group": text_group,
    }


def nested_valence_fixture(seed: int, direction: str, noise_sigma: float = 0.0,
                           templates: int = 1) -> dict[str, EmbeddingCorpus]:
    """Valence fixture whose target valence range nests strictly inside the
    candidate range.

    Retrieval windows of the most extreme targets would otherwise clip at the
    candidate boundary and collide (several targets retrieving the identical
    top-k set, hence tied extrinsic scores); nesting the ranges keeps every
    window interior, which is what makes zero-noise correlations exactly 1.0.
    ``direction`` picks which side is dense: "image_to_text" for image targets
    over a dense text corpus, "text_to_image" for the mirror.
    """
    if direction == "image_to_text":
        params = PlantedParams(n_images=200, n_texts=1200, dim=16,
                               noise_sigma=noise_sigma, templates=templates,
                               seed=seed,
                               image_valence_range=(0.25, 0.75),
                               text_valence_range=(0.0, 1.0))
    elif direction == "text_to_image":
        params = PlantedParams(n_images=1200, n_texts=200, dim=16,
                               noise_sigma=noise_sigma, templates=templates,
                               seed=seed,
                               image_valence_range=(0.0, 1.0),
                               text_valence_range=(0.25, 0.75))
    else:
        raise InvalidParams(f"unknown direction {direction!r}")
    images_valence, text_valence = generate_valence_corpus(params)
    return {"images_valence": images_valence, "text_valence": text_valence}


def _sub_seed(seed: int, slot: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(slot,))
    return int(ss.generate_state(1, np.uint64)[0])


# re-exported here so fixture generation and its reference check live together
from .oracle import oracle_run  # noqa: E402  (circular-safe: oracle imports no synth)

__all__ = [
    "PlantedParams",
    "params_from_json",
    "generate_valence_corpus",
    "generate_group_corpus",
    "group_centroids",
    "default_model_fixture",
    "nested_valence_fixture",
    "oracle_run",
]
