from __future__ import annotations

import numpy as np
import pytest

from biascope.corpus import EmbeddingCorpus, ItemMeta
from biascope.synth import default_model_fixture


def make_corpus(vectors, modality="text", valences=None, groups=None,
                template_ids=None, source="synthetic", ids=None,
                source_note=None) -> EmbeddingCorpus:
    """Small-corpus builder for hand-constructed test cases."""
    matrix = np.asarray(vectors, dtype=np.float32)
    n = matrix.shape[0]
    items = []
    for i in range(n):
        items.append(ItemMeta(
            id=ids[i] if ids else f"item-{i:03d}",
            row=i,
            modality=modality if isinstance(modality, str) else modality[i],
            source=source,
            valence=None if valences is None else valences[i],
            group=None if groups is None else groups[i],
            template_id=None if template_ids is None else template_ids[i],
        ))
    return EmbeddingCorpus(matrix, items, source_note=source_note)


@pytest.fixture(scope="session")
def model_fixture():
    """The default synthetic four-corpus model, shared across tests."""
    return default_model_fixture(7)
