"""Embedding backends.

Model tags:

* ``clip-b-32`` / ``clip-l-14`` -- OpenAI CLIP checkpoints via transformers.
* ``blip2`` -- BLIP-2 image-text-matching checkpoint; embeddings are taken
  from the Q-Former contrastive projection space (text pooled over query
  tokens is not needed: the ITM head exposes matched projections).
* ``hashed/<dim>`` -- a deterministic feature-hashing encoder that needs no
  checkpoints, torch, or network. It exists so the full extraction pipeline
  (templates -> encoding -> corpus files) can run and be tested anywhere;
  its geometry is meaningless for auditing real models.

torch/transformers are imported lazily so the hashed backend works without
them installed.
"""

from __future__ import annotations

import hashlib
import re
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import CheckpointLoadError, PreprocessError

_CLIP_CHECKPOINTS = {
    "clip-b-32": "openai/clip-vit-base-patch32",
    "clip-l-14": "openai/clip-vit-large-patch14",
}
_BLIP2_CHECKPOINT = "Salesforce/blip2-itm-vit-g"

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def load_image(path: str | Path, item_id: str) -> Image.Image:
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except Exception as exc:
        raise PreprocessError(item_id, f"cannot read image: {exc}") from exc


class HashedEncoder:
    """Deterministic feature-hash embeddings (test/off-line backend)."""

    def __init__(self, dim: int):
        if dim < 2:
            raise CheckpointLoadError("hashed encoder needs dim >= 2")
        self.dim = dim
        self.tag = f"hashed/{dim}"
        self.preprocessing = "sha256 feature hashing; images via 32x32 RGB thumbnail"

    def _bucket(self, token: bytes) -> tuple[int, float]:
        digest = hashlib.sha256(token).digest()
        idx = int.from_bytes(digest[:4], "little") % self.dim
        sign = 1.0 if digest[4] % 2 == 0 else -1.0
        return idx, sign

    def _finish(self, vec: np.ndarray, key: bytes) -> np.ndarray:
        idx, sign = self._bucket(b"anchor:" + key)
        vec[idx] += 0.25 * sign  # nonzero norm even for empty token sets
        return vec

    def encode_texts(self, texts: list[str], batch_size: int = 32) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            tokens = _TOKEN_RE.findall(text.lower())
            for tok in tokens:
                idx, sign = self._bucket(tok.encode())
                out[i, idx] += sign
            for a, b in zip(tokens, tokens[1:]):
                idx, sign = self._bucket(f"{a}_{b}".encode())
                out[i, idx] += 0.5 * sign
            self._finish(out[i], text.encode())
        return out

    def encode_images(self, images: list[Image.Image],
                      batch_size: int = 32) -> np.ndarray:
        out = np.zeros((len(images), self.dim), dtype=np.float64)
        for i, img in enumerate(images):
            thumb = img.resize((32, 32))
            raw = thumb.tobytes()
            for off in range(0, len(raw) - 16, 16):
                idx, sign = self._bucket(raw[off:off + 16])
                out[i, idx] += sign
            self._finish(out[i], raw[:64])
        return out


class ClipEncoder:
    def __init__(self, tag: str):
        checkpoint = _CLIP_CHECKPOINTS[tag]
        try:
            import torch
            from transformers import CLIPModel, CLIPProcessor
        except ImportError as exc:
            raise CheckpointLoadError(
                f"{tag} needs torch and transformers installed: {exc}") from exc
        try:
            self._torch = torch
            self.model = CLIPModel.from_pretrained(checkpoint).eval()
            self.processor = CLIPProcessor.from_pretrained(checkpoint)
        except Exception as exc:
            raise CheckpointLoadError(f"cannot load {checkpoint}: {exc}") from exc
        self.tag = tag
        self.dim = int(self.model.config.projection_dim)
        self.preprocessing = f"transformers CLIPProcessor for {checkpoint}"

    def encode_texts(self, texts: list[str], batch_size: int = 32) -> np.ndarray:
        chunks = []
        with self._torch.no_grad():
            for i in range(0, len(texts), batch_size):
                batch = self.processor(text=texts[i:i + batch_size],
                                       return_tensors="pt", padding=True,
                                       truncation=True)
                chunks.append(self.model.get_text_features(**batch).cpu().numpy())
        return np.concatenate(chunks).astype(np.float64)

    def encode_images(self, images: list[Image.Image],
                      batch_size: int = 32) -> np.ndarray:
        chunks = []
        with self._torch.no_grad():
            for i in range(0, len(images), batch_size):
                batch = self.processor(images=images[i:i + batch_size],
                                       return_tensors="pt")
                chunks.append(self.model.get_image_features(**batch).cpu().numpy())
        return np.concatenate(chunks).astype(np.float64)


class Blip2Encoder:
    def __init__(self):
        try:
            import torch
            from transformers import AutoProcessor, Blip2ForImageTextRetrieval
        except ImportError as exc:
            raise CheckpointLoadError(
                f"blip2 needs torch and transformers installed: {exc}") from exc
        try:
            self._torch = torch
            self.model = Blip2ForImageTextRetrieval.from_pretrained(
                _BLIP2_CHECKPOINT).eval()
            self.processor = AutoProcessor.from_pretrained(_BLIP2_CHECKPOINT)
        except Exception as exc:
            raise CheckpointLoadError(
                f"cannot load {_BLIP2_CHECKPOINT}: {exc}") from exc
        self.tag = "blip2"
        self.dim = int(self.model.config.image_text_hidden_size)
        self.preprocessing = (f"transformers AutoProcessor for {_BLIP2_CHECKPOINT}; "
                              "Q-Former contrastive projections, image queries "
                              "max-pooled")

    def encode_texts(self, texts: list[str], batch_size: int = 32) -> np.ndarray:
        chunks = []
        with self._torch.no_grad():
            for i in range(0, len(texts), batch_size):
                batch = self.processor(text=texts[i:i + batch_size],
                                       return_tensors="pt", padding=True,
                                       truncation=True)
                q = self.model.embeddings(batch["input_ids"])
                out = self.model.qformer(query_embeds=q,
                                         attention_mask=batch["attention_mask"],
                                         return_dict=True)
                proj = self.model.text_projection(out.last_hidden_state[:, 0, :])
                chunks.append(proj.cpu().numpy())
        return np.concatenate(chunks).astype(np.float64)

    def encode_images(self, images: list[Image.Image],
                      batch_size: int = 32) -> np.ndarray:
        chunks = []
        with self._torch.no_grad():
            for i in range(0, len(images), batch_size):
                batch = self.processor(images=images[i:i + batch_size],
                                       return_tensors="pt")
                vision = self.model.vision_model(batch["pixel_values"])[0]
                queries = self.model.query_tokens.expand(vision.shape[0], -1, -1)
                out = self.model.qformer(
                    query_embeds=queries,
                    encoder_hidden_states=vision,
                    return_dict=True)
                proj = self.model.vision_projection(out.last_hidden_state)
                chunks.append(proj.max(dim=1).values.cpu().numpy())
        return np.concatenate(chunks).astype(np.float64)


def get_encoder(model_tag: str):
    if model_tag in _CLIP_CHECKPOINTS:
        return ClipEncoder(model_tag)
    if model_tag == "blip2":
        return Blip2Encoder()
    if model_tag.startswith("hashed/"):
        try:
            dim = int(model_tag.split("/", 1)[1])
        except ValueError as exc:
            raise CheckpointLoadError(f"bad hashed tag {model_tag!r}") from exc
        return HashedEncoder(dim)
    raise CheckpointLoadError(
        f"unknown model tag {model_tag!r}; expected one of "
        f"{sorted(_CLIP_CHECKPOINTS)}, 'blip2', or 'hashed/<dim>'")
