"""Text encoders.

Two backends:

* ``hashing`` (optionally ``hashing:<dim>``) — a dependency-free
  deterministic feature-hashing encoder. Every token is hashed (sha256,
  so stable across processes) into a handful of signed slots; token
  vectors are pooled and L2-normalized. Always available locally.
* ``hf:<model>`` — a pretrained transformer encoder via the
  ``transformers`` library, with cls or mean pooling over the last
  hidden state. Requires the model to be available locally.
"""

from __future__ import annotations

import hashlib

import numpy as np

POOLINGS = ("cls", "mean")
_SLOTS_PER_TOKEN = 4


class EncoderUnavailable(RuntimeError):
    """The requested encoder cannot run in this environment."""


class HashingEncoder:
    def __init__(self, dim: int = 256):
        if dim < 8:
            raise ValueError(f"hashing encoder dim must be >= 8, got {dim}")
        self.dim = dim
        self.name = f"hashing:{dim}"

    def _token_vector(self, token: str) -> np.ndarray:
        v = np.zeros(self.dim)
        digest = hashlib.sha256(token.encode("utf-8")).digest()
        for k in range(_SLOTS_PER_TOKEN):
            chunk = digest[4 * k : 4 * k + 4]
            idx = int.from_bytes(chunk, "big") % self.dim
            sign = 1.0 if digest[16 + k] % 2 == 0 else -1.0
            v[idx] += sign
        return v

    def encode(self, text: str, pooling: str) -> np.ndarray:
        tokens = text.lower().split()
        if not tokens:
            raise ValueError("cannot encode empty text")
        if pooling == "cls":
            pooled = self._token_vector(tokens[0])
        else:
            pooled = np.mean([self._token_vector(t) for t in tokens], axis=0)
        norm = float(np.linalg.norm(pooled))
        return pooled / norm if norm > 0 else pooled


class TransformerEncoder:
    def __init__(self, model_name: str):
        try:
            import torch  # noqa: F401
            from transformers import AutoModel, AutoTokenizer
        except ImportError as exc:
            raise EncoderUnavailable(
                "transformer encoders need the 'transformers' and 'torch' packages; "
                "install with: pip install 'corpus-embed[hf]'"
            ) from exc
        try:
            self.tokenizer = AutoTokenizer.from_pretrained(model_name)
            self.model = AutoModel.from_pretrained(model_name)
        except Exception as exc:
            raise EncoderUnavailable(
                f"encoder {model_name!r} is not available locally "
                f"(download it first or pick a cached model): {exc}"
            ) from exc
        self.model.eval()
        self.name = f"hf:{model_name}"

    def encode(self, text: str, pooling: str) -> np.ndarray:
        import torch

        with torch.no_grad():
            batch = self.tokenizer(
                text, return_tensors="pt", truncation=True, max_length=512
            )
            hidden = self.model(**batch).last_hidden_state[0]
            if pooling == "cls":
                pooled = hidden[0]
            else:
                mask = batch["attention_mask"][0].unsqueeze(-1)
                pooled = (hidden * mask).sum(dim=0) / mask.sum()
        return pooled.numpy().astype(np.float64)


def get_encoder(name: str):
    if name == "hashing":
        return HashingEncoder()
    if name.startswith("hashing:"):
        try:
            dim = int(name.split(":", 1)[1])
        except ValueError:
            raise EncoderUnavailable(f"bad hashing encoder spec {name!r}") from None
        return HashingEncoder(dim=dim)
    if name.startswith("hf:"):
        return TransformerEncoder(name.split(":", 1)[1])
    raise EncoderUnavailable(
        f"unknown encoder {name!r}; use 'hashing', 'hashing:<dim>' or 'hf:<model>'"
    )
