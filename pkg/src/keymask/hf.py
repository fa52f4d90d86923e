"""Optional transformers-backed production backends.

These adapters plug pretrained summarization and embedding models into the
backend protocols; they need the ``hf`` extra (``pip install keymask[hf]``)
and downloaded model weights. The rest of the toolkit never imports this
module unless a config asks for an ``hf:`` backend.
"""

from typing import Sequence

import numpy as np

from .summarize import SummarizerConfig


def _require_transformers():
    try:
        import transformers
    except ImportError as exc:
        raise ImportError(
            "transformers is not installed; install the 'hf' extra to use "
            "hf: backends") from exc
    return transformers


class TransformersSummarizationBackend:
    """Seq2seq summarization via a Hugging Face pipeline (greedy/beam decode,
    so output is deterministic for fixed inputs and weights)."""

    def __init__(self, model_name: str, device: int | str = "cpu"):
        transformers = _require_transformers()
        self.name = f"hf:{model_name}"
        self._pipe = transformers.pipeline(
            "summarization", model=model_name, device=device)

    def summarize_texts(self, texts: Sequence[str], config: SummarizerConfig) -> list[str]:
        results = self._pipe(
            list(texts),
            max_length=config.max_output_tokens,
            min_length=config.min_output_tokens,
            truncation=True,
            batch_size=config.batch_size,
            do_sample=False,
        )
        return [r["summary_text"] for r in results]


class TransformersEmbeddingBackend:
    """Mean-pooled last-hidden-state embeddings from a pretrained encoder."""

    def __init__(self, model_name: str, device: str = "cpu", batch_size: int = 32):
        transformers = _require_transformers()
        import torch

        self.name = f"hf:{model_name}"
        self.batch_size = batch_size
        self._torch = torch
        self._device = device
        self._tokenizer = transformers.AutoTokenizer.from_pretrained(model_name)
        self._model = transformers.AutoModel.from_pretrained(model_name)
        self._model.to(device)
        self._model.eval()

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        torch = self._torch
        chunks = []
        with torch.no_grad():
            for start in range(0, len(texts), self.batch_size):
                batch = list(texts[start : start + self.batch_size])
                encoded = self._tokenizer(batch, padding=True, truncation=True,
                                          return_tensors="pt").to(self._device)
                hidden = self._model(**encoded).last_hidden_state
                mask = encoded["attention_mask"].unsqueeze(-1).to(hidden.dtype)
                pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
                chunks.append(pooled.cpu().numpy())
        return np.concatenate(chunks, axis=0)
