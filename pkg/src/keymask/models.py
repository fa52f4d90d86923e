"""Tiny randomly initialized encoder for desk-scale training runs.

A plain post-LN transformer encoder with an MLM head and a first-token
pooled representation. Attention is written out by hand (no fused fast
paths), so the model runs identically under float32 and float64 and the
MLM loss admits a clean finite-difference gradient check.
"""

import math
from dataclasses import dataclass
from typing import Protocol

import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import ConfigError
from .masking import IGNORE_LABEL


@dataclass(frozen=True)
class EncoderConfig:
    vocab_size: int
    hidden_size: int = 128
    num_layers: int = 2
    num_heads: int = 4
    intermediate_size: int | None = None
    max_positions: int = 512
    dropout: float = 0.0

    def __post_init__(self):
        if self.hidden_size % self.num_heads != 0:
            raise ConfigError("hidden_size must be divisible by num_heads")
        if self.intermediate_size is None:
            object.__setattr__(self, "intermediate_size", 4 * self.hidden_size)


class EncoderModel(Protocol):
    """Contract the training loops rely on."""

    vocab_size: int

    def forward(self, input_ids: torch.Tensor,
                attention_mask: torch.Tensor | None = None) -> torch.Tensor: ...

    def mlm_logits(self, input_ids: torch.Tensor,
                   attention_mask: torch.Tensor | None = None) -> torch.Tensor: ...

    def pooled(self, hidden: torch.Tensor) -> torch.Tensor: ...


class SelfAttention(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.num_heads = config.num_heads
        self.head_dim = config.hidden_size // config.num_heads
        self.qkv = nn.Linear(config.hidden_size, 3 * config.hidden_size)
        self.out = nn.Linear(config.hidden_size, config.hidden_size)

    def forward(self, hidden, attention_bias):
        batch, seq, _ = hidden.shape
        qkv = self.qkv(hidden).view(batch, seq, 3, self.num_heads, self.head_dim)
        q, k, v = (qkv[:, :, i].transpose(1, 2) for i in range(3))
        scores = torch.matmul(q, k.transpose(-1, -2)) / math.sqrt(self.head_dim)
        if attention_bias is not None:
            scores = scores + attention_bias
        weights = torch.softmax(scores, dim=-1)
        context = torch.matmul(weights, v)
        context = context.transpose(1, 2).reshape(batch, seq, -1)
        return self.out(context)


class EncoderLayer(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.attention = SelfAttention(config)
        self.attn_norm = nn.LayerNorm(config.hidden_size)
        self.ffn = nn.Sequential(
            nn.Linear(config.hidden_size, config.intermediate_size),
            nn.GELU(),
            nn.Linear(config.intermediate_size, config.hidden_size),
        )
        self.ffn_norm = nn.LayerNorm(config.hidden_size)
        self.dropout = nn.Dropout(config.dropout)

    def forward(self, hidden, attention_bias):
        hidden = self.attn_norm(hidden + self.dropout(self.attention(hidden, attention_bias)))
        hidden = self.ffn_norm(hidden + self.dropout(self.ffn(hidden)))
        return hidden


class TinyEncoder(nn.Module):
    """Token + position embeddings, a stack of encoder layers, an MLM head."""

    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        self.vocab_size = config.vocab_size
        self.token_embedding = nn.Embedding(config.vocab_size, config.hidden_size)
        self.position_embedding = nn.Embedding(config.max_positions, config.hidden_size)
        self.embed_norm = nn.LayerNorm(config.hidden_size)
        self.layers = nn.ModuleList(EncoderLayer(config) for _ in range(config.num_layers))
        self.mlm_head = nn.Linear(config.hidden_size, config.vocab_size)
        self.dropout = nn.Dropout(config.dropout)

    @staticmethod
    def _attention_bias(attention_mask: torch.Tensor | None, dtype: torch.dtype):
        if attention_mask is None:
            return None
        # [B, T] with 1 = attend, 0 = padding -> additive [B, 1, 1, T]
        bias = (1.0 - attention_mask.to(dtype)) * torch.finfo(dtype).min
        return bias[:, None, None, :]

    def forward(self, input_ids: torch.Tensor,
                attention_mask: torch.Tensor | None = None) -> torch.Tensor:
        seq = input_ids.shape[1]
        if seq > self.config.max_positions:
            raise ValueError(f"sequence length {seq} exceeds max_positions "
                             f"{self.config.max_positions}")
        positions = torch.arange(seq, device=input_ids.device)
        hidden = self.token_embedding(input_ids) + self.position_embedding(positions)
        hidden = self.dropout(self.embed_norm(hidden))
        bias = self._attention_bias(attention_mask, hidden.dtype)
        for layer in self.layers:
            hidden = layer(hidden, bias)
        return hidden

    def mlm_logits(self, input_ids: torch.Tensor,
                   attention_mask: torch.Tensor | None = None) -> torch.Tensor:
        return self.mlm_head(self.forward(input_ids, attention_mask))

    def pooled(self, hidden: torch.Tensor) -> torch.Tensor:
        """First-token pooled sequence representation."""
        return hidden[:, 0]


class SequenceClassifier(nn.Module):
    """Classification head over the encoder's pooled representation."""

    def __init__(self, encoder: TinyEncoder, num_labels: int, pooling: str = "first"):
        super().__init__()
        if num_labels < 2:
            raise ConfigError("num_labels must be >= 2")
        if pooling not in ("first", "mean"):
            raise ConfigError(f"unknown pooling {pooling!r}")
        self.encoder = encoder
        self.pooling = pooling
        self.head = nn.Linear(encoder.config.hidden_size, num_labels)

    def forward(self, input_ids: torch.Tensor,
                attention_mask: torch.Tensor | None = None) -> torch.Tensor:
        hidden = self.encoder(input_ids, attention_mask)
        if self.pooling == "first":
            pooled = self.encoder.pooled(hidden)
        else:
            mask = (attention_mask if attention_mask is not None
                    else torch.ones(hidden.shape[:2], device=hidden.device))
            mask = mask.to(hidden.dtype).unsqueeze(-1)
            pooled = (hidden * mask).sum(dim=1) / mask.sum(dim=1).clamp(min=1.0)
        return self.head(pooled)


def mlm_loss(logits: torch.Tensor, labels: torch.Tensor,
             ignore_label: int = IGNORE_LABEL) -> torch.Tensor:
    """Cross-entropy over positions with real labels only."""
    return F.cross_entropy(
        logits.reshape(-1, logits.shape[-1]),
        labels.reshape(-1),
        ignore_index=ignore_label,
    )


def build_encoder(config: EncoderConfig, seed: int) -> TinyEncoder:
    """Deterministically initialized encoder (fixed seed, CPU generator)."""
    torch.manual_seed(seed)
    return TinyEncoder(config)
