"""The scanpath predictor: pyramid extractor, spatiotemporal embedding,
query-based fixation decoder, and the three prediction heads."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import torch
import torch.nn as nn
import torch.nn.functional as F

from .config import ModelConfig


def _activation(name: str) -> nn.Module:
    return nn.ReLU() if name == "relu" else nn.GELU()


def sinusoidal_encoding(positions: torch.Tensor, dim: int) -> torch.Tensor:
    """Classic sin/cos encoding of integer positions into ``dim`` channels."""
    device, dtype = positions.device, torch.get_default_dtype()
    half = dim // 2
    freq = torch.exp(
        torch.arange(half, device=device, dtype=dtype)
        * (-math.log(10000.0) / max(half, 1))
    )
    args = positions.to(dtype).unsqueeze(-1) * freq
    enc = torch.zeros(*positions.shape, dim, device=device, dtype=dtype)
    enc[..., 0::2] = torch.sin(args)
    enc[..., 1::2] = torch.cos(args)
    return enc


def encode_xy(x_idx: torch.Tensor, y_idx: torch.Tensor, dim: int) -> torch.Tensor:
    """2D positional code: first half of the channels from x, second from y."""
    half = dim // 2
    return torch.cat(
        [sinusoidal_encoding(x_idx, half), sinusoidal_encoding(y_idx, half)], dim=-1
    )


class FeatureExtractor(nn.Module):
    """Strided convolutional pyramid producing /4 and /32 feature maps.

    A stand-in for a pretrained backbone; externally computed pyramids can be
    fed to the predictor directly to bypass it.
    """

    def __init__(self, config: ModelConfig):
        super().__init__()
        c = config.channels
        act = lambda: _activation(config.activation)
        self.stem = nn.Sequential(
            nn.Conv2d(1, c // 2 or 1, 3, stride=2, padding=1),
            act(),
            nn.Conv2d(c // 2 or 1, c, 3, stride=2, padding=1),
            act(),
        )
        self.lateral_high = nn.Conv2d(c, c, 1)
        self.down = nn.Sequential(
            nn.Conv2d(c, c, 3, stride=2, padding=1),
            act(),
            nn.Conv2d(c, c, 3, stride=2, padding=1),
            act(),
            nn.Conv2d(c, c, 3, stride=2, padding=1),
            act(),
        )
        self.lateral_low = nn.Conv2d(c, c, 1)

    def forward(self, images: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        """(B, 1, H, W) -> P_low (B, C, H/32, W/32), P_high (B, C, H/4, W/4)."""
        trunk = self.stem(images)
        p_high = self.lateral_high(trunk)
        p_low = self.lateral_low(self.down(trunk))
        return p_low, p_high


class DecoderLayer(nn.Module):
    """Cross-attention over the embedded sequence, then query self-attention,
    then a feed-forward block; residual + layer norm after each."""

    def __init__(self, config: ModelConfig):
        super().__init__()
        d = config.embed_dim
        self.cross_attn = nn.MultiheadAttention(d, config.num_heads, batch_first=True)
        self.norm1 = nn.LayerNorm(d)
        self.self_attn = nn.MultiheadAttention(d, config.num_heads, batch_first=True)
        self.norm2 = nn.LayerNorm(d)
        self.ffn = nn.Sequential(
            nn.Linear(d, 4 * d), _activation(config.activation), nn.Linear(4 * d, d)
        )
        self.norm3 = nn.LayerNorm(d)

    def forward(
        self,
        queries: torch.Tensor,
        memory: torch.Tensor,
        memory_mask: Optional[torch.Tensor],
    ) -> torch.Tensor:
        attn, _ = self.cross_attn(
            queries, memory, memory, key_padding_mask=memory_mask, need_weights=False
        )
        queries = self.norm1(queries + attn)
        attn, _ = self.self_attn(queries, queries, queries, need_weights=False)
        queries = self.norm2(queries + attn)
        return self.norm3(queries + self.ffn(queries))


@dataclass
class HeadOutputs:
    """Per-query predictions for one batch of (image, prefix) elements."""

    termination: torch.Tensor  # (B, Q) in (0, 1)
    duration_mean: torch.Tensor  # (B, Q)
    duration_logvar: torch.Tensor  # (B, Q)
    duration: torch.Tensor  # (B, Q), reparameterized sample
    heatmap: torch.Tensor  # (B, Q, N) in (0, 1)


class ScanpathPredictor(nn.Module):
    def __init__(self, config: ModelConfig):
        super().__init__()
        self.config = config
        d, c = config.embed_dim, config.channels
        self.extractor = FeatureExtractor(config)
        self.ref_proj = nn.Linear(c, d)
        self.index_proj = nn.Linear(c, d)
        self.pixel_proj = nn.Linear(c, d)
        self.temporal_embed = nn.Embedding(config.max_length, d)
        self.encoder = nn.ModuleList(
            nn.TransformerEncoderLayer(
                d,
                config.num_heads,
                dim_feedforward=4 * d,
                dropout=0.0,
                activation=config.activation,
                batch_first=True,
            )
            for _ in range(config.embed_layers)
        )
        self.queries = nn.Embedding(config.num_queries, d)
        self.decoder = nn.ModuleList(
            DecoderLayer(config) for _ in range(config.decoder_layers)
        )
        self.head_termination = nn.Linear(d, 1)
        self.head_mu = nn.Linear(d, 1)
        self.head_logvar = nn.Linear(d, 1)
        mlp: list[nn.Module] = []
        for i in range(config.mlp_layers):
            mlp.append(nn.Linear(d, d))
            if i < config.mlp_layers - 1:
                mlp.append(_activation(config.activation))
        self.head_heatmap_mlp = nn.Sequential(*mlp)

    def extract_pyramid(self, images: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        return self.extractor(images)

    def _select(self, pyramid: tuple[torch.Tensor, torch.Tensor], which: str) -> torch.Tensor:
        return pyramid[0] if which == "low" else pyramid[1]

    def build_tokens(
        self,
        pyramid: tuple[torch.Tensor, torch.Tensor],
        prefix_xy: torch.Tensor,
        prefix_len: torch.Tensor,
    ) -> tuple[torch.Tensor, torch.Tensor, int]:
        """Assemble the pre-attention token sequence.

        Reference tokens come from the flattened reference map with their own
        2D positional code; each previous fixation indexes a cell of the
        indexing map and gets the cell's 2D positional code plus a learnable
        per-step embedding.  Returns (tokens (B, R+T, D), padding mask
        (B, R+T) with True at padded slots, R).
        """
        cfg = self.config
        ref_map = self._select(pyramid, cfg.reference_map)
        idx_map = self._select(pyramid, cfg.indexing_map)
        bsz, _, ref_h, ref_w = ref_map.shape
        _, _, idx_h, idx_w = idx_map.shape

        ref_tokens = self.ref_proj(ref_map.flatten(2).transpose(1, 2))  # (B, R, D)
        grid_y, grid_x = torch.meshgrid(
            torch.arange(ref_h, device=ref_map.device),
            torch.arange(ref_w, device=ref_map.device),
            indexing="ij",
        )
        ref_tokens = ref_tokens + encode_xy(
            grid_x.flatten(), grid_y.flatten(), cfg.embed_dim
        ).to(ref_tokens.dtype)

        t_max = prefix_xy.shape[1]
        stride_x = cfg.image_size / idx_w
        stride_y = cfg.image_size / idx_h
        x_idx = (prefix_xy[..., 0] / stride_x).floor().long().clamp(0, idx_w - 1)
        y_idx = (prefix_xy[..., 1] / stride_y).floor().long().clamp(0, idx_h - 1)
        flat = (y_idx * idx_w + x_idx).unsqueeze(1).expand(-1, idx_map.shape[1], -1)
        cells = idx_map.flatten(2).gather(2, flat).transpose(1, 2)  # (B, T, C)
        fix_tokens = self.index_proj(cells)
        fix_tokens = fix_tokens + encode_xy(x_idx, y_idx, cfg.embed_dim).to(fix_tokens.dtype)
        steps = torch.arange(t_max, device=prefix_xy.device).clamp(0, cfg.max_length - 1)
        fix_tokens = fix_tokens + self.temporal_embed(steps)

        tokens = torch.cat([ref_tokens, fix_tokens], dim=1)
        n_ref = ref_tokens.shape[1]
        mask = torch.zeros(bsz, n_ref + t_max, dtype=torch.bool, device=tokens.device)
        mask[:, n_ref:] = (
            torch.arange(t_max, device=tokens.device)[None, :] >= prefix_len[:, None]
        )
        return tokens, mask, n_ref

    def encode_tokens(self, tokens: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        for layer in self.encoder:
            tokens = layer(tokens, src_key_padding_mask=mask)
        return tokens

    def decode(self, memory: torch.Tensor, mask: Optional[torch.Tensor]) -> torch.Tensor:
        """(B, S, D) embedded sequence -> (B, Q, D) decoded query latents."""
        q = self.queries.weight.unsqueeze(0).expand(memory.shape[0], -1, -1)
        for layer in self.decoder:
            q = layer(q, memory, mask)
        return q

    def run_heads(
        self,
        decoded: torch.Tensor,
        p_high: torch.Tensor,
        eps: Optional[torch.Tensor] = None,
    ) -> HeadOutputs:
        termination = torch.sigmoid(self.head_termination(decoded)).squeeze(-1)
        mu = self.head_mu(decoded).squeeze(-1)
        logvar = self.head_logvar(decoded).squeeze(-1)
        if eps is None:
            eps = torch.zeros(decoded.shape[0], dtype=decoded.dtype, device=decoded.device)
        duration = mu + eps.unsqueeze(-1) * torch.exp(0.5 * logvar)
        latent = self.head_heatmap_mlp(decoded)  # (B, Q, D)
        keys = self.pixel_proj(p_high.flatten(2).transpose(1, 2))  # (B, N, D)
        heatmap = torch.sigmoid(torch.bmm(latent, keys.transpose(1, 2)))
        return HeadOutputs(termination, mu, logvar, duration, heatmap)

    def forward(
        self,
        images: Optional[torch.Tensor] = None,
        pyramid: Optional[tuple[torch.Tensor, torch.Tensor]] = None,
        prefix_xy: Optional[torch.Tensor] = None,
        prefix_len: Optional[torch.Tensor] = None,
        eps: Optional[torch.Tensor] = None,
    ) -> HeadOutputs:
        """Predict the next-fixation outputs for every query.

        Either raw images or a precomputed pyramid must be given.
        ``prefix_xy`` holds pixel coordinates of previous fixations padded to
        a common length; ``prefix_len`` the true prefix lengths.
        """
        if pyramid is None:
            if images is None:
                raise ValueError("need images or a precomputed pyramid")
            pyramid = self.extract_pyramid(images)
        if prefix_xy is None or prefix_len is None:
            raise ValueError("need prefix coordinates and lengths")
        tokens, mask, _ = self.build_tokens(pyramid, prefix_xy, prefix_len)
        memory = self.encode_tokens(tokens, mask)
        decoded = self.decode(memory, mask)
        if not torch.isfinite(decoded).all():
            raise FloatingPointError("non-finite decoder output")
        return self.run_heads(decoded, pyramid[1], eps)


def build_model(config: ModelConfig) -> ScanpathPredictor:
    """Construct a predictor with seed-deterministic initialization."""
    torch.manual_seed(config.seed)
    return ScanpathPredictor(config)
