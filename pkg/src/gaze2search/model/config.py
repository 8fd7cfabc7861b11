"""Configuration of the desk-scale scanpath predictor."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Any


@dataclass(frozen=True)
class ModelConfig:
    """All knobs of the network, the losses, and the optimizer.

    Defaults are desk-scale: a full-size configuration would raise
    ``embed_dim`` to 384 and ``decoder_layers`` to 6 and swap in a pretrained
    extractor via the external-pyramid path.  ``reference_map`` picks which
    pyramid scale is flattened into reference tokens; ``indexing_map`` picks
    which scale fixation coordinates index into.
    """

    image_size: int = 224
    channels: int = 64
    embed_dim: int = 64
    decoder_layers: int = 2
    embed_layers: int = 2
    num_queries: int = 13
    num_heads: int = 4
    max_length: int = 7
    focal_alpha: float = 4.0
    focal_gamma: float = 2.0
    heatmap_sigma: float = 2.0
    reference_map: str = "low"
    indexing_map: str = "high"
    termination_threshold: float = 0.5
    learning_rate: float = 1e-3
    weight_decay: float = 1e-2
    seed: int = 0
    activation: str = "relu"
    mlp_layers: int = 3
    duration_min: float = 0.05
    duration_max: float = 5.0

    def __post_init__(self) -> None:
        if self.image_size % 32 != 0:
            raise ValueError("image_size must be divisible by 32")
        if self.embed_dim % self.num_heads != 0:
            raise ValueError("embed_dim must be divisible by num_heads")
        if self.embed_dim % 2 != 0:
            raise ValueError("embed_dim must be even for 2D positional encoding")
        for name in ("reference_map", "indexing_map"):
            if getattr(self, name) not in ("low", "high"):
                raise ValueError(f"{name} must be 'low' or 'high'")
        if self.activation not in ("relu", "gelu"):
            raise ValueError("activation must be 'relu' or 'gelu'")
        if self.max_length < 1 or self.num_queries < 1:
            raise ValueError("max_length and num_queries must be positive")

    @property
    def high_res(self) -> int:
        return self.image_size // 4

    @property
    def low_res(self) -> int:
        return self.image_size // 32

    @property
    def heatmap_cells(self) -> int:
        return self.high_res * self.high_res

    @classmethod
    def tiny(cls, **overrides: Any) -> "ModelConfig":
        """Smallest useful configuration; double precision friendly.

        Uses the smooth activation so finite differences of the loss are
        well defined everywhere.
        """
        base = dict(
            image_size=32,
            channels=4,
            embed_dim=8,
            decoder_layers=1,
            embed_layers=1,
            num_queries=4,
            num_heads=2,
            activation="gelu",
        )
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        return cls(**data)
