"""Configuration records shared by the model, objectives and trainer."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

DECODER_VARIANTS = ("standard", "init", "concat", "swap")
WPL_PLACEMENTS = ("none", "dec_hidden", "enc_emb", "dec_emb", "both_emb")


@dataclass
class WplConfig:
    placement: str = "both_emb"
    max_position: int = 64
    layers: int = 3

    def __post_init__(self):
        if self.placement not in WPL_PLACEMENTS:
            raise ValueError(f"unknown WPL placement {self.placement!r}")
        if self.max_position < 1:
            raise ValueError("max_position must be >= 1")

    def sites(self) -> tuple[str, ...]:
        """Where heads are attached: subset of enc_emb, dec_emb, dec_hidden."""
        return {"none": (), "dec_hidden": ("dec_hidden",), "enc_emb": ("enc_emb",),
                "dec_emb": ("dec_emb",), "both_emb": ("enc_emb", "dec_emb")}[self.placement]


@dataclass
class ModelConfig:
    emb_dim: int = 100
    sem_dim: int = 100
    syn_dim: int = 100
    enc_hidden: int = 100
    dec_hidden: int = 100
    ff_dim: int = 100
    ff_layers: int = 3
    variant: str = "standard"
    use_codes: bool = False
    num_codes: int = 10
    classes_per_code: int = 2
    code_base_dim: int = 100
    wpl_placement: str = "both_emb"
    wpl_max_position: int = 64
    wpl_layers: int = 3
    max_len: int = 40
    beam_size: int = 10

    def __post_init__(self):
        if self.variant not in DECODER_VARIANTS:
            raise ValueError(f"unknown decoder variant {self.variant!r}")
        positive = ("emb_dim", "sem_dim", "enc_hidden", "dec_hidden", "ff_dim", "ff_layers",
                    "max_len", "beam_size")
        for name in positive:
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.sem_dim < 2:
            raise ValueError("sem_dim must be >= 2 for a vMF latent")
        # syn_dim = 0 is allowed as a degenerate wiring check
        if self.syn_dim < 0:
            raise ValueError("syn_dim must be nonnegative")
        if self.use_codes and self.emb_dim % self.num_codes:
            raise ValueError("emb_dim must be a multiple of num_codes when latent codes are on")
        self.wpl  # validates placement

    @property
    def wpl(self) -> WplConfig:
        return WplConfig(self.wpl_placement, self.wpl_max_position, self.wpl_layers)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


@dataclass
class LossWeights:
    kl_y: float = 1e-4
    kl_z: float = 1e-3
    prl: float = 1.0
    wpl: float = 1.0

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise ValueError(f"loss weight {f.name} must be >= 0")

    @property
    def reconstruction(self) -> float:
        # the paraphrase loss takes the place of self-reconstruction
        return 0.0 if self.prl > 0 else 1.0

