"""Run configuration: hyper-parameters, ablation variants, JSON loading."""

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError


class Variant(str, enum.Enum):
    """Ablation switches for the image-network objective.

    FULL keeps every term. NO_ASYM drops the asymmetric inner-product
    term, NO_SEM drops the semantic pairwise term, NO_BOTH drops both.
    SYMMETRIC keeps all terms but trains a single image network whose
    weights serve both halves of the final code.
    """

    FULL = "full"
    NO_ASYM = "no-asym"
    NO_SEM = "no-sem"
    NO_BOTH = "no-both"
    SYMMETRIC = "sym"


def parse_variant(value) -> Variant:
    if isinstance(value, Variant):
        return value
    try:
        return Variant(str(value))
    except ValueError:
        valid = ", ".join(v.value for v in Variant)
        raise ConfigError(f"unknown variant {value!r} (expected one of: {valid})") from None


@dataclass(frozen=True)
class TermMask:
    """Per-term multipliers overlaid on the image-network objective."""

    sem_pair: float = 1.0
    code_pair: float = 1.0
    quant: float = 1.0
    balance: float = 1.0
    asym: float = 1.0


def variant_loss_mask(variant) -> TermMask:
    v = parse_variant(variant)
    return TermMask(
        sem_pair=0.0 if v in (Variant.NO_SEM, Variant.NO_BOTH) else 1.0,
        asym=0.0 if v in (Variant.NO_ASYM, Variant.NO_BOTH) else 1.0,
    )


@dataclass
class HyperParams:
    """All knobs of a training run.

    Loss weights: alpha/beta scale the two pairwise likelihood terms,
    gamma the label-network binary regularizer, delta the classification
    term, eta the quantization term, nu the bit-balance term.
    """

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 1e-2
    delta: float = 1.0
    nu: float = 10.0
    eta: float = 10.0
    k_half: int = 8
    lr_min: float = 1e-5
    lr_max: float = 1e-2
    lr_steps: int = 7
    t_label: int = 25
    t_img: int = 3
    outer_rounds: int = 5
    batch_size: int = 32
    momentum: float = 0.9
    weight_decay: float = 5e-4
    seed: int = 0
    encoder_hidden: tuple = (4096, 4096)
    semantic_dim: int = 512
    variant: Variant = Variant.FULL
    j3_literal: bool = False
    refresh_labelnet: bool = True

    def __post_init__(self):
        self.encoder_hidden = tuple(int(w) for w in self.encoder_hidden)
        self.variant = parse_variant(self.variant)
        self.validate()

    def validate(self):
        for name in ("alpha", "beta", "gamma", "delta", "nu", "eta"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {v}")
        if self.k_half < 1:
            raise ConfigError(f"k_half must be >= 1, got {self.k_half}")
        if self.batch_size < 2:
            raise ConfigError(f"batch_size must be >= 2, got {self.batch_size}")
        if not (0 < self.lr_min <= self.lr_max):
            raise ConfigError(f"need 0 < lr_min <= lr_max, got {self.lr_min}, {self.lr_max}")
        if self.lr_steps < 1:
            raise ConfigError(f"lr_steps must be >= 1, got {self.lr_steps}")
        for name in ("t_label", "t_img", "outer_rounds"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.seed < 0:
            raise ConfigError(f"seed must be >= 0, got {self.seed}")
        if self.semantic_dim < 1:
            raise ConfigError("semantic_dim must be >= 1")
        if any(w < 1 for w in self.encoder_hidden):
            raise ConfigError("encoder_hidden widths must be >= 1")

    def lr_grid(self):
        """Geometric learning-rate grid from lr_min to lr_max, inclusive."""
        if self.lr_steps == 1:
            return [self.lr_min]
        ratio = (self.lr_max / self.lr_min) ** (1.0 / (self.lr_steps - 1))
        return [self.lr_min * ratio**i for i in range(self.lr_steps)]

    def lr_for_round(self, round_index: int) -> float:
        """One grid point per outer round, clamped at the last point."""
        grid = self.lr_grid()
        return grid[min(round_index, len(grid) - 1)]

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["encoder_hidden"] = list(self.encoder_hidden)
        d["variant"] = self.variant.value
        return d


_CONFIG_KEYS = {f.name for f in dataclasses.fields(HyperParams)}

_INT_KEYS = {"k_half", "lr_steps", "t_label", "t_img", "outer_rounds", "batch_size", "seed",
             "semantic_dim"}
_FLOAT_KEYS = {"alpha", "beta", "gamma", "delta", "nu", "eta", "lr_min", "lr_max", "momentum",
               "weight_decay"}
_BOOL_KEYS = {"j3_literal", "refresh_labelnet"}


def _coerce(key, value):
    try:
        if key in _INT_KEYS:
            return int(value)
        if key in _FLOAT_KEYS:
            return float(value)
        if key in _BOOL_KEYS:
            if isinstance(value, str):
                if value.lower() in ("true", "1", "yes"):
                    return True
                if value.lower() in ("false", "0", "no"):
                    return False
                raise ValueError(value)
            return bool(value)
        if key == "encoder_hidden":
            if isinstance(value, str):
                value = [v for v in value.split(",") if v.strip()]
            return tuple(int(v) for v in value)
        if key == "variant":
            return parse_variant(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for config key {key!r}: {value!r}") from exc
    return value


def make_hyperparams(mapping: dict) -> HyperParams:
    """Build HyperParams from a plain dict, rejecting unknown keys by name."""
    clean = {}
    for key, value in mapping.items():
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"unknown config key: {key!r}")
        clean[key] = _coerce(key, value)
    return HyperParams(**clean)


def load_config(path=None, overrides=None) -> HyperParams:
    """Read a JSON config file and apply overrides on top; overrides win."""
    merged = {}
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError(f"config file {path} must hold a JSON object")
        merged.update(raw)
    if overrides:
        merged.update(overrides)
    return make_hyperparams(merged)
