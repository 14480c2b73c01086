"""Training profiles and run configuration.

Two presets: `paper` reproduces the published schedule at full resolution,
`toy` is a desk-scale profile for smoke tests and the end-to-end demo. A JSON
config file can override any preset field; validation errors name the exact
field path. The data directory resolves explicit argument > STYLE_VTON_DATA
> ./data.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple

DATA_ENV_VAR = "STYLE_VTON_DATA"

STAGE_NAMES = (
    "parsing",
    "contour",
    "correspondence",
    "synthesizer",
    "vae",
    "texture",
    "classifier",
)

# the numbered stages of the pipeline; `train --stage 2` runs the whole
# garment-warping block, fine-grained names are accepted as an extension
STAGE_GROUPS = {
    "1": ("parsing",),
    "2": ("contour", "correspondence", "synthesizer"),
    "3": ("vae", "texture", "classifier"),
    "all": STAGE_NAMES,
}


def resolve_stages(stage: str) -> Tuple[str, ...]:
    """Map a --stage token (1, 2, 3, all, or a stage name) to stage names."""
    token = str(stage)
    if token in STAGE_GROUPS:
        return STAGE_GROUPS[token]
    if token in STAGE_NAMES:
        return (token,)
    raise ValueError(
        f"unknown stage {stage!r}; expected 1, 2, 3, all, or one of {list(STAGE_NAMES)}"
    )


@dataclass(frozen=True)
class StageConfig:
    epochs: int
    lr: float = 2e-4
    batch_size: int = 16
    # epochs at constant lr followed by a linear decay to zero; zero decay
    # means the rate stays constant for the whole run
    const_epochs: Optional[int] = None
    decay_epochs: int = 0
    weight_decay: float = 0.0
    betas: Tuple[float, float] = (0.5, 0.999)
    # optional step milestones where the rate is halved (overrides decay)
    halve_at: Tuple[int, ...] = ()
    # per-stage override of the run-level supervised-term weight
    lambda_l1: Optional[float] = None

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be non-negative")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be positive")
        if self.const_epochs is not None and self.const_epochs < 0:
            raise ValueError("const_epochs must be non-negative")
        if self.decay_epochs < 0:
            raise ValueError("decay_epochs must be non-negative")
        if self.lambda_l1 is not None and self.lambda_l1 < 0:
            raise ValueError("lambda_l1 must be non-negative")


@dataclass(frozen=True)
class RunConfig:
    profile: str
    image_height: int
    image_width: int
    grid: int = 32
    seed: int = 0
    lambda_adv: float = 1.0
    lambda_l1: float = 10.0
    lambda_recon: float = 10.0
    num_train_pairs: int = 56
    num_eval_pairs: int = 8
    stages: Dict[str, StageConfig] = field(default_factory=dict)

    def __post_init__(self):
        if self.image_height < 16 or self.image_width < 16:
            raise ValueError("images must be at least 16x16")
        if self.grid < 2:
            raise ValueError("grid must be at least 2")
        if self.num_train_pairs < 1 or self.num_eval_pairs < 0:
            raise ValueError("pair counts must be positive")
        missing = [s for s in STAGE_NAMES if s not in self.stages]
        if missing:
            raise ValueError(f"missing stage configs: {missing}")

    def to_dict(self) -> dict:
        d = asdict(self)
        return d


def config_hash(run: RunConfig) -> str:
    """Stable hex digest of the full run configuration."""
    blob = json.dumps(run.to_dict(), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def paper_profile(seed: int = 0) -> RunConfig:
    """Published training schedule at 256x192.

    GAN stages run the fixed-rate Adam schedule; the shape VAE holds its rate
    then decays linearly; the classifier halves its rate at the two step
    milestones.
    """
    return RunConfig(
        profile="paper",
        image_height=256,
        image_width=192,
        grid=32,
        seed=seed,
        num_train_pairs=512,
        num_eval_pairs=64,
        stages={
            "parsing": StageConfig(epochs=200),
            "contour": StageConfig(epochs=70),
            "correspondence": StageConfig(epochs=100),
            "synthesizer": StageConfig(epochs=300),
            "vae": StageConfig(epochs=300, const_epochs=100, decay_epochs=200),
            "texture": StageConfig(epochs=200, const_epochs=100, decay_epochs=100),
            "classifier": StageConfig(
                epochs=120, lr=1e-3, weight_decay=1e-4, halve_at=(15000, 24000)
            ),
        },
    )


def toy_profile(seed: int = 0) -> RunConfig:
    """Desk-scale profile: 64 synthetic pairs at 64x48, minutes on a CPU."""
    return RunConfig(
        profile="toy",
        image_height=64,
        image_width=48,
        grid=32,
        seed=seed,
        num_train_pairs=56,
        num_eval_pairs=8,
        stages={
            "parsing": StageConfig(epochs=40, batch_size=8),
            "contour": StageConfig(epochs=80, lr=2e-3, batch_size=8),
            "correspondence": StageConfig(
                epochs=120, lr=2e-3, const_epochs=60, decay_epochs=60, batch_size=8
            ),
            "synthesizer": StageConfig(epochs=80, batch_size=8, lambda_l1=100.0),
            "vae": StageConfig(epochs=60, lr=1e-3, const_epochs=30, decay_epochs=30, batch_size=8),
            "texture": StageConfig(epochs=30, const_epochs=15, decay_epochs=15, batch_size=8),
            "classifier": StageConfig(epochs=20, lr=1e-3, weight_decay=1e-4, batch_size=8),
        },
    )


PROFILES = {"paper": paper_profile, "toy": toy_profile}


def get_profile(name: str, seed: int = 0) -> RunConfig:
    if name not in PROFILES:
        raise ValueError(f"unknown profile {name!r}; expected one of {sorted(PROFILES)}")
    return PROFILES[name](seed=seed)


def config_from_dict(d: dict) -> RunConfig:
    """Rebuild a run configuration from its checkpoint-header dict."""
    stages = {
        name: StageConfig(
            epochs=sc["epochs"],
            lr=sc["lr"],
            batch_size=sc["batch_size"],
            const_epochs=sc.get("const_epochs"),
            decay_epochs=sc.get("decay_epochs", 0),
            weight_decay=sc.get("weight_decay", 0.0),
            betas=tuple(sc.get("betas", (0.5, 0.999))),
            halve_at=tuple(sc.get("halve_at", ())),
            lambda_l1=sc.get("lambda_l1"),
        )
        for name, sc in d["stages"].items()
    }
    return RunConfig(
        profile=d["profile"],
        image_height=d["image_height"],
        image_width=d["image_width"],
        grid=d["grid"],
        seed=d["seed"],
        lambda_adv=d["lambda_adv"],
        lambda_l1=d["lambda_l1"],
        lambda_recon=d["lambda_recon"],
        num_train_pairs=d["num_train_pairs"],
        num_eval_pairs=d["num_eval_pairs"],
        stages=stages,
    )


_RUN_FIELD_TYPES = {
    "image_height": int,
    "image_width": int,
    "grid": int,
    "seed": int,
    "lambda_adv": (int, float),
    "lambda_l1": (int, float),
    "lambda_recon": (int, float),
    "num_train_pairs": int,
    "num_eval_pairs": int,
}

_STAGE_FIELD_TYPES = {
    "epochs": int,
    "lr": (int, float),
    "batch_size": int,
    "const_epochs": (int, type(None)),
    "decay_epochs": int,
    "weight_decay": (int, float),
    "betas": (list, tuple),
    "halve_at": (list, tuple),
    "lambda_l1": (int, float, type(None)),
}


def _check_type(path: str, value, expected) -> None:
    # bool is an int subclass; reject it for numeric fields explicitly
    if isinstance(value, bool) or not isinstance(value, expected):
        names = (
            expected.__name__
            if isinstance(expected, type)
            else "/".join(t.__name__ for t in expected)
        )
        raise ValueError(f"{path}: expected {names}, got {value!r}")


def config_from_overrides(raw: dict) -> RunConfig:
    """Build a run configuration from a plain dict of overrides.

    Starts from the named profile preset (default `toy`) and applies the
    remaining keys on top. Unknown keys or ill-typed values raise ValueError
    naming the offending field path, e.g. `stages.parsing.epochs`.
    """
    if not isinstance(raw, dict):
        raise ValueError(f"config: expected an object, got {type(raw).__name__}")
    raw = dict(raw)
    profile = raw.pop("profile", "toy")
    if not isinstance(profile, str) or profile not in PROFILES:
        raise ValueError(f"profile: expected one of {sorted(PROFILES)}, got {profile!r}")
    seed = raw.pop("seed", 0)
    _check_type("seed", seed, int)
    base = get_profile(profile, seed=seed)

    run_kwargs = {}
    stage_overrides: Dict[str, dict] = {}
    for key, value in raw.items():
        if key == "stages":
            if not isinstance(value, dict):
                raise ValueError(f"stages: expected an object, got {type(value).__name__}")
            for sname, sval in value.items():
                if sname not in STAGE_NAMES:
                    raise ValueError(
                        f"stages.{sname}: unknown stage; expected one of {list(STAGE_NAMES)}"
                    )
                if not isinstance(sval, dict):
                    raise ValueError(
                        f"stages.{sname}: expected an object, got {type(sval).__name__}"
                    )
                for fname, fval in sval.items():
                    if fname not in _STAGE_FIELD_TYPES:
                        raise ValueError(f"stages.{sname}.{fname}: unknown field")
                    if not (fname == "const_epochs" and fval is None):
                        _check_type(f"stages.{sname}.{fname}", fval, _STAGE_FIELD_TYPES[fname])
                stage_overrides[sname] = dict(sval)
        elif key in _RUN_FIELD_TYPES:
            _check_type(key, value, _RUN_FIELD_TYPES[key])
            run_kwargs[key] = value
        else:
            raise ValueError(f"{key}: unknown configuration key")

    stages = {}
    for sname in STAGE_NAMES:
        sc = asdict(base.stages[sname])
        sc.update(stage_overrides.get(sname, {}))
        sc["betas"] = tuple(sc["betas"])
        sc["halve_at"] = tuple(sc["halve_at"])
        try:
            stages[sname] = StageConfig(**sc)
        except ValueError as exc:
            raise ValueError(f"stages.{sname}: {exc}") from exc

    merged = asdict(base)
    merged.pop("stages")
    merged.update(run_kwargs)
    merged["profile"] = profile
    merged["seed"] = seed
    return RunConfig(stages=stages, **merged)


def config_from_json(path: Path) -> RunConfig:
    """Load a run configuration from a JSON file (profile preset + overrides)."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: top level must be a JSON object")
    return config_from_overrides(raw)


def resolve_data_dir(explicit: Optional[str] = None) -> Path:
    """Data directory: explicit argument > STYLE_VTON_DATA > ./data."""
    if explicit:
        return Path(explicit)
    env = os.environ.get(DATA_ENV_VAR)
    if env:
        return Path(env)
    return Path("data")
