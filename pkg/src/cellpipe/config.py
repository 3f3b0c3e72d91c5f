"""Declarative run configuration shared by every pipeline subcommand.

A persisted RunConfig re-executes to byte-identical outputs; every
artifact embeds the config hash, and artifacts produced under different
augmentation/threshold settings refuse to aggregate (see the
fingerprint, which ignores paths but pins everything that changes
results).
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path

from .augment import D4Element, D4_ELEMENTS, DEFAULT_GAMMAS, PowerLawParams
from .model import CellClass, FormatError

DEFAULT_D4_TOKENS = tuple(g.token for g in D4_ELEMENTS)
DEFAULT_GAMMA_TOKENS = tuple(str(g) for g in DEFAULT_GAMMAS)


@dataclass(frozen=True)
class RunConfig:
    dataset_dir: str = "."
    out_dir: str = "out"
    folds: int = 5
    seed: int = 0
    d4: tuple[str, ...] = DEFAULT_D4_TOKENS
    gammas: tuple[str, ...] = DEFAULT_GAMMA_TOKENS
    c: float = 1.0
    detector: str = "blob"
    detector_params: dict = field(default_factory=dict)
    iou_threshold: float = 0.5
    grayscale: bool = False
    stratify: bool = False
    class_aware_matching: bool = False

    def __post_init__(self) -> None:
        if self.folds < 2:
            raise FormatError("folds must be at least 2")
        if not 0.0 < self.iou_threshold <= 1.0:
            raise FormatError("iou_threshold must be in (0, 1]")
        if self.detector not in ("blob", "perturb"):
            raise FormatError(f"unknown detector {self.detector!r}")
        for token in self.d4:
            try:
                D4Element.from_token(token)
            except ValueError as exc:
                raise FormatError(str(exc)) from None
        for token in self.gammas:
            try:
                gamma = Fraction(token)
            except (ValueError, ZeroDivisionError):
                raise FormatError(f"malformed gamma {token!r}") from None
            if gamma <= 0:
                raise FormatError(f"gamma must be positive: {token!r}")
        if self.c <= 0:
            raise FormatError("c must be positive")

    def d4_schedule(self) -> tuple[D4Element, ...]:
        return tuple(D4Element.from_token(t) for t in self.d4)

    def power_schedule(self) -> tuple[PowerLawParams, ...]:
        return tuple(PowerLawParams(gamma=Fraction(t), c=self.c) for t in self.gammas)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["d4"] = list(self.d4)
        d["gammas"] = list(self.gammas)
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def config_hash(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()[:16]

    def fingerprint(self) -> str:
        """Hash of everything that affects results, ignoring file locations."""
        d = self.to_dict()
        d.pop("dataset_dir")
        d.pop("out_dir")
        blob = json.dumps(d, sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _coerce(d: dict) -> RunConfig:
    known = {f for f in RunConfig.__dataclass_fields__}
    unknown = set(d) - known
    if unknown:
        raise FormatError(f"unknown config keys: {sorted(unknown)}")
    if "d4" in d:
        d["d4"] = tuple(d["d4"])
    if "gammas" in d:
        d["gammas"] = tuple(str(g) for g in d["gammas"])
    return RunConfig(**d)


def load_config(path: str | Path) -> RunConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"malformed config {path}: {exc}") from None
    if not isinstance(doc, dict):
        raise FormatError(f"config {path} must be a JSON object")
    return _coerce(doc)


def apply_overrides(config: RunConfig, **overrides) -> RunConfig:
    """Flag overrides win over the config file; None means 'not given'."""
    given = {k: v for k, v in overrides.items() if v is not None}
    if "d4" in given:
        given["d4"] = tuple(given["d4"])
    if "gammas" in given:
        given["gammas"] = tuple(given["gammas"])
    return replace(config, **given) if given else config


def blob_params_from_config(config: RunConfig):
    from .detectors import BlobDetectorParams

    p = dict(config.detector_params)
    for key in ("single_class", "cluster_class"):
        if key in p:
            p[key] = CellClass.from_token(p[key])
    try:
        return BlobDetectorParams(**p)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad blob detector params: {exc}") from None


def perturbation_params_from_config(config: RunConfig):
    from .detectors import PerturbationParams

    try:
        return PerturbationParams(**config.detector_params)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad perturbation detector params: {exc}") from None
