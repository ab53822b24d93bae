# Path: /src/tooling/config.py
# Pipeline configuration: dataclass defaults, INI files with one section per
# stage, and command-line overrides on top.
import configparser
import logging
import os
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Tuple

from src.aean.model import DIMENSIONS, DEFAULT_LAMBDA, MIN_BLOCK_SIZE
from src.detect.combine import DEFAULT_COMBINATION, WEIGHT_SUM_TOLERANCE
from src.detect.local import DEFAULT_INNER, DEFAULT_OUTER, WindowSpec
from src.detect.registry import COMBINED_DETECTOR, expand_detectors
from src.hsi.io import CUBE_FORMATS, RASTER_FORMATS
from src.purify.background import DEFAULT_CONFIDENCE
from src.purify.training_set import DEFAULT_BLOCK_SIZE, DEFAULT_STEP
from src.rem.error_map import DEFAULT_SE_SIZE, StructuringElementError
from src.tooling.utils import ConfigurationError, parse_floats

logger = logging.getLogger(__name__)

SECTIONS = ("input", "purify", "train", "rem", "detect", "eval", "output")


def _optional(convert):
    def parse(text):
        text = text.strip()
        return None if text.lower() in ("", "none", "auto") else convert(text)
    return parse


def _boolean(text):
    value = text.strip().lower()
    if value in ("1", "yes", "true", "on"):
        return True
    if value in ("0", "no", "false", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _ints(text):
    return tuple(int(part) for part in text.split(",") if part.strip())


def _names(text):
    return tuple(part.strip().lower() for part in text.split(",") if part.strip())


def _setting(section, parse, default=None, **kwargs):
    return field(default=default, metadata={"section": section, "parse": parse}, **kwargs)


@dataclass(frozen=True)
class PipelineConfig:
    # [input]
    cube: Optional[str] = _setting("input", _optional(str))
    cube_format: str = _setting("input", str, "envi-bsq")
    reference: Optional[str] = _setting("input", _optional(str))
    reference_format: str = _setting("input", str, "raw-f32")
    image_name: Optional[str] = _setting("input", _optional(str))
    normalize: bool = _setting("input", _boolean, True)
    # [purify]
    confidence: float = _setting("purify", float, DEFAULT_CONFIDENCE)
    purify_ridge: Optional[float] = _setting("purify", _optional(float))
    # [train]
    dims: Tuple[int, ...] = _setting("train", _ints, (2,))
    block_size: int = _setting("train", int, DEFAULT_BLOCK_SIZE)
    step: int = _setting("train", int, DEFAULT_STEP)
    lam: float = _setting("train", float, DEFAULT_LAMBDA)
    epochs: Optional[int] = _setting("train", _optional(int))
    batch_size: Optional[int] = _setting("train", _optional(int))
    lr_autoencoder: Optional[float] = _setting("train", _optional(float))
    lr_discriminator: Optional[float] = _setting("train", _optional(float))
    seed: int = _setting("train", int, 0)
    # [rem]
    se_size: int = _setting("rem", int, DEFAULT_SE_SIZE)
    # [detect]
    detectors: Tuple[str, ...] = _setting("detect", _names, ("rx", "aean-wlrx"))
    inner: int = _setting("detect", int, DEFAULT_INNER)
    outer: int = _setting("detect", int, DEFAULT_OUTER)
    ridge: Optional[float] = _setting("detect", _optional(float))
    comb_weights: Tuple[float, ...] = _setting("detect", parse_floats, DEFAULT_COMBINATION)
    # [eval]
    far: float = _setting("eval", float, 0.01)
    # [output]
    output: str = _setting("output", str, "runs/default")

    def __post_init__(self):
        if self.cube_format not in CUBE_FORMATS:
            raise ValueError(f"Unknown cube format '{self.cube_format}', expected one of {CUBE_FORMATS}")
        if self.reference_format not in RASTER_FORMATS:
            raise ValueError(f"Unknown reference format '{self.reference_format}', expected one of {RASTER_FORMATS}")
        if not 0.0 < self.confidence <= 1.0:
            raise ValueError(f"Confidence must be in (0, 1], got {self.confidence}")
        if not self.dims or any(dim not in DIMENSIONS for dim in self.dims):
            raise ValueError(f"AEAN dimensions must be drawn from {DIMENSIONS}, got {self.dims}")
        if self.block_size < MIN_BLOCK_SIZE:
            raise ValueError(f"Block size must be >= {MIN_BLOCK_SIZE}, got {self.block_size}")
        if self.step < 1:
            raise ValueError(f"Step must be >= 1, got {self.step}")
        if self.lam <= 0:
            raise ValueError(f"Lambda must be > 0, got {self.lam}")
        if self.se_size < 1 or self.se_size % 2 == 0:
            raise StructuringElementError(self.se_size)
        WindowSpec(self.inner, self.outer)
        if self.ridge is not None and self.ridge < 0:
            raise ValueError(f"Detector regularization must be >= 0, got {self.ridge}")
        if not self.detectors:
            raise ValueError("At least one detector is required")
        specs = expand_detectors(self.detectors, self.dims)
        if any(spec.base == COMBINED_DETECTOR for spec in specs):
            if len(self.comb_weights) != 3:
                raise ValueError(f"comb needs one weight per AEAN dimension, got {self.comb_weights}")
            if any(weight < 0 for weight in self.comb_weights) or \
                    abs(sum(self.comb_weights) - 1.0) > WEIGHT_SUM_TOLERANCE:
                raise ValueError(f"Combination weights must be nonnegative and sum to 1, got {self.comb_weights}")
        if not 0.0 <= self.far <= 1.0:
            raise ValueError(f"False alarm rate must be in [0, 1], got {self.far}")

    @property
    def window(self) -> WindowSpec:
        return WindowSpec(self.inner, self.outer)

    @property
    def name(self) -> str:
        if self.image_name:
            return self.image_name
        if self.cube:
            return os.path.splitext(os.path.basename(self.cube))[0]
        return "image"

    def with_overrides(self, **overrides) -> "PipelineConfig":
        """Copy with every non-None override applied."""
        return replace(self, **{key: value for key, value in overrides.items() if value is not None})

    def to_dict(self) -> dict:
        data = asdict(self)
        return {key: list(value) if isinstance(value, tuple) else value for key, value in data.items()}


def config_sections():
    """Map section name -> {key: field} over the PipelineConfig fields."""
    sections = {name: {} for name in SECTIONS}
    for item in fields(PipelineConfig):
        sections[item.metadata["section"]][item.name] = item
    return sections


def load_pipeline_config(path: str, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    """Read an INI file on top of ``base`` (the defaults when omitted)."""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Configuration file not found: {path}")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path)
    except configparser.Error as e:
        raise ConfigurationError(path, f"unreadable INI ({e})")

    known = config_sections()
    values = {}
    for section in parser.sections():
        if section not in known:
            raise ConfigurationError(path, f"unknown section [{section}], expected one of {SECTIONS}")
        for key, text in parser.items(section):
            if key not in known[section]:
                raise ConfigurationError(path, f"unknown key '{key}' in section [{section}]")
            try:
                values[key] = known[section][key].metadata["parse"](text)
            except ValueError as e:
                raise ConfigurationError(path, f"bad value for [{section}] {key}: {e}")
    logger.debug("Loaded %d settings from %s", len(values), path)
    return replace(base or PipelineConfig(), **values)


def save_pipeline_config(config: PipelineConfig, path: str):
    parser = configparser.ConfigParser(interpolation=None)
    for section, items in config_sections().items():
        parser.add_section(section)
        for key in items:
            value = getattr(config, key)
            if value is None:
                text = "auto"
            elif isinstance(value, tuple):
                text = ",".join(str(part) for part in value)
            else:
                text = str(value)
            parser.set(section, key, text)
    with open(path, "w") as file:
        parser.write(file)
