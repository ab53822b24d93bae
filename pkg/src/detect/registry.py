# Path: /src/detect/registry.py
# Detector names accepted by the pipeline and their expansion per AEAN dimension.
import re
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

CLASSICAL_DETECTORS = ("rx", "wrx", "lrx", "wlrx")
AEAN_DETECTORS = ("aean-rem", "aean-wrx", "aean-wlrx")
COMBINED_DETECTOR = "comb"
COMBINED_BASE = "aean-wlrx"
COMBINED_DIMS = (1, 2, 3)
DETECTORS = CLASSICAL_DETECTORS + AEAN_DETECTORS + (COMBINED_DETECTOR,)

_SUFFIX = re.compile(r"^(?P<base>.+)-(?P<dim>[123])d$")


@dataclass(frozen=True)
class DetectorSpec:
    base: str
    dim: Optional[int] = None

    @property
    def name(self) -> str:
        return f"{self.base}-{self.dim}d" if self.dim is not None else self.base

    @property
    def uses_aean(self) -> bool:
        return self.base in AEAN_DETECTORS or self.base == COMBINED_DETECTOR

    @property
    def local(self) -> bool:
        return self.base in ("lrx", "wlrx", "aean-wlrx", COMBINED_DETECTOR)

    def __str__(self):
        return self.name


def parse_detector(name: str) -> DetectorSpec:
    """``aean-wlrx-2d`` -> DetectorSpec("aean-wlrx", 2); ``rx`` -> DetectorSpec("rx")."""
    name = name.strip().lower()
    match = _SUFFIX.match(name)
    if match and match.group("base") in AEAN_DETECTORS:
        return DetectorSpec(match.group("base"), int(match.group("dim")))
    if name in DETECTORS:
        return DetectorSpec(name)
    raise ValueError(f"Unknown detector '{name}', expected one of {DETECTORS} "
                     f"(AEAN detectors may carry a -1d/-2d/-3d suffix)")


def expand_detectors(names: Iterable[str], dims: Sequence[int]) -> List[DetectorSpec]:
    """Resolve names to concrete detectors; an AEAN detector without suffix runs once per dimension in ``dims``."""
    expanded = []
    for name in names:
        spec = parse_detector(name)
        if spec.base in AEAN_DETECTORS and spec.dim is None:
            candidates = [DetectorSpec(spec.base, dim) for dim in dims]
        else:
            candidates = [spec]
        expanded.extend(candidate for candidate in candidates if candidate not in expanded)
    return expanded


def required_dims(detectors: Iterable[DetectorSpec]) -> List[int]:
    dims = set()
    for spec in detectors:
        if spec.base == COMBINED_DETECTOR:
            dims.update(COMBINED_DIMS)
        elif spec.uses_aean:
            dims.add(spec.dim)
    return sorted(dims)
