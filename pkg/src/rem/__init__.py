# Path: /src/rem/__init__.py
from src.rem.error_map import (
    Rem, StructuringElementError, WeightMap, compute_rem, morphological_close, smooth_rem, weights_from_rem,
    weights_from_scores,
)
