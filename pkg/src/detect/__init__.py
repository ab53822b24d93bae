# Path: /src/detect/__init__.py
from src.detect.combine import DEFAULT_COMBINATION, combine_scores, min_max_normalize
from src.detect.local import WindowError, WindowSpec, local_scores
from src.detect.rx import WeightedStats, rx_scores, uniform_weights, weighted_stats, wrx_scores
from src.detect.registry import DETECTORS, DetectorSpec, expand_detectors, parse_detector, required_dims
