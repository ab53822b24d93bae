# Path: /src/evaluation/__init__.py
from src.evaluation.roc import (RocCurve, SingleClassError, append_result, detection_map, detection_threshold,
                                load_roc, read_results, roc_curve, save_roc)
