# Path: /src/purify/__init__.py
from src.purify.background import (
    BackgroundMask, GlobalStats, global_stats, mahalanobis_scores, purify, threshold_by_confidence,
)
from src.purify.training_set import (
    EmptyTrainingSetError, TrainingSet, extract_block_set, extract_block_sets, extract_spectral_set,
    extract_training_sets, load_training_set, save_training_set,
)
