# Path: /src/aean/__init__.py
from src.aean.losses import adversarial_loss, reconstruction_loss
from src.aean.model import DIMENSIONS, AeanModel, build_aean
from src.aean.persistence import load_model, save_model
from src.aean.synthesis import synthesize_hsi
from src.aean.trainer import (
    NonFiniteLossError, TrainConfig, TrainResult, UntrainedModelError, resolve_config, train_aean,
)
