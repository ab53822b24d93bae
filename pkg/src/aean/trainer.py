# Path: /src/aean/trainer.py
# Adversarial training: per batch one discriminator ascent step on the
# adversarial loss, then one autoencoder descent step on adversarial + lambda * l1.
import csv
import logging
import time
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from src.aean.losses import (
    adversarial_loss, fake_term, fake_term_gradient, real_term_gradient, reconstruction_gradient,
    reconstruction_loss,
)
from src.aean.model import DEFAULT_LAMBDA, AeanModel
from src.nn.network import NonFiniteError
from src.nn.optimizer import DEFAULT_BETAS, DEFAULT_LEARNING_RATE, Adam
from src.purify.training_set import EmptyTrainingSetError, TrainingSet

logger = logging.getLogger(__name__)

DEFAULT_EPOCHS = {1: 300, 2: 500, 3: 500}
DEFAULT_BATCH_SIZE = {1: 64, 2: 16, 3: 16}


class NonFiniteLossError(FloatingPointError):
    def __init__(self, step, detail=""):
        self.step = step
        self.message = f"Training diverged at step {step}" + (f": {detail}" if detail else "")
        super().__init__(self.message)


class UntrainedModelError(RuntimeError):
    def __init__(self, model):
        self.message = f"{model} has not been trained"
        super().__init__(self.message)


@dataclass
class TrainConfig:
    epochs: int = 500
    batch_size: int = 16
    seed: int = 0
    lam: float = DEFAULT_LAMBDA
    lr_autoencoder: float = DEFAULT_LEARNING_RATE
    lr_discriminator: float = DEFAULT_LEARNING_RATE
    betas: Tuple[float, float] = DEFAULT_BETAS
    log_interval: int = 50

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"Epochs must be >= 1, got {self.epochs}")
        if self.batch_size < 1:
            raise ValueError(f"Batch size must be >= 1, got {self.batch_size}")
        if self.lam <= 0:
            raise ValueError(f"Lambda must be > 0, got {self.lam}")
        if self.log_interval < 1:
            raise ValueError(f"Log interval must be >= 1, got {self.log_interval}")

    @classmethod
    def for_dim(cls, dim, **overrides):
        settings = {"epochs": DEFAULT_EPOCHS[dim], "batch_size": DEFAULT_BATCH_SIZE[dim]}
        settings.update({key: value for key, value in overrides.items() if value is not None})
        return cls(**settings)

    def to_dict(self):
        data = asdict(self)
        data["betas"] = list(self.betas)
        return data


@dataclass
class TraceEntry:
    step: int
    adversarial: float
    reconstruction: float
    total: float


@dataclass
class TrainResult:
    model: AeanModel
    config: Optional[TrainConfig] = None
    trace: List[TraceEntry] = field(default_factory=list)
    steps: int = 0
    seconds: float = 0.0
    infer_error: Optional[float] = None

    def save_trace(self, path):
        with open(path, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["step", "l_adv", "l_r", "total"])
            for entry in self.trace:
                writer.writerow([entry.step, repr(entry.adversarial), repr(entry.reconstruction), repr(entry.total)])


def discriminator_objective(model: AeanModel, samples, reconstructions) -> float:
    """Accumulate the gradients of -L_Adv into the discriminator; returns L_Adv."""
    disc = model.discriminator
    real = disc.forward(samples)
    disc.backward(-real_term_gradient(real))
    fake = disc.forward(reconstructions)
    disc.backward(-fake_term_gradient(fake))
    return adversarial_loss(real, fake)


def autoencoder_objective(model: AeanModel, samples, reconstructions) -> Tuple[float, float]:
    """Accumulate the gradients of E[log(1 - D(A(s)))] + lambda * L_R into the autoencoder.

    ``reconstructions`` must come from the latest autoencoder forward pass on
    ``samples``. Returns the two loss terms.
    """
    disc = model.discriminator
    fake = disc.forward(reconstructions)
    d_reconstruction = disc.backward(fake_term_gradient(fake))
    d_reconstruction = d_reconstruction + model.lam * reconstruction_gradient(samples, reconstructions)
    model.autoencoder.backward(d_reconstruction)
    return fake_term(fake), reconstruction_loss(samples, reconstructions)


def reconstruction_error(model: AeanModel, samples, batch_size=256) -> float:
    """Mean l1 error of the autoencoder in infer mode."""
    samples = np.asarray(samples, dtype=model.autoencoder.dtype)
    model.autoencoder.infer()
    errors = []
    for start in range(0, samples.shape[0], batch_size):
        batch = samples[start:start + batch_size]
        errors.append(np.abs(model.autoencoder.forward(batch) - batch).sum())
    return float(np.sum(errors) / samples.size)


def train_aean(model: AeanModel, training_set: TrainingSet, config: TrainConfig) -> TrainResult:
    if training_set.count == 0:
        raise EmptyTrainingSetError(training_set.dim)
    if training_set.dim != model.dim:
        raise ValueError(f"Training set d={training_set.dim} does not match {model}")
    if training_set.sample_shape != model.sample_shape:
        raise ValueError(f"Training samples {training_set.sample_shape} do not match model input {model.sample_shape}")
    model.lam = config.lam

    rng = np.random.default_rng(config.seed)
    samples = training_set.samples.astype(model.autoencoder.dtype)
    autoencoder, discriminator = model.autoencoder, model.discriminator
    opt_autoencoder = Adam(autoencoder.parameters(), config.lr_autoencoder, config.betas)
    opt_discriminator = Adam(discriminator.parameters(), config.lr_discriminator, config.betas)
    model.train()

    result = TrainResult(model=model, config=config)
    window = []
    started = time.perf_counter()
    step = 0
    logger.info("Training %s on %d samples: %d epochs, batch %d, seed %d",
                model, training_set.count, config.epochs, config.batch_size, config.seed)
    for epoch in range(config.epochs):
        order = rng.permutation(training_set.count)
        for start in range(0, training_set.count, config.batch_size):
            batch = samples[order[start:start + config.batch_size]]
            step += 1
            try:
                reconstructions = autoencoder.forward(batch)

                discriminator.zero_grad()
                l_adv = discriminator_objective(model, batch, reconstructions)
                opt_discriminator.step(discriminator.gradients())

                discriminator.zero_grad()
                autoencoder.zero_grad()
                _, l_r = autoencoder_objective(model, batch, reconstructions)
                opt_autoencoder.step(autoencoder.gradients())
            except NonFiniteError as e:
                raise NonFiniteLossError(step, str(e)) from e

            total = l_adv + model.lam * l_r
            if not np.isfinite(total):
                raise NonFiniteLossError(step, f"l_adv={l_adv}, l_r={l_r}")
            window.append((l_adv, l_r))
            if step % config.log_interval == 0:
                mean_adv, mean_r = np.mean(window, axis=0)
                result.trace.append(TraceEntry(step, float(mean_adv), float(mean_r),
                                               float(mean_adv + model.lam * mean_r)))
                window = []
                logger.info("epoch %d step %d: l_adv %.5f l_r %.5f", epoch + 1, step, mean_adv, mean_r)
            else:
                logger.debug("step %d: l_adv %.5f l_r %.5f", step, l_adv, l_r)
    if window:
        mean_adv, mean_r = np.mean(window, axis=0)
        result.trace.append(TraceEntry(step, float(mean_adv), float(mean_r), float(mean_adv + model.lam * mean_r)))

    model.trained = True
    model.infer()
    result.steps = step
    result.seconds = time.perf_counter() - started
    result.infer_error = reconstruction_error(model, samples)
    logger.info("Trained %s in %d steps (%.1f s)", model, step, result.seconds)
    return result


def resolve_config(dim: int, base: Optional[TrainConfig] = None, **overrides) -> TrainConfig:
    """Per-dimension defaults for epochs and batch size, with explicit overrides winning."""
    if base is None:
        return TrainConfig.for_dim(dim, **overrides)
    data = base.to_dict()
    data.update({key: value for key, value in overrides.items() if value is not None})
    data["betas"] = tuple(data["betas"])
    return TrainConfig(**data)
