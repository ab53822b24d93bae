# Path: /src/aean/losses.py
# Adversarial cross-entropy and l1 reconstruction losses with their gradients.
import numpy as np

PROBABILITY_CLAMP = 1e-7


def _clamp(scores):
    return np.clip(np.asarray(scores, dtype=np.float64), PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP)


def adversarial_loss(real_scores, fake_scores) -> float:
    """E[log D(s)] + E[log(1 - D(A(s)))], averaged over the batch.

    The discriminator ascends this value, the autoencoder descends it.
    """
    real, fake = _clamp(real_scores), _clamp(fake_scores)
    return float(np.mean(np.log(real)) + np.mean(np.log(1.0 - fake)))


def real_term_gradient(real_scores) -> np.ndarray:
    """d E[log D(s)] / d D(s); zero where the clamp is active."""
    raw = np.asarray(real_scores, dtype=np.float64)
    real = _clamp(raw)
    return np.where(real == raw, 1.0 / (real * real.size), 0.0)


def fake_term(fake_scores) -> float:
    return float(np.mean(np.log(1.0 - _clamp(fake_scores))))


def fake_term_gradient(fake_scores) -> np.ndarray:
    """d E[log(1 - D(A(s)))] / d D(A(s)); zero where the clamp is active."""
    raw = np.asarray(fake_scores, dtype=np.float64)
    fake = _clamp(raw)
    return np.where(fake == raw, -1.0 / ((1.0 - fake) * fake.size), 0.0)


def reconstruction_loss(samples, reconstructions) -> float:
    """Mean absolute deviation over every element of the batch."""
    samples = np.asarray(samples)
    reconstructions = np.asarray(reconstructions)
    if samples.shape != reconstructions.shape:
        raise ValueError(f"Reconstruction shape {reconstructions.shape} does not match samples {samples.shape}")
    return float(np.mean(np.abs(samples.astype(np.float64) - reconstructions)))


def reconstruction_gradient(samples, reconstructions) -> np.ndarray:
    """d(reconstruction_loss)/d(reconstructions); the subgradient at 0 is 0."""
    diff = np.asarray(reconstructions, dtype=np.float64) - samples
    return np.sign(diff) / diff.size
