# Path: /src/__init__.py
# Unsupervised pixel-wise hyperspectral anomaly detection with autoencoding adversarial networks.
__version__ = "0.1.0"
