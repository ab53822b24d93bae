# Path: /src/nn/__init__.py
from src.nn.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from src.nn.layers import LayerSpec, ShapeMismatchError
from src.nn.network import BackwardBeforeForwardError, Network, NonFiniteError
from src.nn.optimizer import Adam, OptimizerState
