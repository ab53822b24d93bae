# Path: /src/nn/checkpoint.py
# Binary checkpoint: magic "AEAN", version byte, model dimension, a JSON layer
# table, then float32 little-endian parameters and BN running statistics in
# declaration order.
import json
import logging
import struct
from typing import Dict, Tuple

import numpy as np

from src.nn.layers import LayerSpec
from src.nn.network import Network

logger = logging.getLogger(__name__)

MAGIC = b"AEAN"
VERSION = 1
# magic, version, d, layer-table length
PREAMBLE = struct.Struct("<4sBBI")


class CheckpointError(ValueError):
    def __init__(self, path, reason):
        self.message = f"Checkpoint {path}: {reason}"
        super().__init__(self.message)


def _network_table(network: Network):
    return {
        "name": network.name,
        "input_shape": list(network.input_shape),
        "layers": [spec.to_dict() for spec in network.specs],
        "parameters": [[key, list(value.shape)] for key, value in network.parameters().items()],
        "buffers": [[key, list(value.shape)] for key, value in network.buffers().items()],
    }


def save_checkpoint(path, dim: int, networks: Dict[str, Network], meta=None):
    table = {"networks": {name: _network_table(net) for name, net in networks.items()}, "meta": meta or {}}
    encoded = json.dumps(table, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(PREAMBLE.pack(MAGIC, VERSION, dim, len(encoded)))
        f.write(encoded)
        for name in sorted(networks):
            net = networks[name]
            for value in list(net.parameters().values()) + list(net.buffers().values()):
                f.write(np.ascontiguousarray(value, dtype="<f4").tobytes())
    logger.debug("Saved checkpoint d=%d to %s", dim, path)


def load_checkpoint(path, dtype=np.float32) -> Tuple[int, Dict[str, Network], dict]:
    """Rebuild every stored network and return ``(d, networks, meta)``."""
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < PREAMBLE.size:
        raise CheckpointError(path, "truncated preamble")
    magic, version, dim, table_length = PREAMBLE.unpack_from(raw)
    if magic != MAGIC:
        raise CheckpointError(path, f"bad magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(path, f"unsupported version {version}")
    start = PREAMBLE.size
    try:
        table = json.loads(raw[start:start + table_length].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise CheckpointError(path, f"unreadable layer table ({e})")
    offset = start + table_length

    networks = {}
    for name in sorted(table["networks"]):
        entry = table["networks"][name]
        specs = [LayerSpec.from_dict(layer) for layer in entry["layers"]]
        net = Network(specs, entry["input_shape"], dtype=dtype, name=entry["name"])
        loaded = {}
        for group in ("parameters", "buffers"):
            values = {}
            for key, shape in entry[group]:
                count = int(np.prod(shape))
                if offset + 4 * count > len(raw):
                    raise CheckpointError(path, f"payload ends inside '{name}/{key}'")
                values[key] = np.frombuffer(raw, dtype="<f4", count=count, offset=offset).reshape(shape)
                offset += 4 * count
            loaded[group] = values
        net.load_state(loaded["parameters"], loaded["buffers"])
        networks[name] = net
    if offset != len(raw):
        raise CheckpointError(path, f"{len(raw) - offset} trailing bytes")
    return dim, networks, table.get("meta", {})
