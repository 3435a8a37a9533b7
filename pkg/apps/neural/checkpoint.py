"""
Parameter checkpoints.

A checkpoint is a numpy ``.npz`` archive holding ``format_version``, the
network names, and for every network ``<name>.sizes`` plus one
``<name>.w<k>`` / ``<name>.b<k>`` pair per layer. Scalars such as the
entropy temperature are stored under ``extra.<key>``.
"""
import logging
from pathlib import Path
from typing import Dict, Tuple, Union

import numpy as np

from apps.neural.mlp import Mlp
from apps.shared.exceptions import ConfigurationError

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def save_checkpoint(path: Union[str, Path], networks: Dict[str, Mlp], extra: Dict[str, float] = None) -> Path:
    path = Path(path)
    if path.suffix != '.npz':
        path = path.with_suffix('.npz')
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {
        'format_version': np.array(FORMAT_VERSION),
        'networks': np.array(sorted(networks)),
    }
    for name, net in networks.items():
        arrays[f"{name}.sizes"] = np.array(net.sizes, dtype=np.int64)
        for k, (w, b) in enumerate(zip(net.weights, net.biases)):
            arrays[f"{name}.w{k}"] = w
            arrays[f"{name}.b{k}"] = b
    for key, value in (extra or {}).items():
        arrays[f"extra.{key}"] = np.array(value, dtype=np.float64)
    np.savez(path, **arrays)
    logger.info(f"Saved checkpoint with {len(networks)} network(s) to {path}")
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[Dict[str, Mlp], Dict[str, float]]:
    path = Path(path)
    if not path.exists():
        raise ConfigurationError("Checkpoint not found", path=str(path))
    with np.load(path, allow_pickle=False) as archive:
        version = int(archive['format_version'])
        if version != FORMAT_VERSION:
            raise ConfigurationError("Unsupported checkpoint version", version=version, expected=FORMAT_VERSION)
        networks = {}
        for name in archive['networks'].tolist():
            sizes = archive[f"{name}.sizes"].tolist()
            layers = len(sizes) - 1
            networks[name] = Mlp(
                sizes,
                weights=[archive[f"{name}.w{k}"] for k in range(layers)],
                biases=[archive[f"{name}.b{k}"] for k in range(layers)],
            )
        extra = {key[len('extra.'):]: float(archive[key]) for key in archive.files if key.startswith('extra.')}
    return networks, extra
