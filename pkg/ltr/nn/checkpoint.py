"""Versioned ``.npz`` checkpoints.

The archive holds a JSON header under ``__header__`` (format version, layer
dims, activation, batch norm flag, mode, seed, Adam hyperparameters and step,
RReLU noise generator state) and one array per parameter, batch norm running
statistic and Adam moment. Loading restores everything needed to resume
training bit-exactly.
"""

import json
import logging
from pathlib import Path

import numpy as np

from ltr.errors import CheckpointError
from ltr.nn.network import ScoringNet
from ltr.nn.optim import Adam

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1


def save_checkpoint(path: str | Path, net: ScoringNet, optimizer: Adam | None = None) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    header: dict[str, object] = {
        "format_version": FORMAT_VERSION,
        "layer_dims": net.layer_dims,
        "activation": str(net.activation),
        "batchnorm": net.batchnorm,
        "mode": net.mode,
        "rng_seed": net.rng_seed,
        "version": net.version,
        "noise_rng_state": net.noise_rng.bit_generator.state,
        "bn_momentum": [s.momentum for s in net.bn],
        "adam": None,
    }
    arrays: dict[str, np.ndarray] = {}
    for name, value in net.parameters().items():
        arrays[f"param__{name}"] = value
    for i, state in enumerate(net.bn):
        arrays[f"bn_running__{i}__mean"] = state.running_mean
        arrays[f"bn_running__{i}__var"] = state.running_var
    if optimizer is not None:
        st = optimizer.state
        header["adam"] = {
            "lr": st.lr,
            "beta1": st.beta1,
            "beta2": st.beta2,
            "eps": st.eps,
            "weight_decay": st.weight_decay,
            "step": st.step,
        }
        for name, m in st.first_moment.items():
            arrays[f"adam_m__{name}"] = m
        for name, v in st.second_moment.items():
            arrays[f"adam_v__{name}"] = v
    arrays["__header__"] = np.array(json.dumps(header))
    with path.open("wb") as fh:
        np.savez(fh, **arrays)
    logger.debug("Checkpoint saved to %s", path)
    return path


def load_checkpoint(path: str | Path) -> tuple[ScoringNet, Adam | None]:
    path = Path(path)
    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError) as exc:
        raise CheckpointError(detail="checkpoint not readable", path=str(path)) from exc
    with archive:
        if "__header__" not in archive.files:
            raise CheckpointError(detail="checkpoint header missing", path=str(path))
        header = json.loads(str(archive["__header__"]))
        if header.get("format_version") != FORMAT_VERSION:
            raise CheckpointError(
                detail="unsupported checkpoint version",
                path=str(path),
                version=header.get("format_version"),
            )
        net = ScoringNet(
            header["layer_dims"],
            activation=header["activation"],
            batchnorm=header["batchnorm"],
            seed=header["rng_seed"],
        )
        net.mode = header["mode"]
        net.version = header["version"]
        net.noise_rng.bit_generator.state = header["noise_rng_state"]
        params = net.parameters()
        for name, target in params.items():
            key = f"param__{name}"
            if key not in archive.files:
                raise CheckpointError(detail="parameter missing", path=str(path), param=name)
            value = archive[key]
            if value.shape != target.shape:
                raise CheckpointError(detail="parameter shape mismatch", param=name)
            target[...] = value
        for i, state in enumerate(net.bn):
            state.running_mean = archive[f"bn_running__{i}__mean"].copy()
            state.running_var = archive[f"bn_running__{i}__var"].copy()
            state.momentum = header["bn_momentum"][i]
        optimizer = None
        adam = header.get("adam")
        if adam is not None:
            optimizer = Adam(
                lr=adam["lr"],
                weight_decay=adam["weight_decay"],
                beta1=adam["beta1"],
                beta2=adam["beta2"],
                eps=adam["eps"],
            )
            optimizer.state.step = adam["step"]
            for key in archive.files:
                if key.startswith("adam_m__"):
                    optimizer.state.first_moment[key[len("adam_m__") :]] = archive[key].copy()
                elif key.startswith("adam_v__"):
                    optimizer.state.second_moment[key[len("adam_v__") :]] = archive[key].copy()
    return net, optimizer
