"""Versioned JSON checkpoints for the full training state.

Arrays are base64-encoded raw float64 bytes, so a save/load round trip is
bit-exact, including the optimizer moments and the RNG stream position.
"""

from __future__ import annotations

import json

import numpy as np

from .autodiff import adam_from_dict, adam_to_dict, network_from_dict, network_to_dict
from .core import GenPuConfig, GenPuState, NETWORK_NAMES
from .datagen import LatentPrior

__all__ = ["save_checkpoint", "load_checkpoint", "FORMAT_VERSION"]

FORMAT_VERSION = 1


def save_checkpoint(state: GenPuState, cfg: GenPuConfig, path: str) -> None:
    blob = {
        "format_version": FORMAT_VERSION,
        "config": cfg.to_dict(),
        "iteration": state.iteration,
        "networks": {name: network_to_dict(net) for name, net in state.networks.items()},
        "optimizers": {name: adam_to_dict(opt) for name, opt in state.opt.items()},
        "rng_state": state.rng.bit_generator.state,
    }
    with open(path, "w", encoding="ascii") as f:
        json.dump(blob, f)


def load_checkpoint(path: str) -> tuple[GenPuState, GenPuConfig]:
    with open(path, encoding="ascii") as f:
        blob = json.load(f)
    version = blob.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported checkpoint format version {version!r}")
    cfg = GenPuConfig.from_dict(blob["config"])
    nets = {name: network_from_dict(blob["networks"][name]) for name in NETWORK_NAMES}
    opts = {name: adam_from_dict(blob["optimizers"][name]) for name in NETWORK_NAMES}
    rng = np.random.default_rng()
    rng.bit_generator.state = blob["rng_state"]
    state = GenPuState(
        d_p=nets["d_p"],
        d_u=nets["d_u"],
        d_n=nets["d_n"],
        g_p=nets["g_p"],
        g_n=nets["g_n"],
        opt=opts,
        prior=LatentPrior(cfg.latent_dim),
        rng=rng,
        iteration=blob["iteration"],
    )
    return state, cfg
