"""Checkpoint round-trip tests: everything restored bit-exact."""

import json

import numpy as np
import pytest

from genpu import core
from genpu.autodiff import Tensor
from genpu.checkpoint import load_checkpoint, save_checkpoint
from genpu.core import GenPuConfig, init_state, train_step
from genpu.datagen import PuDataset


def small_state(seed=0, iterations=5):
    cfg = GenPuConfig(
        pi_p=0.5,
        data_dim=2,
        latent_dim=4,
        gen_hidden=(8,),
        disc_p_hidden=(8,),
        disc_u_hidden=(8,),
        batch_p=4,
        batch_u=8,
        lr=1e-3,
        iterations=iterations,
        seed=seed,
    )
    state = init_state(cfg)
    rng = np.random.default_rng(seed + 1)
    data = PuDataset(x_p=Tensor(rng.normal(size=(10, 2))), x_u=Tensor(rng.normal(size=(20, 2))), true_pi_p=0.5)
    for _ in range(iterations):
        train_step(state, cfg, data)
    return state, cfg, data


class TestRoundTrip:
    def test_parameters_bit_exact(self, tmp_path):
        state, cfg, _ = small_state()
        path = tmp_path / "ckpt.json"
        save_checkpoint(state, cfg, str(path))
        loaded, cfg2 = load_checkpoint(str(path))
        assert cfg2 == cfg
        assert loaded.iteration == state.iteration
        for name, net in state.networks.items():
            twin = loaded.networks[name]
            for k, v in net.parameters().items():
                assert np.array_equal(v, twin.parameters()[k])
            assert twin.activations == net.activations

    def test_optimizer_moments_bit_exact(self, tmp_path):
        state, cfg, _ = small_state(seed=2)
        path = tmp_path / "ckpt.json"
        save_checkpoint(state, cfg, str(path))
        loaded, _ = load_checkpoint(str(path))
        for name in state.opt:
            assert loaded.opt[name].t == state.opt[name].t
            for k in state.opt[name].m:
                assert np.array_equal(loaded.opt[name].m[k], state.opt[name].m[k])
                assert np.array_equal(loaded.opt[name].v[k], state.opt[name].v[k])

    def test_rng_stream_resumes_identically(self, tmp_path):
        state, cfg, data = small_state(seed=3)
        path = tmp_path / "ckpt.json"
        save_checkpoint(state, cfg, str(path))
        loaded, _ = load_checkpoint(str(path))
        # continuing both must give the same trajectory
        m1 = train_step(state, cfg, data)
        m2 = train_step(loaded, cfg, data)
        assert m1 == m2
        for name, net in state.networks.items():
            for k, v in net.parameters().items():
                assert np.array_equal(v, loaded.networks[name].parameters()[k])

    def test_generation_identical_after_reload(self, tmp_path):
        state, cfg, _ = small_state(seed=4)
        path = tmp_path / "ckpt.json"
        save_checkpoint(state, cfg, str(path))
        loaded, _ = load_checkpoint(str(path))
        a = core.generate(state, "positive", 20, seed=9).data
        b = core.generate(loaded, "positive", 20, seed=9).data
        assert np.array_equal(a, b)

    def test_unknown_version_rejected(self, tmp_path):
        state, cfg, _ = small_state(seed=5)
        path = tmp_path / "ckpt.json"
        save_checkpoint(state, cfg, str(path))
        blob = json.loads(path.read_text())
        blob["format_version"] = 99
        path.write_text(json.dumps(blob))
        with pytest.raises(ValueError, match="version"):
            load_checkpoint(str(path))
