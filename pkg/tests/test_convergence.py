"""Desk-scale convergence properties of the adversarial game.

Slower than unit tests (tens of seconds): each trains a small game to
convergence and checks it against the finite-space theory.
"""

import numpy as np

from genpu import core
from genpu.autodiff import Tensor, stable_sigmoid
from genpu.datagen import PuDataset, make_two_moons, pu_split


def stable_cfg(**overrides):
    base = dict(
        repulsion_loss="log_one_minus_d",
        beta1=0.5,
        d_steps=2,
    )
    base.update(overrides)
    return core.GenPuConfig(**base)


class TestDiscreteClusterEquilibrium:
    def test_trained_discriminators_approach_closed_forms(self):
        # two tight clusters on the line: positives at +1, negatives at -1.
        # At equilibrium the generators sit on their clusters, so the
        # density-ratio optima at the cluster centers are d_p = 0.5,
        # d_u = 0.5 (both points), d_n = 1 at +1 and 0 at -1.
        rng = np.random.default_rng(0)
        pos = rng.normal(1.0, 0.02, size=(400, 1))
        neg = rng.normal(-1.0, 0.02, size=(400, 1))
        data = PuDataset(
            x_p=Tensor(pos[:200]),
            x_u=Tensor(np.vstack([pos[200:], neg[:200]])),
            true_pi_p=0.5,
        )
        cfg = stable_cfg(
            pi_p=0.5,
            data_dim=1,
            latent_dim=8,
            gen_hidden=(32,),
            disc_p_hidden=(32,),
            disc_u_hidden=(32,),
            batch_p=25,
            batch_u=50,
            lr=1e-3,
            iterations=1500,
            seed=3,
        )
        state = core.init_state(cfg)
        core.train(state, cfg, data)

        centers = np.array([[1.0], [-1.0]])
        d_p = stable_sigmoid(state.d_p.apply_logits(centers))[:, 0]
        d_u = stable_sigmoid(state.d_u.apply_logits(centers))[:, 0]
        d_n = stable_sigmoid(state.d_n.apply_logits(centers))[:, 0]

        assert abs(d_p[0] - 0.5) <= 0.1
        assert abs(d_u[0] - 0.5) <= 0.1
        assert abs(d_u[1] - 0.5) <= 0.1
        assert abs(d_n[0] - 1.0) <= 0.1
        assert abs(d_n[1] - 0.0) <= 0.1

        # and the generators actually occupy their clusters
        gp = core.generate(state, "positive", 400, seed=9).data
        gn = core.generate(state, "negative", 400, seed=10).data
        assert np.mean(np.abs(gp - 1.0) < 0.3) >= 0.95
        assert np.mean(np.abs(gn + 1.0) < 0.3) >= 0.95


class TestSemisupAttraction:
    def test_negative_generator_recovers_negatives_by_attraction(self):
        # with labeled negatives, g_n is pulled onto them by d_n instead of
        # being pushed off the positives
        rng = np.random.default_rng(4)
        pos = rng.normal(1.0, 0.02, size=(300, 1))
        neg = rng.normal(-1.0, 0.02, size=(300, 1))
        data = PuDataset(
            x_p=Tensor(pos[:100]),
            x_u=Tensor(np.vstack([pos[100:200], neg[100:200]])),
            x_n=Tensor(neg[:100]),
            true_pi_p=0.5,
        )
        cfg = stable_cfg(
            pi_p=0.5,
            data_dim=1,
            latent_dim=8,
            gen_hidden=(32,),
            disc_p_hidden=(32,),
            disc_u_hidden=(32,),
            batch_p=25,
            batch_u=50,
            lr=1e-3,
            iterations=1500,
            seed=5,
            mode="semisup",
        )
        state = core.init_state(cfg)
        core.train(state, cfg, data)
        gn = core.generate(state, "negative", 400, seed=11).data
        gp = core.generate(state, "positive", 400, seed=12).data
        assert np.mean(np.abs(gn + 1.0) < 0.3) >= 0.95
        assert np.mean(np.abs(gp - 1.0) < 0.3) >= 0.95


class TestUnlabeledDiscriminatorTrend:
    def test_d_u_output_on_real_data_trends_toward_half(self):
        # small two-moons game: as the generator mixture matches the pool,
        # d_u loses its edge and its mean real-data output drifts to 0.5
        pool = make_two_moons(600, 0.1414, seed=1)
        data = pu_split(pool, 60, seed=1)
        cfg = stable_cfg(pi_p=data.true_pi_p, data_dim=2, iterations=2500, seed=2)
        state = core.init_state(cfg)
        history = core.train(state, cfg, data)
        gap = [abs(m.d_u_real - 0.5) for m in history]
        early = float(np.mean(gap[100:350]))
        late = float(np.mean(gap[-250:]))
        assert late <= early + 0.02
        assert late <= 0.15
