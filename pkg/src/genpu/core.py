"""The two-generator, three-discriminator adversarial game and its trainer.

Five networks play: g_p and g_n push latent noise toward positive and
negative real-like samples; d_p separates labeled positives from g_p's
output, d_u separates the unlabeled pool from the prior-weighted mix of
both generators, and d_n separates labeled positives from g_n's output.
d_n's feedback enters g_n's loss with a repelling sign, which drives g_n's
samples out of the positive region while d_u keeps them inside the data.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .autodiff import (
    AdamState,
    DivergenceError,
    MlpNetwork,
    Node,
    Tape,
    Tensor,
    adam_step,
    stable_log_sigmoid,
    stable_sigmoid,
    stable_softplus,
)
from .datagen import LatentPrior, PuDataset

__all__ = [
    "GenPuConfig",
    "GenPuState",
    "StepMetrics",
    "init_state",
    "loss_d_p",
    "loss_d_u",
    "loss_d_n",
    "loss_g_p",
    "loss_g_n",
    "train_step",
    "train_step_semisup",
    "train",
    "generate",
    "draw_noise",
    "draw_d_batches",
]

MODES = ("pu", "semisup")
GENERATOR_LOSSES = ("non_saturating", "saturating")
REPULSION_LOSSES = ("log_d", "log_one_minus_d")
NETWORK_NAMES = ("d_p", "d_u", "d_n", "g_p", "g_n")


@dataclass
class GenPuConfig:
    """All weights, shapes and optimizer settings of the game.

    pi_n is always derived as 1 - pi_p. The defaults are the synthetic 2-D
    setup: generators with two hidden layers of 128, discriminators with one
    hidden layer of 128, latent dimension 256, batches of 50 labeled /
    100 unlabeled, Adam(0.9, 0.999) at learning rate 3e-4.
    """

    pi_p: float
    data_dim: int = 2
    lambda_p: float = 1.0
    lambda_u: float = 1.0
    lambda_n: float = 1.0
    latent_dim: int = 256
    batch_p: int = 50
    batch_u: int = 100
    lr: float = 3e-4
    beta1: float = 0.9
    beta2: float = 0.999
    iterations: int = 4000
    mode: str = "pu"
    generator_loss: str = "non_saturating"
    repulsion_loss: str = "log_d"
    gen_hidden: tuple[int, ...] = (128, 128)
    disc_p_hidden: tuple[int, ...] = (128,)
    disc_u_hidden: tuple[int, ...] = (128,)
    hidden_activation: str = "relu"
    leaky_slope: float = 0.2
    gen_output_activation: str = "identity"
    d_steps: int = 1
    init: str = "glorot"
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.pi_p <= 1.0:
            raise ValueError(f"pi_p {self.pi_p} outside (0, 1]")
        if min(self.lambda_p, self.lambda_u, self.lambda_n) < 0:
            raise ValueError("lambda weights must be non-negative")
        if self.lambda_p == 0 and self.lambda_u == 0:
            raise ValueError("at least one of lambda_p, lambda_u must be positive")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.generator_loss not in GENERATOR_LOSSES:
            raise ValueError(f"generator_loss must be one of {GENERATOR_LOSSES}")
        if self.repulsion_loss not in REPULSION_LOSSES:
            raise ValueError(f"repulsion_loss must be one of {REPULSION_LOSSES}")
        if min(self.latent_dim, self.data_dim, self.batch_p, self.batch_u, self.d_steps) < 1:
            raise ValueError("latent_dim, data_dim, batch sizes and d_steps must be positive")
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        self.gen_hidden = tuple(self.gen_hidden)
        self.disc_p_hidden = tuple(self.disc_p_hidden)
        self.disc_u_hidden = tuple(self.disc_u_hidden)

    @property
    def pi_n(self) -> float:
        return 1.0 - self.pi_p

    @classmethod
    def for_images(cls, pi_p: float, data_dim: int = 784, **overrides) -> "GenPuConfig":
        """Image-scale preset: 100-d latent, 256/256 generators with tanh output,
        linear d_p/d_n heads, 256/256 d_u, leaky-relu hidden units."""
        base = dict(
            pi_p=pi_p,
            data_dim=data_dim,
            latent_dim=100,
            gen_hidden=(256, 256),
            disc_p_hidden=(),
            disc_u_hidden=(256, 256),
            hidden_activation="leaky_relu",
            gen_output_activation="tanh",
        )
        base.update(overrides)
        return cls(**base)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, blob: dict) -> "GenPuConfig":
        return cls(**blob)


@dataclass
class GenPuState:
    """Mutable training state: the five networks, their optimizers, and the RNG."""

    d_p: MlpNetwork
    d_u: MlpNetwork
    d_n: MlpNetwork
    g_p: MlpNetwork
    g_n: MlpNetwork
    opt: dict[str, AdamState]
    prior: LatentPrior
    rng: np.random.Generator
    iteration: int = 0

    @property
    def networks(self) -> dict[str, MlpNetwork]:
        return {"d_p": self.d_p, "d_u": self.d_u, "d_n": self.d_n, "g_p": self.g_p, "g_n": self.g_n}


def training_rng(seed: int) -> np.random.Generator:
    """The minibatch/noise stream used by the trainer for a given config seed."""
    return np.random.default_rng(np.random.SeedSequence(seed).spawn(2)[1])


def init_state(cfg: GenPuConfig) -> GenPuState:
    """Build the five networks and optimizer states deterministically from cfg.seed.

    Network initialization and the training stream use separate substreams so
    a consumer can re-derive either one independently.
    """
    init_seed = np.random.SeedSequence(cfg.seed).spawn(2)[0]
    rng = np.random.default_rng(init_seed)
    gen_sizes = [cfg.latent_dim, *cfg.gen_hidden, cfg.data_dim]
    dp_sizes = [cfg.data_dim, *cfg.disc_p_hidden, 1]
    du_sizes = [cfg.data_dim, *cfg.disc_u_hidden, 1]

    d_p = MlpNetwork.create("d_p", dp_sizes, cfg.hidden_activation, "sigmoid", rng, leaky_slope=cfg.leaky_slope, init=cfg.init)
    d_u = MlpNetwork.create("d_u", du_sizes, cfg.hidden_activation, "sigmoid", rng, leaky_slope=cfg.leaky_slope, init=cfg.init)
    d_n = MlpNetwork.create("d_n", dp_sizes, cfg.hidden_activation, "sigmoid", rng, leaky_slope=cfg.leaky_slope, init=cfg.init)
    g_p = MlpNetwork.create("g_p", gen_sizes, cfg.hidden_activation, cfg.gen_output_activation, rng, leaky_slope=cfg.leaky_slope, init=cfg.init)
    g_n = MlpNetwork.create("g_n", gen_sizes, cfg.hidden_activation, cfg.gen_output_activation, rng, leaky_slope=cfg.leaky_slope, init=cfg.init)

    nets = {"d_p": d_p, "d_u": d_u, "d_n": d_n, "g_p": g_p, "g_n": g_n}
    opt = {name: AdamState(net.parameters(), beta1=cfg.beta1, beta2=cfg.beta2) for name, net in nets.items()}
    return GenPuState(d_p=d_p, d_u=d_u, d_n=d_n, g_p=g_p, g_n=g_n, opt=opt, prior=LatentPrior(cfg.latent_dim), rng=training_rng(cfg.seed))


@dataclass(frozen=True)
class StepMetrics:
    """Per-step scalars: the five game objectives and mean discriminator outputs."""

    iteration: int
    v_dp: float
    v_du_gp: float
    v_du_gn: float
    v_dn: float
    v_gn_repulsion: float
    loss_g_p: float
    loss_g_n: float
    d_p_real: float
    d_p_fake: float
    d_u_real: float
    d_u_fake_p: float
    d_u_fake_n: float
    d_n_real: float
    d_n_fake: float

    FIELDS = (
        "iteration",
        "v_dp",
        "v_du_gp",
        "v_du_gn",
        "v_dn",
        "v_gn_repulsion",
        "loss_g_p",
        "loss_g_n",
        "d_p_real",
        "d_p_fake",
        "d_u_real",
        "d_u_fake_p",
        "d_u_fake_n",
        "d_n_real",
        "d_n_fake",
    )

    def row(self) -> list:
        return [getattr(self, f) for f in self.FIELDS]


# -- loss builders ---------------------------------------------------------
#
# Discriminator builders return the objective the discriminator ASCENDS;
# generator builders return the expression the generator DESCENDS. The
# class-prior prefactors from the alternating update rule are applied by the
# trainer, not here. All log terms are evaluated on pre-sigmoid logits via
# softplus forms, so saturated discriminators never produce -inf.


def _mean_log_d(tape: Tape, logits: Node) -> Node:
    """mean log D = mean of -softplus(-logit)."""
    return tape.mean(tape.log_sigmoid(logits))


def _mean_log_1md(tape: Tape, logits: Node) -> Node:
    """mean log(1-D) = mean of -softplus(logit)."""
    return tape.neg(tape.mean(tape.softplus(logits)))


def _check_batches(*batches) -> None:
    widths = set()
    for b in batches:
        arr = b.value if isinstance(b, Node) else np.asarray(b)
        if arr.ndim != 2 or arr.shape[0] < 1:
            raise ValueError("batches must be non-empty [m, d] arrays")
        widths.add(arr.shape[1])
    if len(widths) > 1:
        raise ValueError(f"batch widths differ: {sorted(widths)}")


def loss_d_p(tape: Tape, d_p: MlpNetwork, x_p_batch, fake_p_batch) -> Node:
    """Real-vs-fake objective for the positive discriminator (to be maximized)."""
    _check_batches(x_p_batch, fake_p_batch)
    s_real = d_p.on_tape(tape, x_p_batch, logits=True)
    s_fake = d_p.on_tape(tape, fake_p_batch, logits=True)
    return tape.add(_mean_log_d(tape, s_real), _mean_log_1md(tape, s_fake))


def loss_d_u(tape: Tape, d_u: MlpNetwork, x_u_batch, fake_p_batch, fake_n_batch, pi_p: float) -> Node:
    """Unlabeled discriminator objective against both generators (to be maximized).

    The fake side is prior-weighted: pi_p on g_p's samples, 1-pi_p on g_n's.
    """
    _check_batches(x_u_batch, fake_p_batch, fake_n_batch)
    s_real = d_u.on_tape(tape, x_u_batch, logits=True)
    s_fp = d_u.on_tape(tape, fake_p_batch, logits=True)
    s_fn = d_u.on_tape(tape, fake_n_batch, logits=True)
    fake_side = tape.add(
        tape.scale(_mean_log_1md(tape, s_fp), pi_p),
        tape.scale(_mean_log_1md(tape, s_fn), 1.0 - pi_p),
    )
    return tape.add(_mean_log_d(tape, s_real), fake_side)


def loss_d_n(tape: Tape, d_n: MlpNetwork, real_batch, fake_n_batch) -> Node:
    """Negative discriminator objective (to be maximized).

    In PU mode its "real" class is the labeled POSITIVES: d_n learns to tell
    positives apart from g_n's output, which is what makes its feedback a
    repulsion signal. In semi-supervised mode the real batch comes from the
    labeled negatives instead.
    """
    _check_batches(real_batch, fake_n_batch)
    s_real = d_n.on_tape(tape, real_batch, logits=True)
    s_fake = d_n.on_tape(tape, fake_n_batch, logits=True)
    return tape.add(_mean_log_d(tape, s_real), _mean_log_1md(tape, s_fake))


def loss_g_p(
    tape: Tape,
    d_p: MlpNetwork,
    d_u: MlpNetwork,
    fake_p_batch: Node,
    lambda_p: float,
    lambda_u: float,
    variant: str = "non_saturating",
) -> Node:
    """Positive generator loss (to be minimized): fool d_p and d_u at once.

    Non-saturating: -lambda_p*mean log D_p(fake) - lambda_u*mean log D_u(fake).
    Saturating: lambda_p*mean log(1-D_p(fake)) + lambda_u*mean log(1-D_u(fake)).
    Both push the discriminators' scores on fakes upward.
    """
    if variant not in GENERATOR_LOSSES:
        raise ValueError(f"variant must be one of {GENERATOR_LOSSES}")
    s_p = d_p.on_tape(tape, fake_p_batch, logits=True, trainable=False)
    s_u = d_u.on_tape(tape, fake_p_batch, logits=True, trainable=False)
    if variant == "non_saturating":
        return tape.add(
            tape.scale(tape.neg(_mean_log_d(tape, s_p)), lambda_p),
            tape.scale(tape.neg(_mean_log_d(tape, s_u)), lambda_u),
        )
    return tape.add(
        tape.scale(_mean_log_1md(tape, s_p), lambda_p),
        tape.scale(_mean_log_1md(tape, s_u), lambda_u),
    )


def loss_g_n(
    tape: Tape,
    d_u: MlpNetwork,
    d_n: MlpNetwork,
    fake_n_batch: Node,
    lambda_u: float,
    lambda_n: float,
    variant: str = "non_saturating",
    mode: str = "pu",
    repulsion: str = "log_d",
) -> Node:
    """Negative generator loss (to be minimized): slip into the data, flee the positives.

    The d_u attraction term pulls g_n's output inside the unlabeled
    distribution. In PU mode the d_n term REPELS: it grows as d_n's score on
    the fakes grows, so g_n is pushed away from whatever d_n recognizes as
    positive. `repulsion="log_d"` adds +lambda_n*mean log D_n(fake);
    `"log_one_minus_d"` uses -lambda_n*mean log(1-D_n(fake)), which points the
    same way but saturates differently. In semi-supervised mode the d_n term
    flips sign: g_n then fools d_n exactly as g_p fools d_p.
    """
    if variant not in GENERATOR_LOSSES:
        raise ValueError(f"variant must be one of {GENERATOR_LOSSES}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    if repulsion not in REPULSION_LOSSES:
        raise ValueError(f"repulsion must be one of {REPULSION_LOSSES}")
    s_u = d_u.on_tape(tape, fake_n_batch, logits=True, trainable=False)
    s_n = d_n.on_tape(tape, fake_n_batch, logits=True, trainable=False)

    if variant == "non_saturating":
        attraction = tape.scale(tape.neg(_mean_log_d(tape, s_u)), lambda_u)
    else:
        attraction = tape.scale(_mean_log_1md(tape, s_u), lambda_u)

    if mode == "semisup":
        if variant == "non_saturating":
            dn_term = tape.scale(tape.neg(_mean_log_d(tape, s_n)), lambda_n)
        else:
            dn_term = tape.scale(_mean_log_1md(tape, s_n), lambda_n)
    elif repulsion == "log_d":
        dn_term = tape.scale(_mean_log_d(tape, s_n), lambda_n)
    else:
        dn_term = tape.scale(tape.neg(_mean_log_1md(tape, s_n)), lambda_n)

    return tape.add(attraction, dn_term)


# -- alternating updates ----------------------------------------------------


def draw_noise(rng: np.random.Generator, cfg: GenPuConfig) -> np.ndarray:
    return rng.standard_normal((cfg.batch_u, cfg.latent_dim))


def draw_d_batches(rng: np.random.Generator, n_p: int, n_u: int, cfg: GenPuConfig, n_n: int | None = None):
    """Draw one discriminator-phase round: noise, then positive/unlabeled indices.

    Index draws are with replacement so the labeled set may be smaller than
    the batch size. The draw order is part of the trainer's contract: noise,
    positives, unlabeled, then labeled negatives when present.
    """
    z = draw_noise(rng, cfg)
    idx_p = rng.integers(0, n_p, cfg.batch_p)
    idx_u = rng.integers(0, n_u, cfg.batch_u)
    if n_n is None:
        return z, idx_p, idx_u
    idx_n = rng.integers(0, n_n, cfg.batch_p)
    return z, idx_p, idx_u, idx_n


def _ascend(tape: Tape, objective: Node, prefactor: float, net: MlpNetwork, state: GenPuState, cfg: GenPuConfig, which: str):
    loss = tape.neg(tape.scale(objective, prefactor))
    grads = tape.backward(loss)
    adam_step(net.parameters(), grads, state.opt[which], cfg.lr)


def _descend(tape: Tape, loss: Node, prefactor: float, net: MlpNetwork, state: GenPuState, cfg: GenPuConfig, which: str):
    total = tape.scale(loss, prefactor)
    grads = tape.backward(total)
    adam_step(net.parameters(), grads, state.opt[which], cfg.lr)


def _step(state: GenPuState, cfg: GenPuConfig, data: PuDataset, mode: str) -> StepMetrics:
    x_p = data.x_p.data
    x_u = data.x_u.data
    pi_p, pi_n = cfg.pi_p, cfg.pi_n
    semisup = mode == "semisup"
    if semisup:
        if data.x_n is None or len(data.x_n) == 0:
            raise ValueError("semi-supervised mode requires a labeled negative set")
        x_n = data.x_n.data

    try:
        for _ in range(cfg.d_steps):
            if semisup:
                z, idx_p, idx_u, idx_n = draw_d_batches(state.rng, len(x_p), len(x_u), cfg, len(x_n))
                dn_real = x_n[idx_n]
            else:
                z, idx_p, idx_u = draw_d_batches(state.rng, len(x_p), len(x_u), cfg)
            x_p_b = x_p[idx_p]
            x_u_b = x_u[idx_u]
            if not semisup:
                dn_real = x_p_b
            fake_p = state.g_p.apply(z)
            fake_n = state.g_n.apply(z)

            # logit snapshots before any update, for metrics
            lp_r = state.d_p.apply_logits(x_p_b)
            lp_f = state.d_p.apply_logits(fake_p)
            lu_r = state.d_u.apply_logits(x_u_b)
            lu_fp = state.d_u.apply_logits(fake_p)
            lu_fn = state.d_u.apply_logits(fake_n)
            ln_r = state.d_n.apply_logits(dn_real)
            ln_f = state.d_n.apply_logits(fake_n)

            which = "d_p"
            tape = Tape()
            v_dp_node = loss_d_p(tape, state.d_p, x_p_b, fake_p)
            _ascend(tape, v_dp_node, pi_p * cfg.lambda_p, state.d_p, state, cfg, "d_p")

            which = "d_n"
            tape = Tape()
            v_dn_node = loss_d_n(tape, state.d_n, dn_real, fake_n)
            _ascend(tape, v_dn_node, pi_n * cfg.lambda_n, state.d_n, state, cfg, "d_n")

            which = "d_u"
            tape = Tape()
            v_du_node = loss_d_u(tape, state.d_u, x_u_b, fake_p, fake_n, pi_p)
            _ascend(tape, v_du_node, cfg.lambda_u, state.d_u, state, cfg, "d_u")

        z_g = draw_noise(state.rng, cfg)

        which = "g_p"
        tape = Tape()
        fake_p_node = state.g_p.on_tape(tape, z_g)
        gp_node = loss_g_p(tape, state.d_p, state.d_u, fake_p_node, cfg.lambda_p, cfg.lambda_u, cfg.generator_loss)
        _descend(tape, gp_node, pi_p, state.g_p, state, cfg, "g_p")

        which = "g_n"
        tape = Tape()
        fake_n_node = state.g_n.on_tape(tape, z_g)
        gn_node = loss_g_n(
            tape,
            state.d_u,
            state.d_n,
            fake_n_node,
            cfg.lambda_u,
            cfg.lambda_n,
            cfg.generator_loss,
            mode=mode,
            repulsion=cfg.repulsion_loss,
        )
        _descend(tape, gn_node, pi_n, state.g_n, state, cfg, "g_n")
    except DivergenceError as exc:
        raise DivergenceError(f"iteration {state.iteration}, network {which}: {exc}") from None

    state.iteration += 1

    # per-objective views from the last d-round's pre-update logits
    log_du_real = float(np.mean(stable_log_sigmoid(lu_r)))
    v_dn = float(v_dn_node.value)
    v_du_gp = log_du_real - float(np.mean(stable_softplus(lu_fp)))
    v_du_gn = log_du_real - float(np.mean(stable_softplus(lu_fn)))
    return StepMetrics(
        iteration=state.iteration,
        v_dp=float(v_dp_node.value),
        v_du_gp=v_du_gp,
        v_du_gn=v_du_gn,
        v_dn=v_dn,
        v_gn_repulsion=-v_dn,
        loss_g_p=float(gp_node.value),
        loss_g_n=float(gn_node.value),
        d_p_real=float(stable_sigmoid(lp_r).mean()),
        d_p_fake=float(stable_sigmoid(lp_f).mean()),
        d_u_real=float(stable_sigmoid(lu_r).mean()),
        d_u_fake_p=float(stable_sigmoid(lu_fp).mean()),
        d_u_fake_n=float(stable_sigmoid(lu_fn).mean()),
        d_n_real=float(stable_sigmoid(ln_r).mean()),
        d_n_fake=float(stable_sigmoid(ln_f).mean()),
    )


def train_step(state: GenPuState, cfg: GenPuConfig, data: PuDataset) -> StepMetrics:
    """One full alternation: ascend d_p, d_n, d_u, then descend g_p, g_n."""
    return _step(state, cfg, data, "pu")


def train_step_semisup(state: GenPuState, cfg: GenPuConfig, data: PuDataset) -> StepMetrics:
    """PU step with d_n fed labeled negatives and g_n fooling d_n instead of fleeing it."""
    return _step(state, cfg, data, "semisup")


def train(state: GenPuState, cfg: GenPuConfig, data: PuDataset, *, callback=None) -> list[StepMetrics]:
    """Run cfg.iterations alternating updates; callback(metrics) after each step."""
    step = train_step_semisup if cfg.mode == "semisup" else train_step
    history = []
    for _ in range(cfg.iterations):
        metrics = step(state, cfg, data)
        history.append(metrics)
        if callback is not None:
            callback(metrics)
    return history


def generate(state: GenPuState, which: str, n: int, seed: int = 0) -> Tensor:
    """Push n fresh latent samples through one generator."""
    if which in ("positive", "p"):
        net = state.g_p
    elif which in ("negative", "n"):
        net = state.g_n
    else:
        raise ValueError(f"which must be 'positive' or 'negative', got {which!r}")
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = np.random.default_rng(seed)
    z = state.prior.sample(n, rng)
    return Tensor(net.apply(z))
