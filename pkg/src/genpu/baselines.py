"""Discriminative PU risk estimators and the downstream PN classifier.

The unbiased estimator rewrites the two-class risk using only positives and
the unlabeled pool; it is exact in expectation but unbounded below, so a
flexible model can drive it negative by overfitting the few labeled
positives. The non-negative variant clamps the unlabeled-side term at zero.
A plain PN classifier trained on generator output turns the adversarial
game's result into a decision boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import (
    AdamState,
    MlpNetwork,
    Tape,
    adam_step,
    stable_softplus,
)
from .datagen import LabeledDataset, PuDataset
from .core import GenPuState, generate

__all__ = [
    "RiskBreakdown",
    "BinaryClassifier",
    "CurvePoint",
    "logistic_loss",
    "upu_risk",
    "nnpu_risk",
    "train_pu_baseline",
    "train_pn_classifier",
    "train_pn_on_generated",
    "evaluate",
]


@dataclass(frozen=True)
class RiskBreakdown:
    """The three empirical component risks and their combination."""

    r_p_plus: float
    r_u_minus: float
    r_p_minus: float
    total: float
    corrected: bool


@dataclass(frozen=True)
class BinaryClassifier:
    """Margin-valued network with the decision rule sign(g(x)); ties count as +1."""

    net: MlpNetwork

    def __post_init__(self):
        if self.net.out_dim != 1 or self.net.activations[-1] != "identity":
            raise ValueError("classifier must have a 1-d identity-activation output")

    def margins(self, x) -> np.ndarray:
        return self.net.apply(x)[:, 0]

    def predict(self, x) -> np.ndarray:
        return np.where(self.margins(x) >= 0, 1, -1)


@dataclass(frozen=True)
class CurvePoint:
    iteration: int
    train_risk: float
    test_error: float


def logistic_loss(margin, label) -> np.ndarray | float:
    """softplus(-label*margin): the logistic loss on a margin, numerically stable.

    Satisfies loss(z, +1) - loss(z, -1) = -z, the linearity that keeps the
    unbiased PU risk estimator convex.
    """
    m = np.asarray(margin, dtype=np.float64)
    y = np.asarray(label, dtype=np.float64)
    out = stable_softplus(-y * m)
    return float(out) if out.ndim == 0 else out


def _components(g: BinaryClassifier, x_p, x_u) -> tuple[float, float, float]:
    m_p = g.margins(x_p)
    m_u = g.margins(x_u)
    r_p_plus = float(np.mean(logistic_loss(m_p, 1)))
    r_u_minus = float(np.mean(logistic_loss(m_u, -1)))
    r_p_minus = float(np.mean(logistic_loss(m_p, -1)))
    return r_p_plus, r_u_minus, r_p_minus


def upu_risk(g: BinaryClassifier, x_p, x_u, pi_p: float) -> RiskBreakdown:
    """Unbiased PU risk: pi_p*R_p^+ + R_u^- - pi_p*R_p^-. Can go negative.

    Grouped as pi_p*R_p^+ + (R_u^- - pi_p*R_p^-) so the uncorrected and
    clamped estimators agree to the last bit whenever the clamp is inactive.
    """
    r_p_plus, r_u_minus, r_p_minus = _components(g, x_p, x_u)
    total = pi_p * r_p_plus + (r_u_minus - pi_p * r_p_minus)
    return RiskBreakdown(r_p_plus, r_u_minus, r_p_minus, total, corrected=False)


def nnpu_risk(g: BinaryClassifier, x_p, x_u, pi_p: float) -> RiskBreakdown:
    """Non-negative PU risk: the unlabeled-side term is clamped at zero."""
    r_p_plus, r_u_minus, r_p_minus = _components(g, x_p, x_u)
    total = pi_p * r_p_plus + max(0.0, r_u_minus - pi_p * r_p_minus)
    return RiskBreakdown(r_p_plus, r_u_minus, r_p_minus, total, corrected=True)


def _risk_node(tape: Tape, net: MlpNetwork, x_p_b, x_u_b, pi_p: float, kind: str):
    m_p = net.on_tape(tape, x_p_b)
    m_u = net.on_tape(tape, x_u_b)
    r_p_plus = tape.mean(tape.softplus(tape.neg(m_p)))
    r_p_minus = tape.mean(tape.softplus(m_p))
    r_u_minus = tape.mean(tape.softplus(m_u))
    u_side = tape.sub(r_u_minus, tape.scale(r_p_minus, pi_p))
    if kind == "nnpu":
        u_side = tape.relu(u_side)
    return tape.add(tape.scale(r_p_plus, pi_p), u_side)


def _make_classifier_net(in_dim: int, hidden: tuple[int, ...], activation: str, rng, leaky_slope=0.2) -> MlpNetwork:
    sizes = [in_dim, *hidden, 1]
    return MlpNetwork.create("clf", sizes, activation, "identity", rng, leaky_slope=leaky_slope)


def train_pu_baseline(
    kind: str,
    data: PuDataset,
    *,
    hidden: tuple[int, ...] = (128,),
    activation: str = "relu",
    epochs: int = 20,
    batch_p: int = 50,
    batch_u: int = 100,
    lr: float = 3e-4,
    seed: int = 0,
    eval_data: LabeledDataset | None = None,
    curve: list[CurvePoint] | None = None,
) -> BinaryClassifier:
    """Minimize the chosen PU risk by minibatch Adam.

    One epoch is one pass worth of unlabeled batches; minibatches draw with
    replacement so tiny labeled sets still fill them. When `curve` is given,
    the full-data training risk (and test error, if `eval_data` is set) is
    appended after every epoch.
    """
    if kind not in ("upu", "nnpu"):
        raise ValueError(f"kind must be 'upu' or 'nnpu', got {kind!r}")
    rng = np.random.default_rng(seed)
    net = _make_classifier_net(data.dim, tuple(hidden), activation, rng)
    clf = BinaryClassifier(net)
    opt = AdamState(net.parameters())
    x_p, x_u = data.x_p.data, data.x_u.data
    pi_p = data.true_pi_p
    risk_fn = upu_risk if kind == "upu" else nnpu_risk
    steps_per_epoch = max(1, int(np.ceil(len(x_u) / batch_u)))
    iteration = 0

    def record():
        if curve is None:
            return
        train_risk = risk_fn(clf, x_p, x_u, pi_p).total
        test_error = 1.0 - evaluate(clf, eval_data) if eval_data is not None else float("nan")
        curve.append(CurvePoint(iteration, train_risk, test_error))

    record()
    for _ in range(epochs):
        for _ in range(steps_per_epoch):
            idx_p = rng.integers(0, len(x_p), batch_p)
            idx_u = rng.integers(0, len(x_u), batch_u)
            tape = Tape()
            risk = _risk_node(tape, net, x_p[idx_p], x_u[idx_u], pi_p, kind)
            grads = tape.backward(risk)
            adam_step(net.parameters(), grads, opt, lr)
            iteration += 1
        record()
    return clf


def train_pn_classifier(
    points,
    labels,
    *,
    hidden: tuple[int, ...] = (128,),
    activation: str = "relu",
    epochs: int = 20,
    batch: int = 100,
    lr: float = 3e-4,
    seed: int = 0,
) -> BinaryClassifier:
    """Ordinary supervised training with the logistic loss on +-1 labels."""
    x = np.asarray(points, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).reshape(-1, 1)
    if len(x) == 0:
        raise ValueError("training set is empty")
    rng = np.random.default_rng(seed)
    net = _make_classifier_net(x.shape[1], tuple(hidden), activation, rng)
    opt = AdamState(net.parameters())
    steps_per_epoch = max(1, int(np.ceil(len(x) / batch)))
    for _ in range(epochs):
        for _ in range(steps_per_epoch):
            idx = rng.integers(0, len(x), batch)
            tape = Tape()
            margins = net.on_tape(tape, x[idx])
            loss = tape.mean(tape.softplus(tape.neg(tape.mul(margins, tape.constant(y[idx])))))
            grads = tape.backward(loss)
            adam_step(net.parameters(), grads, opt, lr)
    return BinaryClassifier(net)


def train_pn_on_generated(
    state: GenPuState,
    n_per_class: int,
    *,
    hidden: tuple[int, ...] = (128,),
    activation: str = "relu",
    epochs: int = 20,
    batch: int = 100,
    lr: float = 3e-4,
    seed: int = 0,
) -> BinaryClassifier:
    """Draw n_per_class samples from each generator and fit a PN classifier on them."""
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    pos = generate(state, "positive", n_per_class, seed=seed).data
    neg = generate(state, "negative", n_per_class, seed=seed + 1).data
    points = np.vstack([pos, neg])
    labels = np.concatenate([np.ones(n_per_class), -np.ones(n_per_class)])
    return train_pn_classifier(
        points, labels, hidden=hidden, activation=activation, epochs=epochs, batch=batch, lr=lr, seed=seed
    )


def evaluate(classifier: BinaryClassifier, test: LabeledDataset) -> float:
    """Fraction of test points whose predicted sign matches the label."""
    if test.n == 0:
        raise ValueError("test set is empty")
    return float(np.mean(classifier.predict(test.points.data) == test.labels))
