"""Generative positive-unlabeled learning.

A two-generator, three-discriminator adversarial game that recovers both the
positive and the negative class distribution from positive-unlabeled data,
plus exact theory oracles on finite sample spaces, discriminative PU
baselines, and a downstream classifier trained on generated samples.
"""

from .autodiff import (
    AdamState,
    ContractError,
    DivergenceError,
    MlpNetwork,
    Node,
    ShapeError,
    Tape,
    Tensor,
    adam_step,
    backward,
    forward,
)
from .baselines import (
    BinaryClassifier,
    RiskBreakdown,
    evaluate,
    logistic_loss,
    nnpu_risk,
    train_pn_classifier,
    train_pn_on_generated,
    train_pu_baseline,
    upu_risk,
)
from .checkpoint import load_checkpoint, save_checkpoint
from .config import ConfigError, ExperimentConfig, load_config
from .core import (
    GenPuConfig,
    GenPuState,
    StepMetrics,
    generate,
    init_state,
    loss_d_n,
    loss_d_p,
    loss_d_u,
    loss_g_n,
    loss_g_p,
    train,
    train_step,
    train_step_semisup,
)
from .datagen import (
    LabeledDataset,
    LatentPrior,
    PuDataset,
    load_idx,
    make_concentric_circles,
    make_gaussian_mixture,
    make_two_moons,
    pu_split,
    select_digit_pair,
)
from .experiment import run_experiment
from .oracle import (
    DiscreteDistribution,
    GameSpec,
    equilibrium_search,
    jsd,
    objective_value,
    objective_value_jsd,
    optimal_discriminators,
    verify_optimality,
)

__version__ = "0.1.0"
