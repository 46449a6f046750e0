import numpy as np
import pytest

from misdkit.data import make_gaussian_mixture
from misdkit.model import MLP
from misdkit.seeding import seed_stream
from misdkit.training import TrainConfig, train


def mixture_pair(seed, overlap=2.2, std=0.02, d=16, k=3, n_train=2000, n_eval=800):
    """Train/eval datasets drawn from one shared mixture distribution."""
    means = seed_stream(seed, "dataset", "means")
    train_set = make_gaussian_mixture(
        n_train, d, k, overlap, seed=seed_stream(seed, "dataset", "train"),
        cluster_std=std, means_seed=means,
    )
    eval_set = make_gaussian_mixture(
        n_eval, d, k, overlap, seed=seed_stream(seed, "dataset", "eval"),
        cluster_std=std, means_seed=means,
    )
    return train_set, eval_set


def linear_model(W, b=None):
    """MLP wrapper around explicit affine logits x @ W + b."""
    W = np.asarray(W, dtype=np.float64)
    model = MLP([W.shape[0], W.shape[1]], _init=False)
    from misdkit.tensor import Tensor

    model.weights.append(Tensor(W, requires_grad=True))
    bias = np.zeros(W.shape[1]) if b is None else np.asarray(b, dtype=np.float64)
    model.biases.append(Tensor(bias, requires_grad=True))
    return model


@pytest.fixture(scope="session")
def small_trained():
    """One quickly trained MLP with its eval set, shared across tests."""
    train_set, eval_set = mixture_pair(seed=0)
    model = MLP([16, 32, 3], seed=0)
    cfg = TrainConfig(epochs=20, batch_size=128, lr_init=0.2, warmup_epochs=3, seed=0)
    model, _ = train(model, train_set, cfg)
    return model, eval_set
