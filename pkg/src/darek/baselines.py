"""Probabilistic comparison baselines: a deep ensemble of KANs and an exact GP."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, solve_triangular

from .errors import DarekNumericalError, DivergenceError
from .kan import TrainConfig, forward, train

log = logging.getLogger(__name__)


@dataclass
class EnsembleModel:
    members: list
    seeds: list

    def __post_init__(self):
        if len(self.members) < 2:
            raise ValueError("an ensemble needs at least two members")


def ensemble_train(build, x, y, q: int = 10, base_seed: int = 0,
                   cfg: TrainConfig = TrainConfig(), seeds=None) -> EnsembleModel:
    """Train ``q`` independently initialised networks.

    ``build(seed)`` must return a fresh untrained network.  Member ``i``
    uses seed ``base_seed + i`` unless ``seeds`` is given.  Diverged
    members are dropped as long as at least two survive.
    """
    if q < 2:
        raise ValueError("ensemble size q must be >= 2")
    seeds = list(range(base_seed, base_seed + q)) if seeds is None else list(seeds)
    if len(seeds) != q:
        raise ValueError("need exactly q seeds")
    members, kept = [], []
    for s in seeds:
        try:
            net, _ = train(build(s), x, y, cfg)
        except DivergenceError as exc:
            log.warning("ensemble member seed=%d dropped: %s", s, exc)
            continue
        members.append(net)
        kept.append(s)
    if len(members) < 2:
        raise DarekNumericalError(f"only {len(members)} of {q} ensemble members converged")
    return EnsembleModel(members, kept)


def ensemble_predict(m: EnsembleModel, x):
    """Member mean and population (divide-by-q) standard deviation."""
    preds = np.stack([forward(net, x)[0][:, 0] for net in m.members])
    # spread about the first member: same value, but exactly 0 for identical members
    return preds.mean(axis=0), (preds - preds[0]).std(axis=0)


def rbf_kernel(a, b, lengthscale: float = 1.0, variance: float = 1.0) -> np.ndarray:
    a = np.atleast_2d(np.asarray(a, dtype=float).reshape(len(a), -1))
    b = np.atleast_2d(np.asarray(b, dtype=float).reshape(len(b), -1))
    sq = np.sum(a**2, 1)[:, None] + np.sum(b**2, 1)[None, :] - 2 * a @ b.T
    return variance * np.exp(-np.maximum(sq, 0.0) / (2 * lengthscale**2))


@dataclass
class GpModel:
    train_x: np.ndarray
    train_y: np.ndarray
    lengthscale: float
    variance: float
    jitter: float
    chol: tuple | None  # scipy cho_factor output; None for an empty model
    alpha: np.ndarray | None


def gp_fit(x, y, lengthscale: float = 1.0, variance: float = 1.0, jitter: float | None = None) -> GpModel:
    """Noise-free GP regression with a squared-exponential kernel.

    ``jitter`` defaults to ``1e-8 * variance``.  If the Cholesky
    factorisation fails the jitter is raised tenfold once before giving up.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    x = x.reshape(len(y), -1) if len(y) else x.reshape(0, 1)
    jitter = 1e-8 * variance if jitter is None else jitter
    if len(y) == 0:
        return GpModel(x, y, lengthscale, variance, jitter, None, None)
    K = rbf_kernel(x, x, lengthscale, variance)
    for attempt in range(2):
        try:
            chol = cho_factor(K + jitter * np.eye(len(y)), lower=True)
            break
        except LinAlgError:
            if attempt == 1:
                raise DarekNumericalError(f"kernel matrix not positive definite at jitter {jitter}")
            jitter *= 10
    return GpModel(x, y, lengthscale, variance, jitter, chol, cho_solve(chol, y))


def gp_predict(m: GpModel, x):
    """Posterior mean and latent-function variance (clipped at zero)."""
    x = np.asarray(x, dtype=float)
    x = x.reshape(-1, m.train_x.shape[1] if m.train_x.ndim == 2 else 1)
    prior = np.full(x.shape[0], m.variance)
    if m.chol is None:
        return np.zeros(x.shape[0]), prior
    ks = rbf_kernel(m.train_x, x, m.lengthscale, m.variance)
    mean = ks.T @ m.alpha
    v = solve_triangular(m.chol[0], ks, lower=True)
    var = np.maximum(prior - np.sum(v**2, axis=0), 0.0)
    return mean, var
