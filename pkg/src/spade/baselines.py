"""Gaussian-process selection policies with Tanimoto/RBF kernels.

The GP is refit on the seen set once per cycle with a fixed noise level (no
hyperparameter optimization, for determinism and speed); batches are the
top-b ligands under one of four acquisition rules: posterior mean, UCB
(mean + one standard deviation), expected improvement, or probability of
improvement over the best seen PIC.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError
from scipy.special import ndtr

from .core import BINARY, PolicyConfig
from .policy import PolicyContext, Proposal, random_batch, top_batch

NOISE_VARIANCE = 0.1
_JITTERS = (0.0, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

ACQUISITIONS = ("m", "ucb", "ei", "pi")


def tanimoto_kernel(x: np.ndarray, y: np.ndarray) -> float:
    """<x,y> / (<x,x> + <y,y> - <x,y>) on non-negative vectors; 0 if both zero."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    xy = float(x @ y)
    denom = float(x @ x) + float(y @ y) - xy
    if denom <= 0.0:
        return 0.0
    return xy / denom


def tanimoto_gram(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    cross = A @ B.T
    na = np.einsum("ij,ij->i", A, A)
    nb = np.einsum("ij,ij->i", B, B)
    denom = na[:, None] + nb[None, :] - cross
    out = np.divide(cross, denom, out=np.zeros_like(cross), where=denom > 0)
    return out


def rbf_gram(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # Unit lengthscale; the dense-embedding analogue of the Tanimoto kernel.
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    sq = (np.einsum("ij,ij->i", A, A)[:, None]
          + np.einsum("ij,ij->i", B, B)[None, :] - 2.0 * A @ B.T)
    return np.exp(-0.5 * np.maximum(sq, 0.0))


@dataclass
class GPModel:
    """Fitted GP: cached Cholesky of (K + noise*I) over the training inputs."""

    X: np.ndarray
    y: np.ndarray
    kind: str
    noise: float
    y_mean: float
    _factor: object = None
    _alpha: np.ndarray = None

    @classmethod
    def fit(cls, X: np.ndarray, y: np.ndarray, kind: str = BINARY,
            noise: float = NOISE_VARIANCE) -> "GPModel":
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        y = np.asarray(y, dtype=np.float64)
        model = cls(X=X, y=y, kind=kind, noise=noise,
                    y_mean=float(y.mean()) if y.size else 0.0)
        n = y.size
        if n:
            K = model.gram(X, X)
            factor = None
            for jitter in _JITTERS:
                try:
                    factor = cho_factor(K + (noise + jitter) * np.eye(n), lower=True)
                    break
                except LinAlgError:
                    continue
            if factor is None:
                raise LinAlgError("kernel matrix not positive definite after jitter")
            model._factor = factor
            model._alpha = cho_solve(factor, y - model.y_mean)
        return model

    def gram(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        if self.kind == BINARY:
            return tanimoto_gram(A, B)
        return rbf_gram(A, B)

    def posterior(self, X_test: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Predictive mean and variance at the test points.

        The variance is the predictive one (latent variance plus observation
        noise), so with no training data it is k(x,x) + noise.
        """
        X_test = np.atleast_2d(np.asarray(X_test, dtype=np.float64))
        k_diag = np.array([tanimoto_kernel(x, x) for x in X_test]) \
            if self.kind == BINARY else np.ones(X_test.shape[0])
        if self.y.size == 0:
            return np.full(X_test.shape[0], self.y_mean), k_diag + self.noise
        K_cross = self.gram(X_test, self.X)
        mean = self.y_mean + K_cross @ self._alpha
        solved = cho_solve(self._factor, K_cross.T)
        var = k_diag - np.einsum("ij,ji->i", K_cross, solved)
        return mean, np.maximum(var, 0.0) + self.noise


def acquisition(mean, std, best_seen: float, kind: str):
    """Score a posterior: m, ucb, ei, or pi; vectorized over mean/std."""
    mean = np.asarray(mean, dtype=np.float64)
    std = np.asarray(std, dtype=np.float64)
    if kind == "m":
        return mean
    if kind == "ucb":
        return mean + std
    improve = mean - best_seen
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(std > 0, improve / np.where(std > 0, std, 1.0), 0.0)
    if kind == "ei":
        ei = improve * ndtr(z) + std * np.exp(-0.5 * z * z) * _INV_SQRT_2PI
        return np.where(std > 0, ei, np.maximum(improve, 0.0))
    if kind == "pi":
        return np.where(std > 0, ndtr(z), (improve > 0).astype(np.float64))
    raise ValueError(f"unknown acquisition kind {kind!r}")


class GpPolicy:
    """GP-based selection with a fixed acquisition rule."""

    def __init__(self, config: PolicyConfig, kind: str):
        if kind not in ACQUISITIONS:
            raise ValueError(f"unknown acquisition kind {kind!r}")
        self.config = config
        self.kind = kind
        self.name = f"gp-{kind}"

    def propose(self, ctx: PolicyContext) -> Proposal:
        b = self.config.batch_size
        if len(ctx.seen_indices) == 0:
            return Proposal(batch=random_batch(ctx, b))
        model = GPModel.fit(ctx.X[ctx.seen_indices], ctx.seen_pics, kind=ctx.kind)
        mean, var = model.posterior(ctx.X[ctx.rest_indices])
        scores = acquisition(mean, np.sqrt(var), float(ctx.seen_pics.max()),
                             self.kind)
        return Proposal(batch=top_batch(ctx, scores, b))
