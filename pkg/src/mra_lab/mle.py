"""Maximum-likelihood estimation by multistart EM with optional polishing.

The E-step weights each observation across group elements by a softmax of
squared distances; the M-step averages the back-rotated observations.
Because group elements are isometries, the M-step is a closed form with
g^T = g^(-1) and costs O(n |G| d) per iteration.  Convergence is declared
on the relative log-likelihood change, which is orbit-invariant, unlike
the parameter itself.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, EmptyDatasetError
from .groups import FiniteIsometryGroup
from .model import Dataset, MixtureModel, empirical_loglik, orbit_distance, score_rows
from .randomness import indices, normals

__all__ = ["FitConfig", "MLEResult", "em_step", "fit", "align"]

# Restart jitter covariance (times identity), applied to restarts >= 1.
_JITTER_VAR = 0.1


@dataclass(frozen=True)
class FitConfig:
    n_restarts: int = 8
    max_iter: int = 500
    rel_tol: float = 1e-10
    polish: bool = False
    keep_trace: bool = False

    def __post_init__(self):
        if self.n_restarts < 1:
            raise ValueError("n_restarts must be >= 1")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.rel_tol <= 0:
            raise ValueError("rel_tol must be positive")


@dataclass
class MLEResult:
    theta_hat: np.ndarray
    loglik: float
    n_iter: int
    n_restarts_used: int
    converged: bool
    trace: list[float] | None = None

    def to_json_dict(self) -> dict:
        return {
            "theta_hat": [float(x) for x in self.theta_hat],
            "loglik": self.loglik,
            "n_iter": self.n_iter,
            "n_restarts_used": self.n_restarts_used,
            "converged": self.converged,
            "trace": self.trace,
        }


def _data_rows(group: FiniteIsometryGroup, data) -> np.ndarray:
    Y = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.shape[0] < 1:
        raise EmptyDatasetError("need at least one observation")
    if Y.ndim != 2 or Y.shape[1] != group.dim:
        raise DimensionMismatchError(f"observations must have {group.dim} coordinates")
    return Y


def em_step(group: FiniteIsometryGroup, data, theta, sigma: float = 1.0) -> np.ndarray:
    """One EM update; never decreases the empirical log-likelihood."""
    Y = _data_rows(group, data)
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (group.dim,):
        raise DimensionMismatchError(f"theta must have length {group.dim}")
    centers = group.orbit(theta)
    logits = (Y @ centers.T - 0.5 * float(theta @ theta)) / sigma**2
    resp = np.exp(logits - logits.max(axis=1, keepdims=True))
    resp /= resp.sum(axis=1, keepdims=True)
    back = np.einsum("nm,nd->md", resp, Y)
    return np.einsum("mkj,mk->j", group.elements, back) / Y.shape[0]


def _batched_em(group, Y, starts, sigma, max_iter, rel_tol, keep_trace):
    """Run EM from several starts at once, freezing runs as they converge.

    Works in (restart, group element, observation) layout so the softmax
    reductions run along the short group axis with the long sample axis
    contiguous.  The per-restart -|theta|^2/2 shift is constant across
    elements, so it enters the log-likelihood as a scalar instead of a
    pass over the big array.  Returns per-start results.
    """
    n, d = Y.shape
    m = group.order
    elements = group.elements
    inv_s2 = 1.0 / sigma**2
    const = -np.log(m) - 0.5 * d * np.log(2.0 * np.pi * sigma**2)
    mean_ynorm = 0.5 * float((Y * Y).sum()) / n
    YT = np.ascontiguousarray(Y.T)

    r = starts.shape[0]
    thetas = starts.copy()
    lls = np.full(r, -np.inf)
    iters = np.zeros(r, dtype=int)
    converged = np.zeros(r, dtype=bool)
    traces = [[] for _ in range(r)] if keep_trace else None
    active = np.arange(r)

    for _ in range(max_iter + 1):
        th = thetas[active]
        centers = np.einsum("mde,re->rmd", elements, th)
        logits = np.matmul(centers, YT[None, :, :])  # (r, m, n)
        if inv_s2 != 1.0:
            logits *= inv_s2
        top = logits.max(axis=1)
        p = np.exp(logits - top[:, None, :])
        sums = p.sum(axis=1)
        ll_now = (
            (top + np.log(sums)).mean(axis=1)
            - 0.5 * (th * th).sum(axis=1) * inv_s2
            + const
            - mean_ynorm * inv_s2
        )

        if keep_trace:
            for k, ridx in enumerate(active):
                traces[ridx].append(float(ll_now[k]))
        prev = lls[active]
        lls[active] = ll_now
        done = np.abs(ll_now - prev) <= rel_tol * (1.0 + np.abs(ll_now))
        hit_cap = iters[active] >= max_iter
        stop = done | hit_cap
        converged[active[done]] = True
        if stop.all():
            break
        keep = ~stop
        active = active[keep]

        p = p[keep] / sums[keep][:, None, :]
        back = np.matmul(p, Y[None, :, :])  # (r, m, d)
        thetas[active] = np.einsum("mkj,rmk->rj", elements, back) / n
        iters[active] += 1

    return thetas, lls, iters, converged, traces


def _polish(group, Y, theta, sigma, grad_tol=1e-8, max_iter=200):
    """Backtracking gradient ascent on the empirical log-likelihood."""
    theta = theta.copy()
    ll = empirical_loglik(MixtureModel(group, theta, sigma), Y)
    for _ in range(max_iter):
        grad = score_rows(MixtureModel(group, theta, sigma), Y).mean(axis=0)
        gnorm2 = float(grad @ grad)
        if np.sqrt(gnorm2) < grad_tol:
            break
        step = 1.0
        improved = False
        while step > 1e-12:
            cand = theta + step * grad
            ll_cand = empirical_loglik(MixtureModel(group, cand, sigma), Y)
            if ll_cand >= ll + 1e-4 * step * gnorm2:
                theta, ll = cand, ll_cand
                improved = True
                break
            step *= 0.5
        if not improved:
            break
    return theta, ll


def fit(
    group: FiniteIsometryGroup,
    data,
    config: FitConfig,
    gen,
    sigma: float = 1.0,
) -> MLEResult:
    """Multistart EM fit; keeps the restart with the best final log-likelihood.

    Restart 0 starts at a random data row; the others at random rows plus
    N(0, 0.1 I) jitter.  All restart randomness comes from ``gen``.
    """
    Y = _data_rows(group, data)
    n, d = Y.shape
    r = config.n_restarts
    rows = indices(gen, n, r)
    jitter = np.zeros((r, d))
    if r > 1:
        jitter[1:] = np.sqrt(_JITTER_VAR) * normals(gen, (r - 1, d))
    starts = Y[rows] + jitter

    thetas, lls, iters, conv, traces = _batched_em(
        group, Y, starts, sigma, config.max_iter, config.rel_tol, config.keep_trace
    )
    best = int(np.argmax(lls))
    theta_hat = thetas[best]
    if config.polish:
        theta_hat, _ = _polish(group, Y, theta_hat, sigma)
    loglik = empirical_loglik(MixtureModel(group, theta_hat, sigma), Y)
    return MLEResult(
        theta_hat=theta_hat,
        loglik=loglik,
        n_iter=int(iters[best]),
        n_restarts_used=r,
        converged=bool(conv[best]),
        trace=traces[best] if config.keep_trace else None,
    )


def align(group: FiniteIsometryGroup, theta_hat, theta_star):
    """Group element index aligning the estimate to the truth, and the image."""
    _, g = orbit_distance(group, theta_hat, theta_star)
    return g, group.apply(g, np.asarray(theta_hat, dtype=np.float64))
