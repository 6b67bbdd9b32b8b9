"""Group-invariant Gaussian mixture: density, score, Hessian, sampling, metrics.

The density at y is the average over group elements g of isotropic
Gaussians centered at g theta.  All |G|-fold sums share one max-shifted
weight computation per evaluation, so density, score and Hessian are
numerically consistent.  Exponent terms are summed in sorted order, which
makes the log-likelihood exactly invariant under theta -> g theta for the
built-in integer-entry groups.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, EmptyDatasetError
from .groups import FiniteIsometryGroup
from .randomness import indices, normals
from .stabilizer import StabilizerReport, decompose

__all__ = [
    "MixtureModel",
    "Dataset",
    "log_density",
    "log_density_rows",
    "empirical_loglik",
    "score",
    "score_rows",
    "hessian_quadform",
    "hessian_quadform_rows",
    "sample",
    "orbit_distance",
    "split_error",
    "save_csv",
    "load_csv",
    "save_binary",
    "load_binary",
]

# Rows per chunk are sized so a (rows, |G|, d) difference block stays small.
_CHUNK_ELEMS = 1 << 22

_BINARY_MAGIC = b"MRA1"
_HEADER = struct.Struct("<4sIII")  # magic, n, d, reserved


@dataclass(frozen=True)
class MixtureModel:
    """Uniform mixture of Gaussians N(g theta, sigma^2 I) over a finite group."""

    group: FiniteIsometryGroup
    theta: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=np.float64)
        if theta.shape != (self.group.dim,):
            raise DimensionMismatchError(f"theta must have length {self.group.dim}")
        if not np.all(np.isfinite(theta)):
            raise ValueError("theta must be finite")
        if not (self.sigma > 0):
            raise ValueError("sigma must be positive")
        theta = theta.copy()
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    @property
    def dim(self) -> int:
        return self.group.dim

    def centers(self) -> np.ndarray:
        """The mixture centers g theta, one per row."""
        return self.group.orbit(self.theta)


@dataclass(frozen=True)
class Dataset:
    """Immutable n x d sample matrix plus the stream that generated it."""

    points: np.ndarray
    seed_provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.ndim != 2 or pts.shape[0] < 1:
            raise EmptyDatasetError("points must be a nonempty (n, d) matrix")
        if not np.all(np.isfinite(pts)):
            raise ValueError("points must be finite")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _as_rows(model: MixtureModel, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.ndim != 2 or Y.shape[1] != model.dim:
        raise DimensionMismatchError(f"observations must have {model.dim} coordinates")
    return Y


def _chunks(n: int, m: int, d: int):
    step = max(1, _CHUNK_ELEMS // max(1, m * d))
    for lo in range(0, n, step):
        yield lo, min(n, lo + step)


def _exponents(model: MixtureModel, Y: np.ndarray, lo: int, hi: int) -> np.ndarray:
    """Per-row, per-element exponents -|y - g theta|^2 / (2 sigma^2)."""
    centers = model.centers()
    diff = Y[lo:hi, None, :] - centers[None, :, :]
    return np.einsum("nmd,nmd->nm", diff, diff) * (-0.5 / model.sigma**2)


def log_density_rows(model: MixtureModel, Y) -> np.ndarray:
    """log density of the mixture at each row of Y (never -inf for finite input)."""
    Y = _as_rows(model, Y)
    m, d = model.group.order, model.dim
    const = -np.log(m) - 0.5 * d * np.log(2.0 * np.pi * model.sigma**2)
    out = np.empty(Y.shape[0])
    for lo, hi in _chunks(Y.shape[0], m, d):
        t = np.sort(_exponents(model, Y, lo, hi), axis=1)
        top = t[:, -1]
        out[lo:hi] = top + np.log(np.exp(t - top[:, None]).sum(axis=1)) + const
    return out


def log_density(model: MixtureModel, y) -> float:
    return float(log_density_rows(model, y)[0])


def empirical_loglik(model: MixtureModel, data) -> float:
    """Mean log density over the dataset rows (includes the 1/n factor)."""
    Y = data.points if isinstance(data, Dataset) else np.asarray(data, dtype=np.float64)
    if Y.size == 0:
        raise EmptyDatasetError("empirical log-likelihood needs at least one row")
    return float(log_density_rows(model, Y).mean())


def _softmax(t: np.ndarray) -> np.ndarray:
    p = np.exp(t - t.max(axis=1, keepdims=True))
    p /= p.sum(axis=1, keepdims=True)
    return p


def score_rows(model: MixtureModel, Y) -> np.ndarray:
    """Gradient of the log density with respect to theta, one row per observation."""
    Y = _as_rows(model, Y)
    m, d = model.group.order, model.dim
    inv_s2 = 1.0 / model.sigma**2
    out = np.empty_like(Y)
    for lo, hi in _chunks(Y.shape[0], m, d):
        p = _softmax(_exponents(model, Y, lo, hi))
        acc = np.zeros((hi - lo, d))
        for g in range(m):
            acc += p[:, g, None] * (Y[lo:hi] @ model.group.elements[g])
        out[lo:hi] = (acc - model.theta) * inv_s2
    return out


def score(model: MixtureModel, y) -> np.ndarray:
    return score_rows(model, y)[0]


def hessian_quadform_rows(model: MixtureModel, Y, w) -> np.ndarray:
    """w^T (d^2 log density / d theta^2) w at each row of Y.

    Weighted mean of squares minus squared weighted mean of the per-element
    linear statistics, minus |w|^2 / sigma^2.
    """
    Y = _as_rows(model, Y)
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (model.dim,):
        raise DimensionMismatchError(f"w must have length {model.dim}")
    m, d = model.group.order, model.dim
    inv_s2 = 1.0 / model.sigma**2
    w_orbit = model.group.orbit(w)  # row g is g w, so Y @ row g gives w^T g^T y
    w_theta = float(w @ model.theta)
    out = np.empty(Y.shape[0])
    for lo, hi in _chunks(Y.shape[0], m, d):
        p = _softmax(_exponents(model, Y, lo, hi))
        q = (Y[lo:hi] @ w_orbit.T - w_theta) * inv_s2
        mean_q = (p * q).sum(axis=1)
        mean_q2 = (p * q * q).sum(axis=1)
        out[lo:hi] = mean_q2 - mean_q**2 - float(w @ w) * inv_s2
    return out


def hessian_quadform(model: MixtureModel, y, w) -> float:
    return float(hessian_quadform_rows(model, y, w)[0])


def hessian_quadform_many(model: MixtureModel, Y, W) -> np.ndarray:
    """Hessian quadratic forms for several directions at once, (n, k) output.

    Shares one softmax-weight computation per chunk across all columns of W.
    """
    Y = _as_rows(model, Y)
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] != model.dim:
        raise DimensionMismatchError(f"W must be (k, {model.dim})")
    m, d = model.group.order, model.dim
    inv_s2 = 1.0 / model.sigma**2
    w_theta = W @ model.theta
    w_norm2 = (W * W).sum(axis=1)
    out = np.empty((Y.shape[0], W.shape[0]))
    for lo, hi in _chunks(Y.shape[0], m, d):
        p = _softmax(_exponents(model, Y, lo, hi))
        mean_q = np.zeros((hi - lo, W.shape[0]))
        mean_q2 = np.zeros((hi - lo, W.shape[0]))
        for g in range(m):
            q = (Y[lo:hi] @ (model.group.elements[g] @ W.T) - w_theta) * inv_s2
            pg = p[:, g, None]
            mean_q += pg * q
            mean_q2 += pg * q * q
        out[lo:hi] = mean_q2 - mean_q**2 - w_norm2 * inv_s2
    return out


def sample(model: MixtureModel, n: int, gen, provenance: dict | None = None) -> Dataset:
    """Draw n observations g theta + sigma * noise with g uniform over the group.

    Consumes the stream in a fixed order: group indices first, then noise.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    centers = model.centers()
    which = indices(gen, model.group.order, n)
    noise = normals(gen, (n, model.dim))
    pts = centers[which] + model.sigma * noise
    return Dataset(points=pts, seed_provenance=provenance or {})


def orbit_distance(group: FiniteIsometryGroup, a, b):
    """min over g of |g a - b| and the minimizing element index (first on ties)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != (group.dim,) or b.shape != (group.dim,):
        raise DimensionMismatchError(f"vectors must have length {group.dim}")
    dists = np.linalg.norm(group.orbit(a) - b, axis=1)
    g = int(np.argmin(dists))
    return float(dists[g]), g


def split_error(theta, report: StabilizerReport, theta_star, group: FiniteIsometryGroup) -> float:
    """Rate-calibrated error sqrt(|v|^2 + |w|^4) of theta against theta_star.

    The aligned difference is decomposed by the stabilizer projector of
    theta_star into the fast component v and the slow component w.
    """
    _, g0 = orbit_distance(group, theta, theta_star)
    aligned = group.apply(g0, np.asarray(theta, dtype=np.float64))
    v, w = decompose(aligned - np.asarray(theta_star, dtype=np.float64), report)
    return float(np.sqrt(v @ v + (w @ w) ** 2))


def save_csv(data: Dataset, path) -> None:
    """One observation per row, 17-significant-digit decimals."""
    with open(path, "w", encoding="ascii") as fh:
        for row in data.points:
            fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


def load_csv(path) -> Dataset:
    pts = np.loadtxt(path, delimiter=",", ndmin=2)
    return Dataset(points=pts, seed_provenance={"source": str(path)})


def save_binary(data: Dataset, path) -> None:
    """16-byte header (magic, u32 n, u32 d, u32 reserved) + little-endian f64 rows."""
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_BINARY_MAGIC, data.n, data.dim, 0))
        fh.write(np.ascontiguousarray(data.points, dtype="<f8").tobytes())


def load_binary(path) -> Dataset:
    with open(path, "rb") as fh:
        magic, n, d, _ = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != _BINARY_MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {_BINARY_MAGIC!r}")
        pts = np.frombuffer(fh.read(8 * n * d), dtype="<f8").reshape(n, d)
    return Dataset(points=pts.astype(np.float64), seed_provenance={"source": str(path)})
