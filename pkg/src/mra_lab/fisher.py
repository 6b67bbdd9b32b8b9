"""Monte Carlo estimation of population likelihood geometry.

Estimates the Fisher information as the score covariance, extracts its
numerical null space, verifies that it matches the null space of the
stabilizer mean projector, and probes higher-order curvature of the
population log-likelihood by common-random-number finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, NotANullDirectionError
from .linalg import jacobi_eigh, principal_angles, projector_bases
from .model import (
    MixtureModel,
    hessian_quadform_many,
    hessian_quadform_rows,
    log_density_rows,
    sample,
    score_rows,
)
from .randomness import normals
from .stabilizer import StabilizerReport

__all__ = [
    "FisherEstimate",
    "MatchReport",
    "CheckResult",
    "CheckSuite",
    "fisher_mc",
    "check_null_space_match",
    "quartic_curvature",
    "population_gap",
    "geometry_checks",
    "DEFAULT_FD_STEP",
]

# Step for finite differences of the population log-likelihood.  Common
# random numbers across the stencil keep the difference estimable.
DEFAULT_FD_STEP = 0.1

_MAX_ANGLE_RAD = 0.02


@dataclass
class FisherEstimate:
    """Score-covariance estimate of the Fisher information with eigensystem."""

    matrix: np.ndarray
    n_mc: int
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    null_basis: np.ndarray
    se_max: float
    null_threshold: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "matrix": [float(x) for x in self.matrix.ravel()],
            "n_mc": self.n_mc,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "eigenvectors": [float(x) for x in self.eigenvectors.ravel()],
            "null_basis": [float(x) for x in self.null_basis.ravel()],
            "null_dim": int(self.null_basis.shape[1]),
            "se_max": self.se_max,
            "null_threshold": self.null_threshold,
        }


@dataclass
class MatchReport:
    """Comparison of the Fisher null space against the projector null space."""

    passed: bool
    null_dim_fisher: int
    null_dim_projector: int
    max_angle_rad: float
    angles: list[float] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "passed": self.passed,
            "null_dim_fisher": self.null_dim_fisher,
            "null_dim_projector": self.null_dim_projector,
            "max_angle_rad": self.max_angle_rad,
            "angles": self.angles,
        }


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    bound: float
    vacuous: bool = False
    detail: str = ""

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "bound": self.bound,
            "vacuous": self.vacuous,
            "detail": self.detail,
        }


@dataclass
class CheckSuite:
    checks: list[CheckResult]
    n_mc: int
    fd_step: float

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_mc": self.n_mc,
            "fd_step": self.fd_step,
            "checks": [c.to_json_dict() for c in self.checks],
        }


def fisher_mc(model: MixtureModel, n_mc: int, gen) -> FisherEstimate:
    """Fisher information as the empirical covariance of the score.

    The covariance form is guaranteed positive semidefinite and needs only
    first derivatives.  The null threshold couples a relative eigenvalue
    cut with the Monte Carlo noise floor: max(1e-6 * lambda_max, 10 * se).
    """
    if n_mc < 1000:
        raise ValueError("n_mc must be at least 1000")
    d = model.dim
    Y = sample(model, n_mc, gen).points
    S = score_rows(model, Y)
    S = S - S.mean(axis=0)
    # Entrywise means and second moments of the outer products, chunked.
    m1 = np.zeros((d, d))
    m2 = np.zeros((d, d))
    step = max(1, (1 << 22) // (d * d))
    for lo in range(0, n_mc, step):
        block = np.einsum("ni,nj->nij", S[lo : lo + step], S[lo : lo + step])
        m1 += block.sum(axis=0)
        m2 += (block**2).sum(axis=0)
    m1 /= n_mc
    m2 /= n_mc
    matrix = 0.5 * (m1 + m1.T) * (n_mc / (n_mc - 1.0))
    se = np.sqrt(np.maximum(m2 - m1**2, 0.0) / n_mc)
    se_max = float(se.max())
    eigenvalues, eigenvectors = jacobi_eigh(matrix)
    threshold = max(1e-6 * max(float(eigenvalues[0]), 0.0), 10.0 * se_max)
    null_basis = eigenvectors[:, eigenvalues <= threshold]
    return FisherEstimate(
        matrix=matrix,
        n_mc=n_mc,
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        null_basis=null_basis,
        se_max=se_max,
        null_threshold=threshold,
    )


def check_null_space_match(fisher: FisherEstimate, report: StabilizerReport) -> MatchReport:
    """Principal angles between the Fisher null space and the projector null space."""
    if fisher.dim != report.dim:
        raise DimensionMismatchError("Fisher estimate and stabilizer report disagree on d")
    _, null_proj = projector_bases(report.projector)
    dim_f = fisher.null_basis.shape[1]
    dim_p = null_proj.shape[1]
    angles = principal_angles(fisher.null_basis, null_proj)
    max_angle = float(angles.max()) if angles.size else 0.0
    passed = dim_f == dim_p and max_angle <= _MAX_ANGLE_RAD
    return MatchReport(
        passed=passed,
        null_dim_fisher=dim_f,
        null_dim_projector=dim_p,
        max_angle_rad=max_angle,
        angles=[float(a) for a in angles],
    )


def quartic_curvature(model: MixtureModel, report: StabilizerReport, w, n_mc: int, gen) -> float:
    """Fourth directional derivative of the population log-likelihood along w.

    Valid for directions in the projector null space, where it equals
    -3 times the variance of the per-observation curvature statistic; it is
    strictly negative for every nonzero null direction.
    """
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (model.dim,):
        raise DimensionMismatchError(f"w must have length {model.dim}")
    wnorm = float(np.linalg.norm(w))
    if wnorm == 0.0:
        return 0.0
    if float(np.linalg.norm(report.projector @ w)) > 1e-8 * wnorm:
        raise NotANullDirectionError("w is not in the projector null space")
    Y = sample(model, n_mc, gen).points
    integrand = hessian_quadform_rows(model, Y, w) + (score_rows(model, Y) @ w) ** 2
    return float(-3.0 * integrand.var(ddof=1))


def population_gap(model: MixtureModel, theta, n_mc: int, gen, theta_star=None):
    """Monte Carlo estimate of Psi(theta) - Psi(theta_star), with standard error.

    Uses common random draws for both log-likelihood terms; the gap is
    exactly zero when theta coincides with a group image of theta_star.
    """
    base = (
        model
        if theta_star is None
        else MixtureModel(model.group, np.asarray(theta_star, dtype=np.float64), model.sigma)
    )
    Y = sample(base, n_mc, gen).points
    shifted = MixtureModel(model.group, np.asarray(theta, dtype=np.float64), model.sigma)
    diff = log_density_rows(shifted, Y) - log_density_rows(base, Y)
    gap = float(diff.mean())
    se = float(diff.std(ddof=1) / np.sqrt(n_mc)) if n_mc > 1 else float("inf")
    return gap, se


def _fd_rows(model: MixtureModel, Y: np.ndarray, offsets, coefs, denom: float) -> np.ndarray:
    """Per-sample finite-difference combination of log densities at shifted centers."""
    acc = np.zeros(Y.shape[0])
    for coef, offset in zip(coefs, offsets):
        shifted = MixtureModel(model.group, model.theta + offset, model.sigma)
        acc += coef * log_density_rows(shifted, Y)
    return acc / denom


def _fd_third_mixed(model, Y, v, w, h):
    """d^3 Psi along (v, w, w) by central differences."""
    offsets = [
        h * v + h * w,
        h * v,
        h * v - h * w,
        -h * v + h * w,
        -h * v,
        -h * v - h * w,
    ]
    coefs = [1.0, -2.0, 1.0, -1.0, 2.0, -1.0]
    rows = _fd_rows(model, Y, offsets, coefs, 2.0 * h**3)
    return float(rows.mean()), float(rows.std(ddof=1) / np.sqrt(len(rows)))


def _fd_fourth_mixed(model, Y, v, w, h):
    """d^4 Psi along (v, w, w, w) by central differences."""
    offsets, coefs = [], []
    for s_sign in (1.0, -1.0):
        for t_mult, c in ((2.0, 1.0), (1.0, -2.0), (-1.0, 2.0), (-2.0, -1.0)):
            offsets.append(s_sign * h * v + t_mult * h * w)
            coefs.append(s_sign * c)
    rows = _fd_rows(model, Y, offsets, coefs, 4.0 * h**4)
    return float(rows.mean()), float(rows.std(ddof=1) / np.sqrt(len(rows)))


def _fd_fourth_pure(model, Y, w, h):
    """d^4 Psi along (w, w, w, w) by central differences."""
    offsets = [2.0 * h * w, h * w, 0.0 * w, -h * w, -2.0 * h * w]
    coefs = [1.0, -4.0, 6.0, -4.0, 1.0]
    rows = _fd_rows(model, Y, offsets, coefs, h**4)
    return float(rows.mean()), float(rows.std(ddof=1) / np.sqrt(len(rows)))


def _unit_combos(gen, basis: np.ndarray, count: int) -> np.ndarray:
    """Random unit vectors inside the span of ``basis`` (zero rows if span is trivial)."""
    k = basis.shape[1]
    if k == 0:
        return np.zeros((count, basis.shape[0]))
    z = normals(gen, (count, k))
    vecs = z @ basis.T
    norms = np.linalg.norm(vecs, axis=1, keepdims=True)
    return vecs / norms


def geometry_checks(
    model: MixtureModel,
    report: StabilizerReport,
    n_mc: int,
    gen,
    fd_step: float = DEFAULT_FD_STEP,
) -> CheckSuite:
    """Run the population-identity check suite at theta_star.

    Checks: (a) zero mean score, (b) the pointwise vanishing of the score
    along null directions, (c) the third-derivative covariance identity,
    (d) the vanishing mixed fourth derivative, (e) strict positivity of the
    variance of the combined first/second-order statistic.  Finite
    differences use step ``fd_step`` with common random numbers; their
    acceptance bounds combine Monte Carlo standard errors with a small
    allowance for the O(h^2) stencil bias.
    """
    if n_mc < 10**4:
        raise ValueError("n_mc must be at least 10^4")
    h = fd_step
    checks: list[CheckResult] = []
    range_basis, null_basis = projector_bases(report.projector)
    Y = sample(model, n_mc, gen).points
    S = score_rows(model, Y)

    # (a) mean score vanishes
    mean_score = S.mean(axis=0)
    se_mean = float(np.sqrt((S.var(axis=0, ddof=1) / n_mc).sum()))
    val = float(np.linalg.norm(mean_score))
    checks.append(
        CheckResult(
            name="mean_score_zero",
            passed=val <= 4.0 * se_mean,
            value=val,
            bound=4.0 * se_mean,
            detail=f"|mean score| vs 4 standard errors at n_mc={n_mc}",
        )
    )

    # (b) score orthogonal to null directions, pointwise
    if null_basis.shape[1] == 0:
        checks.append(
            CheckResult(
                name="null_score_pointwise",
                passed=True,
                value=0.0,
                bound=1e-10,
                vacuous=True,
                detail="projector has full rank; no null directions",
            )
        )
    else:
        W = _unit_combos(gen, null_basis, 10)
        Yb = sample(model, 1000, gen).points
        vals = np.abs(score_rows(model, Yb) @ W.T)
        val = float(vals.max())
        checks.append(
            CheckResult(
                name="null_score_pointwise",
                passed=val <= 1e-10,
                value=val,
                bound=1e-10,
                detail="max |w . score(y)| over 1000 draws x 10 null directions",
            )
        )

    # (c)/(d) mixed higher-order identities need one direction on each side
    if range_basis.shape[1] == 0 or null_basis.shape[1] == 0:
        reason = "projector range or null space is trivial"
        checks.append(
            CheckResult("third_derivative_identity", True, 0.0, 0.0, vacuous=True, detail=reason)
        )
        checks.append(
            CheckResult("fourth_derivative_mixed_zero", True, 0.0, 0.0, vacuous=True, detail=reason)
        )
    else:
        v = range_basis[:, 0]
        w = null_basis[:, 0]
        est3, se3 = _fd_third_mixed(model, Y, v, w, h)
        a = S @ v
        b = hessian_quadform_rows(model, Y, w)
        prod = (a - a.mean()) * (b - b.mean())
        cov = float(prod.mean() * n_mc / (n_mc - 1.0))
        se_cov = float(prod.std(ddof=1) / np.sqrt(n_mc))
        diff = abs(est3 - (-cov))
        bound = 3.0 * (se3 + se_cov)
        checks.append(
            CheckResult(
                name="third_derivative_identity",
                passed=diff <= bound,
                value=diff,
                bound=bound,
                detail=f"fd estimate {est3:.5f} vs -cov {-cov:.5f}",
            )
        )
        est4, se4 = _fd_fourth_mixed(model, Y, v, w, h)
        quartic_scale, _ = _fd_fourth_pure(model, Y, w, h)
        bound4 = 4.0 * se4 + 0.02 * max(1.0, abs(quartic_scale))
        checks.append(
            CheckResult(
                name="fourth_derivative_mixed_zero",
                passed=abs(est4) <= bound4,
                value=abs(est4),
                bound=bound4,
                detail=f"fd estimate {est4:.5f}; pure quartic scale {quartic_scale:.3f}",
            )
        )

    # (e) variance of the combined statistic is bounded away from zero
    n_pairs = 50
    vs = _unit_combos(gen, range_basis, n_pairs)
    ws = _unit_combos(gen, null_basis, n_pairs)
    hess_w = hessian_quadform_many(model, Y, ws)
    stats = 2.0 * (S @ vs.T) + hess_w
    centered = stats - stats.mean(axis=0)
    variances = (centered**2).mean(axis=0) * n_mc / (n_mc - 1.0)
    m4 = (centered**4).mean(axis=0)
    se_var = np.sqrt(np.maximum(m4 - variances**2, 0.0) / n_mc)
    margins = variances - 4.0 * se_var
    worst = int(np.argmin(margins))
    checks.append(
        CheckResult(
            name="variance_lower_bound",
            passed=bool(margins[worst] > 0.0),
            value=float(variances[worst]),
            bound=float(4.0 * se_var[worst]),
            detail=f"min variance over {n_pairs} random unit direction pairs",
        )
    )

    return CheckSuite(checks=checks, n_mc=n_mc, fd_step=h)
