"""Stabilizer subgroup of a vector, its mean projector, and cosets.

For a group G and a vector theta, the stabilizer is the subgroup of
elements fixing theta.  The average of the stabilizer matrices is the
orthogonal projection onto the subspace of vectors fixed by every
stabilizer element; its range carries the fast-estimable component of
theta and its null space the slow one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    AmbiguousStabilizerError,
    DimensionMismatchError,
    NotASubgroupError,
    ZeroDirectionError,
)
from .groups import FiniteIsometryGroup

__all__ = [
    "StabilizerReport",
    "stabilizer",
    "decompose",
    "increases_degree",
    "recover_stabilizer",
]

DEFAULT_TOL_REL = 1e-8
DEFAULT_TOL_ABS = 1e-12

# Membership in the projector range is decided at this relative tolerance.
_RANGE_TOL = 1e-9


@dataclass(frozen=True)
class StabilizerReport:
    """Stabilizer members, mean projector, coset partition and degree."""

    theta: np.ndarray
    members: tuple[int, ...]
    projector: np.ndarray
    projector_rank: int
    cosets: tuple[tuple[int, ...], ...]
    degree: int
    tol_used: float

    @property
    def dim(self) -> int:
        return self.projector.shape[0]

    def to_json_dict(self) -> dict:
        return {
            "theta": [float(x) for x in self.theta],
            "members": list(self.members),
            "projector": [float(x) for x in self.projector.ravel()],
            "projector_rank": self.projector_rank,
            "cosets": [list(block) for block in self.cosets],
            "degree": self.degree,
            "tol_used": self.tol_used,
        }


def _is_subgroup(group: FiniteIsometryGroup, members: set[int]) -> bool:
    if group.identity_index not in members:
        return False
    for i in members:
        if group.invert(i) not in members:
            return False
        for j in members:
            if group.compose(i, j) not in members:
                return False
    return True


def stabilizer(
    group: FiniteIsometryGroup,
    theta,
    tol_rel: float = DEFAULT_TOL_REL,
    tol_abs: float = DEFAULT_TOL_ABS,
) -> StabilizerReport:
    """Threshold the orbit distances of ``theta`` and build the report.

    Membership: ``|g theta - theta| <= tol_rel * |theta| + tol_abs``.
    Raises ``NotASubgroupError`` when the thresholded set is not closed
    (inconsistent tolerance) and ``AmbiguousStabilizerError`` when any
    distance falls within a factor 10 of the threshold, in which case the
    discrete membership decision is numerically unstable and the caller
    must choose tolerances deliberately.
    """
    if tol_rel < 0 or tol_abs < 0:
        raise ValueError("tolerances must be nonnegative")
    theta = np.asarray(theta, dtype=np.float64)
    if theta.shape != (group.dim,):
        raise DimensionMismatchError(f"theta must have length {group.dim}")
    dists = np.linalg.norm(group.orbit(theta) - theta, axis=1)
    threshold = tol_rel * float(np.linalg.norm(theta)) + tol_abs
    members = set(int(i) for i in np.nonzero(dists <= threshold)[0])

    if not _is_subgroup(group, members):
        raise NotASubgroupError(
            f"thresholded set of size {len(members)} is not a subgroup "
            f"(threshold {threshold:.3e}); adjust tol_rel/tol_abs"
        )
    unstable = (dists >= threshold / 10.0) & (dists <= threshold * 10.0)
    if np.any(unstable):
        worst = dists[unstable]
        raise AmbiguousStabilizerError(
            f"{unstable.sum()} orbit distance(s) within a factor 10 of the "
            f"threshold {threshold:.3e} (e.g. {worst.min():.3e}); "
            "membership is unstable at these tolerances"
        )

    member_tuple = tuple(sorted(members))
    projector = group.elements[list(member_tuple)].mean(axis=0)
    trace = float(np.trace(projector))
    rank = int(round(trace))
    if abs(trace - rank) > 1e-6:
        raise NotASubgroupError(f"projector trace {trace} is not close to an integer")

    assigned = np.full(group.order, False)
    cosets = []
    for i in range(group.order):
        if assigned[i]:
            continue
        block = tuple(sorted(int(group.cayley[i, h]) for h in member_tuple))
        for k in block:
            assigned[k] = True
        cosets.append(block)

    return StabilizerReport(
        theta=theta.copy(),
        members=member_tuple,
        projector=projector,
        projector_rank=rank,
        cosets=tuple(cosets),
        degree=group.order // len(member_tuple),
        tol_used=threshold,
    )


def decompose(u, report: StabilizerReport):
    """Split ``u = v + w`` with ``v`` in the projector range, ``w`` in its null space."""
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (report.dim,):
        raise DimensionMismatchError(f"u must have length {report.dim}")
    v = report.projector @ u
    return v, u - v


def increases_degree(u, report: StabilizerReport) -> bool:
    """True iff perturbing theta along ``u`` breaks some of its symmetries.

    Equivalently, ``u`` lies outside the projector range, so the orbit of
    ``theta + t u`` is strictly larger than the orbit of ``theta`` for all
    small ``t != 0``.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (report.dim,):
        raise DimensionMismatchError(f"u must have length {report.dim}")
    norm = float(np.linalg.norm(u))
    if norm == 0.0:
        raise ZeroDirectionError("direction u must be nonzero")
    return float(np.linalg.norm(report.projector @ u - u)) > _RANGE_TOL * norm


def recover_stabilizer(theta_hat, group: FiniteIsometryGroup, separation: float) -> tuple[int, ...]:
    """Stabilizer members recovered from an estimate of theta.

    ``separation`` is an assumed lower bound on the smallest nonzero orbit
    distance of the true theta.  The result equals the true stabilizer
    whenever the estimate is within ``separation / 4`` of the truth in the
    orbit metric.
    """
    if separation <= 0:
        raise ValueError("separation must be positive")
    theta_hat = np.asarray(theta_hat, dtype=np.float64)
    if theta_hat.shape != (group.dim,):
        raise DimensionMismatchError(f"theta_hat must have length {group.dim}")
    dists = np.linalg.norm(group.orbit(theta_hat) - theta_hat, axis=1)
    return tuple(int(i) for i in np.nonzero(dists < separation / 2.0)[0])
