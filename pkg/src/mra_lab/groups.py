"""Finite subgroups of the orthogonal group acting on R^d.

Built-in families (exact 0/+-1 entries, so the group law is exact in
floating point):

* ``trivial``       -- {I}
* ``sign_flip``     -- {I, -I}
* ``diag_signs``    -- all diagonal matrices with +-1 entries, 2^d elements
* ``cyclic``        -- powers of the coordinate cyclic shift, d elements
* ``permutations``  -- all coordinate permutations, d! elements

Element order is canonical and documented (see ``ELEMENT_ORDER_CONVENTION``)
so serialized element indices replay identically across runs and releases.
Composition and inverse tables are precomputed eagerly; note the Cayley
table costs |G|^2 memory.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatchError, NotAGroupError, SizeLimitError

__all__ = [
    "ELEMENT_ORDER_CONVENTION",
    "GROUP_KINDS",
    "FiniteIsometryGroup",
    "VerificationReport",
    "make_group",
    "verify_group",
    "group_from_config",
]

# Canonical element enumeration, stable across releases:
#   trivial       [I]
#   sign_flip     [I, -I]
#   diag_signs    sign patterns in lexicographic order, +1 before -1,
#                 coordinate 0 most significant
#   cyclic        shift powers I, R, R^2, ..., R^(d-1)
#   permutations  one-line notation in lexicographic order
#   custom        caller's order, preserved
ELEMENT_ORDER_CONVENTION = "element-order-v1"

GROUP_KINDS = ("trivial", "sign_flip", "diag_signs", "cyclic", "permutations", "custom")

DEFAULT_MAX_ORDER = 10**6

# Distinct elements must be at least this far apart in max norm.
_DISTINCT_TOL = 1e-9


@dataclass
class VerificationReport:
    """Outcome of the group-axiom checks; never raises, lists violations."""

    passed: bool
    violations: list[str] = field(default_factory=list)


class FiniteIsometryGroup:
    """An ordered finite set of orthogonal matrices closed under the group law.

    Immutable after construction; safe for concurrent reads.
    """

    def __init__(self, elements: np.ndarray, kind: str, tol: float = 1e-10):
        elements = np.ascontiguousarray(np.asarray(elements, dtype=np.float64))
        if elements.ndim != 3 or elements.shape[1] != elements.shape[2]:
            raise ValueError("elements must be an (m, d, d) array")
        self.kind = kind
        self.dim = int(elements.shape[1])
        self.elements = elements
        self.identity_index = _find_identity(elements, tol)
        self.cayley, self.inverse = _composition_tables(elements, self.identity_index, tol)
        for arr in (self.elements, self.cayley, self.inverse):
            arr.flags.writeable = False

    def __len__(self) -> int:
        return self.elements.shape[0]

    @property
    def order(self) -> int:
        return self.elements.shape[0]

    def __repr__(self) -> str:
        return f"FiniteIsometryGroup(kind={self.kind!r}, d={self.dim}, order={self.order})"

    def _check_vector(self, u) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        if u.shape != (self.dim,):
            raise DimensionMismatchError(
                f"expected vector of length {self.dim}, got shape {u.shape}"
            )
        return u

    def apply(self, i: int, u) -> np.ndarray:
        """Act with element ``i`` on the vector ``u``."""
        return self.elements[i] @ self._check_vector(u)

    def orbit(self, u) -> np.ndarray:
        """All images ``g u``, one per row, in element order."""
        return self.elements @ self._check_vector(u)

    def compose(self, i: int, j: int) -> int:
        """Index of ``elements[i] @ elements[j]``."""
        return int(self.cayley[i, j])

    def invert(self, i: int) -> int:
        """Index of the inverse of ``elements[i]``."""
        return int(self.inverse[i])

    def to_config(self) -> dict:
        """JSON-serializable spec; custom groups carry row-major elements."""
        if self.kind == "custom":
            return {
                "kind": "custom",
                "d": self.dim,
                "elements": [list(map(float, g.ravel())) for g in self.elements],
            }
        return {"kind": self.kind, "d": self.dim}


def _find_identity(elements: np.ndarray, tol: float) -> int:
    d = elements.shape[1]
    eye = np.eye(d)
    dists = np.abs(elements - eye).max(axis=(1, 2))
    idx = int(np.argmin(dists))
    if dists[idx] > tol:
        raise NotAGroupError("no identity element found")
    return idx


def _composition_tables(elements: np.ndarray, identity_index: int, tol: float):
    m, d, _ = elements.shape
    rounded = np.rint(elements)
    exact = bool(np.abs(elements - rounded).max() <= 1e-12)
    cayley = np.empty((m, m), dtype=np.int32)
    if exact:
        ints = rounded.astype(np.int8)
        index_of = {e.tobytes(): k for k, e in enumerate(ints)}
        for i in range(m):
            prods = ints[i] @ ints
            for j in range(m):
                key = prods[j].astype(np.int8).tobytes()
                k = index_of.get(key)
                if k is None:
                    raise NotAGroupError("element set is not closed under composition")
                cayley[i, j] = k
    else:
        flat = elements.reshape(m, d * d)
        for i in range(m):
            prods = (elements[i] @ elements).reshape(m, d * d)
            dists = np.abs(prods[:, None, :] - flat[None, :, :]).max(axis=2)
            nearest = dists.argmin(axis=1)
            if dists[np.arange(m), nearest].max() > max(tol, 1e-10):
                raise NotAGroupError("element set is not closed under composition")
            cayley[i] = nearest
    inverse = np.argmax(cayley == identity_index, axis=1).astype(np.int32)
    if not np.all(cayley[np.arange(m), inverse] == identity_index):
        raise NotAGroupError("some element has no inverse in the set")
    return cayley, inverse


def _builtin_elements(kind: str, d: int) -> np.ndarray:
    eye = np.eye(d)
    if kind == "trivial":
        return eye[None]
    if kind == "sign_flip":
        return np.stack([eye, -eye])
    if kind == "diag_signs":
        mats = np.empty((2**d, d, d))
        for k in range(2**d):
            signs = [1.0 if not (k >> (d - 1 - j)) & 1 else -1.0 for j in range(d)]
            mats[k] = np.diag(signs)
        return mats
    if kind == "cyclic":
        # (R u)_i = u_{i+1 mod d}
        shift = np.zeros((d, d))
        for i in range(d):
            shift[i, (i + 1) % d] = 1.0
        mats = np.empty((d, d, d))
        mats[0] = eye
        for k in range(1, d):
            mats[k] = mats[k - 1] @ shift
        return mats
    if kind == "permutations":
        mats = np.empty((math.factorial(d), d, d))
        for k, perm in enumerate(itertools.permutations(range(d))):
            g = np.zeros((d, d))
            for i, j in enumerate(perm):
                g[i, j] = 1.0  # (g u)_i = u_{perm(i)}
            mats[k] = g
        return mats
    raise ValueError(f"unknown group kind {kind!r}")


def _builtin_order(kind: str, d: int) -> int:
    return {
        "trivial": 1,
        "sign_flip": 2,
        "diag_signs": 2**d,
        "cyclic": d,
        "permutations": math.factorial(d),
    }[kind]


def make_group(
    kind: str,
    d: int,
    custom_elems=None,
    max_order: int = DEFAULT_MAX_ORDER,
) -> FiniteIsometryGroup:
    """Construct a built-in family or a verified custom group.

    Raises ``SizeLimitError`` if the order would exceed ``max_order`` and
    ``NotAGroupError`` if a custom element set fails the group axioms.
    """
    if kind not in GROUP_KINDS:
        raise ValueError(f"kind must be one of {GROUP_KINDS}, got {kind!r}")
    if d < 1:
        raise ValueError("d must be >= 1")
    if kind == "permutations" and d > 8:
        raise ValueError("permutations supported up to d = 8")
    if kind == "diag_signs" and d > 20:
        raise ValueError("diag_signs supported up to d = 20")

    if kind == "custom":
        if custom_elems is None:
            raise ValueError("custom groups require custom_elems")
        elements = np.asarray(custom_elems, dtype=np.float64)
        if elements.ndim != 3:
            raise ValueError("custom_elems must be a list of square matrices")
        if elements.shape[0] > max_order:
            raise SizeLimitError(f"group order {elements.shape[0]} exceeds cap {max_order}")
        report = verify_group(elements)
        if not report.passed:
            raise NotAGroupError("; ".join(report.violations))
        return FiniteIsometryGroup(elements, "custom")

    order = _builtin_order(kind, d)
    if order > max_order:
        raise SizeLimitError(f"group order {order} exceeds cap {max_order}")
    return FiniteIsometryGroup(_builtin_elements(kind, d), kind)


def verify_group(elems, tol: float = 1e-10) -> VerificationReport:
    """Check orthogonality, distinctness, identity, closure and inverses.

    Violations are reported, never raised.
    """
    elements = np.asarray(elems, dtype=np.float64)
    if elements.ndim != 3 or elements.shape[0] == 0 or elements.shape[1] != elements.shape[2]:
        raise ValueError("expected a nonempty list of square matrices of equal dimension")
    m, d, _ = elements.shape
    eye = np.eye(d)
    violations: list[str] = []

    ortho_err = np.abs(np.einsum("mji,mjk->mik", elements, elements) - eye).max(axis=(1, 2))
    for i in np.nonzero(ortho_err > tol)[0]:
        violations.append(f"element {i} is not orthogonal (|g^T g - I|_max = {ortho_err[i]:.3e})")

    flat = elements.reshape(m, d * d)
    pair_dist = np.abs(flat[:, None, :] - flat[None, :, :]).max(axis=2)
    iu = np.triu_indices(m, k=1)
    for i, j in zip(*iu):
        if pair_dist[i, j] <= _DISTINCT_TOL:
            violations.append(f"elements {i} and {j} coincide within {_DISTINCT_TOL:.0e}")

    id_dist = np.abs(elements - eye).max(axis=(1, 2))
    if id_dist.min() > tol:
        violations.append("identity matrix is not in the set")

    # Closure and inverses; skip if orthogonality already failed badly.
    for i in range(m):
        prods = (elements[i] @ elements).reshape(m, d * d)
        dists = np.abs(prods[:, None, :] - flat[None, :, :]).max(axis=2).min(axis=1)
        for j in np.nonzero(dists > tol)[0]:
            violations.append(
                f"product of elements {i} and {j} is outside the set "
                f"(closest match off by {dists[j]:.3e})"
            )
        inv_dist = np.abs((elements[i] @ elements) - eye).max(axis=(1, 2)).min()
        if inv_dist > tol:
            violations.append(f"element {i} has no inverse in the set")

    return VerificationReport(passed=not violations, violations=violations)


def group_from_config(cfg: dict, max_order: int = DEFAULT_MAX_ORDER) -> FiniteIsometryGroup:
    """Build a group from its JSON spec, e.g. ``{"kind": "cyclic", "d": 4}``."""
    kind = cfg.get("kind")
    d = cfg.get("d")
    if kind == "custom":
        flat = cfg.get("elements")
        if flat is None:
            raise ValueError("custom group config requires 'elements'")
        elems = np.asarray([np.asarray(e, dtype=np.float64).reshape(d, d) for e in flat])
        return make_group("custom", int(d), custom_elems=elems, max_order=max_order)
    return make_group(kind, int(d), max_order=max_order)
