"""Gram-Schmidt orthogonalization with breakdown detection.

The recursion is the textbook one::

    w_1     = u_1
    w_{n+1} = u_{n+1} - sum_{j<=n} <u_{n+1}, w_j> / ||w_j||^2 * w_j

evaluated through the normalized vectors e_j = w_j / ||w_j||, which gives the
same w_{n+1}. In floating point the classical form loses orthogonality, so the
default is the modified variant plus a conditional second pass ("twice is
enough"). Linear dependence cannot be decided exactly; a step breaks down when
``||w_k|| <= breakdown_tol * ||u_k||``.
"""
from dataclasses import dataclass, field
import enum

import numpy as np

from ._validation import check_family, ensure_finite, frozen
from .errors import InvalidInputError
from .hilbert import DEFAULT_TOL, OrthonormalSystem, ToleranceConfig, projection_residual


class Variant(str, enum.Enum):
    CLASSICAL = "classical"
    MODIFIED = "modified"


@dataclass(frozen=True)
class GSConfig:
    variant: Variant = Variant.MODIFIED
    reorthogonalize: bool = True
    thresholds: ToleranceConfig = field(default_factory=ToleranceConfig)

    def __post_init__(self):
        try:
            object.__setattr__(self, "variant", Variant(self.variant))
        except ValueError:
            raise InvalidInputError(
                f"unknown Gram-Schmidt variant {self.variant!r}; use 'classical' or 'modified'"
            ) from None


@dataclass(frozen=True)
class OrthogonalizationOutcome:
    """Result of :func:`orthogonalize`.

    Attributes
    ----------
    raw_orthogonal : ndarray, shape (m, N)
        The unnormalized w_j, one per row.
    system : OrthonormalSystem
        e_j = w_j / ||w_j||.
    breakdown_index : int or None
        1-based index of the first input vector found dependent on its
        predecessors. Steps from there on are not computed.
    span_residuals : ndarray, shape (m,)
        Distance of u_k from span(e_1..e_k) for each completed step.
    reorthogonalized : ndarray of bool, shape (m,)
        Whether step k needed the second projection pass.
    """

    raw_orthogonal: np.ndarray
    system: OrthonormalSystem
    breakdown_index: int | None
    span_residuals: np.ndarray
    reorthogonalized: np.ndarray

    @property
    def completed(self):
        return len(self.system)


def _project_out(w, basis, variant):
    if not len(basis):
        return w
    if variant is Variant.CLASSICAL:
        E = np.asarray(basis)
        return w - (E.conj() @ w) @ E
    w = w.copy()
    for e in basis:
        w -= np.vdot(e, w) * e
    return w


def orthogonalize(us, cfg=None):
    """Orthogonalize ``us`` in order, stopping at the first breakdown.

    Parameters
    ----------
    us : sequence of vectors or ndarray of shape (m, N)
    cfg : GSConfig, optional

    Returns
    -------
    OrthogonalizationOutcome
    """
    cfg = cfg or GSConfig()
    tol = cfg.thresholds
    U = check_family(us, name="us")
    if not np.any(U[0]):
        raise InvalidInputError("first vector is zero")

    raw, basis, residuals, again = [], [], [], []
    breakdown = None
    for k, u in enumerate(U):
        u_norm = np.linalg.norm(u)
        if k == 0:
            w = u.copy()
            second = False
        else:
            w = _project_out(u, basis, cfg.variant)
            second = cfg.reorthogonalize and np.linalg.norm(w) < tol.reorthog_threshold * u_norm
            if second:
                w = _project_out(w, basis, cfg.variant)
        ensure_finite(w, f"Gram-Schmidt step {k + 1}")
        w_norm = np.linalg.norm(w)
        if w_norm <= tol.breakdown_tol * u_norm:
            breakdown = k + 1
            break
        raw.append(w)
        basis.append(w / w_norm)
        again.append(second)
        E = np.asarray(basis)
        residuals.append(np.linalg.norm(u - (E.conj() @ u) @ E))

    dim = U.shape[1]
    system = OrthonormalSystem(np.asarray(basis).reshape(-1, dim), tol, certify=False, dim=dim)
    return OrthogonalizationOutcome(
        raw_orthogonal=frozen(np.asarray(raw).reshape(-1, dim)),
        system=system,
        breakdown_index=breakdown,
        span_residuals=frozen(np.asarray(residuals, dtype=float)),
        reorthogonalized=frozen(np.asarray(again, dtype=bool)),
    )


def span_preservation_residual(us, outcome, n):
    """Largest distance from u_1..u_n to span(e_1..e_n).

    Zero certifies span(u_1..u_n) is contained in span(e_1..e_n); the reverse
    inclusion holds by construction.
    """
    U = check_family(us, name="us")
    if not 1 <= n <= outcome.completed:
        raise InvalidInputError(f"n={n} outside the {outcome.completed} completed steps")
    if n > U.shape[0]:
        raise InvalidInputError(f"n={n} exceeds the {U.shape[0]} input vectors")
    system = outcome.system.prefix(n)
    return max(projection_residual(u, system) for u in U[:n])

