"""Finite truncation of the complex sequence space l2.

A vector is a 1-D ``complex128`` array of coordinates against the canonical
basis e_1..e_N. An orthonormal family is stored as a 2-D array with one vector
per row. The inner product is linear in its first argument and conjugate
linear in its second::

    <u, v> = sum_j u_j * conj(v_j)
"""
from dataclasses import dataclass, field
import math

import numpy as np

from ._validation import check_family, check_vector, ensure_finite, frozen
from .errors import InvalidInputError


@dataclass(frozen=True)
class ToleranceConfig:
    """Numerical thresholds shared by every module.

    Attributes
    ----------
    ortho_tol : float
        Largest entrywise deviation of a Gram matrix from the identity that
        still certifies a family as orthonormal.
    breakdown_tol : float
        Relative norm below which a Gram-Schmidt residual counts as zero,
        i.e. the new vector is declared linearly dependent.
    eq_slack : float
        Slack allowed when checking identities such as Pythagoras or Bessel.
    reorthog_threshold : float
        A second projection pass runs when the projected norm falls below
        this fraction of the norm before projection.
    """

    ortho_tol: float = 1e-10
    breakdown_tol: float = 1e-10
    eq_slack: float = 1e-10
    reorthog_threshold: float = 1 / math.sqrt(2)

    def __post_init__(self):
        for name in ("ortho_tol", "breakdown_tol", "eq_slack", "reorthog_threshold"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise InvalidInputError(f"{name} must be a positive finite number, got {value!r}")
        if self.breakdown_tol >= 1:
            raise InvalidInputError("breakdown_tol must be < 1")

    def replace(self, **changes):
        """Return a copy with some fields overridden."""
        return ToleranceConfig(**{**self.as_dict(), **changes})

    def as_dict(self):
        return {
            "ortho_tol": self.ortho_tol,
            "breakdown_tol": self.breakdown_tol,
            "eq_slack": self.eq_slack,
            "reorthog_threshold": self.reorthog_threshold,
        }


DEFAULT_TOL = ToleranceConfig()


@dataclass(frozen=True)
class HilbertModel:
    """The ambient space span(e_1..e_N) together with its tolerances."""

    dim: int
    tol: ToleranceConfig = field(default_factory=ToleranceConfig)

    def __post_init__(self):
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 2:
            raise InvalidInputError(f"dimension must be an integer >= 2, got {self.dim!r}")

    def zeros(self):
        return np.zeros(self.dim, dtype=np.complex128)

    def basis_vector(self, index):
        """Canonical basis vector e_index, 1-based."""
        if not 1 <= index <= self.dim:
            raise InvalidInputError(f"basis index {index} outside 1..{self.dim}")
        e = self.zeros()
        e[index - 1] = 1.0
        return e

    def vector(self, coeffs):
        return check_vector(coeffs, self.dim)

    def random_unit(self, rng):
        """Unit vector with i.i.d. complex Gaussian coordinates."""
        z = rng.standard_normal(self.dim) + 1j * rng.standard_normal(self.dim)
        return z / np.linalg.norm(z)


def inner_product(u, v):
    """Return <u, v>, linear in ``u`` and conjugate linear in ``v``."""
    u = check_vector(u, name="u")
    v = check_vector(v, u.shape[0], name="v")
    return complex(np.vdot(v, u))


def norm(u):
    u = check_vector(u)
    return float(np.linalg.norm(u))


@dataclass(frozen=True)
class CoefficientSequence:
    """Coefficients (alpha_j) of an orthonormal expansion and their energy sum |alpha_j|^2."""

    values: np.ndarray
    energy: float

    @classmethod
    def from_values(cls, values):
        values = np.asarray(values, dtype=np.complex128).reshape(-1)
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("coefficients contain NaN or Inf")
        values = frozen(values.copy())
        return cls(values, float(np.sum(np.abs(values) ** 2)))

    def __len__(self):
        return self.values.shape[0]


class OrthonormalSystem:
    """Ordered orthonormal family theta_1..theta_m, certified by its Gram defect.

    Parameters
    ----------
    vectors : array_like, shape (m, N)
        One vector per row.
    tol : ToleranceConfig, optional
        ``tol.ortho_tol`` decides certification.
    certify : bool, default True
        Raise :class:`InvalidInputError` when the family is not orthonormal
        within ``tol.ortho_tol``. With ``certify=False`` the system is built
        anyway and :attr:`certified` reports the outcome.

    An empty system (m = 0) is allowed; it spans {0}.
    """

    def __init__(self, vectors, tol=DEFAULT_TOL, certify=True, dim=None):
        arr = check_family(vectors, dim=dim, name="vectors", allow_empty=True)
        if arr.shape[0] == 0 and dim is not None:
            arr = np.zeros((0, dim), dtype=np.complex128)
        if arr.shape[0] > max(arr.shape[1], 1):
            raise InvalidInputError("an orthonormal system cannot have more vectors than the dimension")
        self._vectors = frozen(np.array(arr, dtype=np.complex128))
        self.tol = tol
        if arr.shape[0]:
            gram = arr.conj() @ arr.T
            self.gram_defect = float(np.max(np.abs(gram - np.eye(arr.shape[0]))))
        else:
            self.gram_defect = 0.0
        self.certified = self.gram_defect <= tol.ortho_tol
        if certify and not self.certified:
            raise InvalidInputError(
                f"family is not orthonormal: Gram defect {self.gram_defect:.3e} > {tol.ortho_tol:.1e}"
            )

    @property
    def vectors(self):
        return self._vectors

    @property
    def dim(self):
        return self._vectors.shape[1]

    def __len__(self):
        return self._vectors.shape[0]

    def __getitem__(self, index):
        if isinstance(index, slice):
            return OrthonormalSystem(self._vectors[index], self.tol, certify=False, dim=self.dim)
        return self._vectors[index]

    def __iter__(self):
        return iter(self._vectors)

    def __repr__(self):
        return f"OrthonormalSystem(count={len(self)}, dim={self.dim}, gram_defect={self.gram_defect:.2e})"

    def prefix(self, n):
        """The first ``n`` vectors as a new system."""
        if not 0 <= n <= len(self):
            raise InvalidInputError(f"prefix length {n} outside 0..{len(self)}")
        return self[:n]

    def require_certified(self):
        if not self.certified:
            raise InvalidInputError(
                f"orthonormal system not certified (Gram defect {self.gram_defect:.3e})"
            )


@dataclass(frozen=True)
class BesselReport:
    """Energy ledger of ``u`` against an orthonormal system.

    ``partial_energies[n-1]`` is sum_{j<=n} |<u, theta_j>|^2. The Parseval
    defect ``norm_sq - partial_energies[-1]`` and the squared expansion
    residual agree up to rounding; both vanish exactly when ``u`` lies in the
    span of the system.
    """

    partial_energies: np.ndarray
    norm_sq: float
    parseval_defect: float
    expansion_residual: float

    def bessel_holds(self, slack=DEFAULT_TOL.eq_slack):
        final = self.partial_energies[-1] if self.partial_energies.size else 0.0
        return bool(final <= self.norm_sq * (1 + slack))


def _coefficients(u, system):
    return system.vectors.conj() @ u


def project_coefficients(u, system):
    """Return the coefficients <u, theta_m> against a certified system."""
    system.require_certified()
    u = check_vector(u, system.dim)
    return CoefficientSequence.from_values(_coefficients(u, system))


def expand(system, alpha):
    """Return sum_j alpha_j theta_j."""
    if isinstance(alpha, CoefficientSequence):
        alpha = alpha.values
    alpha = np.asarray(alpha, dtype=np.complex128).reshape(-1)
    if alpha.shape[0] != len(system):
        raise InvalidInputError(
            f"{alpha.shape[0]} coefficients for a system of {len(system)} vectors"
        )
    if not np.all(np.isfinite(alpha)):
        raise InvalidInputError("coefficients contain NaN or Inf")
    if len(system) == 0:
        return np.zeros(system.dim, dtype=np.complex128)
    return ensure_finite(alpha @ system.vectors, "expand")


def projection_residual(u, system):
    """Distance ||u - sum_j <u, theta_j> theta_j|| from ``u`` to span(system)."""
    system.require_certified()
    u = check_vector(u, system.dim)
    if len(system) == 0:
        return float(np.linalg.norm(u))
    r = u - _coefficients(u, system) @ system.vectors
    return float(ensure_finite(np.linalg.norm(r), "projection_residual"))


def bessel_parseval_report(u, system):
    system.require_certified()
    u = check_vector(u, system.dim)
    coeffs = _coefficients(u, system)
    partial = np.cumsum(np.abs(coeffs) ** 2)
    norm_sq = float(np.vdot(u, u).real)
    final = float(partial[-1]) if partial.size else 0.0
    residual = projection_residual(u, system)
    ensure_finite(partial, "bessel_parseval_report")
    return BesselReport(
        partial_energies=frozen(partial),
        norm_sq=norm_sq,
        parseval_defect=norm_sq - final,
        expansion_residual=residual,
    )
