"""Bounded operators on the truncated space and invariant-subspace diagnostics.

Operators are small immutable objects with ``apply`` (T v), ``adjoint_apply``
(T* v) and ``to_dense``. Shift-like and diagonal kinds never build a matrix;
eigen and null-space routines materialize one on demand.

The truncated unilateral shift sends e_N to 0, so unlike the shift on l2 it
is nilpotent and has a kernel. Keep orbit depths well below N.
"""
from dataclasses import dataclass
import numbers

import numpy as np
import scipy.linalg

from ._validation import check_vector, ensure_finite, frozen
from .errors import InvalidInputError, NumericalFailure
from .hilbert import DEFAULT_TOL, OrthonormalSystem, projection_residual


class Operator:
    """Base class for the operator zoo."""

    kind = "operator"
    dim: int

    def apply(self, v):
        v = check_vector(v, self.dim, name="v")
        return ensure_finite(self._matvec(v), f"{self.kind}.apply")

    def adjoint_apply(self, v):
        v = check_vector(v, self.dim, name="v")
        return ensure_finite(self._rmatvec(v), f"{self.kind}.adjoint_apply")

    def __call__(self, v):
        return self.apply(v)

    def to_dense(self):
        """Materialize the N x N matrix (columns are T e_j)."""
        return np.column_stack([self._matvec(e) for e in np.eye(self.dim, dtype=np.complex128)])

    def as_linear_operator(self):
        """Wrap as a :class:`scipy.sparse.linalg.LinearOperator`."""
        from scipy.sparse.linalg import LinearOperator

        return LinearOperator(
            (self.dim, self.dim), matvec=self._matvec, rmatvec=self._rmatvec, dtype=np.complex128
        )

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return Composition((self, other))
        return self.apply(other)

    def __add__(self, other):
        return ScaledSum(((1.0, self), (1.0, other)))

    def __rmul__(self, scalar):
        return ScaledSum(((complex(scalar), self),))


def _check_dim(dim):
    if not isinstance(dim, numbers.Integral) or dim < 2:
        raise InvalidInputError(f"operator dimension must be an integer >= 2, got {dim!r}")
    return int(dim)


def _check_entries(values, dim, name):
    arr = check_vector(values, dim, name=name)
    return frozen(arr.copy())


@dataclass(frozen=True, eq=False)
class UnilateralShift(Operator):
    """e_j -> e_{j+1} for j < N, e_N -> 0."""

    dim: int
    kind = "unilateral_shift"

    def __post_init__(self):
        object.__setattr__(self, "dim", _check_dim(self.dim))

    def _matvec(self, v):
        out = np.zeros_like(v)
        out[1:] = v[:-1]
        return out

    def _rmatvec(self, v):
        out = np.zeros_like(v)
        out[:-1] = v[1:]
        return out

    def to_dict(self):
        return {"kind": self.kind}


@dataclass(frozen=True, eq=False)
class WeightedShift(Operator):
    """e_j -> weights[j] e_{j+1}; the last weight is unused at truncation."""

    weights: np.ndarray
    kind = "weighted_shift"

    def __post_init__(self):
        w = np.asarray(self.weights)
        _check_dim(w.shape[0] if w.ndim == 1 else 0)
        object.__setattr__(self, "weights", _check_entries(w, None, "weights"))

    @property
    def dim(self):
        return self.weights.shape[0]

    def _matvec(self, v):
        out = np.zeros_like(v)
        out[1:] = self.weights[:-1] * v[:-1]
        return out

    def _rmatvec(self, v):
        out = np.zeros_like(v)
        out[:-1] = np.conj(self.weights[:-1]) * v[1:]
        return out

    def to_dict(self):
        return {"kind": self.kind, "weights": _encode_complex(self.weights)}


@dataclass(frozen=True, eq=False)
class Diagonal(Operator):
    """e_j -> entries[j] e_j."""

    entries: np.ndarray
    kind = "diagonal"

    def __post_init__(self):
        e = np.asarray(self.entries)
        _check_dim(e.shape[0] if e.ndim == 1 else 0)
        object.__setattr__(self, "entries", _check_entries(e, None, "entries"))

    @property
    def dim(self):
        return self.entries.shape[0]

    def _matvec(self, v):
        return self.entries * v

    def _rmatvec(self, v):
        return np.conj(self.entries) * v

    def to_dense(self):
        return np.diag(self.entries)

    def to_dict(self):
        return {"kind": self.kind, "entries": _encode_complex(self.entries)}


@dataclass(frozen=True, eq=False)
class Dense(Operator):
    matrix: np.ndarray
    kind = "dense"

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidInputError(f"dense operator needs a square matrix, got shape {m.shape}")
        _check_dim(m.shape[0])
        m = m.astype(np.complex128)
        if not np.all(np.isfinite(m)):
            raise InvalidInputError("matrix contains NaN or Inf")
        object.__setattr__(self, "matrix", frozen(m.copy()))

    @property
    def dim(self):
        return self.matrix.shape[0]

    def _matvec(self, v):
        return self.matrix @ v

    def _rmatvec(self, v):
        return self.matrix.conj().T @ v

    def to_dense(self):
        return self.matrix.copy()

    def to_dict(self):
        return {"kind": self.kind, "matrix": [_encode_complex(row) for row in self.matrix]}


@dataclass(frozen=True, eq=False)
class ScaledSum(Operator):
    """sum_i c_i T_i."""

    terms: tuple
    kind = "scaled_sum"

    def __post_init__(self):
        terms = tuple((complex(c), op) for c, op in self.terms)
        if not terms:
            raise InvalidInputError("scaled_sum needs at least one term")
        dims = {op.dim for _, op in terms}
        if len(dims) != 1:
            raise InvalidInputError(f"scaled_sum terms have mismatched dimensions {sorted(dims)}")
        object.__setattr__(self, "terms", terms)

    @property
    def dim(self):
        return self.terms[0][1].dim

    def _matvec(self, v):
        return sum(c * op._matvec(v) for c, op in self.terms)

    def _rmatvec(self, v):
        return sum(np.conj(c) * op._rmatvec(v) for c, op in self.terms)

    def to_dict(self):
        return {
            "kind": self.kind,
            "terms": [{"coef": _encode_scalar(c), "operator": op.to_dict()} for c, op in self.terms],
        }


@dataclass(frozen=True, eq=False)
class Composition(Operator):
    """factors[0] @ factors[1] @ ... ; the last factor is applied first."""

    factors: tuple
    kind = "composition"

    def __post_init__(self):
        factors = tuple(self.factors)
        if not factors:
            raise InvalidInputError("composition needs at least one factor")
        dims = {op.dim for op in factors}
        if len(dims) != 1:
            raise InvalidInputError(f"composition factors have mismatched dimensions {sorted(dims)}")
        object.__setattr__(self, "factors", factors)

    @property
    def dim(self):
        return self.factors[0].dim

    def _matvec(self, v):
        for op in reversed(self.factors):
            v = op._matvec(v)
        return v

    def _rmatvec(self, v):
        for op in self.factors:
            v = op._rmatvec(v)
        return v

    def to_dict(self):
        return {"kind": self.kind, "factors": [op.to_dict() for op in self.factors]}


def _encode_scalar(z):
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _encode_complex(values):
    return [_encode_scalar(z) for z in values]


def apply(T, v):
    return T.apply(v)


@dataclass(frozen=True)
class SubspaceBasis:
    """A subspace given by an orthonormal basis. Finite-dimensional, hence closed."""

    system: OrthonormalSystem

    def __post_init__(self):
        self.system.require_certified()

    @property
    def dim(self):
        return len(self.system)

    @property
    def ambient_dim(self):
        return self.system.dim

    @classmethod
    def from_vectors(cls, vectors, tol=DEFAULT_TOL, dim=None):
        return cls(OrthonormalSystem(vectors, tol, dim=dim))


@dataclass(frozen=True)
class InvariantSubspaceReport:
    basis: SubspaceBasis
    invariance_residual: float
    nontrivial: bool
    eigenvalue: complex | None = None


def operator_norm_estimate(T, iters=100, seed=0):
    """Power iteration on T*T; returns the largest Rayleigh quotient ||T v|| / ||v|| seen.

    Each returned value is attained by some v, so the estimate never exceeds
    the true norm beyond rounding.
    """
    if iters < 1:
        raise InvalidInputError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(T.dim) + 1j * rng.standard_normal(T.dim)
    v /= np.linalg.norm(v)
    best = 0.0
    for _ in range(iters):
        Tv = T._matvec(v)
        best = max(best, float(np.linalg.norm(Tv)))
        w = T._rmatvec(Tv)
        w_norm = np.linalg.norm(w)
        if w_norm == 0:
            break
        v = ensure_finite(w / w_norm, "operator_norm_estimate")
    return best


def _spectral_norm(A):
    if not A.size:
        return 0.0
    return float(scipy.linalg.svdvals(A)[0])


def kernel_basis(T, tol=DEFAULT_TOL):
    """Orthonormal basis of the numerical null space of ``T``.

    Singular directions with singular value <= ``tol.breakdown_tol * ||T||``
    count as kernel. An injective operator gives an empty basis.
    """
    A = T.to_dense()
    try:
        N = scipy.linalg.null_space(A, rcond=tol.breakdown_tol)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"null-space computation failed: {exc}") from exc
    return SubspaceBasis(OrthonormalSystem(N.T, tol, dim=T.dim))


def invariance_residual(T, S):
    """max over basis vectors q of dist(T q, S) / max(1, ||T q||).

    Zero certifies T(S) is contained in S.
    """
    if S.ambient_dim != T.dim:
        raise InvalidInputError(f"subspace lives in dimension {S.ambient_dim}, operator in {T.dim}")
    worst = 0.0
    for q in S.system:
        Tq = T._matvec(q)
        worst = max(worst, projection_residual(Tq, S.system) / max(1.0, float(np.linalg.norm(Tq))))
    return worst


def _select_eigenvalue(eigvals):
    # largest modulus, near-ties go to the lowest index
    moduli = np.abs(eigvals)
    top = moduli.max()
    return int(np.flatnonzero(moduli >= top - 1e-12 * max(top, 1.0))[0])


def finite_dim_invariant_subspace(T, tol=DEFAULT_TOL):
    """One-dimensional invariant subspace spanned by a unit eigenvector of ``T``."""
    if T.dim < 2:
        raise InvalidInputError("need dimension >= 2")
    A = T.to_dense()
    try:
        eigvals, eigvecs = scipy.linalg.eig(A)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericalFailure(f"eigen-decomposition failed: {exc}") from exc
    if not (np.all(np.isfinite(eigvals)) and np.all(np.isfinite(eigvecs))):
        raise NumericalFailure("eigen-decomposition returned non-finite values")
    idx = _select_eigenvalue(eigvals)
    q = eigvecs[:, idx]
    q = q / np.linalg.norm(q)
    q = q * np.exp(-1j * np.angle(q[np.argmax(np.abs(q))]))
    basis = SubspaceBasis(OrthonormalSystem(q[None, :], tol))
    return InvariantSubspaceReport(
        basis=basis,
        invariance_residual=invariance_residual(T, basis),
        nontrivial=1 <= basis.dim <= T.dim - 1,
        eigenvalue=complex(eigvals[idx]),
    )


def eigen_residual(T, q):
    """||T q - <T q, q> q|| for a unit vector q."""
    q = check_vector(q, T.dim, name="q")
    Tq = T._matvec(q)
    return float(np.linalg.norm(Tq - np.vdot(q, Tq) * q))


def subspace_report(T, system):
    """Invariance report for span(system)."""
    basis = SubspaceBasis(system)
    return InvariantSubspaceReport(
        basis=basis,
        invariance_residual=invariance_residual(T, basis),
        nontrivial=1 <= basis.dim <= T.dim - 1,
    )


# -- construction from plain-data descriptions (JSON configs) ---------------

def _decode_scalar(value):
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise InvalidInputError(f"complex numbers are [re, im] pairs, got {value!r}")
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, numbers.Number) and not isinstance(value, bool):
        return complex(value)
    raise InvalidInputError(f"not a number: {value!r}")


def _decode_sequence(spec, dim, name):
    """A list of numbers, or a generator rule: {"linspace": [a, b]} / {"harmonic": c} / {"constant": c}."""
    if isinstance(spec, dict):
        if len(spec) != 1:
            raise InvalidInputError(f"{name}: exactly one generator rule expected, got {sorted(spec)}")
        (rule, arg), = spec.items()
        if rule == "linspace":
            a, b = (_decode_scalar(t) for t in arg)
            return np.linspace(a, b, dim)
        if rule == "harmonic":
            return _decode_scalar(arg) / np.arange(1, dim + 1)
        if rule == "constant":
            return np.full(dim, _decode_scalar(arg))
        raise InvalidInputError(f"{name}: unknown generator rule {rule!r}")
    if not isinstance(spec, (list, tuple)):
        raise InvalidInputError(f"{name} must be a list or a generator rule")
    values = np.array([_decode_scalar(t) for t in spec])
    if values.shape[0] != dim:
        raise InvalidInputError(f"{name} has {values.shape[0]} entries, expected dim={dim}")
    return values


def operator_from_dict(desc, dim):
    """Build an operator from a JSON-style description.

    Examples
    --------
    >>> operator_from_dict({"kind": "unilateral_shift"}, 4).apply([1, 0, 0, 0])
    array([0.+0.j, 1.+0.j, 0.+0.j, 0.+0.j])
    """
    if not isinstance(desc, dict) or "kind" not in desc:
        raise InvalidInputError(f"operator description needs a 'kind', got {desc!r}")
    kind = desc["kind"]
    if kind == "unilateral_shift":
        return UnilateralShift(dim)
    if kind == "weighted_shift":
        return WeightedShift(_decode_sequence(desc.get("weights"), dim, "weights"))
    if kind == "diagonal":
        return Diagonal(_decode_sequence(desc.get("entries"), dim, "entries"))
    if kind == "dense":
        matrix = desc.get("matrix")
        if isinstance(matrix, dict):
            if set(matrix) != {"random"}:
                raise InvalidInputError("dense matrix rule must be {'random': {'seed': s, 'scale': c}}")
            params = matrix["random"]
            rng = np.random.default_rng(int(params.get("seed", 0)))
            # entries of variance scale^2 / dim give spectral radius close to scale
            scale = float(params.get("scale", 1.0)) / np.sqrt(2 * dim)
            m = scale * (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
            return Dense(m)
        if not isinstance(matrix, (list, tuple)) or len(matrix) != dim:
            raise InvalidInputError(f"dense matrix must have {dim} rows")
        return Dense(np.array([_decode_sequence(row, dim, "matrix row") for row in matrix]))
    if kind == "scaled_sum":
        terms = desc.get("terms", [])
        if not all(isinstance(t, dict) and "operator" in t for t in terms):
            raise InvalidInputError("scaled_sum terms must look like {'coef': c, 'operator': {...}}")
        return ScaledSum(tuple(
            (_decode_scalar(t.get("coef", 1.0)), operator_from_dict(t["operator"], dim)) for t in terms
        ))
    if kind == "composition":
        return Composition(tuple(operator_from_dict(f, dim) for f in desc.get("factors", [])))
    raise InvalidInputError(f"unknown operator kind {kind!r}")
