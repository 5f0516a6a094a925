"""Orbit chains: orthonormalized operator orbits and the weak behaviour of their residual directions.

Given an operator T and a nonzero seed x the chain is built as follows:

1. the orbit T x, T^2 x, ..., T^m x;
2. Gram-Schmidt on the orbit gives an orthonormal theta_1..theta_m with
   span(theta_1..theta_n) = span(T x..T^n x) for every n;
3. a_j = <x, theta_j>, x_n = x - sum_{j<=n} a_j theta_j and y_n = x_n / ||x_n||.

Each y_n is a unit vector orthogonal to theta_1..theta_n, so for every probe z

    |<z, y_n>|^2 + sum_{j<=n} |<z, theta_j>|^2 <= ||z||^2.

If the thetas are complete the right-hand tail vanishes and y_n tends weakly
to zero. If x keeps a positive distance from the closed orbit span, y_n
converges in norm to a unit vector and that closed span is a proper invariant
subspace. At finite truncation both regimes show up as trends, and the
verdict labels are heuristics; the inequality checks are hard guarantees.
"""
from dataclasses import dataclass, field
import enum
import logging
import math

import numpy as np

from ._validation import check_family, check_vector, ensure_finite, frozen
from .errors import InconsistencyError, InvalidInputError, NumericalFailure
from .gram_schmidt import GSConfig, orthogonalize
from .hilbert import (
    CoefficientSequence,
    HilbertModel,
    OrthonormalSystem,
    bessel_parseval_report,
)
from .operators import InvariantSubspaceReport, subspace_report

logger = logging.getLogger(__name__)

# orbit vectors with norms outside this window are rescaled before Gram-Schmidt
RESCALE_WINDOW = (1e-12, 1e12)

# verdict heuristics
ZERO_TREND_FACTOR = 10.0
ZERO_TREND_FLOOR = 1e-6
STABILITY_WINDOW = 4
STABILITY_RTOL = 1e-3


class Verdict(str, enum.Enum):
    WEAK_LIMIT_ZERO_TREND = "weak_limit_zero_trend"
    NONZERO_WEAK_LIMIT = "nonzero_weak_limit"
    INCONCLUSIVE = "inconclusive"


def build_orbit(T, x, depth, include_x0=False):
    """Return (T x, ..., T^depth x), optionally preceded by x itself.

    Computed by repeated application. Raises NumericalFailure on overflow;
    :func:`third_claim_chain` rescales instead.
    """
    x = check_vector(x, T.dim, name="x")
    if not np.any(x):
        raise InvalidInputError("seed vector x is zero")
    if not 1 <= depth <= T.dim:
        raise InvalidInputError(f"depth must lie in 1..{T.dim}, got {depth}")
    orbit = [x.copy()] if include_x0 else []
    v = x
    for k in range(1, depth + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            v = T._matvec(v)
        ensure_finite(v, f"orbit step {k} (rescale the operator or reduce depth)")
        orbit.append(v)
    return orbit


def _rescaled_orbit(T, x, depth):
    """Orbit vectors up to positive factors, plus log of each factor.

    ``orbit[k-1] = exp(log_scales[k-1]) * T^k x``.
    """
    lo, hi = RESCALE_WINDOW
    orbit, log_scales = [], []
    v, log_c = x, 0.0
    for k in range(1, depth + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            v = T._matvec(v)
        ensure_finite(v, f"orbit step {k}")
        nv = np.linalg.norm(v)
        if nv and not lo <= nv <= hi:
            v = v / nv
            log_c -= math.log(nv)
        orbit.append(v)
        log_scales.append(log_c)
    return np.array(orbit), np.array(log_scales)


def _fix_phase(system_vectors):
    """Rotate each row so its largest-modulus coordinate is real and positive."""
    out = np.array(system_vectors, copy=True)
    for row in out:
        idx = np.argmax(np.abs(row))
        pivot = row[idx]
        if pivot != 0:
            row *= np.conj(pivot) / abs(pivot)
            row[idx] = abs(row[idx])
    return out


def _orbit_system(outcome, cfg, dim):
    theta = OrthonormalSystem(_fix_phase(outcome.system.vectors), cfg.thresholds, certify=False, dim=dim)
    if not theta.certified:
        raise NumericalFailure(
            f"Gram-Schmidt ({cfg.variant.value}, reorthogonalize={cfg.reorthogonalize}) lost "
            f"orthogonality on the orbit: Gram defect {theta.gram_defect:.3e} > {cfg.thresholds.ortho_tol:.1e}"
        )
    return theta


@dataclass(frozen=True)
class OrbitChain:
    """Everything derived from one (T, x, depth) triple.

    ``residuals[n-1]`` is x_n and ``directions[n-1]`` is y_n. Directions stop
    at the first n where ||x_n|| <= breakdown_tol * ||x||; past that point
    x_n is rounding noise and y_n is undefined.
    """

    x: np.ndarray
    orbit: np.ndarray
    orbit_log_scales: np.ndarray
    theta: OrthonormalSystem
    a: CoefficientSequence
    residuals: np.ndarray
    directions: np.ndarray
    breakdown_index: int | None
    span_residuals: np.ndarray
    config: GSConfig = field(repr=False)

    @property
    def depth(self):
        return len(self.theta)

    @property
    def residual_norms(self):
        return np.linalg.norm(self.residuals, axis=1)

    @property
    def x_norm(self):
        return float(np.linalg.norm(self.x))

    @property
    def tol(self):
        return self.config.thresholds

    def reconstruction_errors(self):
        """||x - (x_n + sum_{j<=n} a_j theta_j)|| for each n."""
        partial = np.cumsum(self.a.values[:, None] * self.theta.vectors, axis=0)
        return np.linalg.norm(self.x - (self.residuals + partial), axis=1)

    def pythagoras_errors(self):
        """| ||x_n||^2 - (||x||^2 - sum_{j<=n} |a_j|^2) | for each n."""
        expected = self.x_norm ** 2 - np.cumsum(np.abs(self.a.values) ** 2)
        return np.abs(self.residual_norms ** 2 - expected)

    def tail_orthogonality(self):
        """max_{j<=n} |<y_n, theta_j>| for each direction y_n."""
        if not len(self.directions):
            return np.zeros(0)
        G = np.abs(self.directions.conj() @ self.theta.vectors.T)
        n = len(self.directions)
        mask = np.tril(np.ones((n, G.shape[1]), dtype=bool))
        return np.where(mask, G, 0.0).max(axis=1)

    def span_certificate(self):
        """Largest distance of T^k x (normalized) from span(theta_1..theta_n), over k <= n <= depth."""
        if not self.depth:
            return 0.0
        U = self.orbit[: self.depth]
        U = U / np.linalg.norm(U, axis=1, keepdims=True)
        C = U @ self.theta.vectors.conj().T
        worst = 0.0
        for n in range(1, self.depth + 1):
            Vn = self.theta.vectors[:n]
            R = U[:n] - C[:n, :n] @ Vn
            worst = max(worst, float(np.linalg.norm(R, axis=1).max()))
        return worst

    def certify(self, reconstruction_tol=1e-10, orthogonality_tol=1e-9, pythagoras_tol=1e-10):
        """Check the five chain properties; return a dict of measured values and pass flags."""
        measured = {
            "span": self.span_certificate(),
            "nonzero_residuals": bool(np.all(self.residual_norms[: len(self.directions)] > 0)),
            "tail_orthogonality": float(self.tail_orthogonality().max(initial=0.0)),
            "reconstruction": float(self.reconstruction_errors().max(initial=0.0)),
            "pythagoras": float(self.pythagoras_errors().max(initial=0.0)),
        }
        passed = {
            "span": measured["span"] <= 1e-8,
            "nonzero_residuals": measured["nonzero_residuals"],
            "tail_orthogonality": measured["tail_orthogonality"] <= orthogonality_tol,
            "reconstruction": measured["reconstruction"] <= reconstruction_tol,
            "pythagoras": measured["pythagoras"] <= pythagoras_tol,
        }
        return {"measured": measured, "passed": passed}


def third_claim_chain(T, x, depth, cfg=None):
    """Orthonormalize the orbit (T x, ..., T^depth x) and form x_n and y_n.

    If Gram-Schmidt breaks down at step k the chain stops at k - 1 theta
    vectors and records k: the orbit became numerically dependent, which in
    finite dimension always happens eventually.
    """
    cfg = cfg or GSConfig()
    tol = cfg.thresholds
    x = check_vector(x, T.dim, name="x")
    if not np.any(x):
        raise InvalidInputError("seed vector x is zero")
    if not 1 <= depth <= T.dim:
        raise InvalidInputError(f"depth must lie in 1..{T.dim}, got {depth}")

    orbit, log_scales = _rescaled_orbit(T, x, depth)
    if not np.any(orbit[0]):
        raise InvalidInputError("T x = 0: the seed lies in the kernel of T")
    outcome = orthogonalize(orbit, cfg)
    theta = _orbit_system(outcome, cfg, T.dim)
    m = len(theta)
    Theta = theta.vectors

    a = CoefficientSequence.from_values(Theta.conj() @ x)
    residuals = np.empty((m, T.dim), dtype=np.complex128)
    for n in range(1, m + 1):
        Vn = Theta[:n]
        r = x - a.values[:n] @ Vn
        r = r - (Vn.conj() @ r) @ Vn  # second pass keeps tiny residuals orthogonal
        residuals[n - 1] = r
    ensure_finite(residuals, "chain residuals")

    norms = np.linalg.norm(residuals, axis=1)
    cutoff = tol.breakdown_tol * np.linalg.norm(x)
    alive = norms > cutoff
    n_dir = m if alive.all() else int(np.argmin(alive))
    directions = residuals[:n_dir] / norms[:n_dir, None]
    if n_dir < m:
        logger.debug("directions stop at n=%d: ||x_n|| below %.2e", n_dir + 1, cutoff)

    return OrbitChain(
        x=frozen(x.copy()),
        orbit=frozen(orbit),
        orbit_log_scales=frozen(log_scales),
        theta=theta,
        a=a,
        residuals=frozen(residuals),
        directions=frozen(directions.reshape(n_dir, T.dim)),
        breakdown_index=outcome.breakdown_index,
        span_residuals=outcome.span_residuals,
        config=cfg,
    )


@dataclass(frozen=True)
class CyclicityReport:
    """How close the orbit span comes to the whole (truncated) space.

    ``defect`` is ||x_m|| at the final depth m, i.e. the distance from x to
    span(theta_1..theta_m). ``probe_defects`` are Parseval defects
    ||z||^2 - sum_j |<z, theta_j>|^2 for each probe.
    """

    defect: float
    relative_defect: float
    probe_defects: np.ndarray
    dense_at_truncation: bool
    span_dim: int


def completeness_defect(chain, probes):
    if chain.depth < 1:
        raise InvalidInputError("chain has no theta vectors")
    tol = chain.tol
    Z = check_family(probes, dim=chain.theta.dim, name="probes", allow_empty=True)
    defects = np.array([bessel_parseval_report(z, chain.theta).parseval_defect for z in Z])
    scale = np.maximum(1.0, np.sum(np.abs(Z) ** 2, axis=1))
    defect = float(chain.residual_norms[-1])
    x_in_span = defect <= math.sqrt(tol.eq_slack) * max(1.0, chain.x_norm)
    probes_spanned = bool(np.all(defects <= tol.eq_slack * scale)) if len(Z) else False
    return CyclicityReport(
        defect=defect,
        relative_defect=defect / chain.x_norm,
        probe_defects=frozen(defects),
        dense_at_truncation=x_in_span and probes_spanned,
        span_dim=chain.depth,
    )


@dataclass(frozen=True)
class WeakConvergenceReport:
    """Probe values |<z, y_n>| against their Bessel tail bounds.

    ``values[p, n-1] = |<z_p, y_n>|`` and
    ``bessel_bounds[p, n-1] = sqrt(max(0, ||z_p||^2 - sum_{j<=n} |<z_p, theta_j>|^2))``.
    """

    probes: np.ndarray
    labels: tuple
    values: np.ndarray
    bessel_bounds: np.ndarray
    completeness_defects: np.ndarray
    max_violation: float
    verdict: Verdict
    verdict_reason: str


def default_probes(model_or_dim, x, depth, n_random=8, seed=0):
    """Canonical e_1..e_depth, x/||x||, and ``n_random`` seeded random unit vectors.

    Returns ``(labels, probes)``.
    """
    model = model_or_dim if isinstance(model_or_dim, HilbertModel) else HilbertModel(int(model_or_dim))
    x = check_vector(x, model.dim, name="x")
    labels, probes = [], []
    for j in range(1, min(depth, model.dim) + 1):
        labels.append(f"e{j}")
        probes.append(model.basis_vector(j))
    labels.append("x_unit")
    probes.append(x / np.linalg.norm(x))
    rng = np.random.default_rng(seed)
    for i in range(n_random):
        labels.append(f"random{i}")
        probes.append(model.random_unit(rng))
    return tuple(labels), np.array(probes)


def _stabilized(series):
    if series.shape[0] < 2:
        return False
    tail = series[-STABILITY_WINDOW:]
    top = tail.max()
    return bool(top > ZERO_TREND_FLOOR and tail.max() - tail.min() <= STABILITY_RTOL * top)


def _decide(chain, values, completeness_defects, labels):
    tol = chain.tol
    defect = float(chain.residual_norms[-1])
    x_outside = defect > math.sqrt(tol.eq_slack) * max(1.0, chain.x_norm)
    if x_outside:
        for p, series in enumerate(values):
            if _stabilized(series):
                return Verdict.NONZERO_WEAK_LIMIT, (
                    f"probe {labels[p]} stabilizes at {series[-1]:.3e} while x stays "
                    f"{defect:.3e} away from the orbit span"
                )
    if x_outside:
        return Verdict.INCONCLUSIVE, (
            f"x is still {defect:.3e} away from the orbit span and no probe has stabilized"
        )
    tails = np.sqrt(np.maximum(completeness_defects, 0.0))
    limits = np.maximum(ZERO_TREND_FACTOR * tails, ZERO_TREND_FLOOR)
    final = values[:, -1]
    if np.all(final <= limits):
        return Verdict.WEAK_LIMIT_ZERO_TREND, (
            f"x lies in the orbit span (defect {defect:.3e}) and every final probe value is within "
            f"{ZERO_TREND_FACTOR:g}x its completeness tail (floor {ZERO_TREND_FLOOR:g})"
        )
    worst = int(np.argmax(final - limits))
    return Verdict.INCONCLUSIVE, (
        f"probe {labels[worst]} ends at {final[worst]:.3e} above its limit {limits[worst]:.3e}"
    )


def weak_convergence_probe(chain, probes, labels=None):
    """Evaluate |<z, y_n>| and the Bessel tail bound for every probe and step.

    Raises
    ------
    InvalidInputError
        If the chain has no directions (x lies in the span of the first
        orbit vector) or a probe is zero.
    InconsistencyError
        If |<z, y_n>|^2 + sum_{j<=n} |<z, theta_j>|^2 exceeds
        ||z||^2 (1 + eq_slack) anywhere.
    """
    tol = chain.tol
    n_dir = len(chain.directions)
    if n_dir == 0:
        raise InvalidInputError(
            "chain has no residual directions: x is numerically in the span of the orbit "
            "from the first step (finite-dimensional saturation)"
        )
    Z = check_family(probes, dim=chain.theta.dim, name="probes")
    z_norm_sq = np.sum(np.abs(Z) ** 2, axis=1)
    if np.any(z_norm_sq == 0):
        raise InvalidInputError("probes must be nonzero")
    labels = tuple(labels) if labels is not None else tuple(f"z{p}" for p in range(len(Z)))
    if len(labels) != len(Z):
        raise InvalidInputError(f"{len(labels)} labels for {len(Z)} probes")

    inner_y = Z @ chain.directions.conj().T
    inner_theta = Z @ chain.theta.vectors.conj().T
    energy = np.cumsum(np.abs(inner_theta) ** 2, axis=1)
    values = np.abs(inner_y)
    lhs = values ** 2 + energy[:, :n_dir]
    rhs = z_norm_sq[:, None] * (1 + tol.eq_slack)
    excess = lhs - rhs
    max_violation = float(excess.max())
    if max_violation > 0:
        p, n = np.unravel_index(np.argmax(excess), excess.shape)
        raise InconsistencyError(
            f"Bessel bound violated for probe {labels[p]} at n={n + 1}: "
            f"{lhs[p, n]:.17g} > {rhs[p, n]:.17g}"
        )
    bounds = np.sqrt(np.maximum(0.0, z_norm_sq[:, None] - energy[:, :n_dir]))
    # cumulative sums can wobble by one ulp; enforce the monotone envelope
    bounds = np.minimum.accumulate(bounds, axis=1)
    completeness = z_norm_sq - energy[:, -1]
    verdict, reason = _decide(chain, values, completeness, labels)
    return WeakConvergenceReport(
        probes=frozen(np.array(Z)),
        labels=labels,
        values=frozen(values),
        bessel_bounds=frozen(bounds),
        completeness_defects=frozen(completeness),
        max_violation=max_violation,
        verdict=verdict,
        verdict_reason=reason,
    )


def orbit_closure(T, x, cfg=None):
    """Orthonormal basis of span(T x, T^2 x, ...) run until breakdown or dimension N."""
    cfg = cfg or GSConfig()
    orbit, _ = _rescaled_orbit(T, check_vector(x, T.dim, name="x"), T.dim)
    return _orbit_system(orthogonalize(orbit, cfg), cfg, T.dim)


@dataclass(frozen=True)
class FourthClaimOutcome:
    """Joint result of chain, completeness measurement and weak-convergence probe.

    ``invariant_subspace`` is filled in the nonzero-limit regime: it reports
    the closed orbit span, which is then a proper invariant subspace.
    """

    chain: OrbitChain
    cyclicity: CyclicityReport
    weak: WeakConvergenceReport
    verdict: Verdict
    invariant_subspace: InvariantSubspaceReport | None
    claimed_functional_values: tuple = ()


def claimed_functional_values(n_steps):
    """The values 2(1 - 2^-n) attributed to a functional on y_n.

    Recorded for comparison only. No such bounded functional is constructed:
    since y_n tends weakly to zero whenever the thetas are complete, a bounded
    functional must send y_n to 0, not to 2.
    """
    return tuple(2.0 * (1.0 - 2.0 ** -n) for n in range(1, n_steps + 1))


def fourth_claim_verdict(T, x, depth, probes, cfg=None, labels=None):
    cfg = cfg or GSConfig()
    chain = third_claim_chain(T, x, depth, cfg)
    cyclicity = completeness_defect(chain, probes)
    weak = weak_convergence_probe(chain, probes, labels)
    invariant = None
    if weak.verdict is Verdict.NONZERO_WEAK_LIMIT:
        invariant = subspace_report(T, orbit_closure(T, x, cfg))
    return FourthClaimOutcome(
        chain=chain,
        cyclicity=cyclicity,
        weak=weak,
        verdict=weak.verdict,
        invariant_subspace=invariant,
        claimed_functional_values=claimed_functional_values(len(chain.directions)),
    )
