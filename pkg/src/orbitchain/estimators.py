"""scikit-learn compatible wrappers.

Rows of ``X`` are vectors of the truncated space. Complex input is accepted,
which rules out sklearn's own ``check_array``; see ``_validation``.
"""
import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_family, check_vector
from .chain import default_probes, fourth_claim_verdict
from .errors import InvalidInputError
from .gram_schmidt import GSConfig, orthogonalize
from .hilbert import ToleranceConfig


def _tolerances(est):
    return ToleranceConfig(
        ortho_tol=est.ortho_tol,
        breakdown_tol=est.breakdown_tol,
        eq_slack=est.eq_slack,
        reorthog_threshold=est.reorthog_threshold,
    )


class GramSchmidt(TransformerMixin, BaseEstimator):
    """Orthonormalize the rows of ``X``; transform to expansion coefficients.

    Parameters
    ----------
    variant : {"modified", "classical"}
    reorthogonalize : bool
    ortho_tol, breakdown_tol, eq_slack, reorthog_threshold : float
        See :class:`orbitchain.ToleranceConfig`.

    Attributes
    ----------
    components_ : ndarray, shape (n_components, n_features)
        The orthonormal vectors e_j.
    raw_components_ : ndarray
        The unnormalized w_j.
    breakdown_index_ : int or None
    n_components_ : int
    system_ : OrthonormalSystem

    Examples
    --------
    >>> gs = GramSchmidt().fit([[1, 0], [1, 1]])
    >>> gs.components_.real
    array([[1., 0.],
           [0., 1.]])
    """

    def __init__(self, variant="modified", reorthogonalize=True, ortho_tol=1e-10,
                 breakdown_tol=1e-10, eq_slack=1e-10, reorthog_threshold=2 ** -0.5):
        self.variant = variant
        self.reorthogonalize = reorthogonalize
        self.ortho_tol = ortho_tol
        self.breakdown_tol = breakdown_tol
        self.eq_slack = eq_slack
        self.reorthog_threshold = reorthog_threshold

    def fit(self, X, y=None):
        X = check_family(X, name="X")
        cfg = GSConfig(self.variant, self.reorthogonalize, _tolerances(self))
        outcome = orthogonalize(X, cfg)
        self.outcome_ = outcome
        self.system_ = outcome.system
        self.components_ = np.array(outcome.system.vectors)
        self.raw_components_ = np.array(outcome.raw_orthogonal)
        self.breakdown_index_ = outcome.breakdown_index
        self.n_components_ = len(outcome.system)
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Coefficients <x, e_j> of each row."""
        check_is_fitted(self, "components_")
        self.system_.require_certified()
        X = check_family(X, dim=self.n_features_in_, name="X")
        return X @ self.components_.conj().T

    def inverse_transform(self, C):
        """Expansions sum_j c_j e_j of each coefficient row."""
        check_is_fitted(self, "components_")
        C = np.atleast_2d(np.asarray(C, dtype=np.complex128))
        if C.shape[1] != self.n_components_:
            raise InvalidInputError(f"expected {self.n_components_} coefficients per row, got {C.shape[1]}")
        return C @ self.components_

    def residual(self, X):
        """Distance of each row from the fitted span."""
        X = check_family(X, dim=self.n_features_in_, name="X")
        return np.linalg.norm(X - self.inverse_transform(self.transform(X)), axis=1)


class OrbitChainAnalyzer(BaseEstimator):
    """Build the orbit chain of ``operator`` from a seed and probe it.

    ``fit(x)`` runs chain construction, completeness measurement and the
    weak-convergence probe. ``transform(Z)`` returns |<z, y_n>| for new probes.

    Parameters
    ----------
    operator : Operator
    depth : int
    variant, reorthogonalize, *_tol : see :class:`GramSchmidt`
    n_random_probes : int
    random_state : int
    """

    def __init__(self, operator=None, depth=16, variant="modified", reorthogonalize=True,
                 ortho_tol=1e-10, breakdown_tol=1e-10, eq_slack=1e-10,
                 reorthog_threshold=2 ** -0.5, n_random_probes=8, random_state=0):
        self.operator = operator
        self.depth = depth
        self.variant = variant
        self.reorthogonalize = reorthogonalize
        self.ortho_tol = ortho_tol
        self.breakdown_tol = breakdown_tol
        self.eq_slack = eq_slack
        self.reorthog_threshold = reorthog_threshold
        self.n_random_probes = n_random_probes
        self.random_state = random_state

    def fit(self, x, y=None, probes=None):
        if self.operator is None:
            raise InvalidInputError("operator is required")
        x = check_vector(np.ravel(x), self.operator.dim, name="x")
        if probes is None:
            labels, probes = default_probes(self.operator.dim, x, self.depth,
                                            self.n_random_probes, self.random_state)
        else:
            probes = check_family(probes, dim=self.operator.dim, name="probes")
            labels = None
        cfg = GSConfig(self.variant, self.reorthogonalize, _tolerances(self))
        outcome = fourth_claim_verdict(self.operator, x, self.depth, probes, cfg, labels)
        self.outcome_ = outcome
        self.chain_ = outcome.chain
        self.theta_ = np.array(outcome.chain.theta.vectors)
        self.directions_ = np.array(outcome.chain.directions)
        self.cyclicity_ = outcome.cyclicity
        self.weak_report_ = outcome.weak
        self.verdict_ = outcome.verdict
        self.invariant_subspace_ = outcome.invariant_subspace
        return self

    def transform(self, Z):
        """|<z, y_n>| for each probe row z and each step n."""
        check_is_fitted(self, "directions_")
        Z = check_family(Z, dim=self.operator.dim, name="Z")
        return np.abs(Z @ self.directions_.conj().T)
