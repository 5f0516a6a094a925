"""Orbit chains, Gram-Schmidt and weak-convergence diagnostics on a truncated l2."""
__version__ = "0.1.0"

from .errors import InconsistencyError, InvalidInputError, NumericalFailure, OrbitChainError
from .hilbert import (
    BesselReport,
    CoefficientSequence,
    HilbertModel,
    OrthonormalSystem,
    ToleranceConfig,
    bessel_parseval_report,
    expand,
    inner_product,
    norm,
    project_coefficients,
    projection_residual,
)
from .gram_schmidt import GSConfig, OrthogonalizationOutcome, Variant, orthogonalize, span_preservation_residual
from .operators import (
    Composition,
    Dense,
    Diagonal,
    InvariantSubspaceReport,
    ScaledSum,
    SubspaceBasis,
    UnilateralShift,
    WeightedShift,
    apply,
    finite_dim_invariant_subspace,
    invariance_residual,
    kernel_basis,
    operator_from_dict,
    operator_norm_estimate,
)
from .chain import (
    CyclicityReport,
    FourthClaimOutcome,
    OrbitChain,
    Verdict,
    WeakConvergenceReport,
    build_orbit,
    completeness_defect,
    default_probes,
    fourth_claim_verdict,
    third_claim_chain,
    weak_convergence_probe,
)
from .estimators import GramSchmidt, OrbitChainAnalyzer

__all__ = [name for name in dir() if not name.startswith("_")]
