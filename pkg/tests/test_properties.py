"""Property-based checks of the structural invariants."""
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from orbitchain import (
    Dense,
    Diagonal,
    GSConfig,
    InconsistencyError,
    OrthonormalSystem,
    UnilateralShift,
    WeightedShift,
    bessel_parseval_report,
    completeness_defect,
    default_probes,
    finite_dim_invariant_subspace,
    inner_product,
    invariance_residual,
    kernel_basis,
    norm,
    operator_norm_estimate,
    orthogonalize,
    projection_residual,
    third_claim_chain,
    weak_convergence_probe,
)
from orbitchain.chain import Verdict
from orbitchain.operators import eigen_residual

from conftest import crandn, random_orthonormal

settings.register_profile("orbitchain", max_examples=60, deadline=None)
settings.load_profile("orbitchain")

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)
cscalar = st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False)
seeds = st.integers(0, 2**32 - 1)


def cvec(n):
    return arrays(np.complex128, n, elements=cscalar)


pairs = st.integers(2, 12).flatmap(lambda n: st.tuples(cvec(n), cvec(n), cvec(n)))


@given(pairs)
def test_cauchy_schwarz(uvw):
    u, v, _ = uvw
    assert abs(inner_product(u, v)) <= norm(u) * norm(v) * (1 + 1e-12) + 1e-300


@given(pairs)
def test_conjugate_symmetry(uvw):
    u, v, _ = uvw
    assert inner_product(u, v) == pytest.approx(np.conj(inner_product(v, u)), rel=1e-12, abs=1e-9)


@given(pairs, cscalar, cscalar)
def test_linearity_in_first_argument(uvw, a, b):
    u, v, w = uvw
    lhs = inner_product(a * u + b * v, w)
    rhs = a * inner_product(u, w) + b * inner_product(v, w)
    scale = (abs(a) * norm(u) + abs(b) * norm(v)) * norm(w)
    assert abs(lhs - rhs) <= 1e-12 * scale + 1e-300


@given(pairs)
def test_pythagoras(uvw):
    u, v, _ = uvw
    # squared norms must stay clear of underflow
    assume(norm(u) > 1e-100 and norm(v) > 1e-100)
    v_perp = v - inner_product(v, u) / norm(u) ** 2 * u
    assume(norm(v_perp) > 1e-6 * norm(v))
    assert abs(inner_product(u, v_perp)) <= 1e-9 * norm(u) * norm(v_perp)
    lhs = norm(u + v_perp) ** 2
    assert lhs == pytest.approx(norm(u) ** 2 + norm(v_perp) ** 2, rel=1e-9)


@st.composite
def system_and_vector(draw, in_span=None):
    seed = draw(seeds)
    n = draw(st.integers(2, 24))
    m = draw(st.integers(1, n))
    rng = np.random.default_rng(seed)
    E = random_orthonormal(rng, n, m)
    if in_span is True:
        u = crandn(rng, m) @ E
    elif in_span is False:
        # keep the out-of-span part well away from the tolerance boundary
        assume(m < n)
        u = crandn(rng, n)
        u_perp = u - (E.conj() @ u) @ E
        assume(np.linalg.norm(u_perp) > 1e-3 * np.linalg.norm(u))
    else:
        u = crandn(rng, n) * draw(st.floats(1e-3, 1e3))
    return OrthonormalSystem(E), u


@given(system_and_vector())
def test_bessel_partial_energies_monotone_and_bounded(case):
    system, u = case
    rep = bessel_parseval_report(u, system)
    assert np.all(np.diff(rep.partial_energies) >= 0)
    assert rep.partial_energies[-1] <= rep.norm_sq * (1 + 1e-12)
    assert abs(rep.parseval_defect - rep.expansion_residual ** 2) <= 1e-10 * max(1.0, rep.norm_sq)


@given(system_and_vector(in_span=True))
def test_parseval_for_vectors_in_span(case):
    system, u = case
    rep = bessel_parseval_report(u, system)
    assert abs(rep.parseval_defect) <= 1e-10 * max(1.0, rep.norm_sq)
    assert projection_residual(u, system) <= 1e-10 * max(1.0, norm(u))


@given(system_and_vector(in_span=False))
def test_parseval_fails_off_span(case):
    system, u = case
    rep = bessel_parseval_report(u, system)
    assert rep.parseval_defect > 1e-10 * max(1.0, rep.norm_sq)


@st.composite
def families(draw):
    rng = np.random.default_rng(draw(seeds))
    n = draw(st.integers(2, 20))
    m = draw(st.integers(1, n))
    return crandn(rng, m, n)


@given(families(), st.sampled_from(["classical", "modified"]))
def test_gram_schmidt_output_orthonormal_and_span_preserving(U, variant):
    out = orthogonalize(U, GSConfig(variant))
    E = out.system.vectors
    k = len(E)
    assert np.abs(E @ E.conj().T - np.eye(k)).max() <= 1e-10
    scale = np.linalg.norm(U, axis=1).max()
    for n in range(1, k + 1):
        P = E[:n]
        for u in U[:n]:
            assert np.linalg.norm(u - (P.conj() @ u) @ P) <= 1e-8 * scale


@st.composite
def operators(draw):
    rng = np.random.default_rng(draw(seeds))
    n = draw(st.integers(3, 16))
    kind = draw(st.sampled_from(["dense", "diagonal", "shift", "weighted"]))
    if kind == "dense":
        return Dense(crandn(rng, n, n) / np.sqrt(2 * n)), rng
    if kind == "diagonal":
        return Diagonal(rng.uniform(0.5, 2.0, n) * np.exp(2j * np.pi * rng.uniform(size=n))), rng
    if kind == "shift":
        return UnilateralShift(n), rng
    return WeightedShift(rng.uniform(0.2, 1.5, n - 1)), rng


@given(operators(), cscalar, cscalar)
def test_apply_is_linear(op, a, b):
    T, rng = op
    u, v = crandn(rng, 2, T.dim)
    lhs = T.apply(a * u + b * v)
    rhs = a * T.apply(u) + b * T.apply(v)
    scale = max(1.0, abs(a) + abs(b)) * (np.linalg.norm(u) + np.linalg.norm(v)) * max(1.0, np.linalg.norm(T.to_dense(), 2))
    assert np.linalg.norm(lhs - rhs) <= 1e-12 * scale


@given(operators())
def test_adjoint_identity(op):
    T, rng = op
    u, v = crandn(rng, 2, T.dim)
    lhs = inner_product(T.apply(u), v)
    rhs = inner_product(u, T.adjoint_apply(v))
    assert abs(lhs - rhs) <= 1e-12 * np.linalg.norm(u) * np.linalg.norm(v) * max(1.0, np.linalg.norm(T.to_dense(), 2))


@given(operators())
def test_norm_estimate_is_a_lower_bound(op):
    T, _ = op
    true = np.linalg.norm(T.to_dense(), 2)
    est = operator_norm_estimate(T)
    assert est <= true * (1 + 1e-12)
    assert est >= 0.5 * true


@given(st.integers(0, 2**32 - 1), st.integers(3, 16), st.integers(1, 3))
def test_kernel_is_invariant_and_annihilated(seed, n, nullity):
    rng = np.random.default_rng(seed)
    nullity = min(nullity, n - 1)
    A = crandn(rng, n, n - nullity) @ crandn(rng, n - nullity, n)
    T = Dense(A)
    K = kernel_basis(T)
    assert K.dim == nullity
    T_norm = np.linalg.norm(A, 2)
    for q in K.system:
        assert np.linalg.norm(A @ q) <= 1e-8 * T_norm
    assert invariance_residual(T, K) <= 1e-8


@given(operators())
def test_eigenvector_spans_invariant_line(op):
    T, _ = op
    rep = finite_dim_invariant_subspace(T)
    assert rep.nontrivial and rep.basis.dim == 1
    q = rep.basis.system.vectors[0]
    assert eigen_residual(T, q) <= 1e-8 * max(1.0, np.linalg.norm(T.to_dense(), 2))


@st.composite
def chains(draw):
    T, rng = draw(operators())
    x = crandn(rng, T.dim)
    assume(np.linalg.norm(T.apply(x)) > 1e-6 * np.linalg.norm(x))
    depth = draw(st.integers(1, T.dim))
    return T, x, depth, rng


@given(chains())
def test_chain_invariants(case):
    T, x, depth, _ = case
    c = third_claim_chain(T, x, depth)
    m = c.depth
    assert 1 <= m <= depth
    Theta = c.theta.vectors
    assert np.abs(Theta @ Theta.conj().T - np.eye(m)).max() <= 1e-10
    # x = sum_{j<=n} a_j theta_j + x_n and the pieces are orthogonal
    for n in range(1, m + 1):
        recon = c.a.values[:n] @ Theta[:n] + c.residuals[n - 1]
        assert np.linalg.norm(recon - x) <= 1e-10 * np.linalg.norm(x)
        assert np.abs(Theta[:n].conj() @ c.residuals[n - 1]).max() <= 1e-9 * np.linalg.norm(x)
    # ||x_n|| is non-increasing
    assert np.all(np.diff(c.residual_norms) <= 1e-12 * np.linalg.norm(x))
    for y in c.directions:
        assert abs(np.linalg.norm(y) - 1) <= 1e-12


@given(chains())
def test_master_inequality_and_self_probe(case):
    T, x, depth, rng = case
    c = third_claim_chain(T, x, depth)
    assume(len(c.directions) > 0)
    labels, probes = default_probes(T.dim, x, depth, n_random=3, seed=int(rng.integers(1 << 30)))
    rep = weak_convergence_probe(c, probes, labels)
    assert rep.max_violation <= 0
    assert np.all(rep.values <= rep.bessel_bounds * (1 + 1e-9) + 1e-12)
    # probing with x itself gives |<x, y_n>| = ||x_n||
    k = labels.index("x_unit")
    n_dir = len(c.directions)
    np.testing.assert_allclose(rep.values[k] * np.linalg.norm(x), c.residual_norms[:n_dir],
                               rtol=1e-9, atol=1e-12 * np.linalg.norm(x))


@given(chains())
def test_verdict_regime_dichotomy(case):
    T, x, depth, rng = case
    c = third_claim_chain(T, x, depth)
    assume(len(c.directions) > 0)
    labels, probes = default_probes(T.dim, x, depth, n_random=2, seed=0)
    rep = weak_convergence_probe(c, probes, labels)
    cyc = completeness_defect(c, probes)
    x_outside = cyc.defect > math.sqrt(c.tol.eq_slack) * max(1.0, np.linalg.norm(x))
    if rep.verdict is Verdict.WEAK_LIMIT_ZERO_TREND:
        assert not x_outside
    if rep.verdict is Verdict.NONZERO_WEAK_LIMIT:
        assert x_outside


@given(chains())
def test_tampered_direction_is_caught(case):
    T, x, depth, _ = case
    c = third_claim_chain(T, x, depth)
    assume(len(c.directions) > 0)
    bent = c.directions + c.theta.vectors[0]
    bent /= np.linalg.norm(bent, axis=1, keepdims=True)
    tampered = type(c)(**{**c.__dict__, "directions": bent})
    z = c.theta.vectors[0] + c.directions[0]
    with pytest.raises(InconsistencyError):
        weak_convergence_probe(tampered, z[None, :])
