"""Acceptance suite: one test per criterion, each logging a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the summary lines
appear in the "acceptance criteria" section at the end of the run.
"""
import numpy as np
import pytest

from orbitchain import (
    Dense,
    Diagonal,
    GSConfig,
    OrthonormalSystem,
    UnilateralShift,
    bessel_parseval_report,
    expand,
    finite_dim_invariant_subspace,
    invariance_residual,
    kernel_basis,
    orthogonalize,
    project_coefficients,
    span_preservation_residual,
    third_claim_chain,
)
from orbitchain import chain as chain_mod
from orbitchain import cli
from orbitchain.chain import Verdict
from orbitchain.operators import SubspaceBasis, eigen_residual
from orbitchain.scenarios import bundled_names, bundled_scenario, run_scenario

from conftest import crandn, random_orthonormal

BUNDLED = bundled_names()


@pytest.fixture(scope="module")
def bundled_reports():
    return {name: run_scenario(bundled_scenario(name)) for name in BUNDLED}


def _pipeline(name):
    cfg = bundled_scenario(name)
    T = cfg.build_operator()
    x = cfg.build_seed_vector()
    labels, probes = cfg.build_probes(x)
    chain = third_claim_chain(T, x, cfg.depth, cfg.build_gs())
    return cfg, T, x, probes, chain


def test_criterion_01_orthonormality_and_span(acceptance):
    rng = np.random.default_rng(1)
    worst_gram, worst_span = 0.0, 0.0
    for _ in range(100):
        U = crandn(rng, 64, 128)
        out = orthogonalize(U, GSConfig("modified", True))
        assert out.breakdown_index is None
        E = out.system.vectors
        worst_gram = max(worst_gram, np.abs(E @ E.conj().T - np.eye(64)).max())
        scale = np.linalg.norm(U, axis=1).max()
        span = max(span_preservation_residual(U, out, n) for n in range(1, 65))
        worst_span = max(worst_span, span / scale)
    ok = worst_gram <= 1e-10 and worst_span <= 1e-8
    acceptance(1, ok, f"max Gram defect {worst_gram:.2e}, max span residual / max||u|| {worst_span:.2e}")
    assert ok


def _pairs(n_pairs, seed):
    rng = np.random.default_rng(seed)
    for k in range(n_pairs):
        n = int(rng.integers(2, 65))
        m = int(rng.integers(1, n + 1))
        E = random_orthonormal(rng, n, m)
        scale = 10.0 ** rng.uniform(-4, 4)
        if k % 3 == 0:
            u = scale * (crandn(rng, m) @ E)  # inside the span
        else:
            u = scale * crandn(rng, n)
        yield OrthonormalSystem(E), u


def test_criterion_02_bessel(acceptance):
    violations, worst = 0, -np.inf
    for system, u in _pairs(1000, 2):
        rep = bessel_parseval_report(u, system)
        energy = float(np.sum(np.abs(system.vectors.conj() @ u) ** 2))
        rel = energy / rep.norm_sq - 1
        worst = max(worst, rel)
        violations += energy > rep.norm_sq * (1 + 1e-12)
    ok = violations == 0
    acceptance(2, ok, f"{violations} violations in 1000 pairs, max energy/||u||^2 - 1 = {worst:.2e}")
    assert ok


def test_criterion_03_parseval_equivalence(acceptance):
    worst = 0.0
    for system, u in _pairs(1000, 2):
        rep = bessel_parseval_report(u, system)
        gap = abs(rep.parseval_defect - rep.expansion_residual ** 2) / max(1.0, rep.norm_sq)
        worst = max(worst, gap)
    ok = worst <= 1e-10
    acceptance(3, ok, f"max |defect - residual^2| / max(1,||u||^2) = {worst:.2e}")
    assert ok


def test_criterion_04_coefficient_recovery(acceptance):
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(500):
        n = int(rng.integers(2, 65))
        m = int(rng.integers(1, n + 1))
        system = OrthonormalSystem(random_orthonormal(rng, n, m))
        alpha = crandn(rng, m)
        recovered = project_coefficients(expand(system, alpha), system).values
        worst = max(worst, np.abs(recovered - alpha).max())
    ok = worst <= 1e-10
    acceptance(4, ok, f"max coefficient error {worst:.2e} over 500 trials")
    assert ok


def test_criterion_05_chain_certification(acceptance):
    details, ok = [], True
    for name in BUNDLED:
        *_, chain = _pipeline(name)
        cert = chain.certify(reconstruction_tol=1e-10, orthogonality_tol=1e-9, pythagoras_tol=1e-10)
        ok &= all(cert["passed"].values())
        m = cert["measured"]
        details.append(f"{name}: recon {m['reconstruction']:.1e} tail {m['tail_orthogonality']:.1e} "
                       f"pyth {m['pythagoras']:.1e} span {m['span']:.1e}")
    acceptance(5, ok, "; ".join(details))
    assert ok


def test_criterion_06_master_inequality(acceptance, tmp_path, monkeypatch):
    violations, worst, checked = 0, -np.inf, 0
    for name in BUNDLED:
        _, _, _, probes, chain = _pipeline(name)
        Y, Theta = chain.directions, chain.theta.vectors
        n_dir = len(Y)
        lhs = np.abs(probes @ Y.conj().T) ** 2 + np.cumsum(np.abs(probes @ Theta.conj().T) ** 2, axis=1)[:, :n_dir]
        rhs = np.sum(np.abs(probes) ** 2, axis=1)[:, None] * (1 + 1e-10)
        violations += int(np.sum(lhs > rhs))
        worst = max(worst, float((lhs / rhs).max()))
        checked += lhs.size

    real = chain_mod.third_claim_chain

    def tampered(*args, **kwargs):
        c = real(*args, **kwargs)
        bent = c.directions + c.theta.vectors[0]
        bent /= np.linalg.norm(bent, axis=1, keepdims=True)
        return type(c)(**{**c.__dict__, "directions": bent})

    monkeypatch.setattr(chain_mod, "third_claim_chain", tampered)
    code = cli.main(["run", "shift_e1", "--out", str(tmp_path)])
    ok = violations == 0 and code == 3
    acceptance(6, ok, f"{violations} violations over {checked} (probe, step) pairs, max lhs/rhs {worst:.6f}; "
                      f"tampered chain exit code {code}")
    assert ok


def test_criterion_07_refutation_regime(acceptance, bundled_reports):
    rep = bundled_reports["diag_cyclic"]
    _, _, x, _, chain = _pipeline("diag_cyclic")
    self_probe = np.abs(chain.directions.conj() @ x)
    strictly_down = bool(np.all(np.diff(self_probe) < 0))
    T = Diagonal(np.linspace(1.0, 2.0, 64))
    full = third_claim_chain(T, np.ones(64), 64)
    x_N = float(full.residual_norms[-1])
    bd = full.breakdown_index if full.breakdown_index is not None else 65
    ok = rep.verdict == Verdict.WEAK_LIMIT_ZERO_TREND and strictly_down and x_N <= 1e-6 and bd <= 65
    acceptance(7, ok, f"verdict {rep.verdict}, self-probe strictly decreasing: {strictly_down} "
                      f"({len(self_probe)} steps), depth 64: ||x_N|| = {x_N:.1e}, breakdown at {bd}")
    assert ok


def test_criterion_08_invariant_subspace_regime(acceptance, bundled_reports):
    rep = bundled_reports["shift_e1"]
    _, T, _, _, chain = _pipeline("shift_e1")
    e = np.eye(64)
    theta_err = np.abs(chain.theta.vectors - e[1:17]).max()
    y_err = np.abs(chain.directions - e[0]).max()
    literal = invariance_residual(T, SubspaceBasis(chain.theta))
    closure = rep.body["invariant_subspace"]
    ok = (theta_err <= 1e-12 and y_err <= 1e-12 and rep.verdict == Verdict.NONZERO_WEAK_LIMIT
          and literal <= 1e-10)
    acceptance(8, ok, f"theta err {theta_err:.1e}, y_n err {y_err:.1e}, verdict {rep.verdict}, "
                      f"invariance residual of span(theta_1..theta_16) = {literal:.3g} "
                      f"(T theta_16 = e_18 leaves the span); orbit closure dim {closure['dim']} "
                      f"residual {closure['invariance_residual']:.1e}")
    assert theta_err <= 1e-12 and y_err <= 1e-12
    assert rep.verdict == Verdict.NONZERO_WEAK_LIMIT
    assert closure["invariance_residual"] <= 1e-10 and closure["nontrivial"]
    assert literal <= 1e-10


def test_criterion_09_kernel_diagnostics(acceptance):
    rng = np.random.default_rng(9)
    worst_apply, worst_inv, dims_ok = 0.0, 0.0, True
    for nullity in range(1, 5):
        for _ in range(5):
            r = 32 - nullity
            A = crandn(rng, 32, r) @ crandn(rng, r, 32)
            T = Dense(A)
            K = kernel_basis(T)
            dims_ok &= K.dim == nullity
            T_norm = np.linalg.norm(A, 2)
            for q in K.system:
                worst_apply = max(worst_apply, np.linalg.norm(A @ q) / T_norm)
            worst_inv = max(worst_inv, invariance_residual(T, K))
    ok = dims_ok and worst_apply <= 1e-8 and worst_inv <= 1e-10
    acceptance(9, ok, f"kernel dims exact: {dims_ok}, max ||Tq||/||T|| {worst_apply:.1e}, "
                      f"max invariance residual {worst_inv:.1e}")
    assert ok


def test_criterion_10_eigenvector_residual(acceptance):
    rng = np.random.default_rng(10)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 33))
        A = crandn(rng, n, n)
        T = Dense(A)
        rep = finite_dim_invariant_subspace(T)
        q = rep.basis.system.vectors[0]
        worst = max(worst, eigen_residual(T, q) / max(1.0, np.linalg.norm(A, 2)))
    ok = worst <= 1e-8
    acceptance(10, ok, f"max ||Tq - <Tq,q>q|| / max(1,||T||) = {worst:.1e} over 100 operators")
    assert ok


def test_criterion_11_determinism(acceptance, bundled_reports, tmp_path):
    same = {}
    for name in BUNDLED:
        again = run_scenario(bundled_scenario(name))
        same[name] = again.body_json() == bundled_reports[name].body_json()
    for run in ("a", "b"):
        assert cli.main(["run", "diag_cyclic", "--seed", "5", "--out", str(tmp_path / run)]) == 0
    files_equal = (tmp_path / "a" / "diag_cyclic.json").read_bytes() == (tmp_path / "b" / "diag_cyclic.json").read_bytes()
    ok = all(same.values()) and files_equal
    acceptance(11, ok, f"identical bodies: {same}; CLI files byte-identical: {files_equal}")
    assert ok
