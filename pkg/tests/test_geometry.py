import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from matgeom.algebra import (
    DimensionMismatchError,
    NotHermitianError,
    NotPositiveError,
    hs_norm,
    mean_part,
    random_hermitian,
    random_pd,
)
from matgeom.geometry import (
    assemble_superoperator,
    delta1,
    delta2,
    dirichlet_form,
    dirichlet_power_form,
    laplacian_apply,
    make_context,
    unvec,
    vec,
)
from matgeom.properties import check_properties

from conftest import I2, SX, SY, SZ, brute_force_superoperator, loop_commutator

ns = st.integers(min_value=2, max_value=8)
seeds = st.integers(min_value=0, max_value=2**31 - 1)


def test_clock_shift_n2_generators(ctx2):
    np.testing.assert_allclose(ctx2.x, np.diag([0, 1]), atol=1e-15)
    np.testing.assert_allclose(ctx2.y, [[0.5, -0.5], [-0.5, 0.5]], atol=1e-15)


@pytest.mark.parametrize("n", range(2, 9))
def test_clock_shift_unitaries(n):
    ctx = make_context(n)
    omega = np.exp(2j * np.pi / n)
    np.testing.assert_allclose(ctx.U, np.diag(omega ** np.arange(n)), atol=1e-12)
    for w in (ctx.U, ctx.V):
        assert np.linalg.norm(w.conj().T @ w - np.eye(n)) <= 1e-10
    # V is a cyclic permutation
    perm = np.round(np.abs(ctx.V), 12)
    assert np.all(perm.sum(axis=0) == 1) and np.all(perm.sum(axis=1) == 1)
    np.testing.assert_allclose(np.linalg.matrix_power(ctx.V, n), np.eye(n), atol=1e-10)
    assert np.linalg.norm(ctx.U @ ctx.V - ctx.V @ ctx.U) > 0.1
    assert ctx.has_trivial_commutant()


def test_make_context_errors():
    with pytest.raises(ValueError):
        make_context(1)
    with pytest.raises(NotHermitianError):
        make_context(2, "custom", np.array([[0, 1], [0, 0]]), I2)
    with pytest.raises(DimensionMismatchError):
        make_context(3, "custom", I2, I2)
    with pytest.raises(ValueError):
        make_context(3, "custom", np.eye(3))
    with pytest.raises(ValueError):
        make_context(3, "bogus")


def test_degenerate_custom_context_has_large_kernel():
    x = random_hermitian(0, 3)
    ctx = make_context(3, "custom", x, x)
    assert ctx.kernel_dimension() > 1
    assert not ctx.has_trivial_commutant()


def test_derivation_examples(ctx2):
    np.testing.assert_array_equal(delta1(ctx2, I2), np.zeros((2, 2)))
    np.testing.assert_allclose(delta1(ctx2, ctx2.y), np.zeros((2, 2)), atol=1e-15)
    np.testing.assert_allclose(delta2(ctx2, SX), [[0, 1], [-1, 0]], atol=1e-15)
    with pytest.raises(DimensionMismatchError):
        delta1(ctx2, np.eye(3))


@settings(max_examples=30, deadline=None)
@given(ns, seeds)
def test_derivations_match_loop_oracle(n, seed):
    ctx = make_context(n)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    np.testing.assert_allclose(delta1(ctx, a), loop_commutator(ctx.y, a), atol=1e-12 * n * n)
    np.testing.assert_allclose(delta2(ctx, a), -loop_commutator(ctx.x, a), atol=1e-12 * n * n)
    h = random_hermitian(seed, n)
    for d in (delta1, delta2):
        dh = d(ctx, h)
        assert hs_norm(dh + dh.conj().T) <= 1e-12 * hs_norm(h) * n


def test_laplacian_examples(ctx2):
    np.testing.assert_array_equal(laplacian_apply(ctx2, 3.5 * I2), np.zeros((2, 2)))
    np.testing.assert_allclose(laplacian_apply(ctx2, SZ), SZ, atol=1e-14)
    np.testing.assert_allclose(laplacian_apply(ctx2, SY), 2 * SY, atol=1e-14)
    np.testing.assert_allclose(laplacian_apply(ctx2, SX), SX, atol=1e-14)


def test_laplacian_n2_pauli_hand_oracle():
    # x = (I - sz)/2, y = (I - sx)/2, so Delta = ([sx,[sx,.]] + [sz,[sz,.]]) / 4
    ctx = make_context(2)
    for p in (SX, SY, SZ):
        expected = (loop_commutator(SX, loop_commutator(SX, p)) + loop_commutator(SZ, loop_commutator(SZ, p))) / 4
        np.testing.assert_allclose(laplacian_apply(ctx, p), expected, atol=1e-14)


@settings(max_examples=40, deadline=None)
@given(ns, seeds)
def test_laplacian_structure(n, seed):
    ctx = make_context(n)
    a = random_hermitian(seed, n)
    la = laplacian_apply(ctx, a)
    assert hs_norm(la - la.conj().T) <= 1e-12 * hs_norm(a) * n * n
    assert abs(np.trace(la)) <= 1e-12 * hs_norm(a) * n * n
    # sign normalization: <a, Delta a> = sum ||delta_mu a||^2
    form = np.vdot(a, la).real
    assert form == pytest.approx(dirichlet_form(ctx, a), rel=1e-10)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_superoperator_matches_brute_force(n):
    ctx = make_context(n)
    sup = assemble_superoperator(ctx)
    np.testing.assert_allclose(sup.entries, brute_force_superoperator(ctx), atol=1e-12)


def test_superoperator_n2_spectrum(ctx2):
    sup = assemble_superoperator(ctx2)
    assert sup.dim == 4
    np.testing.assert_allclose(np.linalg.eigvalsh(sup.entries), [0, 1, 1, 2], atol=1e-14)
    np.testing.assert_allclose(sup.entries @ vec(I2), np.zeros(4), atol=1e-15)


@pytest.mark.parametrize("n", range(2, 9))
def test_superoperator_invariants(n):
    ctx = make_context(n)
    sup = ctx.superoperator()
    norm = sup.norm()
    assert np.linalg.norm(sup.entries - sup.entries.conj().T) <= 1e-10
    lam = np.linalg.eigvalsh(sup.entries)
    assert lam[0] >= -1e-10 * norm
    assert np.linalg.norm(sup.entries @ vec(np.eye(n))) <= 1e-10 * norm
    rng = np.random.default_rng(n)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    assert hs_norm(sup.apply(a) - laplacian_apply(ctx, a)) <= 1e-12 * hs_norm(a) * norm
    twice = unvec(sup.entries @ (sup.entries @ vec(a)), n)
    np.testing.assert_allclose(twice, laplacian_apply(ctx, laplacian_apply(ctx, a)), atol=1e-11 * norm**2)


def test_vec_is_column_stacking():
    a = np.arange(4).reshape(2, 2)
    np.testing.assert_array_equal(vec(a), [0, 2, 1, 3])
    np.testing.assert_array_equal(unvec(vec(a), 2), a)


def test_dirichlet_power_form_examples(ctx2, ctx4):
    for m in range(6):
        assert dirichlet_power_form(ctx2, 1.7 * I2, m) == 0
    assert dirichlet_power_form(ctx2, 2 * I2 + SZ, 1) == pytest.approx(2, abs=1e-13)
    for seed in range(10):
        a = random_pd(seed, 4, 0.1, 1.0)
        assert dirichlet_power_form(ctx4, a, 1) == pytest.approx(dirichlet_form(ctx4, a), rel=1e-12)


def test_dirichlet_power_form_zero_iff_scalar(ctx4):
    a = random_pd(3, 4, 0.1, 1.0)
    for m in range(1, 6):
        assert dirichlet_power_form(ctx4, a, m) > 1e-6
    # m = 0 reduces to tau(Delta a), which vanishes for every a
    assert abs(dirichlet_power_form(ctx4, a, 0)) <= 1e-12


def test_dirichlet_power_form_errors(ctx2):
    with pytest.raises(NotPositiveError):
        dirichlet_power_form(ctx2, SZ, 1)
    with pytest.raises(ValueError):
        dirichlet_power_form(ctx2, I2, -1)


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_check_properties_clock_shift_passes(n):
    report = check_properties(make_context(n), seed=1, samples=20)
    assert report.passed, report.to_json()
    assert report["g"].worst_violation <= 1e-12
    assert report.lambda1 is not None and report.lambda1 > 0
    for rec in report.records:
        assert np.isfinite(rec.worst_violation) and rec.worst_violation >= 0


def test_check_properties_degenerate_fails_a_and_f():
    x = np.diag([0.0, 1.0, 2.0])
    report = check_properties(make_context(3, "custom", x, x), seed=0, samples=10)
    assert not report["a"].passed and not report["f"].passed
    assert report["g"].passed and report["b"].passed
    assert not report.passed


def test_property_report_json_shape():
    report = check_properties(make_context(2), seed=0, samples=3)
    d = report.to_dict()
    assert {"property", "samples", "worst_violation", "tolerance", "pass"} == set(d["properties"][0])
    with pytest.raises(ValueError):
        check_properties(make_context(2), seed=0, samples=0)
