import numpy as np
import pytest

from cogsec import conic
from cogsec.conic import (Affine, CAffine, ConicProgram, add_lambda_min_floor, add_quadratic_over_linear,
                          add_sum_squares_le, build_lmi_C_l_tilde, build_lmi_C_lg, real_inner, solve)
from cogsec.model import crandn, sample_ball

BACKENDS = ["clarabel", "scs"]


def _zero(shape):
    return Affine.const(np.zeros(shape))


@pytest.mark.parametrize("backend", BACKENDS)
def test_lp(backend):
    p = ConicProgram()
    x = p.variable(2)
    p.add_le(x[0] + x[1], 3.0)
    p.add_nonneg(x)
    p.add_le(x[0], 2.0)
    p.maximize(x[0] * 2.0 + x[1])
    r = solve(p, backend)
    assert r.ok and r.objective == pytest.approx(5.0, abs=1e-5)


@pytest.mark.parametrize("backend", BACKENDS)
def test_soc_norm(backend):
    p = ConicProgram()
    t = p.variable(())
    x = p.variable(2)
    p.add_eq(x - np.array([3.0, 4.0]))
    p.add_soc(t, x)
    p.minimize(t)
    r = solve(p, backend)
    assert r.ok and r.objective == pytest.approx(5.0, abs=1e-5)


def test_rsoc_and_quadratic_over_linear():
    # max x s.t. x^2 / y <= 2, y <= 8  ->  x = 4
    p = ConicProgram()
    x = p.variable(())
    y = p.variable(())
    add_quadratic_over_linear(p, x.reshape(1), y, 2.0)
    p.add_le(y, 8.0)
    p.maximize(x)
    r = solve(p)
    assert r.ok and r.objective == pytest.approx(4.0, abs=1e-6)


def test_sum_squares_le():
    p = ConicProgram()
    x = p.variable(3)
    add_sum_squares_le(p, x, 9.0)
    p.maximize(x.sum())
    r = solve(p)
    assert r.objective == pytest.approx(3 * np.sqrt(3.0), abs=1e-6)


@pytest.mark.parametrize("backend", BACKENDS)
def test_hermitian_lambda_max(backend):
    rng = np.random.default_rng(0)
    A = crandn(rng, 4, 4)
    A = A @ A.conj().T
    p = ConicProgram()
    t = p.variable(())
    p.add_hermitian_psd(CAffine(t * np.eye(4), _zero((4, 4))) - A)
    p.minimize(t)
    r = solve(p, backend)
    assert r.ok
    assert r.objective == pytest.approx(np.linalg.eigvalsh(A)[-1], rel=1e-5)


def test_hermitian_variable_and_lambda_min_floor():
    # max lambda subject to U >= lambda I and tr U <= 6 -> lambda = 2 with U = 2 I (3x3)
    p = ConicProgram()
    U = p.hermitian_variable(3)
    lam = p.variable(())
    add_lambda_min_floor(p, U, lam)
    p.add_le(real_inner(np.eye(3), U), 6.0)
    p.maximize(lam)
    r = solve(p)
    assert r.objective == pytest.approx(2.0, abs=1e-6)
    Uv = U.value(r.x)
    assert np.allclose(Uv, Uv.conj().T)
    assert np.allclose(Uv, 2 * np.eye(3), atol=1e-5)


def test_complex_affine_algebra():
    p = ConicProgram()
    z = p.complex_variable(3)
    x = np.zeros(p.n)
    x[::2] = [1, 2, 3]
    x[1::2] = [-1, 0, 1]
    val = np.array([1 - 1j, 2, 3 + 1j])
    assert np.allclose(z.value(x), val)
    c = np.array([1j, 2, -1])
    assert np.allclose((c @ z).value(x), c @ val)
    assert np.allclose(z.conj().value(x), val.conj())
    assert real_inner(c, z).value(x) == pytest.approx(np.real(np.vdot(c, val)))


def test_reshape_zero_width():
    a = Affine.const(np.ones((2, 3)))
    assert a.reshape(-1).shape == (6,)


def _sdp_min_mu_lg(w, f_hat, delta):
    p = ConicProgram()
    mu, om = p.variable(()), p.variable(())
    p.add_nonneg(om)
    wc = CAffine(Affine.const(w.real), Affine.const(w.imag))
    build_lmi_C_lg(p, wc, mu, om, f_hat, delta)
    p.minimize(mu)
    return solve(p).objective


def test_s_procedure_vector_is_exact_worst_case():
    rng = np.random.default_rng(3)
    for _ in range(5):
        N = 4
        w, f_hat = crandn(rng, N), crandn(rng, N)
        delta = 0.4
        mu = _sdp_min_mu_lg(w, f_hat, delta)
        exact = (abs(np.vdot(f_hat, w)) + delta * np.linalg.norm(w)) ** 2
        assert mu == pytest.approx(exact, rel=1e-5)
        samples = f_hat + sample_ball(rng, N, delta, 2000)
        assert np.max(np.abs(samples.conj() @ w) ** 2) <= mu * (1 + 1e-6)


def test_s_procedure_matrix_bounds_sampled_worst_case():
    rng = np.random.default_rng(4)
    N = 3
    for _ in range(5):
        B = crandn(rng, N, N)
        U = B @ B.conj().T
        f_hat, delta = crandn(rng, N), 0.5
        p = ConicProgram()
        mu, om = p.variable(()), p.variable(())
        p.add_nonneg(om)
        build_lmi_C_l_tilde(p, CAffine(Affine.const(U.real), Affine.const(U.imag)), mu, om, f_hat, delta)
        p.minimize(mu)
        r = solve(p)
        f = f_hat + sample_ball(rng, N, delta, 5000)
        sampled = np.max(np.real(np.einsum("si,ij,sj->s", f.conj(), U, f)))
        ev = np.linalg.eigvalsh(U)
        root = np.linalg.cholesky(U)
        upper = (np.linalg.norm(root.conj().T @ f_hat) + delta * np.sqrt(ev[-1])) ** 2
        assert sampled <= r.objective * (1 + 1e-6)
        assert r.objective <= upper * (1 + 1e-6)


def test_infeasible_reported():
    p = ConicProgram()
    x = p.variable(())
    p.add_le(x, -1.0)
    p.add_nonneg(x)
    p.maximize(x)
    assert solve(p).status == "infeasible"


def test_residuals_and_dump():
    p = ConicProgram("t")
    x = p.variable(2, "x")
    p.add_nonneg(x, "pos")
    p.add_soc(1.0, x, "ball")
    p.maximize(x.sum())
    r = solve(p)
    assert p.max_residual(r.x) <= 1e-7
    assert p.max_residual(np.array([2.0, 0.0])) == pytest.approx(1.0)
    text = p.dump()
    assert "cone soc" in text and "var x" in text
    assert p.counts() == {"eq": 0, "nonneg": 1, "soc": 1, "psd": 0}


def test_unknown_backend():
    with pytest.raises(ValueError):
        solve(ConicProgram(), "mosek")
