"""Agent dynamics: right-hand side, RK4 stepping, means, recentering."""

import numpy as np
import pytest

from flocklab.dynamics import (
    BlowupSignal,
    Ensemble,
    means,
    pairwise_phi_weights,
    recenter,
    rhs,
    rhs_pairwise,
    step_rk4,
)
from flocklab.kernels import ConstantKernel, PowerLawKernel, kernel_eval
from flocklab.potentials import QuadraticPotential, ZeroPotential


def _random_ensemble(rng, n, d, equal_mass=False):
    m = np.full(n, 1.0 / n) if equal_mass else rng.uniform(0.2, 1.0, n)
    return Ensemble(
        x=rng.uniform(-2.0, 2.0, (n, d)),
        u=rng.uniform(-1.5, 1.5, (n, d)),
        m=m,
    )


def test_single_agent_feels_only_potential():
    ens = Ensemble(x=[[0.7]], u=[[0.3]], m=[1.0])
    dx, du = rhs(ens, PowerLawKernel(1.0, 1.0), QuadraticPotential(2.0))
    assert np.array_equal(dx, [[0.3]])
    assert du[0, 0] == pytest.approx(-2.0 * 0.7, abs=0)


def test_two_agent_hand_evaluation():
    ens = Ensemble(x=[[0.0], [0.0]], u=[[1.0], [-1.0]], m=[0.5, 0.5])
    _, du = rhs(ens, ConstantKernel(2.0), ZeroPotential())
    assert du[0, 0] == pytest.approx(-2.0, abs=1e-15)
    assert du[1, 0] == pytest.approx(2.0, abs=1e-15)


def test_aligned_velocities_feel_no_alignment():
    rng = np.random.default_rng(3)
    x = rng.uniform(-1, 1, (8, 2))
    u = np.tile([0.4, -0.2], (8, 1))
    ens = Ensemble(x=x, u=u, m=np.full(8, 0.125))
    _, du = rhs(ens, PowerLawKernel(1.0, 0.5), ZeroPotential())
    assert np.allclose(du, 0.0, atol=1e-15)


def test_rhs_mass_weighted_quadrature():
    # du_i must equal sum_j m_j phi(|x_i-x_j|)(u_j-u_i) - grad U(x_i) verbatim
    rng = np.random.default_rng(5)
    ens = _random_ensemble(rng, 12, 2)
    kernel = PowerLawKernel(1.3, 0.8)
    a = 0.9
    _, du = rhs(ens, kernel, QuadraticPotential(a))
    for i in range(ens.n):
        acc = np.zeros(2)
        for j in range(ens.n):
            w = ens.m[j] * kernel_eval(kernel, float(np.linalg.norm(ens.x[i] - ens.x[j])))
            acc += w * (ens.u[j] - ens.u[i])
        acc -= a * ens.x[i]
        assert np.allclose(du[i], acc, rtol=1e-12, atol=1e-14)


def test_energy_dissipation_identity_random_states():
    # d/dt E along the flow equals minus half the pairwise dissipation,
    # as an algebraic identity at any state (no time stepping involved)
    rng = np.random.default_rng(42)
    kernels = [ConstantKernel(1.3), PowerLawKernel(1.0, 1.0)]
    from flocklab.potentials import PerturbedQuadraticPotential, grad_at

    potentials = [QuadraticPotential(0.8), PerturbedQuadraticPotential(1.0, 0.3, 2.0)]
    count = 0
    for trial in range(25):
        for d in (1, 2):
            for kernel in kernels:
                for potential in potentials:
                    if count >= 100:
                        break
                    ens = _random_ensemble(rng, 10, d)
                    _, du = rhs(ens, kernel, potential)
                    lhs = float(
                        ens.m @ np.einsum("nd,nd->n", ens.u, du)
                        + ens.m @ np.einsum("nd,nd->n", grad_at(potential, ens.x), ens.u)
                    )
                    rhs_val = 0.0
                    for i in range(ens.n):
                        for j in range(ens.n):
                            w = kernel_eval(kernel, float(np.linalg.norm(ens.x[i] - ens.x[j])))
                            rhs_val += (
                                ens.m[i] * ens.m[j] * w * float(np.sum((ens.u[i] - ens.u[j]) ** 2))
                            )
                    rhs_val *= -0.5
                    assert abs(lhs - rhs_val) <= 1e-12 * max(1.0, abs(rhs_val))
                    count += 1
    assert count == 100


def test_means_dynamics_is_exact_oscillator():
    # mass-weighted mean of du is -a x_c for any state: algebraic identity
    rng = np.random.default_rng(8)
    ens = _random_ensemble(rng, 20, 2)
    a = 1.7
    _, du = rhs(ens, PowerLawKernel(1.0, 1.0), QuadraticPotential(a))
    c = means(ens)
    mean_du = (ens.m @ du) / ens.total_mass
    assert np.allclose(mean_du, -a * c.x_c, rtol=1e-12, atol=1e-14)


def test_step_rk4_harmonic_oscillator_closed_form():
    ens = Ensemble(x=[[1.0]], u=[[0.0]], m=[1.0])
    dt = 1e-3
    for _ in range(10_000):
        ens = step_rk4(ens, ConstantKernel(1.0), QuadraticPotential(1.0), dt)
    assert ens.x[0, 0] == pytest.approx(np.cos(10.0), abs=1e-8)
    assert ens.u[0, 0] == pytest.approx(-np.sin(10.0), abs=1e-8)


def test_step_rejects_nonpositive_dt():
    ens = Ensemble(x=[[0.0]], u=[[0.0]], m=[1.0])
    with pytest.raises(ValueError):
        step_rk4(ens, ConstantKernel(1.0), ZeroPotential(), 0.0)
    with pytest.raises(ValueError):
        step_rk4(ens, ConstantKernel(1.0), ZeroPotential(), -1e-3)


def test_momentum_conserved_without_potential():
    rng = np.random.default_rng(12)
    ens = _random_ensemble(rng, 16, 2)
    p0 = ens.m @ ens.u
    for _ in range(100):
        ens = step_rk4(ens, ConstantKernel(2.0), ZeroPotential(), 1e-3)
    assert np.allclose(ens.m @ ens.u, p0, atol=1e-12)


def test_rk4_fourth_order_convergence():
    # halving dt should shrink the end-state error by about 2^4
    def final_x(dt):
        ens = Ensemble(x=[[1.0]], u=[[0.0]], m=[1.0])
        for _ in range(int(round(2.0 / dt))):
            ens = step_rk4(ens, ConstantKernel(1.0), QuadraticPotential(1.0), dt)
        return ens.x[0, 0]

    exact = np.cos(2.0)
    err_coarse = abs(final_x(0.02) - exact)
    err_fine = abs(final_x(0.01) - exact)
    ratio = err_coarse / err_fine
    assert 10.0 < ratio < 25.0


def test_means_examples():
    ens = Ensemble(x=[[1.0], [-1.0]], u=[[1.0], [-1.0]], m=[0.5, 0.5])
    c = means(ens)
    assert np.array_equal(c.x_c, [0.0])
    assert np.array_equal(c.u_c, [0.0])
    single = Ensemble(x=[[0.3, 0.1]], u=[[2.0, -1.0]], m=[0.7])
    c = means(single)
    assert np.allclose(c.x_c, [0.3, 0.1], rtol=1e-15)
    assert np.allclose(c.u_c, [2.0, -1.0], rtol=1e-15)


def test_recenter_idempotent_and_shift_inverse():
    rng = np.random.default_rng(21)
    ens = _random_ensemble(rng, 10, 2)
    centered = recenter(ens)
    c = means(centered)
    assert np.all(np.abs(c.x_c) < 1e-14)
    assert np.all(np.abs(c.u_c) < 1e-14)
    again = recenter(centered)
    assert np.allclose(again.x, centered.x, atol=1e-14)
    shifted = Ensemble(x=centered.x + 3.0, u=centered.u - 1.5, m=centered.m)
    back = recenter(shifted)
    assert np.allclose(back.x, centered.x, atol=1e-12)
    assert np.allclose(back.u, centered.u, atol=1e-12)


def test_galilean_commutation_quadratic():
    # recentering commutes with the integrator when the potential is quadratic
    rng = np.random.default_rng(33)
    ens = _random_ensemble(rng, 16, 2, equal_mass=True)
    kernel = PowerLawKernel(1.0, 1.0)
    potential = QuadraticPotential(1.0)
    dt, n_steps = 1e-3, 10_000

    a = ens
    b = recenter(ens)
    for _ in range(n_steps):
        a = step_rk4(a, kernel, potential, dt)
        b = step_rk4(b, kernel, potential, dt)
    a_rec = recenter(a)
    assert np.abs(a_rec.x - b.x).max() <= 1e-8
    assert np.abs(a_rec.u - b.u).max() <= 1e-8


def test_pairwise_variant_equals_quadratic_on_centered_data():
    rng = np.random.default_rng(2)
    ens = recenter(_random_ensemble(rng, 14, 2))
    a = 1.3
    kernel = PowerLawKernel(1.0, 1.0)
    _, du_potential = rhs(ens, kernel, QuadraticPotential(a))
    _, du_pairwise = rhs_pairwise(ens, kernel, a)
    assert np.allclose(du_potential, du_pairwise, atol=1e-12)


def test_pairwise_variant_single_agent_and_momentum():
    single = Ensemble(x=[[0.4]], u=[[0.2]], m=[1.0])
    _, du = rhs_pairwise(single, ConstantKernel(1.0), 2.0)
    assert np.allclose(du, 0.0)
    rng = np.random.default_rng(9)
    ens = _random_ensemble(rng, 12, 2)
    _, du = rhs_pairwise(ens, PowerLawKernel(1.0, 0.5), 1.1)
    assert np.allclose(ens.m @ du, 0.0, atol=1e-13)


def test_determinism_bitwise():
    def trajectory():
        rng = np.random.default_rng(77)
        ens = _random_ensemble(rng, 24, 2)
        for _ in range(200):
            ens = step_rk4(ens, PowerLawKernel(1.0, 1.0), QuadraticPotential(1.0), 1e-3)
        return ens

    a, b = trajectory(), trajectory()
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.u, b.u)


def test_masses_are_static_across_steps():
    rng = np.random.default_rng(50)
    ens = _random_ensemble(rng, 6, 1)
    total = ens.total_mass
    stepped = step_rk4(ens, ConstantKernel(1.0), ZeroPotential(), 1e-3)
    assert stepped.m is ens.m
    assert stepped.total_mass == total


def test_blowup_signal_on_overflow():
    ens = Ensemble(x=[[1.0e8]], u=[[0.0]], m=[1.0])
    with pytest.raises(BlowupSignal) as info:
        step_rk4(ens, ConstantKernel(1.0), QuadraticPotential(1.0e6), 1.0)
    assert info.value.t_lo == 0.0
    assert info.value.t_hi == 1.0


def test_ensemble_validation():
    with pytest.raises(ValueError):
        Ensemble(x=[[0.0]], u=[[0.0]], m=[0.0])
    with pytest.raises(ValueError):
        Ensemble(x=[[np.inf]], u=[[0.0]], m=[1.0])
    with pytest.raises(ValueError):
        Ensemble(x=[[0.0], [1.0]], u=[[0.0]], m=[1.0, 1.0])


def test_pairwise_weights_match_definition():
    rng = np.random.default_rng(10)
    x = rng.uniform(-1, 1, (7, 2))
    m = rng.uniform(0.1, 1.0, 7)
    kernel = PowerLawKernel(1.4, 0.6)
    w = pairwise_phi_weights(x, m, kernel)
    for i in range(7):
        for j in range(7):
            expect = m[j] * kernel_eval(kernel, float(np.linalg.norm(x[i] - x[j])))
            assert w[i, j] == pytest.approx(expect, rel=1e-14)
