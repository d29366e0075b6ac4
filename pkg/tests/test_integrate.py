import numpy as np
import pytest

from fluxsr.dynamics.integrate import (
    IntegrationError,
    TimeSeries,
    default_step,
    evolve,
    integrate,
    lindblad_rhs,
)
from fluxsr.dynamics.models import SpinModel, ae_collapse, ghz, h_ae, mhz, superradiant_rate
from fluxsr.dynamics.operators import (
    collective_ops,
    excited_count,
    fock_state,
    product_state,
    symmetric_projector,
)

W = float(ghz(6.0))
G = float(mhz(50.0))
K = float(mhz(400.0))


def random_density(dim, rng):
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def test_rhs_zero_generator():
    rho = random_density(4, np.random.default_rng(0))
    assert np.all(lindblad_rhs(rho, np.zeros((4, 4))) == 0)


def test_rhs_is_traceless():
    rng = np.random.default_rng(1)
    ops = collective_ops(3)
    h = rng.standard_normal((8, 8))
    h = h + h.T
    rho = random_density(8, rng)
    d = lindblad_rhs(rho, h, [(0.7, ops.jm.toarray()), (0.2, ops.sz[1].toarray())])
    assert abs(np.trace(d)) < 1e-12
    assert np.allclose(d, d.conj().T, atol=1e-13)


def test_rhs_single_qubit_decay_rate():
    ops = collective_ops(1)
    d = lindblad_rhs(fock_state([1]), np.zeros((2, 2)), [(0.3, ops.jm.toarray())])
    # d<sigma+ sigma-> / dt = -2 gamma0 from the excited state
    assert np.real(d[1, 1]) == pytest.approx(-0.6)


def test_rhs_dimension_mismatch():
    with pytest.raises(ValueError):
        lindblad_rhs(np.eye(2), np.eye(4))
    with pytest.raises(ValueError):
        lindblad_rhs(np.eye(2) / 2, np.eye(2), [(1.0, np.eye(4))])


def test_single_qubit_decay_oracle():
    m = SpinModel([W], W, 0.0, W, G, K)
    ops = collective_ops(1)
    gamma0 = superradiant_rate(m)
    t_end = 5.0 / gamma0
    ts, rho = evolve(fock_state([1]), h_ae(m, ops), ae_collapse(m, ops), (0, t_end),
                     {"pm": ops.jp @ ops.jm})
    exact = np.exp(-2 * gamma0 * ts.times)
    assert np.max(np.abs(ts["pm"] - exact)) < 1e-6
    assert ts.trace_drift < 1e-8
    assert abs(np.trace(rho) - 1) < 1e-8


def test_resonant_pi_pulse():
    lam = 0.8
    ops = collective_ops(1)
    h = lam / 2 * ops.sx_total
    ts, rho = evolve(fock_state([0]), h, [], (0, np.pi / lam), {"exc": ops.jp @ ops.jm})
    assert ts["exc"][-1] > 1 - 1e-8
    assert excited_count(rho) > 1 - 1e-8


def test_detuned_rabi_formula():
    lam = 0.8
    dp = lam
    ops = collective_ops(1)
    h = dp / 2 * ops.sz[0] + lam / 2 * ops.sx_total
    omega = np.hypot(dp, lam)
    ts, _ = evolve(fock_state([0]), h, [], (0, 4 * np.pi / omega), {"exc": ops.jp @ ops.jm})
    exact = lam**2 / omega**2 * np.sin(omega * ts.times / 2) ** 2
    assert np.max(np.abs(ts["exc"] - exact)) < 1e-6
    assert ts["exc"].max() == pytest.approx(0.5, abs=1e-6)


def test_time_dependent_hamiltonian_matches_constant():
    ops = collective_ops(1)
    h = 0.5 * ops.sx_total
    a, _ = evolve(fock_state([0]), h, [], (0, 3.0), [ops.jp @ ops.jm])
    b, _ = evolve(fock_state([0]), lambda t: h, [], (0, 3.0), [ops.jp @ ops.jm])
    assert np.allclose(a["o0"], b["o0"], atol=1e-12)


def test_symmetric_sector_is_closed():
    n = 3
    m = SpinModel(np.full(n, W), W, 0.0, W + float(mhz(100)), G, K)
    ops = collective_ops(n)
    ts, rho = evolve(fock_state([1] * n), h_ae(m, ops), ae_collapse(m, ops), (0, 20.0),
                     {"jpjm": ops.jp @ ops.jm})
    p = symmetric_projector(n)
    leak = 1 - np.trace(p @ rho @ p).real
    assert abs(leak) < 1e-6
    assert ts.hermiticity < 1e-8


def test_permutation_covariance():
    rng = np.random.default_rng(5)
    n = 3
    m = SpinModel.sample(n, W, float(mhz(25)), W + float(mhz(60)), G, K, rng)
    ops = collective_ops(n)
    psis = [(1, 0), (0.6, 0.8), (0, 1)]
    perm = [2, 0, 1]
    a, _ = evolve(product_state(psis), h_ae(m, ops), ae_collapse(m, ops), (0, 10.0),
                  {"jpjm": ops.jp @ ops.jm})
    mp = m.permuted(perm)
    b, _ = evolve(product_state([psis[i] for i in perm]), h_ae(mp, ops), ae_collapse(mp, ops),
                  (0, 10.0), {"jpjm": ops.jp @ ops.jm})
    assert np.max(np.abs(a["jpjm"] - b["jpjm"])) < 1e-10


def test_jpjm_nonnegative_during_decay():
    rng = np.random.default_rng(2)
    m = SpinModel.sample(3, W, float(mhz(25)), W, G, K, rng)
    ops = collective_ops(3)
    ts, _ = evolve(fock_state([1, 1, 0]), h_ae(m, ops), ae_collapse(m, ops), (0, 30.0),
                   {"jpjm": ops.jp @ ops.jm})
    assert ts["jpjm"].min() >= -1e-9


def test_final_state_positive():
    rng = np.random.default_rng(3)
    m = SpinModel.sample(3, W, float(mhz(25)), W, G, K, rng)
    ops = collective_ops(3)
    _, rho = evolve(fock_state([1, 0, 1]), h_ae(m, ops), ae_collapse(m, ops), (0, 5.0), [ops.jz])
    assert np.linalg.eigvalsh(rho).min() > -1e-7


class _Growing:
    """Generator whose trace grows; no step size can fix it."""

    def rhs(self, t, y, out):
        out[:] = y

    def trace(self, y):
        return complex(y.sum())

    def hermiticity(self, y):
        return 0.0


def test_drift_raises_after_halvings():
    with pytest.raises(IntegrationError, match="trace drift"):
        integrate(_Growing(), np.array([1.0 + 0j]), (0, 1.0), 0.1, {"x": lambda y: y[0].real})


def test_integrate_reports_samples():
    ts, _ = evolve(fock_state([0]), 0.3 * collective_ops(1).sx_total, [], (0, 2.0), [],
                   n_samples=57)
    assert ts.times.size == 57
    assert ts.times[0] == 0 and ts.times[-1] == pytest.approx(2.0)


def test_bad_span():
    with pytest.raises(ValueError):
        evolve(fock_state([0]), collective_ops(1).jz, [], (1.0, 1.0), [])


def test_time_series_validation():
    with pytest.raises(ValueError):
        TimeSeries(np.array([0.0, 0.0]), {})
    with pytest.raises(ValueError):
        TimeSeries(np.array([0.0, 1.0]), {"a": np.zeros(3)})


def test_default_step():
    assert default_step([2.0, None, np.inf, 0.5], 10) == 0.05
    with pytest.raises(ValueError):
        default_step([None, 0.0])


def test_dense_generator_keeps_hermiticity():
    n = 3
    m = SpinModel(np.full(n, W), W, 0.0, W, G, K)
    ops = collective_ops(n)
    rho = fock_state([1] * n).astype(complex)
    rho[1, 2] += 1e-13j
    _, out = evolve(rho, h_ae(m, ops), ae_collapse(m, ops), (0, 60.0), [ops.jz])
    assert np.max(np.abs(out - out.conj().T)) <= 2e-13
