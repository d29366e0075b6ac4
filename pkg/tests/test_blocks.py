import os
import subprocess
import sys
from math import comb

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from fluxsr import kernels
from fluxsr.dynamics.blocks import (
    BlockLayout,
    ae_generator,
    decay,
    dispersive_generator,
    drive_product,
    fill_bound,
    product_populations,
)
from fluxsr.dynamics.integrate import evolve, lindblad_rhs
from fluxsr.dynamics.models import (
    DriveSpec,
    SpinModel,
    ae_collapse,
    dispersive_collapse,
    drive_hamiltonian,
    ghz,
    h_ae,
    h_dispersive,
    mhz,
    superradiant_rate,
)
from fluxsr.dynamics.operators import collective_ops, fock_state, product_state

W = float(ghz(6.0))
G = float(mhz(50.0))
K = float(mhz(400.0))
BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


def detuned_model(n, seed=0, chi=float(mhz(80))):
    return SpinModel.sample(n, W, float(mhz(25)), W + chi, G, K, np.random.default_rng(seed))


def test_layout_tables():
    L = BlockLayout(5)
    assert list(L.dims) == [comb(5, n) for n in range(6)]
    assert L.size == sum(comb(5, n) ** 2 for n in range(6))
    assert all(np.all(b.sum(axis=1) == n) for n, b in enumerate(L.bits))
    with pytest.raises(ValueError):
        BlockLayout(3, 4)
    with pytest.raises(ValueError):
        BlockLayout(0)


def test_fock_and_product_embed_like_dense():
    L = BlockLayout(3)
    assert np.allclose(L.to_dense(L.fock([1, 0, 1])), fock_state([1, 0, 1]))
    psis = [(0.6, 0.8), (1, 0), (np.sqrt(0.5), 1j * np.sqrt(0.5))]
    dense = product_state(psis)
    y = L.product(psis)
    assert L.trace(y) == pytest.approx(1.0)
    # the blocks are the excitation-number-diagonal part of the dense state
    n_exc = np.array([bin(i).count("1") for i in range(8)])
    mask = n_exc[:, None] == n_exc[None, :]
    assert np.allclose(L.to_dense(y), np.where(mask, dense, 0))
    assert np.allclose(L.populations(y), product_populations(psis))
    with pytest.raises(ValueError):
        BlockLayout(3, 1).fock([1, 1, 0])


def test_fill_bound():
    lam = fill_bound(4)
    assert list(lam) == [0, 4, 6, 6, 6]


@pytest.mark.parametrize("backend", BACKENDS)
def test_rhs_matches_dense_lindblad(backend):
    n = 4
    m = detuned_model(n)
    L = BlockLayout(n)
    gen = ae_generator(m, L, backend)
    rng = np.random.default_rng(4)
    y = L.product([tuple(v / np.linalg.norm(v)) for v in rng.standard_normal((n, 2))]).astype(complex)
    out = np.empty_like(y)
    gen.rhs(0.0, y, out)
    ops = collective_ops(n)
    dense = lindblad_rhs(L.to_dense(y), h_ae(m, ops).toarray(),
                         [(r, op.toarray()) for r, op in ae_collapse(m, ops)])
    assert np.allclose(L.to_dense(out), dense, atol=1e-13)
    jpjm = np.trace((ops.jp @ ops.jm).toarray() @ L.to_dense(y)).real
    assert gen.jpjm(y) == pytest.approx(jpjm, abs=1e-13)


def test_backends_agree():
    if len(BACKENDS) < 2:
        pytest.skip("compiled kernels not built")
    n = 6
    m = detuned_model(n, 3)
    L = BlockLayout(n)
    rng = np.random.default_rng(0)
    y = rng.standard_normal(L.size) + 1j * rng.standard_normal(L.size)
    outs = []
    for b in BACKENDS:
        out = np.empty_like(y)
        gen = ae_generator(m, L, b)
        gen.rhs(0.0, y, out)
        outs.append((out, gen.jpjm(y)))
    assert np.allclose(outs[0][0], outs[1][0], rtol=0, atol=1e-12)
    assert outs[0][1] == pytest.approx(outs[1][1], rel=1e-12)


def test_backend_selection_env():
    env = dict(os.environ, FLUXSR_BACKEND="python")
    out = subprocess.run([sys.executable, "-c", "import fluxsr.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


@pytest.mark.parametrize("backend", BACKENDS)
def test_decay_matches_dense_evolution(backend):
    n = 4
    m = detuned_model(n, 7)
    L = BlockLayout(n)
    psis = [(0.6, 0.8), (0, 1), (1, 0), (np.sqrt(0.5), np.sqrt(0.5))]
    ts, _ = decay(m, ae_generator(m, L, backend), L.product(psis), t_end=12.0, n_samples=300)
    ops = collective_ops(n)
    ref, _ = evolve(product_state(psis), h_ae(m, ops), ae_collapse(m, ops), (0, 12.0),
                    {"jpjm": ops.jp @ ops.jm},
                    step=ts.step, n_samples=300)
    assert np.allclose(ts["jpjm"], ref["jpjm"], atol=1e-10)
    assert ts.trace_drift < 1e-8


def test_dispersive_generator_matches_dense():
    n = 3
    chi = float(mhz(500))
    m = SpinModel.sample(n, W, float(mhz(25)), W + chi, G, K, np.random.default_rng(2))
    L = BlockLayout(n)
    gen = dispersive_generator(m, L, photon_number=0.5)
    ops = collective_ops(n)
    y = L.fock([1, 1, 0])
    ts, _ = decay(m, gen, y, t_end=20.0, n_samples=200, step=0.01)
    ref, _ = evolve(fock_state([1, 1, 0]), h_dispersive(m, 0.5, frame=m.omega_bar, ops=ops),
                    dispersive_collapse(m, ops), (0, 20.0), {"jpjm": ops.jp @ ops.jm},
                    step=0.01, n_samples=200)
    assert np.allclose(ts["jpjm"], ref["jpjm"], atol=1e-10)


def test_truncated_layout_is_exact():
    n = 5
    m = detuned_model(n, 1)
    full, trunc = BlockLayout(n), BlockLayout(n, 2)
    bits = [1, 0, 0, 1, 0]
    a, _ = decay(m, ae_generator(m, full), full.fock(bits), t_end=10.0, n_samples=100)
    b, _ = decay(m, ae_generator(m, trunc), trunc.fock(bits), t_end=10.0, n_samples=100)
    assert np.allclose(a["jpjm"], b["jpjm"], rtol=0, atol=1e-14)


def dicke_ladder(n, gamma, times):
    # populations of symmetric states with k excitations, loss k(N-k+1) 2 gamma
    rates = np.array([2 * gamma * k * (n - k + 1) for k in range(n + 1)])

    def rhs(t, p):
        d = -rates * p
        d[:-1] += rates[1:] * p[1:]
        return d

    p0 = np.zeros(n + 1)
    p0[n] = 1.0
    sol = solve_ivp(rhs, (times[0], times[-1]), p0, t_eval=times, rtol=1e-12, atol=1e-14,
                    method="DOP853")
    jpjm = (rates / (2 * gamma)) @ sol.y
    return jpjm


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_dicke_ladder_oracle(n):
    m = SpinModel(np.full(n, W), W, 0.0, W, G, K)
    L = BlockLayout(n)
    ts, _ = decay(m, ae_generator(m, L), L.fock([1] * n), steps_per_scale=200)
    exact = dicke_ladder(n, superradiant_rate(m), ts.times)
    assert np.max(np.abs(ts["jpjm"] - exact)) < 1e-6
    assert abs(ts["jpjm"].max() - exact.max()) < 1e-6


@pytest.mark.parametrize("backend", BACKENDS)
def test_early_stop_keeps_maximum(backend):
    n = 6
    m = detuned_model(n, 9, chi=0.0)
    L = BlockLayout(n)
    y0 = L.fock([1, 1, 1, 1, 1, 0])
    full, _ = decay(m, ae_generator(m, L, backend), y0, steps_per_scale=20)
    short, _ = decay(m, ae_generator(m, L, backend), y0, steps_per_scale=20, early_stop=True)
    assert short.meta["stopped_early"]
    assert short.times[-1] < full.times[-1]
    assert short["jpjm"].max() == full["jpjm"].max()


def test_drive_product_matches_dense():
    n = 2
    omegas = W + np.array([float(mhz(20)), -float(mhz(35))])
    m = SpinModel(omegas, W, float(mhz(25)), W, G, K)
    d = DriveSpec(float(mhz(40)), W)
    psis, h = drive_product(omegas, d)
    ops = collective_ops(n)
    _, rho = evolve(fock_state([0, 0]), lambda t: drive_hamiltonian(m, d, t, ops), [], d.window,
                    [ops.jz], step=h)
    assert np.allclose(product_state(psis), rho, atol=1e-8)


def test_drive_product_batched_and_pi_pulse():
    d = DriveSpec(float(mhz(100)), W)
    omegas = np.full((3, 4), W)
    psis, _ = drive_product(omegas, d)
    assert psis.shape == (3, 4, 2)
    assert np.all(np.abs(psis[..., 1]) ** 2 > 1 - 1e-8)
    norms = np.sum(np.abs(psis) ** 2, axis=-1)
    assert np.allclose(norms, 1, atol=1e-10)


@pytest.mark.parametrize("backend", BACKENDS)
def test_rhs_output_is_hermitian_for_any_input(backend):
    n = 5
    L = BlockLayout(n)
    gen = ae_generator(detuned_model(n, 2), L, backend)
    rng = np.random.default_rng(1)
    y = rng.standard_normal(L.size) + 1j * rng.standard_normal(L.size)
    out = np.empty_like(y)
    gen.rhs(0.0, y, out)
    assert L.hermiticity(out) == 0.0


@pytest.mark.parametrize("backend", BACKENDS)
def test_anti_hermitian_roundoff_does_not_grow(backend):
    n = 6
    m = detuned_model(n, 4, chi=0.0)
    L = BlockLayout(n)
    y0 = L.fock([1] * n)
    y0[L.offsets[3] + 1] += 1e-13j
    ts, y = decay(m, ae_generator(m, L, backend), y0, steps_per_scale=20)
    assert L.hermiticity(y) <= 2e-13
