"""Fixed-step RK4 integration of the Lindblad master equation."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicHermiteSpline

DEFAULT_STEPS_PER_SCALE = 200
DEFAULT_SAMPLES = 2000
TRACE_TOL = 1e-6
HERMITICITY_TOL = 1e-8
MAX_HALVINGS = 3
CHECK_EVERY = 16
DENSE_LIMIT = 1024


class IntegrationError(RuntimeError):
    pass


@dataclass
class TimeSeries:
    times: np.ndarray
    channels: dict
    step: float = float("nan")
    trace_drift: float = 0.0
    hermiticity: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.size > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("times must be strictly increasing")
        for k, v in self.channels.items():
            if len(v) != self.times.size:
                raise ValueError(f"channel {k!r} length does not match times")

    def __getitem__(self, name):
        return self.channels[name]


def default_step(scales, steps_per_scale: int = DEFAULT_STEPS_PER_SCALE) -> float:
    """Smallest finite positive time scale divided by ``steps_per_scale``."""
    s = [x for x in scales if x is not None and np.isfinite(x) and x > 0]
    if not s:
        raise ValueError("no finite time scale to set the step")
    return min(s) / steps_per_scale


def lindblad_rhs(rho, h, collapse=()):
    """-i[H, rho] + sum rate (2 L rho L^+ - L^+L rho - rho L^+L)."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or h.shape != rho.shape:
        raise ValueError(f"dimension mismatch: rho {rho.shape}, H {h.shape}")
    hr = h @ rho
    out = -1j * (hr - (h.T @ rho.T).T)
    for rate, op in collapse:
        if op.shape != rho.shape:
            raise ValueError(f"dimension mismatch: collapse operator {op.shape}")
        ldl = op.conj().T @ op
        lr = op @ rho
        out += rate * (2.0 * (op @ lr.conj().T).conj().T - ldl @ rho - (ldl.T @ rho.T).T)
    return out


class DenseLindblad:
    """Generator on a full density matrix stored as a flat vector.

    Operators up to DENSE_LIMIT in dimension are converted to dense arrays
    and folded into H_eff = H - i sum rate L^+L, so a constant generator
    costs two products per jump operator plus two for H_eff.
    """

    def __init__(self, h, collapse=()):
        self._h = h
        h0 = h(0.0) if callable(h) else h
        self.dim = h0.shape[0]
        self._dense = self.dim <= DENSE_LIMIT
        conv = _dense if self._dense else (lambda op: op)
        self.collapse = [(r, conv(op), conv(op.conj().T @ op)) for r, op in collapse]
        self._anti = sum((r * ldl for r, _, ldl in self.collapse), 0 * conv(h0))
        self._heff = None if callable(h) else conv(h) - 1j * self._anti

    def hamiltonian(self, t):
        return self._h(t) if callable(self._h) else self._h

    def rhs(self, t, y, out):
        rho = y.reshape(self.dim, self.dim)
        if self._heff is not None:
            heff = self._heff
        else:
            hh = self.hamiltonian(t)
            heff = (_dense(hh) if self._dense else hh) - 1j * self._anti
        # -i (H_eff rho - rho H_eff^+) with rho H_eff^+ = (H_eff rho)^+ for Hermitian rho;
        # the Hermitian part of the result is kept so an anti-Hermitian roundoff
        # component cannot grow under the shortcut
        a = -1j * (heff @ rho)
        for rate, op, _ in self.collapse:
            a += rate * (op @ (op @ rho).conj().T).conj().T
        out[:] = np.asarray(a + a.conj().T).ravel()

    def trace(self, y):
        return complex(y[:: self.dim + 1].sum())

    def hermiticity(self, y):
        rho = y.reshape(self.dim, self.dim)
        return float(np.max(np.abs(rho - rho.conj().T)))


def _dense(op):
    return op.toarray() if hasattr(op, "toarray") else np.asarray(op)


def rk4(gen, y0, t0, h, n_steps, on_node=None):
    """Classical RK4 with preallocated stages.

    ``on_node(t, y, k1)`` is called at every node with the slope there and
    may return True to stop early.  Returns (y, t, stopped).
    """
    y = np.array(y0, dtype=complex)
    k1, k2, k3, k4, tmp = (np.empty_like(y) for _ in range(5))
    t = t0
    for i in range(n_steps):
        gen.rhs(t, y, k1)
        if on_node is not None and on_node(t, y, k1):
            return y, t, True
        np.multiply(k1, 0.5 * h, out=tmp)
        tmp += y
        gen.rhs(t + 0.5 * h, tmp, k2)
        np.multiply(k2, 0.5 * h, out=tmp)
        tmp += y
        gen.rhs(t + 0.5 * h, tmp, k3)
        np.multiply(k3, h, out=tmp)
        tmp += y
        gen.rhs(t + h, tmp, k4)
        k2 += k3
        k2 *= 2.0
        k2 += k1
        k2 += k4
        k2 *= h / 6.0
        y += k2
        t = t0 + (i + 1) * h
    gen.rhs(t, y, k1)
    if on_node is not None:
        on_node(t, y, k1)
    return y, t, False


def integrate(gen, y0, t_span, step, observables, n_samples=DEFAULT_SAMPLES, stop=None):
    """Integrate ``gen`` over ``t_span`` and resample linear observables.

    ``observables`` maps names to linear functionals of the state vector;
    their values and slopes at the RK4 nodes feed a cubic Hermite
    interpolant evaluated on ``n_samples`` uniform times.  ``stop(t, y,
    values)`` may end the run early; samples then stop at the last node.
    The step is halved up to MAX_HALVINGS times when trace or Hermiticity
    drift exceeds tolerance.
    """
    t0, t1 = map(float, t_span)
    if not (np.isfinite(t0) and np.isfinite(t1) and t1 > t0):
        raise ValueError("t_span must be a finite increasing interval")
    names = list(observables)
    for attempt in range(MAX_HALVINGS + 1):
        n_steps = max(1, math.ceil((t1 - t0) / step - 1e-9))
        h = (t1 - t0) / n_steps
        nodes, vals, ders = [], [], []
        drift = [0.0, 0.0]
        tr0 = 1.0

        def on_node(t, y, k1):
            i = len(nodes)
            v = [observables[k](y) for k in names]
            nodes.append(t)
            vals.append(v)
            ders.append([observables[k](k1) for k in names])
            drift[0] = max(drift[0], abs(gen.trace(y) - tr0))
            if i % CHECK_EVERY == 0 or t >= t1 - 0.5 * h:
                drift[1] = max(drift[1], gen.hermiticity(y))
            if drift[0] > TRACE_TOL or drift[1] > HERMITICITY_TOL:
                return True
            return stop is not None and stop(t, y, dict(zip(names, v)))

        y, t_end, stopped = rk4(gen, y0, t0, h, n_steps, on_node)
        drift[1] = max(drift[1], gen.hermiticity(y))
        if drift[0] <= TRACE_TOL and drift[1] <= HERMITICITY_TOL:
            break
        step = h / 2.0
    else:
        raise IntegrationError(
            f"trace drift {drift[0]:.3g} / Hermiticity drift {drift[1]:.3g} persist at "
            f"step {h:.4g} ns after {MAX_HALVINGS} halvings"
        )
    nodes = np.array(nodes)
    vals = np.array(vals, dtype=float).reshape(len(nodes), len(names))
    ders = np.array(ders, dtype=float).reshape(len(nodes), len(names))
    samples = np.linspace(t0, t1, n_samples)
    samples = samples[samples <= nodes[-1] * (1 + 1e-12)]
    if nodes.size > 1:
        spline = CubicHermiteSpline(nodes, vals, ders, axis=0)
        svals = spline(samples)
    else:
        svals = np.repeat(vals, samples.size, axis=0)
    ts = TimeSeries(
        samples,
        {k: svals[:, i] for i, k in enumerate(names)},
        step=h,
        trace_drift=drift[0],
        hermiticity=drift[1],
        meta={"stopped_early": bool(stopped), "t_end": float(t_end), "n_steps": len(nodes) - 1},
    )
    return ts, y


def evolve(rho0, h, collapse, t_span, observables, step=None, n_samples=DEFAULT_SAMPLES,
           steps_per_scale=DEFAULT_STEPS_PER_SCALE):
    """Integrate a full density matrix and record expectation values.

    ``h`` is an operator or a callable ``t -> operator``; ``observables``
    is a mapping of names to operators, or a sequence (named o0, o1, ...).
    Without an explicit ``step`` the inverse norms of H and of the
    dissipators set the time scale.  Returns (TimeSeries, final rho).
    """
    rho0 = np.asarray(rho0, dtype=complex)
    gen = DenseLindblad(h, collapse)
    if rho0.shape != (gen.dim, gen.dim):
        raise ValueError(f"dimension mismatch: rho {rho0.shape}, H dimension {gen.dim}")
    if not isinstance(observables, dict):
        observables = {f"o{i}": op for i, op in enumerate(observables)}
    if step is None:
        t0, t1 = t_span
        hn = max(_norm(gen.hamiltonian(t)) for t in np.linspace(t0, t1, 9))
        dn = sum(2.0 * r * _norm(ldl) for r, _, ldl in gen.collapse)
        step = default_step([1.0 / hn if hn else None, 1.0 / dn if dn else None, t1 - t0],
                            steps_per_scale)
    dim = gen.dim
    funcs = {k: _linear_expect(op, dim) for k, op in observables.items()}
    ts, y = integrate(gen, rho0.ravel(), t_span, step, funcs, n_samples)
    return ts, y.reshape(dim, dim)


def _norm(op) -> float:
    return float(abs(op).sum(axis=1).max())


def _linear_expect(op, dim):
    # tr(O rho) = sum_ij O_ij rho_ji, evaluated on the flat row-major vector
    o = op.tocoo() if hasattr(op, "tocoo") else None
    if o is not None:
        idx = o.col * dim + o.row
        data = o.data

        def f(y):
            return float(np.real(np.dot(data, y[idx])))
    else:
        ot = np.asarray(op).T.ravel()

        def f(y):
            return float(np.real(np.dot(ot, y)))
    return f
