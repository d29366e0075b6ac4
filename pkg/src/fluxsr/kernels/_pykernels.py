"""Numpy fallback with the same signatures as the compiled kernels."""
import numpy as np


def _sector_tables(n_sites, dims, up, upoffs, low, lowoffs):
    ups, lows = [], []
    for n in range(len(dims)):
        w = n_sites - n
        ups.append(up[upoffs[n] : upoffs[n] + dims[n] * w].reshape(dims[n], w) if w else None)
        lows.append(low[lowoffs[n] : lowoffs[n] + dims[n] * n].reshape(dims[n], n) if n else None)
    return ups, lows


def block_rhs(y, out, diag, c, gamma, n_sites, dims, offs, doffs, up, upoffs, low, lowoffs,
              xoffs, xbuf, wbuf):
    nmax = len(dims) - 1
    ups, lows = _sector_tables(n_sites, dims, up, upoffs, low, lowoffs)
    blocks = [y[offs[n] : offs[n] + dims[n] ** 2].reshape(dims[n], dims[n]) for n in range(nmax + 1)]
    xs = [None] + [blocks[n][ups[n - 1]].sum(axis=1) for n in range(1, nmax + 1)]
    for n in range(nmax + 1):
        d = dims[n]
        e = diag[doffs[n] : doffs[n] + d]
        o = -1j * (e[:, None] - e[None, :]) * blocks[n]
        if n >= 1:
            wm = xs[n][lows[n]].sum(axis=1)
            wh = wm.conj().T
            o += -1j * c * (wm - wh) - gamma * (wm + wh)
        if n < nmax:
            o += 2.0 * gamma * xs[n + 1][:, ups[n]].sum(axis=2)
        # Hermitian part only, as in the compiled kernel
        out[offs[n] : offs[n] + d * d] = (0.5 * (o + o.conj().T)).ravel()


def block_jpjm(y, n_sites, dims, offs, up, upoffs):
    acc = 0j
    for n in range(1, len(dims)):
        d = dims[n]
        w = n_sites - n + 1
        rho = y[offs[n] : offs[n] + d * d].reshape(d, d)
        u = up[upoffs[n - 1] : upoffs[n - 1] + dims[n - 1] * w].reshape(dims[n - 1], w)
        acc += rho[u[:, :, None], u[:, None, :]].sum()
    return acc.real
