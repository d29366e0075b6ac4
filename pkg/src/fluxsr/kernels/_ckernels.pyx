# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled Lindblad right-hand side on excitation-number blocks.

The state is a flat complex vector holding the diagonal blocks rho_n of
the density matrix, one per excitation number n, each stored row-major.
``up`` lists for every state of sector n the indices of its parents in
sector n+1 (one excitation added); ``low`` lists its children in sector
n-1.  Both are flattened with per-sector offsets and fixed row widths
(N - n and n respectively).
"""


DEF TILE = 32


def block_rhs(
    const double complex[::1] y,
    double complex[::1] out,
    const double[::1] diag,
    double c,
    double gamma,
    int n_sites,
    const Py_ssize_t[::1] dims,
    const Py_ssize_t[::1] offs,
    const Py_ssize_t[::1] doffs,
    const int[::1] up,
    const Py_ssize_t[::1] upoffs,
    const int[::1] low,
    const Py_ssize_t[::1] lowoffs,
    const Py_ssize_t[::1] xoffs,
    double complex[::1] xbuf,
    double complex[::1] wbuf,
):
    """Write the Hermitian part of -i[D + c J+J-, rho] + gamma D[J-] rho into ``out``."""
    cdef Py_ssize_t nmax = dims.shape[0] - 1
    cdef Py_ssize_t n, a, b, r, s, k, d, dl, dh, w, i0, j0, i1, j1
    cdef const double complex* Y = &y[0]
    cdef double complex* O = &out[0]
    cdef const double* E = &diag[0]
    cdef const int* U = &up[0]
    cdef const int* Lw = &low[0]
    cdef double complex* X = &xbuf[0]
    cdef double complex* Wb = &wbuf[0]
    cdef const double complex* rho
    cdef const double complex* src
    cdef double complex* dst
    cdef double complex* o
    cdef const double complex* xn
    cdef const double* e
    cdef const int* u
    cdef double complex acc, w1, w2
    cdef double re, im
    with nogil:
        # X_n = J- rho_n, shape (d_{n-1}, d_n)
        for n in range(1, nmax + 1):
            dl = dims[n - 1]
            d = dims[n]
            w = n_sites - n + 1
            rho = Y + offs[n]
            for r in range(dl):
                dst = X + xoffs[n] + r * d
                u = U + upoffs[n - 1] + r * w
                src = rho + u[0] * d
                for b in range(d):
                    dst[b] = src[b]
                for k in range(1, w):
                    src = rho + u[k] * d
                    for b in range(d):
                        dst[b] = dst[b] + src[b]
        for n in range(nmax + 1):
            d = dims[n]
            rho = Y + offs[n]
            o = O + offs[n]
            e = E + doffs[n]
            for a in range(d):
                for b in range(d):
                    # -i (e_a - e_b) rho_ab
                    re = e[a] - e[b]
                    o[a * d + b] = re * (rho[a * d + b].imag - 1j * rho[a * d + b].real)
            if n >= 1:
                # W = J+ X_n = J+ J- rho_n
                xn = X + xoffs[n]
                for a in range(d):
                    dst = Wb + a * d
                    u = Lw + lowoffs[n] + a * n
                    src = xn + u[0] * d
                    for b in range(d):
                        dst[b] = src[b]
                    for k in range(1, n):
                        src = xn + u[k] * d
                        for b in range(d):
                            dst[b] = dst[b] + src[b]
                # -ic (W - W^+) - gamma (W + W^+), tiled for the transposed reads
                for i0 in range(0, d, TILE):
                    i1 = min(i0 + TILE, d)
                    for j0 in range(0, d, TILE):
                        j1 = min(j0 + TILE, d)
                        for a in range(i0, i1):
                            for b in range(j0, j1):
                                w1 = Wb[a * d + b]
                                w2 = Wb[b * d + a]
                                re = w1.real - w2.real
                                im = w1.imag + w2.imag
                                o[a * d + b] = o[a * d + b] + (c * im - gamma * (w1.real + w2.real)) + 1j * (
                                    -c * re - gamma * (w1.imag - w2.imag))
            if n < nmax:
                # 2 gamma J- rho_{n+1} J+ = 2 gamma X_{n+1} J+
                dh = dims[n + 1]
                w = n_sites - n
                for r in range(d):
                    xn = X + xoffs[n + 1] + r * dh
                    dst = o + r * d
                    for s in range(d):
                        u = U + upoffs[n] + s * w
                        acc = 0
                        for k in range(w):
                            acc = acc + xn[u[k]]
                        dst[s] = dst[s] + 2.0 * gamma * acc
            # keep only the Hermitian part: the W + W^+ shortcut above is exact
            # on Hermitian rho but lets an anti-Hermitian roundoff component grow
            for i0 in range(0, d, TILE):
                i1 = min(i0 + TILE, d)
                for j0 in range(i0, d, TILE):
                    j1 = min(j0 + TILE, d)
                    for a in range(i0, i1):
                        for b in range(max(j0, a), j1):
                            w1 = o[a * d + b]
                            w2 = o[b * d + a]
                            re = 0.5 * (w1.real + w2.real)
                            im = 0.5 * (w1.imag - w2.imag)
                            o[a * d + b] = re + 1j * im
                            o[b * d + a] = re - 1j * im


def block_jpjm(
    const double complex[::1] y,
    int n_sites,
    const Py_ssize_t[::1] dims,
    const Py_ssize_t[::1] offs,
    const int[::1] up,
    const Py_ssize_t[::1] upoffs,
):
    """Return Re tr(J+ J- rho) for a block state."""
    cdef Py_ssize_t nmax = dims.shape[0] - 1
    cdef Py_ssize_t n, r, k, l, d, w, o, uo, p
    cdef double complex acc = 0
    with nogil:
        for n in range(1, nmax + 1):
            d = dims[n]
            w = n_sites - n + 1
            o = offs[n]
            uo = upoffs[n - 1]
            for r in range(dims[n - 1]):
                for k in range(w):
                    p = up[uo + r * w + k]
                    for l in range(w):
                        acc += y[o + p * d + up[uo + r * w + l]]
    return acc.real
