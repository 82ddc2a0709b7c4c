"""Pure-Python (numpy/scipy) implementations of the hot kernels.

These are vectorised matrix forms; the compiled module ``_kernels`` carries
explicit-loop versions of the same functions.
"""
import numpy as np
from scipy import signal


def gram_terms(psi_mat):
    """Operator-only building blocks of the observation statistics.

    Returns
    -------
    w : (K,) complex
        Row sums ``Psi @ 1``.
    z : (K,) float
        Row energies ``|Psi|^2 @ 1``.
    q4 : (K, K) float
        ``|Psi|^2 @ (|Psi|^2).T``.
    hg : (K, K) float
        ``|Psi Psi^H|^2 + |Psi Psi^T|^2`` (element-wise squares).
    xre : (K, K) float
        ``2 Re{diag(w*) Psi Psi^T diag(w*)} + 2 Re{diag(w*) Psi Psi^H diag(w)}``.
    y3 : (K, K) float
        ``R @ (|Psi|^2).T + |Psi|^2 @ R.T`` with ``R = Re{diag(w*) Psi}``;
        multiplies the third central moment for skewed symbol laws.
    """
    psi = np.asarray(psi_mat, dtype=np.complex128)
    w = psi.sum(axis=1)
    a2 = np.abs(psi) ** 2
    z = a2.sum(axis=1)
    gh = psi @ psi.conj().T
    gt = psi @ psi.T
    wc = w.conj()
    q4 = a2 @ a2.T
    hg = np.abs(gh) ** 2 + np.abs(gt) ** 2
    xre = 2.0 * np.real(wc[:, None] * gt * wc[None, :]) + 2.0 * np.real(
        wc[:, None] * gh * w[None, :]
    )
    r = np.real(wc[:, None] * psi)
    y3 = r @ a2.T + a2 @ r.T
    return w, z, q4, hg, xre, y3


def sliding_estimate(u, g, step, n_out):
    """``out[n] = sum_k g[k] * u[n*step + k]``, via overlap-add FFT convolution."""
    u = np.asarray(u, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    K = g.shape[0]
    if n_out < 0 or (n_out > 0 and (n_out - 1) * step + K > u.shape[0]):
        raise ValueError("observation stream too short for the requested estimates")
    if n_out == 0:
        return np.empty(0)
    full = signal.oaconvolve(u, g[::-1])
    return np.ascontiguousarray(full[K - 1 :: step][:n_out])


def accumulate_moments(psi_mat, symbols, noise, targets, shift_u, shift_t):
    """Power sums of ``d = u - shift_u`` and ``e = targets - shift_t``.

    ``u = |Psi s|^2 + noise`` row by row. Returns
    ``(sum d, sum e, sum e^2, sum d d^T, sum (d d^T)^2, sum e d, sum (e d)^2)``.
    """
    psi = np.asarray(psi_mat, dtype=np.complex128)
    symbols = np.asarray(symbols, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    K, N = psi.shape
    V = symbols.shape[0]
    if symbols.shape[1] != N or noise.shape != (V, K) or targets.shape != (V,):
        raise ValueError("shape mismatch between operator, symbols, noise and targets")
    d = np.abs(symbols @ psi.T) ** 2 + noise - np.asarray(shift_u, dtype=np.float64)
    e = targets - shift_t
    dd = d[:, :, None] * d[:, None, :]
    ed = e[:, None] * d
    return (
        d.sum(axis=0),
        float(e.sum()),
        float(e @ e),
        dd.sum(axis=0),
        (dd * dd).sum(axis=0),
        ed.sum(axis=0),
        (ed * ed).sum(axis=0),
    )
