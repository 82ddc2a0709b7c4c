"""Second-order statistics of square-law observations and affine MMSE filters.

For iid symbols ``s`` with mean ``mu``, central moments ``var``, ``mu3``,
``mu4`` and observations ``u = |Psi s|^2 + eta`` the mean, covariance and
cross-covariance of ``u`` are polynomial in the moments; with ``mu3 = 0``
(symmetric law) they reduce to the usual closed forms.
"""
import csv
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .channel import ConvOperator
from .constellation import Constellation, predistort, taylor_coeffs
from .errors import DomainError, SingularityError

FILTER_SCHEMA = "wiener-imdd/filter/v1"
VARIANTS = ("matched", "mismatched", "naive")


@dataclass(frozen=True)
class OutputStats:
    c_su: np.ndarray
    mu_u: np.ndarray
    c_uu: np.ndarray
    w: np.ndarray
    z: np.ndarray


@dataclass(frozen=True)
class WienerFilter:
    """Affine estimator ``s_hat = taps @ u + bias``.

    ``naive`` filters carry complex taps and bias; only the real part of their
    estimate is used.
    """

    taps: np.ndarray
    bias: complex
    variant: str

    def apply(self, u):
        """Estimate from one observation vector or a stack of them (last axis K)."""
        est = np.asarray(u) @ self.taps + self.bias
        return np.real(est) if self.variant == "naive" else est


def cross_covariance(op: ConvOperator, mu_s: float, sigma_s2: float, mu3: float = 0.0):
    """Covariance between the target symbol and each observation."""
    geo = op.geometry
    col = op.psi_mat[:, op.target_col]
    return 2.0 * sigma_s2 * mu_s * np.real(col * geo.w.conj()) + mu3 * np.abs(col) ** 2


def squared_cross_covariance(op: ConvOperator, mu_s, sigma_s2, mu3, mu4):
    """Covariance between the *squared* target symbol and each observation.

    Needed when the amplitude symbols are square roots of the intensity levels
    being estimated.
    """
    geo = op.geometry
    col = op.psi_mat[:, op.target_col]
    r = np.real(col * geo.w.conj())
    a2 = np.abs(col) ** 2
    lin = 2.0 * mu_s * sigma_s2 * r + mu3 * a2
    return 2.0 * mu_s * lin + 2.0 * mu_s * mu3 * r + (mu4 - sigma_s2**2) * a2


def output_mean(op: ConvOperator, mu_s: float, sigma_s2: float):
    geo = op.geometry
    return sigma_s2 * geo.z + mu_s**2 * np.abs(geo.w) ** 2


def output_covariance(op: ConvOperator, mu_s, sigma_s2, mu4, sigma_eta2, mu3=0.0):
    """Observation covariance.

    Assembled in centred form: the ``z z^T``, ``z |w|^2`` and ``|w|^2 |w|^2``
    products of the raw second moment cancel against ``mu_u mu_u^T`` exactly
    and are never formed.
    """
    geo = op.geometry
    s4 = sigma_s2**2
    c = (
        (mu4 - 3.0 * s4) * geo.q4
        + s4 * geo.hg
        + sigma_s2 * mu_s**2 * geo.xre
        + 2.0 * mu_s * mu3 * geo.y3
    )
    c = 0.5 * (c + c.T)
    c[np.diag_indices_from(c)] += sigma_eta2
    return c


def output_stats(op: ConvOperator, mu_s, sigma_s2, mu4, sigma_eta2, mu3=0.0) -> OutputStats:
    geo = op.geometry
    return OutputStats(
        c_su=cross_covariance(op, mu_s, sigma_s2, mu3),
        mu_u=output_mean(op, mu_s, sigma_s2),
        c_uu=output_covariance(op, mu_s, sigma_s2, mu4, sigma_eta2, mu3),
        w=geo.w,
        z=geo.z,
    )


def _solve(c_mat, rhs):
    """``c_mat^-1 rhs`` for a Hermitian positive definite ``c_mat``.

    Cholesky first; on failure a jittered pivoted LU. A zero right-hand side
    short-circuits to zero, which is the minimum-norm solution.
    """
    rhs = np.asarray(rhs)
    if not (np.all(np.isfinite(c_mat)) and np.all(np.isfinite(rhs))):
        raise SingularityError("observation statistics are not finite")
    if not np.any(rhs):
        return np.zeros_like(rhs)
    try:
        return linalg.cho_solve(linalg.cho_factor(c_mat, lower=True), rhs)
    except linalg.LinAlgError:
        pass
    K = c_mat.shape[0]
    jitter = 1e-12 * abs(np.trace(c_mat)) / K
    if not jitter > 0:
        raise SingularityError("observation covariance is zero; the filter is undefined")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", linalg.LinAlgWarning)
            x = linalg.solve(c_mat + jitter * np.eye(K), rhs)
    except (linalg.LinAlgError, linalg.LinAlgWarning) as exc:
        raise SingularityError(f"observation covariance is singular: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SingularityError("observation covariance is singular")
    return x


def solve_wf(stats: OutputStats, mu_s: float) -> WienerFilter:
    """Wiener filter ``g = C_uu^-1 c_su``, ``g_m = mu_s - g @ mu_u``."""
    g = _solve(stats.c_uu, stats.c_su)
    return WienerFilter(taps=g, bias=float(mu_s - g @ stats.mu_u), variant="matched")


def _substituted_stats(op, breve: Constellation, sigma_eta2):
    tc = taylor_coeffs(breve.mean)
    mu = tc.t_alpha * breve.mean + tc.t_beta
    var = tc.t_alpha**2 * breve.var
    mu4 = tc.t_alpha**4 * breve.mu4
    return tc, output_stats(op, mu, var, mu4, sigma_eta2)


def mismatched_wf(op: ConvOperator, breve: Constellation, sigma_eta2: float) -> WienerFilter:
    """Filter for square-root predistorted symbols under a linearised square root.

    The amplitude law is replaced by ``t_alpha * s_breve + t_beta``; the
    resulting taps are rescaled by ``1/t_alpha`` to estimate ``s_breve``.
    """
    tc, stats = _substituted_stats(op, breve, sigma_eta2)
    x = _solve(stats.c_uu, stats.c_su)
    g = x / tc.t_alpha
    return WienerFilter(taps=g, bias=float(breve.mean - g @ stats.mu_u), variant="mismatched")


def analytic_esr(op: ConvOperator, breve: Constellation, sigma_eta2: float) -> float:
    """Error-to-signal ratio ``MSE'/var_breve`` predicted under the linearised square root."""
    if not breve.var > 0:
        raise DomainError("ESR is undefined for a constellation with zero variance")
    tc, stats = _substituted_stats(op, breve, sigma_eta2)
    x = _solve(stats.c_uu, stats.c_su)
    return float(1.0 - (stats.c_su @ x) / (tc.t_alpha**2 * breve.var))


def _exact_predistorted(op, breve, sigma_eta2):
    amp = predistort(breve)
    c = squared_cross_covariance(op, amp.mean, amp.var, amp.mu3, amp.mu4)
    mu_u = output_mean(op, amp.mean, amp.var)
    c_uu = output_covariance(op, amp.mean, amp.var, amp.mu4, sigma_eta2, amp.mu3)
    return c, mu_u, c_uu


def matched_wf(op: ConvOperator, breve: Constellation, sigma_eta2: float) -> WienerFilter:
    """Exact affine MMSE estimate of ``s_breve`` when ``sqrt(s_breve)`` is transmitted.

    Uses the true moments (including the third) of the square-rooted alphabet,
    so no linearisation is involved.
    """
    c, mu_u, c_uu = _exact_predistorted(op, breve, sigma_eta2)
    g = _solve(c_uu, c)
    return WienerFilter(taps=g, bias=float(breve.mean - g @ mu_u), variant="matched")


def matched_esr(op: ConvOperator, breve: Constellation, sigma_eta2: float) -> float:
    if not breve.var > 0:
        raise DomainError("ESR is undefined for a constellation with zero variance")
    c, _, c_uu = _exact_predistorted(op, breve, sigma_eta2)
    return float(1.0 - (c @ _solve(c_uu, c)) / breve.var)


def _naive_terms(op, breve, sigma_eta2):
    psi = op.psi_mat
    c_uu = breve.var * (psi @ psi.conj().T)
    c_uu[np.diag_indices_from(c_uu)] += sigma_eta2
    c_su = breve.var * psi[:, op.target_col].conj()
    mu_u = breve.mean * psi.sum(axis=1)
    return c_su, mu_u, c_uu


def naive_wf(op: ConvOperator, breve: Constellation, sigma_eta2: float) -> WienerFilter:
    """Wiener filter of the linear model ``u = Psi s_breve + eta`` (complex taps)."""
    c_su, mu_u, c_uu = _naive_terms(op, breve, sigma_eta2)
    # g^T = c_su C^-1  <=>  C^T g = c_su, and C^T = conj(C) for Hermitian C
    g = _solve(c_uu.conj(), c_su)
    return WienerFilter(taps=g, bias=complex(breve.mean - g @ mu_u), variant="naive")


def naive_model_esr(op: ConvOperator, breve: Constellation, sigma_eta2: float) -> float:
    """ESR the linear model predicts for itself (not the true one on the square-law link)."""
    if not breve.var > 0:
        raise DomainError("ESR is undefined for a constellation with zero variance")
    c_su, _, c_uu = _naive_terms(op, breve, sigma_eta2)
    g = _solve(c_uu.conj(), c_su)
    return float(1.0 - np.real(g @ c_su.conj()) / breve.var)


def design_filter(variant: str, op: ConvOperator, breve: Constellation, sigma_eta2: float):
    """Return ``(filter, analytic_esr)`` for one of ``VARIANTS``."""
    if variant == "matched":
        return matched_wf(op, breve, sigma_eta2), matched_esr(op, breve, sigma_eta2)
    if variant == "mismatched":
        return mismatched_wf(op, breve, sigma_eta2), analytic_esr(op, breve, sigma_eta2)
    if variant == "naive":
        return naive_wf(op, breve, sigma_eta2), naive_model_esr(op, breve, sigma_eta2)
    raise DomainError(f"unknown filter variant {variant!r}; expected one of {VARIANTS}")


def write_filter_csv(filt: WienerFilter, fh, meta=None) -> None:
    """Taps as ``tap_index, g_value, g_value_imag`` rows; bias in the header."""
    bias = complex(filt.bias)
    fh.write(f"# schema: {FILTER_SCHEMA}\n")
    fh.write(f"# variant: {filt.variant}\n")
    fh.write(f"# g_m: {bias.real!r}\n")
    fh.write(f"# g_m_imag: {bias.imag!r}\n")
    for key, value in (meta or {}).items():
        fh.write(f"# {key}: {value}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["tap_index", "g_value", "g_value_imag"])
    for i, g in enumerate(np.asarray(filt.taps, dtype=np.complex128)):
        writer.writerow([i, repr(float(g.real)), repr(float(g.imag))])
