"""Monte-Carlo link simulation, noise calibration and SNR sweeps."""
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import kernels
from .channel import Cir, ConvOperator, LinkParams, propagate
from .constellation import Constellation, build_pam, predistort
from .errors import DomainError
from .shaping import optimize_span
from .wiener import OutputStats, WienerFilter, design_filter, output_stats

log = logging.getLogger(__name__)

MIN_CLASS_SAMPLES = 100


@dataclass(frozen=True)
class PowerBudget:
    phi_max: float
    l_eff: float
    p_tx_opt: float


def launch_power(params: LinkParams, phi_max: float) -> PowerBudget:
    """Launch power keeping the Kerr phase rotation below ``phi_max``."""
    if not params.gamma_kerr > 0:
        raise DomainError("launch power constraint needs gamma > 0")
    if params.alpha > 0:
        l_eff = -math.expm1(-params.alpha * params.length) / params.alpha
    else:
        l_eff = params.length
    if not l_eff > 0:
        raise DomainError("effective length is zero (L = 0); constraint undefined")
    return PowerBudget(phi_max=phi_max, l_eff=l_eff, p_tx_opt=phi_max / (params.gamma_kerr * l_eff))


def electrical_receive_power(
    stats: OutputStats, sigma_eta2: float, n_prime: int, n_os: int = 2
) -> float:
    """Average electrical signal power per sample; ``sigma_eta2`` is the noise inside ``stats``."""
    k = stats.c_uu.shape[0]
    return float((np.trace(stats.c_uu) - k * sigma_eta2 + stats.mu_u @ stats.mu_u) / (n_prime * n_os))


def calibrate_noise(
    stats: OutputStats, target_snr_el_db: float, n_prime: int, n_os: int = 2, stats_sigma_eta2: float = 0.0
) -> float:
    p_rx = electrical_receive_power(stats, stats_sigma_eta2, n_prime, n_os)
    return p_rx / 10.0 ** (target_snr_el_db / 10.0)


def received_power(op: ConvOperator, breve: Constellation) -> float:
    """Electrical receive power when ``sqrt(breve)`` amplitudes are transmitted."""
    amp = predistort(breve)
    stats = output_stats(op, amp.mean, amp.var, amp.mu4, 0.0, mu3=amp.mu3)
    return electrical_receive_power(stats, 0.0, op.n_prime)


@dataclass(frozen=True)
class OperatingPoint:
    d_norm: float
    esr: float
    sigma_eta2: float
    snr_el_db: float
    constellation: Constellation


def shape_at_snr(
    op: ConvOperator, Q: int, p_tx_opt: float, snr_el_db: float, max_iter: int = 50, rtol: float = 1e-10
) -> OperatingPoint:
    """Jointly fix the noise level and the ESR-optimal span for a target SNR.

    The span is optimal for the noise variance, and the noise variance yields
    the target SNR for that span; iterated to a fixed point.
    """
    snr_lin = 10.0 ** (snr_el_db / 10.0)
    full = build_pam(Q, p_tx_opt, 2.0 * p_tx_opt)
    res = optimize_span(op, Q, p_tx_opt, received_power(op, full) / snr_lin)
    sigma2 = received_power(op, res.constellation) / snr_lin
    for _ in range(max_iter):
        res = optimize_span(op, Q, p_tx_opt, sigma2)
        new = received_power(op, res.constellation) / snr_lin
        done = abs(new - sigma2) <= rtol * sigma2
        sigma2 = new
        if done:
            break
    else:
        log.warning("span/noise fixed point not converged at %.2f dB", snr_el_db)
    res = optimize_span(op, Q, p_tx_opt, sigma2)
    snr = 10.0 * math.log10(received_power(op, res.constellation) / sigma2)
    return OperatingPoint(res.d_norm, res.esr, sigma2, snr, res.constellation)


@dataclass(frozen=True)
class MonteCarloResult:
    mse_prime: float
    esr_empirical: float
    esr_stderr: float
    estimates: np.ndarray
    symbols: np.ndarray


def edge_symbols(M: int, K: int) -> int:
    return max(math.ceil(M / 2), math.ceil(K / 2))


def run_monte_carlo(
    op: ConvOperator,
    cir,
    filt: WienerFilter,
    breve: Constellation,
    sigma_eta2: float,
    n_symbols: int,
    rng_seed,
) -> MonteCarloResult:
    """Stream iid symbols through the link and score the filter against ``s_breve``.

    Every variant sees the same square-root predistorted transmit stream for a
    given seed. Estimates whose observation window reaches past either end of
    the stream are dropped.
    """
    taps = np.asarray(cir.taps if isinstance(cir, Cir) else cir, dtype=np.complex128)
    K = op.K
    if np.asarray(filt.taps).shape != (K,):
        raise DomainError(f"filter has {np.asarray(filt.taps).size} taps, operator expects {K}")
    edge = edge_symbols(taps.size, K)
    if n_symbols <= 2 * edge:
        raise DomainError(f"n_symbols={n_symbols} leaves no estimate with full filter support")
    if not breve.var > 0:
        raise DomainError("ESR is undefined for a constellation with zero variance")
    rng = np.random.default_rng(rng_seed)
    idx = rng.integers(0, breve.order, size=n_symbols)
    s_breve = breve.points[idx]
    field = propagate(np.sqrt(s_breve), taps)
    n_obs = max(field.size, 2 * (n_symbols - 1) + K)
    u = np.zeros(n_obs)
    u[: field.size] = np.abs(field) ** 2
    u += math.sqrt(sigma_eta2) * rng.standard_normal(n_obs)

    est = kernels.sliding_estimate(u, np.real(filt.taps), 2, n_symbols) + np.real(filt.bias)
    keep = slice(edge, n_symbols - edge)
    est, idx, target = est[keep], idx[keep], s_breve[keep]
    sq = (est - target) ** 2
    mse = float(sq.mean())
    return MonteCarloResult(
        mse_prime=mse,
        esr_empirical=mse / breve.var,
        esr_stderr=float(sq.std() / math.sqrt(sq.size) / breve.var),
        estimates=est,
        symbols=idx,
    )


def achievable_rate_lb(estimates, symbols, Q: int) -> float:
    """Mismatched-decoding rate bound with per-symbol Gaussian auxiliary channels.

    ``symbols`` are indices into the alphabet. Each class is fit by its sample
    mean and variance (floored at 1e-12 times the spread of the class means);
    the result is clamped to ``[0, log2 Q]``.
    """
    est = np.asarray(estimates, dtype=np.float64)
    sym = np.asarray(symbols)
    if est.shape != sym.shape:
        raise DomainError("estimates and symbols must pair up")
    counts = np.bincount(sym, minlength=Q)
    if counts.size > Q or np.any(counts < MIN_CLASS_SAMPLES):
        raise DomainError(
            f"every symbol needs >= {MIN_CLASS_SAMPLES} samples for the auxiliary fit, got {counts.tolist()}"
        )
    means = np.bincount(sym, weights=est, minlength=Q) / counts
    var = np.bincount(sym, weights=(est - means[sym]) ** 2, minlength=Q) / counts
    spread = float(np.var(means))
    var = np.maximum(var, 1e-12 * spread if spread > 0 else np.finfo(float).tiny)
    # log q(est | a_j) for every candidate j
    logq = -0.5 * ((est[:, None] - means[None, :]) ** 2 / var[None, :] + np.log(2.0 * np.pi * var)[None, :])
    own = logq[np.arange(est.size), sym]
    mix = logsumexp(logq, axis=1) - math.log(Q)
    rate = float(np.mean(own - mix) / math.log(2.0))
    if rate < 0:
        log.info("auxiliary-channel rate %.3g bpcu clamped to 0", rate)
    return min(max(rate, 0.0), math.log2(Q))


@dataclass(frozen=True)
class SampleStats:
    """Sample counterparts of ``OutputStats`` with standard errors of each entry."""

    c_su: np.ndarray
    c_su_se: np.ndarray
    mu_u: np.ndarray
    mu_u_se: np.ndarray
    c_uu: np.ndarray
    c_uu_se: np.ndarray
    n_draws: int


def sample_statistics(
    op: ConvOperator,
    points,
    sigma_eta2: float,
    n_draws: int,
    rng_seed,
    squared_target: bool = False,
    block: int = 100_000,
) -> SampleStats:
    """Monte-Carlo estimate of the observation statistics of ``u = |Psi s|^2 + eta``.

    Symbols are drawn iid and uniformly from ``points``; the target is the
    symbol in ``op.target_col`` (or its square). Power sums are taken around
    the mean of the first block so that the covariance does not suffer from
    cancellation. Standard errors use the sample variance of the products.
    """
    pts = np.asarray(points, dtype=np.float64)
    if n_draws < 2:
        raise DomainError("need at least two draws")
    rng = np.random.default_rng(rng_seed)
    K, N = op.psi_mat.shape
    shift_u = None
    shift_t = 0.0
    acc = None
    done = 0
    while done < n_draws:
        v = min(block, n_draws - done)
        sym = pts[rng.integers(0, pts.size, size=(v, N))]
        noise = math.sqrt(sigma_eta2) * rng.standard_normal((v, K))
        tgt = sym[:, op.target_col] ** 2 if squared_target else sym[:, op.target_col].copy()
        if shift_u is None:
            shift_u = (np.abs(sym @ op.psi_mat.T) ** 2 + noise).mean(axis=0)
            shift_t = float(tgt.mean())
        part = kernels.accumulate_moments(op.psi_mat, sym, noise, tgt, shift_u, shift_t)
        acc = part if acc is None else tuple(a + b for a, b in zip(acc, part))
        done += v
    s_d, s_t, s_t2, s_dd, s_dd2, s_td, s_td2 = acc
    n = float(n_draws)
    d_bar = s_d / n
    e_bar = s_t / n
    m_dd = s_dd / n
    m_td = s_td / n
    c_uu = m_dd - np.outer(d_bar, d_bar)
    c_su = m_td - e_bar * d_bar
    return SampleStats(
        c_su=c_su,
        c_su_se=np.sqrt(np.maximum(s_td2 / n - m_td**2, 0.0) / n),
        mu_u=shift_u + d_bar,
        mu_u_se=np.sqrt(np.maximum(np.diag(m_dd) - d_bar**2, 0.0) / n),
        c_uu=c_uu,
        c_uu_se=np.sqrt(np.maximum(s_dd2 / n - m_dd**2, 0.0) / n),
        n_draws=n_draws,
    )


@dataclass(frozen=True)
class SweepPoint:
    snr_el_db: float
    sigma_eta2: float
    d_norm: float
    esr_analytic: float
    esr_empirical: float
    rate_bpcu: float
    variant: str
    n_symbols: int
    sweep_index: int


class SweepPointError(RuntimeError):
    def __init__(self, index, snr_el_db, exc):
        super().__init__(f"sweep point {index} ({snr_el_db} dB): {type(exc).__name__}: {exc}")
        self.index = index
        self.snr_el_db = snr_el_db
        self.cause = exc


def point_seed(master_seed: int, sweep_index: int, block_index: int = 0) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(master_seed), int(sweep_index), int(block_index)])


def simulate_point(op, cir, Q, p_tx_opt, snr_el_db, variants, n_symbols, master_seed, sweep_index):
    opp = shape_at_snr(op, Q, p_tx_opt, snr_el_db)
    rows = []
    for variant in variants:
        filt, esr_an = design_filter(variant, op, opp.constellation, opp.sigma_eta2)
        mc = run_monte_carlo(
            op, cir, filt, opp.constellation, opp.sigma_eta2, n_symbols, point_seed(master_seed, sweep_index)
        )
        rows.append(
            SweepPoint(
                snr_el_db=float(snr_el_db),
                sigma_eta2=opp.sigma_eta2,
                d_norm=opp.d_norm,
                esr_analytic=esr_an,
                esr_empirical=mc.esr_empirical,
                rate_bpcu=achievable_rate_lb(mc.estimates, mc.symbols, Q),
                variant=variant,
                n_symbols=n_symbols,
                sweep_index=sweep_index,
            )
        )
    return rows


def run_sweep(op, cir, Q, p_tx_opt, snr_grid_db, variants, n_symbols, master_seed, threads=1):
    """All (SNR, variant) rows in grid order; independent of ``threads``."""
    op.geometry  # populate the cache before workers share the operator

    def task(item):
        i, snr = item
        try:
            return simulate_point(op, cir, Q, p_tx_opt, snr, variants, n_symbols, master_seed, i)
        except Exception as exc:
            raise SweepPointError(i, snr, exc) from exc

    items = list(enumerate(snr_grid_db))
    if threads <= 1:
        chunks = [task(it) for it in items]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(task, items))
    return [row for chunk in chunks for row in chunk]
