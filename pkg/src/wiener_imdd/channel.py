"""Dispersive fiber channel: impulse response, convolution operator, forward model."""
import csv
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import signal

from . import kernels
from .errors import DomainError, ResolutionError

CIR_SCHEMA = "wiener-imdd/cir/v1"


@dataclass(frozen=True)
class LinkParams:
    """Fiber and transceiver parameters (SSMF at 1550 nm by default).

    ``baud`` is both the symbol rate and the two-sided transmit bandwidth.
    """

    beta2: float = -2.168e-23  # s^2/km
    alpha: float = 0.046  # 1/km
    gamma_kerr: float = 1.27  # 1/(W km)
    length: float = 20.0  # km
    baud: float = 27e9  # 1/s
    n_os: int = 2

    def __post_init__(self):
        if self.length < 0:
            raise DomainError("fiber length must be nonnegative")
        if self.alpha < 0 or self.gamma_kerr < 0:
            raise DomainError("alpha and gamma must be nonnegative")
        if not self.baud > 0:
            raise DomainError("baud rate must be positive")
        if int(self.n_os) != self.n_os or self.n_os < 1:
            raise DomainError("oversampling factor must be a positive integer")

    @property
    def symbol_period(self) -> float:
        return 1.0 / self.baud

    @property
    def sample_period(self) -> float:
        return 1.0 / (self.baud * self.n_os)


def cd_frequency_response(params: LinkParams, freqs) -> np.ndarray:
    """All-pass chromatic dispersion response ``exp(+j beta2/2 omega^2 L)``."""
    omega = 2.0 * np.pi * np.asarray(freqs, dtype=np.float64)
    return np.exp(1j * (params.beta2 / 2.0) * omega**2 * params.length)


@dataclass(frozen=True)
class Cir:
    """Sampled combined impulse response of the sinc transmit filter and dispersion.

    ``taps[m]`` is the response at time ``(m - center_index) * sample_period``.
    ``energy`` is the sum of squared tap magnitudes over the full grid window,
    before truncation.
    """

    taps: np.ndarray
    sample_period: float
    center_index: int
    energy: float

    @property
    def M(self) -> int:
        return int(self.taps.size)

    @property
    def times(self) -> np.ndarray:
        return (np.arange(self.M) - self.center_index) * self.sample_period


def _dense_cir(params: LinkParams, n_fft: int) -> np.ndarray:
    """Untruncated CIR samples on ``kappa = -n_fft/2 .. n_fft/2 - 1``.

    Evaluates the inverse Fourier integral of ``H(L, f) * G_tx(f)`` by a
    Riemann sum with half weights at the band edges; ``G_tx`` is the
    brick-wall spectrum ``1/B`` on ``|f| <= B/2`` of the unit-peak sinc.
    """
    B = params.baud
    df = params.n_os * B / n_fft
    f = (np.arange(n_fft) - n_fft // 2) * df
    edge = np.isclose(np.abs(f), B / 2.0, rtol=0.0, atol=1e-9 * df)
    weight = np.where(np.abs(f) < B / 2.0, 1.0, 0.0)
    weight[edge] = 0.5
    spectrum = weight * cd_frequency_response(params, f) / B
    psi = np.fft.fftshift(np.fft.ifft(np.fft.ifftshift(spectrum))) * (n_fft * df)
    return psi


def sample_cir(params: LinkParams, truncation_rel: float = 0.01, n_fft: int = 2**14) -> Cir:
    """Sample the CIR at ``T_s / n_os`` and trim small leading/trailing taps.

    Taps below ``truncation_rel * max|psi|`` are removed from both ends; the
    interior is kept intact (it contains the zero crossings of the sinc).
    """
    if not 0.0 < truncation_rel <= 1.0:
        raise DomainError("truncation_rel must lie in (0, 1]")
    if n_fft < 16 or n_fft % (2 * params.n_os):
        raise DomainError("n_fft must be a multiple of 2*n_os and at least 16")
    psi = _dense_cir(params, n_fft)
    mag = np.abs(psi)
    peak = int(np.argmax(mag))
    keep = np.flatnonzero(mag >= truncation_rel * mag[peak])
    first, last = int(keep[0]), int(keep[-1])
    if first < n_fft // 4 or last >= n_fft - n_fft // 4:
        raise ResolutionError(
            f"CIR does not decay below {truncation_rel:g} of its peak inside the "
            f"central half of a {n_fft}-point grid; increase n_fft"
        )
    taps = psi[first : last + 1].copy()
    taps.setflags(write=False)
    return Cir(
        taps=taps,
        sample_period=params.sample_period,
        center_index=peak - first,
        energy=float(np.sum(mag**2)),
    )


def write_cir_csv(cir: Cir, fh) -> None:
    """Write ``index, tap_real, tap_imag, tap_abs`` rows with ``#`` metadata."""
    fh.write(f"# schema: {CIR_SCHEMA}\n")
    fh.write(f"# M: {cir.M}\n")
    fh.write(f"# sample_period_s: {cir.sample_period!r}\n")
    fh.write(f"# center_index: {cir.center_index}\n")
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["index", "tap_real", "tap_imag", "tap_abs"])
    for i, tap in enumerate(cir.taps):
        writer.writerow([i, repr(float(tap.real)), repr(float(tap.imag)), repr(float(abs(tap)))])


@dataclass(frozen=True)
class Geometry:
    """Moment-independent products of the decimated operator (see ``kernels.gram_terms``)."""

    w: np.ndarray
    z: np.ndarray
    q4: np.ndarray
    hg: np.ndarray
    xre: np.ndarray
    y3: np.ndarray


@dataclass(frozen=True)
class ConvOperator:
    """Parity-decimated convolution matrix mapping symbols to field samples.

    Row ``k`` produces the field at sample ``kappa + k`` for an even estimation
    instant ``kappa``; column ``j`` multiplies the symbol sent at
    ``kappa + 2*(j - m_prime)``, so ``target_col == m_prime`` is the symbol
    being estimated.
    """

    psi_mat: np.ndarray
    M: int
    K: int
    kept_cols: np.ndarray

    @property
    def m_prime(self) -> int:
        return (self.M - 1) // 2

    @property
    def k_prime(self) -> int:
        return (self.K - 1) // 2

    @property
    def n_prime(self) -> int:
        return self.psi_mat.shape[1]

    @property
    def target_col(self) -> int:
        return self.m_prime

    @cached_property
    def geometry(self) -> Geometry:
        return Geometry(*kernels.gram_terms(self.psi_mat))


def build_conv_operator(cir, K: int, n_os: int = 2) -> ConvOperator:
    """Stack shifted reversed CIRs into ``Psi'`` and keep even-offset columns."""
    if n_os != 2:
        raise DomainError("only n_os = 2 gives white sampled noise; other values are not supported")
    taps = np.asarray(cir.taps if isinstance(cir, Cir) else cir, dtype=np.complex128).reshape(-1)
    M = taps.size
    if M == 0:
        raise DomainError("empty CIR")
    if int(K) != K or K < 1:
        raise DomainError(f"K must be a positive integer, got {K!r}")
    K = int(K)
    N = K + M - 1
    full = np.zeros((K, N), dtype=np.complex128)
    rev = taps[::-1]
    for k in range(K):
        full[k, k : k + M] = rev
    kept = np.arange((M - 1) % 2, N, 2)
    psi_mat = np.ascontiguousarray(full[:, kept])
    psi_mat.setflags(write=False)
    kept.setflags(write=False)
    return ConvOperator(psi_mat=psi_mat, M=M, K=K, kept_cols=kept)


def forward_simulate(op: ConvOperator, symbols, sigma_eta2: float, rng_seed) -> np.ndarray:
    """One observation vector ``|Psi s|^2 + eta`` with white Gaussian ``eta``."""
    s = np.asarray(symbols, dtype=np.float64).reshape(-1)
    if s.size != op.n_prime:
        raise DomainError(f"expected {op.n_prime} symbols, got {s.size}")
    if np.any(s < 0):
        raise DomainError("intensity modulation needs nonnegative symbols")
    if sigma_eta2 < 0:
        raise DomainError("noise variance must be nonnegative")
    rng = np.random.default_rng(rng_seed)
    noise = np.sqrt(sigma_eta2) * rng.standard_normal(op.K)
    return np.abs(op.psi_mat @ s) ** 2 + noise


def upsample(symbols, n_os: int = 2) -> np.ndarray:
    """Zero-insertion upsampling: symbol ``nu`` lands on sample ``n_os * nu``."""
    s = np.asarray(symbols, dtype=np.float64)
    out = np.zeros(s.size * n_os)
    out[::n_os] = s
    return out


def propagate(symbols, taps, n_os: int = 2) -> np.ndarray:
    """Noise-free field samples ``sum_m psi[m] s'[n - m]`` (full convolution, overlap-add)."""
    up = upsample(symbols, n_os)
    taps = np.asarray(taps, dtype=np.complex128)
    if up.size == 0:
        return np.zeros(max(taps.size - 1, 0), dtype=np.complex128)
    return signal.oaconvolve(up, taps)
