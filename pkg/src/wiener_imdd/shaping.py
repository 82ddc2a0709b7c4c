"""Choice of the PAM span that minimises the analytic error-to-signal ratio."""
from dataclasses import dataclass

import numpy as np

from .channel import ConvOperator
from .constellation import Constellation, build_pam
from .errors import DomainError
from .wiener import analytic_esr

D_NORM_MIN = 1e-4
N_GRID = 33
GOLDEN_RTOL = 1e-3
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ShapingResult:
    d_norm: float
    esr: float
    constellation: Constellation


def _golden(f, a, b, rtol):
    """Golden-section search on ``[a, b]``; returns the best point evaluated."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    best = min((fc, c), (fd, d))
    while (b - a) > rtol * 0.5 * (a + b):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
            best = min(best, (fc, c))
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
            best = min(best, (fd, d))
    return best[1], best[0]


def optimize_span(
    op: ConvOperator, Q: int, p_tx_opt: float, sigma_eta2: float, objective=analytic_esr
) -> ShapingResult:
    """Minimise ``objective(op, pam, sigma_eta2)`` over ``d_norm = D/(2 p_tx_opt)``.

    A 33-point grid on ``[1e-4, 1]`` picks the basin (ties within 1e-12 go to
    the largest span); golden-section search on the neighbouring grid cells
    refines it to relative width 1e-3.
    """
    if int(Q) != Q or Q < 2:
        raise DomainError(f"PAM order must be an integer >= 2, got {Q!r}")
    if not p_tx_opt > 0:
        raise DomainError("p_tx_opt must be positive")

    def esr_at(d):
        return objective(op, build_pam(Q, p_tx_opt, 2.0 * p_tx_opt * d), sigma_eta2)

    grid = np.linspace(D_NORM_MIN, 1.0, N_GRID)
    values = np.array([esr_at(d) for d in grid])
    lowest = values.min()
    i = int(np.flatnonzero(values <= lowest + 1e-12)[-1])
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, N_GRID - 1)]
    d_ref, esr_ref = _golden(esr_at, lo, hi, GOLDEN_RTOL)
    d_best = float(d_ref) if esr_ref < values[i] else float(grid[i])
    pam = build_pam(Q, p_tx_opt, 2.0 * p_tx_opt * d_best)
    return ShapingResult(d_norm=d_best, esr=objective(op, pam, sigma_eta2), constellation=pam)
