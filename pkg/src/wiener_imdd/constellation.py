"""Unipolar PAM alphabets with uniform probabilities."""
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError


def _central_moments(points):
    pts = np.asarray(points, dtype=np.float64)
    mean = float(pts.mean())
    x = pts - mean
    return mean, float(np.mean(x**2)), float(np.mean(x**3)), float(np.mean(x**4))


@dataclass(frozen=True)
class Constellation:
    """Equiprobable real alphabet and its cached moments.

    ``var``, ``mu3`` and ``mu4`` are the second, third and fourth central
    moments under the uniform PMF.
    """

    points: np.ndarray
    mean: float = field(init=False)
    var: float = field(init=False)
    mu3: float = field(init=False)
    mu4: float = field(init=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64).reshape(-1)
        if pts.size == 0:
            raise DomainError("constellation needs at least one point")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        mean, var, mu3, mu4 = _central_moments(pts)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)
        object.__setattr__(self, "mu3", mu3)
        object.__setattr__(self, "mu4", mu4)

    @property
    def order(self) -> int:
        return int(self.points.size)

    @property
    def prob(self) -> np.ndarray:
        return np.full(self.order, 1.0 / self.order)

    @property
    def power(self) -> float:
        """Second raw moment ``var + mean**2``."""
        return self.var + self.mean**2

    def moments(self):
        """Recompute ``(mean, var, mu3, mu4)`` from the points."""
        return _central_moments(self.points)


@dataclass(frozen=True)
class TaylorCoeffs:
    """First-order expansion ``sqrt(x) ~ t_alpha * x + t_beta`` around a mean."""

    t_alpha: float
    t_beta: float


def build_pam(Q: int, p_tx_opt: float, span: float) -> Constellation:
    """Equally spaced unipolar PAM with mean ``p_tx_opt`` and span ``span``.

    Points are ``p_tx_opt - span/2 + i*span/(Q-1)`` for ``i = 0..Q-1``; the
    span is limited to ``2*p_tx_opt`` so that every point is nonnegative.
    """
    if int(Q) != Q or Q < 2:
        raise DomainError(f"PAM order must be an integer >= 2, got {Q!r}")
    if not p_tx_opt > 0:
        raise DomainError(f"p_tx_opt must be positive, got {p_tx_opt!r}")
    if not 0.0 <= span <= 2.0 * p_tx_opt:
        raise DomainError(f"span must lie in [0, 2*p_tx_opt], got {span!r}")
    Q = int(Q)
    pts = p_tx_opt - span / 2.0 + np.arange(Q) * (span / (Q - 1))
    # rounding can push the lowest point a hair below zero at full span
    pts = np.maximum(pts, 0.0)
    return Constellation(pts)


def predistort(c: Constellation) -> Constellation:
    """Element-wise square root of the alphabet (amplitude-domain symbols)."""
    if np.any(c.points < 0):
        raise DomainError("square-root predistortion needs nonnegative points")
    return Constellation(np.sqrt(c.points))


def taylor_coeffs(mean_breve: float) -> TaylorCoeffs:
    if not mean_breve > 0:
        raise DomainError(f"Taylor expansion of sqrt needs a positive mean, got {mean_breve!r}")
    root = np.sqrt(mean_breve)
    return TaylorCoeffs(t_alpha=float(0.5 / root), t_beta=float(0.5 * root))
