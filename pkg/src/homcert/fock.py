"""Hong-Ou-Mandel interference of phase-randomised weak coherent pulses.

Two pulses of equal mean photon number ``mu`` meet on a 50:50 beamsplitter.
The second pulse occupies the mode ``sqrt(gamma) e1 + sqrt(1 - gamma) e_perp``
where ``e1`` is the mode of the first pulse, so ``gamma`` is the single-photon
HOM visibility. Detectors are ideal threshold detectors.

Two independent routes to the coincidence probability are provided:

* :func:`prwcp_coincidence` sums Fock-pair contributions up to a total photon
  number ``n_max``.
* :func:`prwcp_coincidence_phase_avg` averages the classical coherent-state
  click probabilities over the relative phase. It has no truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import stats

from .errors import NumericalError

DEFAULT_N_MAX = 20
DEFAULT_QUADRATURE_POINTS = 2048
MIN_QUADRATURE_POINTS = 16


@dataclass(frozen=True)
class PrwcpPair:
    """Two equal-intensity PRWCPs with single-photon mode overlap ``gamma``."""

    mu: float
    gamma: float

    def __post_init__(self):
        if not (self.mu > 0 and math.isfinite(self.mu)):
            raise ValueError(f"mu must be a positive finite number, got {self.mu!r}")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma!r}")

    @classmethod
    def from_intensities(cls, mu1: float, mu2: float, gamma: float) -> "PrwcpPair":
        # The interference model is only derived for equal intensities.
        if mu1 != mu2:
            raise ValueError(f"unequal pulse intensities are not supported ({mu1} != {mu2})")
        return cls(mu1, gamma)


@dataclass(frozen=True)
class Truncation:
    n_max: int = DEFAULT_N_MAX

    def __post_init__(self):
        if isinstance(self.n_max, bool) or not isinstance(self.n_max, (int, np.integer)):
            raise ValueError(f"n_max must be an integer, got {self.n_max!r}")
        if self.n_max < 2:
            raise ValueError(f"n_max must be >= 2, got {self.n_max}")


@dataclass(frozen=True)
class HomResult:
    p_cc: float
    p_cc_orthogonal: float
    visibility: float
    trunc_error: float


@dataclass(frozen=True)
class HomCurveRow:
    mu: float
    gamma: float
    v_sp: float
    v_prwcp: float
    trunc_error: float


def poisson_weights(mu: float, n_max: int) -> np.ndarray:
    """Photon-number distribution ``exp(-mu) mu**n / n!`` for ``n = 0..n_max``.

    The entries sum to ``1 - tail`` where ``tail`` is the Poisson mass beyond
    ``n_max``.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    if n_max < 0:
        raise ValueError(f"n_max must be non-negative, got {n_max}")
    return stats.poisson.pmf(np.arange(n_max + 1), mu)


def truncation_error(mu: float, n_max: int) -> float:
    """Probability that the two pulses together carry more than ``n_max`` photons."""
    # n + m of two independent Poisson(mu) variables is Poisson(2 mu).
    return float(stats.poisson.sf(n_max, 2.0 * mu))


def _check_gamma(gamma: float) -> None:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma!r}")


def _one_port_probability(n: int, m: int, gamma: float) -> float:
    # Sector k: k photons of pulse 2 in the shared mode e1, m - k in e_perp.
    # e1 carries n + k photons from both inputs; all exit one port with
    # probability C(n + k, k) / 2**(n + k). The e_perp photons come from a single
    # input and each picks a port independently.
    delta = 1.0 - gamma
    total = 0.0
    for k in range(m + 1):
        total += math.comb(m, k) * gamma**k * delta ** (m - k) * math.comb(n + k, k)
    return total / 2.0 ** (n + m)


def fock_coincidence(n: int, m: int, gamma: float) -> float:
    """Coincidence probability for ``n`` photons in pulse 1 and ``m`` in pulse 2.

    Both output ports must register at least one photon.
    """
    if n < 0 or m < 0:
        raise ValueError(f"photon numbers must be non-negative, got ({n}, {m})")
    _check_gamma(gamma)
    if n + m == 0:
        return 0.0
    # Port symmetry: P(port A empty) == P(port B empty).
    return 1.0 - 2.0 * _one_port_probability(n, m, gamma)


def output_distribution(n: int, m: int, gamma: float) -> dict[tuple[int, int, int, int], float]:
    """Full photon-number distribution over the four output modes.

    Keys are ``(c_e1, d_e1, c_perp, d_perp)`` occupation numbers for output
    ports ``c`` and ``d``. Obtained by expanding the input creation operators
    through the beamsplitter one photon at a time, so it is exponential in
    ``n + m``; intended for small photon numbers.
    """
    if n < 0 or m < 0:
        raise ValueError(f"photon numbers must be non-negative, got ({n}, {m})")
    _check_gamma(gamma)
    r = 1.0 / math.sqrt(2.0)
    # a1_e1^+ -> (c_e1^+ + d_e1^+)/sqrt2 ; a2_x^+ -> (c_x^+ - d_x^+)/sqrt2
    port1 = {(1, 0, 0, 0): r, (0, 1, 0, 0): r}
    port2 = {
        (1, 0, 0, 0): math.sqrt(gamma) * r,
        (0, 1, 0, 0): -math.sqrt(gamma) * r,
        (0, 0, 1, 0): math.sqrt(1.0 - gamma) * r,
        (0, 0, 0, 1): -math.sqrt(1.0 - gamma) * r,
    }
    poly = {(0, 0, 0, 0): 1.0 / math.sqrt(math.factorial(n) * math.factorial(m))}
    for linear in [port1] * n + [port2] * m:
        nxt: dict[tuple[int, int, int, int], float] = {}
        for mono, coeff in poly.items():
            for step, c in linear.items():
                key = tuple(a + b for a, b in zip(mono, step))
                nxt[key] = nxt.get(key, 0.0) + coeff * c
        poly = nxt
    out = {}
    for mono, coeff in poly.items():
        norm = math.prod(math.factorial(k) for k in mono)
        out[mono] = coeff * coeff * norm
    return out


@lru_cache(maxsize=256)
def _coincidence_matrix(n_max: int, gamma: float) -> np.ndarray:
    table = np.zeros((n_max + 1, n_max + 1))
    for n in range(n_max + 1):
        for m in range(n_max + 1 - n):
            table[n, m] = fock_coincidence(n, m, gamma)
    table.setflags(write=False)
    return table


def prwcp_coincidence(pair: PrwcpPair, trunc: Truncation = Truncation()) -> float:
    """Coincidence probability from the Fock expansion, ``n + m <= n_max``."""
    p = poisson_weights(pair.mu, trunc.n_max)
    table = _coincidence_matrix(trunc.n_max, float(pair.gamma))
    # table is zero outside the triangle n + m <= n_max
    return float(p @ table @ p)


def prwcp_coincidence_phase_avg(
    pair: PrwcpPair, quadrature_points: int = DEFAULT_QUADRATURE_POINTS
) -> float:
    """Coincidence probability from the phase-averaged coherent-state picture.

    Uses the periodic trapezoidal rule, which converges spectrally for this
    smooth periodic integrand.
    """
    if quadrature_points < MIN_QUADRATURE_POINTS:
        raise ValueError(
            f"need at least {MIN_QUADRATURE_POINTS} quadrature points, got {quadrature_points}"
        )
    phi = 2.0 * np.pi * np.arange(quadrature_points) / quadrature_points
    s = math.sqrt(pair.gamma) * np.cos(phi)
    i3 = pair.mu * (1.0 + s)
    i4 = pair.mu * (1.0 - s)
    return float(np.mean(-np.expm1(-i3) * -np.expm1(-i4)))


def hom_visibility(pair: PrwcpPair, trunc: Truncation = Truncation()) -> HomResult:
    p_cc = prwcp_coincidence(pair, trunc)
    p_orth = prwcp_coincidence(PrwcpPair(pair.mu, 0.0), trunc)
    if not p_orth > 0.0:
        raise NumericalError(f"coincidence probability underflows to zero at mu={pair.mu!r}")
    return HomResult(
        p_cc=p_cc,
        p_cc_orthogonal=p_orth,
        visibility=(p_orth - p_cc) / p_orth,
        trunc_error=truncation_error(pair.mu, trunc.n_max),
    )


def visibility_small_mu(gamma: float) -> float:
    """Low-intensity limit of the PRWCP visibility: half the single-photon value."""
    _check_gamma(gamma)
    return gamma / 2.0


def hom_curve(mu_list, gamma_grid, trunc: Truncation = Truncation()) -> list[HomCurveRow]:
    """Visibility table over ``mu_list x gamma_grid`` in row-major order."""
    mu_list = list(mu_list)
    gamma_grid = list(gamma_grid)
    if not mu_list or not gamma_grid:
        raise ValueError("mu_list and gamma_grid must be non-empty")
    rows = []
    for mu in mu_list:
        for gamma in gamma_grid:
            res = hom_visibility(PrwcpPair(float(mu), float(gamma)), trunc)
            rows.append(HomCurveRow(float(mu), float(gamma), float(gamma), res.visibility, res.trunc_error))
    return rows
