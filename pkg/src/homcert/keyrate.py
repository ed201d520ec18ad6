"""Asymptotic decoy-state BB84 key rate with a basis-imbalance correction.

Signal, weak decoy and vacuum intensities. The imbalance ``delta`` is first
rescaled for an eavesdropper who replaces the lossy fibre with a lossless one,
then folded into the single-photon phase-error bound.

The array helpers (``_rate_arrays`` and friends) broadcast over intensities so
the grid search runs in one numpy pass; the public scalar functions wrap them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .leakage import imbalance_uniform

VARIANTS = ("paper", "additive")
MAX_DISTANCE_TOL_KM = 1e-3


@dataclass(frozen=True)
class ChannelModel:
    alpha_db_per_km: float = 0.2
    bob_loss_db: float = 3.0
    detector_efficiency: float = 0.25
    optical_error: float = 0.01
    dark_count_prob: float = 1e-5
    f_ec: float = 1.2
    e0: float = 0.5

    def __post_init__(self):
        if self.alpha_db_per_km < 0 or self.bob_loss_db < 0:
            raise ValueError("attenuation and receiver loss must be non-negative")
        if not 0.0 < self.detector_efficiency <= 1.0:
            raise ValueError(f"detector_efficiency must lie in (0, 1], got {self.detector_efficiency}")
        for name in ("optical_error", "dark_count_prob", "e0"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")
        if self.f_ec < 1.0:
            raise ValueError(f"f_ec must be >= 1, got {self.f_ec}")


@dataclass(frozen=True)
class Intensities:
    signal: float
    decoy: float
    vacuum: float = field(default=0.0, init=False)

    def __post_init__(self):
        if not 0.0 < self.decoy < self.signal:
            raise ValueError(f"need 0 < decoy < signal, got decoy={self.decoy}, signal={self.signal}")


@dataclass(frozen=True)
class DecoyBounds:
    y1_lower: float
    e1_upper: float
    q_signal: float
    e_signal: float
    feasible: bool


@dataclass(frozen=True)
class KeyRatePoint:
    distance_km: float
    intensities: Intensities | None
    y1_lower: float
    e1_upper: float
    delta_prime: float
    e1_corrected: float
    key_rate: float


@dataclass(frozen=True)
class IntensityGrid:
    """Signal in ``{step, 2 step, ..., signal_max}``, decoy on its own lattice below the signal."""

    signal_step: float = 0.01
    signal_max: float = 1.0
    decoy_step: float = 0.01

    def __post_init__(self):
        if not (self.signal_step > 0 and self.decoy_step > 0):
            raise ValueError("grid steps must be positive")
        if not 0 < self.signal_max <= 1.0:
            raise ValueError(f"signal_max must lie in (0, 1], got {self.signal_max}")

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened ``(signal, decoy)`` arrays, signal-major, both ascending.

        Values are rounded to 10 decimals so nested grids share exact points.
        """
        n_s = int(math.floor(self.signal_max / self.signal_step + 1e-9))
        signal = np.round(self.signal_step * np.arange(1, n_s + 1), 10)
        n_d = int(math.floor(self.signal_max / self.decoy_step + 1e-9))
        decoy = np.round(self.decoy_step * np.arange(1, n_d + 1), 10)
        s, d = np.meshgrid(signal, decoy, indexing="ij")
        keep = d < s
        return s[keep], d[keep]


def binary_entropy(x):
    """Binary Shannon entropy in bits, ``h(0) = h(1) = 0``. Accepts arrays."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or np.any(np.isnan(arr)):
        raise ValueError("binary entropy argument must lie in [0, 1]")
    inner = (arr > 0) & (arr < 1)
    safe = np.where(inner, arr, 0.5)
    h = np.where(inner, -safe * np.log2(safe) - (1 - safe) * np.log2(1 - safe), 0.0)
    return float(h) if h.ndim == 0 else h


def channel_transmittance(distance_km: float, model: ChannelModel) -> tuple[float, float]:
    """Return ``(eta_channel, eta_bob)``; the end-to-end transmittance is their product."""
    if distance_km < 0:
        raise ValueError(f"distance must be non-negative, got {distance_km}")
    eta_channel = 10.0 ** (-model.alpha_db_per_km * distance_km / 10.0)
    eta_bob = 10.0 ** (-model.bob_loss_db / 10.0) * model.detector_efficiency
    return eta_channel, eta_bob


def gain_qber(intensity, eta_total: float, model: ChannelModel):
    """Expected gain ``Q`` and error rate ``E`` for a coherent-state intensity."""
    intensity = np.asarray(intensity, dtype=float)
    if np.any(intensity < 0):
        raise ValueError("intensity must be non-negative")
    y0 = model.dark_count_prob
    detected = -np.expm1(-eta_total * intensity)
    q = y0 + detected
    eq = model.e0 * y0 + model.optical_error * detected
    with np.errstate(divide="ignore", invalid="ignore"):
        e = np.where(q > 0, eq / np.where(q > 0, q, 1.0), model.e0)
    if q.ndim == 0:
        return float(q), float(e)
    return q, e


def _decoy_bound_arrays(mu, nu, q_mu, q_nu, e_nu, y0, e0):
    y1 = (mu / (mu * nu - nu**2)) * (
        q_nu * np.exp(nu) - q_mu * np.exp(mu) * nu**2 / mu**2 - (mu**2 - nu**2) / mu**2 * y0
    )
    feasible = y1 > 0
    y1 = np.clip(y1, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        e1 = (e_nu * q_nu * np.exp(nu) - e0 * y0) / (y1 * nu)
    e1 = np.where(feasible, np.clip(e1, 0.0, 1.0), 1.0)
    return y1, e1, feasible


def decoy_bounds(
    signal: tuple[float, float],
    decoy: tuple[float, float],
    vacuum: tuple[float, float],
    intensities: Intensities,
    e0: float = 0.5,
) -> DecoyBounds:
    """Vacuum + weak decoy bounds on the single-photon yield and error rate.

    Each statistics argument is a ``(gain, error_rate)`` pair as returned by
    :func:`gain_qber`. ``feasible`` is False when the yield bound is not positive,
    in which case no key can be extracted.
    """
    (q_mu, e_mu), (q_nu, e_nu), (y0, _) = signal, decoy, vacuum
    y1, e1, ok = _decoy_bound_arrays(intensities.signal, intensities.decoy, q_mu, q_nu, e_nu, y0, e0)
    return DecoyBounds(float(y1), float(e1), float(q_mu), float(e_mu), bool(ok))


def corrected_delta(delta, y1_channel_lower):
    """Imbalance rescaled by the channel-referenced single-photon yield, capped at 1/2."""
    delta = np.asarray(delta, dtype=float)
    y = np.asarray(y1_channel_lower, dtype=float)
    if np.any((delta < 0) | (delta > 0.5)):
        raise ValueError("delta must lie in [0, 0.5]")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(y > 0, np.minimum(0.5, delta / np.where(y > 0, y, 1.0)), 0.5)
    out = np.where(delta == 0, 0.0, out)
    return float(out) if out.ndim == 0 else out


def corrected_e1(e1_upper, delta_prime, variant: str = "paper"):
    """Single-photon error bound including the basis imbalance, clipped to [0, 1/2].

    ``variant="paper"`` evaluates
    ``4(1-d)d(1-2e) + 4(1-2d) sqrt(d(1-d)e(1-e))`` as printed; ``"additive"``
    adds ``e`` to it, which makes ``d = 0`` return ``e`` unchanged.
    """
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    e = np.asarray(e1_upper, dtype=float)
    d = np.asarray(delta_prime, dtype=float)
    if np.any((e < 0) | (e > 1)):
        raise ValueError("e1_upper must lie in [0, 1]")
    if np.any((d < 0) | (d > 0.5)):
        raise ValueError("delta_prime must lie in [0, 0.5]")
    out = 4 * (1 - d) * d * (1 - 2 * e) + 4 * (1 - 2 * d) * np.sqrt(d * (1 - d) * e * (1 - e))
    if variant == "additive":
        out = e + out
    out = np.clip(out, 0.0, 0.5)
    return float(out) if out.ndim == 0 else out


def _rate_arrays(distance_km, signal, decoy, model, delta, variant):
    eta_ch, eta_bob = channel_transmittance(distance_km, model)
    eta = eta_ch * eta_bob
    y0 = model.dark_count_prob
    q_mu, e_mu = gain_qber(signal, eta, model)
    q_nu, e_nu = gain_qber(decoy, eta, model)
    y1, e1, feasible = _decoy_bound_arrays(signal, decoy, q_mu, q_nu, e_nu, y0, model.e0)
    # Receiver loss is calibrated, so only the channel part is open to the eavesdropper.
    y1_channel = np.minimum(1.0, y1 / eta_bob)
    d_prime = corrected_delta(delta, y1_channel)
    e1c = corrected_e1(e1, d_prime, variant)
    p1 = signal * np.exp(-signal)
    k = 0.5 * (p1 * y1 * (1 - binary_entropy(e1c)) - model.f_ec * q_mu * binary_entropy(e_mu))
    k = np.where(feasible, np.maximum(k, 0.0), 0.0)
    return k, y1, e1, np.asarray(d_prime), np.asarray(e1c)


def key_rate(
    distance_km: float,
    intensities: Intensities,
    model: ChannelModel,
    delta: float,
    variant: str = "paper",
) -> KeyRatePoint:
    k, y1, e1, d_prime, e1c = _rate_arrays(
        distance_km, np.float64(intensities.signal), np.float64(intensities.decoy), model, delta, variant
    )
    return KeyRatePoint(
        distance_km=float(distance_km),
        intensities=intensities,
        y1_lower=float(y1),
        e1_upper=float(e1),
        delta_prime=float(d_prime),
        e1_corrected=float(e1c),
        key_rate=float(k),
    )


def optimize_key_rate(
    distance_km: float,
    model: ChannelModel,
    delta: float,
    grid: IntensityGrid = IntensityGrid(),
    variant: str = "paper",
) -> KeyRatePoint:
    """Exhaustive grid search for the intensities maximising the key rate.

    Ties go to the smallest signal, then the smallest decoy intensity. When no
    grid point yields key, the first grid point is reported with ``key_rate=0``.
    """
    signal, decoy = grid.points()
    if signal.size == 0:
        return KeyRatePoint(float(distance_km), None, 0.0, 1.0, 0.5, 0.5, 0.0)
    k, y1, e1, d_prime, e1c = _rate_arrays(distance_km, signal, decoy, model, delta, variant)
    # grid points are signal-major ascending, argmax returns the first maximum
    i = int(np.argmax(k))
    return KeyRatePoint(
        distance_km=float(distance_km),
        intensities=Intensities(float(signal[i]), float(decoy[i])),
        y1_lower=float(y1[i]),
        e1_upper=float(e1[i]),
        delta_prime=float(d_prime[i]),
        e1_corrected=float(e1c[i]),
        key_rate=float(k[i]),
    )


def resolve_delta(delta=None, mu_hom=None, visibility=None) -> float:
    """Imbalance from either an explicit value or a HOM intensity and common visibility."""
    if delta is not None:
        if mu_hom is not None or visibility is not None:
            raise ValueError("give either delta or (mu_hom, visibility), not both")
        if not 0.0 <= delta <= 0.5:
            raise ValueError(f"delta must lie in [0, 0.5], got {delta}")
        return float(delta)
    if mu_hom is None or visibility is None:
        raise ValueError("need delta, or both mu_hom and visibility")
    return imbalance_uniform(mu_hom, visibility).delta


def distance_scan(
    model: ChannelModel,
    distances,
    delta: float | None = None,
    *,
    mu_hom: float | None = None,
    visibility: float | None = None,
    grid: IntensityGrid = IntensityGrid(),
    variant: str = "paper",
) -> list[KeyRatePoint]:
    distances = [float(d) for d in distances]
    if not distances:
        raise ValueError("distance list must be non-empty")
    delta = resolve_delta(delta, mu_hom, visibility)
    return [optimize_key_rate(d, model, delta, grid, variant) for d in distances]


def max_distance(
    model: ChannelModel,
    delta: float,
    grid: IntensityGrid = IntensityGrid(),
    variant: str = "paper",
    d_max_km: float = 500.0,
    coarse_step_km: float = 5.0,
    tol_km: float = MAX_DISTANCE_TOL_KM,
) -> float:
    """Largest distance with positive optimised key, located to ``tol_km``.

    A coarse scan brackets the cutoff and bisection refines it. Returns 0 when
    no key is possible even at zero distance and ``d_max_km`` when key survives
    to the end of the search range.
    """

    def positive(d: float) -> bool:
        return optimize_key_rate(d, model, delta, grid, variant).key_rate > 0

    if not positive(0.0):
        return 0.0
    lo = 0.0
    hi = None
    for d in np.arange(coarse_step_km, d_max_km + coarse_step_km / 2, coarse_step_km):
        d = min(float(d), d_max_km)
        if positive(d):
            lo = d
        else:
            hi = d
            break
    if hi is None:
        return d_max_km
    while hi - lo > tol_km:
        mid = 0.5 * (lo + hi)
        if positive(mid):
            lo = mid
        else:
            hi = mid
    return lo
