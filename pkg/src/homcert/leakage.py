"""From HOM visibilities to fidelities to a bound on the basis imbalance."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import NumericalError
from .fock import DEFAULT_N_MAX

VISIBILITY_KEYS = ("x01", "z01", "xz00", "xz01", "xz10", "xz11")
MAX_PRWCP_VISIBILITY = 0.5
DEFAULT_TAIL_BOUND = 1e-9
# eigenvalues this far below zero are treated as round-off
EIGEN_FLOOR = 1e-14


def _check_sqrt_f(value: float, name: str = "sqrt_f") -> None:
    if not 0.0 <= value <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value!r}")


def _check_visibility(v: float) -> None:
    if not 0.0 <= v <= MAX_PRWCP_VISIBILITY:
        raise ValueError(f"PRWCP visibility must lie in [0, 0.5], got {v!r}")


def fidelity_sqrt_from_visibility(mu: float, v: float) -> float:
    """Square-root fidelity of two equal-intensity PRWCPs with HOM visibility ``v``.

    ``sqrt(F) = exp(mu * (sqrt(2 v) - 1))``.
    """
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    _check_visibility(v)
    return math.exp(mu * (math.sqrt(2.0 * v) - 1.0))


def _fock_basis(n_max: int) -> dict[tuple[int, int], int]:
    index = {}
    for n in range(n_max + 1):
        for k in range(n, -1, -1):
            index[(k, n - k)] = len(index)
    return index


def prwcp_density_matrices(mu: float, gamma: float, n_max: int = DEFAULT_N_MAX):
    """Truncated two-mode density matrices of the two PRWCPs.

    The basis is ``|k>_1 |j>_perp`` with ``k + j <= n_max``. The first state
    lives entirely in mode 1; the second is a Poisson mixture of Fock states of
    the rotated mode ``sqrt(gamma) a_1 + sqrt(1 - gamma) a_perp``.
    """
    index = _fock_basis(n_max)
    dim = len(index)
    p = stats.poisson.pmf(np.arange(n_max + 1), mu)
    delta = 1.0 - gamma
    rho1 = np.zeros((dim, dim))
    rho2 = np.zeros((dim, dim))
    for n in range(n_max + 1):
        rho1[index[(n, 0)], index[(n, 0)]] = p[n]
        psi = np.zeros(dim)
        for k in range(n + 1):
            psi[index[(k, n - k)]] = math.sqrt(special.comb(n, k) * gamma**k * delta ** (n - k))
        rho2 += p[n] * np.outer(psi, psi)
    return rho1, rho2


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(rho)
    if w.min() < -EIGEN_FLOOR:
        raise NumericalError(f"matrix is not positive semidefinite (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def numeric_fidelity(
    mu: float, gamma: float, n_max: int = DEFAULT_N_MAX, tail_bound: float = DEFAULT_TAIL_BOUND
) -> float:
    """``Tr|sqrt(rho1) sqrt(rho2)|`` evaluated on truncated density matrices."""
    if not mu > 0:
        raise ValueError(f"mu must be positive, got {mu!r}")
    if not 0.0 <= gamma <= 1.0:
        raise ValueError(f"gamma must lie in [0, 1], got {gamma!r}")
    tail = float(stats.poisson.sf(n_max, mu))
    if tail > tail_bound:
        raise NumericalError(
            f"Poisson tail {tail:.3e} beyond n_max={n_max} exceeds bound {tail_bound:.1e}"
        )
    rho1, rho2 = prwcp_density_matrices(mu, gamma, n_max)
    product = _psd_sqrt(rho1) @ _psd_sqrt(rho2)
    return float(np.linalg.svd(product, compute_uv=False).sum())


def bures_angle(sqrt_f: float) -> float:
    _check_sqrt_f(sqrt_f)
    return math.acos(sqrt_f)


@dataclass(frozen=True)
class PairwiseFidelities:
    """Square-root fidelities between the non-operational states of the four bits.

    ``cross`` is ordered ``(xz00, xz01, xz10, xz11)``.
    """

    within_x: float
    within_z: float
    cross: tuple[float, float, float, float]

    def __post_init__(self):
        if len(self.cross) != 4:
            raise ValueError(f"expected four cross-basis fidelities, got {len(self.cross)}")
        object.__setattr__(self, "cross", tuple(float(c) for c in self.cross))
        for name, value in self.as_dict().items():
            _check_sqrt_f(value, name)

    @classmethod
    def uniform(cls, sqrt_f: float) -> "PairwiseFidelities":
        return cls(sqrt_f, sqrt_f, (sqrt_f,) * 4)

    @classmethod
    def from_visibilities(cls, mu: float, visibilities: dict[str, float]) -> "PairwiseFidelities":
        missing = set(VISIBILITY_KEYS) - set(visibilities)
        extra = set(visibilities) - set(VISIBILITY_KEYS)
        if missing or extra:
            raise ValueError(
                f"visibility map needs exactly the keys {VISIBILITY_KEYS}; "
                f"missing {sorted(missing)}, unexpected {sorted(extra)}"
            )
        f = {k: fidelity_sqrt_from_visibility(mu, float(visibilities[k])) for k in VISIBILITY_KEYS}
        return cls(f["x01"], f["z01"], (f["xz00"], f["xz01"], f["xz10"], f["xz11"]))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(VISIBILITY_KEYS, (self.within_x, self.within_z, *self.cross)))


@dataclass(frozen=True)
class ImbalanceBound:
    delta: float
    angle_sum: float
    clamped: bool


def imbalance_bound(pairs: PairwiseFidelities) -> ImbalanceBound:
    """Upper bound on the basis imbalance from the six pairwise fidelities.

    Bures angles add along the path x-basis -> auxiliary x state -> closest
    auxiliary z state -> z-basis. Past a total of pi/2 the bound saturates at 1/2.
    """
    angle_sum = (
        math.acos(max(pairs.cross))
        + math.acos((1.0 + pairs.within_x) / 2.0)
        + math.acos((1.0 + pairs.within_z) / 2.0)
    )
    c = math.cos(angle_sum)
    clamped = c < 0.0
    delta = 0.5 if clamped else 0.5 - 0.5 * c
    return ImbalanceBound(delta=delta, angle_sum=angle_sum, clamped=clamped)


def imbalance_uniform(mu: float, v: float) -> ImbalanceBound:
    """Imbalance bound when every pulse pair shows the same visibility ``v``."""
    return imbalance_bound(PairwiseFidelities.uniform(fidelity_sqrt_from_visibility(mu, v)))


def imbalance_from_visibilities(mu: float, visibilities: dict[str, float]) -> ImbalanceBound:
    return imbalance_bound(PairwiseFidelities.from_visibilities(mu, visibilities))


def worst_case_visibility(v: float, sigma: float) -> float:
    """Visibility reduced by its error bar, floored at zero."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma!r}")
    return max(0.0, v - sigma)
