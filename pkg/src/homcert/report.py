"""CSV tables and JSON reports produced by the command-line tool.

Numbers are written with 12 significant digits so that output files are
byte-identical across runs and platforms with the same numpy build.
"""

from __future__ import annotations

import io
import json
from typing import Any

import numpy as np

from . import fock, keyrate, leakage
from .config import RunConfig
from .errors import NumericalError

DEFAULT_CURVE_MUS = (0.025, 0.1, 0.25, 1.0)
DEFAULT_CURVE_POINTS = 51
CERTIFY_DISTANCES_KM = (0.0, 25.0, 50.0)
HOM_CURVE_HEADER = ("mu", "gamma", "v_sp", "v_prwcp", "trunc_error")
KEYRATE_HEADER = ("distance_km", "K", "I_s", "I_d", "Y1L", "e1U", "delta_prime", "e1_corrected")


def fmt(x: float) -> str:
    return format(float(x), ".12g")


def rounded(obj: Any) -> Any:
    """Recursively round floats to 12 significant digits for JSON output."""
    if isinstance(obj, bool) or obj is None:
        return obj
    if isinstance(obj, (float, np.floating)):
        return float(fmt(obj))
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): rounded(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [rounded(v) for v in obj]
    return obj


def dump_json(obj: Any) -> str:
    return json.dumps(rounded(obj), indent=2, sort_keys=True) + "\n"


def _csv(header, rows, provenance: dict) -> str:
    buf = io.StringIO()
    buf.write("# config: " + json.dumps(rounded(provenance), sort_keys=True) + "\n")
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    return buf.getvalue()


def hom_curve_csv(config: RunConfig, mu_list=DEFAULT_CURVE_MUS, points: int = DEFAULT_CURVE_POINTS) -> str:
    """Visibility curves, each cell cross-checked against the phase-average route."""
    if points < 2:
        raise ValueError(f"need at least 2 gamma points, got {points}")
    mu_list = [float(m) for m in mu_list]
    for mu in mu_list:
        if not mu > 0:
            raise ValueError(f"mu values must be positive, got {mu}")
    gammas = np.linspace(0.0, 1.0, points)
    trunc = fock.Truncation(config.hom.n_max)
    rows = fock.hom_curve(mu_list, gammas, trunc)
    for row in rows:
        if row.trunc_error > leakage.DEFAULT_TAIL_BOUND:
            raise NumericalError(
                f"truncation tail {row.trunc_error:.3e} at mu={row.mu} exceeds "
                f"{leakage.DEFAULT_TAIL_BOUND:.0e}; raise n_max"
            )
        pair = fock.PrwcpPair(row.mu, row.gamma)
        gap = abs(
            fock.prwcp_coincidence(pair, trunc)
            - fock.prwcp_coincidence_phase_avg(pair, config.hom.quadrature_points)
        )
        if gap > max(1e-8, row.trunc_error):
            raise NumericalError(
                f"Fock expansion and phase average disagree by {gap:.3e} at mu={row.mu}, gamma={row.gamma}"
            )
    provenance = {"command": "hom-curve", "mu_list": mu_list, "points": points, "config": config.to_dict()}
    table = [(r.mu, r.gamma, r.v_sp, r.v_prwcp, r.trunc_error) for r in rows]
    return _csv(HOM_CURVE_HEADER, table, provenance)


def _scenario_visibility(visibility, sigma):
    if sigma is None:
        return None
    if isinstance(visibility, dict):
        sig = sigma if isinstance(sigma, dict) else {k: sigma for k in visibility}
        return {k: leakage.worst_case_visibility(visibility[k], sig[k]) for k in visibility}
    if isinstance(sigma, dict):
        raise ValueError("a per-pair sigma map needs a per-pair visibility map")
    return leakage.worst_case_visibility(visibility, sigma)


def _imbalance(mu: float, visibility) -> tuple[leakage.ImbalanceBound, leakage.PairwiseFidelities]:
    if isinstance(visibility, dict):
        pairs = leakage.PairwiseFidelities.from_visibilities(mu, visibility)
    else:
        pairs = leakage.PairwiseFidelities.uniform(leakage.fidelity_sqrt_from_visibility(mu, visibility))
    return leakage.imbalance_bound(pairs), pairs


def _scenarios(config: RunConfig) -> dict[str, Any]:
    if config.visibility is None:
        raise ValueError("a visibility (number or six-entry map) is required")
    out = {"nominal": config.visibility}
    worst = _scenario_visibility(config.visibility, config.sigma)
    if worst is not None:
        out["worst_case"] = worst
    elif config.worst_case_visibility:
        raise ValueError("worst-case evaluation needs sigma")
    return out


def _selected(config: RunConfig) -> str:
    return "worst_case" if config.worst_case_visibility else "nominal"


def imbalance_report(config: RunConfig) -> dict[str, Any]:
    mu = config.hom.mu_hom
    blocks = {}
    for name, vis in _scenarios(config).items():
        bound, pairs = _imbalance(mu, vis)
        blocks[name] = {
            "visibility": vis,
            "delta": bound.delta,
            "angle_sum": bound.angle_sum,
            "clamped": bound.clamped,
            "per_pair_fidelities": pairs.as_dict(),
        }
    report = {"mu_hom": mu, "sigma": config.sigma, "mode": _selected(config), **blocks[_selected(config)]}
    report["scenarios"] = blocks
    report["config"] = config.to_dict()
    return report


def resolve_config_delta(config: RunConfig, delta: float | None = None) -> float:
    """Imbalance to feed the key-rate model: explicit, or from the configured visibility."""
    if delta is not None:
        return keyrate.resolve_delta(delta=delta)
    vis = _scenarios(config)[_selected(config)]
    return _imbalance(config.hom.mu_hom, vis)[0].delta


def keyrate_csv(config: RunConfig, delta: float | None = None) -> str:
    d = resolve_config_delta(config, delta)
    points = keyrate.distance_scan(
        config.channel,
        config.scan.distances(),
        d,
        grid=config.grid,
        variant=config.error_correction_variant,
    )
    rows = []
    for p in points:
        i_s = p.intensities.signal if p.intensities else 0.0
        i_d = p.intensities.decoy if p.intensities else 0.0
        rows.append((p.distance_km, p.key_rate, i_s, i_d, p.y1_lower, p.e1_upper, p.delta_prime, p.e1_corrected))
    provenance = {"command": "keyrate", "delta": d, "explicit_delta": delta is not None, "config": config.to_dict()}
    return _csv(KEYRATE_HEADER, rows, provenance)


def _point_dict(p: keyrate.KeyRatePoint) -> dict[str, Any]:
    return {
        "distance_km": p.distance_km,
        "K": p.key_rate,
        "I_s": p.intensities.signal if p.intensities else None,
        "I_d": p.intensities.decoy if p.intensities else None,
    }


def _verdict(config: RunConfig, delta: float) -> dict[str, Any]:
    by_variant = {}
    for variant in keyrate.VARIANTS:
        reach = keyrate.max_distance(
            config.channel,
            delta,
            config.grid,
            variant,
            d_max_km=config.scan.d_max_km,
            coarse_step_km=config.scan.step_km,
        )
        at = {
            fmt(d): _point_dict(keyrate.optimize_key_rate(d, config.channel, delta, config.grid, variant))
            for d in CERTIFY_DISTANCES_KM
        }
        by_variant[variant] = {"max_distance_km": reach, "positive_key": reach > 0, "optimal_intensities_at": at}
    chosen = by_variant[config.error_correction_variant]
    return {
        "delta": delta,
        "max_distance_km": chosen["max_distance_km"],
        "positive_key": chosen["positive_key"],
        "optimal_intensities_at": chosen["optimal_intensities_at"],
        "variant_comparison": by_variant,
    }


def certify_report(config: RunConfig) -> dict[str, Any]:
    """One-shot verdict for a measured visibility, nominal and (with sigma) worst case."""
    verdicts = {}
    for name, vis in _scenarios(config).items():
        bound, _ = _imbalance(config.hom.mu_hom, vis)
        verdicts[name] = {"visibility": vis, **_verdict(config, bound.delta)}
    chosen = verdicts[_selected(config)]
    return {
        "visibility": config.visibility,
        "sigma": config.sigma,
        "mu_hom": config.hom.mu_hom,
        "mode": _selected(config),
        "variant": config.error_correction_variant,
        "delta": chosen["delta"],
        "max_distance_km": chosen["max_distance_km"],
        "positive_key": chosen["positive_key"],
        "optimal_intensities_at": chosen["optimal_intensities_at"],
        "variant_comparison": chosen["variant_comparison"],
        "verdicts": verdicts,
        "config": config.to_dict(),
    }
