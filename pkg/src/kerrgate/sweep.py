"""Parameter scans, bandwidth maximization, scaling fits and saturation.

Every scan point is an independent fidelity evaluation, so scans distribute
over a process pool; results land in pre-assigned slots and are reduced in a
fixed order, making the output independent of the worker count.  The worker
count defaults to the ``KERRGATE_WORKERS`` environment variable, then to the
CPU count.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .fidelity import FidelityResult, evaluate
from .kerr import INFINITE, Arrangement, ChainConfig, SiteParams
from .spectral import QuadratureSpec, WavePacket

__all__ = [
    "WORKERS_ENV",
    "BracketError",
    "SweepRecord",
    "PowerLawFit",
    "ChainMaximum",
    "SaturationCurve",
    "make_packet",
    "scan_sigma",
    "maximize_over_sigma",
    "scan_n",
    "fit_power_law",
    "predict_target",
    "saturation_study",
    "deformed_input_study",
    "optimize_site_parameters",
]

WORKERS_ENV = "KERRGATE_WORKERS"

_INV_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


class BracketError(RuntimeError):
    """The scanned interval contains no interior fidelity maximum."""


@dataclass(frozen=True)
class SweepRecord:
    """One scan point: configuration snapshot and its fidelity result."""

    config: ChainConfig
    sigma: float
    omega0: float
    deformation_rounds: int
    result: FidelityResult


@dataclass(frozen=True)
class PowerLawFit:
    """Least-squares fit ``y = amplitude * n**exponent`` in log-log space."""

    amplitude: float
    exponent: float
    residual: float
    n_range: tuple[int, int]

    def predict(self, n) -> float:
        return self.amplitude * np.asarray(n, dtype=float) ** self.exponent


@dataclass(frozen=True)
class ChainMaximum:
    """Bandwidth-optimized fidelity of one chain length."""

    n_sites: int
    sigma_max: float
    f_max: float
    rounds: int = 0


@dataclass(frozen=True)
class SaturationCurve:
    """Fidelity versus chain length at the bandwidth optimal for `anchor_n`."""

    anchor_n: int
    sigma_max: float
    n_values: tuple[int, ...]
    fidelities: tuple[float, ...]
    predicted_saturation_n: float


def make_packet(
    config: ChainConfig, sigma: float, omega0: float = 0.0, rounds: int = 0
) -> WavePacket:
    """Gaussian packet detuned by ``omega0`` from the chain's resonance."""
    site = config.site_pair[0]
    return WavePacket(
        carrier=site.delta + omega0,
        bandwidth=sigma,
        deformation_rounds=rounds,
        deformation_sites=config.n_sites if rounds else 0,
    )


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        if env:
            workers = int(env)
        else:
            workers = os.cpu_count() or 1
    return max(1, workers)


def _evaluate_point(task) -> FidelityResult:
    packet, config, spec = task
    return evaluate(packet, config, spec)


def _evaluate_many(tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [_evaluate_point(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
        return list(pool.map(_evaluate_point, tasks))


def sigma_grid(sigma_min: float, sigma_max: float, points: int, spacing: str = "log"):
    if not (0 < sigma_min < sigma_max):
        raise ValueError("need 0 < sigma_min < sigma_max")
    if points < 2:
        raise ValueError("need at least 2 points")
    if spacing == "log":
        return np.geomspace(sigma_min, sigma_max, points)
    if spacing == "linear":
        return np.linspace(sigma_min, sigma_max, points)
    raise ValueError(f"spacing must be 'log' or 'linear', got {spacing!r}")


def scan_sigma(
    config: ChainConfig,
    sigma_min: float,
    sigma_max: float,
    points: int,
    spacing: str = "log",
    spec: QuadratureSpec = QuadratureSpec(),
    omega0: float = 0.0,
    deformation_rounds: int = 0,
    workers: int | None = None,
) -> list[SweepRecord]:
    """Fidelity along a bandwidth grid; per-point non-convergence is recorded
    in the result flags rather than aborting the scan."""
    sigmas = sigma_grid(sigma_min, sigma_max, points, spacing)
    tasks = [
        (make_packet(config, float(s), omega0, deformation_rounds), config, spec)
        for s in sigmas
    ]
    results = _evaluate_many(tasks, _resolve_workers(workers))
    return [
        SweepRecord(config, float(s), omega0, deformation_rounds, r)
        for s, r in zip(sigmas, results)
    ]


def _f_pi_at(config, sigma, omega0, rounds, spec) -> float:
    packet = make_packet(config, sigma, omega0, rounds)
    return evaluate(packet, config, spec).f_pi


def maximize_over_sigma(
    config: ChainConfig,
    bracket: tuple[float, float] | None = None,
    spec: QuadratureSpec = QuadratureSpec(),
    omega0: float = 0.0,
    deformation_rounds: int = 0,
    workers: int | None = None,
    coarse_points: int = 40,
    sigma_rtol: float = 1e-4,
) -> tuple[float, float]:
    """Bandwidth maximizing F(pi), by golden-section search on log sigma.

    A coarse log scan over the bracket (default ``[1e-3, 10]`` in units of
    the site linewidth) locates the peak; the search then narrows the two
    neighboring intervals down to the relative tolerance ``sigma_rtol``.

    Returns ``(sigma_max, f_max)``.  Raises :class:`BracketError` when the
    coarse scan has its maximum on the bracket edge.
    """
    if bracket is None:
        gamma = config.site_pair[0].gamma
        bracket = (1e-3 * gamma, 10.0 * gamma)
    lo, hi = bracket
    records = scan_sigma(
        config,
        lo,
        hi,
        coarse_points,
        "log",
        spec,
        omega0,
        deformation_rounds,
        workers,
    )
    f_values = [r.result.f_pi for r in records]
    i_best = int(np.argmax(f_values))
    if i_best in (0, len(records) - 1):
        raise BracketError(
            f"no interior maximum of F(pi) in sigma bracket [{lo:g}, {hi:g}]"
        )

    u = [math.log(r.sigma) for r in records]
    best_u, best_f = u[i_best], f_values[i_best]

    def f_of(uu: float) -> float:
        return _f_pi_at(config, math.exp(uu), omega0, deformation_rounds, spec)

    a, b = u[i_best - 1], u[i_best + 1]
    tol = math.log1p(sigma_rtol)
    c = b - _INV_GOLDEN * (b - a)
    d = a + _INV_GOLDEN * (b - a)
    fc, fd = f_of(c), f_of(d)
    while (b - a) > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INV_GOLDEN * (b - a)
            fc = f_of(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_GOLDEN * (b - a)
            fd = f_of(d)
        uu, ff = (c, fc) if fc >= fd else (d, fd)
        if ff > best_f:
            best_u, best_f = uu, ff
    return math.exp(best_u), best_f


def _maximize_task(task) -> tuple[float, float]:
    config, bracket, spec, omega0, rounds, coarse_points, sigma_rtol = task
    return maximize_over_sigma(
        config,
        bracket,
        spec,
        omega0,
        rounds,
        workers=1,
        coarse_points=coarse_points,
        sigma_rtol=sigma_rtol,
    )


def scan_n(
    n_values,
    gamma: float = 1.0,
    omega0: float = 0.0,
    chi: float = INFINITE,
    spec: QuadratureSpec = QuadratureSpec(),
    deformation_rounds: int = 0,
    workers: int | None = None,
    bracket: tuple[float, float] | None = None,
    coarse_points: int = 40,
    sigma_rtol: float = 1e-4,
) -> list[ChainMaximum]:
    """Bandwidth-optimized fidelity for each chain length in ``n_values``."""
    n_values = list(n_values)
    if not n_values or any(n < 1 for n in n_values):
        raise ValueError("n_values must be non-empty with every N >= 1")
    site = SiteParams(gamma=gamma, chi=chi)
    tasks = [
        (
            ChainConfig.chain(site, int(n)),
            bracket,
            spec,
            omega0,
            deformation_rounds,
            coarse_points,
            sigma_rtol,
        )
        for n in n_values
    ]
    workers = _resolve_workers(workers)
    if workers <= 1 or len(tasks) <= 1:
        maxima = [_maximize_task(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as pool:
            maxima = list(pool.map(_maximize_task, tasks))
    return [
        ChainMaximum(int(n), s, f, deformation_rounds)
        for n, (s, f) in zip(n_values, maxima)
    ]


def fit_power_law(points, n_lo: int, n_hi: int) -> PowerLawFit:
    """Ordinary least squares of ``ln y`` against ``ln n`` over ``[n_lo, n_hi]``."""
    selected = [(n, y) for n, y in points if n_lo <= n <= n_hi]
    if len(selected) < 3:
        raise ValueError(
            f"need at least 3 points with {n_lo} <= N <= {n_hi}, got {len(selected)}"
        )
    if any(y <= 0 for _, y in selected):
        raise ValueError("power-law fit requires strictly positive values")
    ln_n = np.log([n for n, _ in selected])
    ln_y = np.log([y for _, y in selected])
    slope, intercept = np.polyfit(ln_n, ln_y, 1)
    resid = float(np.sqrt(np.mean((ln_y - (slope * ln_n + intercept)) ** 2)))
    return PowerLawFit(math.exp(intercept), float(slope), resid, (n_lo, n_hi))


def predict_target(fit: PowerLawFit, y_target: float) -> int:
    """Smallest integer N with ``fit.predict(N) <= y_target``; the fit must decay."""
    if fit.exponent >= 0:
        raise ValueError("inversion requires a negative exponent")
    if y_target <= 0:
        raise ValueError("y_target must be positive")
    n = (y_target / fit.amplitude) ** (1.0 / fit.exponent)
    return max(1, math.ceil(n - 1e-9))


def saturation_study(
    anchor_ns,
    n_max: int,
    spec: QuadratureSpec = QuadratureSpec(),
    gamma: float = 1.0,
    omega0: float = 0.0,
    chi: float = INFINITE,
    workers: int | None = None,
    bracket: tuple[float, float] | None = None,
    coarse_points: int = 40,
) -> list[SaturationCurve]:
    """Fidelity versus N at bandwidths optimal for the anchor chain lengths.

    For each anchor ``n`` the optimal bandwidth ``sigma_max(n)`` is found,
    then the chain is lengthened at that fixed bandwidth.  The gain is
    expected to level off once the chain holds the whole packet, around
    ``N = gamma / sigma_max(n)``, which is reported as the predicted
    saturation point.
    """
    anchor_ns = list(anchor_ns)
    if any(n < 1 or n > n_max for n in anchor_ns):
        raise ValueError("anchors must satisfy 1 <= n <= n_max")
    site = SiteParams(gamma=gamma, chi=chi)
    workers = _resolve_workers(workers)
    curves = []
    for anchor in anchor_ns:
        anchor_config = ChainConfig.chain(site, int(anchor))
        sigma_max, _ = maximize_over_sigma(
            anchor_config,
            bracket,
            spec,
            omega0,
            workers=workers,
            coarse_points=coarse_points,
        )
        n_values = list(range(1, n_max + 1))
        tasks = [
            (
                make_packet(anchor_config, sigma_max, omega0),
                ChainConfig.chain(site, n),
                spec,
            )
            for n in n_values
        ]
        results = _evaluate_many(tasks, workers)
        curves.append(
            SaturationCurve(
                anchor_n=int(anchor),
                sigma_max=sigma_max,
                n_values=tuple(n_values),
                fidelities=tuple(r.f_pi for r in results),
                predicted_saturation_n=gamma / sigma_max,
            )
        )
    return curves


def deformed_input_study(
    n_values,
    rounds: int,
    spec: QuadratureSpec = QuadratureSpec(),
    gamma: float = 1.0,
    omega0: float = 0.0,
    chi: float = INFINITE,
    workers: int | None = None,
    bracket: tuple[float, float] | None = None,
    coarse_points: int = 40,
) -> list[ChainMaximum]:
    """Like :func:`scan_n` but with inputs that already traversed the chain
    ``rounds`` times; ``rounds = 0`` reproduces the undeformed scan."""
    if rounds not in (0, 1, 2):
        raise ValueError("rounds must be 0, 1 or 2")
    return scan_n(
        n_values,
        gamma=gamma,
        omega0=omega0,
        chi=chi,
        spec=spec,
        deformation_rounds=rounds,
        workers=workers,
        bracket=bracket,
        coarse_points=coarse_points,
    )


def _config_for(arrangement: Arrangement, site: SiteParams, n_sites: int) -> ChainConfig:
    if arrangement is Arrangement.SINGLE:
        return ChainConfig.single(site)
    if arrangement is Arrangement.CO_PROP_2:
        return ChainConfig.co_propagating(site)
    if arrangement is Arrangement.COUNTER_PROP_2:
        return ChainConfig.counter_propagating(site)
    return ChainConfig.chain(site, n_sites)


def optimize_site_parameters(
    arrangement: Arrangement,
    initial: tuple[float, float, float],
    n_sites: int = 1,
    spec: QuadratureSpec = QuadratureSpec(),
    sigma_bracket: tuple[float, float] | None = None,
    workers: int | None = None,
    maxiter: int = 40,
    coarse_points: int = 40,
) -> tuple[tuple[float, float, float], float]:
    """Search ``(omega0, gamma, chi)`` maximizing the bandwidth-optimized
    F(pi) with a derivative-free simplex; a convenience driver, not part of
    the shipped studies."""
    from scipy.optimize import minimize

    def infidelity(params) -> float:
        omega0, gamma, chi = params
        if gamma <= 0 or chi < 0:
            return 1.0
        config = _config_for(arrangement, SiteParams(gamma=gamma, chi=chi), n_sites)
        try:
            _, f_max = maximize_over_sigma(
                config,
                sigma_bracket,
                spec,
                omega0=omega0,
                workers=workers,
                coarse_points=coarse_points,
            )
        except BracketError:
            return 1.0
        return 1.0 - f_max

    res = minimize(
        infidelity,
        x0=np.asarray(initial, dtype=float),
        method="Nelder-Mead",
        options={"maxiter": maxiter, "xatol": 1e-3, "fatol": 1e-5},
    )
    omega0, gamma, chi = (float(v) for v in res.x)
    return (omega0, gamma, chi), 1.0 - float(res.fun)
