"""Single-photon spectral amplitudes and Gauss-Legendre quadrature grids.

Wave packets are analytic objects: a Gaussian envelope described by its
carrier frequency and bandwidth, optionally multiplied by the unit-modulus
phase accumulated during earlier traversals of an interaction chain.  Grids
are built per integral so every integral can choose its own window.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .kerr import SiteParams, gamma_fn

__all__ = [
    "WavePacket",
    "QuadratureSpec",
    "gaussian_amplitude",
    "deform_phase",
    "build_grid",
]


@dataclass(frozen=True)
class WavePacket:
    """Gaussian spectral amplitude of one photon.

    Parameters
    ----------
    carrier : float
        Center frequency of the Gaussian.
    bandwidth : float
        Spectral standard deviation sigma, > 0.
    deformation_rounds : int
        Number of full chain traversals whose frequency-dependent phase is
        already imprinted on the packet.
    deformation_sites : int
        Chain length used for that phase; required >= 1 when
        ``deformation_rounds > 0``.
    """

    carrier: float
    bandwidth: float
    deformation_rounds: int = 0
    deformation_sites: int = 0

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"bandwidth must be > 0, got {self.bandwidth}")
        if self.deformation_rounds < 0:
            raise ValueError("deformation_rounds must be >= 0")
        if self.deformation_rounds > 0 and self.deformation_sites < 1:
            raise ValueError("deformed packet needs deformation_sites >= 1")


@dataclass(frozen=True)
class QuadratureSpec:
    """Gauss-Legendre quadrature policy shared by all integrals.

    ``window_halfwidth`` is in units of the packet bandwidth.  Refinement
    doubles ``nodes_per_axis`` until the target functional changes by less
    than ``convergence_tol``, at most ``max_refinements`` times.
    """

    nodes_per_axis: int = 129
    window_halfwidth: float = 8.0
    convergence_tol: float = 1e-6
    max_refinements: int = 4

    def __post_init__(self):
        if self.nodes_per_axis < 2:
            raise ValueError("nodes_per_axis must be >= 2")
        if not self.window_halfwidth > 0:
            raise ValueError("window_halfwidth must be > 0")
        if not self.convergence_tol > 0:
            raise ValueError("convergence_tol must be > 0")
        if self.max_refinements < 0:
            raise ValueError("max_refinements must be >= 0")


@lru_cache(maxsize=64)
def _leggauss(n: int):
    nodes, weights = np.polynomial.legendre.leggauss(n)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def build_grid(center, packet_sigma, spec: QuadratureSpec, nodes: int | None = None):
    """Gauss-Legendre nodes and weights on ``center +- W * sigma``.

    Returns ``(nodes, weights)``; the weights sum to the interval length.
    ``nodes`` overrides ``spec.nodes_per_axis`` during refinement.
    """
    n = spec.nodes_per_axis if nodes is None else nodes
    x, w = _leggauss(n)
    half = spec.window_halfwidth * packet_sigma
    return center + half * x, half * w


def deform_phase(omega, site: SiteParams, n_sites: int, rounds: int):
    """Unit-modulus phase after ``rounds`` traversals of an ``n_sites`` chain.

    One traversal of a translation-invariant chain multiplies the amplitude
    at frequency ``omega`` by ``(-conj(Gamma)/Gamma)**n_sites``; ``rounds``
    traversals raise that to the ``rounds``-th power.
    """
    if n_sites < 1:
        raise ValueError("n_sites must be >= 1")
    if rounds < 0:
        raise ValueError("rounds must be >= 0")
    g = gamma_fn(omega, site)
    return (-np.conj(g) / g) ** (n_sites * rounds)


def gaussian_amplitude(omega, packet: WavePacket, site: SiteParams | None = None):
    """Spectral amplitude ``xi(omega)`` of the packet.

    ``(2 pi sigma^2)**(-1/4) * exp(-(omega - carrier)^2 / (4 sigma^2))``
    times the accumulated deformation phase.  ``site`` supplies the chain
    parameters of that phase and is required when
    ``packet.deformation_rounds > 0``.
    """
    sigma = packet.bandwidth
    detune = np.asarray(omega) - packet.carrier
    amp = (2.0 * np.pi * sigma**2) ** (-0.25) * np.exp(-(detune**2) / (4.0 * sigma**2))
    if packet.deformation_rounds > 0:
        if site is None:
            raise ValueError("site parameters required for a deformed packet")
        amp = amp * deform_phase(
            omega, site, packet.deformation_sites, packet.deformation_rounds
        )
    return amp
