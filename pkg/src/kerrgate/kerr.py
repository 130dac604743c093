"""Scattering response of chains of cross-Kerr interaction sites.

Each interaction site is a pair of waveguide-coupled two-level atoms whose
doubly-excited state is shifted by a Kerr coupling ``chi``.  One photon
traversing a chain only picks up a frequency-dependent phase; a photon pair
additionally acquires an energy-conserving correction term.  This module
evaluates the single-photon phase and the *reduced* two-photon kernel
``K(nu_a, nu_b, omega)``: the smooth coefficient multiplying the
energy-conservation delta function, folded so that the scattered two-photon
amplitude becomes an ordinary one-dimensional frequency integral,

    xi2_out(nu_a, nu_b) = P * xi(nu_a) * xi(nu_b)
                          + Integral dw K(nu_a, nu_b, w) xi(w) xi(E - w),

with ``E = nu_a + nu_b`` and ``P`` the product of the two single-photon
phases (``P = 1`` once the single-photon deformation is removed).

Four arrangements are supported: a single site, two sites traversed by
co-propagating or counter-propagating photons, and a translation-invariant
chain of N sites with counter-propagating photons.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

__all__ = [
    "INFINITE",
    "Arrangement",
    "SiteParams",
    "ChainConfig",
    "gamma_fn",
    "single_photon_phase",
    "reduced_kernel",
    "chain_phase_sum",
]

#: Symbolic value for an infinitely strong Kerr coupling.  Kernels replace
#: the factor chi / (1 + 2i*chi/D) by its analytic limit D / (2i).
INFINITE = math.inf

# Relative threshold below which the closed-form geometric sum switches to
# its confluent branch.
_DEGENERATE_RTOL = 1e-12


class Arrangement(Enum):
    """How the two photons traverse the interaction sites."""

    SINGLE = "single"
    CO_PROP_2 = "co-2"
    COUNTER_PROP_2 = "counter-2"
    COUNTER_PROP_N = "counter-n"


@dataclass(frozen=True)
class SiteParams:
    """Physical constants of one interaction site.

    Parameters
    ----------
    gamma : float
        Decay rate of each atom into the waveguide; sets the frequency unit.
    chi : float
        Kerr coupling between the two atoms.  ``INFINITE`` selects the
        analytic strong-coupling limit.
    delta : float
        Atomic transition frequency.  Zero in the rotating frame.
    """

    gamma: float
    chi: float
    delta: float = 0.0

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ValueError(f"gamma must be positive and finite, got {self.gamma}")
        if math.isnan(self.chi) or self.chi < 0:
            raise ValueError(f"chi must be >= 0 (or INFINITE), got {self.chi}")
        if not math.isfinite(self.delta):
            raise ValueError(f"delta must be finite, got {self.delta}")

    @property
    def infinite_chi(self) -> bool:
        return math.isinf(self.chi)


@dataclass(frozen=True)
class ChainConfig:
    """An arrangement of interaction sites traversed by the photon pair.

    ``sites`` is a single :class:`SiteParams` for translation-invariant
    chains, or a pair ``(site1, site2)`` for the two-site arrangements
    (site 1 is the first site met by the left-to-right photon).
    """

    sites: SiteParams | tuple[SiteParams, SiteParams]
    n_sites: int
    arrangement: Arrangement

    def __post_init__(self):
        arr = self.arrangement
        pair = isinstance(self.sites, tuple)
        if pair:
            if len(self.sites) != 2 or not all(
                isinstance(s, SiteParams) for s in self.sites
            ):
                raise ValueError("sites tuple must hold exactly two SiteParams")
            if arr not in (Arrangement.CO_PROP_2, Arrangement.COUNTER_PROP_2):
                raise ValueError(
                    f"per-site parameters only allowed for two-site arrangements, "
                    f"not {arr.name}"
                )
        if arr is Arrangement.SINGLE and self.n_sites != 1:
            raise ValueError("SINGLE requires n_sites == 1")
        if arr in (Arrangement.CO_PROP_2, Arrangement.COUNTER_PROP_2):
            if self.n_sites != 2:
                raise ValueError(f"{arr.name} requires n_sites == 2")
        if arr is Arrangement.COUNTER_PROP_N and self.n_sites < 1:
            raise ValueError("COUNTER_PROP_N requires n_sites >= 1")

    @classmethod
    def single(cls, site: SiteParams) -> "ChainConfig":
        return cls(site, 1, Arrangement.SINGLE)

    @classmethod
    def co_propagating(
        cls, site: SiteParams, second: SiteParams | None = None
    ) -> "ChainConfig":
        sites = site if second is None else (site, second)
        return cls(sites, 2, Arrangement.CO_PROP_2)

    @classmethod
    def counter_propagating(
        cls, site: SiteParams, second: SiteParams | None = None
    ) -> "ChainConfig":
        sites = site if second is None else (site, second)
        return cls(sites, 2, Arrangement.COUNTER_PROP_2)

    @classmethod
    def chain(cls, site: SiteParams, n_sites: int) -> "ChainConfig":
        return cls(site, n_sites, Arrangement.COUNTER_PROP_N)

    @property
    def site(self) -> SiteParams:
        """The common site parameters of a translation-invariant chain."""
        if isinstance(self.sites, tuple):
            raise ValueError("chain has per-site parameters; use site_pair")
        return self.sites

    @property
    def site_pair(self) -> tuple[SiteParams, SiteParams]:
        if isinstance(self.sites, tuple):
            return self.sites
        return (self.sites, self.sites)

    @property
    def uniform(self) -> bool:
        return not isinstance(self.sites, tuple) or self.sites[0] == self.sites[1]


def gamma_fn(omega, site: SiteParams):
    """Complex half-linewidth ``gamma/2 + i*(delta - omega)`` of one atom."""
    return 0.5 * site.gamma + 1j * (site.delta - np.asarray(omega))


def _phase_ratio(omega, site: SiteParams):
    # conj(Gamma)/Gamma: the unit-modulus response of a single atom
    g = gamma_fn(omega, site)
    return np.conj(g) / g


def _ipow(z, n: int):
    # z**n by binary exponentiation; exact 1+0j at n == 0 and much cheaper
    # than the complex pow ufunc for the small integer exponents used here
    result = np.ones_like(z)
    base = z
    while n:
        if n & 1:
            result = result * base
        base = base * base
        n >>= 1
    return result


def single_photon_phase(omega, config: ChainConfig):
    """Unit-modulus scalar multiplying delta(omega - nu) for one photon.

    A single site contributes ``-conj(Gamma)/Gamma``; every site of a chain
    contributes one such factor, so an N-site chain gives the N-th power and
    the overall sign alternates with N.
    """
    arr = config.arrangement
    if arr is Arrangement.SINGLE:
        return -_phase_ratio(omega, config.site)
    if arr in (Arrangement.CO_PROP_2, Arrangement.COUNTER_PROP_2):
        s1, s2 = config.site_pair
        return _phase_ratio(omega, s1) * _phase_ratio(omega, s2)
    return _ipow(-_phase_ratio(omega, config.site), config.n_sites)


def chain_phase_sum(r1, r2, n: int):
    """Closed form of ``sum_{j=1}^{n} r1**(n-j) * r2**(j-1)``.

    Evaluates ``(r1**n - r2**n) / (r1 - r2)``, switching to the confluent
    branch ``n * r**(n-1)`` where the two ratios coincide to within
    ``1e-12`` relative, where the quotient form would cancel destructively.
    """
    r1 = np.asarray(r1, dtype=complex)
    r2 = np.asarray(r2, dtype=complex)
    diff = r1 - r2
    degenerate = np.abs(diff) < _DEGENERATE_RTOL * (np.abs(r1) + np.abs(r2))
    safe = np.where(degenerate, 1.0, diff)
    closed = (_ipow(r1, n) - _ipow(r2, n)) / safe
    confluent = n * _ipow(0.5 * (r1 + r2), n - 1) if n >= 1 else np.zeros_like(r1)
    out = np.where(degenerate, confluent, closed)
    if out.ndim == 0:
        return complex(out)
    return out


def _kerr_weight(chi: float, d):
    # chi * (1 + 2i*chi/d)**(-1) and its strong-coupling limit d/(2i)
    if math.isinf(chi):
        return d / 2j
    return chi * d / (d + 2j * chi)


def _kernel_single(nu_a, nu_b, w_a, w_b, site: SiteParams):
    ga = gamma_fn(nu_a, site)
    gb = gamma_fn(nu_b, site)
    ha = gamma_fn(w_a, site)
    hb = gamma_fn(w_b, site)
    weight = _kerr_weight(site.chi, ga + gb)
    return (-1j / math.pi) * site.gamma**2 * weight / (ga * gb * ha * hb)


def _kernel_chain(nu_a, nu_b, w_a, w_b, site: SiteParams, n: int):
    ga = gamma_fn(nu_a, site)
    gb = gamma_fn(nu_b, site)
    ha = gamma_fn(w_a, site)
    hb = gamma_fn(w_b, site)
    # Each term of the site sum pairs the input at one end with the output
    # at the other end of the chain segment on either side of the site.
    r1 = (np.conj(ha) / ha) * (np.conj(gb) / gb)
    r2 = (np.conj(hb) / hb) * (np.conj(ga) / ga)
    weight = _kerr_weight(site.chi, ga + gb)
    return (
        (-1j / math.pi)
        * site.gamma**2
        * weight
        * chain_phase_sum(r1, r2, n)
        / (ga * gb * ha * hb)
    )


def _kernel_counter_prop_two(nu_a, nu_b, w_a, w_b, s1: SiteParams, s2: SiteParams):
    # Photon a crosses site 1 then site 2, photon b the reverse.  Each term
    # is the correction at one site dressed by the other site's linear
    # phases at the frequencies the photons carry when crossing it: for the
    # site-1 term these are the outgoing a frequency and the incoming b one.
    d1 = gamma_fn(nu_a, s1) + gamma_fn(nu_b, s1)
    d2 = gamma_fn(nu_a, s2) + gamma_fn(nu_b, s2)
    term1 = (
        s1.gamma**2
        * _kerr_weight(s1.chi, d1)
        * _phase_ratio(nu_a, s2)
        * _phase_ratio(w_b, s2)
        / (
            gamma_fn(nu_a, s1)
            * gamma_fn(nu_b, s1)
            * gamma_fn(w_a, s1)
            * gamma_fn(w_b, s1)
        )
    )
    term2 = (
        s2.gamma**2
        * _kerr_weight(s2.chi, d2)
        * _phase_ratio(w_a, s1)
        * _phase_ratio(nu_b, s1)
        / (
            gamma_fn(nu_a, s2)
            * gamma_fn(nu_b, s2)
            * gamma_fn(w_a, s2)
            * gamma_fn(w_b, s2)
        )
    )
    return (-1j / math.pi) * (term1 + term2)


def _kernel_co_prop_two(nu_a, nu_b, w_a, w_b, s1: SiteParams, s2: SiteParams):
    # Both photons cross site 1 then site 2.  The site-1 term carries site-2
    # phases at the outgoing frequencies, the site-2 term carries site-1
    # phases at the incoming ones (the pair crosses site 1 first); a third
    # term covers the pair interacting at both sites.  Evaluating the
    # site-1 phases of the second term at the outgoing frequencies instead
    # makes the scattering non-unitary.
    d1 = gamma_fn(nu_a, s1) + gamma_fn(nu_b, s1)
    d2 = gamma_fn(nu_a, s2) + gamma_fn(nu_b, s2)
    d12 = gamma_fn(nu_a, s1) + gamma_fn(nu_b, s2)
    w1 = _kerr_weight(s1.chi, d1)
    w2 = _kerr_weight(s2.chi, d2)
    term1 = (
        1j
        * s1.gamma**2
        * w1
        * _phase_ratio(nu_a, s2)
        * _phase_ratio(nu_b, s2)
        / (
            gamma_fn(nu_a, s1)
            * gamma_fn(nu_b, s1)
            * gamma_fn(w_a, s1)
            * gamma_fn(w_b, s1)
        )
    )
    term2 = (
        1j
        * s2.gamma**2
        * w2
        * _phase_ratio(w_a, s1)
        * _phase_ratio(w_b, s1)
        / (
            gamma_fn(nu_a, s2)
            * gamma_fn(nu_b, s2)
            * gamma_fn(w_a, s2)
            * gamma_fn(w_b, s2)
        )
    )
    term3 = (
        4
        * s1.gamma**2
        * s2.gamma**2
        * w1
        * w2
        / (
            gamma_fn(w_a, s1)
            * gamma_fn(w_b, s1)
            * gamma_fn(nu_a, s2)
            * gamma_fn(nu_b, s2)
            * d1
            * d12
            * d2
        )
    )
    return (-1.0 / math.pi) * (term1 + term2 + term3)


def reduced_kernel(nu_a, nu_b, omega_a, config: ChainConfig, remove_deformation: bool = True):
    """Reduced two-photon scattering kernel ``K(nu_a, nu_b, omega_a)``.

    The partner input frequency is fixed by energy conservation,
    ``omega_b = nu_a + nu_b - omega_a``.  All frequency arguments broadcast
    like numpy arrays.

    With ``remove_deformation`` the kernel is multiplied by the conjugate
    single-photon phases at the output frequencies, which cancels the pure
    wave-packet deformation and leaves only the genuine photon-photon
    correction.

    Raises
    ------
    ValueError
        For two-site arrangements with an INFINITE Kerr coupling; the
        analytic limit is implemented for the single-site and
        translation-invariant chains only.
    """
    omega_b = np.asarray(nu_a) + np.asarray(nu_b) - np.asarray(omega_a)
    arr = config.arrangement
    if arr is Arrangement.SINGLE:
        kernel = _kernel_single(nu_a, nu_b, omega_a, omega_b, config.site)
    elif arr is Arrangement.COUNTER_PROP_N:
        kernel = _kernel_chain(
            nu_a, nu_b, omega_a, omega_b, config.site, config.n_sites
        )
    else:
        s1, s2 = config.site_pair
        if s1.infinite_chi or s2.infinite_chi:
            raise ValueError(
                "INFINITE chi is not supported for two-site arrangements; "
                "pass a large finite chi instead"
            )
        if arr is Arrangement.CO_PROP_2:
            kernel = _kernel_co_prop_two(nu_a, nu_b, omega_a, omega_b, s1, s2)
        else:
            kernel = _kernel_counter_prop_two(nu_a, nu_b, omega_a, omega_b, s1, s2)
    if remove_deformation:
        kernel = kernel * np.conj(
            single_photon_phase(nu_a, config) * single_photon_phase(nu_b, config)
        )
    return kernel
