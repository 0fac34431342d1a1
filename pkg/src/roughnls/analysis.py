"""Diagnostics and oracles: conserved quantities, error metrics, Fourier-decay
fits, convergence-order fits and the norm-inflation functional built from the
second Picard iterate of the Duhamel expansion.

The second iterate of i u_t + u_xx + xi u = -|u|^2 u from time-independent
data f is evaluated exactly in coefficient space:

    A2(f)_k = i t xi_0 f_k + i t xi_{2k} f_{-k} - [k=0] i t xi_0 f_0
              + i sum_{k1+k2=k, k^2 != k2^2} (e^{i t (k^2-k2^2)} - 1)/(i (k^2-k2^2)) xi_{k1} f_{k2}
              + i sum_{k1+k2+k3=k} I(k^2+k1^2-k2^2-k3^2) conj(f_{-k1}) f_{k2} f_{k3},

with I(phi) = t for phi = 0 and (e^{i t phi} - 1)/(i phi) otherwise.  The
correction -i t xi_0 f_0 applies only to the k = 0 output mode: it removes the
double-counted resonance (k1, k2) = (0, 0), which exists only when k = 0.
Sums run over the nonzero support of f, so sparse data (a constant, a few
cosine modes, a localized wave packet) is handled in O(kmax * m + m^3) for m
support modes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from .potentials import (
    LogGrowthLaw,
    LogWeightedLaw,
    PinfLaw,
    Potential,
    SobolevLaw,
    gamma_p,
    gen_illposed_potential,
)
from .spectral import (
    Grid,
    SpectralField,
    sobolev_norm,
    to_physical,
    _check_same_grid,
)


def mass(u: SpectralField) -> float:
    """(1/2pi) integral of |u|^2, via Plancherel: sum_k |u_k|^2."""
    return float(np.sum(np.abs(u.coeffs) ** 2))


def energy(u: SpectralField, xi: Potential, lam: float) -> float:
    """integral of |u_x|^2 - xi |u|^2 + (lam/2) |u|^4 over the torus."""
    _check_same_grid(u, xi.field)
    k2 = u.grid.wavenumbers.astype(float) ** 2
    kinetic = 2.0 * np.pi * float(np.sum(k2 * np.abs(u.coeffs) ** 2))
    h = u.grid.spacing
    absu2 = np.abs(to_physical(u)) ** 2
    potential = float(np.sum(xi.physical_values * absu2)) * h
    quartic = float(np.sum(absu2**2)) * h
    return kinetic - potential + 0.5 * lam * quartic


def relative_l2_error(u: SpectralField, ref: SpectralField) -> float:
    """||u - ref||_{L^2} / ||ref||_{L^2}."""
    _check_same_grid(u, ref)
    refnorm = float(np.linalg.norm(ref.coeffs))
    if refnorm == 0.0:
        raise ValueError("reference field has zero norm")
    return float(np.linalg.norm(u.coeffs - ref.coeffs)) / refnorm


@dataclass(frozen=True)
class DecayFit:
    fitted_exponent: float
    k_window: tuple[int, int]
    residual: float
    floor_detected: bool


def decay_slope(f: SpectralField, k_min: int, k_max: int) -> DecayFit:
    """Least-squares slope of log |f_k| against log k over k in [k_min, k_max].

    Magnitudes are symmetrized over +/-k first; bins within a factor 1e-13 of
    the largest coefficient are treated as roundoff floor and excluded.
    """
    half = f.grid.n_modes // 2
    if not (2 <= k_min < k_max <= half - 1):
        raise ValueError(f"window [{k_min}, {k_max}] invalid for n_modes={f.grid.n_modes}")
    n = f.grid.n_modes
    mags = np.abs(f.coeffs)
    ks = np.arange(k_min, k_max + 1)
    sym = 0.5 * (mags[ks % n] + mags[(-ks) % n])
    peak = float(mags.max())
    usable = sym > 1e-13 * peak
    if int(usable.sum()) < 8:
        raise ValueError(f"only {int(usable.sum())} usable bins in window; need >= 8")
    x = np.log(ks[usable].astype(float))
    # normalizing by the peak makes the fit invariant under field scaling
    y = np.log(sym[usable] / peak)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return DecayFit(
        fitted_exponent=float(slope),
        k_window=(k_min, k_max),
        residual=resid,
        floor_detected=bool((~usable).any()),
    )


@dataclass(frozen=True)
class ConvergenceFit:
    order: float
    pairwise: tuple[float, ...]


def convergence_order(taus: Sequence[float], errors: Sequence[float]) -> ConvergenceFit:
    """Global log-log slope of error against tau plus per-interval orders."""
    taus = np.asarray(taus, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if taus.shape != errors.shape or taus.size < 3:
        raise ValueError("need matching tau/error lists of length >= 3")
    if np.any(taus <= 0) or np.any(errors <= 0):
        raise ValueError("taus and errors must be positive")
    if np.any(np.diff(taus) >= 0):
        raise ValueError("taus must be strictly decreasing")
    slope = float(np.polyfit(np.log(taus), np.log(errors), 1)[0])
    pairwise = tuple(
        float(np.log(errors[i] / errors[i + 1]) / np.log(taus[i] / taus[i + 1]))
        for i in range(taus.size - 1)
    )
    return ConvergenceFit(order=slope, pairwise=pairwise)


# ---------------------------------------------------------------------------
# second Picard iterate and norm-inflation curves


def _coeff_table(field: SpectralField) -> tuple[np.ndarray, int]:
    """Dense lookup by semantic index: table[k + half] = coeff, half = n/2."""
    n = field.grid.n_modes
    half = n // 2
    table = np.zeros(n + 1, dtype=np.complex128)
    ks = field.grid.wavenumbers
    table[ks + half] = field.coeffs
    return table, half


def _lookup(table: np.ndarray, half: int, idx: np.ndarray) -> np.ndarray:
    """table value at semantic index, zero outside the stored range."""
    inside = np.abs(idx) <= half
    safe = np.clip(idx + half, 0, table.size - 1)
    return np.where(inside, table[safe], 0.0)


def second_iterate_a2(f: SpectralField, xi: Potential, t: float, kmax: int) -> SpectralField:
    """Exact second Picard iterate A2(f) truncated to output modes |k| <= kmax."""
    grid = f.grid
    half = grid.n_modes // 2
    if not 0 <= kmax <= half - 1:
        raise ValueError(f"kmax={kmax} outside [0, {half - 1}]")
    ftab, fhalf = _coeff_table(f)
    xtab, xhalf = _coeff_table(xi.field)
    k_out = np.arange(-kmax, kmax + 1)
    xi0 = complex(xi.field.coeff(0))
    f0 = complex(_lookup(ftab, fhalf, np.array([0]))[0])

    out = 1j * t * xi0 * _lookup(ftab, fhalf, k_out)
    out = out + 1j * t * _lookup(xtab, xhalf, 2 * k_out) * _lookup(ftab, fhalf, -k_out)
    out[kmax] -= 1j * t * xi0 * f0

    supp_slots = np.nonzero(f.coeffs)[0]
    fmap = {int(grid.wavenumbers[i]): complex(f.coeffs[i]) for i in supp_slots}
    supp = sorted(fmap)

    kf = k_out.astype(float)
    for k2 in supp:
        phiv = kf**2 - float(k2) ** 2
        nz = phiv != 0.0
        w = np.zeros(k_out.size, dtype=np.complex128)
        w[nz] = (np.exp(1j * t * phiv[nz]) - 1.0) / (1j * phiv[nz])
        out += 1j * w * _lookup(xtab, xhalf, k_out - k2) * fmap[k2]

    for a in supp:  # k1 = -a so that conj(f_{-k1}) = conj(f_a)
        ca = np.conj(fmap[a])
        for q2 in supp:
            c2 = ca * fmap[q2]
            for q3 in supp:
                k = -a + q2 + q3
                if abs(k) > kmax:
                    continue
                ph = float(k * k + a * a - q2 * q2 - q3 * q3)
                w = t if ph == 0.0 else (np.exp(1j * t * ph) - 1.0) / (1j * ph)
                out[k + kmax] += 1j * w * c2 * fmap[q3]

    coeffs = np.zeros(grid.n_modes, dtype=np.complex128)
    coeffs[k_out % grid.n_modes] = out
    return SpectralField(grid, coeffs)


class IllposedFamily(Enum):
    THM3_PINF = "thm3-pinf"
    THM3_FINP = "thm3-finp"
    THM4_HS = "thm4-hs"
    THM5_LOGGROW = "thm5-loggrow"


@dataclass(frozen=True)
class IllposedSpec:
    """Counterexample family and its parameters.

    The sweep parameter of :func:`norm_inflation_curve` is M1 for the THM3/THM4
    families (it sets the truncation kmax = M0*(2*M1+1) containing the
    resonant frequency set {M0*(2j+1)}) and the localization frequency N_loc
    for THM5_LOGGROW (kmax = 4*N_loc).  An explicit kmax overrides these.
    """

    family: IllposedFamily
    eps: float
    s: float = 0.0
    p: float = math.inf
    alpha: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    M0: int = 10
    t: Optional[float] = None
    kmax: Optional[int] = None
    smooth_data: bool = False

    def __post_init__(self) -> None:
        if self.eps <= 0:
            raise ValueError("eps must be positive")
        fam = self.family
        if fam in (IllposedFamily.THM3_PINF, IllposedFamily.THM3_FINP, IllposedFamily.THM4_HS):
            if self.M0 < 10:
                raise ValueError("M0 must be >= 10")
            if fam is IllposedFamily.THM3_FINP:
                if math.isinf(self.p) or self.p <= 2:
                    raise ValueError("THM3_FINP needs finite p > 2")
                alpha = self.alpha if self.alpha is not None else (1.0 / self.p + 0.5) / 2.0
                if not (1.0 / self.p < alpha < 0.5):
                    raise ValueError("alpha must lie in (1/p, 1/2)")
                object.__setattr__(self, "alpha", alpha)
            if fam is IllposedFamily.THM4_HS:
                if self.beta is None or self.beta <= 0.5:
                    raise ValueError("THM4_HS needs beta > 1/2")
                if self.gamma is None or self.gamma <= 2.0:
                    raise ValueError("THM4_HS needs gamma > 2")
            if self.t is None:
                object.__setattr__(self, "t", 0.5 * math.pi * self.M0**-2)
        elif fam is IllposedFamily.THM5_LOGGROW:
            if self.gamma is None:
                raise ValueError("THM5_LOGGROW needs gamma")
            if self.t is None or not 0.0 < self.t <= 1e-3:
                raise ValueError("THM5_LOGGROW needs t in (0, 1e-3]")
        else:  # pragma: no cover
            raise ValueError(f"unknown family {fam}")

    @property
    def norm_index(self) -> float:
        if self.family is IllposedFamily.THM3_PINF:
            return self.s + gamma_p(math.inf)
        if self.family is IllposedFamily.THM3_FINP:
            return self.s + gamma_p(self.p)
        if self.family is IllposedFamily.THM4_HS:
            return self.s + self.gamma
        return self.gamma


def resonant_set(M0: int, M1: int) -> np.ndarray:
    """Frequencies M0*(2j+1), j = 1..M1, where the free flow hits phase i."""
    j = np.arange(1, M1 + 1)
    return M0 * (2 * j + 1)


def build_illposed_case(
    spec: IllposedSpec, param: int
) -> tuple[Grid, Potential, SpectralField, int]:
    """Instantiate (grid, xi, u0, kmax) for one sweep value of the family."""
    fam = spec.family
    if fam is IllposedFamily.THM5_LOGGROW:
        n_loc = int(param)
        if n_loc < 32:
            raise ValueError("N_loc must be >= 32")
        kmax = spec.kmax if spec.kmax is not None else 4 * n_loc
        if kmax < n_loc + 30:
            raise ValueError("kmax too small to contain the localized data response")
        grid = Grid(2 * (kmax + 1))
        xi = gen_illposed_potential(grid, LogGrowthLaw())
        coeffs = np.zeros(grid.n_modes, dtype=np.complex128)
        amp = spec.eps * float(n_loc) ** (-spec.gamma)
        for k in range(n_loc - 10, n_loc + 11):
            coeffs[k % grid.n_modes] = amp
        u0 = SpectralField(grid, coeffs)
        return grid, xi, u0, kmax

    M1 = int(param)
    if M1 < 10:
        raise ValueError("M1 must be >= 10")
    kmax = spec.kmax if spec.kmax is not None else spec.M0 * (2 * M1 + 1)
    if spec.M0 * (2 * M1 + 1) > kmax:
        raise ValueError("resonant set does not fit inside kmax")
    grid = Grid(2 * (kmax + 1))
    if fam is IllposedFamily.THM3_PINF:
        xi = gen_illposed_potential(grid, PinfLaw(s=spec.s))
    elif fam is IllposedFamily.THM3_FINP:
        xi = gen_illposed_potential(grid, LogWeightedLaw(s=spec.s, p=spec.p, alpha=spec.alpha))
    else:
        xi = gen_illposed_potential(grid, SobolevLaw(s=spec.s, beta=spec.beta))
    coeffs = np.zeros(grid.n_modes, dtype=np.complex128)
    coeffs[0] = spec.eps
    if spec.smooth_data:
        # eps*(1 + 2cos(2x)) puts eps at k = 0 and at k = +/-2
        coeffs[2 % grid.n_modes] = spec.eps
        coeffs[-2 % grid.n_modes] = spec.eps
    u0 = SpectralField(grid, coeffs)
    return grid, xi, u0, kmax


def norm_inflation_curve(
    spec: IllposedSpec, sweep: Sequence[int]
) -> list[tuple[int, float]]:
    """Sobolev norm of the second Picard iterate for each sweep value.

    Sweep values are M1 (THM3/THM4) or N_loc (THM5) and must be increasing.
    """
    sweep = list(sweep)
    if any(b <= a for a, b in zip(sweep, sweep[1:])):
        raise ValueError("sweep must be strictly increasing")
    out = []
    for param in sweep:
        _, xi, u0, kmax = build_illposed_case(spec, param)
        a2 = second_iterate_a2(u0, xi, spec.t, kmax)
        out.append((int(param), sobolev_norm(a2, spec.norm_index)))
    return out
