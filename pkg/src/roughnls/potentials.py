"""Rough potentials and rough initial data with reproducible random streams.

All randomized constructions draw from a self-contained xoshiro256** stream
seeded through splitmix64, so identical (kind, params, seed, grid) inputs are
bit-identical across runs and platforms.  Draws are consumed in ascending
order of the frequency index k.

Coefficient laws use the e^{ikx} basis of :mod:`roughnls.spectral`; the random
series generators additionally carry the e^{ik(x+pi)} phase, i.e. their raw
coefficients are multiplied by (-1)^k before symmetrization.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Union

import numpy as np

from .spectral import (
    Grid,
    SpectralField,
    hermitian_part,
    is_hermitian,
    to_physical_real,
)

_MASK64 = (1 << 64) - 1


class Xoshiro256StarStar:
    """xoshiro256** with splitmix64 seeding (Blackman/Vigna reference algorithm)."""

    def __init__(self, seed: int):
        state = []
        x = seed & _MASK64
        for _ in range(4):
            x = (x + 0x9E3779B97F4A7C15) & _MASK64
            z = x
            z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
            z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
            state.append(z ^ (z >> 31))
        self._s = state

    @staticmethod
    def _rotl(x: int, k: int) -> int:
        return ((x << k) | (x >> (64 - k))) & _MASK64

    def next_u64(self) -> int:
        s0, s1, s2, s3 = self._s
        result = (self._rotl((s1 * 5) & _MASK64, 7) * 9) & _MASK64
        t = (s1 << 17) & _MASK64
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = self._rotl(s3, 45)
        self._s = [s0, s1, s2, s3]
        return result

    def uniform(self, lo: float, hi: float) -> float:
        """Uniform draw in [lo, hi) from the top 53 bits of the stream."""
        u = (self.next_u64() >> 11) * 2.0**-53
        return lo + (hi - lo) * u


@dataclass
class Potential:
    """Real-valued potential with provenance metadata and a cached norm table."""

    field: SpectralField
    kind: str
    params: dict
    seed: Optional[int] = None
    _norm_cache: dict = None  # keyed by (s, p)

    def __post_init__(self) -> None:
        if self._norm_cache is None:
            self._norm_cache = {}
        if not is_hermitian(self.field):
            raise ValueError(f"potential '{self.kind}' is not real-valued on the grid")

    @property
    def grid(self) -> Grid:
        return self.field.grid

    @cached_property
    def physical_values(self) -> np.ndarray:
        return to_physical_real(self.field)


@dataclass(frozen=True)
class RoughInitSpec:
    """Coefficient law u_k = eta_k |k|^{-decay} (k != 0) with uniform eta draws.

    ``amp_im`` of None means eta is real (drawn from amp_re only); otherwise
    eta = Re + i*Im with the two parts drawn from their respective intervals.
    """

    decay: float
    amp_re: tuple[float, float] = (0.0, 1.0)
    amp_im: Optional[tuple[float, float]] = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.decay <= 0:
            raise ValueError("decay must be positive")

    @property
    def real_part_only(self) -> bool:
        return self.amp_im is None


def gamma_p(p: float) -> float:
    """Critical regularity index 3/2 + 1/p (p may be math.inf)."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return 1.5 + (0.0 if math.isinf(p) else 1.0 / p)


def _ascending_k(grid: Grid) -> np.ndarray:
    n = grid.n_modes
    return np.arange(-n // 2, n // 2)


def gen_interval_potential(
    grid: Grid,
    delta: float,
    re_range: tuple[float, float],
    im_range: tuple[float, float],
    dc_value: float,
    seed: int,
) -> Potential:
    """Random series Re sum_k zeta_k e^{ik(x+pi)} with zeta_k = (eta1 + i*eta2)|k|^{-delta}.

    eta1, eta2 are uniform on re_range/im_range, drawn in ascending-k order
    (eta1 first), skipping k = 0 where zeta_0 = dc_value.
    """
    if delta < 0:
        raise ValueError("delta must be >= 0")
    rng = Xoshiro256StarStar(seed)
    n = grid.n_modes
    coeffs_by_k = np.zeros(n, dtype=np.complex128)
    ks = _ascending_k(grid)
    for i, k in enumerate(ks):
        if k == 0:
            coeffs_by_k[i] = dc_value
            continue
        eta1 = rng.uniform(*re_range)
        eta2 = rng.uniform(*im_range)
        coeffs_by_k[i] = (eta1 + 1j * eta2) * abs(k) ** (-delta)
    zeta = np.zeros(n, dtype=np.complex128)
    zeta[ks % n] = coeffs_by_k
    zeta *= grid._origin_phase  # e^{ik pi}
    fld = hermitian_part(SpectralField(grid, zeta))
    return Potential(
        field=fld,
        kind="powerlaw",
        params={
            "delta": delta,
            "re_range": list(re_range),
            "im_range": list(im_range),
            "dc_value": dc_value,
        },
        seed=seed,
    )


def gen_powerlaw_potential(
    grid: Grid,
    delta: float,
    amp_bound_re: float,
    amp_bound_im: float,
    dc_value: float,
    seed: int,
) -> Potential:
    """Symmetric-interval special case: eta1 in [-a_re, a_re], eta2 in [-a_im, a_im]."""
    if amp_bound_re < 0 or amp_bound_im < 0:
        raise ValueError("amplitude bounds must be >= 0")
    return gen_interval_potential(
        grid,
        delta,
        (-amp_bound_re, amp_bound_re),
        (-amp_bound_im, amp_bound_im),
        dc_value,
        seed,
    )


def gen_delta_comb(grid: Grid, centers: list[float], amplitude: float) -> Potential:
    """Dirac-comb style potential: xi_k = amplitude * sum_c e^{-ikc} on all retained k.

    Realness on the grid is enforced by taking the real part, so centers
    should come in +/- pairs or sit at 0 for the intended distribution.
    """
    for c in centers:
        if not -np.pi <= c < np.pi:
            raise ValueError(f"center {c} outside [-pi, pi)")
    k = grid.wavenumbers.astype(float)
    coeffs = np.zeros(grid.n_modes, dtype=np.complex128)
    for c in centers:
        coeffs += np.exp(-1j * k * c)
    coeffs *= amplitude
    fld = hermitian_part(SpectralField(grid, coeffs))
    return Potential(
        field=fld,
        kind="delta_comb",
        params={"centers": list(centers), "amplitude": amplitude},
        seed=None,
    )


@dataclass(frozen=True)
class PinfLaw:
    """xi_0 = 1, xi_k = |k|^{-s}; the s = 0 case is 2*pi*delta up to truncation."""

    s: float = 0.0


@dataclass(frozen=True)
class LogWeightedLaw:
    """xi_0 = 1, xi_k = |k|^{-(s+1/p)} (ln|k|)^{-alpha}; needs 1/p < alpha < 1/2."""

    s: float
    p: float
    alpha: float

    def __post_init__(self) -> None:
        if not (1.0 / self.p < self.alpha < 0.5):
            raise ValueError(f"alpha must lie in (1/p, 1/2) = ({1/self.p}, 0.5)")


@dataclass(frozen=True)
class SobolevLaw:
    """xi_0 = 1, xi_k = |k|^{-(s+beta)}; needs beta > 1/2 for xi in H^s."""

    s: float
    beta: float

    def __post_init__(self) -> None:
        if self.beta <= 0.5:
            raise ValueError("beta must be > 1/2")


@dataclass(frozen=True)
class LogGrowthLaw:
    """xi_k = ln|k| for |k| > 10, zero otherwise; coefficients are unbounded."""


IllposedVariant = Union[PinfLaw, LogWeightedLaw, SobolevLaw, LogGrowthLaw]


def gen_illposed_potential(grid: Grid, variant: IllposedVariant) -> Potential:
    """Deterministic counterexample potential with the variant's coefficient law.

    The law is populated on the symmetric range |k| <= n/2 - 1; the unpaired
    Nyquist slot stays zero so the field is exactly Hermitian.
    """
    k = grid.wavenumbers
    absk = np.abs(k).astype(float)
    half = grid.n_modes // 2
    coeffs = np.zeros(grid.n_modes, dtype=np.complex128)
    inside = (np.abs(k) <= half - 1) & (k != 0)
    safe = np.where(absk > 0, absk, 1.0)
    if isinstance(variant, PinfLaw):
        coeffs[inside] = safe[inside] ** (-variant.s)
        coeffs[k == 0] = 1.0
        kind = "illposed_pinf"
        params = {"s": variant.s}
    elif isinstance(variant, LogWeightedLaw):
        # the law is singular at |k| = 1 (ln 1 = 0); those modes stay zero
        mask = inside & (absk >= 2)
        coeffs[mask] = safe[mask] ** (-(variant.s + 1.0 / variant.p)) * np.log(safe[mask]) ** (
            -variant.alpha
        )
        coeffs[k == 0] = 1.0
        kind = "illposed_logp"
        params = {"s": variant.s, "p": variant.p, "alpha": variant.alpha}
    elif isinstance(variant, SobolevLaw):
        coeffs[inside] = safe[inside] ** (-(variant.s + variant.beta))
        coeffs[k == 0] = 1.0
        kind = "illposed_hs"
        params = {"s": variant.s, "beta": variant.beta}
    elif isinstance(variant, LogGrowthLaw):
        mask = inside & (absk > 10)
        coeffs[mask] = np.log(safe[mask])
        kind = "illposed_loggrow"
        params = {}
    else:
        raise TypeError(f"unknown variant {variant!r}")
    return Potential(field=SpectralField(grid, coeffs), kind=kind, params=params, seed=None)


def zero_potential(grid: Grid) -> Potential:
    return Potential(
        field=SpectralField(grid, np.zeros(grid.n_modes, dtype=np.complex128)),
        kind="zero",
        params={},
        seed=None,
    )


def potential_from_field(field: SpectralField, kind: str = "custom", params: dict | None = None) -> Potential:
    return Potential(field=field, kind=kind, params=params or {}, seed=None)


def gen_rough_initial(grid: Grid, spec: RoughInitSpec) -> SpectralField:
    """Random initial data u_k = eta_k |k|^{-decay}, u_0 = 0 (complex-valued field)."""
    rng = Xoshiro256StarStar(spec.seed)
    n = grid.n_modes
    coeffs_by_k = np.zeros(n, dtype=np.complex128)
    for i, k in enumerate(_ascending_k(grid)):
        if k == 0:
            continue
        eta = rng.uniform(*spec.amp_re)
        if spec.amp_im is not None:
            eta = eta + 1j * rng.uniform(*spec.amp_im)
        coeffs_by_k[i] = eta * abs(k) ** (-spec.decay)
    coeffs = np.zeros(n, dtype=np.complex128)
    coeffs[_ascending_k(grid) % n] = coeffs_by_k
    return SpectralField(grid, coeffs)


def bhat_norm(pot: Potential, s: float, p: float) -> float:
    """|xi_0| + || |k|^s xi_k ||_{l^p} over the retained k != 0."""
    key = (s, p)
    if key in pot._norm_cache:
        return pot._norm_cache[key]
    k = pot.field.grid.wavenumbers
    nz = k != 0
    weighted = np.abs(k[nz]).astype(float) ** s * np.abs(pot.field.coeffs[nz])
    dc = abs(pot.field.coeff(0))
    if math.isinf(p):
        tail = float(np.max(weighted)) if weighted.size else 0.0
    else:
        tail = float(np.sum(weighted**p) ** (1.0 / p))
    value = dc + tail
    pot._norm_cache[key] = value
    return value


def export_potential_csv(pot: Potential, path) -> None:
    """Write the coefficient table as CSV rows (k, re, im) sorted by k."""
    ks, coeffs = pot.field.ordered()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "re", "im"])
        for k, c in zip(ks, coeffs):
            writer.writerow([int(k), format(c.real, ".17g"), format(c.imag, ".17g")])


def import_potential_csv(path) -> Potential:
    """Rebuild a Potential from an exported coefficient table."""
    ks, res, ims = [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["k", "re", "im"]:
            raise ValueError(f"unexpected header {header}")
        for row in reader:
            ks.append(int(row[0]))
            res.append(float(row[1]))
            ims.append(float(row[2]))
    n = len(ks)
    grid = Grid(n)
    coeffs = np.zeros(n, dtype=np.complex128)
    for k, re, im in zip(ks, res, ims):
        coeffs[k % n] = re + 1j * im
    return Potential(
        field=SpectralField(grid, coeffs),
        kind="imported",
        params={"source": str(path)},
        seed=None,
    )
