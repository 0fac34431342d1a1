"""Time-stepping schemes for i u_t + u_xx + xi(x) u = lambda |u|^2 u.

Implemented one-step maps (tau = time step, D_s the averaged free propagator
with Fourier multiplier phi1(-i s k^2), N_tau the filtered phase modulation):

* LRI            u' = i tau D_tau[xi * D_tau[u]] + N_tau[e^{i tau dxx} u]
* LIE            u' = e^{i tau dxx} e^{-i tau (-xi + lam |u|^2)} u
* EWI            u' = e^{i tau dxx} u - i tau D_tau[(-xi + lam |u|^2) u]
* BRONSARD_LRI   u' = e^{i tau dxx} [u + i tau u D_{-tau} xi
                                       - i tau lam u^2 D_{-2 tau} conj(u)]
* FD_SEMI_IMPLICIT  (i/tau) u' + L_h u' + xi u' = (i/tau) u + lam |u|^2 u,
                 L_h the centered periodic second-difference stencil.

N_tau[f] = e^{-i tau lam |P_{<=N} f|^2} f with cutoff N = floor(tau^{-1/2+eps0});
the projection only feeds the phase, the full field is propagated.  Products
are formed pointwise on the collocation grid (no dealiasing), matching a
plain Fourier pseudospectral treatment.

All steps are pure maps on coefficient arrays; ``evolve`` drives a trajectory
with observer callbacks and a blow-up guard.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import solve_banded

from .potentials import Potential, gamma_p
from .spectral import Grid, SpectralField, phi1


class SchemeId(Enum):
    LRI = "lri"
    LIE = "lie"
    EWI = "ewi"
    BRONSARD_LRI = "bronsard"
    FD_SEMI_IMPLICIT = "fd"


class BlowUpError(RuntimeError):
    """Raised when a trajectory leaves the range of double precision."""

    def __init__(self, step: int, scheme: SchemeId):
        self.step = step
        self.scheme = scheme
        super().__init__(f"non-finite solution after step {step} of {scheme.value}")


class FdSolveError(RuntimeError):
    """Raised when the semi-implicit linear system cannot be solved."""


@dataclass(frozen=True)
class StepperConfig:
    """Step size, nonlinearity coefficient and phase-filter parameters.

    epsilon0 defaults to min(1/(8*(s_assumed + gamma_p)), 1/8) where the
    regularity assumptions only set this default.  The derived phase-filter
    cutoff is n_filter = floor(tau^(-1/2 + epsilon0)).
    """

    tau: float
    lam: float
    epsilon0: Optional[float] = None
    s_assumed: float = 0.0
    p_assumed: float = math.inf

    def __post_init__(self) -> None:
        if self.tau <= 0:
            raise ValueError("tau must be positive")
        if self.epsilon0 is None:
            default = min(1.0 / (8.0 * (self.s_assumed + gamma_p(self.p_assumed))), 0.125)
            object.__setattr__(self, "epsilon0", default)
        if not 0.0 < self.epsilon0 < 0.5:
            raise ValueError("epsilon0 must lie in (0, 1/2)")

    @property
    def n_filter(self) -> int:
        return max(1, int(math.floor(self.tau ** (-0.5 + self.epsilon0))))


def filter_is_active(cfg: StepperConfig, grid: Grid) -> bool:
    """Whether the phase filter actually removes modes on this grid."""
    return cfg.n_filter < grid.n_modes // 2


Kernel = Callable[[np.ndarray], np.ndarray]


def _transforms(grid: Grid):
    n = grid.n_modes
    phase = grid._origin_phase

    def phys(c: np.ndarray) -> np.ndarray:
        return np.fft.ifft(phase * c) * n

    def spec(v: np.ndarray) -> np.ndarray:
        return phase * np.fft.fft(v) / n

    return phys, spec


def _make_kernel(scheme: SchemeId, grid: Grid, xi: Potential, cfg: StepperConfig) -> Kernel:
    """One-step map on raw coefficient arrays with all multipliers precomputed."""
    if xi.grid.n_modes != grid.n_modes:
        raise ValueError("potential grid does not match field grid")
    n = grid.n_modes
    k2 = grid.wavenumbers.astype(float) ** 2
    tau, lam = cfg.tau, cfg.lam
    free = np.exp(-1j * k2 * tau)
    xi_phys = xi.physical_values
    phys, spec = _transforms(grid)

    if scheme is SchemeId.LRI:
        ph1 = phi1(-1j * tau * k2)
        mask = np.abs(grid.wavenumbers) <= cfg.n_filter
        active = filter_is_active(cfg, grid)

        def step(c: np.ndarray) -> np.ndarray:
            pot = 1j * tau * ph1 * spec(xi_phys * phys(ph1 * c))
            b = free * c
            bp = phys(b)
            low = phys(np.where(mask, b, 0.0)) if active else bp
            return pot + spec(np.exp(-1j * tau * lam * np.abs(low) ** 2) * bp)

        return step

    if scheme is SchemeId.LIE:

        def step(c: np.ndarray) -> np.ndarray:
            up = phys(c)
            return free * spec(np.exp(-1j * tau * (-xi_phys + lam * np.abs(up) ** 2)) * up)

        return step

    if scheme is SchemeId.EWI:
        ph1 = phi1(-1j * tau * k2)

        def step(c: np.ndarray) -> np.ndarray:
            up = phys(c)
            g = (-xi_phys + lam * np.abs(up) ** 2) * up
            return free * c - 1j * tau * ph1 * spec(g)

        return step

    if scheme is SchemeId.BRONSARD_LRI:
        dxi = phys(phi1(1j * tau * k2) * xi.field.coeffs)
        ph1_m2 = phi1(2j * tau * k2)
        negperm = grid._negation_perm

        def step(c: np.ndarray) -> np.ndarray:
            up = phys(c)
            dconj = phys(ph1_m2 * np.conj(c[negperm]))
            out = up * (1.0 + 1j * tau * dxi) - 1j * tau * lam * up * up * dconj
            return free * spec(out)

        return step

    if scheme is SchemeId.FD_SEMI_IMPLICIT:
        h = grid.spacing
        off = 1.0 / h**2
        diag = 1j / tau + xi_phys - 2.0 / h**2
        # cyclic tridiagonal via Sherman-Morrison: A = T + outer(u, v)
        gamma = -diag[0]
        ab = np.zeros((3, n), dtype=np.complex128)
        ab[0, 1:] = off
        ab[1, :] = diag
        ab[1, 0] -= gamma
        ab[1, -1] -= off * off / gamma
        ab[2, :-1] = off
        uvec = np.zeros(n, dtype=np.complex128)
        uvec[0] = gamma
        uvec[-1] = off
        v_last = off / gamma

        def step(c: np.ndarray) -> np.ndarray:
            up = phys(c)
            rhs = (1j / tau) * up + lam * np.abs(up) ** 2 * up
            try:
                sol = solve_banded((1, 1), ab, np.column_stack([rhs, uvec]))
            except np.linalg.LinAlgError as exc:  # pragma: no cover - not expected
                raise FdSolveError(f"banded solve failed: {exc}") from exc
            y, q = sol[:, 0], sol[:, 1]
            denom = 1.0 + q[0] + v_last * q[-1]
            if abs(denom) < 1e-14:
                raise FdSolveError("singular cyclic correction in FD step")
            x = y - q * ((y[0] + v_last * y[-1]) / denom)
            return spec(x)

        return step

    raise ValueError(f"unknown scheme {scheme!r}")


def _run_step(u: SpectralField, xi: Potential, cfg: StepperConfig, scheme: SchemeId) -> SpectralField:
    kernel = _make_kernel(scheme, u.grid, xi, cfg)
    return SpectralField(u.grid, kernel(u.coeffs))


def lri_step(u: SpectralField, xi: Potential, cfg: StepperConfig) -> SpectralField:
    return _run_step(u, xi, cfg, SchemeId.LRI)


def lie_step(u: SpectralField, xi: Potential, cfg: StepperConfig) -> SpectralField:
    return _run_step(u, xi, cfg, SchemeId.LIE)


def ewi_step(u: SpectralField, xi: Potential, cfg: StepperConfig) -> SpectralField:
    return _run_step(u, xi, cfg, SchemeId.EWI)


def bronsard_step(u: SpectralField, xi: Potential, cfg: StepperConfig) -> SpectralField:
    return _run_step(u, xi, cfg, SchemeId.BRONSARD_LRI)


def fd_step(u: SpectralField, xi: Potential, cfg: StepperConfig) -> SpectralField:
    return _run_step(u, xi, cfg, SchemeId.FD_SEMI_IMPLICIT)


STEP_FUNCTIONS = {
    SchemeId.LRI: lri_step,
    SchemeId.LIE: lie_step,
    SchemeId.EWI: ewi_step,
    SchemeId.BRONSARD_LRI: bronsard_step,
    SchemeId.FD_SEMI_IMPLICIT: fd_step,
}


@dataclass
class Observer:
    """Named callback sampled every `stride` steps (plus start and end)."""

    name: str
    fn: Callable[[int, float, SpectralField], object]
    stride: int = 1


def mass_observer(stride: int = 1) -> Observer:
    from .analysis import mass

    return Observer("mass", lambda n, t, u: mass(u), stride)


def energy_observer(xi: Potential, lam: float, stride: int = 1) -> Observer:
    from .analysis import energy

    return Observer("energy", lambda n, t, u: energy(u, xi, lam), stride)


def snapshot_observer(stride: int) -> Observer:
    return Observer("snapshot", lambda n, t, u: u.copy(), stride)


@dataclass
class EvolveResult:
    final: SpectralField
    records: dict[str, list[tuple[int, float, object]]] = field(default_factory=dict)


def n_steps_for(t_final: float, tau: float) -> int:
    """Number of steps for t_final; rejects non-integer multiples of tau."""
    ratio = t_final / tau
    n = int(round(ratio))
    if n < 0 or abs(n * tau - t_final) > 1e-12 * max(1.0, abs(t_final)):
        raise ValueError(f"t_final={t_final} is not an integer multiple of tau={tau}")
    return n


def evolve(
    u0: SpectralField,
    xi: Potential,
    scheme: SchemeId,
    cfg: StepperConfig,
    t_final: float,
    observers: Sequence[Observer] = (),
) -> EvolveResult:
    """Advance u0 by n = t_final/tau steps of the chosen scheme.

    Observers fire at step 0, every `stride` steps, and at the final step.
    A non-finite coefficient aborts the run with the offending step index.
    """
    nsteps = n_steps_for(t_final, cfg.tau)
    kernel = _make_kernel(scheme, u0.grid, xi, cfg)
    records: dict[str, list[tuple[int, float, object]]] = {o.name: [] for o in observers}

    def notify(step: int, arr: np.ndarray) -> None:
        due = [o for o in observers if step % o.stride == 0 or step == nsteps]
        if not due:
            return
        t = step * cfg.tau
        fld = SpectralField(u0.grid, arr.copy())
        for obs in due:
            records[obs.name].append((step, t, obs.fn(step, t, fld)))

    arr = u0.coeffs.copy()
    notify(0, arr)
    # overflow inside a diverging step is expected; the guard below reports it
    with np.errstate(over="ignore", invalid="ignore"):
        for step in range(1, nsteps + 1):
            arr = kernel(arr)
            if not np.all(np.isfinite(arr)):
                raise BlowUpError(step, scheme)
            if observers:
                notify(step, arr)
    return EvolveResult(final=SpectralField(u0.grid, arr), records=records)
