"""One-step scheme identities, stability invariants and trajectory driving."""

import math

import numpy as np
import pytest

from roughnls.analysis import mass
from roughnls.integrators import (
    BlowUpError,
    Observer,
    SchemeId,
    StepperConfig,
    bronsard_step,
    evolve,
    ewi_step,
    fd_step,
    filter_is_active,
    lie_step,
    lri_step,
    mass_observer,
    n_steps_for,
    _make_kernel,
)
from roughnls.potentials import (
    RoughInitSpec,
    gen_delta_comb,
    gen_powerlaw_potential,
    gen_rough_initial,
    potential_from_field,
    zero_potential,
)
from roughnls.spectral import (
    Grid,
    SpectralField,
    apply_dtau,
    free_propagate,
    hermitian_part,
    l2_inner,
    m_tau,
    phi1,
    to_physical,
    to_spectral,
)

SPECTRAL_SCHEMES = [lri_step, lie_step, ewi_step, bronsard_step]


def single_mode(grid, k, amp=1.0):
    coeffs = np.zeros(grid.n_modes, dtype=complex)
    coeffs[k % grid.n_modes] = amp
    return SpectralField(grid, coeffs)


def random_field(grid, seed=0, bandwidth=None):
    rng = np.random.default_rng(seed)
    coeffs = rng.standard_normal(grid.n_modes) + 1j * rng.standard_normal(grid.n_modes)
    if bandwidth is not None:
        coeffs = np.where(np.abs(grid.wavenumbers) <= bandwidth, coeffs, 0.0)
    return SpectralField(grid, coeffs)


class TestStepperConfig:
    def test_default_epsilon0(self):
        cfg = StepperConfig(tau=1e-3, lam=1.0)
        assert abs(cfg.epsilon0 - 1.0 / 12.0) < 1e-15
        assert cfg.n_filter == int(math.floor((1e-3) ** (-0.5 + 1.0 / 12.0)))

    def test_epsilon0_from_regularity(self):
        cfg = StepperConfig(tau=1e-3, lam=1.0, s_assumed=0.25, p_assumed=2.0)
        assert abs(cfg.epsilon0 - 1.0 / (8.0 * 2.25)) < 1e-15

    def test_filter_floor(self):
        assert StepperConfig(tau=0.9, lam=0.0).n_filter >= 1

    @pytest.mark.parametrize("bad", [0.0, -1e-3])
    def test_rejects_bad_tau(self, bad):
        with pytest.raises(ValueError):
            StepperConfig(tau=bad, lam=1.0)

    def test_rejects_bad_epsilon(self):
        with pytest.raises(ValueError):
            StepperConfig(tau=1e-3, lam=1.0, epsilon0=0.7)

    def test_filter_activity(self):
        g = Grid(2048)
        cfg = StepperConfig(tau=1e-3, lam=1.0)
        assert filter_is_active(cfg, g)
        assert not filter_is_active(cfg, Grid(16))


class TestFreeFlowDegeneracy:
    @pytest.mark.parametrize("step_fn", SPECTRAL_SCHEMES)
    def test_zero_potential_zero_lambda(self, step_fn):
        g = Grid(64)
        u = random_field(g, seed=1)
        cfg = StepperConfig(tau=2e-3, lam=0.0)
        out = step_fn(u, zero_potential(g), cfg)
        expected = free_propagate(u, cfg.tau)
        assert np.max(np.abs(out.coeffs - expected.coeffs)) < 1e-14 * np.max(np.abs(u.coeffs))


class TestLriStep:
    def test_pure_phase_preserves_modulus(self):
        g = Grid(64)
        u = single_mode(g, 1)
        cfg = StepperConfig(tau=5e-3, lam=3.0)
        out = lri_step(u, zero_potential(g), cfg)
        assert np.allclose(
            np.abs(to_physical(out)), np.abs(to_physical(u)), rtol=1e-13, atol=1e-14
        )

    def test_modulus_preserved_general_field(self):
        g = Grid(128)
        u = random_field(g, seed=2)
        cfg = StepperConfig(tau=1e-2, lam=-2.0)
        out = lri_step(u, zero_potential(g), cfg)
        prop = free_propagate(u, cfg.tau)
        assert np.allclose(np.abs(to_physical(out)), np.abs(to_physical(prop)), rtol=1e-12)

    def test_single_step_defect_order(self):
        # one step vs 64 substeps of the same scheme; halving tau should
        # shrink the defect by at least 2^1.15 (local error ~ tau^(1+1/4))
        g = Grid(256)
        xi = gen_delta_comb(g, [0.0], -0.2)
        u0 = gen_rough_initial(g, RoughInitSpec(decay=2.55, amp_re=(0.0, 1.0), seed=3))

        def defect(tau):
            one = lri_step(u0, xi, StepperConfig(tau=tau, lam=-2.0))
            sub = u0
            cfg = StepperConfig(tau=tau / 64.0, lam=-2.0)
            for _ in range(64):
                sub = lri_step(sub, xi, cfg)
            return float(np.linalg.norm(one.coeffs - sub.coeffs))

        assert defect(1e-3) / defect(5e-4) >= 2.0**1.15


class TestLieStep:
    def test_constant_closed_form(self):
        g = Grid(32)
        c = 1.3 - 0.4j
        cfg = StepperConfig(tau=0.01, lam=2.0)
        out = lie_step(single_mode(g, 0, c), zero_potential(g), cfg)
        expected = np.exp(-1j * cfg.tau * cfg.lam * abs(c) ** 2) * c
        assert abs(out.coeff(0) - expected) < 1e-14

    def test_mass_preserved_per_step(self):
        g = Grid(128)
        xi = gen_powerlaw_potential(g, 0.0, 2.0, 0.0, 1.0, seed=4)
        u = random_field(g, seed=5)
        out = lie_step(u, xi, StepperConfig(tau=0.02, lam=-2.0))
        assert abs(mass(out) - mass(u)) < 1e-12 * mass(u)


class TestEwiStep:
    def test_zero_field(self):
        g = Grid(32)
        xi = gen_delta_comb(g, [0.0], -0.2)
        out = ewi_step(SpectralField(g, np.zeros(32, dtype=complex)), xi, StepperConfig(tau=0.01, lam=1.0))
        assert np.max(np.abs(out.coeffs)) == 0.0

    def test_small_tau_limit(self):
        # (step - free)/tau approximates -i(-xi + lam |u|^2)u to O(tau)
        g = Grid(64)
        xi = gen_powerlaw_potential(g, 1.0, 1.0, 1.0, 1.0, seed=6)
        u = random_field(g, seed=7, bandwidth=10)
        lam = 1.5
        up = to_physical(u)
        rhs = to_spectral(g, -1j * (-xi.physical_values + lam * np.abs(up) ** 2) * up)

        def residual(tau):
            out = ewi_step(u, xi, StepperConfig(tau=tau, lam=lam))
            diff = (out.coeffs - free_propagate(u, tau).coeffs) / tau
            return float(np.linalg.norm(diff - rhs.coeffs))

        assert residual(1e-4) < 0.2 * residual(1e-3)


class TestBronsardStep:
    def test_constant_closed_form(self):
        g = Grid(32)
        c = 0.8 + 0.3j
        cfg = StepperConfig(tau=0.02, lam=1.7)
        out = bronsard_step(single_mode(g, 0, c), zero_potential(g), cfg)
        expected = c * (1.0 - 1j * cfg.tau * cfg.lam * abs(c) ** 2)
        assert abs(out.coeff(0) - expected) < 1e-14

    def test_zero_field(self):
        g = Grid(32)
        xi = gen_delta_comb(g, [0.0], -1.0)
        out = bronsard_step(
            SpectralField(g, np.zeros(32, dtype=complex)), xi, StepperConfig(tau=0.01, lam=1.0)
        )
        assert np.max(np.abs(out.coeffs)) == 0.0

    def test_negative_argument_multipliers(self):
        # D_{-tau} must be the conjugate multiplier of D_tau
        g = Grid(64)
        tau = 0.03
        k2 = g.wavenumbers.astype(float) ** 2
        assert np.allclose(phi1(1j * tau * k2), np.conj(phi1(-1j * tau * k2)))


class TestFdStep:
    def test_stencil_eigenvalue(self):
        g = Grid(64)
        u = single_mode(g, 1)
        cfg = StepperConfig(tau=0.01, lam=0.0)
        out = fd_step(u, zero_potential(g), cfg)
        h = g.spacing
        mu = 2.0 * (1.0 - np.cos(h)) / h**2
        expected = 1.0 / (1.0 + 1j * cfg.tau * mu)
        assert abs(out.coeff(1) - expected) < 1e-12

    def test_residual_oracle(self):
        g = Grid(128)
        xi = gen_delta_comb(g, [0.0], -0.2)
        u = random_field(g, seed=8)
        cfg = StepperConfig(tau=2e-3, lam=-2.0)
        out = fd_step(u, xi, cfg)
        up, op = to_physical(u), to_physical(out)
        h = g.spacing
        stencil = (np.roll(op, -1) - 2.0 * op + np.roll(op, 1)) / h**2
        residual = (
            1j * (op - up) / cfg.tau
            + stencil
            + xi.physical_values * op
            - cfg.lam * np.abs(up) ** 2 * up
        )
        assert np.max(np.abs(residual)) < 1e-10 * np.max(np.abs(up)) / cfg.tau

    def test_small_tau_freezes(self):
        g = Grid(64)
        xi = gen_delta_comb(g, [0.0], -0.2)
        u = random_field(g, seed=9, bandwidth=8)
        out = fd_step(u, xi, StepperConfig(tau=1e-9, lam=-2.0))
        assert np.max(np.abs(out.coeffs - u.coeffs)) < 1e-5 * np.max(np.abs(u.coeffs))


class TestPotentialPartOrthogonality:
    def test_inner_product_vanishes(self):
        # <h, i tau D_{-tau}[xi D_tau h]> = 0 for real xi: the potential part
        # of the scheme is an L^2 isometry to leading order
        g = Grid(256)
        xi = gen_powerlaw_potential(g, 0.0, 2.0, 2.0, 1.0, seed=10)
        tau = 1e-2
        k2 = g.wavenumbers.astype(float) ** 2
        for seed in (11, 12, 13):
            h = random_field(g, seed=seed)
            dh = apply_dtau(h, tau)
            prod = to_spectral(g, xi.physical_values * to_physical(dh))
            dmt = SpectralField(g, phi1(1j * tau * k2) * prod.coeffs)
            inner = l2_inner(h, SpectralField(g, 1j * tau * dmt.coeffs))
            scale = np.max(np.abs(xi.physical_values)) * mass(h) * 2 * np.pi
            assert abs(inner) < 1e-10 * tau * scale

    def test_pointwise_integrand_real(self):
        g = Grid(128)
        xi = gen_powerlaw_potential(g, 0.0, 1.0, 1.0, 1.0, seed=14)
        h = random_field(g, seed=15)
        dh = to_physical(apply_dtau(h, 5e-3))
        integral = np.sum(xi.physical_values * np.abs(dh) ** 2) * g.spacing
        assert abs(integral.imag if np.iscomplexobj(integral) else 0.0) == 0.0


class TestAverageSplittingBound:
    def test_product_splitting_constant_four(self):
        taus = [1e-1, 1e-2, 1e-3]
        base = [1, 2, 5, 17, 129, 1024, 4097, 9999, 10000]
        alphas = [float(s * v) for v in base for s in (+1, -1)]
        for tau in taus:
            for a in alphas:
                for b in alphas:
                    lhs = abs(m_tau(a + b, tau) - m_tau(a, tau) * m_tau(b, tau))
                    bound = 4.0 * min(abs(a / b), abs(b / a), tau * abs(a), tau * abs(b))
                    assert lhs <= bound + 1e-12, (a, b, tau)


class TestEvolve:
    def test_zero_steps(self):
        g = Grid(32)
        u = random_field(g, seed=16)
        res = evolve(u, zero_potential(g), SchemeId.LRI, StepperConfig(tau=0.1, lam=1.0), 0.0)
        assert np.array_equal(res.final.coeffs, u.coeffs)

    @pytest.mark.parametrize("scheme", [SchemeId.LRI, SchemeId.LIE, SchemeId.EWI, SchemeId.BRONSARD_LRI])
    def test_free_flow(self, scheme):
        g = Grid(64)
        u = random_field(g, seed=17)
        t_final = 0.5
        res = evolve(u, zero_potential(g), scheme, StepperConfig(tau=1e-3, lam=0.0), t_final)
        expected = free_propagate(u, t_final)
        err = np.linalg.norm(res.final.coeffs - expected.coeffs) / np.linalg.norm(u.coeffs)
        assert err < 1e-10

    def test_non_integer_step_count(self):
        g = Grid(32)
        with pytest.raises(ValueError):
            evolve(
                random_field(g), zero_potential(g), SchemeId.LIE,
                StepperConfig(tau=3e-3, lam=0.0), 1.0,
            )
        assert n_steps_for(1.0, 2e-3) == 500

    def test_blowup_reports_step(self):
        g = Grid(64)
        xi = gen_delta_comb(g, [0.0], -50.0)
        u = random_field(g, seed=18)
        with pytest.raises(BlowUpError) as err:
            evolve(u, xi, SchemeId.EWI, StepperConfig(tau=0.5, lam=0.0), 50.0)
        assert err.value.step >= 1

    def test_matches_repeated_steps(self):
        g = Grid(64)
        xi = gen_delta_comb(g, [0.0], -0.2)
        u = gen_rough_initial(g, RoughInitSpec(decay=2.55, amp_re=(0.0, 1.0), seed=19))
        cfg = StepperConfig(tau=0.05, lam=-2.0)
        res = evolve(u, xi, SchemeId.LRI, cfg, 0.15)
        manual = u
        for _ in range(3):
            manual = lri_step(manual, xi, cfg)
        assert np.array_equal(res.final.coeffs, manual.coeffs)

    def test_observers_fire_on_stride(self):
        g = Grid(32)
        u = random_field(g, seed=20)
        cfg = StepperConfig(tau=0.1, lam=0.0)
        obs = [mass_observer(stride=2), Observer("steps", lambda n, t, f: n, stride=5)]
        res = evolve(u, zero_potential(g), SchemeId.LIE, cfg, 1.0, obs)
        mass_steps = [s for s, _, _ in res.records["mass"]]
        assert mass_steps == [0, 2, 4, 6, 8, 10]
        assert [s for s, _, _ in res.records["steps"]] == [0, 5, 10]
        assert all(abs(v - mass(u)) < 1e-12 for _, _, v in res.records["mass"])

    def test_lri_mass_drift_shrinks_with_tau(self):
        # per-step drift is O(tau^2 * sup|xi|^2), so over 1/tau steps the
        # accumulated drift shrinks like tau for a bounded potential
        g = Grid(128)
        xi = gen_powerlaw_potential(g, 0.0, 2.0, 0.0, 1.0, seed=40)
        u = gen_rough_initial(g, RoughInitSpec(decay=2.55, amp_re=(0.0, 1.0), seed=21))
        m0 = mass(u)

        def drift(tau):
            res = evolve(u, xi, SchemeId.LRI, StepperConfig(tau=tau, lam=-2.0), 1.0)
            return abs(mass(res.final) - m0)

        drifts = [drift(tau) for tau in (4e-3, 2e-3, 1e-3)]
        assert drifts[0] / drifts[1] > 1.5
        assert drifts[1] / drifts[2] > 1.5

    def test_kernel_grid_mismatch(self):
        g = Grid(32)
        xi = gen_delta_comb(Grid(64), [0.0], -0.2)
        with pytest.raises(ValueError):
            _make_kernel(SchemeId.LRI, g, xi, StepperConfig(tau=0.1, lam=0.0))
