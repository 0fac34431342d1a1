"""Named experiment presets with fixed, documented seeds.

The regularity presets probe the Fourier decay of the solution at t = 2 for
three potential classes; the convergence presets sweep tau for the LRI under
a delta-comb and two power-law potentials; the comparison presets race all
five schemes on shared data; the illposed presets sweep the norm-inflation
functional.

Random seeds are arbitrary fixed constants; they make every preset
bit-reproducible but carry no other meaning.  The illposed-thm5 preset uses
eps = 1/(2*sqrt(42*pi)) ~ 0.04353, which normalizes the resonant response of
the 21-mode wave packet so the theoretical asymptotic growth per ln(N) equals
t/2 under this package's norm convention.
"""

from __future__ import annotations

import math

from .experiments import ExperimentSpec, validate_spec


def _reg(name: str, potential: dict, seed: int) -> dict:
    return {
        "kind": "regularity",
        "name": name,
        "grid_size": 1024,
        "lambda": 1.0,
        "t_final": 2.0,
        "seed": seed,
        "potential": potential,
        "initial": {"type": "smooth"},
        "regularity": {"tau": 1e-4},
    }


def _dyadic(j_hi: int, j_lo: int) -> list[float]:
    return [2.0**-j for j in range(j_hi, j_lo + 1)]


_RAW_PRESETS: dict[str, dict] = {
    # Fourier-decay probes of the solution regularity (expected exponents
    # about -2, -2.25 and -2.5 over the default window).
    "reg-6.1": _reg(
        "reg-6.1",
        {"type": "powerlaw", "delta": 0.0, "amp_re": 2.0, "amp_im": 0.0, "dc": 1.0},
        seed=101,
    ),
    "reg-6.2": _reg(
        "reg-6.2",
        {"type": "powerlaw", "delta": 0.26, "amp_re": 4.0, "amp_im": 4.0, "dc": 1.0},
        seed=102,
    ),
    "reg-6.3": _reg(
        "reg-6.3",
        {"type": "powerlaw", "delta": 0.6, "amp_re": 5.0, "amp_im": 5.0, "dc": 1.0},
        seed=103,
    ),
    # LRI temporal-order sweeps (delta comb; power-law potentials with
    # delta = 0.51 and 0.76).
    "conv-1o4": {
        "kind": "convergence",
        "name": "conv-1o4",
        "grid_size": 2048,
        "lambda": -2.0,
        "t_final": 1.0,
        "seed": 104,
        "potential": {"type": "delta_comb", "centers": [0.0], "amplitude": -0.2},
        "initial": {"type": "rough", "decay": 2.55, "amp_re": [0.0, 1.0]},
        "convergence": {"taus": _dyadic(6, 12), "scheme": "lri", "ref_divider": 64},
    },
    "conv-3o4": {
        "kind": "convergence",
        "name": "conv-3o4",
        "grid_size": 2048,
        "lambda": 4.0,
        "t_final": 1.0,
        "seed": 105,
        "potential": {"type": "powerlaw", "delta": 0.51, "amp_re": 5.0, "amp_im": 5.0, "dc": 1.0},
        "initial": {"type": "rough", "decay": 2.55, "amp_re": [0.0, 1.0]},
        "convergence": {"taus": _dyadic(9, 14), "scheme": "lri", "ref_divider": 64},
    },
    "conv-1": {
        "kind": "convergence",
        "name": "conv-1",
        "grid_size": 2048,
        "lambda": 4.0,
        "t_final": 1.0,
        "seed": 106,
        "potential": {"type": "powerlaw", "delta": 0.76, "amp_re": 5.0, "amp_im": 5.0, "dc": 1.0},
        "initial": {"type": "rough", "decay": 2.55, "amp_re": [0.0, 1.0]},
        "convergence": {"taus": _dyadic(7, 13), "scheme": "lri", "ref_divider": 64},
    },
    # five-scheme accuracy races
    "comp-delta": {
        "kind": "comparison",
        "name": "comp-delta",
        "grid_size": 2048,
        "lambda": -2.0,
        "t_final": 1.0,
        "seed": 107,
        "potential": {"type": "delta_comb", "centers": [0.0, 2.0, -2.0], "amplitude": -1.0},
        "initial": {"type": "rough", "decay": 2.51, "amp_re": [0.0, 1.0 / 3.0]},
        # the asymptotic regime for this strong comb starts near tau = 2^-9;
        # coarser steps leave every scheme at O(1) error
        "comparison": {"taus": _dyadic(9, 13), "ref_divider": 64},
    },
    "comp-rough": {
        "kind": "comparison",
        "name": "comp-rough",
        "grid_size": 2048,
        "lambda": -0.05,
        "t_final": 1.0,
        "seed": 108,
        "potential": {
            "type": "interval",
            "delta": 0.0,
            "re_range": [0.0, 4.0],
            "im_range": [0.0, 0.0],
            "dc": 2.0,
        },
        "initial": {
            "type": "rough",
            "decay": 2.51,
            "amp_re": [0.0, 1.0 / 3.0],
            "amp_im": [0.0, 0.2],
        },
        "comparison": {"taus": _dyadic(6, 12), "ref_divider": 64},
    },
    "comp-L2data": {
        "kind": "comparison",
        "name": "comp-L2data",
        "grid_size": 2048,
        "lambda": -2.0,
        "t_final": 1.0,
        "seed": 109,
        "potential": {"type": "delta_comb", "centers": [0.0, 2.0, -2.0], "amplitude": -1.0},
        "initial": {"type": "rough", "decay": 1.1, "amp_re": [0.0, 1.0 / 3.0]},
        "comparison": {"taus": _dyadic(6, 12), "ref_divider": 64},
    },
    # norm-inflation sweeps
    "illposed-thm3": {
        "kind": "illposed",
        "name": "illposed-thm3",
        "seed": 0,
        "illposed": {
            "family": "thm3-pinf",
            "eps": 0.1,
            "s": 0.0,
            "p": "inf",
            "M0": 10,
            "sweep": [10, 100, 1000, 10000],
        },
    },
    "illposed-thm5": {
        "kind": "illposed",
        "name": "illposed-thm5",
        "seed": 0,
        "illposed": {
            "family": "thm5-loggrow",
            "eps": 1.0 / (2.0 * math.sqrt(42.0 * math.pi)),
            "gamma": 0.0,
            "t": 1e-3,
            "sweep": [64, 128, 256, 512, 1024, 2048],
        },
    },
}


def preset_names() -> list[str]:
    return sorted(_RAW_PRESETS)


def get_preset(name: str) -> ExperimentSpec:
    if name not in _RAW_PRESETS:
        raise KeyError(f"unknown preset '{name}'; available: {', '.join(preset_names())}")
    return validate_spec(_RAW_PRESETS[name])
