"""Declarative experiment specs, the runners behind them, and CSV/JSON output.

Experiment kinds
----------------
* regularity   -- evolve with the LRI on a fine mesh, tabulate |u_k| at the
                  final time and fit the Fourier-decay exponent.
* convergence  -- tau sweep of one scheme against a same-scheme reference at
                  tau_ref = min(taus)/ref_divider on the identical grid
                  (isolates the temporal error), fit the order.
* comparison   -- all requested schemes against one shared LRI reference;
                  a scheme that blows up is marked diverged and the run
                  continues for the others.
* illposed     -- norm-inflation sweep of the second Picard iterate.

Specs can be loaded from TOML files; unknown keys are rejected and every
default is materialized in the resolved spec, whose canonical JSON form is
hashed into the record fingerprint.  Rerunning an identical spec yields
byte-identical CSV bodies.
"""

from __future__ import annotations

import csv
import datetime
import hashlib
import json
import math
import sys
from dataclasses import dataclass
from enum import Enum
from typing import Optional

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - version shim
    import tomli as tomllib

from . import analysis, integrators, potentials, spectral
from .analysis import IllposedFamily, IllposedSpec
from .integrators import SchemeId, StepperConfig
from .potentials import Potential, RoughInitSpec
from .spectral import Grid, SpectralField

__version__ = "0.1.0"


class SpecError(ValueError):
    """Validation failure in an experiment spec (field-level message)."""


class ExperimentKind(Enum):
    REGULARITY = "regularity"
    CONVERGENCE = "convergence"
    COMPARISON = "comparison"
    ILLPOSED = "illposed"


_POTENTIAL_TYPES = {
    "powerlaw": {"delta", "amp_re", "amp_im", "dc", "seed"},
    "interval": {"delta", "re_range", "im_range", "dc", "seed"},
    "delta_comb": {"centers", "amplitude"},
    "pinf": {"s"},
    "logp": {"s", "p", "alpha"},
    "hs": {"s", "beta"},
    "loggrow": set(),
    "zero": set(),
}

_INITIAL_TYPES = {
    "smooth": set(),
    "rough": {"decay", "amp_re", "amp_im", "seed"},
    "constant": {"value"},
}

ALL_SCHEMES = ["lri", "lie", "ewi", "bronsard", "fd"]

_FD_ASSUMPTION = (
    "second-order centered stencil for u_xx with periodic wrap; each step "
    "solves the cyclic tridiagonal system via a Sherman-Morrison correction"
)


@dataclass(frozen=True)
class ExperimentSpec:
    """Fully resolved experiment description (all defaults filled)."""

    kind: ExperimentKind
    name: str
    grid_size: int
    lam: float
    seed: int
    t_final: float
    potential: Optional[dict]
    initial: Optional[dict]
    section: dict  # kind-specific parameters

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind.value,
            "name": self.name,
            "grid_size": self.grid_size,
            "lambda": self.lam,
            "seed": self.seed,
            "t_final": self.t_final,
        }
        if self.potential is not None:
            out["potential"] = self.potential
        if self.initial is not None:
            out["initial"] = self.initial
        out[self.kind.value] = self.section
        return out

    @property
    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _reject_unknown(table: dict, allowed: set, where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise SpecError(f"{where}: unknown key(s) {sorted(unknown)}")


def _parse_p(value) -> float:
    if value in ("inf", "Infinity"):
        return math.inf
    return float(value)


def validate_spec(raw: dict) -> ExperimentSpec:
    """Normalize a raw spec mapping, fill defaults, reject inconsistencies."""
    top_allowed = {
        "kind", "name", "grid_size", "lambda", "seed", "t_final",
        "potential", "initial",
    } | {k.value for k in ExperimentKind}
    _reject_unknown(raw, top_allowed, "top level")
    try:
        kind = ExperimentKind(raw["kind"])
    except (KeyError, ValueError):
        raise SpecError(f"kind must be one of {[k.value for k in ExperimentKind]}")

    name = str(raw.get("name", kind.value))
    seed = int(raw.get("seed", 0))
    grid_size = int(raw.get("grid_size", 1024 if kind is ExperimentKind.REGULARITY else 2048))
    if grid_size < 4 or grid_size % 2:
        raise SpecError(f"grid_size must be an even integer >= 4, got {grid_size}")
    lam = float(raw.get("lambda", 1.0))
    t_final = float(raw.get("t_final", 2.0 if kind is ExperimentKind.REGULARITY else 1.0))

    potential = initial = None
    if kind is not ExperimentKind.ILLPOSED:
        potential = _validate_potential(raw.get("potential"), seed)
        initial = _validate_initial(raw.get("initial"), seed)

    section = dict(raw.get(kind.value, {}))
    for other in ExperimentKind:
        if other is not kind and other.value in raw:
            raise SpecError(f"section [{other.value}] not allowed for kind={kind.value}")

    if kind is ExperimentKind.REGULARITY:
        _reject_unknown(section, {"tau", "k_min", "k_max"}, "[regularity]")
        tau = float(section.get("tau", 1e-4))
        k_min = int(section.get("k_min", 8))
        # default window [8, n/8]; keep at least 8 fit bins on small grids
        k_max = int(section.get("k_max", min(max(grid_size // 8, k_min + 8), grid_size // 2 - 1)))
        if not (2 <= k_min < k_max <= grid_size // 2 - 1):
            raise SpecError(f"[regularity]: window [{k_min}, {k_max}] invalid for grid {grid_size}")
        _check_divides(tau, t_final, "[regularity].tau")
        section = {"tau": tau, "k_min": k_min, "k_max": k_max}
    elif kind in (ExperimentKind.CONVERGENCE, ExperimentKind.COMPARISON):
        where = f"[{kind.value}]"
        allowed = {"taus", "ref_divider"}
        allowed |= {"scheme"} if kind is ExperimentKind.CONVERGENCE else {"schemes"}
        _reject_unknown(section, allowed, where)
        taus = [float(t) for t in section.get("taus", [])]
        if len(taus) < 3:
            raise SpecError(f"{where}: need at least 3 taus")
        if any(b >= a for a, b in zip(taus, taus[1:])):
            raise SpecError(f"{where}: taus must be strictly decreasing")
        for t in taus:
            _check_divides(t, t_final, f"{where}.taus")
        ref_divider = int(section.get("ref_divider", 64))
        if ref_divider < 2:
            raise SpecError(f"{where}: ref_divider must be >= 2")
        if kind is ExperimentKind.CONVERGENCE:
            scheme = str(section.get("scheme", "lri"))
            _parse_scheme(scheme)
            section = {"taus": taus, "scheme": scheme, "ref_divider": ref_divider}
        else:
            schemes = [str(s) for s in section.get("schemes", ALL_SCHEMES)]
            for s in schemes:
                _parse_scheme(s)
            if len(set(schemes)) != len(schemes):
                raise SpecError(f"{where}: duplicate schemes")
            section = {"taus": taus, "schemes": schemes, "ref_divider": ref_divider}
    else:  # ILLPOSED
        allowed = {"family", "eps", "s", "p", "alpha", "beta", "gamma",
                   "M0", "t", "kmax", "smooth_data", "sweep"}
        _reject_unknown(section, allowed, "[illposed]")
        try:
            family = IllposedFamily(section["family"])
        except (KeyError, ValueError):
            raise SpecError(
                f"[illposed].family must be one of {[f.value for f in IllposedFamily]}"
            )
        sweep = [int(v) for v in section.get("sweep", [])]
        if len(sweep) < 2 or any(b <= a for a, b in zip(sweep, sweep[1:])):
            raise SpecError("[illposed].sweep must be an increasing list of >= 2 integers")
        kwargs = dict(
            family=family,
            eps=float(section.get("eps", 0.1)),
            s=float(section.get("s", 0.0)),
            p=_parse_p(section.get("p", "inf")),
            alpha=(float(section["alpha"]) if "alpha" in section else None),
            beta=(float(section["beta"]) if "beta" in section else None),
            gamma=(float(section["gamma"]) if "gamma" in section else None),
            M0=int(section.get("M0", 10)),
            t=(float(section["t"]) if "t" in section else None),
            kmax=(int(section["kmax"]) if "kmax" in section else None),
            smooth_data=bool(section.get("smooth_data", False)),
        )
        try:
            ispec = IllposedSpec(**kwargs)
        except ValueError as exc:
            raise SpecError(f"[illposed]: {exc}")
        section = {
            "family": family.value,
            "eps": ispec.eps,
            "s": ispec.s,
            "p": ("inf" if math.isinf(ispec.p) else ispec.p),
            "alpha": ispec.alpha,
            "beta": ispec.beta,
            "gamma": ispec.gamma,
            "M0": ispec.M0,
            "t": ispec.t,
            "kmax": ispec.kmax,
            "smooth_data": ispec.smooth_data,
            "sweep": sweep,
        }

    return ExperimentSpec(
        kind=kind,
        name=name,
        grid_size=grid_size,
        lam=lam,
        seed=seed,
        t_final=t_final,
        potential=potential,
        initial=initial,
        section=section,
    )


def _check_divides(tau: float, t_final: float, where: str) -> None:
    try:
        integrators.n_steps_for(t_final, tau)
    except ValueError:
        raise SpecError(f"{where}: {tau} does not divide t_final={t_final}")


def _parse_scheme(name: str) -> SchemeId:
    try:
        return SchemeId(name)
    except ValueError:
        raise SpecError(f"unknown scheme '{name}'; choose from {ALL_SCHEMES}")


def _validate_potential(table, default_seed: int) -> dict:
    if table is None:
        raise SpecError("missing [potential] section")
    table = dict(table)
    ptype = table.pop("type", None)
    if ptype not in _POTENTIAL_TYPES:
        raise SpecError(f"[potential].type must be one of {sorted(_POTENTIAL_TYPES)}")
    _reject_unknown(table, _POTENTIAL_TYPES[ptype], f"[potential type={ptype}]")
    out = {"type": ptype}
    if ptype == "powerlaw":
        out["delta"] = float(table.get("delta", 0.0))
        out["amp_re"] = float(table.get("amp_re", 1.0))
        out["amp_im"] = float(table.get("amp_im", 0.0))
        out["dc"] = float(table.get("dc", 1.0))
        out["seed"] = int(table.get("seed", default_seed))
    elif ptype == "interval":
        out["delta"] = float(table.get("delta", 0.0))
        out["re_range"] = [float(v) for v in table.get("re_range", [0.0, 1.0])]
        out["im_range"] = [float(v) for v in table.get("im_range", [0.0, 0.0])]
        out["dc"] = float(table.get("dc", 1.0))
        out["seed"] = int(table.get("seed", default_seed))
    elif ptype == "delta_comb":
        out["centers"] = [float(c) for c in table.get("centers", [0.0])]
        out["amplitude"] = float(table.get("amplitude", -0.2))
    elif ptype == "pinf":
        out["s"] = float(table.get("s", 0.0))
    elif ptype == "logp":
        out["s"] = float(table.get("s", 0.0))
        out["p"] = float(table.get("p", 4.0))
        out["alpha"] = float(table.get("alpha", (1.0 / out["p"] + 0.5) / 2.0))
    elif ptype == "hs":
        out["s"] = float(table.get("s", 0.0))
        out["beta"] = float(table.get("beta", 0.6))
    return out


def _validate_initial(table, default_seed: int) -> dict:
    if table is None:
        raise SpecError("missing [initial] section")
    table = dict(table)
    itype = table.pop("type", None)
    if itype not in _INITIAL_TYPES:
        raise SpecError(f"[initial].type must be one of {sorted(_INITIAL_TYPES)}")
    _reject_unknown(table, _INITIAL_TYPES[itype], f"[initial type={itype}]")
    out = {"type": itype}
    if itype == "rough":
        out["decay"] = float(table.get("decay", 2.55))
        out["amp_re"] = [float(v) for v in table.get("amp_re", [0.0, 1.0])]
        amp_im = table.get("amp_im")
        out["amp_im"] = None if amp_im is None else [float(v) for v in amp_im]
        out["seed"] = int(table.get("seed", default_seed + 1))
    elif itype == "constant":
        out["value"] = float(table.get("value", 1.0))
    return out


def load_spec(path) -> ExperimentSpec:
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise SpecError(f"cannot parse {path}: {exc}")
    return validate_spec(raw)


# ---------------------------------------------------------------------------
# ingredient builders


def build_potential(spec: ExperimentSpec) -> Potential:
    grid = Grid(spec.grid_size)
    p = spec.potential
    kind = p["type"]
    if kind == "powerlaw":
        return potentials.gen_powerlaw_potential(
            grid, p["delta"], p["amp_re"], p["amp_im"], p["dc"], p["seed"]
        )
    if kind == "interval":
        return potentials.gen_interval_potential(
            grid, p["delta"], tuple(p["re_range"]), tuple(p["im_range"]), p["dc"], p["seed"]
        )
    if kind == "delta_comb":
        return potentials.gen_delta_comb(grid, p["centers"], p["amplitude"])
    if kind == "pinf":
        return potentials.gen_illposed_potential(grid, potentials.PinfLaw(s=p["s"]))
    if kind == "logp":
        return potentials.gen_illposed_potential(
            grid, potentials.LogWeightedLaw(s=p["s"], p=p["p"], alpha=p["alpha"])
        )
    if kind == "hs":
        return potentials.gen_illposed_potential(
            grid, potentials.SobolevLaw(s=p["s"], beta=p["beta"])
        )
    if kind == "loggrow":
        return potentials.gen_illposed_potential(grid, potentials.LogGrowthLaw())
    return potentials.zero_potential(grid)


def build_initial(spec: ExperimentSpec) -> SpectralField:
    grid = Grid(spec.grid_size)
    ini = spec.initial
    if ini["type"] == "smooth":
        x = grid.points
        return spectral.to_spectral(grid, np.cos(x) / (2.0 + np.sin(2.0 * x)))
    if ini["type"] == "rough":
        rspec = RoughInitSpec(
            decay=ini["decay"],
            amp_re=tuple(ini["amp_re"]),
            amp_im=None if ini["amp_im"] is None else tuple(ini["amp_im"]),
            seed=ini["seed"],
        )
        return potentials.gen_rough_initial(grid, rspec)
    coeffs = np.zeros(grid.n_modes, dtype=np.complex128)
    coeffs[0] = ini["value"]
    return SpectralField(grid, coeffs)


# ---------------------------------------------------------------------------
# result records and runners


@dataclass
class ResultRecord:
    fingerprint: str
    kind: ExperimentKind
    columns: list[str]
    rows: list[tuple]
    fits: dict
    metadata: dict


def _fmt(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float) and math.isinf(value):
        return "inf"
    return format(float(value), ".17g")


def run_experiment(spec: ExperimentSpec) -> ResultRecord:
    runner = {
        ExperimentKind.REGULARITY: _run_regularity,
        ExperimentKind.CONVERGENCE: _run_convergence,
        ExperimentKind.COMPARISON: _run_comparison,
        ExperimentKind.ILLPOSED: _run_illposed,
    }[spec.kind]
    columns, rows, fits, extra_meta = runner(spec)
    metadata = {
        "version": __version__,
        "name": spec.name,
        "spec": spec.to_dict(),
        "fingerprint": spec.fingerprint,
    }
    metadata.update(extra_meta)
    return ResultRecord(
        fingerprint=spec.fingerprint,
        kind=spec.kind,
        columns=columns,
        rows=rows,
        fits=fits,
        metadata=metadata,
    )


def _stepper(spec: ExperimentSpec, tau: float) -> StepperConfig:
    s_assumed, p_assumed = _regularity_assumption(spec)
    return StepperConfig(tau=tau, lam=spec.lam, s_assumed=s_assumed, p_assumed=p_assumed)


def _regularity_assumption(spec: ExperimentSpec) -> tuple[float, float]:
    """(s, p) describing the potential class, used only for filter defaults."""
    p = spec.potential or {}
    kind = p.get("type")
    if kind in ("powerlaw", "interval"):
        delta = p.get("delta", 0.0)
        # coefficient law |k|^{-delta}: l^inf for any delta >= 0, l^2 once delta > 1/2
        if delta > 0.5:
            return (max(delta - 0.51, 0.0), 2.0)
        return (0.0, math.inf)
    if kind == "hs":
        return (p.get("s", 0.0), 2.0)
    if kind == "logp":
        return (p.get("s", 0.0), p.get("p", 4.0))
    return (0.0, math.inf)


def _run_regularity(spec: ExperimentSpec):
    grid = Grid(spec.grid_size)
    xi = build_potential(spec)
    u0 = build_initial(spec)
    sect = spec.section
    cfg = _stepper(spec, sect["tau"])
    result = integrators.evolve(u0, xi, SchemeId.LRI, cfg, spec.t_final)
    fit = analysis.decay_slope(result.final, sect["k_min"], sect["k_max"])
    ks, coeffs = result.final.ordered()
    rows = [(int(k), abs(c)) for k, c in zip(ks, coeffs)]
    fits = {
        "fitted_exponent": fit.fitted_exponent,
        "k_window": list(fit.k_window),
        "residual": fit.residual,
        "floor_detected": fit.floor_detected,
    }
    meta = {"filter_active": integrators.filter_is_active(cfg, grid), "n_filter": cfg.n_filter}
    return ["k", "abs_uk"], rows, fits, meta


def _reference_descriptor(spec: ExperimentSpec, scheme: str, tau_ref: float) -> dict:
    desc = {
        "scheme": scheme,
        "tau_ref": tau_ref,
        "grid_size": spec.grid_size,
        "lambda": spec.lam,
        "t_final": spec.t_final,
        "potential": spec.potential,
        "initial": spec.initial,
    }
    blob = json.dumps(desc, sort_keys=True, separators=(",", ":"))
    desc["fingerprint"] = hashlib.sha256(blob.encode()).hexdigest()
    return desc


def _run_convergence(spec: ExperimentSpec):
    xi = build_potential(spec)
    u0 = build_initial(spec)
    sect = spec.section
    taus = sect["taus"]
    scheme = _parse_scheme(sect["scheme"])
    tau_ref = taus[-1] / sect["ref_divider"]
    ref = integrators.evolve(u0, xi, scheme, _stepper(spec, tau_ref), spec.t_final).final
    errors = []
    for tau in taus:
        u = integrators.evolve(u0, xi, scheme, _stepper(spec, tau), spec.t_final).final
        errors.append(analysis.relative_l2_error(u, ref))
    fit = analysis.convergence_order(taus, errors)
    rows = []
    for i, (tau, err) in enumerate(zip(taus, errors)):
        pairwise = _fmt(fit.pairwise[i]) if i < len(fit.pairwise) else ""
        rows.append((tau, err, pairwise))
    fits = {"order": fit.order, "pairwise": list(fit.pairwise)}
    meta = {"reference": _reference_descriptor(spec, sect["scheme"], tau_ref)}
    if sect["scheme"] == "fd":
        meta["assumptions"] = {"fd_spatial_discretization": _FD_ASSUMPTION}
    return ["tau", "error", "order_pairwise"], rows, fits, meta


def _run_comparison(spec: ExperimentSpec):
    xi = build_potential(spec)
    u0 = build_initial(spec)
    sect = spec.section
    taus = sect["taus"]
    tau_ref = taus[-1] / sect["ref_divider"]
    ref = integrators.evolve(u0, xi, SchemeId.LRI, _stepper(spec, tau_ref), spec.t_final).final
    rows = []
    fits = {"per_scheme": {}}
    for name in sect["schemes"]:
        scheme = _parse_scheme(name)
        errors: list[float] = []
        statuses: list[str] = []
        for tau in taus:
            try:
                u = integrators.evolve(u0, xi, scheme, _stepper(spec, tau), spec.t_final).final
                errors.append(analysis.relative_l2_error(u, ref))
                statuses.append("ok")
            except integrators.BlowUpError:
                errors.append(math.inf)
                statuses.append("diverged")
        pair = []
        for i in range(len(taus) - 1):
            if math.isinf(errors[i]) or math.isinf(errors[i + 1]):
                pair.append(None)
            else:
                pair.append(
                    float(np.log(errors[i] / errors[i + 1]) / np.log(taus[i] / taus[i + 1]))
                )
        for i, tau in enumerate(taus):
            pairwise = "" if i >= len(pair) or pair[i] is None else _fmt(pair[i])
            rows.append((name, tau, errors[i], pairwise, statuses[i]))
        finite = [e for e in errors if not math.isinf(e)]
        entry = {"errors": errors, "statuses": statuses, "pairwise": pair}
        if len(finite) == len(errors):
            entry["order"] = analysis.convergence_order(taus, errors).order
        fits["per_scheme"][name] = entry
    meta = {"reference": _reference_descriptor(spec, "lri", tau_ref)}
    if "fd" in sect["schemes"]:
        meta["assumptions"] = {"fd_spatial_discretization": _FD_ASSUMPTION}
    return ["scheme", "tau", "error", "order_pairwise", "status"], rows, fits, meta


def _run_illposed(spec: ExperimentSpec):
    sect = spec.section
    ispec = IllposedSpec(
        family=IllposedFamily(sect["family"]),
        eps=sect["eps"],
        s=sect["s"],
        p=_parse_p(sect["p"]),
        alpha=sect["alpha"],
        beta=sect["beta"],
        gamma=sect["gamma"],
        M0=sect["M0"],
        t=sect["t"],
        kmax=sect["kmax"],
        smooth_data=sect["smooth_data"],
    )
    curve = analysis.norm_inflation_curve(ispec, sect["sweep"])
    rows = [(param, norm) for param, norm in curve]
    params = np.array([p for p, _ in curve], dtype=float)
    norms = np.array([n for _, n in curve])
    fits: dict = {"norm_index": ispec.norm_index}
    if ispec.family in (IllposedFamily.THM3_PINF, IllposedFamily.THM3_FINP, IllposedFamily.THM4_HS):
        x = np.sqrt(np.log(2.0 * params + 1.0))
        fits["corr_sqrt_log"] = float(np.corrcoef(x, norms)[0, 1])
        if ispec.family is IllposedFamily.THM3_PINF:
            bound = (
                math.sqrt(2.0) * ispec.eps * ispec.M0**-0.5 * x
                - 0.5 * math.pi * ispec.M0**-2 * ispec.eps**3
            )
            fits["lower_bound"] = [float(b) for b in bound]
            fits["exceeds_lower_bound"] = bool(np.all(norms > bound))
    else:
        lx = np.log(params)
        slope, intercept = np.polyfit(lx, norms, 1)
        pred = slope * lx + intercept
        ss_res = float(np.sum((norms - pred) ** 2))
        ss_tot = float(np.sum((norms - norms.mean()) ** 2))
        fits["affine_slope"] = float(slope)
        fits["affine_intercept"] = float(intercept)
        fits["affine_r2"] = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return ["parameter", "norm"], rows, fits, {}


# ---------------------------------------------------------------------------
# persistence


def write_results(record: ResultRecord, csv_path) -> None:
    """Write the measurement rows as CSV and a JSON sidecar with metadata."""
    csv_path = str(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(record.columns)
        for row in record.rows:
            writer.writerow([_fmt(v) for v in row])
    sidecar = csv_path[:-4] + ".meta.json" if csv_path.endswith(".csv") else csv_path + ".meta.json"
    meta = dict(record.metadata)
    meta["fits"] = record.fits
    meta["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    with open(sidecar, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")
