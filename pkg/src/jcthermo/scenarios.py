"""Scenario presets and the human-editable configuration format.

The four shipped presets carry the model parameters of the reference
regimes: ``fig1`` (weak coupling), ``fig2`` (strong coupling, same bath),
``fig3`` (weak-coupling state-minimisation companion of fig1) and ``fig4``
(strong coupling near resonance with a cold bath).  All physical inputs
are dimensionless in units omega_a = hbar = kB = 1.

Configs are INI files with sections [system], [numerics], [scenario] and
[output]; a scenario serialises and reloads to an identical run.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, replace

from .jcdyn import ConfigError, ModelParams, NumericsConfig
from .qstate import BlochVector, DensityMatrix, density_from_bloch, thermal_qubit

CSV_COLUMNS = (
    "t", "gt", "sigma_es", "sigma_el", "sigma_co", "sigma_fp", "di_ab",
    "sdot_a", "sdot_b", "edot_b", "edot_int", "pdot_a", "beta_b_eff",
    "gamma1", "gamma2", "gamma3", "omega_shift", "big_gamma",
    "cp_div", "p_div", "blp", "sigma_min", "sigma_map", "masked",
)


@dataclass(frozen=True)
class Scenario:
    """A named, fully-specified run."""

    name: str
    params: ModelParams
    cfg: NumericsConfig
    initial_state: str = "thermal"      # "thermal", "grid" or "bloch:x,y,z"
    outputs: tuple[str, ...] = CSV_COLUMNS

    def resolve_initial_state(self) -> DensityMatrix:
        label = self.initial_state
        if label == "thermal":
            if self.params.beta_a is None:
                raise ConfigError(
                    f"scenario {self.name!r} has no beta_a; supply it explicitly "
                    "or give a bloch:x,y,z initial state for trace runs")
            return thermal_qubit(self.params.omega_a, self.params.beta_a)
        if label == "grid":
            raise ConfigError(
                f"scenario {self.name!r} minimises over initial states; "
                "trace runs need 'thermal' or 'bloch:x,y,z'")
        if label.startswith("bloch:"):
            try:
                x, y, z = (float(v) for v in label[len("bloch:"):].split(","))
            except ValueError as exc:
                raise ConfigError(f"cannot parse initial state {label!r}") from exc
            return density_from_bloch(BlochVector(x, y, z))
        raise ConfigError(f"unknown initial state {label!r}")


def _preset_fig1() -> Scenario:
    return Scenario(
        name="fig1",
        params=ModelParams(omega_b=0.6, g=0.03, beta_b=0.3, beta_a=1.1),
        cfg=NumericsConfig(t_max=20.0 / 0.03, n_steps=800),
        initial_state="thermal")


def _preset_fig2() -> Scenario:
    return Scenario(
        name="fig2",
        params=ModelParams(omega_b=0.6, g=0.3, beta_b=0.3, beta_a=1.1),
        cfg=NumericsConfig(t_max=20.0 / 0.3, n_steps=800),
        initial_state="thermal")


def _preset_fig3() -> Scenario:
    return Scenario(
        name="fig3",
        params=ModelParams(omega_b=0.6, g=0.03, beta_b=0.3),
        cfg=NumericsConfig(t_max=20.0 / 0.03, n_steps=800),
        initial_state="grid")


def _preset_fig4() -> Scenario:
    # no beta_a: single-trajectory runs under this preset must supply one
    return Scenario(
        name="fig4",
        params=ModelParams(omega_b=0.99, g=0.3, beta_b=3.0),
        cfg=NumericsConfig(t_max=16.0 / 0.3, n_steps=3200),
        initial_state="grid")


PRESETS = {
    "fig1": _preset_fig1,
    "fig2": _preset_fig2,
    "fig3": _preset_fig3,
    "fig4": _preset_fig4,
}


def preset(name: str) -> Scenario:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None


def apply_overrides(sc: Scenario, t_max: float | None = None,
                    n_steps: int | None = None) -> Scenario:
    cfg = sc.cfg
    if t_max is not None:
        cfg = replace(cfg, t_max=float(t_max))
    if n_steps is not None:
        cfg = replace(cfg, n_steps=int(n_steps))
    return replace(sc, cfg=cfg)


def scenario_to_config(sc: Scenario) -> configparser.ConfigParser:
    cp = configparser.ConfigParser()
    cp["system"] = {
        "omega_a": repr(sc.params.omega_a),
        "omega_b": repr(sc.params.omega_b),
        "g": repr(sc.params.g),
        "beta_b": repr(sc.params.beta_b),
    }
    if sc.params.beta_a is not None:
        cp["system"]["beta_a"] = repr(sc.params.beta_a)
    cp["numerics"] = {
        "t_max": repr(sc.cfg.t_max),
        "n_steps": str(sc.cfg.n_steps),
        "fock_cutoff": str(sc.cfg.fock_cutoff),
        "tail_tol": repr(sc.cfg.tail_tol),
        "eig_clamp": repr(sc.cfg.eig_clamp),
        "sign_band": repr(sc.cfg.sign_band),
        "state_grid": str(sc.cfg.state_grid),
        "ode_rtol": repr(sc.cfg.ode_rtol),
        "ode_atol": repr(sc.cfg.ode_atol),
        "p_criterion_variant": sc.cfg.p_criterion_variant,
    }
    cp["scenario"] = {
        "name": sc.name,
        "initial_state": sc.initial_state,
    }
    cp["output"] = {"columns": ",".join(sc.outputs)}
    return cp


def scenario_to_string(sc: Scenario) -> str:
    buf = io.StringIO()
    scenario_to_config(sc).write(buf)
    return buf.getvalue()


def save_scenario(sc: Scenario, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        scenario_to_config(sc).write(fh)


def scenario_from_config(cp: configparser.ConfigParser) -> Scenario:
    try:
        sys_sec = cp["system"]
        params = ModelParams(
            omega_a=float(sys_sec.get("omega_a", "1.0")),
            omega_b=float(sys_sec["omega_b"]),
            g=float(sys_sec["g"]),
            beta_b=float(sys_sec["beta_b"]),
            beta_a=float(sys_sec["beta_a"]) if "beta_a" in sys_sec else None,
        )
        num = cp["numerics"]
        raw_cutoff = num.get("fock_cutoff", "auto")
        cfg = NumericsConfig(
            t_max=float(num["t_max"]),
            n_steps=int(num["n_steps"]),
            fock_cutoff="auto" if raw_cutoff == "auto" else int(raw_cutoff),
            tail_tol=float(num.get("tail_tol", "1e-14")),
            eig_clamp=float(num.get("eig_clamp", "1e-15")),
            sign_band=float(num.get("sign_band", "1e-9")),
            state_grid=int(num.get("state_grid", "24")),
            ode_rtol=float(num.get("ode_rtol", "1e-10")),
            ode_atol=float(num.get("ode_atol", "1e-12")),
            p_criterion_variant=num.get("p_criterion_variant", "standard"),
        )
        scen = cp["scenario"]
        outputs = tuple(
            c for c in cp.get("output", "columns", fallback=",".join(CSV_COLUMNS)).split(",") if c)
        return Scenario(name=scen.get("name", "custom"), params=params, cfg=cfg,
                        initial_state=scen.get("initial_state", "thermal"),
                        outputs=outputs)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc


def load_scenario(path) -> Scenario:
    cp = configparser.ConfigParser()
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    return scenario_from_config(cp)
