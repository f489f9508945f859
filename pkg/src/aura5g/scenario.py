"""Scenario descriptors: codes, defaults, parameter overrides and re-dimensioning.

A scenario is identified by a 4/5-letter code, e.g. ``CABE`` or ``SMIEm``:

    letter 1   C = circular SC deployment, S = square
    letter 2   A = any-two-APs dual connectivity, M = macro + at most one small cell
    letter 3   B = beamformed UE reception, I = interference limited (omni)
    letter 4   E = eMBB users present (always)
    letter 5   optional trailing 'm' = mMTC devices present as backhaul load

Single-association and the max-SNR baseline are selected through
``ScenarioSpec.dc_mode`` directly; they have no letter code.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Any, Mapping


class Deployment(str, Enum):
    CIRCULAR = "circular"
    SQUARE = "square"


class DcMode(str, Enum):
    ANY_DC = "anydc"
    MCSC = "mcsc"
    SA = "sa"
    BASELINE = "baseline"


class Regime(str, Enum):
    BEAMFORMED = "beamformed"
    INTERFERENCE_LIMITED = "interference"


class Services(str, Enum):
    EMBB_ONLY = "embb"
    EMBB_PLUS_MMTC = "embb+mmtc"


class Constraint(str, Enum):
    MRT = "MRT"   # minimum rate per eMBB user
    CB = "CB"     # capped backhaul capacities
    CPL = "CPL"   # constrained path latency


class UnknownCode(ValueError):
    """Raised for strings outside the 16-code scenario grammar."""


class InvalidKnob(ValueError):
    """Raised for re-dimensioning knob values outside the supported set."""


# Desk-scale default: low end of the evaluated user sweep (150..275 step 25).
DEFAULT_EMBB_USERS = 150
USER_SWEEP = (150, 175, 200, 225, 250, 275)

# 24000 mMTC devices per km^2 over the 0.36 km^2 default area, split across
# the 9 macro cells: round(24000 * 0.36 / 9) = 960.  A literal 24000 per MC
# would exceed the 10 Gbps macro backhaul on average and make every
# constrained-backhaul scenario trivially infeasible.
DEFAULT_MMTC_PER_MC = 960

DEFAULT_LATENCY_BUDGET_MS = 3.0
DEFAULT_TRIALS = 100
DEFAULT_TIME_LIMIT_S = 600.0

#: Parameter override keys accepted by :class:`ScenarioSpec`.  Values replace
#: the corresponding simulation default for every trial of the campaign.
KNOWN_OVERRIDES = {
    "area_m",                     # (width, height) in meters
    "mc_isd_m",                   # macro inter-site distance
    "sc_count_law",               # (lo, hi) inclusive discrete uniform per MC
    "sc_min_separation_m",
    "latency_budget_ms",
    "min_rate_bps",
    "sc_backhaul_uplift_bps",     # added to every SC backhaul capacity
    "mc_backhaul_uplift_bps",     # added to every MC core-link capacity
    "backhaul_total_bandwidth_hz",
    "side_lobe_floor_dbi",
    "mmtc_homing",                # "grid" or "nearest"
    "mmtc_rate_range_kbps",       # (lo, hi) uniform per device
}

_DEPLOYMENT_LETTER = {"C": Deployment.CIRCULAR, "S": Deployment.SQUARE}
_MODE_LETTER = {"A": DcMode.ANY_DC, "M": DcMode.MCSC}
_REGIME_LETTER = {"B": Regime.BEAMFORMED, "I": Regime.INTERFERENCE_LIMITED}


@dataclass(frozen=True)
class ScenarioSpec:
    """Fully parsed experiment descriptor for one Monte Carlo campaign."""

    deployment: Deployment
    dc_mode: DcMode
    regime: Regime
    services: Services
    constraints: frozenset = frozenset()
    n_embb_users: int = DEFAULT_EMBB_USERS
    mmtc_per_mc: int = DEFAULT_MMTC_PER_MC
    latency_budget_ms: float = DEFAULT_LATENCY_BUDGET_MS
    n_trials: int = DEFAULT_TRIALS
    solver_time_limit_s: float = DEFAULT_TIME_LIMIT_S
    base_seed: int = 1
    parameter_overrides: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "constraints", frozenset(Constraint(c) for c in self.constraints))
        if self.dc_mode is DcMode.BASELINE and self.constraints:
            raise ValueError("baseline association ignores constraint flags; none may be set")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.solver_time_limit_s <= 0:
            raise ValueError("solver_time_limit_s must be > 0")
        if self.effective_latency_budget_ms <= 0:
            raise ValueError("latency_budget_ms must be > 0")
        if self.n_embb_users < 0 or self.mmtc_per_mc < 0:
            raise ValueError("user counts must be >= 0")
        unknown = set(self.parameter_overrides) - KNOWN_OVERRIDES
        if unknown:
            raise ValueError(f"unknown parameter overrides: {sorted(unknown)}")

    @property
    def effective_latency_budget_ms(self) -> float:
        return float(self.parameter_overrides.get("latency_budget_ms", self.latency_budget_ms))

    def override(self, key: str, default):
        return self.parameter_overrides.get(key, default)

    def with_constraints(self, *names: str) -> "ScenarioSpec":
        return replace(self, constraints=frozenset(Constraint(n) for n in names))


def parse_scenario_code(code: str, **fields) -> ScenarioSpec:
    """Parse a 4/5-letter scenario code into a spec with documented defaults.

    Extra keyword arguments are forwarded to :class:`ScenarioSpec` (``n_trials``,
    ``base_seed``, ...).  Raises :class:`UnknownCode` for anything outside the
    16-code grammar.
    """
    if not isinstance(code, str) or len(code) not in (4, 5):
        raise UnknownCode(f"scenario code {code!r} is not 4 or 5 characters")
    if code[0] not in _DEPLOYMENT_LETTER or code[1] not in _MODE_LETTER \
            or code[2] not in _REGIME_LETTER or code[3] != "E" \
            or (len(code) == 5 and code[4] != "m"):
        raise UnknownCode(f"scenario code {code!r} is not in the scenario grammar")
    services = Services.EMBB_PLUS_MMTC if len(code) == 5 else Services.EMBB_ONLY
    if services is Services.EMBB_ONLY:
        fields.setdefault("mmtc_per_mc", 0)
    return ScenarioSpec(
        deployment=_DEPLOYMENT_LETTER[code[0]],
        dc_mode=_MODE_LETTER[code[1]],
        regime=_REGIME_LETTER[code[2]],
        services=services,
        **fields,
    )


def format_scenario_code(spec: ScenarioSpec) -> str:
    """Inverse of :func:`parse_scenario_code` on the 16 coded scenarios."""
    if spec.dc_mode not in (DcMode.ANY_DC, DcMode.MCSC):
        raise UnknownCode(f"dc_mode {spec.dc_mode.value} has no letter code")
    letters = [
        "C" if spec.deployment is Deployment.CIRCULAR else "S",
        "A" if spec.dc_mode is DcMode.ANY_DC else "M",
        "B" if spec.regime is Regime.BEAMFORMED else "I",
        "E",
    ]
    if spec.services is Services.EMBB_PLUS_MMTC:
        letters.append("m")
    return "".join(letters)


def all_scenario_codes() -> list[str]:
    """The 16 coded deployment/mode/regime/service combinations."""
    return [d + m + r + "E" + s
            for d in "CS" for m in "AM" for r in "BI" for s in ("", "m")]


def scenario_label(spec: ScenarioSpec) -> str:
    """Human-readable campaign label; coded scenarios use their code."""
    try:
        base = format_scenario_code(spec)
    except UnknownCode:
        base = "".join([
            "C" if spec.deployment is Deployment.CIRCULAR else "S",
            {DcMode.SA: "sa", DcMode.BASELINE: "base"}[spec.dc_mode],
            "B" if spec.regime is Regime.BEAMFORMED else "I",
            "E",
            "m" if spec.services is Services.EMBB_PLUS_MMTC else "",
        ])
    flags = "+".join(sorted(c.value for c in spec.constraints))
    return f"{base}[{flags}]" if flags else base


_MASK64 = (1 << 64) - 1


def mix_seed(base_seed: int, trial_index: int) -> int:
    """Derive an independent 64-bit trial seed (splitmix64 finalizer).

    Every stochastic draw of a trial is a function of this value only, so
    trials are reproducible and independent of execution order.
    """
    z = (base_seed + (trial_index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


#: SC backhaul uplift levels as a percentage of the measured mean SC backhaul
#: utilization; the MC core link is always lifted by 10x that mean (one MC
#: serves up to 10 SCs).
UPLIFT_LEVELS_PCT = (30, 50, 80, 100)
DENSIFIED_SC_LAW = (6, 10)
RELAXED_LATENCY_MS = 5.0


@dataclass(frozen=True)
class RedimensioningKnobs:
    """Network re-dimensioning levers applied on top of a scenario.

    ``sc_backhaul_uplift_pct`` requires ``mean_sc_backhaul_bps``, the mean SC
    backhaul utilization measured on the un-dimensioned campaign.
    """
    sc_backhaul_uplift_pct: int | None = None
    mean_sc_backhaul_bps: float | None = None
    densify_small_cells: bool = False
    relax_latency: bool = False


def apply_redimensioning(spec: ScenarioSpec, knobs: RedimensioningKnobs) -> ScenarioSpec:
    """Return a new spec with re-dimensioning overrides; the input is unchanged."""
    overrides = dict(spec.parameter_overrides)
    if knobs.sc_backhaul_uplift_pct is not None:
        if knobs.sc_backhaul_uplift_pct not in UPLIFT_LEVELS_PCT:
            raise InvalidKnob(
                f"SC backhaul uplift must be one of {UPLIFT_LEVELS_PCT} percent, "
                f"got {knobs.sc_backhaul_uplift_pct}")
        if knobs.mean_sc_backhaul_bps is None or knobs.mean_sc_backhaul_bps < 0:
            raise InvalidKnob("backhaul uplift requires a measured mean SC utilization")
        mean = float(knobs.mean_sc_backhaul_bps)
        overrides["sc_backhaul_uplift_bps"] = mean * knobs.sc_backhaul_uplift_pct / 100.0
        overrides["mc_backhaul_uplift_bps"] = mean * 10.0
    if knobs.densify_small_cells:
        overrides["sc_count_law"] = DENSIFIED_SC_LAW
    if knobs.relax_latency:
        overrides["latency_budget_ms"] = RELAXED_LATENCY_MS
    if overrides == dict(spec.parameter_overrides):
        return spec
    return replace(spec, parameter_overrides=overrides)


def spec_to_config(spec: ScenarioSpec) -> dict:
    """JSON-ready mapping mirroring the spec (see also :func:`spec_from_config`)."""
    cfg = {
        "deployment": spec.deployment.value,
        "dc_mode": spec.dc_mode.value,
        "regime": spec.regime.value,
        "services": spec.services.value,
        "constraints": sorted(c.value for c in spec.constraints),
        "n_embb_users": spec.n_embb_users,
        "mmtc_per_mc": spec.mmtc_per_mc,
        "latency_budget_ms": spec.latency_budget_ms,
        "n_trials": spec.n_trials,
        "solver_time_limit_s": spec.solver_time_limit_s,
        "base_seed": spec.base_seed,
        "parameter_overrides": {k: v for k, v in spec.parameter_overrides.items()},
    }
    try:
        cfg["scenario"] = format_scenario_code(spec)
    except UnknownCode:
        pass
    return cfg


def spec_from_config(cfg: Mapping[str, Any]) -> ScenarioSpec:
    """Build a spec from a JSON config document.

    Either a ``scenario`` code or the four explicit enum fields must be given;
    explicit fields win over the code's letters.
    """
    cfg = dict(cfg)
    base: dict[str, Any] = {}
    code = cfg.pop("scenario", None)
    if code is not None:
        parsed = parse_scenario_code(code)
        base = {
            "deployment": parsed.deployment,
            "dc_mode": parsed.dc_mode,
            "regime": parsed.regime,
            "services": parsed.services,
        }
        if parsed.services is Services.EMBB_ONLY:
            base["mmtc_per_mc"] = 0
    for key, enum_cls in (("deployment", Deployment), ("dc_mode", DcMode),
                          ("regime", Regime), ("services", Services)):
        if key in cfg:
            base[key] = enum_cls(cfg.pop(key))
    if "constraints" in cfg:
        base["constraints"] = frozenset(Constraint(c) for c in cfg.pop("constraints"))
    for key in ("n_embb_users", "mmtc_per_mc", "latency_budget_ms", "n_trials",
                "solver_time_limit_s", "base_seed", "parameter_overrides"):
        if key in cfg:
            base[key] = cfg.pop(key)
    if "parameter_overrides" in base:
        overrides = dict(base["parameter_overrides"])
        for key in ("area_m", "sc_count_law", "mmtc_rate_range_kbps"):
            if key in overrides and isinstance(overrides[key], list):
                overrides[key] = tuple(overrides[key])
        base["parameter_overrides"] = overrides
    if cfg:
        raise ValueError(f"unknown config fields: {sorted(cfg)}")
    missing = {"deployment", "dc_mode", "regime", "services"} - set(base)
    if missing:
        raise ValueError(f"config is missing fields: {sorted(missing)}")
    return ScenarioSpec(**base)
