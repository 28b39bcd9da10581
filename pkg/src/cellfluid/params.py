"""Scenario parameters: parsing, validation, and derived per-cell rates.

The scenario file is flat ``key=value`` text.  Lines starting with ``#`` are
comments, blank lines are ignored, and any key outside SCENARIO_KEYS is an
error.  All keys except ``cell_radius`` are required; ``cell_radius``
defaults to half the base-station spacing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ScenarioError

SCENARIO_KEYS = (
    "lambda_R",
    "mu_M",
    "v_max",
    "channels",
    "cell_radius",
    "base_spacing",
    "grid_side",
    "exp_pulse_mean",
    "mean_session_length",
    "delta_time",
    "sim_duration",
    "seed",
)

_INT_KEYS = frozenset({"channels", "grid_side", "seed"})
_OPTIONAL_KEYS = frozenset({"cell_radius"})


@dataclass(frozen=True)
class ScenarioParams:
    """Traffic, mobility, and geometry inputs for the analytic chain.

    lambda_R is a new-call density (calls per second per unit area), not a
    per-cell rate; the per-cell attempt rate is derived from the cell area.
    The cell is approximated as a circle of ``cell_radius``, defaulting to
    half of ``base_spacing``.
    """

    lambda_R: float
    mu_M: float
    v_max: float
    channels: int
    base_spacing: float
    grid_side: int
    cell_radius: float | None = None

    def __post_init__(self):
        if self.cell_radius is None:
            object.__setattr__(self, "cell_radius", self.base_spacing / 2.0)


@dataclass
class ValidationReport:
    """Outcome of parameter validation; `failures` names each violated field."""

    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def add(self, name: str, reason: str) -> None:
        self.failures.append(f"{name}: {reason}")


def validate(params: ScenarioParams) -> ValidationReport:
    """Check every invariant of ScenarioParams without mutating it."""
    report = ValidationReport()
    positive = [
        ("lambda_R", params.lambda_R),
        ("mu_M", params.mu_M),
        ("v_max", params.v_max),
        ("base_spacing", params.base_spacing),
        ("cell_radius", params.cell_radius),
    ]
    for name, value in positive:
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            report.add(name, f"must be a positive finite number, got {value!r}")
    if not (isinstance(params.channels, int) and params.channels >= 1):
        report.add("channels", f"must be an integer >= 1, got {params.channels!r}")
    if not (isinstance(params.grid_side, int) and params.grid_side >= 1):
        report.add("grid_side", f"must be an integer >= 1, got {params.grid_side!r}")
    return report


@dataclass(frozen=True)
class DerivedRates:
    """Per-cell rates derived from the area density lambda_R."""

    lambda_R: float
    lambda_cell: float  # new-call attempts per second per cell: lambda_R * pi * R^2

    def gamma_o(self, lambda_Rh: float) -> float:
        """Handoff-attempt to new-call-attempt ratio."""
        return lambda_Rh / self.lambda_R


def derive(params: ScenarioParams) -> DerivedRates:
    """Compute the per-cell new-call rate; raises if params are invalid."""
    report = validate(params)
    if not report.ok:
        raise ScenarioError("invalid parameters: " + "; ".join(report.failures))
    lambda_cell = params.lambda_R * math.pi * params.cell_radius**2
    return DerivedRates(lambda_R=params.lambda_R, lambda_cell=lambda_cell)


def read_scenario(path) -> dict:
    """Parse a scenario file into {key: number}.

    Raises ScenarioError (with a line number) on unknown keys, duplicate
    keys, malformed lines, or unparseable values.  Presence of required keys
    is checked here; only ``cell_radius`` may be omitted.
    """
    values: dict = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario file {path}: {exc}") from exc

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ScenarioError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, text = line.partition("=")
        key = key.strip()
        text = text.strip()
        if key not in SCENARIO_KEYS:
            raise ScenarioError(f"{path}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ScenarioError(f"{path}:{lineno}: duplicate key {key!r}")
        try:
            number = float(text)
        except ValueError as exc:
            raise ScenarioError(
                f"{path}:{lineno}: value for {key!r} is not a number: {text!r}"
            ) from exc
        if key in _INT_KEYS:
            if number != int(number):
                raise ScenarioError(f"{path}:{lineno}: {key!r} must be an integer")
            number = int(number)
        values[key] = number

    missing = [k for k in SCENARIO_KEYS if k not in values and k not in _OPTIONAL_KEYS]
    if missing:
        raise ScenarioError(f"{path}: missing required keys: {', '.join(missing)}")
    return values


def scenario_params(values: dict) -> ScenarioParams:
    """Build ScenarioParams from a parsed scenario dict."""
    return ScenarioParams(
        lambda_R=values["lambda_R"],
        mu_M=values["mu_M"],
        v_max=values["v_max"],
        channels=values["channels"],
        base_spacing=values["base_spacing"],
        grid_side=values["grid_side"],
        cell_radius=values.get("cell_radius"),
    )
