"""
Scenario configuration: schemas, file loading and flag > file > default merging.

Scenario files are JSON or YAML objects. Defaults per subcommand live in
config/scenarios.yaml.
"""

import json
import logging
import re
from pathlib import Path
from typing import Annotated, Any, Dict, List, Literal, Mapping, Optional, Tuple, Union

import numpy as np
import yaml
from pydantic import (
    BaseModel,
    BeforeValidator,
    ConfigDict,
    Field,
    NonNegativeFloat,
    PositiveFloat,
    PositiveInt,
    TypeAdapter,
    ValidationError,
    field_validator,
    model_validator,
)

from src.bloch import QubitModel
from src.errors import ConfigError
from src.lambda_model import LambdaParams
from src.rates import BathSpec, MeasurementSpec

logger = logging.getLogger(__name__)

DEFAULTS_PATH = Path(__file__).resolve().parent.parent / "config" / "scenarios.yaml"
HERMITIAN_TOL = 1e-12

_ANGLE_PATTERN = re.compile(r"^(?P<coef>[0-9]*\.?[0-9]*)\*?pi(?:/(?P<denom>[0-9]*\.?[0-9]+))?$")


def parse_angle(value: Any) -> Any:
    """Accept radians or strings like "pi/4", "3*pi/4", "0.5pi"."""
    if not isinstance(value, str):
        return value
    text = value.replace(" ", "").lower()
    match = _ANGLE_PATTERN.match(text)
    if match is None:
        try:
            return float(text)
        except ValueError:
            raise ValueError(f"cannot read angle '{value}'") from None
    coef = float(match["coef"]) if match["coef"] else 1.0
    denom = float(match["denom"]) if match["denom"] else 1.0
    return coef * np.pi / denom


Angle = Annotated[float, BeforeValidator(parse_angle)]
ComplexEntry = Union[float, Tuple[float, float]]
Matrix = List[List[ComplexEntry]]


def to_complex_array(entries) -> np.ndarray:
    """Nested lists of reals or [re, im] pairs to a complex array."""
    def convert(item):
        if isinstance(item, tuple):
            return complex(item[0], item[1])
        if isinstance(item, list):
            return [convert(sub) for sub in item]
        return complex(item)

    return np.array(convert(list(entries)), dtype=complex)


def _check_theta(theta: float) -> float:
    if theta < 0 or theta > np.pi + 1e-12:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    return min(theta, np.pi)


class _StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)


class BathConfig(_StrictModel):
    kappa: NonNegativeFloat
    temperature: NonNegativeFloat
    cutoff: PositiveFloat = 10.0
    label: str = "bath"

    def to_spec(self) -> BathSpec:
        return BathSpec(self.kappa, self.temperature, self.cutoff, self.label)


class OutputConfig(_StrictModel):
    path: Optional[str] = None
    format: Literal["csv", "json"] = "csv"
    gnuplot_script: bool = False


class _ScenarioBase(_StrictModel):
    output: OutputConfig = Field(default_factory=OutputConfig)
    workers: PositiveInt = 1

    def params_echo(self) -> Dict[str, Any]:
        """Parameters that determine the numbers (output settings excluded)."""
        return self.model_dump(mode="json", exclude={"output", "workers"})


class _QubitScenario(_ScenarioBase):
    """Qubit parameters; ``baths`` (if given) replaces gamma_plus/gamma_minus."""

    delta: PositiveFloat = 1.0
    gamma_plus: NonNegativeFloat = 0.02
    gamma_minus: NonNegativeFloat = 0.01
    baths: Optional[List[BathConfig]] = None
    phi: Angle = 0.0

    @model_validator(mode="after")
    def _check_rates(self):
        if not self.baths and self.gamma_minus > self.gamma_plus:
            raise ValueError(
                f"gamma_minus ({self.gamma_minus}) must not exceed gamma_plus ({self.gamma_plus})"
            )
        return self

    def qubit_model(self, gamma: float, theta: float) -> QubitModel:
        meas = MeasurementSpec(gamma=gamma, theta=theta, phi=self.phi)
        if self.baths:
            return QubitModel(self.delta, meas, baths=tuple(b.to_spec() for b in self.baths))
        return QubitModel.from_aggregates(self.delta, self.gamma_plus, self.gamma_minus, meas)


class SteadySweepConfig(_QubitScenario):
    kind: Literal["steady_sweep_theta"] = "steady_sweep_theta"
    gamma_plus: NonNegativeFloat = 0.01
    gamma_minus: NonNegativeFloat = 0.005
    gammas: List[NonNegativeFloat] = Field(default_factory=lambda: [0.001, 0.01, 0.05], min_length=1)
    theta_points: int = Field(default=181, ge=2)


class TransientConfig(_QubitScenario):
    kind: Literal["transient"] = "transient"
    gamma: NonNegativeFloat = 0.01
    thetas: List[Angle] = Field(
        default_factory=lambda: [0.0, np.pi / 6, np.pi / 4, np.pi / 3, np.pi / 2], min_length=1
    )
    initial: Union[Literal["sigma_x", "unmeasured_steady"], Tuple[float, float, float]] = "sigma_x"
    t_end: PositiveFloat = 600.0
    dt: Optional[PositiveFloat] = 0.01

    @field_validator("thetas")
    @classmethod
    def _thetas_in_range(cls, value: List[float]) -> List[float]:
        return [_check_theta(theta) for theta in value]

    @field_validator("initial")
    @classmethod
    def _initial_in_ball(cls, value):
        if isinstance(value, tuple) and sum(v * v for v in value) > 1 + 1e-9:
            raise ValueError(f"initial Bloch vector {value} lies outside the Bloch ball")
        return value


class ExcessSweepConfig(_QubitScenario):
    kind: Literal["excess_sweep_theta"] = "excess_sweep_theta"
    gammas: List[NonNegativeFloat] = Field(default_factory=lambda: [0.01], min_length=1)
    theta_points: int = Field(default=181, ge=2)
    t_end: Optional[PositiveFloat] = None
    dt: Optional[PositiveFloat] = None


class LambdaSweepConfig(_ScenarioBase):
    kind: Literal["lambda_sweep_gamma"] = "lambda_sweep_gamma"
    delta_big: PositiveFloat = 1.0
    delta_small: PositiveFloat = 0.5
    hot: BathConfig = Field(default_factory=lambda: BathConfig(kappa=0.01, temperature=5.0, label="hot"))
    cold: BathConfig = Field(default_factory=lambda: BathConfig(kappa=0.01, temperature=2.0, label="cold"))
    phi: Angle = 0.0
    gammas: Optional[List[NonNegativeFloat]] = None
    gamma_min: PositiveFloat = 1e-4
    gamma_max: PositiveFloat = 1e-1
    gamma_points: int = Field(default=25, ge=1)

    @model_validator(mode="after")
    def _check_levels(self):
        if not self.delta_small < self.delta_big:
            raise ValueError(f"delta_small ({self.delta_small}) must be below delta_big ({self.delta_big})")
        if self.gammas is None and self.gamma_min > self.gamma_max:
            raise ValueError("gamma_min must not exceed gamma_max")
        return self

    def gamma_grid(self) -> np.ndarray:
        if self.gammas is not None:
            return np.asarray(self.gammas, dtype=float)
        return np.logspace(np.log10(self.gamma_min), np.log10(self.gamma_max), self.gamma_points)

    def lambda_params(self) -> LambdaParams:
        return LambdaParams(
            delta_big=self.delta_big,
            delta_small=self.delta_small,
            hot=self.hot.to_spec(),
            cold=self.cold.to_spec(),
            phi=self.phi,
        )


class ChannelConfig(_StrictModel):
    """Jump operator given as a full matrix or as a transition [i, j] meaning |i><j|."""

    rate: NonNegativeFloat
    operator: Optional[Matrix] = None
    transition: Optional[Tuple[int, int]] = None
    label: str = ""

    @model_validator(mode="after")
    def _one_form(self):
        if (self.operator is None) == (self.transition is None):
            raise ValueError("give exactly one of 'operator' or 'transition'")
        return self

    def matrix(self, dim: int) -> np.ndarray:
        if self.operator is not None:
            return to_complex_array(self.operator)
        op = np.zeros((dim, dim), dtype=complex)
        op[self.transition[0], self.transition[1]] = 1
        return op


class MeasurementConfig(_StrictModel):
    """Measured pure state (vector) or its projector, plus strength gamma."""

    gamma: NonNegativeFloat
    state: Optional[List[ComplexEntry]] = None
    projector: Optional[Matrix] = None

    @model_validator(mode="after")
    def _one_form(self):
        if (self.state is None) == (self.projector is None):
            raise ValueError("give exactly one of 'state' or 'projector'")
        return self


class CustomConfig(_ScenarioBase):
    kind: Literal["custom_lindblad"] = "custom_lindblad"
    hamiltonian: Matrix
    channels: List[ChannelConfig] = Field(default_factory=list)
    measurement: MeasurementConfig
    initial_state: Optional[List[ComplexEntry]] = None
    initial_rho: Optional[Matrix] = None
    t_end: Optional[PositiveFloat] = None
    dt: Optional[PositiveFloat] = None
    steady_state: bool = True

    @property
    def dim(self) -> int:
        return len(self.hamiltonian)

    @model_validator(mode="after")
    def _check_shapes(self):
        n = self.dim
        if n == 0 or any(len(row) != n for row in self.hamiltonian):
            raise ValueError("hamiltonian must be a non-empty square matrix")
        h = to_complex_array(self.hamiltonian)
        for i in range(n):
            for j in range(i, n):
                if abs(h[i, j] - np.conj(h[j, i])) > HERMITIAN_TOL:
                    raise ValueError(
                        f"hamiltonian[{i}][{j}] = {h[i, j]} is not the conjugate of "
                        f"hamiltonian[{j}][{i}] = {h[j, i]}; H must be Hermitian"
                    )
        for k, channel in enumerate(self.channels):
            if channel.transition is not None:
                if not all(0 <= idx < n for idx in channel.transition):
                    raise ValueError(f"channels[{k}].transition {channel.transition} outside 0..{n - 1}")
            elif to_complex_array(channel.operator).shape != (n, n):
                raise ValueError(f"channels[{k}].operator must be {n}x{n}")
        meas = self.measurement
        if meas.state is not None and len(meas.state) != n:
            raise ValueError(f"measurement.state must have {n} entries")
        if meas.projector is not None and to_complex_array(meas.projector).shape != (n, n):
            raise ValueError(f"measurement.projector must be {n}x{n}")
        if self.initial_state is not None and self.initial_rho is not None:
            raise ValueError("give at most one of 'initial_state' or 'initial_rho'")
        if self.initial_state is not None and len(self.initial_state) != n:
            raise ValueError(f"initial_state must have {n} entries")
        if self.initial_rho is not None and to_complex_array(self.initial_rho).shape != (n, n):
            raise ValueError(f"initial_rho must be {n}x{n}")
        if self.t_end is not None and self.initial_state is None and self.initial_rho is None:
            raise ValueError("a time grid (t_end) needs 'initial_state' or 'initial_rho'")
        if self.t_end is None and not self.steady_state:
            raise ValueError("nothing to compute: set t_end or steady_state")
        return self


Scenario = Annotated[
    Union[SteadySweepConfig, TransientConfig, ExcessSweepConfig, LambdaSweepConfig, CustomConfig],
    Field(discriminator="kind"),
]
_SCENARIO_ADAPTER = TypeAdapter(Scenario)


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Parse a JSON/YAML scenario file into a dict.

    Raises:
        ConfigError: unreadable file, syntax error (with line:column) or non-object top level
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror or exc}"]) from exc
    if path.suffix.lower() == ".json" or text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}"]) from exc
        return _require_object(path, data)
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or str(exc)
        if mark is not None:
            raise ConfigError([f"{path}:{mark.line + 1}:{mark.column + 1}: {problem}"]) from exc
        raise ConfigError([f"{path}: {problem}"]) from exc
    return _require_object(path, data)


def _require_object(path: Path, data: Any) -> Dict[str, Any]:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be an object"])
    return data


def merge_settings(base: Mapping[str, Any], override: Mapping[str, Any]) -> Dict[str, Any]:
    """Recursive dict merge; values of ``override`` win."""
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = merge_settings(merged[key], value)
        else:
            merged[key] = value
    return merged


def validate_scenario(data: Mapping[str, Any]):
    """
    Validate a merged settings dict into its scenario model.

    Raises:
        ConfigError: one message per failing field path
    """
    try:
        return _SCENARIO_ADAPTER.validate_python(dict(data))
    except ValidationError as exc:
        messages = []
        for error in exc.errors():
            loc = list(error["loc"])
            if loc and loc[0] == data.get("kind"):
                loc = loc[1:]
            where = ".".join(str(part) for part in loc) or "<root>"
            messages.append(f"{where}: {error['msg']}")
        raise ConfigError(messages) from exc


def load_scenario(
    command: str,
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
    defaults_path: Union[str, Path] = DEFAULTS_PATH,
):
    """
    Resolve the scenario of a subcommand: CLI flag > config file > defaults file.

    Args:
        command: Subcommand name (a top-level key of the defaults file)
        config_path: Optional user scenario file
        overrides: Settings from CLI flags (None values are ignored)
        defaults_path: Defaults file

    Returns:
        A validated scenario model
    """
    defaults_file = read_config_file(defaults_path)
    if command not in defaults_file:
        raise ConfigError([f"no defaults for subcommand '{command}' in {defaults_path}"])
    settings = dict(defaults_file[command])

    if config_path is not None:
        user = read_config_file(config_path)
        user_kind = user.get("kind", settings.get("kind"))
        if user_kind != settings.get("kind"):
            raise ConfigError(
                [f"kind: '{user_kind}' does not match subcommand '{command}' ({settings.get('kind')})"]
            )
        settings = merge_settings(settings, user)

    if overrides:
        settings = merge_settings(settings, _drop_none(overrides))

    scenario = validate_scenario(settings)
    logger.debug("scenario for %s: %s", command, scenario.params_echo())
    return scenario


def _drop_none(values: Mapping[str, Any]) -> Dict[str, Any]:
    cleaned = {}
    for key, value in values.items():
        if isinstance(value, Mapping):
            value = _drop_none(value)
            if not value:
                continue
        if value is None:
            continue
        cleaned[key] = value
    return cleaned
