"""
Scenario configs and their dotted-key text format.

One ``key = value`` per line, ``#`` starts a comment, blank lines are ignored. Keys follow the model tree:

    intersection.approaches = N, S, W          # lists are comma separated
    demand.counts.N-C = 300                    # mapping keys are the next segment
    events.0.kind = blackout                   # lists of records use integer segments
    controller.checkpoint = "runs/a b.cxf"     # values may be double quoted

Every section is optional; omitted values take the model defaults. :func:`dump_manifest` writes the effective config
back in the same format with sorted keys, and parsing a manifest gives the identical config.

Example:
    >>> config = parse_config_text("demand.per_lane = 200\\nhorizon = 500")
    >>> config.horizon, config.controller.kind.value
    (500, 'tl')
"""

import logging
import re
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from pydantic import Field, ValidationError, field_validator

from cxflow import __version__
from cxflow.common.constants import DEFAULT_CL_THRESHOLD, DEFAULT_SLOPE_WINDOW
from cxflow.common.enums import SweepAxis, WaitingTimeMode
from cxflow.common.exceptions import ConfigError
from cxflow.common.models import ConfigModel
from cxflow.common.utils import split_csv
from cxflow.comms.models import CommConfig
from cxflow.control.models import ControllerConfig, EventSpec
from cxflow.demand.models import DemandProfile
from cxflow.learn.models import LearnConfig
from cxflow.sim.models import IdmParams, IntersectionSpec

log = logging.getLogger(__name__)

KEY_PATTERN = re.compile(r"[^\s.=#]+(\.[^\s.=#]+)*")


class MetricsConfig(ConfigModel):
    """
    Attributes:
        threshold (float): congestion level threshold, s.
        waiting_mode (WaitingTimeMode): accumulated or longest interval waiting time.
        slope_window (int): trailing steps of the AWT slope.
    """

    threshold: float = Field(DEFAULT_CL_THRESHOLD, gt=0)
    waiting_mode: WaitingTimeMode = WaitingTimeMode.ACCUMULATED
    slope_window: int = Field(DEFAULT_SLOPE_WINDOW, ge=2)


class SweepConfig(ConfigModel):
    """Sweep axis and values, overridable from the command line."""

    axis: SweepAxis = SweepAxis.DEMAND
    values: List[float] = Field(default_factory=list)

    @field_validator("values", mode="before")
    def split_values(cls, value):
        return split_csv(value)


class ScenarioConfig(ConfigModel):
    """
    Everything one run needs.

    Attributes:
        intersection (IntersectionSpec): topology.
        idm (IdmParams): car following parameters.
        demand (DemandProfile): turning counts and RV rate.
        controller (ControllerConfig): controller and its options.
        comm (Optional[CommConfig]): V2V network model, used by the V2V stats source.
        events (List[EventSpec]): scripted scenario events.
        horizon (int): steps per rollout.
        seed (int): base seed; rollout k runs on seed + k.
        repeats (int): rollouts per evaluation.
        metrics (MetricsConfig): metric options.
        sweep (Optional[SweepConfig]): sweep defaults.
        learn (Optional[LearnConfig]): training hyperparameters.
    """

    intersection: IntersectionSpec = Field(default_factory=IntersectionSpec)
    idm: IdmParams = Field(default_factory=IdmParams)
    demand: DemandProfile = Field(default_factory=DemandProfile)
    controller: ControllerConfig = Field(default_factory=ControllerConfig)
    comm: Optional[CommConfig] = None
    events: List[EventSpec] = Field(default_factory=list)
    horizon: int = Field(1000, gt=0)
    seed: int = Field(0, ge=0, lt=2**64)
    repeats: int = Field(1, ge=1)
    metrics: MetricsConfig = Field(default_factory=MetricsConfig)
    sweep: Optional[SweepConfig] = None
    learn: Optional[LearnConfig] = None


# ==================== Parsing ====================


def _strip_comment(line: str) -> str:
    quoted = False
    for index, char in enumerate(line):
        if char == '"':
            quoted = not quoted
        elif char == "#" and not quoted:
            return line[:index]
    return line


def _unquote(value: str) -> str:
    if len(value) >= 2 and value[0] == value[-1] == '"':
        return value[1:-1]
    return value


def _insert(tree: Dict[str, Any], key: str, value: str, line: int) -> None:
    node = tree
    parts = key.split(".")
    for depth, part in enumerate(parts[:-1]):
        child = node.setdefault(part, {})
        if not isinstance(child, dict):
            raise ConfigError("key is both a value and a section", key=".".join(parts[: depth + 1]), line=line)
        node = child
    if parts[-1] in node:
        raise ConfigError("key is both a value and a section", key=key, line=line)
    node[parts[-1]] = value


def _listify(node: Any, path: str = "") -> Any:
    """Turns sections whose keys are all integers into lists."""
    if not isinstance(node, dict):
        return node
    converted = {k: _listify(v, f"{path}.{k}" if path else k) for k, v in node.items()}
    if converted and all(k.isdigit() for k in converted):
        indices = sorted(int(k) for k in converted)
        if indices != list(range(len(indices))):
            raise ConfigError(f"list indices must run 0..{len(indices) - 1}, got {indices}", key=path)
        return [converted[str(i)] for i in indices]
    return converted


def _line_of(loc: Tuple[Any, ...], lines: Dict[str, int]) -> Tuple[str, Optional[int]]:
    key = ".".join(str(part) for part in loc)
    if key in lines:
        return key, lines[key]
    prefix = key + "."
    matches = [line for k, line in lines.items() if k.startswith(prefix)]
    return key, (min(matches) if matches else None)


def parse_config_text(text: str) -> ScenarioConfig:
    """
    Parses config text.

    Raises:
        ConfigError: On a malformed line, a duplicate or unknown key, a missing required key or an invalid value;
            the error names the key and, when known, the line.
    """
    tree: Dict[str, Any] = {}
    lines: Dict[str, int] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=number)
        key, value = (part.strip() for part in line.split("=", 1))
        if not KEY_PATTERN.fullmatch(key):
            raise ConfigError(f"malformed key {key!r}", key=key, line=number)
        if key in lines:
            raise ConfigError(f"duplicate key, first set on line {lines[key]}", key=key, line=number)
        _insert(tree, key, _unquote(value), number)
        lines[key] = number

    try:
        return ScenarioConfig.model_validate(_listify(tree))
    except ValidationError as e:
        error = e.errors()[0]
        key, line = _line_of(tuple(error["loc"]), lines)
        message = error["msg"]
        if error["type"] == "extra_forbidden":
            message = "unknown key"
        raise ConfigError(message, key=key or None, line=line) from e


def parse_config(path: Union[str, Path]) -> ScenarioConfig:
    """
    Reads and parses a config file.

    Raises:
        ConfigError: If the file cannot be read or does not parse.
    """
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    config = parse_config_text(text)
    log.debug(f"parsed config {path}")
    return config


# ==================== Manifest ====================


def _format(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    text = str(value)
    if "#" in text or text != text.strip() or not text:
        return f'"{text}"'
    return text


def _flatten(node: Any, prefix: str, out: Dict[str, str]) -> None:
    if isinstance(node, dict):
        for key, value in node.items():
            _flatten(value, f"{prefix}.{key}" if prefix else str(key), out)
    elif isinstance(node, list):
        if node and all(isinstance(item, dict) for item in node):
            for index, item in enumerate(node):
                _flatten(item, f"{prefix}.{index}", out)
        elif node:
            out[prefix] = ", ".join(_format(item) for item in node)
    elif node is not None:
        out[prefix] = _format(node)


def manifest_entries(config: ScenarioConfig) -> List[Tuple[str, str]]:
    """Effective ``(key, value)`` pairs of a config, sorted by key."""
    flat: Dict[str, str] = {}
    _flatten(config.model_dump(mode="json", exclude_none=True), "", flat)
    return sorted(flat.items())


def dump_manifest(config: ScenarioConfig, extra: Optional[Dict[str, Any]] = None) -> str:
    """
    Serializes the effective config in the dotted-key format, preceded by comment lines with the code version and any
    extra facts of the run.
    """
    header = [f"# cxflow {__version__}"]
    for key, value in (extra or {}).items():
        header.append(f"# {key}: {value}")
    body = [f"{key} = {value}" for key, value in manifest_entries(config)]
    return "\n".join(header + body) + "\n"
