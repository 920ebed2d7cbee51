# service/scenario_store.py
"""
YAML-backed scenario store.

Provides:
 - load_scenario(path, preset=None)    # file (or bundled scenario name) -> Scenario
 - scenario_from_dict(data, preset)    # already-parsed mapping -> Scenario
 - list_builtin()                      # names of the bundled scenarios
 - dump_resolved(scenario, path)       # atomically write every effective parameter

A file may name a threshold preset under the top-level key `preset`; the CLI flag wins over
the file, and explicit `thresholds` keys in the file win over either preset.
Validation failures become ConfigError carrying the offending key path and YAML line.
"""

from pathlib import Path
from typing import Any, Optional

import yaml
from pydantic import ValidationError

from logic.errors import ConfigError
from logic.hydraulics import PRESETS, ThresholdConfig
from service.simulation_service import Scenario
from utils.logger import logger

ROOT = Path(__file__).resolve().parent.parent
SCENARIO_DIR = ROOT / "scenarios"
PRESET_KEY = "preset"


def list_builtin() -> list[str]:
    return sorted(p.stem for p in SCENARIO_DIR.glob("*.yaml"))


def _resolve_path(path: str | Path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    bundled = SCENARIO_DIR / f"{p.name}.yaml"
    if p.suffix == "" and bundled.exists():
        return bundled
    raise ConfigError(f"scenario file not found: {path}")


def _line_of(root: Optional[yaml.Node], loc: tuple[Any, ...]) -> Optional[int]:
    """1-based line of the deepest YAML node reachable along `loc`."""
    node = root
    if node is None:
        return None
    for part in loc:
        child = None
        if isinstance(node, yaml.MappingNode):
            child = next((v for k, v in node.value if k.value == str(part)), None)
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            child = node.value[part]
        if child is None:
            break
        node = child
    return node.start_mark.line + 1


def _apply_preset(data: dict[str, Any], preset: Optional[str]) -> dict[str, Any]:
    data = dict(data)
    name = preset or data.pop(PRESET_KEY, None)
    data.pop(PRESET_KEY, None)
    if name is None:
        return data
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r} (choose from {', '.join(PRESETS)})", key=PRESET_KEY)
    base = PRESETS[name].model_dump(by_alias=True)
    overrides = data.get("thresholds") or {}
    if not isinstance(overrides, dict):
        raise ConfigError("thresholds must be a mapping", key="thresholds")
    # keys may be written by field name or by alias; the preset base is by alias
    aliases = {key: field.alias or key for key, field in ThresholdConfig.model_fields.items()}
    overrides = {aliases.get(k, k): v for k, v in overrides.items()}
    data["thresholds"] = {**base, **overrides}
    logger.debug("preset {} applied ({} explicit threshold overrides)", name, len(overrides))
    return data


def scenario_from_dict(
    data: dict[str, Any],
    preset: Optional[str] = None,
    node: Optional[yaml.Node] = None,
) -> Scenario:
    """Validate a parsed mapping; `node` (the composed YAML) only serves error line numbers."""
    if not isinstance(data, dict):
        raise ConfigError("scenario must be a mapping at the top level")
    data = _apply_preset(data, preset)
    try:
        return Scenario.model_validate(data)
    except ValidationError as e:
        err = e.errors()[0]
        loc = tuple(err["loc"])
        key = ".".join(str(part) for part in loc) or None
        raise ConfigError(err["msg"], key=key, line=_line_of(node, loc)) from e


def load_scenario(path: str | Path, preset: Optional[str] = None) -> Scenario:
    """Read, validate and return the scenario at `path` (or a bundled scenario name)."""
    p = _resolve_path(path)
    try:
        text = p.read_text(encoding="utf-8")
        node = yaml.compose(text)
        data = yaml.safe_load(text)
    except OSError as e:
        raise ConfigError(f"cannot read {p}: {e}") from e
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        raise ConfigError(f"invalid YAML in {p}", line=mark.line + 1 if mark else None) from e
    scenario = scenario_from_dict(data if data is not None else {}, preset, node)
    logger.info("📄 scenario loaded from {}", p)
    return scenario


def dump_resolved(scenario: Scenario, path: str | Path) -> Path:
    """Atomically write the fully resolved scenario; reloading it gives the same scenario."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    payload = scenario.model_dump(mode="json", by_alias=True, exclude={"soil": {"raw"}})
    tmp = target.with_suffix(target.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        yaml.safe_dump(payload, f, sort_keys=False, allow_unicode=True)
        f.flush()
    tmp.replace(target)
    return target
