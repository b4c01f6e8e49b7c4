"""
Shared command plumbing: flags, config loading, preset instantiation and
artifact/summary writing.
"""
import argparse
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, ValidationError

from nonloc import io
from nonloc.errors import ConfigurationError
from nonloc.models import GridFunction
from nonloc.presets import PresetInstance, preset
from nonloc.schemas import DomainConfig, KernelConfig, RunConfig, RunSummary

logger = logging.getLogger(__name__)

SUMMARY_FILE = "summary.json"
LOG_LEVELS = ["DEBUG", "INFO", "WARNING", "ERROR"]


def common_flags() -> argparse.ArgumentParser:
    """Parent parser with the flags every command accepts."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("--out", type=Path, help="output directory (overrides output.dir)")
    parser.add_argument("--threads", type=int, help="worker threads (fallback: NONLOC_THREADS)")
    parser.add_argument("--seed", type=int, help="random seed (overrides solver.seed)")
    parser.add_argument("--log-level", type=str.upper, choices=LOG_LEVELS, help="logging level")
    return parser


def add_preset_flag(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--preset", help="catalog preset (overrides problem.preset)")


def _validation_message(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        where = ".".join(str(part) for part in error["loc"]) or "config"
        parts.append(f"{where}: {error['msg']}")
    return "invalid config: " + "; ".join(parts)


def read_config(path: Optional[Path]) -> Dict[str, Any]:
    """
    Raises:
        ConfigurationError: If the file cannot be read or is not a JSON object
        DataError: If the file is not valid UTF-8
    """
    if path is None:
        return {}
    try:
        raw = json.loads(io.decode_text(Path(path).read_bytes(), path))
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}:{exc.lineno}: invalid JSON: {exc.msg}")
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: config must be a JSON object")
    return raw


@dataclass
class RunContext:
    """Validated, materialized configuration of one command plus its artifacts."""
    command: str
    config: RunConfig
    out_dir: Path
    base_dir: Optional[Path] = None
    artifacts: List[str] = field(default_factory=list)

    @property
    def materialized(self) -> Dict[str, Any]:
        return self.config.model_dump(mode="json")

    @property
    def config_hash(self) -> str:
        return io.config_hash(self.materialized)

    @property
    def seed(self) -> int:
        return self.config.solver.seed

    def emits(self, kind: str) -> bool:
        return kind in self.config.output.emit

    def instance(self, audit: bool = True) -> PresetInstance:
        """
        Raises:
            ConfigurationError: If the config names no preset
        """
        problem = self.config.problem
        if problem is None:
            raise ConfigurationError(f"'{self.command}' needs problem.preset (or --preset)")
        return preset(problem.preset).instantiate(
            self.config.domain, self.config.kernel, problem.collar_value, self.base_dir, audit
        )

    def write_csv(self, name: str, u: GridFunction) -> None:
        io.write_grid_function(self.out_dir / name, u)
        self.artifacts.append(name)

    def write_json(self, name: str, payload: Any) -> None:
        io.write_json(self.out_dir / name, payload)
        self.artifacts.append(name)

    def finish(self, passed: bool, key_metrics: Dict[str, Any]) -> int:
        """Write summary.json and return the exit code (0 passed, 1 otherwise)."""
        summary = RunSummary(
            command=self.command,
            passed=passed,
            key_metrics=key_metrics,
            config_hash=self.config_hash,
            config=self.materialized,
            artifacts=self.artifacts + [SUMMARY_FILE],
        )
        io.write_json(self.out_dir / SUMMARY_FILE, summary)
        logger.info("%s finished: passed=%s, artifacts in %s", self.command, passed, self.out_dir)
        return 0 if passed else 1


def load_context(args: argparse.Namespace, command: str, preset_name: Optional[str] = None) -> RunContext:
    """
    Validate the config file and apply flag overrides (flag > file > default).

    Domain and kernel left unset take the preset's defaults, so the
    materialized config describes the run completely.

    Raises:
        ConfigurationError: On unreadable or invalid configuration
    """
    raw = read_config(args.config)
    name = preset_name or getattr(args, "preset", None)
    if name:
        problem = raw.get("problem")
        raw["problem"] = {**problem, "preset": name} if isinstance(problem, dict) else {"preset": name}
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigurationError(_validation_message(exc))

    updates: Dict[str, BaseModel] = {}
    if args.seed is not None:
        updates["solver"] = config.solver.model_copy(update={"seed": args.seed})
    if args.out is not None:
        updates["output"] = config.output.model_copy(update={"dir": str(args.out)})
    if config.problem is not None:
        entry = preset(config.problem.preset)
        updates.setdefault("domain", config.domain or entry.domain)
        updates.setdefault("kernel", config.kernel or entry.kernel)
    else:
        updates.setdefault("domain", config.domain or DomainConfig())
        updates.setdefault("kernel", config.kernel or KernelConfig())
    config = config.model_copy(update=updates)

    base_dir = Path(args.config).parent if args.config else None
    return RunContext(command=command, config=config, out_dir=Path(config.output.dir), base_dir=base_dir)
