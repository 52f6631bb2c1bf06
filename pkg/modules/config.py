"""
Experiment configuration for vibench.

Configs are JSON or YAML documents (both go through ``yaml.safe_load``).
``load_config`` resolves the file with this search order:

1) Explicit path provided (file or directory)
2) VIBENCH_CONFIG environment variable (file or directory)
3) Current working directory (./experiment.yml)
4) Directory of this package/script (…/experiment.yml)
5) ~/.config/vibench/experiment.yml

The first existing file is used.
"""

import json
import os
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Optional

import yaml

from .core import (
    METHODS,
    RUN_MODES,
    STOP_RULES,
    AlphaSchedule,
    ConfigError,
    SolverConfig,
)
from .problems import get_family

DEFAULT_CONFIG_NAME = "experiment.yml"


@dataclass(frozen=True)
class ProblemConfig:
    """Problem family, its parameters and the seeds to run."""
    family: str
    params: Dict[str, Any] = field(default_factory=dict)
    seeds: List[int] = field(default_factory=lambda: [0])


@dataclass(frozen=True)
class MethodConfig:
    """One method entry; ``label`` tells apart several entries of the same method."""
    name: str
    solver: SolverConfig
    label: str = ""

    @property
    def display_name(self) -> str:
        return self.label or self.name


@dataclass(frozen=True)
class LoggingConfig:
    level: str = "INFO"
    file: Optional[str] = None
    max_size: str = "10MB"
    backup_count: int = 5


@dataclass(frozen=True)
class ExperimentConfig:
    """A validated experiment: every method carries its complete SolverConfig."""
    problem: ProblemConfig
    methods: List[MethodConfig]
    stop_rule: str
    tol: float
    max_iter: int = 100_000
    repetitions: int = 1
    output_dir: str = "results"
    mode: str = "checked"
    workers: Optional[int] = None
    timings: bool = True
    logging: LoggingConfig = field(default_factory=LoggingConfig)

    def with_seeds(self, seeds: List[int]) -> "ExperimentConfig":
        if not seeds:
            raise ConfigError("problem.seeds: at least one seed is required")
        return replace(self, problem=replace(self.problem, seeds=list(seeds)))

    def with_mode(self, mode: str) -> "ExperimentConfig":
        if mode not in RUN_MODES:
            raise ConfigError(f"mode: unknown mode '{mode}' (expected checked or fast)")
        methods = [replace(m, solver=m.solver.with_overrides(mode=mode)) for m in self.methods]
        return replace(self, mode=mode, methods=methods)


TOP_LEVEL_KEYS = {'problem', 'methods', 'stop_rule', 'tol', 'max_iter', 'repetitions',
                  'output_dir', 'mode', 'workers', 'timings', 'logging'}
METHOD_KEYS = {'name', 'label', 'gamma', 'sigma_ls', 'alpha', 'alpha_schedule', 'lam', 'delta',
               'max_ls_exponent'}
KEY_ALIASES = {
    'lambda': 'lam',
    'sigma': 'sigma_ls',
    'out': 'output_dir',
    'method': 'name',
}


def _normalize_keys(raw: Dict[str, Any], allowed: set, path: str) -> Dict[str, Any]:
    """Map aliases onto field names and reject unknown keys."""
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(raw).__name__}")
    normalized: Dict[str, Any] = {}
    for key, value in raw.items():
        target = KEY_ALIASES.get(str(key), str(key))
        if target not in allowed:
            raise ConfigError(f"{path}.{key}: unknown key" if path else f"{key}: unknown key")
        normalized[target] = value
    return normalized


def _as_float(value: Any, path: str) -> float:
    # YAML 1.1 reads exponent literals such as 1e-3 as strings
    if isinstance(value, bool):
        raise ConfigError(f"{path}: expected a number, got {value!r}")
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{path}: expected a number, got {value!r}") from None


def _as_int(value: Any, path: str) -> int:
    number = _as_float(value, path)
    if not number.is_integer():
        raise ConfigError(f"{path}: expected an integer, got {value!r}")
    return int(number)


def _as_bool(value: Any, path: str) -> bool:
    if isinstance(value, bool):
        return value
    raise ConfigError(f"{path}: expected true or false, got {value!r}")


def _as_choice(value: Any, choices, path: str) -> str:
    text = str(value)
    if text not in choices:
        raise ConfigError(f"{path}: '{text}' is not one of {', '.join(choices)}")
    return text


def parse_seed_range(text: str) -> List[int]:
    """Parse "A..B" (inclusive) or a single seed into a list of seeds."""
    text = str(text).strip()
    try:
        if ".." in text:
            start, end = (int(part) for part in text.split("..", 1))
        else:
            start = end = int(text)
    except ValueError:
        raise ConfigError(f"seeds: cannot parse '{text}' (expected A..B)") from None
    if start < 0 or end < start:
        raise ConfigError(f"seeds: invalid range '{text}'")
    return list(range(start, end + 1))


def _parse_seeds(raw: Any, path: str) -> List[int]:
    if isinstance(raw, str):
        return parse_seed_range(raw)
    if isinstance(raw, (int, float)) and not isinstance(raw, bool):
        return [_as_int(raw, path)]
    if not isinstance(raw, list):
        raise ConfigError(f"{path}: expected a list of seeds or 'A..B'")
    seeds = [_as_int(value, f"{path}[{i}]") for i, value in enumerate(raw)]
    if any(seed < 0 for seed in seeds):
        raise ConfigError(f"{path}: seeds must be nonnegative")
    return seeds


def _parse_problem(raw: Any) -> ProblemConfig:
    if isinstance(raw, str):
        raw = {'family': raw}
    data = _normalize_keys(raw, {'family', 'params', 'seeds'}, "problem")
    if 'family' not in data:
        raise ConfigError("problem.family: required")
    family = get_family(str(data['family']))

    params: Dict[str, Any] = dict(family.params)
    raw_params = data.get('params') or {}
    if not isinstance(raw_params, dict):
        raise ConfigError("problem.params: expected a mapping")
    for key, value in raw_params.items():
        if key not in family.params:
            raise ConfigError(f"problem.params.{key}: not a parameter of {family.name}")
        default = family.params[key]
        path = f"problem.params.{key}"
        params[key] = _as_int(value, path) if isinstance(default, int) else _as_float(value, path)

    seeds = _parse_seeds(data.get('seeds', [0]), "problem.seeds")
    if not seeds:
        raise ConfigError("problem.seeds: at least one seed is required")
    return ProblemConfig(family=family.name, params=params, seeds=seeds)


def _parse_alpha(data: Dict[str, Any], path: str) -> AlphaSchedule:
    if 'alpha_schedule' in data:
        raw = _normalize_keys(data['alpha_schedule'], {'kind', 'value', 'start', 'ramp_iters'},
                              f"{path}.alpha_schedule")
        return AlphaSchedule(
            kind=str(raw.get('kind', 'constant')),
            value=_as_float(raw.get('value', 0.2), f"{path}.alpha_schedule.value"),
            start=_as_float(raw.get('start', 0.0), f"{path}.alpha_schedule.start"),
            ramp_iters=_as_int(raw.get('ramp_iters', 100), f"{path}.alpha_schedule.ramp_iters"),
        )
    if 'alpha' in data:
        return AlphaSchedule.constant(_as_float(data['alpha'], f"{path}.alpha"))
    return AlphaSchedule()


def _parse_method(raw: Any, index: int, common: Dict[str, Any]) -> MethodConfig:
    path = f"methods[{index}]"
    if isinstance(raw, str):
        raw = {'name': raw}
    data = _normalize_keys(raw, METHOD_KEYS, path)
    if 'name' not in data:
        raise ConfigError(f"{path}.name: required")
    name = _as_choice(data['name'], METHODS, f"{path}.name")

    alpha_schedule = _parse_alpha(data, path)
    if name == "alg1_noinertia":
        alpha_schedule = AlphaSchedule.constant(0.0)
    defaults = SolverConfig()
    solver = SolverConfig(
        gamma=_as_float(data.get('gamma', defaults.gamma), f"{path}.gamma"),
        sigma_ls=_as_float(data.get('sigma_ls', defaults.sigma_ls), f"{path}.sigma_ls"),
        alpha_schedule=alpha_schedule,
        lam=None if data.get('lam') is None else _as_float(data['lam'], f"{path}.lam"),
        delta=_as_float(data.get('delta', defaults.delta), f"{path}.delta"),
        max_ls_exponent=_as_int(data.get('max_ls_exponent', defaults.max_ls_exponent),
                                f"{path}.max_ls_exponent"),
        **common,
    )
    solver.validate(name, path)
    return MethodConfig(name=name, solver=solver, label=str(data.get('label', '') or ''))


def _parse_logging(raw: Any) -> LoggingConfig:
    data = _normalize_keys(raw or {}, {'level', 'file', 'max_size', 'backup_count'}, "logging")
    level = str(data.get('level', 'INFO')).upper()
    if level not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
        raise ConfigError(f"logging.level: unknown level '{level}'")
    return LoggingConfig(
        level=level,
        file=None if data.get('file') is None else str(data['file']),
        max_size=str(data.get('max_size', '10MB')),
        backup_count=_as_int(data.get('backup_count', 5), "logging.backup_count"),
    )


def config_from_dict(raw: Dict[str, Any]) -> ExperimentConfig:
    """Validate a decoded document and fill in defaults."""
    data = _normalize_keys(raw, TOP_LEVEL_KEYS, "")
    if 'problem' not in data:
        raise ConfigError("problem: required")
    problem = _parse_problem(data['problem'])
    family = get_family(problem.family)

    stop_rule = _as_choice(data.get('stop_rule', family.stop_rule), STOP_RULES, "stop_rule")
    tol = _as_float(data.get('tol', family.tol), "tol")
    if not tol > 0:
        raise ConfigError(f"tol: must be positive, got {tol}")
    max_iter = _as_int(data.get('max_iter', 100_000), "max_iter")
    if max_iter < 1:
        raise ConfigError("max_iter: must be a positive integer")
    mode = _as_choice(data.get('mode', 'checked'), RUN_MODES, "mode")

    raw_methods = data.get('methods')
    if not raw_methods:
        raise ConfigError("methods: at least one method is required")
    if not isinstance(raw_methods, list):
        raw_methods = [raw_methods]
    common = {'stop_rule': stop_rule, 'tol': tol, 'max_iter': max_iter, 'mode': mode}
    methods = [_parse_method(entry, i, common) for i, entry in enumerate(raw_methods)]

    labels = [m.display_name for m in methods]
    duplicates = sorted({label for label in labels if labels.count(label) > 1})
    if duplicates:
        raise ConfigError(f"methods: duplicate entry '{duplicates[0]}' (set a distinct label)")

    repetitions = _as_int(data.get('repetitions', 1), "repetitions")
    if repetitions < 1:
        raise ConfigError("repetitions: must be at least 1")
    workers = data.get('workers')
    if workers is not None:
        workers = _as_int(workers, "workers")
        if workers < 1:
            raise ConfigError("workers: must be at least 1")

    return ExperimentConfig(
        problem=problem,
        methods=methods,
        stop_rule=stop_rule,
        tol=tol,
        max_iter=max_iter,
        repetitions=repetitions,
        output_dir=str(data.get('output_dir', 'results')),
        mode=mode,
        workers=workers,
        timings=_as_bool(data.get('timings', True), "timings"),
        logging=_parse_logging(data.get('logging')),
    )


def parse_config(text: str) -> ExperimentConfig:
    """Parse a JSON or YAML experiment document."""
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as e:
        raise ConfigError(f"config is not valid JSON/YAML: {e}") from None
    if raw is None:
        raise ConfigError("config is empty")
    return config_from_dict(raw)


def _method_to_dict(method: MethodConfig) -> Dict[str, Any]:
    solver = method.solver
    schedule = solver.alpha_schedule
    entry: Dict[str, Any] = {'name': method.name}
    if method.label:
        entry['label'] = method.label
    entry.update({
        'gamma': solver.gamma,
        'sigma_ls': solver.sigma_ls,
        'alpha_schedule': {
            'kind': schedule.kind,
            'value': schedule.value,
            'start': schedule.start,
            'ramp_iters': schedule.ramp_iters,
        },
        'lam': solver.lam,
        'delta': solver.delta,
        'max_ls_exponent': solver.max_ls_exponent,
    })
    return entry


def config_to_dict(cfg: ExperimentConfig) -> Dict[str, Any]:
    return {
        'problem': {
            'family': cfg.problem.family,
            'params': dict(cfg.problem.params),
            'seeds': list(cfg.problem.seeds),
        },
        'methods': [_method_to_dict(m) for m in cfg.methods],
        'stop_rule': cfg.stop_rule,
        'tol': cfg.tol,
        'max_iter': cfg.max_iter,
        'repetitions': cfg.repetitions,
        'output_dir': cfg.output_dir,
        'mode': cfg.mode,
        'workers': cfg.workers,
        'timings': cfg.timings,
        'logging': {
            'level': cfg.logging.level,
            'file': cfg.logging.file,
            'max_size': cfg.logging.max_size,
            'backup_count': cfg.logging.backup_count,
        },
    }


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical JSON rendering; ``parse_config(serialize_config(cfg)) == cfg``."""
    return json.dumps(config_to_dict(cfg), indent=2)


def resolve_config_path(config_path: Optional[str] = None) -> Path:
    """Resolve the experiment file using the search order in the module docstring.

    Accepts a file path or a directory. If a directory is provided, appends
    "experiment.yml".
    """
    tried: List[Path] = []

    def normalize(p: Path) -> Path:
        if p.is_dir():
            return p / DEFAULT_CONFIG_NAME
        return p

    candidates: List[Path] = []
    if config_path:
        candidates.append(normalize(Path(config_path).expanduser()))
    env_path = os.getenv("VIBENCH_CONFIG")
    if env_path:
        candidates.append(normalize(Path(env_path).expanduser()))
    candidates.extend([
        Path.cwd() / DEFAULT_CONFIG_NAME,
        Path(__file__).resolve().parent.parent / DEFAULT_CONFIG_NAME,
        Path.home() / ".config" / "vibench" / DEFAULT_CONFIG_NAME,
    ])

    for p in candidates:
        if p.exists():
            return p
        tried.append(p)

    tried_str = "\n - ".join(str(p) for p in tried)
    raise ConfigError(
        "config: experiment file not found. Tried the following locations:\n"
        f" - {tried_str}\n"
        "You can set an explicit path with --config or the VIBENCH_CONFIG env var."
    )


def load_config(config_path: Optional[str] = None) -> ExperimentConfig:
    """Resolve, read and parse an experiment file."""
    path = resolve_config_path(config_path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"config: cannot read {path}: {e}") from None
    return parse_config(text)
