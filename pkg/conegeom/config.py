import dataclasses
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import yaml

from conegeom.errors import ConfigError

_DEFAULTS_FILE = 'defaults.yaml'


def load_defaults() -> Dict[str, Any]:
    """Loads the YAML defaults shipped with the package."""
    config_file = os.path.join(os.path.dirname(os.path.abspath(__file__)), _DEFAULTS_FILE)
    with open(config_file, "r") as file:
        return yaml.safe_load(file)


@dataclasses.dataclass(frozen=True)
class QuadratureConfig:
    sphere_tol: float = 1e-10
    strict: bool = False
    levels: Dict[int, Tuple[int, int]] = dataclasses.field(
        default_factory=lambda: {2: (2, 4), 3: (2, 3), 4: (0, 1)})
    qmc_log2_points: int = 16
    mc_samples: int = 10_000_000
    mc_max_samples: int = 100_000_000
    mc_chunk: int = 1_000_000
    seed: int = 42
    large_p_threshold: float = 500.0
    section_nodes: int = 128
    cap_nodes: int = 64
    threads: int = 1

    def default_level(self, n: int) -> int:
        return self.levels.get(n, (0, 0))[0]

    def max_level(self, n: int) -> int:
        return self.levels.get(n, (0, 0))[1]

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


@dataclasses.dataclass(frozen=True)
class FitConfig:
    rtol: float = 0.05
    atol: float = 1e-8
    strict: bool = True

    def threshold(self, limit: float) -> float:
        return self.rtol * abs(limit) + self.atol


@dataclasses.dataclass
class ExperimentConfig:
    """Everything a CLI run needs; round-trips through JSON and YAML."""
    subcommand: str = 'all'
    bodies: List[Dict[str, Any]] = dataclasses.field(default_factory=list)
    routes: Optional[List[str]] = None
    p_grid: Optional[List[float]] = None
    delta_grid: Optional[List[float]] = None
    r_values: Optional[List[float]] = None
    n_values: Optional[List[int]] = None
    a_values: Optional[List[float]] = None
    caps: int = 8
    mc_samples: Optional[int] = None
    seed: int = 42
    tol: Optional[float] = None
    threads: int = 1
    out: Optional[str] = None
    quadrature: Dict[str, Any] = dataclasses.field(default_factory=dict)
    fit: Dict[str, Any] = dataclasses.field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)

    def dump(self, path: Union[str, Path]) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w') as f:
            if path.suffix in {'.yaml', '.yml'}:
                yaml.safe_dump(self.to_dict(), f, sort_keys=False)
            else:
                f.write(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ExperimentConfig':
        names = {field.name for field in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ConfigError(f"Unknown experiment config keys: {sorted(unknown)}")
        return cls(**data)


def _quadrature_from_dict(data: Dict[str, Any]) -> QuadratureConfig:
    data = dict(data)
    if 'levels' in data:
        data['levels'] = {int(n): tuple(v) for n, v in data['levels'].items()}
    for key in ('mc_samples', 'mc_max_samples', 'mc_chunk', 'seed', 'qmc_log2_points',
                'section_nodes', 'cap_nodes', 'threads'):
        if key in data:
            data[key] = int(float(data[key]))
    try:
        return QuadratureConfig(**data)
    except TypeError as e:
        raise ConfigError(f"Invalid quadrature config: {e}") from e


def default_config() -> QuadratureConfig:
    return _quadrature_from_dict(load_defaults()['quadrature'])


def default_fit_config() -> FitConfig:
    return FitConfig(**load_defaults()['fit'])


def default_grids() -> Dict[str, Any]:
    return load_defaults()['grids']


def load_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Reads a YAML or JSON file into a dict."""
    path = Path(path)
    with open(path) as f:
        if path.suffix in {'.yaml', '.yml'}:
            data = yaml.safe_load(f)
        else:
            data = json.load(f)
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must contain a mapping, got {type(data).__name__}")
    return data


def load_config(path: Union[str, Path]) -> Tuple[QuadratureConfig, FitConfig]:
    """Loads quadrature and fit settings from a user file, on top of the defaults.

    :param path: YAML or JSON file with optional `quadrature` and `fit` sections.
    :return: The merged quadrature and fit configs.
    """
    user = load_file(path)
    defaults = load_defaults()
    quadrature = {**defaults['quadrature'], **user.get('quadrature', {})}
    fit = {**defaults['fit'], **user.get('fit', {})}
    return _quadrature_from_dict(quadrature), FitConfig(**fit)


def experiment_settings(experiment: ExperimentConfig) -> Tuple[QuadratureConfig, FitConfig]:
    """Quadrature and fit settings of a run: defaults, then the experiment sections, then its flags."""
    defaults = load_defaults()
    flags = {'sphere_tol': experiment.tol, 'mc_samples': experiment.mc_samples,
             'seed': experiment.seed, 'threads': experiment.threads}
    quadrature = {**defaults['quadrature'], **experiment.quadrature,
                  **{k: v for k, v in flags.items() if v is not None}}
    try:
        fit = FitConfig(**{**defaults['fit'], **experiment.fit})
    except TypeError as e:
        raise ConfigError(f"Invalid fit config: {e}") from e
    return _quadrature_from_dict(quadrature), fit
