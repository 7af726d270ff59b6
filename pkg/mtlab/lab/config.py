"""Experiment configuration files.

A configuration is a JSON object::

    {"experiment": "cmi-decay", "name": "tfim-decay",
     "model": {"preset": "tfim", "params": {"g": 1.0}, "seed": 0},
     "geometry": {"n": 8, "boundary": "open"},
     "betas": [1.0],
     "sweep": {"widths": [1, 2, 3]},
     "tolerances": {"solver": 1e-8, "ode": 1e-8}}

Errors point at the offending line as ``<file>:<line>: message``.
"""

from __future__ import annotations

import bisect
import hashlib
import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Mapping

from mtlab.conf import setting
from mtlab.exceptions import ConfigError, DomainError
from mtlab.hilbert.geometry import BOUNDARIES, ChainGeometry, SiteSet, check_dimension
from mtlab.thermal.hamiltonians import PRESETS, Hamiltonian, build_preset


KEYS = ('experiment', 'name', 'model', 'geometry', 'betas', 'sweep', 'tolerances')
MODEL_KEYS = ('preset', 'params', 'seed')
GEOMETRY_KEYS = ('n', 'dims', 'boundary')
TOLERANCE_KEYS = ('solver', 'ode')

KeyPath = tuple[str, ...]


def _locate(text: str, data: Any) -> dict[KeyPath, int]:
    """Line number of every object key, found by scanning forward from its parent."""
    starts = [0] + [m.end() for m in re.finditer('\n', text)]
    out: dict[KeyPath, int] = {}

    def walk(node: Any, path: KeyPath, offset: int) -> None:
        if not isinstance(node, dict):
            return
        for key, value in node.items():
            m = re.compile(r'"%s"\s*:' % re.escape(json.dumps(key)[1:-1])).search(text, offset)
            if m is None:
                continue
            out[path + (key,)] = bisect.bisect_right(starts, m.start())
            walk(value, path + (key,), m.end())

    walk(data, (), 0)
    return out


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    experiment: str
    name: str
    preset: str
    geometry: ChainGeometry
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0
    betas: tuple[float, ...] = (1.0,)
    sweep: Mapping[str, Any] = field(default_factory=dict)
    solver_tol: float = 1e-8
    ode_tol: float = 1e-8
    source: str = '<config>'
    lines: Mapping[KeyPath, int] = field(default_factory=dict, repr=False)

    def error(self, message: str, *path: str) -> ConfigError:
        """A ConfigError pointing at ``path`` in the source file when it is known."""
        line = None
        for i in range(len(path), 0, -1):
            line = self.lines.get(tuple(path[:i]))
            if line is not None:
                break
        if line is None:
            return ConfigError(f"{self.source}: {message}")
        return ConfigError(f"{self.source}:{line}: {message}")

    def to_json(self) -> dict:
        return {
            'experiment': self.experiment,
            'name': self.name,
            'model': {'preset': self.preset, 'params': dict(self.params), 'seed': self.seed},
            'geometry': self.geometry.to_json(),
            'betas': [float(b) for b in self.betas],
            'sweep': dict(self.sweep),
            'tolerances': {'solver': self.solver_tol, 'ode': self.ode_tol},
        }

    @property
    def config_hash(self) -> str:
        """First 16 hex digits of the sha256 of the canonical JSON form."""
        canonical = json.dumps(self.to_json(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('ascii')).hexdigest()[:16]

    def with_seed(self, seed: int) -> ExperimentConfig:
        return replace(self, seed=int(seed))

    def hamiltonian(self, geometry: ChainGeometry | None = None, seed: int | None = None) -> Hamiltonian:
        geometry = self.geometry if geometry is None else geometry
        try:
            return build_preset(self.preset, geometry, dict(self.params), self.seed if seed is None else seed)
        except DomainError as e:
            raise self.error(str(e), 'model') from None

    def sweep_list(self, key: str, default: list, kind: Callable = int) -> list:
        """Values of a sweep axis, converted with ``kind``."""
        values = self.sweep.get(key, default)
        if not isinstance(values, list) or not values:
            raise self.error(f"sweep.{key} must be a non-empty list", 'sweep', key)
        try:
            return [kind(v) for v in values]
        except (TypeError, ValueError):
            raise self.error(f"sweep.{key} has a value that is not {kind.__name__}", 'sweep', key) from None

    def sweep_value(self, key: str, default: Any, kind: Callable = int) -> Any:
        value = self.sweep.get(key, default)
        try:
            return kind(value)
        except (TypeError, ValueError):
            raise self.error(f"sweep.{key} must be {kind.__name__}", 'sweep', key) from None

    def sweep_sites(self, key: str, default: list[int]) -> SiteSet:
        """A site region given as a list of site indices."""
        sites = self.sweep_list(key, default)
        if any(s < 0 or s >= self.geometry.n for s in sites):
            raise self.error(f"sweep.{key} lists sites outside 0..{self.geometry.n - 1}", 'sweep', key)
        return self.geometry.sites(sites)


def _expect(cond: bool, fail: Callable[[str, tuple[str, ...]], ConfigError], message: str, *path: str) -> None:
    if not cond:
        raise fail(message, path)


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool) and math.isfinite(value)


def parse_config(data: Any, source: str = '<config>', lines: Mapping[KeyPath, int] | None = None) -> ExperimentConfig:
    """Validate decoded JSON and build an ExperimentConfig."""
    from mtlab.lab.experiments import EXPERIMENTS

    lines = dict(lines or {})
    stub = ExperimentConfig('', '', '', ChainGeometry.qubits(1), source=source, lines=lines)

    def fail(message: str, path: tuple[str, ...]) -> ConfigError:
        return stub.error(message, *path)

    _expect(isinstance(data, dict), fail, "a configuration must be a JSON object")
    for key in data:
        _expect(key in KEYS, fail, f"unknown key {key!r}; expected one of {', '.join(KEYS)}", key)
    for key in ('experiment', 'model', 'geometry'):
        _expect(key in data, fail, f"missing required key {key!r}")

    experiment = data['experiment']
    _expect(
        isinstance(experiment, str) and experiment in EXPERIMENTS, fail,
        f"unknown experiment {experiment!r}; choose one of {', '.join(EXPERIMENTS)}",
        'experiment',
    )
    name = data.get('name', experiment)
    _expect(isinstance(name, str) and bool(re.fullmatch(r'[\w.-]+', name)), fail,
            "name may only contain letters, digits, '.', '_' and '-'", 'name')

    model = data['model']
    _expect(isinstance(model, dict), fail, "model must be an object", 'model')
    for key in model:
        _expect(key in MODEL_KEYS, fail, f"unknown model key {key!r}", 'model', key)
    preset = model.get('preset')
    _expect(isinstance(preset, str) and preset in PRESETS, fail,
            f"unknown preset {preset!r}; choose one of {', '.join(PRESETS)}", 'model', 'preset')
    params = model.get('params', {})
    _expect(isinstance(params, dict), fail, "model.params must be an object", 'model', 'params')
    seed = model.get('seed', 0)
    _expect(isinstance(seed, int) and not isinstance(seed, bool) and seed >= 0, fail,
            "model.seed must be a non-negative integer", 'model', 'seed')

    geometry = data['geometry']
    _expect(isinstance(geometry, dict), fail, "geometry must be an object", 'geometry')
    for key in geometry:
        _expect(key in GEOMETRY_KEYS, fail, f"unknown geometry key {key!r}", 'geometry', key)
    n = geometry.get('n')
    _expect(isinstance(n, int) and not isinstance(n, bool) and n >= 1, fail,
            "geometry.n must be a positive integer", 'geometry', 'n')
    _expect(geometry.get('boundary', 'open') in BOUNDARIES, fail,
            f"geometry.boundary must be one of {', '.join(BOUNDARIES)}", 'geometry', 'boundary')
    try:
        chain = ChainGeometry.from_json(geometry)
    except (DomainError, TypeError, ValueError) as e:
        raise fail(f"bad geometry: {e}", ('geometry',)) from None
    _expect(chain.n == n, fail, "geometry.dims must list one dimension per site", 'geometry', 'dims')

    betas = data.get('betas', [1.0])
    _expect(isinstance(betas, list) and bool(betas), fail, "betas must be a non-empty list", 'betas')
    for b in betas:
        _expect(_is_number(b) and b >= 0, fail, f"inverse temperature {b!r} must be finite and >= 0", 'betas')

    sweep = data.get('sweep', {})
    _expect(isinstance(sweep, dict), fail, "sweep must be an object", 'sweep')

    tolerances = data.get('tolerances', {})
    _expect(isinstance(tolerances, dict), fail, "tolerances must be an object", 'tolerances')
    for key, value in tolerances.items():
        _expect(key in TOLERANCE_KEYS, fail, f"unknown tolerance {key!r}", 'tolerances', key)
        _expect(_is_number(value) and value > 0, fail, f"tolerance {key} must be positive", 'tolerances', key)

    return ExperimentConfig(
        experiment=experiment,
        name=name,
        preset=preset,
        geometry=chain,
        params=params,
        seed=seed,
        betas=tuple(float(b) for b in betas),
        sweep=sweep,
        solver_tol=float(tolerances.get('solver', setting('MTLAB_SOLVER_TOL'))),
        ode_tol=float(tolerances.get('ode', setting('MTLAB_ODE_TOL'))),
        source=source,
        lines=lines,
    )


def load_config(path: str | Path) -> ExperimentConfig:
    """Read, validate and dimension-check a configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError(f"{path}: cannot read configuration: {e.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}:{e.lineno}: invalid JSON: {e.msg}") from None
    config = parse_config(data, str(path), _locate(text, data))
    check_dimension(config.geometry.total_dim)
    return config
