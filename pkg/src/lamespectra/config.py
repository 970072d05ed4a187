"""
experiment configuration: pydantic models, file loading and the resolved echo
"""

import json
import logging
import os
from typing import List, Literal, Optional

import tomli_w
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

# tomllib is included in standard library in Python 3.11+
try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import utils
from .errors import ConfigError, OperatorError
from .forest import ForestParams
from .lame_operator import LameOperator
from .poly import Poly

TASKS = ('solve', 'spectrum-sweep', 'measure-check', 'forest', 'figures', 'verify-all')
SPECTRAL_TASKS = ('solve', 'spectrum-sweep', 'measure-check', 'forest', 'figures')
FIGURES = ('fig1', 'fig2', 'fig4', 'fig5', 'fig6', 'forest')
THREADS_ENV = 'LAME_SPECTRA_THREADS'


class PolySpec(BaseModel):
    model_config = ConfigDict(extra='forbid')

    re: List[float]
    im: Optional[List[float]] = None

    @model_validator(mode='after')
    def matching_parts(self):
        if self.im is not None and len(self.im) != len(self.re):
            raise ValueError(
                f'{len(self.re)} real parts but {len(self.im)} imaginary parts'
            )
        return self

    def to_poly(self):
        return Poly.from_json(self.model_dump(exclude_none=True))


class OperatorSpec(BaseModel):
    model_config = ConfigDict(extra='forbid')

    k: int = Field(ge=1)
    coeffs: Optional[List[PolySpec]] = None
    composition_of: Optional[PolySpec] = None
    r: Optional[int] = None

    @model_validator(mode='after')
    def one_form(self):
        if (self.coeffs is None) == (self.composition_of is None):
            raise ValueError('give exactly one of "coeffs" and "composition_of"')
        return self

    def build(self):
        return LameOperator.from_json(self.model_dump(exclude_none=True))


class ProbeSettings(BaseModel):
    model_config = ConfigDict(extra='forbid')

    count: int = Field(16, ge=1)
    radius: Optional[float] = Field(None, gt=0)
    margin: float = Field(1.5, gt=0)
    standoff: float = Field(0.5, ge=0)
    # max probe error accepted at the largest degree of an r = 0 operator
    tol: float = Field(1e-2, gt=0)


class ForestSettings(BaseModel):
    model_config = ConfigDict(extra='forbid')

    n: Optional[int] = Field(None, ge=1)
    break_factor: float = Field(3.0, gt=1)
    simplify: float = Field(0.01, ge=0)
    snap: float = Field(0.05, gt=0)
    tol: float = Field(0.05, gt=0)
    offset: float = Field(1e-3, gt=0)
    junction_radius: float = Field(0.1, ge=0)
    root_disk: float = Field(1e-4, gt=0)
    density_samples: int = Field(48, ge=4)

    def params(self):
        return ForestParams(
            break_factor=self.break_factor,
            simplify=self.simplify,
            snap=self.snap,
            tol=self.tol,
            offset=self.offset,
            root_disk=self.root_disk,
            density_samples=self.density_samples,
            junction_radius=self.junction_radius,
        )


class FigureSettings(BaseModel):
    model_config = ConfigDict(extra='forbid')

    figures: List[Literal['fig1', 'fig2', 'fig4', 'fig5', 'fig6', 'forest']] = list(FIGURES)
    # fig6 compares S_n with S_{n+1}
    interlacing_n: int = Field(40, ge=1)
    # fig5 compares Q d^l with Q d^(l-1); defaults to the operator order
    shift_order: Optional[int] = Field(None, ge=2)
    histogram_bins: int = Field(24, ge=2)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    operator: OperatorSpec
    task: Literal['solve', 'spectrum-sweep', 'measure-check', 'forest', 'figures', 'verify-all'] = 'solve'
    n: Optional[int] = Field(None, ge=0)
    n_list: Optional[List[int]] = None
    target: Optional[PolySpec] = None
    eps: float = Field(0.15, ge=0)
    probes: ProbeSettings = ProbeSettings()
    forest: ForestSettings = ForestSettings()
    figure: FigureSettings = FigureSettings()
    output_dir: str = 'lame-spectra-out'
    seed: int = Field(0, ge=0, lt=2**64)
    threads: Optional[int] = Field(None, ge=1)

    @field_validator('n_list')
    @classmethod
    def sorted_degrees(cls, value):
        if value is not None:
            if not value:
                raise ValueError('n_list is empty')
            if any(n < 0 for n in value):
                raise ValueError('degrees must be >= 0')
            value = sorted(set(value))
        return value

    @model_validator(mode='after')
    def task_fields(self):
        if self.task == 'solve' and self.n is None:
            raise ValueError('task "solve" needs n')
        if self.task == 'spectrum-sweep' and self.n_list is None:
            raise ValueError('task "spectrum-sweep" needs n_list')
        if self.task == 'measure-check' and self.n is None and self.n_list is None:
            raise ValueError('task "measure-check" needs n or n_list')
        if self.task == 'forest' and self.n is None and self.forest.n is None:
            raise ValueError('task "forest" needs n or forest.n')
        if self.task in SPECTRAL_TASKS:
            k = self.operator.k
            for n in self.degrees():
                if n < k:
                    raise ValueError(f'degree {n} is below the operator order k = {k}')
        return self

    def degrees(self):
        """every configured degree, ascending"""
        values = set(self.n_list or [])
        if self.n is not None:
            values.add(self.n)
        if self.forest.n is not None:
            values.add(self.forest.n)
        return sorted(values)

    def build_operator(self):
        return self.operator.build()

    def target_poly(self):
        return None if self.target is None else self.target.to_poly()


def _field_path(error):
    first = error.errors()[0]
    return '.'.join(str(part) for part in first['loc'])


def read_config_file(configfile):
    """raw mapping from a .toml file, or from JSON for anything else"""
    if not os.path.exists(configfile):
        raise FileNotFoundError(f'config file {configfile} does not exist')
    if configfile.endswith('.toml'):
        with open(configfile, 'rb') as f:
            return tomllib.load(f)
    with open(configfile) as f:
        return json.load(f)


def validate_config(data, task=None, output_dir=None, seed=None):
    """
    ExperimentConfig from a raw mapping; command-line values override the
    file

    raises:
    -------
    ConfigError carrying the dotted path of the first invalid field
    """
    data = dict(data)
    for key, value in (('task', task), ('output_dir', output_dir), ('seed', seed)):
        if value is not None:
            data[key] = value
    try:
        config = ExperimentConfig.model_validate(data)
    except ValidationError as e:
        path = _field_path(e)
        message = e.errors()[0]['msg']
        raise ConfigError(f'invalid config at {path or "<root>"}: {message}', field_path=path) from e
    try:
        config.build_operator()
    except (OperatorError, ValueError) as e:
        raise ConfigError(f'invalid config at operator: {e}', field_path='operator') from e
    return config


def load_config(configfile, task=None, output_dir=None, seed=None):
    logging.info(f'Using experiment config from {configfile}')
    try:
        data = read_config_file(configfile)
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
        raise ConfigError(f'cannot parse {configfile}: {e}') from e
    return validate_config(data, task=task, output_dir=output_dir, seed=seed)


def resolve_threads(config, environ=None):
    """LAME_SPECTRA_THREADS, then the config value, then min(4, cpu count)"""
    environ = os.environ if environ is None else environ
    value = environ.get(THREADS_ENV)
    if value:
        try:
            return utils.cpu_threads(value)
        except ValueError as e:
            raise ConfigError(f'{THREADS_ENV}: {e}', field_path=THREADS_ENV) from e
    if config.threads is not None:
        return config.threads
    return utils.cpu_threads()


def resolved_toml(config):
    return tomli_w.dumps(config.model_dump(exclude_none=True))
