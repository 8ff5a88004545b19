"""Run configuration stored as INI-style sections of ``key = value`` lines."""

from __future__ import annotations

import configparser
import io
from dataclasses import asdict, dataclass, fields

from . import InvalidArgumentError
from .nedelec import BasisOrder
from .neural import Activation, TrainConfig
from .system import MaterialParams

OUTPUT_ENV = "MAXWELL_DDM_NN_OUT"

# section -> keys, in serialization order
SECTIONS = {
    "mesh": ("n",),
    "basis": ("p_edge", "p_cell"),
    "material": ("mu", "eps", "wavelength"),
    "boundary": ("field",),
    "ddm": ("steps",),
    "train": ("activation", "hidden", "tol", "max_iter", "schedule", "seed"),
    "output": ("dir", "sample_grid"),
}


@dataclass(frozen=True)
class RunConfig:
    n: int = 32
    p_edge: int = 3
    p_cell: int = 3
    mu: float = 1.0
    eps: float = 1.49**2
    wavelength: float = 3.0
    field: str = "example"
    steps: int = 4
    activation: str = "sigmoid"
    hidden: int = 500
    tol: float = 3e-3
    max_iter: int = 60000
    schedule: tuple = ((1e-5, 50000), (1e-6, 10000))
    seed: int = 0
    dir: str = "out"
    sample_grid: int = 129

    @property
    def order(self) -> BasisOrder:
        return BasisOrder(self.p_edge, self.p_cell)

    @property
    def params(self) -> MaterialParams:
        return MaterialParams.from_wavelength(self.wavelength, mu=self.mu, eps=self.eps)

    def train_config(self, schedule=None) -> TrainConfig:
        return TrainConfig(tol=self.tol, max_iter=self.max_iter,
                           schedule=tuple(schedule or self.schedule), seed=self.seed)

    def replace(self, **kw) -> "RunConfig":
        return RunConfig(**{**asdict(self), **kw})


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _format_schedule(schedule) -> str:
    return ", ".join(f"{lr!r}:{int(b)}" for lr, b in schedule)


def parse_schedule(text: str) -> tuple:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            lr, budget = part.split(":")
            out.append((float(lr), int(budget)))
        except ValueError:
            raise InvalidArgumentError(f"bad schedule entry {part!r} (expected lr:iterations)") from None
    if not out:
        raise InvalidArgumentError("empty training schedule")
    return tuple(out)


def _convert(key: str, raw: str):
    kind = _TYPES[key]
    try:
        if key == "schedule":
            return parse_schedule(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise InvalidArgumentError(f"{key}: cannot parse {raw!r} as {kind}") from None
    return raw


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise InvalidArgumentError(f"malformed config: {exc}") from None
    values = {}
    for section in cp.sections():
        if section not in SECTIONS:
            raise InvalidArgumentError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            if key not in SECTIONS[section]:
                raise InvalidArgumentError(f"unknown key {key!r} in [{section}]")
            values[key] = _convert(key, raw.strip())
    cfg = RunConfig(**values)
    Activation(cfg.activation)
    return cfg


def serialize_config(cfg: RunConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    d = asdict(cfg)
    for section, keys in SECTIONS.items():
        cp[section] = {
            k: _format_schedule(d[k]) if k == "schedule" else repr(d[k]) if isinstance(d[k], float) else str(d[k])
            for k in keys
        }
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())
