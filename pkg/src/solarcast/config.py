"""Run configuration: a schema-checked TOML (or JSON) file plus flag overrides.

Every key is declared in ``SCHEMA`` with its type, default and admissible
range. Unknown sections or keys are rejected. A manifest written by a
previous run is itself a valid configuration file, which is how runs are
replayed.
"""

from __future__ import annotations

import copy
import json
import platform
from datetime import date
from pathlib import Path

import numpy as np

from .clearsky import AtmosParams
from .errors import ConfigurationError, MissingInputError
from .features import FeatureConfig
from .ingest import SiteMeta
from .training import TrainConfig

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

__version__ = "0.1.0"

_INT_LIST = "int_list"


def _positive(v):
    return v > 0


def _non_negative(v):
    return v >= 0


def _unit_interval(v):
    return 0.0 <= v <= 1.0


def _iso_date(v):
    try:
        date.fromisoformat(v)
    except ValueError:
        return False
    return True


def _mode(v):
    try:
        TrainConfig.parse_mode(v)
    except ConfigurationError:
        return False
    return True


# section -> key -> (type, default, check or None)
SCHEMA = {
    "site": {
        "id": (str, "BON", lambda v: bool(v)),
        "latitude": (float, 40.05, lambda v: -90 <= v <= 90),
        "longitude": (float, -88.37, lambda v: -180 <= v <= 180),
        "elevation": (float, 213.0, None),
    },
    "paths": {
        name: (str, "", None) for name in (
            "input_dir", "obs", "clearsky", "dataset", "checkpoint", "train_report",
            "eval_table", "eval_csv", "predictions", "report_dir")
    },
    "ingest": {
        "years": (_INT_LIST, [2009, 2010, 2011], lambda v: len(v) > 0),
        "include_qc": (bool, False, None),
    },
    "clearsky": {
        "start": (str, "", None),
        "end": (str, "", None),
        "step_minutes": (int, 1, _positive),
    },
    "atmos": {
        "ozone": (float, 0.3, _positive),
        "precipitable_water": (float, 1.5, _positive),
        "aod_500nm": (float, 0.1, _non_negative),
        "aod_380nm": (float, 0.05, _non_negative),
        "ground_albedo": (float, 0.2, _unit_interval),
        "pressure": (float, 1013.0, _positive),
    },
    "features": {
        "ghi_floor": (float, 10.0, _positive),
        "kt_max": (float, 2.0, lambda v: 0 < v <= 10),
        "gap_max": (int, 10, _non_negative),
        "seq_len": (int, 60, _positive),
        "stride": (int, 10, _positive),
        "std_floor": (float, 1e-8, _positive),
        "horizons": (_INT_LIST, [1, 2, 3, 4], lambda v: len(v) > 0 and min(v) >= 1),
        "train_years": (_INT_LIST, [2010, 2011], lambda v: len(v) > 0),
        "test_years": (_INT_LIST, [2009], None),
    },
    "train": {
        "mode": (str, "multi:1,2,3,4", _mode),
        "epochs": (int, 1000, _non_negative),
        "batch_size": (int, 100, _positive),
        "learning_rate": (float, 1e-3, _positive),
        "seed": (int, 42, None),
        "hidden_dim": (int, 15, _positive),
        "checkpoint_every": (int, 0, _non_negative),
    },
    "synthetic": {
        "enabled": (bool, False, None),
        "seed": (int, 0, None),
        "train_start": (str, "2010-05-01", _iso_date),
        "train_days": (int, 90, _positive),
        "test_start": (str, "2009-05-01", _iso_date),
        "test_days": (int, 30, _non_negative),
    },
    "evaluate": {
        "baseline": (bool, True, None),
        "unit": (str, "kt", lambda v: v in ("norm", "kt", "wm2")),
    },
}


def _coerce(section, key, value):
    kind, _, check = SCHEMA[section][key]
    where = f"{section}.{key}"
    try:
        if kind is _INT_LIST:
            if isinstance(value, str):
                value = [v for v in value.replace(" ", "").split(",") if v]
            if not isinstance(value, (list, tuple)):
                raise TypeError
            value = [int(v) for v in value]
            if any(isinstance(v, bool) for v in value):
                raise TypeError
        elif kind is bool:
            if isinstance(value, str):
                if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                    raise TypeError
                value = value.lower() in ("true", "1", "yes")
            elif not isinstance(value, bool):
                raise TypeError
        elif kind is int:
            if isinstance(value, bool) or (isinstance(value, float) and not value.is_integer()):
                raise TypeError
            value = int(value)
        elif kind is float:
            if isinstance(value, bool):
                raise TypeError
            value = float(value)
        else:
            value = str(value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{where}: cannot interpret {value!r} as {getattr(kind, '__name__', kind)}") from None
    if check is not None and not check(value):
        raise ConfigurationError(f"{where}: value {value!r} out of range")
    return value


def defaults():
    return {s: {k: copy.deepcopy(spec[1]) for k, spec in keys.items()}
            for s, keys in SCHEMA.items()}


class RunConfig:
    """Validated nested configuration with typed accessors."""

    def __init__(self, data=None):
        self.data = defaults()
        if data:
            self.update(data)

    def update(self, data):
        for section, values in data.items():
            if section not in SCHEMA:
                raise ConfigurationError(f"unknown config section {section!r}")
            if not isinstance(values, dict):
                raise ConfigurationError(f"section {section!r} must be a table")
            for key, value in values.items():
                if key not in SCHEMA[section]:
                    raise ConfigurationError(f"unknown config key {section}.{key}")
                self.data[section][key] = _coerce(section, key, value)
        return self

    def set(self, section, key, value):
        if value is not None:
            self.update({section: {key: value}})

    def __getitem__(self, item):
        return self.data[item]

    def to_dict(self):
        return copy.deepcopy(self.data)

    # typed views
    def site(self):
        s = self.data["site"]
        return SiteMeta(s["id"], s["latitude"], s["longitude"], s["elevation"])

    def atmos(self):
        return AtmosParams(**self.data["atmos"])

    def feature_config(self):
        f = self.data["features"]
        return FeatureConfig(ghi_floor=f["ghi_floor"], kt_max=f["kt_max"], gap_max=f["gap_max"],
                             seq_len=f["seq_len"], std_floor=f["std_floor"],
                             horizons=tuple(f["horizons"]), stride=f["stride"])

    def train_config(self):
        t = self.data["train"]
        return TrainConfig.parse_mode(
            t["mode"], epochs=t["epochs"], batch_size=t["batch_size"],
            learning_rate=t["learning_rate"], seed=t["seed"], hidden_dim=t["hidden_dim"],
            checkpoint_every=t["checkpoint_every"])


def load_config(path=None):
    """Read a TOML or JSON config (or manifest). ``None`` gives defaults."""
    if path is None:
        return RunConfig()
    path = Path(path)
    if not path.exists():
        raise MissingInputError(f"config file {path} not found")
    text = path.read_text()
    try:
        if path.suffix == ".json":
            data = json.loads(text)
        else:
            data = tomllib.loads(text)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    if "manifest" in data:
        data = data.get("config", {})
    return RunConfig(data)


def versions():
    import scipy
    import sklearn
    return {"solarcast": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "scikit-learn": sklearn.__version__}


def write_manifest(path, subcommand, config: RunConfig, inputs=(), outputs=()):
    """Write the merged config snapshot plus provenance as JSON."""
    doc = {
        "manifest": {
            "subcommand": subcommand,
            "seed": config["train"]["seed"],
            "synthetic_seed": config["synthetic"]["seed"],
            "versions": versions(),
            "inputs": [str(p) for p in inputs],
            "outputs": [str(p) for p in outputs],
        },
        "config": config.to_dict(),
    }
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return doc
