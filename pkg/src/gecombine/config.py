"""Declarative run configuration: an INI file overridden by CLI flags.

A config file looks like

    [combine]
    alpha = 0.4
    beta = 0.0
    beam_size = 16

    [train]
    gamma = 0.2
    mu = 5
    z = 2.0
    group_size = 4

    [run]
    scorer = ngram
    lm = model.lm.json
    workers = 1

Every key is optional; defaults mirror the package's standard operating
point. Flags always win over file values, and dump() emits a file that
loads back to an equivalent configuration.
"""

from __future__ import annotations

import configparser
import dataclasses
import io
from pathlib import Path

from gecombine.scoring import CombinerConfig
from gecombine.training import TrainConfig

__all__ = ["RunConfig", "dump_config", "load_config"]

_SCORERS = ("uniform", "ngram", "qe", "oracle", "external")


@dataclasses.dataclass
class RunConfig:
    combiner: CombinerConfig = dataclasses.field(default_factory=CombinerConfig)
    train: TrainConfig = dataclasses.field(default_factory=TrainConfig)
    scorer: str = "ngram"
    endpoint: str | None = None
    lm: str | None = None
    labeler: str | None = None
    edit_classifier: str | None = None
    seed: int = 0
    workers: int = 1

    def __post_init__(self) -> None:
        if self.scorer not in _SCORERS:
            raise ValueError(f"scorer must be one of {_SCORERS}, got {self.scorer!r}")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")


_COMBINE_KEYS = {"alpha": float, "beta": float, "beam_size": int, "prob_floor": float}
_TRAIN_KEYS = {
    "gamma": float,
    "mu": float,
    "sigma_scale": float,
    "z": float,
    "group_size": int,
    "learning_rate": float,
    "epochs": int,
    "seed": int,
}
_RUN_KEYS = {
    "scorer": str,
    "endpoint": str,
    "lm": str,
    "labeler": str,
    "edit_classifier": str,
    "seed": int,
    "workers": int,
}


def _section(parser: configparser.ConfigParser, name: str, schema: dict) -> dict:
    if not parser.has_section(name):
        return {}
    out = {}
    for key, value in parser.items(name):
        if key not in schema:
            raise ValueError(f"unknown key {key!r} in [{name}]")
        out[key] = schema[key](value)
    return out


def load_config(path: str | Path | None, overrides: dict | None = None) -> RunConfig:
    """Build a RunConfig from an optional INI file plus flag overrides.

    overrides maps flat keys (the same names as the INI keys) to values;
    None values mean "flag not given" and are ignored.
    """
    parser = configparser.ConfigParser()
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        parser.read_string(text, source=str(path))
        for section in parser.sections():
            if section not in ("combine", "train", "run"):
                raise ValueError(f"unknown config section [{section}]")
    combine_kw = _section(parser, "combine", _COMBINE_KEYS)
    train_kw = _section(parser, "train", _TRAIN_KEYS)
    run_kw = _section(parser, "run", _RUN_KEYS)

    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key in _COMBINE_KEYS:
            combine_kw[key] = _COMBINE_KEYS[key](value)
        elif key in _TRAIN_KEYS and key != "seed":
            train_kw[key] = _TRAIN_KEYS[key](value)
        elif key in _RUN_KEYS:
            run_kw[key] = _RUN_KEYS[key](value)
        else:
            raise ValueError(f"unknown config override {key!r}")

    # one seed rules them all: the run seed feeds training too
    if "seed" in run_kw:
        train_kw.setdefault("seed", run_kw["seed"])
    return RunConfig(
        combiner=CombinerConfig(**combine_kw),
        train=TrainConfig(**train_kw),
        **{k: v for k, v in run_kw.items()},
    )


def dump_config(config: RunConfig) -> str:
    """Serialize a RunConfig to INI text that load_config reproduces."""
    parser = configparser.ConfigParser()
    parser["combine"] = {
        "alpha": repr(config.combiner.alpha),
        "beta": repr(config.combiner.beta),
        "beam_size": str(config.combiner.beam_size),
        "prob_floor": repr(config.combiner.prob_floor),
    }
    parser["train"] = {
        "gamma": repr(config.train.gamma),
        "mu": repr(config.train.mu),
        "sigma_scale": repr(config.train.sigma_scale),
        "z": repr(config.train.z),
        "group_size": str(config.train.group_size),
        "learning_rate": repr(config.train.learning_rate),
        "epochs": str(config.train.epochs),
        "seed": str(config.train.seed),
    }
    run = {
        "scorer": config.scorer,
        "seed": str(config.seed),
        "workers": str(config.workers),
    }
    for key in ("endpoint", "lm", "labeler", "edit_classifier"):
        value = getattr(config, key)
        if value is not None:
            run[key] = value
    parser["run"] = run
    buf = io.StringIO()
    parser.write(buf)
    return buf.getvalue()
