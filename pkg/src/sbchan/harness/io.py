"""
CSV persistence of Monte Carlo results and the plain-text experiment config.

Numbers are written with 9 significant digits so that repeated runs produce
byte-identical files. Wall-clock times are only written when explicitly
requested (``record_wall_time``); otherwise the column is left empty, since
timings can never be reproducible.
"""

import dataclasses
import os
from pathlib import Path
from typing import Iterable, List, Optional

from ..channel import ChannelParams
from .experiment import Aggregate, ExperimentConfig, TrialResult

__all__ = [
    "RAW_HEADER",
    "AGGREGATE_HEADER",
    "ConfigError",
    "aggregate_path",
    "format_number",
    "write_csv",
    "read_raw_csv",
    "parse_config",
    "load_config",
]

RAW_HEADER = "scenario,point,estimator,trial,nmse,converged,iterations,wall_time_s"
AGGREGATE_HEADER = "scenario,point,estimator,mean_nmse,mean_nmse_db,trials,failures"


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


def format_number(x) -> str:
    return format(float(x), ".9g")


def aggregate_path(path) -> Path:
    """Sidecar file for aggregates: ``results.csv`` -> ``results_aggregate.csv``."""
    p = Path(path)
    return p.with_name(p.stem + "_aggregate" + (p.suffix or ".csv"))


def _raw_line(r: TrialResult, with_time: bool) -> str:
    return ",".join(
        [
            r.scenario,
            format_number(r.point),
            r.estimator,
            str(int(r.trial)),
            format_number(r.nmse),
            "true" if r.converged else "false",
            str(int(r.iterations)),
            format_number(r.wall_time) if with_time else "",
        ]
    )


def _aggregate_line(a: Aggregate) -> str:
    return ",".join(
        [
            a.scenario,
            format_number(a.point),
            a.estimator,
            format_number(a.mean_nmse),
            format_number(a.mean_nmse_db),
            str(int(a.trials)),
            str(int(a.failures)),
        ]
    )


def _write_text(path: Path, lines: List[str]) -> None:
    tmp = path.with_name(path.name + ".tmp")
    try:
        with open(tmp, "w", newline="\n", encoding="ascii") as fh:
            fh.write("".join(line + "\n" for line in lines))
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_csv(
    results: Iterable[TrialResult],
    aggregates: Iterable[Aggregate],
    path,
    record_wall_time: bool = False,
) -> Path:
    """
    Write the raw rows to ``path`` and the aggregates to its
    ``_aggregate`` sidecar. Returns the sidecar path.

    Raises
    ------
    OSError
        With the offending path in the message.
    """
    path = Path(path)
    raw = [RAW_HEADER] + [_raw_line(r, record_wall_time) for r in results]
    agg = [AGGREGATE_HEADER] + [_aggregate_line(a) for a in aggregates]
    side = aggregate_path(path)
    _write_text(path, raw)
    _write_text(side, agg)
    return side


def read_raw_csv(path) -> List[TrialResult]:
    """Parse a raw results file written by :func:`write_csv`."""
    path = Path(path)
    try:
        lines = path.read_text(encoding="ascii").splitlines()
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror or exc}") from exc
    if not lines or lines[0] != RAW_HEADER:
        raise ValueError(f"{path}: not a raw results file")
    out = []
    for line in lines[1:]:
        s, point, est, trial, nmse, conv, iters, wall = line.split(",")
        out.append(
            TrialResult(s, float(point), est, int(trial), float(nmse), conv == "true", int(iters), float(wall or "nan"))
        )
    return out


# --- config ---------------------------------------------------------------


def _float_list(v):
    return tuple(float(x) for x in v.split(",") if x.strip())


def _int_list(v):
    return tuple(int(x) for x in v.split(",") if x.strip())


def _str_list(v):
    return tuple(x.strip() for x in v.split(",") if x.strip())


def _optional_float(v):
    return None if v.strip().lower() in ("", "none") else float(v)


def _bool(v):
    t = v.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ValueError(f"expected true/false, got {v!r}")


_FIELD_PARSERS = {
    "scenario": str.strip,
    "snr_grid_db": _float_list,
    "pilot_grid": _int_list,
    "trials": int,
    "master_seed": int,
    "estimators": _str_list,
    "N": int,
    "L": int,
    "kappa": float,
    "output_path": str.strip,
    "fixed_snr_db": float,
    "fixed_pilots": int,
    "rwf_design_snr_db": _optional_float,
    "max_iters": int,
    "tol": float,
    "workers": int,
    "record_wall_time": _bool,
}

_CHANNEL_FIELDS = ("mean_paths", "tau_max", "decay", "sampling_time")


def parse_config(text: str, base: Optional[ExperimentConfig] = None, source: str = "<config>") -> ExperimentConfig:
    """
    Parse ``key = value`` lines (``#`` starts a comment) into a config.

    Keys are :class:`ExperimentConfig` field names; lists are comma
    separated. Channel statistics use dotted keys such as
    ``channel.mean_paths``. Unset keys keep the values of ``base`` (the
    defaults when omitted).
    """
    values = {}
    channel = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            if key.startswith("channel."):
                name = key[len("channel.") :]
                if name not in _CHANNEL_FIELDS:
                    raise ConfigError(f"unknown channel key {key!r}")
                channel[name] = float(value)
            elif key in _FIELD_PARSERS:
                values[key] = _FIELD_PARSERS[key](value)
            else:
                raise ConfigError(f"unknown key {key!r}")
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    base = base or ExperimentConfig()
    if channel:
        ch = base.channel
        fields = {f: getattr(ch, f) for f in _CHANNEL_FIELDS}
        fields.update(channel)
        try:
            values["channel"] = ChannelParams(**fields)
        except ValueError as exc:
            raise ConfigError(f"{source}: invalid channel parameters: {exc}") from None
    try:
        return dataclasses.replace(base, **values)
    except ValueError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path, base: Optional[ExperimentConfig] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc.strerror or exc}") from exc
    return parse_config(text, base, source=str(path))
