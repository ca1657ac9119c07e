"""Experiment configuration, sweep runners and CSV output.

Configuration text is ``key=value`` pairs separated by whitespace or
newlines, with ``#`` starting a comment. Every key can also be given as a
command-line flag ``--key=value``; flags win over file values.
"""

from __future__ import annotations

import csv
import enum
import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping, Sequence

from . import analytic
from .errors import ConfigError, InvalidParameterError, NumericalFailure, OutputFileError
from .model import GaussianPrior, PrecisionBand, ProblemInstance
from .simulator import MonteCarloSetup, Scheme, monte_carlo, monte_carlo_fixed_k

__all__ = [
    "ExperimentKind",
    "ExperimentConfig",
    "Table",
    "COLUMNS",
    "parse_config",
    "format_config",
    "run_experiment",
    "emit_csv",
    "emit_metadata",
]


class ExperimentKind(str, enum.Enum):
    MSE_VS_TAU = "mse-vs-tau"
    MSE_VS_K = "mse-vs-k"
    EK_VS_TAU = "ek-vs-tau"
    DIAGNOSTICS = "diagnostics"

    @classmethod
    def parse(cls, text: str) -> ExperimentKind:
        norm = re.sub(r"[-_\s]", "", text).lower()
        for kind in cls:
            if kind.value.replace("-", "") == norm:
                return kind
        raise ValueError(f"unknown experiment {text!r}; expected one of "
                         + ", ".join(k.value for k in cls))


COLUMNS: dict[ExperimentKind, tuple[str, ...]] = {
    ExperimentKind.MSE_VS_TAU: ("tau2", "mse_unordered", "mse_ordered", "mse_full",
                                "se_unordered", "se_ordered", "se_full"),
    ExperimentKind.MSE_VS_K: ("k", "mse_ordered", "mse_unordered", "se_ordered", "se_unordered"),
    ExperimentKind.EK_VS_TAU: ("tau2", "ek_unordered_analytic", "ek_unordered_mc", "ek_ordered_mc",
                               "bound_lower", "bound_upper", "se_unordered_mc", "se_ordered_mc"),
    ExperimentKind.DIAGNOSTICS: ("tau2", "gamma", "k", "j", "branch", "s1_closed_form",
                                 "quadrature", "abs_diff", "rel_diff", "s1_alt_binomial",
                                 "alt_abs_diff"),
}

_DEFAULT_SWEEP = tuple(0.5 * i for i in range(1, 11))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: ExperimentKind = ExperimentKind.EK_VS_TAU
    N: int = 50
    mu0: float = 2.0
    tau2: tuple[float, ...] = _DEFAULT_SWEEP
    a: float = 0.2
    b: float = 1.0
    alpha: float = 1.96
    eps: float = 0.4
    trials: int = 100_000
    seed: int = 42
    k_values: tuple[int, ...] | None = None
    out: str | None = None

    def __post_init__(self):
        if not self.tau2:
            raise ConfigError("tau2", "sweep must be non-empty")
        if any(not (t > 0 and math.isfinite(t)) for t in self.tau2):
            raise ConfigError("tau2", "every prior variance must be > 0")
        if self.N < 1:
            raise ConfigError("N", "must be >= 1")
        if self.trials < 1:
            raise ConfigError("trials", "must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed", "must be >= 0")
        if not self.a > 0:
            raise ConfigError("a", "a must be > 0")
        if not self.a < self.b:
            raise ConfigError("a", "a must be < b")
        for key in ("alpha", "eps"):
            if not getattr(self, key) > 0:
                raise ConfigError(key, f"{key} must be > 0")
        if self.k_values is not None:
            if not self.k_values:
                raise ConfigError("k_values", "must be non-empty")
            bad = [k for k in self.k_values if not 0 <= k <= self.N]
            if bad:
                raise ConfigError("k_values", f"values must lie in [0, N], got {bad}")

    @property
    def band(self) -> PrecisionBand:
        return PrecisionBand(self.a, self.b)

    def ks(self) -> tuple[int, ...]:
        return self.k_values if self.k_values is not None else tuple(range(1, self.N + 1))

    def setup(self, tau2: float) -> MonteCarloSetup:
        return MonteCarloSetup.create(GaussianPrior(self.mu0, tau2), self.band, self.N,
                                      self.eps, self.alpha)

    def instance(self, tau2: float) -> ProblemInstance:
        return ProblemInstance.from_targets(self.N, self.band, GaussianPrior(self.mu0, tau2),
                                            self.alpha, self.eps)


# --------------------------------------------------------------------------
# Parsing

def _parse_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _parse_int(text: str) -> int:
    v = float(text)
    if v != int(v):
        raise ValueError("must be an integer")
    return int(v)


def _expand_range(text: str, conv) -> list:
    parts = text.split(":")
    if len(parts) == 1:
        return [conv(parts[0])]
    if len(parts) != 3:
        raise ValueError("ranges are start:stop:step")
    start, stop, step = (conv(p) for p in parts)
    if not step > 0 or stop < start:
        raise ValueError("range needs step > 0 and stop >= start")
    count = round((stop - start) / step)
    if abs(start + count * step - stop) > 1e-9 * max(1.0, abs(stop)):
        raise ValueError("stop must be start + an integer number of steps")
    return [start + i * step for i in range(count + 1)]


def _parse_list(text: str, conv) -> tuple:
    out: list = []
    for piece in text.split(","):
        if piece.strip():
            out.extend(_expand_range(piece.strip(), conv))
    if not out:
        raise ValueError("empty list")
    return tuple(out)


_PARSERS = {
    "experiment": ExperimentKind.parse,
    "N": _parse_int,
    "mu0": _parse_float,
    "tau2": lambda s: _parse_list(s, _parse_float),
    "a": _parse_float,
    "b": _parse_float,
    "alpha": _parse_float,
    "eps": _parse_float,
    "trials": _parse_int,
    "seed": _parse_int,
    "k_values": lambda s: _parse_list(s, _parse_int),
    "out": str,
}


def _pairs_from_text(text: str) -> list[tuple[str, str]]:
    pairs = []
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        for token in line.split():
            if "=" not in token:
                raise ConfigError(None, f"expected key=value, got {token!r}")
            key, value = token.split("=", 1)
            pairs.append((key.strip(), value.strip()))
    return pairs


def _pairs_from_flags(flags) -> list[tuple[str, str]]:
    if isinstance(flags, Mapping):
        return [(str(k).lstrip("-"), str(v)) for k, v in flags.items()]
    pairs = []
    for flag in flags:
        body = flag[2:] if flag.startswith("--") else flag
        if "=" not in body:
            raise ConfigError(None, f"expected --key=value, got {flag!r}")
        key, value = body.split("=", 1)
        pairs.append((key, value))
    return pairs


def parse_config(text: str = "", flags: Mapping[str, object] | Sequence[str] = ()) -> ExperimentConfig:
    """Build a validated config from key=value text plus overriding flags.

    Omitted keys take the defaults of :class:`ExperimentConfig`.
    """
    values: dict[str, object] = {}
    for key, raw in _pairs_from_text(text) + _pairs_from_flags(flags):
        if key not in _PARSERS:
            raise ConfigError(key, "unknown key")
        try:
            values[key] = _PARSERS[key](raw)
        except (ValueError, InvalidParameterError) as exc:
            raise ConfigError(key, f"cannot parse {raw!r}: {exc}") from None
    return ExperimentConfig(**values)


def format_config(config: ExperimentConfig) -> str:
    """Inverse of :func:`parse_config`: one ``key=value`` line per set field."""
    lines = []
    for key in _PARSERS:
        value = getattr(config, key)
        if value is None:
            continue
        if isinstance(value, ExperimentKind):
            text = value.value
        elif isinstance(value, tuple):
            text = ",".join(repr(v) for v in value)
        else:
            text = repr(value) if isinstance(value, float) else str(value)
        lines.append(f"{key}={text}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Running

@dataclass
class Table:
    columns: tuple[str, ...]
    rows: list[tuple] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)


def _metadata(config: ExperimentConfig, **extra) -> dict:
    meta = {
        "experiment": config.experiment.value,
        "config": format_config(replace(config, out=None)),
        "trials": config.trials,
        "seed": config.seed,
    }
    meta.update(extra)
    return meta


_MSE_NOTE = ("MSE averages every trial, including trials in which all N sensors "
             "transmitted without meeting the stopping rule")


def _mse_vs_tau(config: ExperimentConfig) -> Table:
    table = Table(COLUMNS[ExperimentKind.MSE_VS_TAU],
                  metadata=_metadata(config, mse_population=_MSE_NOTE))
    schemes = (Scheme.UNORDERED, Scheme.ORDERED, Scheme.FULL)
    for tau2 in config.tau2:
        st = monte_carlo(config.setup(tau2), config.trials, config.seed, schemes).stats
        u, o, f = (st[s] for s in schemes)
        table.rows.append((tau2, u.mse, o.mse, f.mse, u.se_mse, o.se_mse, f.se_mse))
    return table


def _mse_vs_k(config: ExperimentConfig) -> Table:
    tau2 = config.tau2[0]
    table = Table(COLUMNS[ExperimentKind.MSE_VS_K],
                  metadata=_metadata(config, tau2=tau2))
    ks = config.ks()
    st = monte_carlo_fixed_k(config.setup(tau2), ks, config.trials, config.seed)
    for k in ks:
        o, u = st[(Scheme.ORDERED, k)], st[(Scheme.UNORDERED, k)]
        table.rows.append((k, o.mse, u.mse, o.se_mse, u.se_mse))
    return table


def _ek_vs_tau(config: ExperimentConfig) -> Table:
    table = Table(COLUMNS[ExperimentKind.EK_VS_TAU], metadata=_metadata(config))
    for tau2 in config.tau2:
        inst = config.instance(tau2)
        st = monte_carlo(config.setup(tau2), config.trials, config.seed,
                         (Scheme.UNORDERED, Scheme.ORDERED)).stats
        u, o = st[Scheme.UNORDERED], st[Scheme.ORDERED]
        table.rows.append((tau2, analytic.unordered_expected_k(inst), u.mean_k, o.mean_k,
                           analytic.ordered_lower_bound(inst), analytic.ordered_upper_bound(inst),
                           u.se_k, o.se_k))
    return table


def _diagnostics(config: ExperimentConfig) -> Table:
    table = Table(COLUMNS[ExperimentKind.DIAGNOSTICS])
    worst = worst_alt = 0.0
    for tau2 in config.tau2:
        inst = config.instance(tau2)
        for r in analytic.upper_bound_diagnostics(inst):
            table.rows.append((tau2, inst.gamma, r.k, r.j, r.branch, r.s1_closed_form,
                               r.quadrature, r.abs_diff, r.rel_diff, r.s1_alt_binomial,
                               r.alt_abs_diff))
            worst = max(worst, r.rel_diff)
            if r.quadrature:
                worst_alt = max(worst_alt, r.alt_abs_diff / abs(r.quadrature))
    table.metadata = {
        "experiment": config.experiment.value,
        "config": format_config(replace(config, out=None)),
        "adopted_binomial": "C(k, i)",
        "adopted_max_rel_diff": worst,
        "adopted_validated": worst <= 1e-6,
        "alternative_binomial": "C(N-k-1, i)",
        "alternative_max_rel_diff": worst_alt,
        "alternative_validated": worst_alt <= 1e-6,
    }
    return table


_RUNNERS = {
    ExperimentKind.MSE_VS_TAU: _mse_vs_tau,
    ExperimentKind.MSE_VS_K: _mse_vs_k,
    ExperimentKind.EK_VS_TAU: _ek_vs_tau,
    ExperimentKind.DIAGNOSTICS: _diagnostics,
}


def run_experiment(config: ExperimentConfig) -> Table:
    try:
        return _RUNNERS[config.experiment](config)
    except NumericalFailure as exc:
        raise NumericalFailure(f"{config.experiment.value}: {exc}",
                               error_estimate=exc.error_estimate) from exc


# --------------------------------------------------------------------------
# Output

def _cell(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        if not math.isfinite(value):
            raise NumericalFailure(f"non-finite value {value!r} in output")
        return repr(value)
    return str(value)


def emit_csv(table: Table, path: str | Path) -> None:
    """Write ``table`` as UTF-8 CSV with round-trip float formatting."""
    lines = [[_cell(v) for v in row] for row in table.rows]
    for row in lines:
        if len(row) != len(table.columns):
            raise InvalidParameterError("row width does not match the header")
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(table.columns)
            writer.writerows(lines)
    except OSError as exc:
        raise OutputFileError(f"cannot write {path}: {exc.strerror or exc}", str(path)) from exc


def emit_metadata(table: Table, path: str | Path) -> Path:
    """Write ``table.metadata`` as JSON next to the CSV (``<path>.meta.json``)."""
    meta_path = Path(str(path) + ".meta.json")
    try:
        meta_path.write_text(json.dumps(table.metadata, indent=2, sort_keys=True) + "\n",
                             encoding="utf-8")
    except OSError as exc:
        raise OutputFileError(f"cannot write {meta_path}: {exc.strerror or exc}",
                              str(meta_path)) from exc
    return meta_path

