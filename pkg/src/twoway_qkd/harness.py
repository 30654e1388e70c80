"""Experiment harness: sweep grids of sessions, aggregate statistics, and
emit reproducible artifacts.

A config is a human-editable JSON file (schema below); CLI flags override
file values. The sweep grid is the cartesian product of the four axes in
the fixed order (p_bitflip, repetition, eve, tag_length); one output row
per cell, cells in product (lexicographic) order. Identical configs produce
byte-identical artifacts.

Config schema::

    {
      "variant": "V1" | "V2" | "V3",
      "n_bits": int,                 # message length N
      "repetition": int,             # repetition factor t
      "basis_pool": [float, ...],    # basis angles in radians
      "tag_length": int,
      "tag_bits": [0/1, ...] | null, # null = default alternating sequence
      "seed": int,
      "repetitions": int,            # runs per sweep cell
      "noise": {"p_bitflip": f, "p_phaseflip": f, "p_both": f},
      "eve": {"kind": "absent" | "intercept_resend" | "substitute",
              "basis_pool": [float, ...], "legs": ["forward", "backward"]},
      "sweep": {"p_bitflip": [...], "repetition": [...],
                "eve": [...], "tag_length": [...]},   # each axis optional
      "output_dir": str,
      "format": "tabular" | "structured"
    }

All reported rates are simulator-derived; the protocol's source material
contains no numerical experiments to compare against.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .channel import ABSENT, EveStrategy, NoiseModel
from .protocol import V2, RunConfig, run_session
from .qubit import Basis

CONFIG_FILENAME = "config_resolved.json"
CSV_FILENAME = "results.csv"
SUMMARY_FILENAME = "summary.json"

_CSV_COLUMNS = (
    "p_bitflip", "repetition", "eve", "tag_length", "runs",
    "qber", "qber_se", "agreement_rate", "agreement_se",
    "detection_rate", "detection_se", "erasure_rate", "erasure_se",
)


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the field."""


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunConfig
    repetitions: int = 1
    noise: NoiseModel = NoiseModel()
    eve: EveStrategy = EveStrategy.absent()
    sweep_p_bitflip: tuple[float, ...] | None = None
    sweep_repetition: tuple[int, ...] | None = None
    sweep_eve: tuple[str, ...] | None = None
    sweep_tag_length: tuple[int, ...] | None = None
    output_dir: str = "results"
    output_format: str = "tabular"

    def __post_init__(self) -> None:
        if self.repetitions < 1:
            raise ConfigError("repetitions: must be >= 1")
        if self.output_format not in ("tabular", "structured"):
            raise ConfigError("format: must be 'tabular' or 'structured'")

    @property
    def has_sweep(self) -> bool:
        return any(
            axis is not None
            for axis in (self.sweep_p_bitflip, self.sweep_repetition,
                         self.sweep_eve, self.sweep_tag_length)
        )

    def cells(self) -> list[dict]:
        """Sweep cells in product order over the fixed axis order."""
        p_axis = self.sweep_p_bitflip if self.sweep_p_bitflip is not None else (self.noise.p_bitflip,)
        t_axis = self.sweep_repetition if self.sweep_repetition is not None else (self.run.repetition,)
        e_axis = self.sweep_eve if self.sweep_eve is not None else (self.eve.kind,)
        g_axis = self.sweep_tag_length if self.sweep_tag_length is not None else (self.run.tag_length,)
        out = []
        for p in p_axis:
            for t in t_axis:
                for e in e_axis:
                    for g in g_axis:
                        out.append({"p_bitflip": p, "repetition": t, "eve": e, "tag_length": g})
        return out

    def to_dict(self) -> dict:
        return {
            "variant": self.run.variant,
            "n_bits": self.run.n_bits,
            "repetition": self.run.repetition,
            "basis_pool": [b.theta for b in self.run.basis_pool],
            "tag_length": self.run.tag_length,
            "tag_bits": list(self.run.tag_bits) if self.run.tag_bits is not None else None,
            "seed": self.run.seed,
            "repetitions": self.repetitions,
            "noise": {
                "p_bitflip": self.noise.p_bitflip,
                "p_phaseflip": self.noise.p_phaseflip,
                "p_both": self.noise.p_both,
            },
            "eve": {
                "kind": self.eve.kind,
                "basis_pool": list(self.eve.basis_pool),
                "legs": sorted(self.eve.legs),
            },
            "sweep": {
                key: list(axis)
                for key, axis in (
                    ("p_bitflip", self.sweep_p_bitflip),
                    ("repetition", self.sweep_repetition),
                    ("eve", self.sweep_eve),
                    ("tag_length", self.sweep_tag_length),
                )
                if axis is not None
            },
            # output_dir is deliberately not persisted: replayed artifacts
            # must be byte-identical regardless of where they are written.
            "format": self.output_format,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        def grab(name, default=None, required=False):
            if required and name not in data:
                raise ConfigError(f"{name}: missing required field")
            return data.get(name, default)

        try:
            run = RunConfig(
                n_bits=int(grab("n_bits", required=True)),
                repetition=int(grab("repetition", 1)),
                variant=str(grab("variant", "V1")),
                basis_pool=tuple(Basis(float(a)) for a in grab("basis_pool", [0.0])),
                tag_length=int(grab("tag_length", 0)),
                seed=int(grab("seed", 0)),
                tag_bits=tuple(int(b) for b in data["tag_bits"]) if data.get("tag_bits") is not None else None,
            )
        except ValueError as exc:
            raise ConfigError(f"run parameters: {exc}") from exc
        noise_d = grab("noise", {})
        try:
            noise = NoiseModel(
                p_bitflip=float(noise_d.get("p_bitflip", 0.0)),
                p_phaseflip=float(noise_d.get("p_phaseflip", 0.0)),
                p_both=float(noise_d.get("p_both", 0.0)),
            )
        except ValueError as exc:
            raise ConfigError(f"noise: {exc}") from exc
        eve_d = grab("eve", {})
        try:
            eve = EveStrategy(
                kind=str(eve_d.get("kind", ABSENT)),
                basis_pool=tuple(float(a) for a in eve_d.get("basis_pool", [])),
                legs=frozenset(eve_d.get("legs", [])),
            )
        except ValueError as exc:
            raise ConfigError(f"eve: {exc}") from exc
        sweep = grab("sweep", {})
        if not isinstance(sweep, dict):
            raise ConfigError("sweep: must be an object of axis lists")
        unknown = set(sweep) - {"p_bitflip", "repetition", "eve", "tag_length"}
        if unknown:
            raise ConfigError(f"sweep: unknown axes {sorted(unknown)}")
        return cls(
            run=run,
            repetitions=int(grab("repetitions", 1)),
            noise=noise,
            eve=eve,
            sweep_p_bitflip=tuple(float(x) for x in sweep["p_bitflip"]) if "p_bitflip" in sweep else None,
            sweep_repetition=tuple(int(x) for x in sweep["repetition"]) if "repetition" in sweep else None,
            sweep_eve=tuple(str(x) for x in sweep["eve"]) if "eve" in sweep else None,
            sweep_tag_length=tuple(int(x) for x in sweep["tag_length"]) if "tag_length" in sweep else None,
            output_dir=str(grab("output_dir", "results")),
            output_format=str(grab("format", "tabular")),
        )

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def json_text(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _binomial_se(rate: float, n: int) -> float:
    return math.sqrt(max(0.0, rate * (1.0 - rate)) / n) if n else 0.0


@dataclass(frozen=True)
class CellStats:
    params: dict
    runs: int
    qber: float
    qber_se: float
    agreement_rate: float
    agreement_se: float
    detection_rate: float
    detection_se: float
    erasure_rate: float
    erasure_se: float

    def to_dict(self) -> dict:
        out = dict(self.params)
        out.update(
            runs=self.runs,
            qber=self.qber, qber_se=self.qber_se,
            agreement_rate=self.agreement_rate, agreement_se=self.agreement_se,
            detection_rate=self.detection_rate, detection_se=self.detection_se,
            erasure_rate=self.erasure_rate, erasure_se=self.erasure_se,
        )
        return out


@dataclass(frozen=True)
class RunStatistics:
    config: ExperimentConfig
    cells: tuple[CellStats, ...]

    def csv_text(self) -> str:
        lines = [",".join(_CSV_COLUMNS)]
        for cell in self.cells:
            row = cell.to_dict()
            lines.append(",".join(repr(row[c]) if isinstance(row[c], float) else str(row[c]) for c in _CSV_COLUMNS))
        return "\n".join(lines) + "\n"

    def summary_json_text(self) -> str:
        payload = {
            "config": self.config.to_dict(),
            "cells": [cell.to_dict() for cell in self.cells],
            "note": "all rates are simulator-derived Monte Carlo estimates",
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def _cell_run_config(config: ExperimentConfig, params: dict) -> RunConfig:
    try:
        return replace(
            config.run,
            repetition=int(params["repetition"]),
            tag_length=int(params["tag_length"]),
            tag_bits=None if config.run.tag_bits is None
            else tuple(config.run.tag_bits[: params["tag_length"]]),
        )
    except ValueError as exc:
        raise ConfigError(f"sweep cell {params}: {exc}") from exc


def _cell_eve(config: ExperimentConfig, kind: str) -> EveStrategy:
    if kind == ABSENT:
        return EveStrategy.absent()
    pool = config.eve.basis_pool or tuple(b.theta for b in config.run.basis_pool)
    legs = config.eve.legs or frozenset(["forward"])
    try:
        return EveStrategy(kind=kind, basis_pool=pool, legs=legs)
    except ValueError as exc:
        raise ConfigError(f"sweep eve value {kind!r}: {exc}") from exc


def run_experiment(config: ExperimentConfig) -> RunStatistics:
    """Execute repetitions x sweep-grid sessions and aggregate per-cell rates.

    Session seeds derive from (seed, cell index, repetition index), so cells
    are independent and the whole grid is reproducible from the config.
    """
    cells = []
    for cell_index, params in enumerate(config.cells()):
        run_config = _cell_run_config(config, params)
        try:
            noise = replace(config.noise, p_bitflip=float(params["p_bitflip"]))
        except ValueError as exc:
            raise ConfigError(f"sweep p_bitflip value {params['p_bitflip']}: {exc}") from exc
        eve = _cell_eve(config, params["eve"])

        qber_sum = 0.0
        agreements = 0
        detections = 0
        erasure_sum = 0.0
        for rep in range(config.repetitions):
            rng = np.random.default_rng(
                np.random.SeedSequence(config.run.seed, spawn_key=(cell_index, rep))
            )
            result = run_session(run_config, noise, noise, eve, rng=rng)
            qber_sum += float(np.mean(result.derivation.m_prime != result.key_message))
            agreements += int(result.agreement)
            detections += int(result.abort_reason == "tag_mismatch")
            if run_config.variant == V2:
                erasure_sum += float(np.mean(result.derivation.p))
        n = config.repetitions
        qber = qber_sum / n
        bits = n * run_config.message_length
        blocks = n * run_config.n_bits
        cells.append(
            CellStats(
                params=params,
                runs=n,
                qber=qber,
                qber_se=_binomial_se(qber, bits),
                agreement_rate=agreements / n,
                agreement_se=_binomial_se(agreements / n, n),
                detection_rate=detections / n,
                detection_se=_binomial_se(detections / n, n),
                erasure_rate=erasure_sum / n,
                erasure_se=_binomial_se(erasure_sum / n, blocks),
            )
        )
    return RunStatistics(config=config, cells=tuple(cells))


def emit_results(stats: RunStatistics, output_dir) -> list[Path]:
    """Write config_resolved.json, results.csv, and summary.json."""
    out = Path(output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        written = []
        for name, text in (
            (CONFIG_FILENAME, stats.config.json_text()),
            (CSV_FILENAME, stats.csv_text()),
            (SUMMARY_FILENAME, stats.summary_json_text()),
        ):
            path = out / name
            path.write_text(text)
            written.append(path)
    except OSError as exc:
        raise ConfigError(f"output_dir: cannot write to {out}: {exc}") from exc
    return written
