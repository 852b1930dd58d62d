"""TOML configuration loading for the command-line front end.

One file describes the plant, the input generator, optional experiment
settings, and numeric tolerance overrides; see README for the schema.
"""
from __future__ import annotations

import sys
from dataclasses import dataclass

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, DimensionMismatch
from .experiments import DEFAULT_SETTLE_BAND, ExperimentConfig
from .igs import InputGenerator
from .model import LftPlant
from .numerics import Tolerances


@dataclass(frozen=True)
class Setup:
    plant: LftPlant
    generator: InputGenerator
    experiment: ExperimentConfig
    tols: Tolerances


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise ConfigError(f"missing key {key!r} in [{where}]")
    return table[key]


def plant_from_table(table: dict) -> LftPlant:
    names = ["E", "A_xx", "B_xu", "B_xv", "C_yx", "C_zx",
             "D_zu", "D_zv", "D_yu", "D_yv"]
    matrices = {}
    for name in names:
        matrices[name] = np.asarray(_require(table, name, "plant"),
                                    dtype=float)
    basis = [np.asarray(P, dtype=float)
             for P in _require(table, "P", "plant")]
    box = [tuple(pair) for pair in _require(table, "theta_box", "plant")]
    try:
        return LftPlant(basis=tuple(basis), theta_box=tuple(box),
                        **matrices)
    except (DimensionMismatch, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid [plant] section: {exc}") from exc


def generator_from_table(table: dict) -> InputGenerator:
    try:
        if "Xi" in table:
            Xi = np.asarray(table["Xi"], dtype=float)
        elif "omegas" in table:
            omegas = [float(w) for w in table["omegas"]]
            sigmas = [float(s) for s in table.get("sigmas",
                                                  [0.0] * len(omegas))]
            if len(sigmas) != len(omegas):
                raise ConfigError("omegas and sigmas differ in length")
            m = 2 * len(omegas)
            Xi = np.zeros((m, m))
            for i, (s, w) in enumerate(zip(sigmas, omegas)):
                Xi[2 * i:2 * i + 2, 2 * i:2 * i + 2] = [[s, w], [-w, s]]
        else:
            raise ConfigError("[generator] needs either Xi or omegas")
        Pi = np.atleast_2d(np.asarray(_require(table, "Pi", "generator"),
                                      dtype=float))
        xi0 = np.asarray(_require(table, "xi0", "generator"), dtype=float)
        return InputGenerator(Xi=Xi, Pi=Pi, xi0=xi0)
    except (DimensionMismatch, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid [generator] section: {exc}") from exc


def tolerances_from_table(table: dict | None) -> Tolerances:
    if not table:
        return Tolerances()
    known = {"rank_rtol", "eig_distinct", "shared_eig", "component_imag",
             "infinite_eig"}
    unknown = set(table) - known
    if unknown:
        raise ConfigError(f"unknown [numerics] keys: {sorted(unknown)}")
    return Tolerances(**{k: float(v) for k, v in table.items()})


def experiment_from_table(table: dict, plant: LftPlant,
                          gen: InputGenerator) -> ExperimentConfig:
    table = dict(table or {})
    sweep = table.pop("sweep", {})
    theta_true = table.get("theta_true")
    gap = table.get("gap", (0.2, 1.0))
    try:
        variants = sweep.get("generator_sigmas")
        N = int(table.get("N", 200))
        sigma = float(table.get("sigma", 0.25))
        return ExperimentConfig(
            plant=plant,
            generator=gen,
            N=N,
            sigma=sigma,
            Ns=tuple(int(n) for n in sweep.get("Ns", [N])),
            sigmas=tuple(float(s) for s in sweep.get("sigmas", [sigma])),
            gen_sigma_variants=tuple(tuple(float(x) for x in v)
                                     for v in variants)
            if variants else (None,),
            trials=int(sweep.get("trials", table.get("trials", 25))),
            seed=int(table.get("seed", 0)),
            gap=(float(gap[0]), float(gap[1])),
            theta_true=np.asarray(theta_true, dtype=float)
            if theta_true is not None else None,
            x0_mode=str(table.get("x0", "zero")),
            t_start=float(table["t_start"]) if "t_start" in table else None,
            settle_band=float(table.get("settle_band",
                                        DEFAULT_SETTLE_BAND)),
            dlse=bool(table.get("dlse", False)),
            threads=int(table.get("threads", 1)),
        )
    except (ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"invalid [experiment] section: {exc}") from exc


def load_setup(path: str) -> Setup:
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") \
            from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"cannot parse config file {path!r}: {exc}") \
            from exc
    if "plant" not in raw:
        raise ConfigError("config file needs a [plant] section")
    if "generator" not in raw:
        raise ConfigError("config file needs a [generator] section")
    plant = plant_from_table(raw["plant"])
    gen = generator_from_table(raw["generator"])
    tols = tolerances_from_table(raw.get("numerics"))
    experiment = experiment_from_table(raw.get("experiment", {}), plant,
                                       gen)
    return Setup(plant=plant, generator=gen, experiment=experiment,
                 tols=tols)
