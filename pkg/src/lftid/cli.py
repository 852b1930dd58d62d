"""Command-line front end.

Subcommands: simulate, identify, excitation, montecarlo, baseline.
Exit codes are a stable contract:

    0  success
    2  configuration error (missing/invalid file or section)
    3  model assumption failure (regularity, well-posedness, stability,
       shared spectra, generator degeneracy, ...)
    4  data not persistently exciting
    5  parameters not identifiable from the data
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import os
import sys

import numpy as np

from . import estimation as est_mod
from . import experiments as exp_mod
from . import response as resp_mod
from .config import Setup, load_setup
from .errors import (ComponentNotReal, ConfigError, DefectiveGenerator,
                     DimensionMismatch, NotIdentifiableFromData,
                     NotPersistentlyExciting, SharedEigenvalue,
                     SingularPencil, SingularT, Unstable, UnsupportedIndex,
                     WellPosednessViolated)
from .numerics import Tolerances
from .response import SampleSet

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ASSUMPTION = 3
EXIT_NOT_EXCITING = 4
EXIT_NOT_IDENTIFIABLE = 5

_ASSUMPTION_ERRORS = (WellPosednessViolated, SingularPencil, Unstable,
                      DefectiveGenerator, SharedEigenvalue,
                      UnsupportedIndex, ComponentNotReal, SingularT,
                      DimensionMismatch)


def write_samples_csv(path: str, samples: SampleSet) -> None:
    m_y = samples.measurements.shape[1]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["t"] + [f"y_{i + 1}" for i in range(m_y)])
        for t, row in zip(samples.times, samples.measurements):
            writer.writerow([f"{t:.17g}"] + [f"{v:.17g}" for v in row])


def read_samples_csv(path: str) -> SampleSet:
    try:
        with open(path, newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None or not header or header[0].strip() != "t":
                raise ConfigError(
                    f"samples file {path!r} must start with a 't, y_1, "
                    "...' header")
            rows = [[float(v) for v in row] for row in reader if row]
    except OSError as exc:
        raise ConfigError(f"cannot read samples file {path!r}: {exc}") \
            from exc
    except ValueError as exc:
        raise ConfigError(f"cannot parse samples file {path!r}: {exc}") \
            from exc
    if not rows:
        raise ConfigError(f"samples file {path!r} has no data rows")
    data = np.asarray(rows, dtype=float)
    if data.shape[1] < 2:
        raise ConfigError(
            f"samples file {path!r} has no output columns")
    return SampleSet(times=data[:, 0], measurements=data[:, 1:],
                     noise_sigma=float("nan"), seed=None)


def _tols_with_override(tols: Tolerances, args) -> Tolerances:
    if getattr(args, "tol_rank", None) is not None:
        return dataclasses.replace(tols, rank_rtol=float(args.tol_rank))
    return tols


def _load(args) -> tuple[Setup, Tolerances]:
    setup = load_setup(args.config)
    return setup, _tols_with_override(setup.tols, args)


def _ensure_outdir(args) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def _experiment_times(setup: Setup, args, tols) -> np.ndarray:
    exp = setup.experiment
    N = args.n if getattr(args, "n", None) else exp.N
    if exp.t_start is not None:
        t_start = exp.t_start
    else:
        theta_nom = np.zeros(setup.plant.m_theta)
        t_start = exp_mod.settle_time(setup.plant, theta_nom,
                                      exp.settle_band, tols)
    seed = args.seed if args.seed is not None else exp.seed
    return exp_mod.generate_times(exp.gap, N, t_start=t_start, seed=seed)


def _theta_true(setup: Setup) -> np.ndarray:
    if setup.experiment.theta_true is None:
        raise ConfigError(
            "this command needs [experiment] theta_true in the config")
    return setup.experiment.theta_true


def cmd_simulate(args) -> int:
    setup, tols = _load(args)
    theta = _theta_true(setup)
    sigma = args.sigma if args.sigma is not None else \
        setup.experiment.sigma
    seed = args.seed if args.seed is not None else setup.experiment.seed
    times = _experiment_times(setup, args, tols)
    if setup.experiment.x0_mode == "steady":
        maps = resp_mod.solve_steady_maps(setup.plant, theta,
                                          setup.generator, tols=tols)
        x0 = maps.X @ setup.generator.xi0
    else:
        x0 = np.zeros(setup.plant.m_x)
    samples = resp_mod.simulate_samples(setup.plant, theta, x0,
                                        setup.generator, times, sigma,
                                        seed=seed, tols=tols)
    out = _ensure_outdir(args)
    path = os.path.join(out, "samples.csv")
    write_samples_csv(path, samples)
    print(f"wrote {len(samples)} samples to {path}")
    return EXIT_OK


def cmd_identify(args) -> int:
    setup, tols = _load(args)
    if not args.samples:
        raise ConfigError("identify needs --samples FILE")
    samples = read_samples_csv(args.samples)
    if samples.measurements.shape[1] != setup.plant.m_y:
        raise ConfigError(
            f"samples file has {samples.measurements.shape[1]} output "
            f"columns but the configured plant has m_y = "
            f"{setup.plant.m_y}")
    result = est_mod.identify(setup.plant, setup.generator, samples,
                              theta_ref=setup.experiment.theta_true,
                              tols=tols)
    out = _ensure_outdir(args)
    theta_path = os.path.join(out, "theta.csv")
    with open(theta_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow([f"theta_{i + 1}"
                         for i in range(result.theta.size)])
        writer.writerow([f"{v:.17g}" for v in result.theta])
    hbar_path = os.path.join(out, "hbar.csv")
    with open(hbar_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["block", "eigenvalue", "row", "col", "value"])
        labels = result.tfm.block_labels()
        w = result.tfm.m_z
        for b, (kind, lam) in enumerate(labels):
            block = result.tfm.Hbar[:, b * w:(b + 1) * w]
            for i in range(block.shape[0]):
                for j in range(block.shape[1]):
                    writer.writerow([kind, f"{lam:.17g}", i, j,
                                     f"{block[i, j]:.17g}"])
    report_path = os.path.join(out, "report.txt")
    lines = ["theta_hat = " +
             " ".join(f"{v:.12g}" for v in result.theta),
             f"parametric_residual = {result.theta_residual:.6e}",
             f"samples = {len(samples)}",
             "", "[excitation]", result.excitation.as_text()]
    if setup.experiment.theta_true is not None:
        ere = exp_mod.relative_error(setup.experiment.theta_true,
                                     result.theta)
        lines.insert(2, f"E_re_vs_config_theta_true = {ere:.6e}")
    with open(report_path, "w") as handle:
        handle.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    print(f"wrote {theta_path}, {hbar_path}, {report_path}")
    return EXIT_OK


def cmd_excitation(args) -> int:
    setup, tols = _load(args)
    if args.samples:
        samples = read_samples_csv(args.samples)
    else:
        theta = setup.experiment.theta_true if \
            setup.experiment.theta_true is not None else \
            np.zeros(setup.plant.m_theta)
        times = _experiment_times(setup, args, tols)
        samples = resp_mod.simulate_samples(
            setup.plant, theta, np.zeros(setup.plant.m_x), setup.generator,
            times, 0.0, seed=None, tols=tols)
    reg = est_mod.build_regression(setup.plant, setup.generator, samples,
                                   tols)
    ps = None
    try:
        est = est_mod.estimate_tfm(reg, tols)
        theta_ref = setup.experiment.theta_true
        ps = est_mod.build_parametric(setup.plant, reg.spectrum, est,
                                      theta_ref=theta_ref, tols=tols)
    except NotPersistentlyExciting:
        pass
    report = est_mod.check_excitation(setup.plant, reg.spectrum, reg, ps,
                                      tols)
    text = report.as_text()
    print(text)
    out = _ensure_outdir(args)
    path = os.path.join(out, "excitation.txt")
    with open(path, "w") as handle:
        handle.write(text + "\n")
    print(f"wrote {path}")
    return EXIT_OK


def _write_summary_csv(path: str, summaries: list[dict]) -> None:
    cols = ["sigma", "N", "sigma1", "sigma2", "trials",
            "median_Ere_proposed", "mean_Ere_proposed", "median_Ere_dlse",
            "dlse_fail_count"]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(cols)
        for row in summaries:
            writer.writerow([row[c] for c in cols])


def _write_trials_csv(path: str, results) -> None:
    if not results:
        return
    m_theta = results[0].theta_true.size
    cols = (["sigma", "N", "sigma1", "sigma2", "trial"]
            + [f"theta_true_{i + 1}" for i in range(m_theta)]
            + [f"theta_prop_{i + 1}" for i in range(m_theta)]
            + ["Ere_proposed", "proposed_status"]
            + [f"theta_dlse_{i + 1}" for i in range(m_theta)]
            + ["Ere_dlse", "dlse_status", "dlse_cost", "runtime_s"])
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(cols)
        for r in results:
            gs = r.gen_sigmas or ()
            row = [r.sigma, r.N,
                   gs[0] if len(gs) > 0 else "",
                   gs[1] if len(gs) > 1 else "", r.trial]
            row += [f"{v:.17g}" for v in r.theta_true]
            row += ([f"{v:.17g}" for v in r.theta_proposed]
                    if r.theta_proposed is not None else [""] * m_theta)
            row += [f"{r.ere_proposed:.17g}"
                    if r.ere_proposed is not None else "",
                    r.proposed_status]
            row += ([f"{v:.17g}" for v in r.theta_dlse]
                    if r.theta_dlse is not None else [""] * m_theta)
            row += [f"{r.ere_dlse:.17g}" if r.ere_dlse is not None else "",
                    r.dlse_status or "",
                    f"{r.dlse_cost:.17g}" if r.dlse_cost is not None
                    else "",
                    f"{r.runtime:.6f}"]
            writer.writerow(row)


def _run_sweep(args, force_dlse: bool) -> int:
    setup, tols = _load(args)
    exp = setup.experiment
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.sigma is not None:
        overrides["sigmas"] = (args.sigma,)
    if force_dlse:
        overrides["dlse"] = True
    if overrides:
        exp = dataclasses.replace(exp, **overrides)
    results, summaries = exp_mod.monte_carlo(exp, tols)
    out = _ensure_outdir(args)
    prefix = "baseline" if force_dlse else "montecarlo"
    summary_path = os.path.join(out, f"{prefix}_summary.csv")
    trials_path = os.path.join(out, f"{prefix}_trials.csv")
    _write_summary_csv(summary_path, summaries)
    _write_trials_csv(trials_path, results)
    for row in summaries:
        print(f"sigma={row['sigma']:g} N={row['N']} "
              f"trials={row['trials']} "
              f"median_Ere_proposed={row['median_Ere_proposed']:.6g} "
              f"median_Ere_dlse={row['median_Ere_dlse']:.6g} "
              f"dlse_fail_count={row['dlse_fail_count']} "
              f"proposed_fail_count={row['proposed_fail_count']}")
    print(f"wrote {summary_path}, {trials_path}")
    return EXIT_OK


def cmd_montecarlo(args) -> int:
    return _run_sweep(args, force_dlse=False)


def cmd_baseline(args) -> int:
    return _run_sweep(args, force_dlse=True)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lftid",
        description="Identification of LFT-structured descriptor systems "
                    "from slow, non-uniform output samples")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_text in (
            ("simulate", cmd_simulate,
             "simulate noisy sampled outputs and write samples.csv"),
            ("identify", cmd_identify,
             "run the two-step estimator on a samples file"),
            ("excitation", cmd_excitation,
             "excitation/identifiability rank diagnostics"),
            ("montecarlo", cmd_montecarlo,
             "seeded Monte-Carlo sweep over the configured cells"),
            ("baseline", cmd_baseline,
             "Monte-Carlo sweep with the DLSE baseline enabled")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True,
                       help="TOML plant/generator/experiment file")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="override the experiment seed")
        p.add_argument("--sigma", type=float, default=None,
                       help="override the noise level")
        p.add_argument("--samples", default=None,
                       help="samples CSV (identify/excitation input)")
        p.add_argument("--n", type=int, default=None,
                       help="override the sample count")
        p.add_argument("--tol-rank", type=float, default=None,
                       help="override the relative rank tolerance")
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NotPersistentlyExciting as exc:
        print(f"not persistently exciting: {exc}", file=sys.stderr)
        return EXIT_NOT_EXCITING
    except NotIdentifiableFromData as exc:
        print(f"not identifiable from data: {exc}", file=sys.stderr)
        return EXIT_NOT_IDENTIFIABLE
    except _ASSUMPTION_ERRORS as exc:
        which = getattr(exc, "assumption", None)
        prefix = f"model assumption failure (Assumption {which})" \
            if which else "model assumption failure"
        print(f"{prefix}: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION


if __name__ == "__main__":
    sys.exit(main())
