"""Command-line interface.

Three subcommands:

* ``validate-prior``: Monte Carlo check of the closed-form interference
  moments, plus a histogram CSV of the sampled aggregate power.
* ``detect-single``: one synthesized realization, all requested estimators,
  per-device estimates as CSV (optionally the raw realization as ``.npz``).
* ``sweep``: the Monte Carlo error-probability experiment, written as CSV
  (optionally mirrored as JSON).

Exit codes: 0 success, 1 failed validation check, 2 configuration or
contract error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import sys
from pathlib import Path

import numpy as np

from .config import RunConfig, load_run_config
from .evaluation import ESTIMATORS, run_experiment
from .exceptions import ContractViolationError, NumericalFailureError
from .priors import gaussian_prior_moments, shot_noise_oracle, truncated_shot_noise_moments
from .scenario import draw_realization, realization_rng, save_realization
from .solvers import run_baseline_ml, run_map, run_ml

_MEAN_RTOL = 0.01
_VARIANCE_RTOL = 0.05


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="activedet",
        description="Joint activity / interference estimation: prior checks, "
        "single-shot detection, Monte Carlo sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", type=Path, default=None, help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the experiment seed")
        p.add_argument(
            "--realizations", type=int, default=None, help="override the realization count"
        )
        p.add_argument("--out", type=Path, default=None, help="output destination")
        p.add_argument("--threads", type=int, default=1, help="worker processes for sweeps")
        p.add_argument(
            "--estimators",
            default=None,
            help=f"comma-separated subset of {','.join(ESTIMATORS)}",
        )

    prior = sub.add_parser(
        "validate-prior", help="Monte Carlo check of the closed-form interference moments"
    )
    add_common(prior)
    prior.add_argument("--samples", type=int, default=100_000)
    prior.add_argument(
        "--truncation-factor",
        type=float,
        default=5.0,
        help="field truncation radius as a multiple of the cell radius",
    )
    prior.add_argument("--bins", type=int, default=80)

    single = sub.add_parser(
        "detect-single", help="run all estimators on one synthesized realization"
    )
    add_common(single)
    single.add_argument(
        "--dump-scenario", type=Path, default=None, help="also save the realization as .npz"
    )

    sweep = sub.add_parser("sweep", help="Monte Carlo error-probability sweep")
    add_common(sweep)

    return parser


def _load(args) -> RunConfig:
    config = load_run_config(args.config) if args.config else RunConfig()
    experiment = config.experiment
    if args.seed is not None:
        experiment = dataclasses.replace(experiment, seed=args.seed)
    if args.realizations is not None:
        experiment = dataclasses.replace(experiment, n_realizations=args.realizations)
    if args.estimators is not None:
        names = tuple(n.strip() for n in args.estimators.split(",") if n.strip())
        experiment = dataclasses.replace(experiment, estimators=names)
    return dataclasses.replace(config, experiment=experiment)


def _cmd_validate_prior(args) -> int:
    config = _load(args)
    scenario = config.scenario
    prior = gaussian_prior_moments(
        scenario.interferer_density,
        scenario.activity_prob,
        scenario.cell_radius,
        scenario.pathloss_exponent,
    )
    target_mean, target_var = truncated_shot_noise_moments(
        scenario.interferer_density,
        scenario.activity_prob,
        scenario.cell_radius,
        scenario.pathloss_exponent,
        args.truncation_factor,
    )
    rng = realization_rng(config.experiment.seed, 0)
    summary = shot_noise_oracle(
        scenario.interferer_density,
        scenario.activity_prob,
        scenario.cell_radius,
        scenario.pathloss_exponent,
        args.truncation_factor,
        args.samples,
        rng,
        bins=args.bins,
    )

    out = args.out if args.out else Path("prior_hist.csv")
    with open(out, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["bin_left", "bin_right", "density"])
        for left, right, dens in zip(
            summary.bin_edges[:-1], summary.bin_edges[1:], summary.density
        ):
            writer.writerow([repr(float(left)), repr(float(right)), repr(float(dens))])

    print(f"closed-form moments: mean {prior.mean:.6e}, variance {prior.variance:.6e}")
    print(
        f"truncated targets (factor {args.truncation_factor:g}): "
        f"mean {target_mean:.6e}, variance {target_var:.6e}"
    )
    print(
        f"empirical ({summary.n_samples} samples): "
        f"mean {summary.mean:.6e}, variance {summary.variance:.6e}"
    )
    mean_rel = abs(summary.mean - target_mean) / target_mean if target_mean else 0.0
    var_rel = abs(summary.variance - target_var) / target_var if target_var else 0.0
    print(f"relative errors: mean {mean_rel:.3%}, variance {var_rel:.3%}")
    print(f"histogram written to {out}")
    ok = mean_rel <= _MEAN_RTOL and var_rel <= _VARIANCE_RTOL
    print("moment check:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def _cmd_detect_single(args) -> int:
    config = _load(args)
    scenario = config.scenario
    experiment = config.experiment
    rng = realization_rng(experiment.seed, 0)
    realization = draw_realization(scenario, rng)
    network = realization.network

    options = dataclasses.replace(config.solver, monitor_objective=True)
    results = {}
    for name in experiment.estimators:
        if name == "joint-ml":
            results[name] = run_ml(
                realization.sample_cov, realization.pilots.in_cell,
                network.pathloss, scenario.noise_var, options,
            )
        elif name == "baseline-ml":
            results[name] = run_baseline_ml(
                realization.sample_cov, realization.pilots.in_cell,
                network.pathloss, scenario.noise_var, options,
            )
        elif name == "joint-map":
            prior = gaussian_prior_moments(
                scenario.interferer_density, scenario.activity_prob,
                scenario.cell_radius, scenario.pathloss_exponent,
            )
            results[name] = run_map(
                realization.sample_cov, realization.pilots.in_cell,
                network.pathloss, scenario.noise_var,
                prior, scenario.activity_prob, scenario.n_antennas, options,
            )

    out_dir = args.out if args.out else Path("detect-single")
    out_dir.mkdir(parents=True, exist_ok=True)
    names = list(results)

    with open(out_dir / "devices.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["device", "pathloss", "true_activity"]
                        + [f"activity_{n}" for n in names])
        for i in range(network.n_devices):
            writer.writerow(
                [i, repr(float(network.pathloss[i])), int(network.activity[i])]
                + [repr(float(results[n].activity[i])) for n in names]
            )

    with open(out_dir / "interference.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["dimension"] + [f"interference_{n}" for n in names])
        for ell in range(scenario.pilot_length):
            writer.writerow([ell] + [repr(float(results[n].interference[ell])) for n in names])

    with open(out_dir / "objective_trace.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["estimator", "step", "objective"])
        for n in names:
            for k, value in enumerate(results[n].objective_trace):
                writer.writerow([n, k, repr(float(value))])

    if args.dump_scenario is not None:
        save_realization(args.dump_scenario, realization)
        print(f"realization saved to {args.dump_scenario}")

    for n in names:
        r = results[n]
        print(
            f"{n}: sweeps {r.sweeps_used}, converged {r.converged}, "
            f"objective {r.final_objective:.6f}, "
            f"active devices (>= 0.5): {int(np.count_nonzero(r.activity >= 0.5))}"
        )
    print(f"results written to {out_dir}")
    return 0


def _cmd_sweep(args) -> int:
    config = _load(args)
    experiment = config.experiment
    result = run_experiment(
        config.scenario,
        experiment.swept_parameter,
        experiment.values,
        estimators=experiment.estimators,
        n_realizations=experiment.n_realizations,
        seed=experiment.seed,
        threshold_grid=experiment.threshold_grid.to_array(),
        threads=args.threads,
        solver_options=config.solver,
    )
    out = args.out if args.out else Path(config.output.path)
    result.to_csv(out)
    print(f"sweep written to {out}")
    if config.output.json_path:
        result.to_json(config.output.json_path)
        print(f"JSON mirror written to {config.output.json_path}")
    for c in result.cells:
        print(
            f"{c.parameter}={c.value:g} {c.estimator}: "
            f"error {c.error_prob:.4f} at threshold {c.threshold:g}"
        )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "validate-prior": _cmd_validate_prior,
        "detect-single": _cmd_detect_single,
        "sweep": _cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except ContractViolationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
