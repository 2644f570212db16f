"""Command-line front end: configure, run, and export experiments as CSV."""

import argparse
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .environments import EnvConfig, make_oracle
from .harness import run_game, tune_eta_firstorder, tune_eta_sparse, tune_eta_worstcase
from .mirror_descent import LearnerConfig

SEED_ENV_VAR = "BANDIT_PCA_SEED"


class UsageError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    scheme: str
    env_kind: str
    d: int
    horizon: int
    seed: int
    tune: str  # worstcase | sparse | firstorder | manual
    out: str
    r: float | None = None
    lstar: float | None = None
    eta: float | None = None
    gamma: float | None = None
    epsilon: float | None = None
    env_rank: int | None = None
    psd_profile: np.ndarray | None = None
    static_diag: np.ndarray | None = None
    input_path: str | None = None
    sweep: list = field(default_factory=list)  # (d, T) pairs
    allow_unbounded: bool = False
    probe_variance: bool = False
    timing: bool = True
    preset: str | None = None
    workers: int = 1


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="banditpca",
        description="Run a bandit online-PCA experiment and write per-trial telemetry to CSV.",
    )
    p.add_argument("--scheme", choices=["dense", "sparse"], required=True)
    p.add_argument("--env", choices=["rank1", "psd", "spiked", "static"], required=True)
    p.add_argument("--d", type=int, help="problem dimension")
    p.add_argument("--T", type=int, help="number of trials")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tune", choices=["worstcase", "sparse", "firstorder"])
    p.add_argument("--r", type=float, help="mean squared Frobenius-norm bound for sparse tuning")
    p.add_argument("--Lstar", type=float, help="comparator cumulative-loss bound for firstorder tuning")
    p.add_argument("--eta", type=float, help="manual learning rate")
    p.add_argument("--gamma", type=float, help="manual exploration rate")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--epsilon", type=float, help="spike strength for the spiked environment")
    p.add_argument("--env-rank", type=int, help="rank cap for the psd environment")
    p.add_argument("--psd-profile", help="comma-separated eigenvalue profile for the psd environment")
    p.add_argument("--static-diag", help="comma-separated diagonal for the static environment")
    p.add_argument("--input", help="vector file for the rank1 environment")
    p.add_argument("--sweep", help="comma-separated d:T pairs, one run and one file each")
    p.add_argument("--preset", choices=["regret-sweep", "timing"])
    p.add_argument("--allow-unbounded", action="store_true")
    p.add_argument("--probe-variance", action="store_true")
    p.add_argument(
        "--no-timing",
        action="store_true",
        help="record zeros for all wallclock fields (makes repeated runs byte-identical)",
    )
    p.add_argument("--workers", type=int, default=1, help="parallel worker slots for sweeps")
    return p


def _parse_floats(text: str, flag: str) -> np.ndarray:
    try:
        return np.array([float(x) for x in text.split(",") if x.strip() != ""])
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}") from None


def _parse_sweep(text: str) -> list:
    pairs = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        try:
            ds, ts = item.split(":")
            pairs.append((int(ds), int(ts)))
        except ValueError:
            raise UsageError(f"--sweep expects d:T pairs, got {item!r}") from None
    if not pairs or any(d <= 0 or t < 0 for d, t in pairs):
        raise UsageError("--sweep entries must be positive d:T pairs")
    return pairs


def parse_args(argv) -> ExperimentSpec:
    args = _build_parser().parse_args(argv)

    manual = args.eta is not None or args.gamma is not None
    if manual and args.tune is not None:
        raise UsageError("pass either --tune or manual --eta/--gamma, not both")
    if manual and (args.eta is None or args.gamma is None):
        raise UsageError("manual tuning needs both --eta and --gamma")
    tune = "manual" if manual else (args.tune or ("sparse" if args.scheme == "sparse" else "worstcase"))
    if tune == "sparse" and args.r is None:
        raise UsageError("--tune sparse needs --r")
    if tune == "firstorder" and args.Lstar is None:
        raise UsageError("--tune firstorder needs --Lstar")
    if manual and args.eta <= 0:
        raise UsageError("--eta must be positive")

    if args.env == "spiked" and not args.allow_unbounded:
        raise UsageError(
            "the spiked environment has unbounded spectral norm, which the "
            "regret guarantees assume away; pass --allow-unbounded to run it"
        )

    preset = args.preset
    d = args.d
    horizon = args.T
    sweep = _parse_sweep(args.sweep) if args.sweep else []
    if preset == "regret-sweep":
        if d is None:
            raise UsageError("--preset regret-sweep needs --d")
        if sweep:
            raise UsageError("--preset regret-sweep already defines the sweep")
        sweep = [(d, 2**k) for k in range(8, 17)]
        horizon = horizon if horizon is not None else sweep[-1][1]
    elif preset == "timing":
        if sweep:
            raise UsageError("--preset timing already defines the sweep")
        sweep = [(256, 1000), (1024, 1000)]
        d = d if d is not None else 256
        horizon = horizon if horizon is not None else 1000
    if d is None or horizon is None:
        raise UsageError("--d and --T are required")
    if d < 2 or horizon < 0:
        raise UsageError("need --d >= 2 and --T >= 0")
    if args.out is None:
        raise UsageError("--out is required")
    if args.workers < 1:
        raise UsageError("--workers must be at least 1")

    seed = args.seed
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        try:
            seed = int(env_seed)
        except ValueError:
            raise UsageError(f"{SEED_ENV_VAR}={env_seed!r} is not an integer") from None

    return ExperimentSpec(
        scheme=args.scheme,
        env_kind=args.env,
        d=d,
        horizon=horizon,
        seed=seed,
        tune=tune,
        out=args.out,
        r=args.r,
        lstar=args.Lstar,
        eta=args.eta,
        gamma=args.gamma,
        epsilon=args.epsilon,
        env_rank=args.env_rank,
        psd_profile=_parse_floats(args.psd_profile, "--psd-profile") if args.psd_profile else None,
        static_diag=_parse_floats(args.static_diag, "--static-diag") if args.static_diag else None,
        input_path=args.input,
        sweep=sweep,
        allow_unbounded=args.allow_unbounded,
        probe_variance=args.probe_variance,
        timing=not args.no_timing,
        preset=preset,
        workers=args.workers,
    )


def _tuning(spec: ExperimentSpec, d: int, horizon: int) -> tuple[float, float]:
    if spec.tune == "manual":
        return spec.eta, spec.gamma
    if spec.tune == "worstcase":
        return tune_eta_worstcase(d, horizon)
    if spec.tune == "sparse":
        return tune_eta_sparse(d, horizon, spec.r)
    if spec.tune == "firstorder":
        return tune_eta_firstorder(d, horizon, spec.lstar)
    raise UsageError(f"unknown tuning {spec.tune!r}")


def _env_config(spec: ExperimentSpec, d: int, horizon: int) -> EnvConfig:
    if spec.env_kind == "static":
        if spec.static_diag is None:
            raise UsageError("--env static needs --static-diag")
        if spec.static_diag.shape[0] != d:
            raise UsageError(f"--static-diag needs {d} entries, got {spec.static_diag.shape[0]}")
        matrix = np.diag(spec.static_diag)
    else:
        matrix = None
    return EnvConfig(
        kind=spec.env_kind,
        dim=d,
        horizon=horizon,
        seed=spec.seed,
        epsilon=spec.epsilon,
        rank=spec.env_rank,
        path=spec.input_path,
        profile=spec.psd_profile,
        matrix=matrix,
    )


def _fmt(x) -> str:
    if x is None:
        return "NA"
    return format(float(x), ".16e")


def run_single(spec: ExperimentSpec, d: int, horizon: int, path: str) -> None:
    eta, gamma = _tuning(spec, d, horizon)
    oracle = make_oracle(_env_config(spec, d, horizon))
    config = LearnerConfig(eta=eta, gamma=gamma, dim=d, seed=spec.seed)
    result = run_game(
        config,
        spec.scheme,
        oracle,
        horizon,
        allow_unbounded=spec.allow_unbounded,
        probe_variance=spec.probe_variance,
        measure_time=spec.timing,
    )
    emit_csv(result, path)


def emit_csv(result, path: str) -> None:
    """Write one row per trial plus a '#'-commented summary block.

    Numeric fields use 17 significant digits so every value parses back
    exactly; missing figures are written as NA.
    """
    with_probe = any(r.mh_term is not None for r in result.records)
    header = "t,loss,cum_loss,branch,eta,gamma,update_ns"
    if with_probe:
        header += ",mh_term,logdet_term"
    lines = [header]
    cum = 0.0
    for r in result.records:
        cum += r.loss
        row = (
            f"{r.t},{_fmt(r.loss)},{_fmt(cum)},{r.branch},"
            f"{_fmt(r.eta)},{_fmt(r.gamma)},{r.update_ns}"
        )
        if with_probe:
            row += f",{_fmt(r.mh_term)},{_fmt(r.logdet_term)}"
        lines.append(row)
    comparator = (
        result.comparator_realized
        if result.comparator_realized is not None
        else result.comparator_pseudo
    )
    lines.append(f"# regret_realized={_fmt(result.regret_realized)}")
    lines.append(f"# regret_pseudo={_fmt(result.regret_pseudo)}")
    lines.append(f"# comparator={_fmt(comparator)}")
    lines.append(f"# total_runtime_ns={result.total_runtime_ns}")
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise RuntimeError(f"cannot write {path}: {exc}") from exc


def _sweep_path(base: str, d: int, horizon: int) -> str:
    root, ext = os.path.splitext(base)
    return f"{root}_d{d}_T{horizon}{ext or '.csv'}"


def _run_entry(payload):
    spec, d, horizon, path = payload
    run_single(spec, d, horizon, path)
    return path


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        spec = parse_args(argv)
        if spec.sweep:
            jobs = [
                (spec, d, horizon, _sweep_path(spec.out, d, horizon))
                for d, horizon in spec.sweep
            ]
            if spec.workers > 1:
                with ProcessPoolExecutor(max_workers=spec.workers) as pool:
                    for path in pool.map(_run_entry, jobs):
                        print(f"wrote {path}")
            else:
                for job in jobs:
                    print(f"wrote {_run_entry(job)}")
        else:
            run_single(spec, spec.d, spec.horizon, spec.out)
            print(f"wrote {spec.out}")
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:  # argparse rejects unknown flags with code 2
        return int(exc.code or 0)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
