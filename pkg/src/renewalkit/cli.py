"""Command-line front end: forward runs, inversion, IBM batches, data prep.

Every subcommand writes a JSON manifest next to its outputs recording
the fully resolved configuration; feeding that manifest back through
``--config`` reproduces the outputs bit-identically (the IBM included,
via its seed).

Config files are flat ``key = value`` text ('#' starts a comment); any
flag given on the command line overrides the config value.  Exit codes
are stable for scripting: 0 success, 2 usage error, 3 data error,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .data_bridge import (
    align_cluster,
    incidence_from_cumulative,
    read_case_csv,
    read_cluster_csv,
    regularize,
)
from .errors import ConfigError, DataError, NumericsError
from .forward import (
    MODE_DAILY,
    MODE_FLOW,
    CohortSet,
    IncidenceSeries,
    day_binned,
    read_incidence_csv,
    solve_continuous,
    solve_discrete,
    write_incidence_csv,
)
from .ibm import IbmConfig, run_many, summarize_runs, write_batch_csv, write_batch_json, write_run_csv
from .inverse import reconstruct_continuous, reconstruct_discrete
from .kernel import daily_r0, kernel_from_config, kernel_to_config, resolve_kernel

TOOL = "renewalkit"


# ---------------------------------------------------------------------------
# config files and manifests
# ---------------------------------------------------------------------------

def load_config(path) -> dict[str, str]:
    """Flat key=value text, or a manifest JSON (its resolved_config is used)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        resolved = data.get("resolved_config", data)
        return {str(k): str(v) for k, v in resolved.items()}
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected `key = value`, got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


class _Resolver:
    """Merge CLI flags over config-file values."""

    def __init__(self, args: argparse.Namespace) -> None:
        self.config = load_config(args.config) if args.config else {}
        self.args = args
        self.resolved: dict[str, str] = {}

    def get(self, name: str, default=None, cast=str, required: bool = False):
        attr = name.replace("-", "_")
        if attr == "in":  # argparse dest avoids the keyword
            attr = "in_"
        cli_value = getattr(self.args, attr, None)
        if cli_value is not None and cli_value is not False:
            value = cli_value
        elif name in self.config:
            raw = self.config[name]
            value = _parse_bool(raw) if cast is bool else cast(raw)
        else:
            value = default
        if value is None and required:
            raise ConfigError(f"missing required option --{name}")
        if value is not None:
            self.resolved[name] = str(value)
        return value

    def get_list(self, name: str, cast=float) -> list:
        cli_value = getattr(self.args, name.replace("-", "_"), None)
        if cli_value:
            values = [cast(v) for v in cli_value]
        elif name in self.config:
            raw = self.config[name].replace(",", " ").split()
            values = [cast(v) for v in raw]
        else:
            values = []
        if values:
            self.resolved[name] = ",".join(str(v) for v in values)
        return values


def write_manifest(
    path: Path,
    subcommand: str,
    resolved: dict[str, str],
    inputs: list[str],
    outputs: list[str],
    started: float,
) -> None:
    payload = {
        "tool": TOOL,
        "version": __version__,
        "subcommand": subcommand,
        "resolved_config": resolved,
        "inputs": inputs,
        "outputs": outputs,
        "duration_seconds": time.perf_counter() - started,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    with open(path, "w") as handle:
        json.dump(payload, handle, indent=2)
        handle.write("\n")


def _resolve_kernel_arg(spec: str):
    if spec in ("example1", "example2"):
        return resolve_kernel(spec), {"kernel": spec}
    kernel = kernel_from_config(load_config(spec))
    return kernel, kernel_to_config(kernel)


def _manifest_path(res: _Resolver, default: Path) -> Path:
    explicit = res.get("manifest")
    return Path(explicit) if explicit else default


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_forward(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    res = _Resolver(args)
    kernel_spec = res.get("kernel", required=True)
    kernel, kernel_cfg = _resolve_kernel_arg(kernel_spec)
    res.resolved.update(kernel_cfg)

    i0 = res.get("i0", cast=float, required=True)
    if i0 <= 0:
        raise ConfigError(f"--i0 must be positive, got {i0}")
    horizon = res.get("horizon", default=100.0, cast=float)
    discrete = res.get("discrete", default=False, cast=bool)
    out = Path(res.get("out", default="trajectory.csv"))

    if discrete:
        r0_seq = daily_r0(kernel)
        series = solve_discrete(r0_seq, i0, int(round(horizon)))
        cum = np.cumsum(series.values)
        with open(out, "w", newline="") as handle:
            handle.write("t,N,S,cumulative\n")
            for d, (n, c) in enumerate(zip(series.values, cum)):
                s = kernel.s0 - (c - n)  # depletion excludes the current day
                handle.write(f"{float(d):.6f},{n!r},{s!r},{c!r}\n")
        negative = None
    else:
        dt = res.get("dt", default=0.05, cast=float)
        trajectory = solve_continuous(kernel, CohortSet.single(i0), horizon, dt)
        trajectory.to_csv(out)
        negative = trajectory.first_negative_time()

    if negative is not None:
        print(f"warning: negative incidence from t = {negative:.6f}", file=sys.stderr)
    manifest = _manifest_path(res, out.with_suffix(out.suffix + ".manifest.json"))
    write_manifest(manifest, "forward", res.resolved, [], [str(out)], started)
    print(f"wrote {out}")
    return 0


def cmd_inverse(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    res = _Resolver(args)
    in_path = res.get("in", required=True)
    i0_values = res.get_list("i0", cast=float)
    if not i0_values:
        raise ConfigError("at least one --i0 is required")
    discrete = res.get("discrete", default=False, cast=bool)
    out_prefix = res.get("out", default="r0")
    res.resolved["out"] = out_prefix

    series = read_incidence_csv(in_path, mode=MODE_DAILY if discrete else MODE_FLOW)
    outputs: list[str] = []
    for i0 in i0_values:
        if i0 <= 0:
            raise ConfigError(f"--i0 must be positive, got {i0}")
        if discrete:
            result = reconstruct_discrete(series, i0)
        else:
            result = reconstruct_continuous(series, i0)
        tag = f"{i0:g}".replace(".", "p")
        csv_path = Path(f"{out_prefix}_i0{tag}.csv")
        json_path = Path(f"{out_prefix}_i0{tag}.json")
        result.to_csv(csv_path)
        result.to_json(json_path)
        outputs += [str(csv_path), str(json_path)]
        if result.first_negative_age is not None:
            print(
                f"warning: I0={i0:g} turns negative at age {result.first_negative_age:.6f} "
                f"({result.n_negative} nodes)",
                file=sys.stderr,
            )
    manifest = _manifest_path(res, Path(f"{out_prefix}.manifest.json"))
    write_manifest(manifest, "inverse", res.resolved, [str(in_path)], outputs, started)
    print(f"wrote {len(outputs)} files under {out_prefix}*")
    return 0


def cmd_ibm(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    res = _Resolver(args)
    kernel_spec = res.get("kernel", required=True)
    kernel, kernel_cfg = _resolve_kernel_arg(kernel_spec)
    res.resolved.update(kernel_cfg)

    i0 = res.get("i0", default=1, cast=int)
    s0 = res.get("s0", default=10_000_000, cast=int)
    runs = res.get("runs", default=500, cast=int)
    seed = res.get("seed", default=0, cast=int)
    dt = res.get("dt", default=0.25, cast=float)
    horizon = res.get("horizon", default=100.0, cast=float)
    jobs = res.get("jobs", default=1, cast=int)
    dump_dir = res.get("dump-runs")
    out_prefix = res.get("out", default="ibm")
    res.resolved["out"] = out_prefix

    config = IbmConfig(s0=s0, i0=i0, kernel=kernel, dt=dt, horizon=horizon, seed=seed)
    results = run_many(config, runs, seed, n_jobs=jobs)
    summary = summarize_runs(results, base_seed=seed)

    daily_path = Path(f"{out_prefix}.daily.csv")
    cumulative_path = Path(f"{out_prefix}.cumulative.csv")
    json_path = Path(f"{out_prefix}.json")
    write_batch_csv(summary, daily_path, which="daily")
    write_batch_csv(summary, cumulative_path, which="cumulative")
    write_batch_json(summary, json_path)
    outputs = [str(daily_path), str(cumulative_path), str(json_path)]

    if dump_dir:
        dump = Path(dump_dir)
        dump.mkdir(parents=True, exist_ok=True)
        for result in results:
            run_path = dump / f"run_{result.seed}.csv"
            write_run_csv(result, run_path)
            outputs.append(str(run_path))

    manifest = _manifest_path(res, Path(f"{out_prefix}.manifest.json"))
    write_manifest(manifest, "ibm", res.resolved, [], outputs, started)
    print(f"wrote {daily_path}, {cumulative_path}, {json_path}")
    return 0


def cmd_dataprep(args: argparse.Namespace) -> int:
    started = time.perf_counter()
    res = _Resolver(args)
    in_path = res.get("in", required=True)
    out = Path(res.get("out", default="prepared.csv"))
    align = res.get("align-cluster", default=False, cast=bool)
    regularize_spec = res.get("regularize")

    if align and regularize_spec:
        raise ConfigError("--align-cluster and --regularize are mutually exclusive")

    if align:
        incubation = res.get("incubation", cast=float, required=True)
        records = read_cluster_csv(in_path)
        series = align_cluster(records, incubation)
        write_incidence_csv(series, out)
    elif regularize_spec:
        method, sigma = _parse_regularize(regularize_spec)
        kind, data = read_case_csv(in_path)
        if kind != "daily":
            raise DataError("--regularize expects a `date,daily` input file")
        series = regularize(data, method, sigma=sigma)
        write_incidence_csv(series, out)
    else:
        nu = res.get("nu", cast=float, required=True)
        f = res.get("f", default=1.0, cast=float)
        kind, data = read_case_csv(in_path, f=f)
        if kind != "cumulative":
            raise DataError("cumulative-to-incidence needs a `date,cumulative` input file")
        i0, series = incidence_from_cumulative(data, nu)
        write_incidence_csv(series, out)
        res.resolved["estimated_i0"] = repr(float(i0))
        print(f"estimated I0 = {i0:.6g}")
        bad = np.nonzero(series.values < 0.0)[0]
        if len(bad):
            print(
                f"warning: incidence negative at {len(bad)} nodes "
                f"(first at t = {series.times[bad[0]]:.6f})",
                file=sys.stderr,
            )

    manifest = _manifest_path(res, out.with_suffix(out.suffix + ".manifest.json"))
    write_manifest(manifest, "dataprep", res.resolved, [str(in_path)], [str(out)], started)
    print(f"wrote {out}")
    return 0


def _parse_regularize(spec: str) -> tuple[str, float | None]:
    lowered = spec.strip().lower().replace("-", "_")
    if lowered == "step":
        return "step", None
    if lowered == "rolling_weekly":
        return "rolling_weekly", None
    if lowered.startswith("gaussian"):
        _, _, sigma_text = lowered.partition(":")
        if not sigma_text:
            raise ConfigError("gaussian regularization needs a width: gaussian:SIGMA")
        try:
            return "gaussian", float(sigma_text)
        except ValueError:
            raise ConfigError(f"bad gaussian width {sigma_text!r}") from None
    raise ConfigError(
        f"unknown regularization {spec!r}; choose step, gaussian:SIGMA or rolling-weekly"
    )


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="flat key=value config file or a manifest JSON")
    sub.add_argument("--manifest", help="where to write the run manifest")
    sub.add_argument("--out", help="output path or prefix")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=TOOL,
        description="Epidemic renewal-equation toolkit: forward runs, R0(a) "
        "reconstruction, stochastic batches and data preparation.",
    )
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    forward = commands.add_parser("forward", help="simulate the epidemic forward")
    _add_common(forward)
    forward.add_argument("--kernel", help="example1, example2, or a kernel config file")
    forward.add_argument("--i0", type=float, help="initial cohort size")
    forward.add_argument("--dt", type=float, help="time step in days (continuous mode)")
    forward.add_argument("--horizon", type=float, help="simulation length in days")
    forward.add_argument("--discrete", action="store_true", help="run the day-by-day model")
    forward.set_defaults(func=cmd_forward)

    inverse = commands.add_parser("inverse", help="reconstruct R0(a) from incidence")
    _add_common(inverse)
    inverse.add_argument("--in", dest="in_", help="incidence CSV with t,N columns")
    inverse.add_argument(
        "--i0", action="append", help="initial cohort size (repeatable)", metavar="I0"
    )
    inverse.add_argument("--discrete", action="store_true", help="treat input as daily counts")
    inverse.set_defaults(func=cmd_inverse)

    ibm = commands.add_parser("ibm", help="stochastic individual-based batches")
    _add_common(ibm)
    ibm.add_argument("--kernel", help="example1, example2, or a kernel config file")
    ibm.add_argument("--i0", type=int, help="initial infected count")
    ibm.add_argument("--s0", type=int, help="initial susceptible count")
    ibm.add_argument("--runs", type=int, help="number of runs")
    ibm.add_argument("--seed", type=int, help="base seed; run k uses seed+k")
    ibm.add_argument("--dt", type=float, help="age-update tick in days")
    ibm.add_argument("--horizon", type=float, help="simulation length in days")
    ibm.add_argument("--jobs", type=int, help="worker processes for the batch")
    ibm.add_argument("--dump-runs", help="directory for one raw CSV per seed")
    ibm.set_defaults(func=cmd_ibm)

    dataprep = commands.add_parser("dataprep", help="case data to model inputs")
    _add_common(dataprep)
    dataprep.add_argument("--in", dest="in_", help="input CSV")
    dataprep.add_argument("--nu", type=float, help="exit rate (cumulative input)")
    dataprep.add_argument("--f", type=float, help="reporting fraction (cumulative input)")
    dataprep.add_argument(
        "--regularize", help="step, gaussian:SIGMA or rolling-weekly (daily input)"
    )
    dataprep.add_argument("--align-cluster", action="store_true", help="merge traced clusters")
    dataprep.add_argument("--incubation", type=float, help="incubation period in days")
    dataprep.set_defaults(func=cmd_dataprep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"{TOOL}: usage error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"{TOOL}: data error: {exc}", file=sys.stderr)
        return 3
    except NumericsError as exc:
        print(f"{TOOL}: numerical failure: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"{TOOL}: data error: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"{TOOL}: usage error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
