"""Command line runner for the simulation studies and the perturbation checks.

Every subcommand reads an optional ``key=value`` file given by ``--config``;
flags given on the command line override it. Outputs go to ``--output-dir``,
defaulting to ``$EXTREMAL_KPCA_OUTPUT_DIR`` and then ``./extremal_kpca_out``.

Exit status is 0 on success, 1 on a configuration error and 2 on a runtime
failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .extremes import extract_extremes
from .generators import (
    DEFAULT_LOADINGS,
    DEFAULT_SPIKE,
    ArchSpec,
    FactorModelSpec,
    SpikedModelSpec,
    gen_arch_pairs,
    gen_circle_model,
    gen_contaminated_lfm,
    gen_spiked_angular_gaussian,
    make_rng,
)
from .kernels import KernelSpec
from .kpca import fit_kpca
from .plots import MAX_SCATTER_DIM, scatter_matrix_svg, scree_svg
from .preimage import PgdSettings, batch_preimages
from .stats import (
    arch_spectral_density,
    kde_gaussian,
    local_maxima,
    scree_components,
    scree_data,
)
from .theory import davis_kahan_replicate, default_ranks, rate_check

log = logging.getLogger("extremal_kpca")

ENV_OUTPUT_DIR = "EXTREMAL_KPCA_OUTPUT_DIR"
SCHEMA_VERSION = 1
MODELS = ("lfm", "spiked", "circle", "arch")
DEFAULT_SIGMA = {"lfm": 1.0, "spiked": 0.1, "circle": 2.0, "arch": 0.0}
SCREE_TOP = 20
DENSITY_POINTS = 200
ARCH_MC_DRAWS = 200_000


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass
class ExperimentConfig:
    model: str = "lfm"
    n: int = 10_000
    extremes: int = 200
    kernel: str = "gaussian"
    gamma: float = 1.0
    m: str = "auto-scree"
    seed: int = 0
    output_dir: str = ""
    sigma: float | None = None
    sigma0: float = 1.0
    alpha: float = 1.0
    factor_law: str = "frechet"
    loadings: str = ""
    burn_in: int = 1000
    max_iter: int = 500
    tol: float = 1e-8
    step_rule: str = "lipschitz"
    n_jobs: int = 1
    replicates: int = 20
    u_grid: str = ""
    ranks: str = ""
    expected_slope: float | None = None
    input: str = ""
    extra: dict = field(default_factory=dict)


FIELD_TYPES = {
    "n": int, "extremes": int, "seed": int, "burn_in": int, "max_iter": int, "n_jobs": int,
    "replicates": int, "gamma": float, "sigma": float, "sigma0": float, "alpha": float,
    "tol": float, "expected_slope": float,
}


def _coerce(key, value):
    kind = FIELD_TYPES.get(key, str)
    try:
        return kind(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key}: expected {kind.__name__}, got {value!r}") from None


def read_config_file(path) -> dict:
    """Parse ``key=value`` lines; blank lines and ``#`` comments are skipped."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}") from None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def build_config(file_values: dict, flag_values: dict) -> ExperimentConfig:
    known = set(ExperimentConfig.__dataclass_fields__) - {"extra"}
    merged = {**file_values, **{k: v for k, v in flag_values.items() if v is not None}}
    unknown = sorted(set(merged) - known)
    if unknown:
        raise ConfigError(f"unknown configuration field(s): {', '.join(unknown)}")
    cfg = ExperimentConfig(**{k: _coerce(k, v) for k, v in merged.items()})
    if not cfg.output_dir:
        cfg.output_dir = os.environ.get(ENV_OUTPUT_DIR, "extremal_kpca_out")
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig):
    if cfg.model not in MODELS:
        raise ConfigError(f"model: expected one of {MODELS}, got {cfg.model!r}")
    for name in ("n", "extremes", "max_iter", "n_jobs", "replicates"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name}: must be positive, got {getattr(cfg, name)}")
    for name in ("gamma", "alpha", "tol"):
        if not getattr(cfg, name) > 0:
            raise ConfigError(f"{name}: must be > 0, got {getattr(cfg, name)}")
    if cfg.sigma is not None and cfg.sigma < 0:
        raise ConfigError(f"sigma: must be >= 0, got {cfg.sigma}")
    if cfg.sigma0 < 0:
        raise ConfigError(f"sigma0: must be >= 0, got {cfg.sigma0}")
    if cfg.extremes > cfg.n:
        raise ConfigError(f"extremes: {cfg.extremes} exceeds n={cfg.n}")
    if cfg.m != "auto-scree":
        try:
            m = int(cfg.m)
        except ValueError:
            raise ConfigError(f"m: expected an integer or 'auto-scree', got {cfg.m!r}") from None
        if not 1 <= m <= cfg.extremes:
            raise ConfigError(f"m: must lie in [1, extremes={cfg.extremes}], got {m}")
    try:
        KernelSpec(cfg.kernel, cfg.gamma)
    except ValueError as exc:
        raise ConfigError(f"kernel: {exc}") from None
    try:
        PgdSettings(cfg.max_iter, cfg.tol, cfg.step_rule)
    except ValueError as exc:
        raise ConfigError(f"step_rule: {exc}") from None


def _parse_matrix(text, name):
    try:
        rows = [[float(v) for v in row.split(",")] for row in text.split(";")]
        return np.array(rows)
    except ValueError:
        raise ConfigError(f"{name}: expected rows separated by ';' and entries by ',', got {text!r}") from None


def _parse_list(text, name, kind=float):
    try:
        return [kind(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"{name}: expected a comma-separated list, got {text!r}") from None


def _factor_spec(cfg: ExperimentConfig, sigma):
    A = _parse_matrix(cfg.loadings, "loadings") if cfg.loadings else DEFAULT_LOADINGS
    try:
        return FactorModelSpec(A, cfg.alpha, 1.0, cfg.factor_law, sigma)
    except ValueError as exc:
        raise ConfigError(f"loadings/alpha/factor_law: {exc}") from None


# ---------------------------------------------------------------- output


def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".12g")
    return str(x)


def write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_run_record(out: Path, command, cfg: ExperimentConfig, outputs, extra=None):
    record = {
        "command": command,
        "version": __version__,
        "schema_version": SCHEMA_VERSION,
        "seed": cfg.seed,
        "rng": "numpy PCG64",
        "config": {k: v for k, v in asdict(cfg).items() if k not in ("extra", "output_dir")},
        "outputs": sorted(outputs),
    }
    if extra:
        record.update(extra)
    (out / "run.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def _output_dir(cfg) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- data


def generate_data(cfg: ExperimentConfig):
    """Simulate the configured model; returns (points, labels or None)."""
    rng = make_rng(cfg.seed)
    sigma = DEFAULT_SIGMA[cfg.model] if cfg.sigma is None else cfg.sigma
    if cfg.model == "lfm":
        sample = gen_contaminated_lfm(_factor_spec(cfg, sigma), cfg.n, rng)
    elif cfg.model == "spiked":
        B = _parse_matrix(cfg.loadings, "loadings") if cfg.loadings else DEFAULT_SPIKE
        sample = gen_spiked_angular_gaussian(SpikedModelSpec(B, cfg.sigma0, sigma), cfg.n, rng)
    elif cfg.model == "circle":
        sample = gen_circle_model(sigma, cfg.n, rng)
    else:
        return gen_arch_pairs(ArchSpec(cfg.n, cfg.burn_in), rng), None
    return sample.points, sample.labels


def load_input(path):
    """Read a CSV with a header; a ``label`` column is kept as labels, the rest are coordinates."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise ConfigError(f"input: cannot read {path}: {exc.strerror}") from None
    if len(rows) < 2:
        raise ConfigError(f"input: {path} has no data rows")
    header = [h.strip() for h in rows[0]]
    label_col = header.index("label") if "label" in header else None
    skip = {label_col, header.index("index") if "index" in header else None}
    coords = [i for i in range(len(header)) if i not in skip]
    try:
        X = np.array([[float(r[i]) for i in coords] for r in rows[1:]])
    except (ValueError, IndexError):
        raise ConfigError(f"input: {path} has a non-numeric or missing coordinate") from None
    labels = np.array([r[label_col] for r in rows[1:]]) if label_col is not None else None
    return X, labels


def _data(cfg):
    if cfg.input:
        return load_input(cfg.input)
    return generate_data(cfg)


# ---------------------------------------------------------------- commands


def run_generate(cfg: ExperimentConfig):
    out = _output_dir(cfg)
    X, labels = generate_data(cfg)
    d = X.shape[1]
    lab = labels if labels is not None else np.full(len(X), "na")
    write_csv(out / "data.csv", ["index", "label", *[f"x{j + 1}" for j in range(d)]],
              ([i, lab[i], *X[i]] for i in range(len(X))))
    write_run_record(out, "generate", cfg, ["data.csv"])
    return out


def _fit(cfg, X, labels):
    sample = extract_extremes(X, top_k=min(cfg.extremes, len(X)), labels=labels)
    spec = KernelSpec(cfg.kernel, cfg.gamma)
    model = fit_kpca(spec, sample.angles, 1)
    if cfg.m == "auto-scree":
        m = scree_components(model.eigenpairs.eigenvalues)
    else:
        m = int(cfg.m)
        if m > model.n:
            raise ConfigError(f"m: {m} exceeds the number of extremes {model.n}")
    return sample, model.with_rank(m)


def _write_extremes(out, sample):
    d = sample.dim
    labels = sample.labels if sample.labels is not None else np.full(len(sample), "na")
    write_csv(out / "extremes.csv", ["source_index", "label", "radius", *[f"y{j + 1}" for j in range(d)]],
              ([sample.source_indices[i], labels[i], sample.radii[i], *sample.angles[i]] for i in range(len(sample))))


def _write_scree(out, model):
    scree = scree_data(model.eigenpairs, min(SCREE_TOP, model.n))
    write_csv(out / "scree.csv", ["index", "eigenvalue"], scree)
    (out / "scree.svg").write_text(scree_svg(scree))


def _write_preimages(out, cfg, sample, model):
    settings = PgdSettings(cfg.max_iter, cfg.tol, cfg.step_rule)
    results, errors = batch_preimages(model, sample.angles, settings, n_jobs=cfg.n_jobs)
    if errors:
        i, exc = errors[0]
        raise RuntimeError(f"preimage of extreme {i} failed: {exc}")
    d = sample.dim
    write_csv(out / "preimages.csv",
              ["source_index", *[f"p{j + 1}" for j in range(d)], "iterations", "converged", "objective"],
              ([sample.source_indices[i], *r.preimage, r.iterations, r.converged, r.final_objective]
               for i, r in enumerate(results)))
    pre = np.vstack([r.preimage for r in results])
    written = ["preimages.csv"]
    if d <= MAX_SCATTER_DIM:
        (out / "scatter.svg").write_text(scatter_matrix_svg(sample.angles, sample.labels, overlay=pre))
        written.append("scatter.svg")
    return written, sum(r.converged for r in results)


def run_kpca(cfg: ExperimentConfig):
    out = _output_dir(cfg)
    X, labels = _data(cfg)
    sample, model = _fit(cfg, X, labels)
    _write_extremes(out, sample)
    _write_scree(out, model)
    write_run_record(out, "kpca", cfg, ["extremes.csv", "scree.csv", "scree.svg"], {"m": model.m})
    return out


def run_preimage(cfg: ExperimentConfig):
    out = _output_dir(cfg)
    X, labels = _data(cfg)
    sample, model = _fit(cfg, X, labels)
    _write_extremes(out, sample)
    _write_scree(out, model)
    written, converged = _write_preimages(out, cfg, sample, model)
    write_run_record(out, "preimage", cfg, ["extremes.csv", "scree.csv", "scree.svg", *written],
                     {"m": model.m, "converged": int(converged)})
    return out


def arch_density_rows(sample, cfg):
    """Grid, empirical and Monte Carlo angle densities of the ARCH extremes on (0, pi/2)."""
    grid = np.linspace(0.0, np.pi / 2, DENSITY_POINTS + 2)[1:-1]
    angles = np.arctan2(sample.angles[:, 1], sample.angles[:, 0])
    empirical = kde_gaussian(angles, grid)
    theoretical = arch_spectral_density(ARCH_MC_DRAWS, grid, make_rng(cfg.seed + 1))
    return grid, empirical, theoretical


def run_experiment(cfg: ExperimentConfig):
    """Simulate, extract, fit, solve preimages and write every table and plot."""
    out = _output_dir(cfg)
    X, labels = _data(cfg)
    sample, model = _fit(cfg, X, labels)
    _write_extremes(out, sample)
    _write_scree(out, model)
    written, converged = _write_preimages(out, cfg, sample, model)
    written += ["extremes.csv", "scree.csv", "scree.svg"]
    extra = {"m": model.m, "converged": int(converged), "n_extremes": len(sample)}
    if cfg.model == "arch" and not cfg.input:
        grid, emp, theo = arch_density_rows(sample, cfg)
        write_csv(out / "angle_density.csv", ["grid", "empirical_density", "theoretical_density"],
                  zip(grid, emp.density, theo.density))
        written.append("angle_density.csv")
        extra["empirical_modes"] = len(local_maxima(emp))
        extra["theoretical_modes"] = len(local_maxima(theo))
    write_run_record(out, "experiment", cfg, written, extra)
    return out


def run_rate_validation(cfg: ExperimentConfig):
    out = _output_dir(cfg)
    model = _factor_spec(cfg, 0.0 if cfg.sigma is None else cfg.sigma)
    kernel = KernelSpec(cfg.kernel, cfg.gamma)
    grid = _parse_list(cfg.u_grid, "u_grid") if cfg.u_grid else None
    if grid is not None and (len(grid) < 4 or np.any(np.diff(grid) <= 0) or min(grid) <= 0):
        raise ConfigError(f"u_grid: need at least 4 strictly increasing positive values, got {cfg.u_grid!r}")
    ranks = _parse_list(cfg.ranks, "ranks", int) if cfg.ranks else list(default_ranks(cfg.n, model.alpha))
    if grid is None and (len(ranks) < 4 or any(r < 1 or r >= cfg.n for r in ranks)):
        raise ConfigError(f"ranks: need at least 4 values in [1, n), got {cfg.ranks!r}")
    try:
        check = rate_check(model, kernel, cfg.n, grid, cfg.replicates, cfg.seed, ranks=ranks,
                           expected_slope=cfg.expected_slope, n_jobs=cfg.n_jobs)
    except ValueError as exc:
        if "regime boundary" in str(exc):
            raise ConfigError(f"expected_slope: {exc}") from None
        raise
    rows = []
    for r in range(check.replicates):
        for i, u in enumerate(check.u_grid):
            rows.append([u, r, check.frobenius[r, i], check.scaled[r, i]])
    write_csv(out / "rates.csv", ["u", "replicate", "frobenius", "scaled_statistic"], rows)
    write_csv(out / "summary.csv", ["regime", "expected_slope", "fitted_slope", "median_ratio", "pass"],
              [[check.regime, check.expected_slope, check.fitted_slope, check.median_ratio, check.passed]])
    write_run_record(out, "rates", cfg, ["rates.csv", "summary.csv"], {"warnings": list(check.warnings)})
    return out


def run_davis_kahan(cfg: ExperimentConfig):
    out = _output_dir(cfg)
    model = _factor_spec(cfg, 0.0 if cfg.sigma is None else cfg.sigma)
    kernel = KernelSpec(cfg.kernel, cfg.gamma)
    m = 2 if cfg.m == "auto-scree" else int(cfg.m)
    rows = []
    for r in range(cfg.replicates):
        check = davis_kahan_replicate(model, kernel, cfg.n, cfg.extremes, m, make_rng(cfg.seed + r))
        sat = "n/a" if check.satisfied is None else check.satisfied
        bound = "n/a" if check.satisfied is None else check.bound
        rows.append([r, bound, check.residual, sat])
    write_csv(out / "dk.csv", ["replicate", "bound", "aligned_residual", "satisfied"], rows)
    write_run_record(out, "davis-kahan", cfg, ["dk.csv"])
    return out


COMMANDS = {
    "generate": run_generate,
    "kpca": run_kpca,
    "preimage": run_preimage,
    "experiment": run_experiment,
    "rates": run_rate_validation,
    "davis-kahan": run_davis_kahan,
    "arch-demo": run_experiment,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="extremal-kpca", description="Kernel PCA preimages for extremes.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value configuration file")
        p.add_argument("--output-dir", dest="output_dir")
        p.add_argument("--model", choices=MODELS)
        p.add_argument("--n", type=str)
        p.add_argument("--extremes", type=str, help="number of largest-norm observations")
        p.add_argument("--kernel")
        p.add_argument("--gamma", type=str)
        p.add_argument("--m", help="retained components or 'auto-scree'")
        p.add_argument("--seed", type=str)
        p.add_argument("--sigma", type=str)
        p.add_argument("--sigma0", type=str)
        p.add_argument("--alpha", type=str)
        p.add_argument("--factor-law", dest="factor_law")
        p.add_argument("--loadings", help="matrix rows separated by ';', entries by ','")
        p.add_argument("--burn-in", dest="burn_in", type=str)
        p.add_argument("--max-iter", dest="max_iter", type=str)
        p.add_argument("--tol", type=str)
        p.add_argument("--step-rule", dest="step_rule")
        p.add_argument("--n-jobs", dest="n_jobs", type=str)
        p.add_argument("--replicates", type=str)
        p.add_argument("--u-grid", dest="u_grid", help="comma-separated increasing thresholds")
        p.add_argument("--ranks", help="comma-separated exceedance counts; default top 1%% to top 0.1%% "
                                       "of n, or top 0.1%% to top 0.01%% when alpha < 2")
        p.add_argument("--expected-slope", dest="expected_slope", type=str)
        p.add_argument("--input", help="CSV of observations instead of simulating")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
        flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
        file_values = read_config_file(args.config) if args.config else {}
        if args.command == "arch-demo":
            file_values["model"] = "arch"
            flags["model"] = "arch"
        cfg = build_config(file_values, flags)
        out = COMMANDS[args.command](cfg)
    except ConfigError as exc:
        log.error("%s", exc)
        return 1
    except Exception as exc:  # noqa: BLE001 - any runtime failure maps to exit status 2
        log.error("%s: %s", type(exc).__name__, exc)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
