"""Experiment drivers: convergence traces, SE CDFs, antenna sweeps, run-time benches.

Configs are flat ``key = value`` files with dotted section prefixes (sim.*,
solve.*, apg.*, oracle.*, run.*, sweep.*, bench.*); CLI overrides use the same
dotted names. Every CSV starts with one comment line echoing the resolved
config and seed, and floats are written with 17 significant digits so reruns
with the same seed are byte-identical. Realization r uses seed sim.seed + r.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .apg import ApgConfig
from .network import SimParams, realize
from .sinr import build_sinr_terms
from .solver import SolveConfig, SolveResult, alternating_solve


class ConfigError(ValueError):
    """Malformed config file, unknown key, or invalid value."""


class NonConvergenceError(RuntimeError):
    """Raised in strict mode when a solve hits its iteration cap."""


# key -> (type tag, default)
_SCHEMA: dict[str, tuple[str, object]] = {
    "sim.M": ("int", 150),
    "sim.K": ("int", 20),
    "sim.L": ("int", 1),
    "sim.D_km": ("float", 1.0),
    "sim.T_c": ("int", 200),
    "sim.T_p": ("int", 20),
    "sim.zeta_p_watt": ("float", 0.2),
    "sim.zeta_u_watt": ("float", 0.2),
    "sim.sigma_sh_db": ("float", 8.0),
    "sim.bandwidth_hz": ("float", 20e6),
    "sim.noise_figure_db": ("float", 9.0),
    "sim.seed": ("int", 0),
    "sim.wrap_around": ("bool", True),
    "sim.pl_const_db": ("float", 140.7),
    "sim.pl_d0_km": ("float", 0.01),
    "sim.pl_d1_km": ("float", 0.05),
    "solve.outer_tol": ("float", 1e-5),
    "solve.outer_max_iters": ("int", 50),
    "solve.power_solver": ("str", "apg"),
    "apg.tau": ("float", 0.0),  # 0 -> auto: log(K)/apg.eps_smooth
    "apg.eps_smooth": ("float", 1e-2),
    "apg.alpha": ("float", 1.0),
    "apg.max_iters": ("int", 20000),
    "apg.tol": ("float", 1e-5),
    "apg.backtracking": ("bool", True),
    "apg.shrink": ("float", 0.5),
    "apg.adaptive_restart": ("bool", False),
    "oracle.tol_t": ("float", 1e-6),
    "run.n_realizations": ("int", 3),
    "run.workers": ("int", 1),
    "run.strict": ("bool", False),
    "sweep.M": ("int_list", (100, 150)),
    "sweep.L": ("int_list", (1, 2)),
    "bench.M": ("int_list", (120, 160, 200, 240)),
}


def load_config_file(path: str | Path) -> dict[str, str]:
    """Parse a flat key = value config file; '#' starts a comment."""
    raw: dict[str, str] = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
        _set_key(raw, key.strip(), value.strip(), where=f"{path}:{lineno}")
    return raw


def apply_overrides(raw: dict[str, str], pairs: list[str]) -> dict[str, str]:
    """Apply CLI overrides of the form key=value on top of the file values."""
    for pair in pairs:
        key, sep, value = pair.partition("=")
        if not sep:
            raise ConfigError(f"override {pair!r} is not of the form key=value")
        _set_key(raw, key.strip(), value.strip(), where=f"override {pair!r}")
    return raw


def _set_key(raw: dict[str, str], key: str, value: str, where: str) -> None:
    if key not in _SCHEMA:
        raise ConfigError(f"{where}: unknown config key {key!r}")
    if value == "":
        raise ConfigError(f"{where}: empty value for {key!r}")
    raw[key] = value


def _coerce(key: str, text: str):
    tag, _ = _SCHEMA[key]
    try:
        if tag == "int":
            as_float = float(text)
            if as_float != int(as_float):
                raise ValueError("not an integer")
            return int(as_float)
        if tag == "float":
            return float(text)
        if tag == "bool":
            low = text.lower()
            if low in ("true", "1", "yes", "on"):
                return True
            if low in ("false", "0", "no", "off"):
                return False
            raise ValueError("not a boolean")
        if tag == "int_list":
            return tuple(int(p) for p in text.split(",") if p.strip())
        return text
    except ValueError as exc:
        raise ConfigError(f"config key {key}={text!r}: {exc}") from exc


def _canon(key: str, value) -> str:
    tag, _ = _SCHEMA[key]
    if tag == "bool":
        return "true" if value else "false"
    if tag == "float":
        return f"{value:.17g}"
    if tag == "int_list":
        return ",".join(str(v) for v in value)
    return str(value)


@dataclass
class ExperimentConfig:
    kind: str
    params: SimParams
    solve: SolveConfig
    n_realizations: int
    workers: int
    strict: bool
    sweep_m: tuple[int, ...]
    sweep_l: tuple[int, ...]
    bench_m: tuple[int, ...]
    out_dir: Path
    resolved: dict[str, str] = field(default_factory=dict)

    @property
    def header_comment(self) -> str:
        settings = " ".join(f"{k}={self.resolved[k]}" for k in sorted(self.resolved))
        return f"cfmaxmin {self.kind} | {settings}"


def build_experiment(
    raw: dict[str, str], kind: str, out_dir: str | Path
) -> ExperimentConfig:
    """Type-check raw settings against the schema and assemble the run config."""
    values = {key: default for key, (_, default) in _SCHEMA.items()}
    for key, text in raw.items():
        values[key] = _coerce(key, text)

    try:
        params = SimParams(
            M=values["sim.M"],
            K=values["sim.K"],
            L=values["sim.L"],
            D=values["sim.D_km"],
            T_c=values["sim.T_c"],
            T_p=values["sim.T_p"],
            zeta_p_watt=values["sim.zeta_p_watt"],
            zeta_u_watt=values["sim.zeta_u_watt"],
            sigma_sh_db=values["sim.sigma_sh_db"],
            bandwidth_hz=values["sim.bandwidth_hz"],
            noise_figure_db=values["sim.noise_figure_db"],
            seed=values["sim.seed"],
            wrap_around=values["sim.wrap_around"],
            pl_const_db=values["sim.pl_const_db"],
            pl_d0_km=values["sim.pl_d0_km"],
            pl_d1_km=values["sim.pl_d1_km"],
        )
        apg_cfg = ApgConfig(
            tau=values["apg.tau"] if values["apg.tau"] > 0.0 else None,
            eps_smooth=values["apg.eps_smooth"],
            alpha=values["apg.alpha"],
            max_iters=values["apg.max_iters"],
            tol=values["apg.tol"],
            backtracking=values["apg.backtracking"],
            shrink=values["apg.shrink"],
            adaptive_restart=values["apg.adaptive_restart"],
        )
        solve = SolveConfig(
            outer_tol=values["solve.outer_tol"],
            outer_max_iters=values["solve.outer_max_iters"],
            power_solver=values["solve.power_solver"],
            apg=apg_cfg,
            oracle_tol_t=values["oracle.tol_t"],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    if values["run.n_realizations"] < 1:
        raise ConfigError("run.n_realizations must be >= 1")
    if values["run.workers"] < 1:
        raise ConfigError("run.workers must be >= 1")
    for list_key in ("sweep.M", "sweep.L", "bench.M"):
        if not values[list_key] or any(v < 1 for v in values[list_key]):
            raise ConfigError(f"{list_key} must be a non-empty list of positive ints")

    resolved = {key: _canon(key, values[key]) for key in _SCHEMA}
    return ExperimentConfig(
        kind=kind,
        params=params,
        solve=solve,
        n_realizations=values["run.n_realizations"],
        workers=values["run.workers"],
        strict=values["run.strict"],
        sweep_m=values["sweep.M"],
        sweep_l=values["sweep.L"],
        bench_m=values["bench.M"],
        out_dir=Path(out_dir),
        resolved=resolved,
    )


def _solve_cell(job: tuple) -> dict[str, dict]:
    """One realization solved with one or more power solvers (pickle-friendly)."""
    params, solve_cfg, seed, solvers = job
    real = realize(params, seed)
    terms = build_sinr_terms(real.stats, real.model.beta, real.pilots, params.L)
    out: dict[str, dict] = {}
    for solver_name in solvers:
        cfg = replace(solve_cfg, power_solver=solver_name)
        res: SolveResult = alternating_solve(
            terms, params.eta_max, cfg, t_p=params.T_p, t_c=params.T_c
        )
        out[solver_name] = {
            "min_se": res.min_se,
            "se_per_user": res.se_per_user.tolist(),
            "history": res.history,
            "outer_iters": res.outer_iters,
            "total_power_iters": res.total_power_iters,
            "wall_time_s": res.wall_time_s,
            "converged": res.converged,
        }
    return out


def _run_jobs(jobs: list[tuple], workers: int) -> list[dict]:
    if workers <= 1 or len(jobs) <= 1:
        return [_solve_cell(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_solve_cell, jobs))


def _check_converged(exp: ExperimentConfig, cells: list[dict]) -> None:
    if not exp.strict:
        return
    for cell in cells:
        for name, res in cell.items():
            if not res["converged"]:
                raise NonConvergenceError(f"{name} solve hit its iteration cap")


def _write_csv(path: Path, comment: str, columns: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# {comment}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def run_trace(exp: ExperimentConfig) -> list[Path]:
    """Outer-iteration min-SE traces for both power solvers, one file per realization."""
    exp.out_dir.mkdir(parents=True, exist_ok=True)
    jobs = [
        (exp.params, exp.solve, exp.params.seed + r, ("apg", "oracle"))
        for r in range(exp.n_realizations)
    ]
    cells = _run_jobs(jobs, exp.workers)
    _check_converged(exp, cells)
    paths = []
    for r, cell in enumerate(cells):
        rows = []
        for solver_name in ("apg", "oracle"):
            for rec in cell[solver_name]["history"]:
                rows.append(
                    (
                        solver_name,
                        rec["outer_iter"],
                        rec["min_se"],
                        rec["min_sinr"],
                        rec["max_inv_sinr"],
                    )
                )
        path = exp.out_dir / f"trace_r{r:03d}.csv"
        _write_csv(
            path,
            f"{exp.header_comment} realization={r} seed={exp.params.seed + r}",
            ["solver", "outer_iter", "min_se", "min_sinr", "max_inv_sinr"],
            rows,
        )
        paths.append(path)
    return paths


def run_cdf(exp: ExperimentConfig) -> tuple[Path, Path]:
    """Converged per-user SEs across realizations plus a percentile summary."""
    exp.out_dir.mkdir(parents=True, exist_ok=True)
    solver_name = exp.solve.power_solver
    jobs = [
        (exp.params, exp.solve, exp.params.seed + r, (solver_name,))
        for r in range(exp.n_realizations)
    ]
    cells = _run_jobs(jobs, exp.workers)
    _check_converged(exp, cells)

    sample_rows = []
    spreads = []
    all_se = []
    for r, cell in enumerate(cells):
        se = cell[solver_name]["se_per_user"]
        all_se.extend(se)
        spreads.append(max(se) - min(se))
        for k, val in enumerate(se):
            sample_rows.append((r, k, val))

    samples_path = exp.out_dir / "cdf_samples.csv"
    _write_csv(
        samples_path,
        exp.header_comment,
        ["realization", "user", "se"],
        sample_rows,
    )
    p5, p50, p95 = np.percentile(np.asarray(all_se), [5.0, 50.0, 95.0])
    summary_path = exp.out_dir / "cdf_summary.csv"
    _write_csv(
        summary_path,
        exp.header_comment,
        [
            "n_realizations",
            "n_users",
            "se_p5",
            "se_p50",
            "se_p95",
            "spread_mean",
            "spread_max",
        ],
        [
            (
                exp.n_realizations,
                exp.params.K,
                float(p5),
                float(p50),
                float(p95),
                float(np.mean(spreads)),
                float(np.max(spreads)),
            )
        ],
    )
    return samples_path, summary_path


def run_sweep(exp: ExperimentConfig) -> Path:
    """Mean converged min-SE over a grid of (M, L) cells with paired seeds."""
    exp.out_dir.mkdir(parents=True, exist_ok=True)
    solver_name = exp.solve.power_solver
    grid = [(m, l) for m in exp.sweep_m for l in exp.sweep_l]
    jobs = []
    for m, l in grid:
        cell_params = replace(exp.params, M=m, L=l)
        for r in range(exp.n_realizations):
            # paired seeds: realization r reuses the same seed in every cell
            jobs.append((cell_params, exp.solve, exp.params.seed + r, (solver_name,)))
    cells = _run_jobs(jobs, exp.workers)
    _check_converged(exp, cells)

    rows = []
    for idx, (m, l) in enumerate(grid):
        chunk = cells[idx * exp.n_realizations : (idx + 1) * exp.n_realizations]
        vals = np.array([c[solver_name]["min_se"] for c in chunk])
        rows.append((m, l, exp.n_realizations, float(vals.mean()), float(vals.std())))
    path = exp.out_dir / "sweep.csv"
    _write_csv(
        path,
        exp.header_comment,
        ["M", "L", "n_realizations", "mean_min_se", "std_min_se"],
        rows,
    )
    return path


def run_bench(exp: ExperimentConfig) -> Path:
    """Wall time of the full alternating solve, APG vs oracle, across M.

    Always runs serially so the timings are clean; iteration counts are
    deterministic, wall times naturally are not.
    """
    exp.out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    cells_for_check = []
    for m in exp.bench_m:
        bench_params = replace(exp.params, M=m)
        for r in range(exp.n_realizations):
            cell = _solve_cell(
                (bench_params, exp.solve, exp.params.seed + r, ("apg", "oracle"))
            )
            cells_for_check.append(cell)
            for solver_name in ("apg", "oracle"):
                res = cell[solver_name]
                rows.append(
                    (
                        m,
                        solver_name,
                        r,
                        res["wall_time_s"],
                        res["outer_iters"],
                        res["total_power_iters"],
                        res["min_se"],
                        res["converged"],
                    )
                )
    _check_converged(exp, cells_for_check)
    path = exp.out_dir / "bench.csv"
    _write_csv(
        path,
        exp.header_comment,
        [
            "M",
            "solver",
            "realization",
            "wall_time_s",
            "outer_iters",
            "power_iters",
            "min_se",
            "converged",
        ],
        rows,
    )
    return path
