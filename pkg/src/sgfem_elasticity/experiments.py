"""Experiment configuration, single runs and table grids."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

from .assembly import assemble_fe_blocks, assemble_rhs, build_operator
from .bounds import compute_bound_report, inf_sup_estimate, korn_estimate
from .exceptions import InadmissibleFieldError, InvalidArgumentError
from .mesh import build_mesh, build_spaces
from .random_field import field_bounds, kl_2d_modes
from .solver import Variant, build_preconditioner, estimate_spectrum, minres_solve
from .stochastic_basis import build_couplings, build_multi_index_set, n_y

NU_GRID = (0.4, 0.49, 0.499, 0.4999, 0.49999)
NU_RITZ = (0.4, 0.49999)
LEVELS = (5, 6)
M_GRID = (5, 8, 10)
THREADS_ENV = "SGFEM_THREADS"

CSV_FIELDS = ("level", "M", "p", "nu", "sigma", "variant", "n_u", "n_p", "n_y", "dim",
              "iters", "time_s", "ritz_neg_lo", "ritz_neg_hi", "ritz_pos_lo", "ritz_pos_hi",
              "converged")
MODES = ("solve", "spectrum", "dof-table", "validate")


@dataclass(frozen=True)
class ExperimentConfig:
    level: int = 5
    M: int = 5
    p: int = 3
    nu: float = 0.4
    sigma: float = 0.085
    pressure_family: str = "P-1"
    variant: str = Variant.LAPLACIAN_DIAG.value
    tol: float = 1e-6
    maxit: int = 1000
    mode: str = "solve"
    output: str | None = None
    seed: int = 0
    correlation_length: float = 2.0
    samples: int = 100

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant).value)
        if not 2 <= self.level <= 7:
            raise InvalidArgumentError(f"level must lie in [2, 7], got {self.level}")
        if not 0.0 < self.nu < 0.5:
            raise InvalidArgumentError(f"nu must lie in (0, 0.5), got {self.nu}")
        if self.sigma <= 0:
            raise InvalidArgumentError(f"sigma must be positive, got {self.sigma}")
        if self.M < 0 or self.p < 0:
            raise InvalidArgumentError("M and p must be non-negative")
        if self.tol <= 0 or self.maxit < 1:
            raise InvalidArgumentError("need tol > 0 and maxit >= 1")
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.pressure_family not in ("P-1", "Q1"):
            raise InvalidArgumentError(f"unknown pressure family {self.pressure_family!r}")

    @classmethod
    def from_mapping(cls, values: dict) -> "ExperimentConfig":
        """Build from string or typed values, ignoring unknown and empty keys."""
        types = {f.name: f.type for f in fields(cls)}
        kw = {}
        for key, val in values.items():
            key = key.strip().replace("-", "_")
            if key not in types or val is None or val == "":
                continue
            if isinstance(val, str):
                t = types[key]
                if "int" in t:
                    val = int(val)
                elif "float" in t:
                    val = float(val)
                elif val.lower() == "none":
                    val = None
            kw[key] = val
        return cls(**kw)

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentConfig":
        """Read ``key = value`` lines (``#`` starts a comment)."""
        values = {}
        with open(path) as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise InvalidArgumentError(f"{path}:{lineno}: expected key = value")
                k, v = line.split("=", 1)
                values[k.strip()] = v.strip()
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls.from_mapping(values)

    def with_overrides(self, **kw) -> "ExperimentConfig":
        return replace(self, **{k: v for k, v in kw.items() if v is not None})


@dataclass
class ResultRecord:
    config: ExperimentConfig
    n_u: int
    n_p: int
    n_y: int
    dim: int
    iterations: int = 0
    wall_time: float = math.nan
    ritz_negative: tuple = (math.nan, math.nan)
    ritz_positive: tuple = (math.nan, math.nan)
    converged: bool = False
    bounds: dict = field(default_factory=dict)
    error: str = ""

    def row(self) -> dict:
        c = self.config
        return {"level": c.level, "M": c.M, "p": c.p, "nu": repr(c.nu), "sigma": repr(c.sigma),
                "variant": c.variant, "n_u": self.n_u, "n_p": self.n_p, "n_y": self.n_y,
                "dim": self.dim, "iters": self.iterations, "time_s": f"{self.wall_time:.3f}",
                "ritz_neg_lo": f"{self.ritz_negative[0]:.6f}",
                "ritz_neg_hi": f"{self.ritz_negative[1]:.6f}",
                "ritz_pos_lo": f"{self.ritz_positive[0]:.6f}",
                "ritz_pos_hi": f"{self.ritz_positive[1]:.6f}",
                "converged": int(self.converged), "error": self.error}


def config_from_row(row: dict, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Recover the configuration echoed in a CSV row."""
    keys = ("level", "M", "p", "nu", "sigma", "variant")
    base = base or ExperimentConfig()
    typed = ExperimentConfig.from_mapping({k: row[k] for k in keys})
    return replace(base, **{k: getattr(typed, k) for k in keys})


def problem_size(config: ExperimentConfig) -> tuple[int, int, int, int]:
    spaces = build_spaces(build_mesh(config.level), config.pressure_family)
    ny = n_y(config.M, config.p)
    return spaces.n_u, spaces.n_p, ny, 2 * (spaces.n_u + spaces.n_p) * ny


def run_experiment(config: ExperimentConfig, with_bounds: bool = True) -> ResultRecord:
    """Build and solve one stochastic Galerkin system.

    Raises :class:`InadmissibleFieldError` when the field is not positive.
    """
    spaces = build_spaces(build_mesh(config.level), config.pressure_family)
    fld = kl_2d_modes(config.M, config.sigma, config.correlation_length)
    try:
        fb = field_bounds(fld)
    except InadmissibleFieldError as exc:
        raise InadmissibleFieldError(
            f"{exc} (uniform positivity of E fails for sigma = {config.sigma}, M = {config.M})"
        ) from None
    blocks = assemble_fe_blocks(spaces, fld, check_field=False)
    couplings = build_couplings(build_multi_index_set(config.M, config.p))
    op = build_operator(blocks, couplings, config.nu)
    P = build_preconditioner(blocks, couplings, config.nu, config.variant,
                             constant_e0=blocks.constant_mean)
    rhs = assemble_rhs(blocks, couplings)
    res = minres_solve(op, P, rhs, tol=config.tol, maxit=config.maxit)
    n_u, n_p, ny = blocks.n_u, blocks.n_p, couplings.n_y
    rec = ResultRecord(config, n_u, n_p, ny, op.shape[0], res.iterations, res.wall_time,
                       converged=res.converged)
    if res.iterations >= 5:
        rec.ritz_negative, rec.ritz_positive = estimate_spectrum(res)
    if with_bounds:
        coarse = build_spaces(build_mesh(min(config.level, 4)), config.pressure_family)
        cb = assemble_fe_blocks(coarse, kl_2d_modes(0, 1.0), check_field=False)
        report = compute_bound_report(blocks, fb, config.nu, config.variant,
                                      korn=korn_estimate(coarse), gamma=inf_sup_estimate(cb),
                                      scaled_schur=blocks.constant_mean is not None)
        rec.bounds = {"leading": report.leading_interval, "schur": report.schur_interval,
                      "union": report.analytic_union, "korn": report.korn_constant,
                      "gamma": report.inf_sup_gamma}
    return rec


# --- tables ------------------------------------------------------------------

TABLE_SPECS = {
    "T3": dict(sigma=0.085, p=3, nus=NU_RITZ),
    "T4": dict(sigma=0.17, p=3, nus=NU_RITZ),
    "T5": dict(sigma=0.085, p=3, nus=NU_GRID),
    "T6": dict(sigma=0.17, p=3, nus=NU_GRID),
    "T7": dict(sigma=0.17, p=4, nus=NU_GRID),
}
TABLE_IDS = ("T1", "T2") + tuple(TABLE_SPECS)


def dof_table(levels=(4, 5, 6), pressure_family="P-1"):
    """Rows ``(level, n_u, n_p, 2(n_u + n_p))``."""
    rows = []
    for lev in levels:
        s = build_spaces(build_mesh(lev), pressure_family)
        rows.append((lev, s.n_u, s.n_p, s.dofs))
    return rows


def chaos_table(ps=(3, 4), Ms=M_GRID):
    """Rows ``(p, M, n_y)``."""
    return [(p, M, n_y(M, p)) for p in ps for M in Ms]


def table_configs(table_id: str, levels=LEVELS, Ms=M_GRID, base: ExperimentConfig | None = None):
    """Configurations of a solve table in output order (level, M, nu)."""
    if table_id not in TABLE_SPECS:
        raise InvalidArgumentError(f"{table_id!r} is not a solve table; choose from {tuple(TABLE_SPECS)}")
    spec = TABLE_SPECS[table_id]
    base = base or ExperimentConfig()
    return [replace(base, level=lev, M=M, p=spec["p"], sigma=spec["sigma"], nu=nu)
            for lev in levels for M in Ms for nu in spec["nus"]]


def _safe_run(config: ExperimentConfig) -> ResultRecord:
    try:
        return run_experiment(config, with_bounds=False)
    except Exception as exc:                                  # recorded per cell
        try:
            n_u, n_p, ny, dim = problem_size(config)
        except Exception:
            n_u = n_p = ny = dim = 0
        return ResultRecord(config, n_u, n_p, ny, dim, error=f"{type(exc).__name__}: {exc}")


def worker_count(default: int = 1) -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, default)))
    except ValueError:
        return default


def run_configs(configs, workers: int | None = None, progress=None) -> list[ResultRecord]:
    """Run independent cells, returning records in input order."""
    workers = worker_count() if workers is None else workers
    records = []
    if workers <= 1:
        for cfg in configs:
            rec = _safe_run(cfg)
            records.append(rec)
            if progress:
                progress(rec)
        return records
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for rec in pool.map(_safe_run, configs):
            records.append(rec)
            if progress:
                progress(rec)
    return records


def write_records(records, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=CSV_FIELDS + ("error",))
        w.writeheader()
        for r in records:
            w.writerow(r.row())


def read_records(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_table(table_id: str, output=None, levels=LEVELS, Ms=M_GRID,
              base: ExperimentConfig | None = None, workers: int | None = None,
              progress=None):
    """Run one of T1..T7 and optionally write CSV.

    T1 and T2 are counting tables and return lists of tuples; the solve
    tables return :class:`ResultRecord` lists.
    """
    table_id = table_id.upper()
    if table_id == "T1":
        rows = dof_table(pressure_family=(base or ExperimentConfig()).pressure_family)
        header = ("level", "n_u", "n_p", "dofs")
    elif table_id == "T2":
        rows = chaos_table()
        header = ("p", "M", "n_y")
    elif table_id in TABLE_SPECS:
        records = run_configs(table_configs(table_id, levels, Ms, base), workers, progress)
        if output:
            write_records(records, output)
        return records
    else:
        raise InvalidArgumentError(f"unknown table {table_id!r}; choose from {TABLE_IDS}")
    if output:
        with open(output, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    return rows


def record_dict(record: ResultRecord) -> dict:
    d = asdict(record.config)
    d.update(record.row())
    return d
