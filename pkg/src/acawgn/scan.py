"""Amplitude-grid experiment harness.

Scans a grid of amplitudes, solving each one for (K_A, C(A)) and measuring
how the optimal output law approaches the smoothed uniform law: the total
variation to f_unif_A, the bulk flatness deviation on [-B, B] with
B = A - sqrt(A), the support-size floor sqrt(1 + 2A^2/(pi e)), and both
certificate lower bounds evaluated at the solved input.  Produces
machine-readable tables (CSV with a fixed header, or JSON), log-log
scaling-law fits of K_A against A, and a three-way split of the TV integral
(tails / bulk) that mirrors how the bulk flatness controls the distance.

Scans are deterministic given the solver seed; per-amplitude work shares no
state, so records can be computed concurrently (``workers > 1``) and are
always assembled in grid order.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .certificates import certified_tv_lower_bound_maxnorm, closed_form_bound
from .inputs import DiscreteInput, mixture_density
from .numerics import bulk_sup_deviation, tv_distance, uniform_output, adaptive_quad
from .solver import SolveConfig, SolveReport, dytso_lower_bound, solve_capacity

__all__ = [
    "ScanRecord",
    "ScalingFit",
    "CSV_COLUMNS",
    "scan",
    "scan_detailed",
    "records_to_csv",
    "records_to_json",
    "fit_scaling",
    "theorem2_probe",
]

# Stable CSV interface: column names and order are part of the contract.
CSV_COLUMNS = (
    "A",
    "K",
    "capacity_nats",
    "tv_uniform",
    "bulk_dev",
    "dytso_lb",
    "thm3_bound",
    "maxnorm_bound",
    "status",
)

STATUS_OK = "ok"
STATUS_UNCONVERGED = "unconverged"
STATUS_ERROR = "error"


@dataclass(frozen=True)
class ScanRecord:
    """One row of the amplitude scan."""

    A: float
    K: int
    capacity_nats: float
    tv_uniform: float
    bulk_dev: float          # NaN when A <= 1 (B = A - sqrt(A) is not positive)
    dytso_lb: float
    thm3_bound: float
    maxnorm_bound: float
    status: str

    def __post_init__(self):
        if self.status not in (STATUS_OK, STATUS_UNCONVERGED, STATUS_ERROR):
            raise ValueError(f"unknown status {self.status!r}")
        if self.status != STATUS_ERROR:
            if self.K < 1:
                raise ValueError("K must be >= 1")
            if not (-1e-12 <= self.tv_uniform <= 1.0 + 1e-12):
                raise ValueError("tv_uniform must lie in [0, 1]")
            for name in ("dytso_lb", "thm3_bound", "maxnorm_bound"):
                if getattr(self, name) < 0.0:
                    raise ValueError(f"{name} must be >= 0")

    @property
    def converged(self) -> bool:
        return self.status == STATUS_OK

    def to_dict(self) -> dict:
        def clean(v):
            return None if isinstance(v, float) and math.isnan(v) else v

        return {
            "A": self.A,
            "K": self.K,
            "capacity_nats": clean(self.capacity_nats),
            "tv_uniform": clean(self.tv_uniform),
            "bulk_dev": clean(self.bulk_dev),
            "dytso_lb": clean(self.dytso_lb),
            "thm3_bound": clean(self.thm3_bound),
            "maxnorm_bound": clean(self.maxnorm_bound),
            "status": self.status,
        }

    def to_csv_row(self) -> str:
        vals = [
            self.A, self.K, self.capacity_nats, self.tv_uniform, self.bulk_dev,
            self.dytso_lb, self.thm3_bound, self.maxnorm_bound,
        ]
        cells = [repr(float(v)) if not isinstance(v, int) else str(v) for v in vals]
        cells.append(self.status)
        return ",".join(cells)


@dataclass(frozen=True)
class ScalingFit:
    """Ordinary least squares of log K_A against log A."""

    a_min: float
    a_max: float
    n_points: int
    slope: float
    intercept: float
    residual_norm: float

    def __post_init__(self):
        if self.n_points < 4:
            raise ValueError("fit requires at least 4 points")
        if not math.isfinite(self.slope):
            raise ValueError("slope must be finite")

    def to_dict(self) -> dict:
        return {
            "a_min": self.a_min,
            "a_max": self.a_max,
            "n_points": self.n_points,
            "slope": self.slope,
            "intercept": self.intercept,
            "residual_norm": self.residual_norm,
        }


def _validate_grid(a_grid) -> list[float]:
    grid = [float(a) for a in a_grid]
    if not grid:
        raise ValueError("amplitude grid is empty")
    if any(a <= 0.0 or not math.isfinite(a) for a in grid):
        raise ValueError("grid amplitudes must be positive and finite")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("grid must be strictly increasing")
    return grid


def _scan_one(A: float, config: SolveConfig) -> tuple[ScanRecord, SolveReport | None]:
    try:
        report = solve_capacity(A, config)
        pi = report.input
        f_star = mixture_density(pi)
        tv = tv_distance(f_star, uniform_output(A), config.quad)
        if A > 1.0:
            bulk = bulk_sup_deviation(f_star, A, A - math.sqrt(A))
        else:
            bulk = math.nan
        record = ScanRecord(
            A=A,
            K=report.k,
            capacity_nats=report.capacity_nats,
            tv_uniform=tv,
            bulk_dev=bulk,
            dytso_lb=dytso_lower_bound(A),
            thm3_bound=closed_form_bound(report.k, A),
            maxnorm_bound=certified_tv_lower_bound_maxnorm(pi, A),
            status=STATUS_OK if report.converged else STATUS_UNCONVERGED,
        )
        return record, report
    except Exception:
        record = ScanRecord(
            A=A, K=0, capacity_nats=math.nan, tv_uniform=math.nan,
            bulk_dev=math.nan, dytso_lb=dytso_lower_bound(A),
            thm3_bound=math.nan, maxnorm_bound=math.nan, status=STATUS_ERROR,
        )
        return record, None


def scan_detailed(
    a_grid,
    config: SolveConfig | None = None,
    workers: int = 1,
) -> tuple[list[ScanRecord], list[SolveReport | None]]:
    """Scan returning both the records and the full per-A solve reports.

    Individual-amplitude failures are recorded with status ``error`` and
    never abort the scan.  Output order follows the grid regardless of
    ``workers``.
    """
    grid = _validate_grid(a_grid)
    cfg = config or SolveConfig()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairs = list(pool.map(lambda a: _scan_one(a, cfg), grid))
    else:
        pairs = [_scan_one(a, cfg) for a in grid]
    records = [p[0] for p in pairs]
    reports = [p[1] for p in pairs]
    return records, reports


def scan(a_grid, config: SolveConfig | None = None, workers: int = 1) -> list[ScanRecord]:
    """One ScanRecord per grid amplitude; see :func:`scan_detailed`."""
    records, _ = scan_detailed(a_grid, config, workers)
    return records


def records_to_csv(records) -> str:
    """Render records as CSV with the stable header; byte-deterministic."""
    buf = io.StringIO()
    buf.write(",".join(CSV_COLUMNS) + "\n")
    for rec in records:
        buf.write(rec.to_csv_row() + "\n")
    return buf.getvalue()


def records_to_json(records) -> list[dict]:
    return [rec.to_dict() for rec in records]


def fit_scaling(records, a_range: tuple[float, float]) -> ScalingFit:
    """OLS fit of log K_A on log A over converged records with A in a_range.

    Unconverged or failed records are excluded.  Raises ValueError with
    fewer than 4 usable points.
    """
    lo, hi = float(a_range[0]), float(a_range[1])
    pts = [(r.A, r.K) for r in records if r.converged and lo <= r.A <= hi]
    if len(pts) < 4:
        raise ValueError(f"need >= 4 converged records in [{lo}, {hi}], got {len(pts)}")
    xs = np.log([p[0] for p in pts])
    ys = np.log([p[1] for p in pts])
    design = np.column_stack([xs, np.ones_like(xs)])
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    resid = ys - design @ coef
    return ScalingFit(
        a_min=lo,
        a_max=hi,
        n_points=len(pts),
        slope=float(coef[0]),
        intercept=float(coef[1]),
        residual_norm=float(np.linalg.norm(resid)),
    )


def theorem2_probe(
    A: float,
    config: SolveConfig | None = None,
    solution: DiscreteInput | None = None,
) -> tuple[float, float, float]:
    """Split TV(f_A_star, f_unif_A) into tail/bulk/tail parts at B = A - sqrt(A).

    Returns the three partial integrals (each including the global 1/2
    factor) over (-inf, -B], [-B, B], [B, inf); their sum equals the full TV
    distance to within quadrature tolerance.  Requires A >= 4 so the bulk is
    comfortably nonempty.  ``solution`` reuses an already-solved input;
    otherwise the amplitude is solved afresh with ``config``.
    """
    if not A >= 4.0:
        raise ValueError(f"probe requires A >= 4, got {A}")
    B = A - math.sqrt(A)
    pi = solution if solution is not None else solve_capacity(A, config).input
    cfg = config or SolveConfig()
    f_star = mixture_density(pi)
    f_unif = uniform_output(A)
    lo, hi = f_star.lo, f_star.hi

    def integrand(y):
        return np.abs(f_star(y) - f_unif(y))

    parts = (
        0.5 * adaptive_quad(integrand, lo, -B, cfg.quad),
        0.5 * adaptive_quad(integrand, -B, B, cfg.quad),
        0.5 * adaptive_quad(integrand, B, hi, cfg.quad),
    )
    return parts
