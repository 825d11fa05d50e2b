"""Discrete channel inputs and their Gaussian-mixture outputs.

A ``DiscreteInput`` is a probability mass function on finitely many points of
``[-A, A]``; pushing it through the unit-variance Gaussian channel gives a
``MixtureDensity`` output law.  On top of those two types this module exposes
the information quantities the capacity machinery runs on:

- ``mutual_information``: I(X;Y) = h(f) - 0.5*log(2*pi*e), with the output
  differential entropy h(f) computed by adaptive quadrature of -f*log(f);
- ``marginal_information_density``: the pointwise divergence
  i(x) = KL(phi(.-x) || f), which satisfies I = sum_j w_j * i(x_j) and drives
  the verification of input optimality;
- ``kkt_residual``: the pair (max_j |i(x_j) - I|, sup-positive-part of
  i(x) - I over [-A, A]) that certifies optimality when both are below a
  declared epsilon.

Inputs are immutable after construction; all operations are pure.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .numerics import (
    DEFAULT_QUAD,
    HALF_LOG_2PI_E,
    INV_SQRT_2PI,
    LOG_SQRT_2PI,
    TAIL_PAD,
    QuadratureSpec,
    adaptive_quad_family,
)

__all__ = [
    "DiscreteInput",
    "MixtureDensity",
    "mixture_density",
    "mutual_information",
    "marginal_information_density",
    "kkt_residual",
    "MERGE_TOL",
    "PRUNE_TOL",
]

# Locations closer than this are identified (mixtures are not identifiable
# below it and gradients become ill-conditioned); weights below PRUNE_TOL are
# dropped outright.
MERGE_TOL = 1e-7
PRUNE_TOL = 1e-9

_WEIGHT_SUM_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteInput:
    """A K-point probability distribution on [-A, A].

    Locations are strictly increasing, weights are nonnegative and sum to one
    (within 1e-12).  Instances are immutable; use :meth:`normalized` to build
    one from raw, possibly degenerate data (unsorted / near-coincident points,
    weights needing renormalization).
    """

    A: float
    locations: tuple[float, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if not (self.A > 0.0 and math.isfinite(self.A)):
            raise ValueError(f"amplitude must be positive and finite, got {self.A}")
        locs = tuple(float(x) for x in self.locations)
        ws = tuple(float(w) for w in self.weights)
        object.__setattr__(self, "locations", locs)
        object.__setattr__(self, "weights", ws)
        if len(locs) < 1:
            raise ValueError("need at least one mass point")
        if len(locs) != len(ws):
            raise ValueError("locations and weights must have equal length")
        if any(not math.isfinite(x) for x in locs):
            raise ValueError("locations must be finite")
        if any(x2 <= x1 for x1, x2 in zip(locs, locs[1:])):
            raise ValueError("locations must be strictly increasing")
        if abs(locs[0]) > self.A + 1e-12 or abs(locs[-1]) > self.A + 1e-12:
            raise ValueError("locations must lie in [-A, A]")
        if any(w < 0.0 or not math.isfinite(w) for w in ws):
            raise ValueError("weights must be nonnegative and finite")
        if abs(sum(ws) - 1.0) > _WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {sum(ws)!r}")

    @classmethod
    def normalized(
        cls,
        A: float,
        locations,
        weights,
        merge_tol: float = MERGE_TOL,
        prune_tol: float = PRUNE_TOL,
    ) -> "DiscreteInput":
        """Canonicalize raw atoms: sort, merge near-coincident, prune, renormalize.

        Points closer than ``merge_tol`` are merged into their weighted mean;
        weights below ``prune_tol`` (after merging) are dropped; the remaining
        weights are rescaled to sum to exactly one.
        """
        locs = np.asarray(locations, dtype=float)
        ws = np.asarray(weights, dtype=float)
        if locs.size == 0:
            raise ValueError("need at least one mass point")
        if np.any(ws < -1e-12):
            raise ValueError("weights must be nonnegative")
        ws = np.maximum(ws, 0.0)
        order = np.argsort(locs, kind="stable")
        locs, ws = locs[order], ws[order]
        out_x, out_w = [], []
        cur_x, cur_w = locs[0], ws[0]
        for x, w in zip(locs[1:], ws[1:]):
            if x - cur_x <= merge_tol:
                tot = cur_w + w
                cur_x = (cur_x * cur_w + x * w) / tot if tot > 0 else 0.5 * (cur_x + x)
                cur_w = tot
            else:
                out_x.append(cur_x)
                out_w.append(cur_w)
                cur_x, cur_w = x, w
        out_x.append(cur_x)
        out_w.append(cur_w)
        x_arr = np.array(out_x)
        w_arr = np.array(out_w)
        keep = w_arr > prune_tol
        if not keep.any():
            # Degenerate input (all mass pruned): keep the heaviest atom.
            keep = w_arr == w_arr.max()
        x_arr, w_arr = x_arr[keep], w_arr[keep]
        x_arr = np.clip(x_arr, -A, A)
        w_arr = w_arr / w_arr.sum()
        return cls(A=float(A), locations=tuple(x_arr), weights=tuple(w_arr))

    @property
    def k(self) -> int:
        """Support size."""
        return len(self.locations)

    def as_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.locations), np.array(self.weights)

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "points": list(self.locations),
            "weights": list(self.weights),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DiscreteInput":
        return cls(A=float(d["A"]),
                   locations=tuple(float(x) for x in d["points"]),
                   weights=tuple(float(w) for w in d["weights"]))

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, s: str) -> "DiscreteInput":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class MixtureDensity:
    """Output law f(y) = sum_j w_j * phi(y - x_j) of a DiscreteInput.

    A unit-variance Gaussian mixture; vectorized and usable wherever a
    DensityFn is expected (callable with ``lo``/``hi`` effective support).
    """

    input_dist: DiscreteInput

    @property
    def lo(self) -> float:
        return -self.input_dist.A - TAIL_PAD

    @property
    def hi(self) -> float:
        return self.input_dist.A + TAIL_PAD

    @cached_property
    def _arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self.input_dist.as_arrays()

    def __call__(self, y):
        locs, ws = self._arrays
        y = np.asarray(y, dtype=float)
        d = np.atleast_1d(y)[None, :] - locs[:, None]
        out = INV_SQRT_2PI * (ws[:, None] * np.exp(-0.5 * d * d)).sum(axis=0)
        return out.reshape(y.shape) if y.ndim else float(out[0])

    def log_pdf(self, y):
        """log f(y), stable far into the tails (log-sum-exp over components)."""
        locs, ws = self._arrays
        y = np.asarray(y, dtype=float)
        flat = np.atleast_1d(y)
        lf = _log_mixture(locs, np.log(np.maximum(ws, 1e-300)), flat)
        return lf.reshape(y.shape) if y.ndim else float(lf[0])


def mixture_density(pi: DiscreteInput) -> MixtureDensity:
    """Output density of ``pi`` through the unit-variance Gaussian channel."""
    return MixtureDensity(pi)


def _log_mixture(locs: np.ndarray, logw: np.ndarray, y: np.ndarray) -> np.ndarray:
    """log sum_j exp(logw_j) * phi(y - x_j), evaluated stably; y is (n,)."""
    d = y[None, :] - locs[:, None]
    z = logw[:, None] - 0.5 * d * d
    zmax = z.max(axis=0)
    return zmax + np.log(np.exp(z - zmax).sum(axis=0)) - LOG_SQRT_2PI


def _info_stats(
    A: float,
    locs: np.ndarray,
    ws: np.ndarray,
    spec: QuadratureSpec,
    want_locations: bool = False,
):
    """One shared adaptive pass giving I, all i(x_j), and location derivatives.

    Family rows (all against the same partition of [-A-10, A+10]):
      rows 0..K-1   : phi(y - x_j) * log f(y)          ->  i(x_j) = -0.5*log(2*pi*e) - row_j
      rows K..2K-1  : (y - x_j) * phi(y - x_j) * log f ->  dI/dx_j = -w_j * row
      last row      : -f(y) * log f(y)                 ->  I = h - 0.5*log(2*pi*e)
    """
    locs = np.asarray(locs, dtype=float)
    ws = np.asarray(ws, dtype=float)
    K = locs.size
    logw = np.log(np.maximum(ws, 1e-300))

    def fam(y):
        d = y[None, :] - locs[:, None]
        logphi = -0.5 * d * d - LOG_SQRT_2PI
        z = logw[:, None] + logphi
        zmax = z.max(axis=0)
        lf = zmax + np.log(np.exp(z - zmax).sum(axis=0))
        phi = np.exp(logphi)
        rows = [phi * lf[None, :]]
        if want_locations:
            rows.append(d * rows[0])
        f_y = np.exp(lf)
        rows.append((-f_y * lf)[None, :])
        return np.concatenate(rows, axis=0)

    vals, _ = adaptive_quad_family(fam, -A - TAIL_PAD, A + TAIL_PAD, spec)
    i_vec = -HALF_LOG_2PI_E - vals[:K]
    info = float(vals[-1]) - HALF_LOG_2PI_E
    d_loc = -ws * vals[K:2 * K] if want_locations else None
    return info, i_vec, d_loc


def _marginal_info_batch(
    A: float,
    locs: np.ndarray,
    ws: np.ndarray,
    xs: np.ndarray,
    spec: QuadratureSpec,
    chunk: int = 256,
) -> np.ndarray:
    """i(x; pi) for many x at once, sharing the log-mixture evaluations."""
    locs = np.asarray(locs, dtype=float)
    logw = np.log(np.maximum(np.asarray(ws, dtype=float), 1e-300))
    xs = np.asarray(xs, dtype=float)
    out = np.empty(xs.size)
    for start in range(0, xs.size, chunk):
        xs_c = xs[start:start + chunk]

        def fam(y, xs_c=xs_c):
            lf = _log_mixture(locs, logw, y)
            d = y[None, :] - xs_c[:, None]
            phi = INV_SQRT_2PI * np.exp(-0.5 * d * d)
            return phi * lf[None, :]

        vals, _ = adaptive_quad_family(fam, -A - TAIL_PAD - 2.0, A + TAIL_PAD + 2.0, spec)
        out[start:start + chunk] = -HALF_LOG_2PI_E - vals
    return out


def mutual_information(pi: DiscreteInput, spec: QuadratureSpec = DEFAULT_QUAD) -> float:
    """I(X;Y) in nats for X ~ pi through the unit-variance Gaussian channel.

    Equals h(f_pi) - 0.5*log(2*pi*e); the entropy integral -f*log(f) runs over
    the mixture's effective support.  Nonnegative up to quadrature tolerance.
    """
    locs, ws = pi.as_arrays()
    logw = np.log(np.maximum(ws, 1e-300))

    def fam(y):
        lf = _log_mixture(locs, logw, y)
        return (-np.exp(lf) * lf)[None, :]

    vals, _ = adaptive_quad_family(fam, -pi.A - TAIL_PAD, pi.A + TAIL_PAD, spec)
    return float(vals[0]) - HALF_LOG_2PI_E


def marginal_information_density(
    pi: DiscreteInput, x: float, spec: QuadratureSpec = DEFAULT_QUAD
) -> float:
    """i(x; pi) = KL(phi(. - x) || f_pi) in nats, for |x| <= A.

    The divergence of the noise kernel centered at x from the output law;
    i is >= 0, equals I on the support of an optimal input, and satisfies
    the mixture identity I = sum_j w_j * i(x_j; pi).
    """
    if abs(x) > pi.A + 1e-9:
        raise ValueError(f"x={x} outside [-A, A] with A={pi.A}")
    locs, ws = pi.as_arrays()
    vals = _marginal_info_batch(pi.A, locs, ws, np.array([float(x)]), spec)
    return float(vals[0])


def _kkt_scan(
    pi: DiscreteInput,
    spec: QuadratureSpec,
    grid_points: int,
) -> tuple[float, float, float]:
    """(r_support, r_global, argmax x of the global violation)."""
    locs, ws = pi.as_arrays()
    info, i_vec, _ = _info_stats(pi.A, locs, ws, spec)
    r_support = float(np.max(np.abs(i_vec - info)))

    grid = np.linspace(-pi.A, pi.A, grid_points)
    i_grid = _marginal_info_batch(pi.A, locs, ws, grid, spec)
    j_best = int(np.argmax(i_grid))
    best = float(i_grid[j_best])
    x_best = float(grid[j_best])

    # Refine around every discrete local maximum (endpoints included).
    padded = np.concatenate([[-np.inf], i_grid, [-np.inf]])
    is_peak = (padded[1:-1] >= padded[:-2]) & (padded[1:-1] >= padded[2:])
    peaks = np.nonzero(is_peak)[0]
    if peaks.size:
        h = grid[1] - grid[0]
        refine = np.concatenate(
            [np.linspace(grid[j] - h, grid[j] + h, 21) for j in peaks]
        )
        refine = np.clip(refine, -pi.A, pi.A)
        i_ref = _marginal_info_batch(pi.A, locs, ws, refine, spec)
        j_ref = int(np.argmax(i_ref))
        if float(i_ref[j_ref]) > best:
            best = float(i_ref[j_ref])
            x_best = float(refine[j_ref])

    return r_support, max(0.0, best - info), x_best


def kkt_residual(
    pi: DiscreteInput,
    spec: QuadratureSpec = DEFAULT_QUAD,
    grid_points: int = 2001,
) -> tuple[float, float]:
    """Optimality residuals (r_support, r_global) of ``pi`` in nats.

    r_support = max_j |i(x_j) - I| measures equalization on the support;
    r_global = max over [-A, A] of (i(x) - I)_+ measures global dominance,
    evaluated on ``grid_points`` equispaced points plus one refinement pass
    around each local maximum of i.  ``pi`` is epsilon-optimal when both are
    below epsilon.
    """
    r_support, r_global, _ = _kkt_scan(pi, spec, grid_points)
    return r_support, r_global
