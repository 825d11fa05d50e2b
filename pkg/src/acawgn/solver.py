"""Capacity solver for the amplitude-constrained unit-variance Gaussian channel.

Computes, for an amplitude ``A``, the optimal discrete input, its support
size, and the channel capacity ``C(A) = sup I(X;Y)`` over inputs with
``|X| <= A``.  Strategy:

- fixed-support optimization (``solve_fixed_k``): projected-gradient ascent
  with Armijo backtracking over atom locations (box-clamped to [-A, A]) and
  weights (projected onto the probability simplex); by default the input is
  parametrized by its nonnegative half, since the objective is symmetric;
- support escalation (``solve_capacity``): starting at the ceiling of the
  square-root support lower bound, raise K (by 2 in symmetric mode) until the
  equalization/dominance residuals of ``kkt_residual`` pass the declared
  epsilon; escalation warm-starts from the previous solution, so the achieved
  information is nondecreasing along the history.

Everything is deterministic given the configured seed; solves for different
amplitudes share no state and may run concurrently.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .inputs import (
    DiscreteInput,
    _info_stats,
    _kkt_scan,
    kkt_residual,
    mutual_information,
)
from .numerics import (
    HALF_LOG_2PI_E,
    LOG_SQRT_2PI,
    TAIL_PAD,
    QuadratureSpec,
    adaptive_quad_family,
)

__all__ = [
    "SolveConfig",
    "SolveReport",
    "EscalationStep",
    "GradientVector",
    "dytso_lower_bound",
    "info_gradient",
    "solve_fixed_k",
    "solve_capacity",
]

# Tighter than the general-purpose default: line-search comparisons near the
# optimum must resolve information increments of order grad^2.
_SOLVER_QUAD = QuadratureSpec(abs_tol=1e-12, rel_tol=1e-10)

# Atoms of a genuinely optimal input sit O(1) apart (unit noise), while an
# oversized-K run parks surplus atoms within optimizer dust of a true one.
# Clusters this tight are tried as a single merged atom and kept only when
# the achieved information is preserved, so the minimal support is reported.
_CONDENSE_TOL = 1e-2
_CONDENSE_INFO_TOL = 1e-9


def dytso_lower_bound(A: float) -> float:
    """Support-size lower bound sqrt(1 + 2*A^2/(pi*e)); equals 1 at A = 0."""
    if A < 0.0 or not math.isfinite(A):
        raise ValueError(f"amplitude must be nonnegative and finite, got {A}")
    return math.sqrt(1.0 + 2.0 * A * A / (math.pi * math.e))


@dataclass(frozen=True)
class SolveConfig:
    """Knobs for the fixed-K optimizer and the escalation loop."""

    initial_k: int | None = None      # default: ceil of dytso_lower_bound(A)
    max_k: int = 40
    kkt_eps: float = 1e-6
    max_iters: int = 6000             # projected-gradient iterations per K
    grad_tol: float = 1e-7            # sup-norm of the unit-step gradient map
    step_init: float = 0.5
    step_grow: float = 1.3
    step_shrink: float = 0.5
    armijo: float = 1e-4
    symmetric: bool = True
    seed: int = 0
    restarts: int = 2                 # perturbed re-inits when KKT stalls
    quad: QuadratureSpec = field(default_factory=lambda: _SOLVER_QUAD)

    def __post_init__(self):
        if self.initial_k is not None and self.initial_k < 1:
            raise ValueError("initial_k must be >= 1")
        if self.initial_k is not None and self.max_k < self.initial_k:
            raise ValueError("max_k must be >= initial_k")
        if self.max_k < 1:
            raise ValueError("max_k must be >= 1")
        if not (self.kkt_eps > 0.0):
            raise ValueError("kkt_eps must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


@dataclass(frozen=True)
class GradientVector:
    """Ascent directions of I with respect to the free input coordinates.

    ``d_weights[j] = i(x_j) - I`` is the derivative of I along the
    renormalization-respecting curve w -> (w + h e_j)/(1 + h); the common
    constant of the raw partials is immaterial under simplex projection.
    ``d_locations[j]`` is the plain partial dI/dx_j (in nats per unit).
    """

    d_locations: np.ndarray
    d_weights: np.ndarray

    def __post_init__(self):
        if not (np.all(np.isfinite(self.d_locations)) and np.all(np.isfinite(self.d_weights))):
            raise ValueError("gradient entries must be finite")


@dataclass(frozen=True)
class EscalationStep:
    k_tried: int
    k_support: int
    info_nats: float
    kkt_support: float
    kkt_global: float
    converged: bool

    def to_dict(self) -> dict:
        return {
            "k_tried": self.k_tried,
            "k_support": self.k_support,
            "info_nats": self.info_nats,
            "kkt_support": self.kkt_support,
            "kkt_global": self.kkt_global,
            "converged": self.converged,
        }


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one capacity solve at amplitude A."""

    A: float
    input: DiscreteInput
    capacity_nats: float
    k: int
    kkt_support: float
    kkt_global: float
    converged: bool
    history: tuple[EscalationStep, ...]
    wall_time_s: float
    eps: float
    seed: int

    def to_dict(self) -> dict:
        return {
            "A": self.A,
            "input": self.input.to_dict(),
            "capacity_nats": self.capacity_nats,
            "K": self.k,
            "kkt_support": self.kkt_support,
            "kkt_global": self.kkt_global,
            "converged": self.converged,
            "history": [h.to_dict() for h in self.history],
            "wall_time_s": self.wall_time_s,
            "eps": self.eps,
            "seed": self.seed,
            "dytso_lower_bound": dytso_lower_bound(self.A),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SolveReport":
        return cls(
            A=float(d["A"]),
            input=DiscreteInput.from_dict(d["input"]),
            capacity_nats=float(d["capacity_nats"]),
            k=int(d["K"]),
            kkt_support=float(d["kkt_support"]),
            kkt_global=float(d["kkt_global"]),
            converged=bool(d["converged"]),
            history=tuple(
                EscalationStep(
                    k_tried=int(h["k_tried"]),
                    k_support=int(h["k_support"]),
                    info_nats=float(h["info_nats"]),
                    kkt_support=float(h["kkt_support"]),
                    kkt_global=float(h["kkt_global"]),
                    converged=bool(h["converged"]),
                )
                for h in d.get("history", [])
            ),
            wall_time_s=float(d.get("wall_time_s", 0.0)),
            eps=float(d.get("eps", 1e-6)),
            seed=int(d.get("seed", 0)),
        )


def info_gradient(pi: DiscreteInput, spec: QuadratureSpec = _SOLVER_QUAD) -> GradientVector:
    """Analytic gradient of I at ``pi``; matches central finite differences.

    dI/dx_j = -w_j * integral (y - x_j) phi(y - x_j) log f(y) dy  (the
    conditional-entropy self-term integrates to zero), and the weight entry is
    i(x_j) - I, the derivative along renormalized weight perturbations.
    """
    locs, ws = pi.as_arrays()
    info, i_vec, d_loc = _info_stats(pi.A, locs, ws, spec, want_locations=True)
    return GradientVector(d_locations=d_loc, d_weights=i_vec - info)


# ----------------------------------------------------------------------------
# Internal parametrization: either the full atom vector or, in symmetric mode,
# the nonnegative half (pair locations x in [0, A], pair weights, and an
# optional center atom at 0 when K is odd).
# ----------------------------------------------------------------------------


def _project_weighted_simplex(p: np.ndarray, c: np.ndarray, total: float = 1.0) -> np.ndarray:
    """Euclidean projection of p onto {v >= 0, c . v = total}, c > 0.

    The KKT form is v_i = max(p_i - lam * c_i, 0); with breakpoints
    t_i = p_i / c_i sorted in decreasing order, the multiplier is
    lam_j = (sum_{i<=j} c_i p_i - total) / sum_{i<=j} c_i^2 for the largest j
    such that t_(j) > lam_j (continuous quadratic-knapsack scan).
    """
    p = np.asarray(p, dtype=float)
    c = np.asarray(c, dtype=float)
    t = p / c
    order = np.argsort(t)[::-1]
    cp = np.cumsum((c * p)[order])
    cc = np.cumsum((c * c)[order])
    lams = (cp - total) / cc
    active = np.nonzero(t[order] > lams)[0]
    lam = lams[active[-1]] if active.size else lams[-1]
    return np.maximum(p - lam * c, 0.0)


@dataclass
class _Param:
    """Optimizer state: raw coordinate vector plus the shape metadata."""

    A: float
    symmetric: bool
    has_center: bool      # symmetric mode only: atom pinned at 0
    m: int                # number of (half-)locations
    x: np.ndarray         # (m,) locations; in [0,A] if symmetric else [-A,A]
    v: np.ndarray         # weights: (m + has_center,) if symmetric else (m,)

    def expand(self) -> tuple[np.ndarray, np.ndarray]:
        """Full atom arrays (possibly with coincident points near 0)."""
        if not self.symmetric:
            return self.x.copy(), self.v.copy()
        pairs_w = self.v[1:] if self.has_center else self.v
        locs = np.concatenate([-self.x[::-1], [0.0] if self.has_center else [], self.x])
        ws = np.concatenate(
            [pairs_w[::-1], [self.v[0]] if self.has_center else [], pairs_w]
        )
        return locs, ws

    def weight_constraint(self) -> np.ndarray:
        """c such that c . v = 1 reflects total probability one."""
        if not self.symmetric:
            return np.ones(self.v.size)
        c = np.full(self.v.size, 2.0)
        if self.has_center:
            c[0] = 1.0
        return c

    def fold_gradient(self, d_loc: np.ndarray, d_w: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Map full-atom gradients onto the reduced coordinates."""
        if not self.symmetric:
            return d_loc, d_w
        m, hc = self.m, self.has_center
        neg = slice(0, m)          # full index i holds -x[m-1-i]
        pos = slice(m + hc, 2 * m + hc)
        gx = d_loc[pos] - d_loc[neg][::-1]
        gw_pairs = d_w[pos] + d_w[neg][::-1]
        if hc:
            return gx, np.concatenate([[d_w[m]], gw_pairs])
        return gx, gw_pairs

    def project(self) -> "_Param":
        lo = 0.0 if self.symmetric else -self.A
        x = np.clip(self.x, lo, self.A)
        v = _project_weighted_simplex(self.v, self.weight_constraint())
        return replace(self, x=x, v=v)

    def shifted(self, t: float, gx: np.ndarray, gv: np.ndarray) -> "_Param":
        return replace(self, x=self.x + t * gx, v=self.v + t * gv)

    def flat(self) -> np.ndarray:
        return np.concatenate([self.x, self.v])


def _initial_param(A: float, K: int, symmetric: bool) -> _Param:
    """Equispaced atoms on [-A, A] with uniform weights."""
    full = np.linspace(-A, A, K) if K > 1 else np.array([0.0])
    if not symmetric:
        return _Param(A, False, False, K, full, np.full(K, 1.0 / K))
    has_center = K % 2 == 1
    x = full[full > 1e-12]
    m = x.size
    v = np.full(m + has_center, 1.0 / K)
    return _Param(A, True, has_center, m, x, v)


def _param_from_input(
    pi: DiscreteInput,
    K: int,
    symmetric: bool,
    prefer: tuple[float, ...] = (),
) -> _Param | None:
    """Embed a solved input as a warm start for a (possibly larger) K.

    Missing slots are filled with zero weight, which leaves the achieved
    information unchanged: first at the ``prefer`` locations (typically
    where the previous level's optimality check found i(x) > I, so the
    optimizer immediately has an ascent direction there), then at the
    midpoints of the largest location gaps.
    """
    locs, ws = pi.as_arrays()

    def next_slot(existing, lo):
        for cand in prefer:
            c = abs(float(cand)) if symmetric else float(cand)
            if existing.size == 0 or np.min(np.abs(existing - c)) > 1e-3:
                return c
        edges = np.sort(np.concatenate([[lo], existing, [pi.A]]))
        j = int(np.argmax(np.diff(edges)))
        return 0.5 * (edges[j] + edges[j + 1])

    if not symmetric:
        if locs.size > K:
            return None
        x = locs.copy()
        v = ws.copy()
        while x.size < K:
            x = np.append(x, next_slot(x, -pi.A))
            v = np.append(v, 0.0)
        order = np.argsort(x)
        return _Param(pi.A, False, False, K, x[order], v[order])

    has_center = K % 2 == 1
    m = K // 2
    pos = locs > 1e-12
    center = np.abs(locs) <= 1e-12
    x = locs[pos]
    vp = ws[pos]
    w0 = float(ws[center].sum())
    if has_center:
        v0 = w0
    else:
        # Fold any center mass into a coincident pair at 0.
        if w0 > 0.0:
            x = np.concatenate([[0.0], x])
            vp = np.concatenate([[0.5 * w0], vp])
        v0 = None
    if x.size > m:
        return None
    while x.size < m:
        x = np.append(x, next_slot(x, 0.0))
        vp = np.append(vp, 0.0)
    order = np.argsort(x)
    x, vp = x[order], vp[order]
    v = np.concatenate([[v0], vp]) if has_center else vp
    return _Param(pi.A, True, has_center, m, x, v)


def _objective(A: float, locs: np.ndarray, ws: np.ndarray, spec: QuadratureSpec) -> float:
    """I for raw atom arrays (duplicates allowed during optimization)."""
    logw = np.log(np.maximum(ws, 1e-300))

    def fam(y):
        d = y[None, :] - locs[:, None]
        z = logw[:, None] - 0.5 * d * d - LOG_SQRT_2PI
        zmax = z.max(axis=0)
        lf = zmax + np.log(np.exp(z - zmax).sum(axis=0))
        return (-np.exp(lf) * lf)[None, :]

    vals, _ = adaptive_quad_family(fam, -A - TAIL_PAD, A + TAIL_PAD, spec)
    return float(vals[0]) - HALF_LOG_2PI_E


def _pg_maximize(param: _Param, cfg: SolveConfig) -> tuple[_Param, float, bool, int]:
    """Projected-gradient ascent with Armijo backtracking.

    Trial steps start from the Barzilai-Borwein length when the local
    curvature supports it (it collapses the iteration count on the
    ill-conditioned location/weight mix), then backtrack.  The acceptance
    test carries a slack of a few quadrature tolerances: near the optimum the
    true per-step increment drops below the integration noise, and without
    the slack the line search would stall on noise rejections long before the
    gradient map is small.  Returns (param, I, converged, iterations);
    converged means the sup-norm of the unit-step projected-gradient map
    fell below cfg.grad_tol.
    """
    spec = cfg.quad
    noise_slack = 5.0 * spec.abs_tol
    param = param.project()

    def eval_grad(p: _Param):
        locs, ws = p.expand()
        info, i_vec, d_loc = _info_stats(p.A, locs, ws, spec, want_locations=True)
        gx, gv = p.fold_gradient(d_loc, i_vec - info)
        return info, gx, gv

    info, gx, gv = eval_grad(param)
    t = cfg.step_init
    prev_flat = None
    prev_grad = None
    converged = False
    it = 0
    while it < cfg.max_iters:
        it += 1
        # Stationarity: displacement of the unit-step projected gradient map.
        probe = param.shifted(1.0, gx, gv).project()
        gm = float(np.max(np.abs(probe.flat() - param.flat())))
        if gm <= cfg.grad_tol:
            converged = True
            break
        flat = param.flat()
        grad = np.concatenate([gx, gv])
        if prev_flat is not None:
            s = flat - prev_flat
            y = grad - prev_grad
            curv = -float(np.dot(s, y))      # positive where I is locally concave
            if curv > 1e-18:
                # Directions like a pair of atoms collapsing into one are
                # nearly flat (curvature ~1e-5), so the cap must be generous.
                t = min(max(float(np.dot(s, s)) / curv, 1e-8), 1e7)
        accepted = False
        for _ in range(60):
            trial = param.shifted(t, gx, gv).project()
            d = trial.flat() - flat
            if not np.any(d):
                t *= cfg.step_shrink
                continue
            info_t = _objective(trial.A, *trial.expand(), spec)
            gain = float(np.dot(grad, d))
            if info_t >= info + cfg.armijo * gain - noise_slack:
                prev_flat, prev_grad = flat, grad
                param, info = trial, info_t
                accepted = True
                break
            t *= cfg.step_shrink
        if not accepted or t < 1e-13:
            break
        info, gx, gv = eval_grad(param)
    return param, info, converged, it


def solve_fixed_k(
    A: float,
    K: int,
    config: SolveConfig | None = None,
    init: DiscreteInput | None = None,
    perturb_seed: int | None = None,
    prefer_locations: tuple[float, ...] = (),
) -> tuple[DiscreteInput, float, bool]:
    """Locally optimal input with at most K surviving atoms, and its I.

    Projected-gradient iterations with backtracking line search; locations
    clamped to the box, weights projected onto the simplex.  Weights below
    1e-9 are pruned and coincident atoms merged before the final evaluation.
    Deterministic given ``config.seed``; returns (input, info_nats,
    converged), with ``converged`` False when the iteration cap was hit while
    the gradient map was still above tolerance.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    if not (A > 0.0 and math.isfinite(A)):
        raise ValueError(f"amplitude must be positive and finite, got {A}")
    cfg = config or SolveConfig()
    if init is not None:
        param = _param_from_input(init, K, cfg.symmetric, prefer=prefer_locations)
        if param is None:
            param = _initial_param(A, K, cfg.symmetric)
    else:
        param = _initial_param(A, K, cfg.symmetric)
    if perturb_seed is not None:
        rng = np.random.default_rng(perturb_seed)
        spacing = A / max(K, 2)
        jitter = rng.uniform(-0.25, 0.25, size=param.x.shape) * spacing
        param = replace(param, x=param.x + jitter).project()

    param, _, converged, _ = _pg_maximize(param, cfg)
    locs, ws = param.expand()
    pi = DiscreteInput.normalized(A, locs, ws)
    info = mutual_information(pi, cfg.quad)
    condensed = DiscreteInput.normalized(A, locs, ws, merge_tol=_CONDENSE_TOL)
    if condensed.k < pi.k:
        info_c = mutual_information(condensed, cfg.quad)
        if info_c >= info - _CONDENSE_INFO_TOL:
            return condensed, info_c, converged
    return pi, info, converged


def solve_capacity(A: float, config: SolveConfig | None = None) -> SolveReport:
    """Capacity, optimal input, and support size at amplitude A.

    Runs ``solve_fixed_k`` for K = K0, K0+2 (symmetric mode; +1 otherwise),
    escalating until both KKT residuals pass ``config.kkt_eps``.  Each K is
    attempted from the equispaced start, a warm start padded from the
    previous K's best, and, if those stall, seeded perturbed restarts.
    Reaching ``max_k`` without certification returns the best report flagged
    unconverged.
    """
    if not (A > 0.0 and math.isfinite(A)):
        raise ValueError(f"amplitude must be positive and finite, got {A}")
    cfg = config or SolveConfig()
    t0 = time.perf_counter()
    if cfg.initial_k is not None:
        k0 = cfg.initial_k
    else:
        k0 = max(1, math.ceil(dytso_lower_bound(A) - 1e-12))
        # In symmetric mode walk odd K only: a center-plus-pairs support can
        # express either parity (the center weight just goes to zero when the
        # optimum is even), whereas an even-K run facing an odd optimum must
        # crawl a pair of atoms together through a nearly flat direction.
        if cfg.symmetric and k0 % 2 == 0:
            k0 += 1
        k0 = min(k0, cfg.max_k)
    step = 2 if cfg.symmetric else 1

    history: list[EscalationStep] = []
    best_overall = None   # (pi, info, r_s, r_g)
    prev_best: DiscreteInput | None = None
    prev_violation: tuple[float, ...] = ()
    # Optimality checks run at the library default tolerance: the residuals
    # are compared against kkt_eps, orders above the integration error.
    kkt_spec = QuadratureSpec()

    K = k0
    while K <= cfg.max_k:
        attempts: list[tuple[DiscreteInput | None, int | None]] = []
        if prev_best is not None:
            attempts.append((prev_best, None))
        attempts.append((None, None))

        best_for_k = None
        passed = None

        def run(init, pseed):
            nonlocal best_for_k, passed
            pi, info, conv = solve_fixed_k(
                A, K, cfg, init=init, perturb_seed=pseed,
                prefer_locations=prev_violation,
            )
            r_s, r_g, x_viol = _kkt_scan(pi, kkt_spec, 2001)
            cand = (pi, info, r_s, r_g, conv, x_viol)
            if best_for_k is None or info > best_for_k[1]:
                best_for_k = cand
            if r_s <= cfg.kkt_eps and r_g <= cfg.kkt_eps:
                passed = cand
            return passed is not None

        for init, pseed in attempts:
            if run(init, pseed):
                break
        # Perturbed restarts only when the optimizer itself looks stuck: an
        # un-equalized support means it failed to reach stationarity.  A
        # clean solution whose only defect is a global violation just needs
        # a larger K.
        if passed is None and best_for_k[2] > cfg.kkt_eps:
            for r in range(cfg.restarts):
                pseed = int(np.random.default_rng((cfg.seed, K, r)).integers(2**31))
                if run(None, pseed):
                    break
        use = passed if passed is not None else best_for_k
        pi, info, r_s, r_g, conv, x_viol = use
        history.append(
            EscalationStep(
                k_tried=K,
                k_support=pi.k,
                info_nats=info,
                kkt_support=r_s,
                kkt_global=r_g,
                converged=passed is not None,
            )
        )
        if best_overall is None or info > best_overall[1]:
            best_overall = (pi, info, r_s, r_g)
        if passed is not None:
            return SolveReport(
                A=A,
                input=pi,
                capacity_nats=info,
                k=pi.k,
                kkt_support=r_s,
                kkt_global=r_g,
                converged=True,
                history=tuple(history),
                wall_time_s=time.perf_counter() - t0,
                eps=cfg.kkt_eps,
                seed=cfg.seed,
            )
        prev_best = pi
        # Seed the next level's fresh atoms where optimality failed hardest.
        prev_violation = (x_viol, -x_viol) if cfg.symmetric else (x_viol,)
        K += step

    pi, info, r_s, r_g = best_overall
    return SolveReport(
        A=A,
        input=pi,
        capacity_nats=info,
        k=pi.k,
        kkt_support=r_s,
        kkt_global=r_g,
        converged=False,
        history=tuple(history),
        wall_time_s=time.perf_counter() - t0,
        eps=cfg.kkt_eps,
        seed=cfg.seed,
    )
