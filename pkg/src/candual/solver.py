"""Multistart safeguarded Newton search for stationary points of the dual.

Seeds are deterministic (uniform grid up to three dual dimensions, unscrambled
Sobol above that), each seed is refined by a damped Newton iteration on the
dual gradient with backtracking on its norm, iterates are kept strictly inside
the declared dual region by a fraction-to-boundary rule, and the converged
points are deduplicated and ordered by dual value.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc

from .dual import (
    Region,
    RegionLabel,
    classify_region,
    dual_state,
    equilibrium_solve,
)
from .errors import DomainError, SingularGError
from .problem import CanonicalProblem, primal_gradient, primal_value
from . import dual as _dual

__all__ = ["SearchConfig", "CriticalPair", "refine", "find_critical_points"]

# fraction-to-boundary safeguard against the dual-region walls
BOUNDARY_FRACTION = 0.99
# converged iterates this close to a closed wall are snapped onto it
SNAP_RTOL = 1e-9
# maximum step halvings inside one line search
MAX_BACKTRACK = 45


@dataclass(frozen=True)
class SearchConfig:
    """Multistart and Newton parameters.

    `box` is a list of per-coordinate (lo, hi) intervals for seeding; when
    omitted, the family's default box is used.  The box must lie inside the
    closure of the declared dual region.
    """

    starts: int = 64
    box: list[tuple[float, float]] | None = None
    tol_newton: float = 1e-10
    max_iter: int = 100
    dedup_radius: float = 1e-6

    def __post_init__(self):
        if self.starts < 1:
            raise ValueError("starts must be at least 1")
        if self.tol_newton <= 0 or self.max_iter < 1 or self.dedup_radius < 0:
            raise ValueError("invalid solver tolerances")


@dataclass(frozen=True)
class CriticalPair:
    """A dual stationary point with its recovered primal point and residuals."""

    sigma: np.ndarray
    x: np.ndarray
    primal_value: float
    dual_value: float
    xi_value: float
    grad_primal_norm: float
    grad_dual_norm: float
    gap_value: float
    region: RegionLabel
    converged: bool
    iterations: int
    on_domain_boundary: bool = False
    min_norm_recovery: bool = False


def _resolved_box(p: CanonicalProblem, cfg: SearchConfig) -> np.ndarray:
    box = cfg.box if cfg.box is not None else p.V.default_dual_box()
    box = np.asarray(box, dtype=float)
    if box.shape != (p.m, 2):
        raise ValueError(f"box must provide {p.m} (lo, hi) intervals, got shape {box.shape}")
    if np.any(box[:, 0] >= box[:, 1]):
        raise ValueError("box intervals must have lo < hi")
    lo, hi = p.V.conj_bounds()
    slack = 1e-12 * (1.0 + np.abs(np.where(np.isfinite(lo), lo, 0.0)))
    if np.any(box[:, 0] < lo - slack) or np.any(box[:, 1] > hi + slack):
        raise ValueError("box reaches outside the closure of the dual region")
    return box


def _seed_points(p: CanonicalProblem, cfg: SearchConfig, box: np.ndarray) -> np.ndarray:
    m = p.m
    if m <= 3:
        k = int(np.ceil(cfg.starts ** (1.0 / m)))
        axes = [np.linspace(box[i, 0], box[i, 1], k) for i in range(m)]
        mesh = np.meshgrid(*axes, indexing="ij")
        seeds = np.stack([g.ravel() for g in mesh], axis=-1)
    else:
        sampler = qmc.Sobol(d=m, scramble=False)
        unit = sampler.random(cfg.starts)
        seeds = box[:, 0] + unit * (box[:, 1] - box[:, 0])
    # keep seeds strictly inside finite dual-region walls
    lo, hi = p.V.conj_bounds()
    inset_lo = np.where(np.isfinite(lo), lo + 1e-9 * (1.0 + np.abs(lo)), -np.inf)
    inset_hi = np.where(np.isfinite(hi), hi - 1e-9 * (1.0 + np.abs(hi)), np.inf)
    return np.clip(seeds, inset_lo, inset_hi)


def _boundary_cap(sigma, step, lo, hi):
    """Largest step fraction keeping sigma inside the walls with margin."""
    t = 1.0
    for k in range(sigma.size):
        if step[k] < 0 and np.isfinite(lo[k]):
            t = min(t, BOUNDARY_FRACTION * (sigma[k] - lo[k]) / -step[k])
        elif step[k] > 0 and np.isfinite(hi[k]):
            t = min(t, BOUNDARY_FRACTION * (hi[k] - sigma[k]) / step[k])
    return t


def _snap_to_closed_walls(p: CanonicalProblem, sigma):
    lo, hi = p.V.conj_bounds()
    snapped = sigma.copy()
    hit = False
    if p.V.conj_lo_closed:
        near = np.isfinite(lo) & (np.abs(sigma - lo) <= SNAP_RTOL * (1.0 + np.abs(lo)))
        snapped[near] = lo[near]
        hit = hit or bool(np.any(near))
    if p.V.conj_hi_closed:
        near = np.isfinite(hi) & (np.abs(sigma - hi) <= SNAP_RTOL * (1.0 + np.abs(hi)))
        snapped[near] = hi[near]
        hit = hit or bool(np.any(near))
    return snapped, hit


def _newton_direction(grad, hess):
    try:
        step = np.linalg.solve(hess, -grad)
        if np.all(np.isfinite(step)):
            return step
    except np.linalg.LinAlgError:
        pass
    # singular dual Hessian: descend the squared gradient norm instead
    step = -hess @ grad
    if np.linalg.norm(step) <= 1e-14 * np.linalg.norm(grad):
        step = -grad
    return step


def _package(p, sigma, grad_norm, iterations, cfg) -> CriticalPair:
    sol = equilibrium_solve(p, sigma)
    x = sol.x
    try:
        pv = primal_value(p, x)
        gp = float(np.linalg.norm(primal_gradient(p, x)))
    except DomainError:
        pv, gp = float("nan"), float("nan")
    dv = float(-0.5 * x @ _dual.F_of(p, sigma) - p.V.conj_value(sigma))
    xv = _dual.xi_total(p, x, sigma)
    gv = _dual.gap(p, x, sigma)
    region = classify_region(p, sigma)
    _, on_wall = _snap_to_closed_walls(p, sigma)
    value_gap_ok = np.isfinite(pv) and abs(pv - dv) <= 1e-8 * (1.0 + abs(pv))
    converged = bool(grad_norm <= cfg.tol_newton and value_gap_ok)
    return CriticalPair(
        sigma=sigma.copy(),
        x=x.copy(),
        primal_value=pv,
        dual_value=dv,
        xi_value=xv,
        grad_primal_norm=gp,
        grad_dual_norm=float(grad_norm),
        gap_value=gv,
        region=region,
        converged=converged,
        iterations=iterations,
        on_domain_boundary=on_wall,
        min_norm_recovery=sol.rank_deficient,
    )


def refine(p: CanonicalProblem, sigma0, cfg: SearchConfig | None = None) -> CriticalPair:
    """Damped Newton iteration on the dual gradient from a single start.

    Returns the best iterate found; `converged` is false when the iteration
    budget or the line search ran out before the gradient tolerance was met.
    """
    cfg = cfg or SearchConfig()
    sigma = p.check_sigma(np.array(sigma0, dtype=float, copy=True))
    state = dual_state(p, sigma)
    if state is None:
        raise SingularGError("G is singular or sigma infeasible at the starting point")
    lo, hi = p.V.conj_bounds()

    _, grad, hess, _ = state
    gnorm = float(np.linalg.norm(grad))
    best_sigma, best_gnorm = sigma.copy(), gnorm
    iterations = 0

    for _ in range(cfg.max_iter):
        if gnorm <= cfg.tol_newton:
            break
        step = _newton_direction(grad, hess)
        t = _boundary_cap(sigma, step, lo, hi)
        if t <= 0:
            break
        accepted = None
        for _ in range(MAX_BACKTRACK):
            trial = sigma + t * step
            st = dual_state(p, trial)
            if st is not None and np.all(np.isfinite(st[1])):
                tnorm = float(np.linalg.norm(st[1]))
                if tnorm < gnorm:
                    accepted = (trial, st, tnorm)
                    break
            t *= 0.5
        if accepted is None:
            break
        sigma, state, gnorm = accepted
        _, grad, hess, _ = state
        iterations += 1
        if gnorm < best_gnorm:
            best_sigma, best_gnorm = sigma.copy(), gnorm

    sigma, gnorm = best_sigma, best_gnorm
    snapped, hit = _snap_to_closed_walls(p, sigma)
    if hit:
        st = dual_state(p, snapped)
        if st is not None:
            snorm = float(np.linalg.norm(st[1]))
            if snorm <= max(gnorm, cfg.tol_newton):
                sigma, gnorm = snapped, snorm
    return _package(p, sigma, gnorm, iterations, cfg)


CLASSIFIABLE = (Region.SA_PLUS_INTERIOR, Region.SA_PLUS_BOUNDARY, Region.SA_MINUS)


def find_critical_points(
    p: CanonicalProblem,
    cfg: SearchConfig | None = None,
    include_unclassifiable: bool = False,
) -> list[CriticalPair]:
    """Locate stationary points of the dual objective inside the search box.

    Returns converged, deduplicated pairs ordered by dual value (descending).
    Stationary points where G is indefinite carry no extremality information,
    so they are dropped unless `include_unclassifiable` is set.
    """
    cfg = cfg or SearchConfig()
    box = _resolved_box(p, cfg)
    seeds = _seed_points(p, cfg, box)
    center = box.mean(axis=1)

    found: list[CriticalPair] = []
    for seed in seeds:
        s = seed.copy()
        ok = dual_state(p, s) is not None
        for _ in range(2):
            if ok:
                break
            s = s + 1e-3 * (center - s)  # nudge off a singular manifold
            ok = dual_state(p, s) is not None
        if not ok:
            continue
        try:
            pair = refine(p, s, cfg)
        except (SingularGError, DomainError):
            continue
        if pair.converged:
            found.append(pair)

    if not include_unclassifiable:
        found = [q for q in found if q.region.tag in CLASSIFIABLE]

    # dedup: prefer the sharpest gradient within each cluster
    found.sort(key=lambda q: q.grad_dual_norm)
    kept: list[CriticalPair] = []
    for q in found:
        if all(np.max(np.abs(q.sigma - r.sigma)) > cfg.dedup_radius for r in kept):
            kept.append(q)
    kept.sort(key=lambda q: (-q.dual_value, tuple(q.sigma)))
    return kept
