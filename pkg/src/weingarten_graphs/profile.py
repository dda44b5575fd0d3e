"""Geometry of an (f_s, phi)-graph from its rho-function.

The height is ``phi(s) = int rho / sqrt(1 - rho^2) ds`` anchored at the
launch point, the angle function is ``theta = sqrt(1 - rho^2)`` and the
principal curvatures are ``-rho alpha_j`` (horizontal) and ``rho'``.
Sectional curvatures follow from the Gauss equation of ``M x R``.

Complete hypersurfaces are assembled from profile pieces by reflecting
across horizontal slices (:func:`assemble`).
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import TangencyMismatch
from .rho_solver import (RHO_ONE_GAP, NoRoot, TerminalKind, graded_grid, step_slope)

CONVEX_TOL = 1e-10
LOW_REGULARITY_SLOPE = 1e6

_GL20 = np.polynomial.legendre.leggauss(20)
_GL10 = np.polynomial.legendre.leggauss(10)


class Convexity(str, Enum):
    STRICT = "Strict"
    WEAK = "Weak"
    NONE = "None"


class Topology(str, Enum):
    SPHERE = "Sphere"
    ENTIRE_GRAPH = "EntireGraph"
    PERIODIC_ANNULUS = "PeriodicAnnulus"
    BIGRAPH = "BiGraph"
    GRAPH = "Graph"


# -- height function ---------------------------------------------------------------

def _integrand(sol, s):
    rho = sol.evaluate(s)
    comp = np.maximum(sol.evaluate_comp(s), 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return rho / np.sqrt(comp * (2.0 - comp))


def _gl(sol, a, b, rule, singular=None):
    """Gauss-Legendre on each [a_i, b_i]; singular = 'left'/'right' uses s = end -+ u^2."""
    x, w = rule
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if singular is None:
        mid = 0.5 * (a + b)[:, None]
        half = 0.5 * (b - a)[:, None]
        pts = mid + half * x[None, :]
        vals = _integrand(sol, pts.ravel()).reshape(pts.shape)
        return (half[:, 0]) * (vals @ w)
    # substitution removes the inverse square root at the vertical end
    end = a if singular == "left" else b
    L = np.sqrt(b - a)
    u = 0.5 * L[:, None] * (x[None, :] + 1.0)
    sgn = 1.0 if singular == "left" else -1.0
    pts = end[:, None] + sgn * u * u
    # use the distance actually represented after rounding, so the
    # jacobian cancels the singularity consistently
    u_eff = np.sqrt(np.abs(pts - end[:, None]))
    vals = _integrand(sol, pts.ravel()).reshape(pts.shape) * 2.0 * u_eff
    return 0.5 * L * (vals @ w)


def _interval_integrals(sol, a, b, singular=None, depth=0):
    fine = _gl(sol, a, b, _GL20, singular)
    coarse = _gl(sol, a, b, _GL10, singular)
    bad = np.abs(fine - coarse) > 1e-13 * np.maximum(1.0, np.abs(fine))
    if depth < 8 and np.any(bad):
        idx = np.nonzero(bad)[0]
        aa, bb = a[idx], b[idx]
        mm = 0.5 * (aa + bb)
        if singular == "left":
            left = _interval_integrals(sol, aa, mm, "left", depth + 1)
            right = _interval_integrals(sol, mm, bb, None, depth + 1)
        elif singular == "right":
            left = _interval_integrals(sol, aa, mm, None, depth + 1)
            right = _interval_integrals(sol, mm, bb, "right", depth + 1)
        else:
            left = _interval_integrals(sol, aa, mm, None, depth + 1)
            right = _interval_integrals(sol, mm, bb, None, depth + 1)
        fine = fine.copy()
        fine[idx] = left + right
    return fine


def integrate_phi(sol, grid=None):
    """Height ``phi`` at the grid points (default: the solution samples).

    Returns
    -------
    phi : ndarray
    info : dict
        ``divergent`` when the profile ends on a cusp (phi is then only
        given up to the last regular interval) and ``tail_bound_ok`` for the
        bound ``tail <= (pi/2 - arcsin rho_a) / inf|rho'|`` near vertical ends.
    """
    s = np.asarray(sol.s if grid is None else grid, dtype=float)
    info = {"divergent": False, "tail_bound_ok": True, "tail_bounds": []}
    if sol.horizontal_hyperplane or len(s) < 2:
        return np.zeros_like(s), info
    comp_end = np.asarray(sol.evaluate_comp(np.array([s[0], s[-1]])))
    left_sing = bool(comp_end[0] <= 0.0)
    right_sing = bool(comp_end[1] <= 0.0)
    cusp = (sol.terminal.kind is TerminalKind.REACHES_ONE
            and not (sol.terminal.rho_prime_at_delta or 0) * sol.direction > 0)

    a, b = s[:-1], s[1:]
    pieces = np.zeros(len(a))
    mid = slice(1 if left_sing else 0, len(a) - 1 if right_sing else len(a))
    if mid.stop > mid.start:
        pieces[mid] = _interval_integrals(sol, a[mid], b[mid])
    if left_sing:
        if cusp and sol.direction < 0:
            pieces[0] = np.nan
        else:
            pieces[:1] = _interval_integrals(sol, a[:1], b[:1], "left")
    if right_sing and len(a) > (1 if left_sing else 0):
        if cusp and sol.direction > 0:
            pieces[-1] = np.nan
        else:
            pieces[-1:] = _interval_integrals(sol, a[-1:], b[-1:], "right")
    if np.any(np.isnan(pieces)):
        info["divergent"] = True
        pieces = np.nan_to_num(pieces, nan=0.0)

    i0 = int(np.argmin(np.abs(s - sol.s_start)))
    phi = np.zeros_like(s)
    phi[i0 + 1:] = np.cumsum(pieces[i0:])
    phi[:i0] = -np.cumsum(pieces[:i0][::-1])[::-1]

    for end, sing in (("left", left_sing), ("right", right_sing)):
        if sing and not info["divergent"]:
            ok, tail, bound = _tail_bound(sol, s, phi, end)
            info["tail_bounds"].append({"end": end, "tail": tail, "bound": bound})
            info["tail_bound_ok"] = info["tail_bound_ok"] and ok
    return phi, info


def _tail_bound(sol, s, phi, end, rho_a=0.5):
    """Check the tail of phi next to a vertical end against
    ``(pi/2 - arcsin rho_a) / inf |rho'|`` on the monotone stretch where rho >= rho_a."""
    rho = np.asarray(sol.evaluate(s))
    rp = np.asarray(sol.evaluate_prime(s))
    towards = 1.0 if end == "right" else -1.0
    inside = (rho >= rho_a) & (rp * towards > 0)
    order = np.arange(len(s))[::-1] if end == "right" else np.arange(len(s))
    # the end sample itself sits on the vertical and always belongs to the tail
    inside[order[0]] = True
    k = 0
    while k + 1 < len(order) and inside[order[k + 1]]:
        k += 1
    sel = np.sort(order[:k + 1])
    if len(sel) < 2:
        return True, 0.0, math.inf
    tail = float(abs(phi[sel[-1]] - phi[sel[0]]))
    slopes = np.abs(rp[sel])
    if np.min(slopes) <= 0:
        return True, tail, math.inf
    r_a = float(rho[order[k]])
    bound = (math.pi / 2 - math.asin(min(1.0, r_a))) / float(np.min(slopes))
    return tail <= bound + 1e-9, tail, bound


# -- curvature fields --------------------------------------------------------------

@dataclass
class ProfileCurve:
    """Per-sample geometry along a profile.  Horizontal quantities are kept
    per branch (``k_h[j]``, multiplicity ``mults[j]``)."""

    s: np.ndarray
    rho: np.ndarray
    rho_prime: np.ndarray
    comp: np.ndarray
    phi: np.ndarray
    theta: np.ndarray
    k_h: np.ndarray
    mults: tuple
    k_n: np.ndarray
    H1: np.ndarray
    H2: np.ndarray
    K_tan: dict
    K_mix: np.ndarray
    S: np.ndarray
    family: object
    c: float
    solution: object = None
    convexity: Convexity = Convexity.NONE
    flags: dict = field(default_factory=dict)

    @property
    def theta2(self):
        return self.comp * (2.0 - self.comp)

    @property
    def k_min(self):
        return np.minimum(self.k_h.min(axis=0), self.k_n)

    @property
    def k_max(self):
        return np.maximum(self.k_h.max(axis=0), self.k_n)

    @property
    def singular_ends(self):
        return (bool(self.comp[0] <= 0.0), bool(self.comp[-1] <= 0.0))

    def S_formula(self):
        eps = self.family.epsilon
        n = self.family.n
        return 2 * self.H2 + eps * (n - 1) * (2 * self.theta2 + n - 2)

    def sectional_sum(self):
        total = np.zeros_like(self.s)
        for (j, l), K in self.K_tan.items():
            if j == l:
                total += self.mults[j] * (self.mults[j] - 1) * K
            else:
                total += 2 * self.mults[j] * self.mults[l] * K
        for j, m in enumerate(self.mults):
            total += 2 * m * self.K_mix[j]
        return total


def branch_curvatures(family, s, rho, rho_prime):
    """Horizontal curvatures per branch, with the residue limit at s = 0."""
    s = np.asarray(s, dtype=float)
    out = []
    at_origin = (s == family.domain[0]) & family.origin_singular
    safe_s = np.where(at_origin, 1.0, s)
    for j, br in enumerate(family.branches):
        with np.errstate(divide="ignore", invalid="ignore"):
            alpha = np.asarray(br.alpha(safe_s), dtype=float) + 0 * safe_s
        k = -rho * alpha
        if family.origin_singular:
            k = np.where(at_origin, -family.residues[j] * rho_prime, k)
        if np.any(np.isnan(k)):
            raise ValueError(f"branch {br.source!r} produced NaN")
        out.append(k)
    return np.array(out)


def classify_convexity(k_h, k_n, tol=CONVEX_TOL):
    lo = min(float(k_h.min()), float(k_n.min()))
    hi = max(float(k_h.max()), float(k_n.max()))
    if lo > tol or hi < -tol:
        return Convexity.STRICT
    if lo >= -tol or hi <= tol:
        return Convexity.WEAK
    return Convexity.NONE


def fields_along(sol, family=None, c=None, s=None, rho=None, rho_prime=None, comp=None,
                 phi=None, flags=None):
    """Fill every per-sample field of a profile.

    By default samples are taken from ``sol``; explicit arrays override.
    """
    family = family if family is not None else sol.family
    c = c if c is not None else (sol.pair.c if sol.pair is not None else None)
    s = sol.s if s is None else s
    rho = sol.rho if rho is None else rho
    rp = sol.rho_prime if rho_prime is None else rho_prime
    comp = sol.comp if comp is None else comp
    if phi is None:
        phi, info = integrate_phi(sol, s)
        flags = dict(flags or {}, **info)
    eps = family.epsilon
    theta2 = np.maximum(comp * (2.0 - comp), 0.0)
    k_h = branch_curvatures(family, s, rho, rp)
    mults = tuple(b.mult for b in family.branches)
    m = np.array(mults, dtype=float)[:, None]
    H1 = (m * k_h).sum(axis=0) + rp
    sumsq = (m * k_h * k_h).sum(axis=0) + rp * rp
    H2 = 0.5 * (H1 * H1 - sumsq)
    K_tan = {}
    nb = len(mults)
    for j in range(nb):
        for l in range(j, nb):
            if j == l and mults[j] < 2:
                continue
            K_tan[(j, l)] = k_h[j] * k_h[l] + eps
    K_mix = k_h * rp[None, :] + eps * theta2[None, :]
    n = family.n
    S = 2 * H2 + eps * (n - 1) * (2 * theta2 + n - 2)
    prof = ProfileCurve(np.asarray(s, float), rho, rp, comp, phi, np.sqrt(theta2), k_h, mults,
                        rp.copy(), H1, H2, K_tan, K_mix, S, family, c, sol,
                        classify_convexity(k_h, rp), dict(flags or {}))
    prof.flags["low_regularity_junction"] = bool(np.any(np.abs(rp) > LOW_REGULARITY_SLOPE))
    return prof


def build_profile(sol, h_max=0.01, q=0.02):
    """Profile on a graded grid (denser near vertical ends).

    Closed-form solutions are already graded.  For numeric ones rho comes
    from the solution's dense output and rho' is recomputed from the
    slope equation, so every sample satisfies the Weingarten equation.
    """
    if sol.closed_form is not None or sol.horizontal_hyperplane:
        return fields_along(sol)
    lo, hi = float(sol.s[0]), float(sol.s[-1])
    left, right = sol.singular_ends
    grid = graded_grid(lo, hi, left, right, h_max=h_max, q=q)
    keep = {0: None, len(grid) - 1: None}
    rho = np.asarray(sol.evaluate(grid), dtype=float)
    comp = np.asarray(sol.evaluate_comp(grid), dtype=float)
    guess = np.asarray(sol.evaluate_prime(grid), dtype=float)
    rp = np.empty_like(grid)
    for i, si in enumerate(grid):
        if i in keep:
            j = 0 if i == 0 else -1
            rho[i], comp[i], rp[i] = sol.rho[j], sol.comp[j], sol.rho_prime[j]
            continue
        try:
            rp[i] = step_slope(sol.pair, si, rho[i], comp[i] * (2 - comp[i]), guess[i])
        except NoRoot:
            rp[i] = guess[i]
    return fields_along(sol, s=grid, rho=rho, rho_prime=rp, comp=comp)


# -- assembly ------------------------------------------------------------------------

@dataclass
class Piece:
    """A profile placed at height ``offset + phi`` (or ``offset - phi`` if reflected)."""

    profile: ProfileCurve
    offset: float = 0.0
    reflected: bool = False

    @property
    def height(self):
        return self.offset - self.profile.phi if self.reflected else self.offset + self.profile.phi


@dataclass
class HeightExtent:
    t_min: float
    t_max: float
    unbounded_below: bool = False
    unbounded_above: bool = False
    height_bound_ok: bool = None


@dataclass
class HypersurfaceModel:
    topology: Topology
    pieces: list
    symmetry_planes: list
    convexity: Convexity
    period: float = None
    pair: object = None
    meta: dict = field(default_factory=dict)

    @property
    def profiles(self):
        seen = []
        for p in self.pieces:
            if all(p.profile is not q for q in seen):
                seen.append(p.profile)
        return seen


def _check_vertical(profile, end, what):
    comp = profile.comp[0] if end == "left" else profile.comp[-1]
    if comp > RHO_ONE_GAP:
        raise TangencyMismatch(f"{what}: rho = {1 - comp:.9g} at the junction, not vertical")


def _s_start_end(profile):
    sol = profile.solution
    if sol is not None and sol.direction < 0:
        return "right"
    return "left"


def assemble(profile, mode, meta=None):
    """Assemble a complete model from one profile piece.

    Modes ``Sphere`` (double across ``t = phi(delta)``), ``Periodic``
    (reflect across ``t = phi(lambda_bar)``, period ``2 phi(lambda_bar)``),
    ``Double`` (mirror across ``t = 0``), ``Entire`` and ``Graph``.
    """
    meta = dict(meta or {})
    pair = profile.solution.pair if profile.solution is not None else None
    mode = mode.lower()
    if mode == "sphere":
        _check_vertical(profile, "right", "sphere equator")
        top = float(profile.phi[-1])
        pieces = [Piece(profile, 0.0, False), Piece(profile, 2 * top, True)]
        return HypersurfaceModel(Topology.SPHERE, pieces, [top], profile.convexity, None, pair, meta)
    if mode == "periodic":
        _check_vertical(profile, "left", "annulus launch")
        _check_vertical(profile, "right", "annulus return")
        top = float(profile.phi[-1])
        period = 2 * top
        if not period > 0:
            raise TangencyMismatch("annulus period must be positive")
        pieces = [Piece(profile, 0.0, False), Piece(profile, period, True)]
        return HypersurfaceModel(Topology.PERIODIC_ANNULUS, pieces, [0.0, top], profile.convexity,
                                 period, pair, meta)
    if mode == "double":
        _check_vertical(profile, _s_start_end(profile), "bigraph junction")
        pieces = [Piece(profile, 0.0, False), Piece(profile, 0.0, True)]
        return HypersurfaceModel(Topology.BIGRAPH, pieces, [0.0], profile.convexity, None, pair, meta)
    if mode == "entire":
        return HypersurfaceModel(Topology.ENTIRE_GRAPH, [Piece(profile)], [], profile.convexity,
                                 None, pair, meta)
    if mode == "graph":
        return HypersurfaceModel(Topology.GRAPH, [Piece(profile)], [], profile.convexity,
                                 None, pair, meta)
    raise ValueError(f"unknown assembly mode {mode!r}")


def _open_ends(profile):
    """Truncated ends of a profile lying at infinity, each with a flag
    telling whether the height keeps growing there.

    Heuristic: a tail of bounded height needs rho to decay to zero at a
    rate bounded away from zero; any other truncated end is reported as
    unbounded.
    """
    sol = profile.solution
    if sol is None or sol.horizontal_hyperplane:
        return []
    term = sol.terminal
    if term.kind not in (TerminalKind.TRUNCATED, TerminalKind.DOMAIN_BOUNDARY):
        return []
    fam = profile.family
    sides = sol.meta.get("open_ends") or (("right",) if sol.direction > 0 else ("left",))
    out = []
    for side in sides:
        idx, bound = (-1, fam.domain[1]) if side == "right" else (0, fam.domain[0])
        if term.kind is TerminalKind.DOMAIN_BOUNDARY and math.isfinite(bound):
            continue
        if term.reason == "rho_vanishes":
            out.append((side, False))
            continue
        r = float(profile.rho[idx])
        rp = float(profile.rho_prime[idx])
        towards = 1.0 if side == "right" else -1.0
        decaying = r == 0.0 or (r <= 1e-3 and abs(rp) / r >= 0.1 and rp * towards < 0)
        out.append((side, not decaying))
    return out


def height_extent(model):
    """Height range of the model, with unbounded flags for open ends."""
    t_min, t_max = math.inf, -math.inf
    below = above = False
    for piece in model.pieces:
        t = piece.height
        t_min = min(t_min, float(np.min(t)))
        t_max = max(t_max, float(np.max(t)))
        for side, unbounded in _open_ends(piece.profile):
            if not unbounded:
                continue
            # phi increases towards the right end and decreases towards the left
            if (side == "right") != piece.reflected:
                above = True
            else:
                below = True
    ext = HeightExtent(t_min, t_max, below, above)
    ext.height_bound_ok = height_bound_holds(model)
    return ext


def height_bound_holds(model, tol=1e-6):
    """``max height <= 1 / inf k_0`` on strictly convex graph pieces starting
    at their lowest point; None when the precondition fails."""
    results = []
    for piece in model.pieces:
        prof = piece.profile
        if prof.convexity is not Convexity.STRICT or piece.reflected:
            continue
        k0 = float(np.min(np.abs(prof.k_min))) if np.all(prof.k_min > 0) else None
        if k0 is None or k0 <= 0:
            continue
        height = float(np.max(piece.height) - np.min(piece.height))
        results.append(height <= 1.0 / k0 + tol)
    if not results:
        return None
    return all(results)
