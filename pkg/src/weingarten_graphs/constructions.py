"""Builders for the explicit constructions.

Rotational examples live over geodesic spheres, Delaunay-type annuli are
launched from a vertical point ``(lambda, rho = 1)``, and the translation
invariant examples in hyperbolic space live over horospheres (parabolic)
or equidistant hypersurfaces (hyperbolic).  For the scalar curvature
function W_S all of these have closed forms; the generic numeric path is
available for any elliptic W.
"""

import math
from dataclasses import dataclass

import numpy as np

from .ambient import FamilyKind, arctan_eps, make_family, tan_eps
from .errors import DegenerateHyperplane, DomainError, NoRoot, OutOfRange
from .profile import assemble, build_profile, fields_along, height_extent
from .rho_solver import (ClosedFormRho, CscMode, CscParameters, Classification, Interior, Origin,
                         Terminal, TerminalKind, classify_terminal, closed_form_solution,
                         csc_closed_form, frak_c, integrate_rho, ws_pair)
from .weingarten import PairConfig

DEFAULT_SPAN = 50.0


@dataclass(frozen=True)
class AnnulusSpec:
    n: int
    eps: int
    c: float
    lam: float
    lam_bar: float = None


# -- rotational --------------------------------------------------------------------

def build_rotational(W, family, c, s_max=None, **opts):
    """Numeric rotational (c, W)-graph launched at the family's origin.

    A sphere is assembled when rho reaches 1 with positive slope, an
    entire graph when the integration runs out admissibly, and a single
    graph piece otherwise (its classification is stored in ``meta``).
    """
    pair = PairConfig(float(c), W, family)
    sol = integrate_rho(pair, Origin(), s_max=s_max, **opts)
    if sol.horizontal_hyperplane:
        raise DegenerateHyperplane(f"W(0, ..., 0, 1) = c = {c}: the graph is a horizontal slice")
    kind = classify_terminal(sol)
    prof = build_profile(sol)
    meta = {"construction": "rotational", "classification": kind.value, "c": float(c),
            "W": W.name, "family": family.describe()}
    if kind is Classification.SPHERE_CAP:
        return assemble(prof, "sphere", meta)
    if kind is Classification.ENTIRE:
        return assemble(prof, "entire", meta)
    return assemble(prof, "graph", meta)


def _csc_range_check(n, eps, c):
    edge = eps * n * (n - 1)
    if c == edge:
        raise DegenerateHyperplane(f"c = eps n (n-1) = {edge}: the horizontal slice is the solution")
    if c < edge:
        raise OutOfRange(f"rotational W_S graphs need c > eps n (n-1) = {edge}, got c = {c}")


def build_rotational_csc(n, eps, c, method="closed", s_max=None):
    """Rotational constant scalar curvature hypersurface.

    A sphere when c > 0, an entire graph when c <= 0 (hyperbolic space).
    ``method="numeric"`` integrates the Weingarten equation instead of
    sampling the closed form; the closed form is attached either way.
    """
    _csc_range_check(n, eps, c)
    pair = ws_pair(n, eps, c)
    params = CscParameters(n, eps, float(c))
    cf, meta = csc_closed_form(CscMode.ROTATIONAL_SEED, params)
    delta = meta["delta"]
    span = DEFAULT_SPAN if s_max is None else float(s_max)
    if method == "numeric":
        sol = integrate_rho(pair, Origin(), s_max=s_max)
        kind = classify_terminal(sol)
        prof = build_profile(sol)
    else:
        if math.isfinite(delta):
            term = Terminal(TerminalKind.REACHES_ONE, delta, meta["rho_prime_at_delta"], "rho_one")
            sol = closed_form_solution(cf, pair, 0.0, delta, 0.0, term, origin=True)
        else:
            term = Terminal(TerminalKind.TRUNCATED, span, None, "s_max")
            sol = closed_form_solution(cf, pair, 0.0, span, 0.0, term, origin=True)
        sol.meta["family"] = pair.family
        kind = classify_terminal(sol)
        prof = fields_along(sol)
    info = {"construction": "rotational_csc", "n": n, "eps": eps, "c": float(c),
            "frak_C": params.frak_C, "delta": delta, "K": c / (n * (n - 1)),
            "method": method, "classification": kind.value, "closed_form": cf}
    if kind is Classification.SPHERE_CAP:
        return assemble(prof, "sphere", info)
    return assemble(prof, "entire", info)


# -- annuli ------------------------------------------------------------------------

def annuli_threshold(n, eps, c):
    """Supremum of launch radii lambda for which tau decreases at lambda."""
    if c <= eps * n * (n - 1):
        raise OutOfRange(f"annuli need c > eps n (n-1) = {eps * n * (n - 1)}")
    q = n * frak_c(n, eps, c) + 2 * eps
    if q <= 0:
        return math.inf
    return arctan_eps(math.sqrt((n - 2) / q), eps)


def build_annulus(n, eps, c, lam, s_max=None):
    """Delaunay-type annulus launched vertically at ``s = lam``.

    Periodic in the vertical direction when tau returns to 1 at some
    ``lam_bar``; otherwise (eps = -1, frak_C <= 1) a bigraph of unbounded
    height with ``tau -> frak_C``.
    """
    thr = annuli_threshold(n, eps, c)
    if not 0 < lam < thr:
        raise OutOfRange(f"lambda = {lam} outside (0, {thr:.12g})")
    pair = ws_pair(n, eps, c)
    fc = frak_c(n, eps, c)
    sol = integrate_rho(pair, Interior(float(lam), 1.0, 1), s_max=s_max)
    cf, _ = csc_closed_form(CscMode.ANNULUS, CscParameters(n, eps, float(c)), {"lam": lam})
    prof = build_profile(sol)
    meta = {"construction": "annulus", "n": n, "eps": eps, "c": float(c), "lam": float(lam),
            "frak_C": fc, "threshold": thr, "closed_form": cf}
    if sol.terminal.kind is TerminalKind.REACHES_ONE:
        lam_bar = sol.delta
        dtau = 2.0 * sol.terminal.rho_prime_at_delta
        if not dtau > 0:
            raise DomainError(f"tau returns to 1 at {lam_bar} with tau' = {dtau} <= 0")
        meta.update(lam_bar=lam_bar, dtau_lam_bar=dtau,
                    annulus=AnnulusSpec(n, eps, float(c), float(lam), lam_bar))
        return assemble(prof, "periodic", meta)
    if eps == 1 or fc > 1:
        raise DomainError(f"no return to tau = 1 found (terminal {sol.terminal.kind.value})")
    meta.update(lam_bar=None, limit_tau=fc, annulus=AnnulusSpec(n, eps, float(c), float(lam)))
    return assemble(prof, "double", meta)


# -- translation invariant examples ------------------------------------------------

def _parabolic_range(n, c):
    if not -n * (n - 1) <= c < 0:
        raise OutOfRange(f"parabolic examples need -n(n-1) <= c < 0, got c = {c}")


def build_parabolic(n, c, variant="SymmetricBiGraph", span=10.0, method="closed"):
    """Hypersurfaces invariant under parabolic translations (over horospheres).

    ``EntireConstant`` is the graph with constant rho = sqrt(-b/n);
    ``SymmetricBiGraph`` doubles the graph over ``(-inf, 0]`` across t = 0,
    sampled on ``[-span, 0]``.
    """
    _parabolic_range(n, c)
    pair = ws_pair(n, -1, c, FamilyKind.HOROSPHERES)
    params = CscParameters(n, -1, float(c))
    info = {"construction": "parabolic", "variant": variant, "n": n, "c": float(c)}
    if variant == "EntireConstant":
        info["K"] = c / (n * (n - 1))
        cf, meta = csc_closed_form(CscMode.PARABOLIC_CONSTANT, params)
        term = Terminal(TerminalKind.TRUNCATED, span, 0.0, "s_max")
        sol = closed_form_solution(cf, pair, -span, span, 0.0, term)
        sol.meta["open_ends"] = ("left", "right")
        info.update(closed_form=cf, tau=meta["tau"])
        return assemble(fields_along(sol), "graph", info)
    if variant != "SymmetricBiGraph":
        raise OutOfRange(f"unknown parabolic variant {variant!r}")
    cf, meta = csc_closed_form(CscMode.PARABOLIC_GRAPH, params)
    if method == "numeric":
        sol = integrate_rho(pair, Interior(0.0, 1.0, -1), s_max=-span)
        prof = build_profile(sol)
    else:
        term = Terminal(TerminalKind.TRUNCATED, -span, None, "s_max")
        sol = closed_form_solution(cf, pair, -span, 0.0, 0.0, term)
        prof = fields_along(sol)
    info.update(closed_form=cf, limit_rho=meta["limit"])
    model = assemble(prof, "double", info)
    if c == -n * (n - 1):
        ext = height_extent(model)
        slab = math.pi / n
        if not (ext.t_max < slab and -ext.t_min < slab):
            raise DomainError(f"slab bound violated: extent ({ext.t_min}, {ext.t_max})")
        model.meta["slab"] = slab
    return model


def hyperbolic_threshold(n, c, tight=False):
    """Lower bound on launch radii for the hyperbolic family.

    The default is the sufficient threshold ``arctanh sqrt(frak_C)`` (0 when
    ``n frak_C <= 2``); ``tight=True`` gives ``arctanh sqrt((n C - 2)/(n - 2))``.
    """
    _parabolic_range(n, c)
    fc = frak_c(n, -1, c)
    if n * fc <= 2:
        return 0.0
    if tight:
        return math.atanh(math.sqrt((n * fc - 2) / (n - 2)))
    return math.atanh(math.sqrt(fc))


def build_hyperbolic(n, c, lam, span=DEFAULT_SPAN, method="closed"):
    """Bigraph invariant under hyperbolic translations, launched at ``lam``."""
    _parabolic_range(n, c)
    thr = hyperbolic_threshold(n, c)
    if not lam > thr:
        raise OutOfRange(f"lambda = {lam} must exceed delta(c) = {thr:.12g}")
    pair = ws_pair(n, -1, c, FamilyKind.EQUIDISTANTS)
    params = CscParameters(n, -1, float(c))
    cf, meta = csc_closed_form(CscMode.HYPERBOLIC, params, {"lam": lam})
    if method == "numeric":
        sol = integrate_rho(pair, Interior(float(lam), 1.0, 1), s_max=lam + span)
        prof = build_profile(sol)
    else:
        term = Terminal(TerminalKind.TRUNCATED, lam + span, None, "s_max")
        sol = closed_form_solution(cf, pair, float(lam), lam + span, float(lam), term)
        prof = fields_along(sol)
    info = {"construction": "hyperbolic", "n": n, "c": float(c), "lam": float(lam),
            "threshold": thr, "tight_threshold": hyperbolic_threshold(n, c, tight=True),
            "limit_rho": meta["limit"], "closed_form": cf}
    model = assemble(prof, "double", info)
    if c == -n * (n - 1):
        ext = height_extent(model)
        if not ext.t_max < math.pi / n:
            raise DomainError(f"slab bound violated: t_max = {ext.t_max}")
        model.meta["slab"] = math.pi / n
    return model


# -- constant sectional curvature profiles -----------------------------------------

def csc_sectional_rho(n, eps, K, mode="Rotational"):
    """rho-profiles of graphs with constant sectional curvature K.

    Rotational (K > eps): ``sqrt(K - eps) tan_eps``; Hyperbolic
    (-1 < K < 0): ``sqrt(K + 1) coth`` on ``[lambda_0, inf)``;
    ParabolicConstant (-1 <= K < 0): ``sqrt(K + 1)``.
    """
    if mode == "Rotational":
        if not K > eps:
            raise OutOfRange(f"rotational profiles need K > eps, got K = {K}")
        q = math.sqrt(K - eps)
        cf, meta = csc_closed_form(CscMode.ROTATIONAL_SEED,
                                   CscParameters(n, eps, K * n * (n - 1)))
        cf.meta.update(K=K, coefficient=q, family=FamilyKind.GEODESIC_SPHERES)
        return cf
    if mode == "Hyperbolic":
        if not -1 < K < 0:
            raise OutOfRange(f"hyperbolic profiles need -1 < K < 0, got K = {K}")
        q = math.sqrt(K + 1)
        lam0 = math.atanh(q)

        def rho(s):
            return q / np.tanh(np.asarray(s, dtype=float))

        def drho(s):
            return -q / np.sinh(np.asarray(s, dtype=float)) ** 2

        def comp(s):
            s = np.asarray(s, dtype=float)
            return np.sinh(s - lam0) / (np.sinh(s) * math.cosh(lam0))

        return ClosedFormRho("SectionalHyperbolic", rho, drho, comp, (lam0, math.inf),
                             {"K": K, "lam0": lam0, "coefficient": q,
                              "family": FamilyKind.EQUIDISTANTS, "limit": q})
    if mode == "ParabolicConstant":
        if not -1 <= K < 0:
            raise OutOfRange(f"constant parabolic profiles need -1 <= K < 0, got K = {K}")
        q = math.sqrt(K + 1)
        return ClosedFormRho("SectionalParabolic",
                             lambda s: q + 0 * np.asarray(s, dtype=float),
                             lambda s: 0 * np.asarray(s, dtype=float),
                             lambda s: (1 - q) + 0 * np.asarray(s, dtype=float),
                             (-math.inf, math.inf),
                             {"K": K, "coefficient": q, "family": FamilyKind.HOROSPHERES})
    raise OutOfRange(f"unknown mode {mode!r}")


def sectional_residual(cf, family, s):
    """``alpha rho rho' + (alpha^2 + eps) rho^2`` along a profile."""
    s = np.asarray(s, dtype=float)
    alpha = np.asarray(family.branches[0].alpha(s), dtype=float) + 0 * s
    rho = cf.rho(s)
    return alpha * rho * cf.drho(s) + (alpha ** 2 + family.epsilon) * rho ** 2


# -- homogeneous rescaling -----------------------------------------------------------

class RescaledRho:
    """``rho_c = (c / c0)^(1/d) rho_0``, cut where it first reaches 1."""

    def __init__(self, base, c0, c, d):
        if d <= 0 or c0 <= 0 or c <= 0:
            raise OutOfRange("rescaling needs d, c0, c > 0")
        self.base = base
        self.factor = (c / c0) ** (1.0 / d)
        self.c0, self.c, self.d = c0, c, d
        lo, hi = float(base.s[0]), float(base.s[-1])
        self.interval = (lo, self._first_hit(lo, hi))

    def _first_hit(self, lo, hi):
        vals = self.factor * np.asarray(self.base.evaluate(self.base.s))
        above = np.nonzero(vals >= 1.0)[0]
        if len(above) == 0 or self.factor <= 1.0:
            return hi
        j = int(above[0])
        if j == 0:
            return lo
        a, b = float(self.base.s[j - 1]), float(self.base.s[j])
        for _ in range(200):
            m = 0.5 * (a + b)
            if self.factor * float(self.base.evaluate(m)) >= 1.0:
                b = m
            else:
                a = m
            if b - a <= 1e-14 * max(1.0, abs(b)):
                break
        return b

    @property
    def delta(self):
        return self.interval[1]

    def rho(self, s):
        return self.factor * self.base.evaluate(s)

    def drho(self, s):
        return self.factor * self.base.evaluate_prime(s)


def rescale_homogeneous(sol, c0, c, d):
    """Scale a solution at c0 of a degree-d homogeneous W to the constant c."""
    return RescaledRho(sol, float(c0), float(c), float(d))


# -- cylinders ---------------------------------------------------------------------------

def cylinder_radius(W, c, eps, n):
    """Radius s0 with ``W(cot_eps s0, ..., cot_eps s0, 0; theta^2 = 0) = c``."""
    R = math.pi / 2 if eps == 1 else math.inf

    def F(s):
        k = 1.0 / float(tan_eps(s, eps))
        return W.func([k] * (n - 1) + [0.0], 0.0)

    # large-s limit: cot -> 0 (spheres) or coth -> 1 (hyperbolic space)
    limit = W.func([0.0 if eps == 1 else 1.0] * (n - 1) + [0.0], 0.0)
    if c <= limit:
        raise NoRoot(f"cylinder radius needs c > W({'0' if eps == 1 else '1'}, ..., 0) = {limit}")
    lo = 1e-12
    hi = R if eps == 1 else 1.0
    if eps == -1:
        while F(hi) > c:
            hi *= 2.0
            if hi > 1e3:
                raise NoRoot("cylinder radius not bracketed")
    if F(lo) < c:
        raise NoRoot(f"c = {c} above the attainable range")
    while True:
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        if F(mid) > c:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
