"""Independent numerical audits of constructed objects.

Every check works from raw samples (s, rho, rho', phi) and recomputes
what it needs from the family and the Weingarten function, instead of
trusting the fields cached on a profile.
"""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .profile import Convexity, Topology

FORMAT_VERSION = 1

TOL_RESIDUAL = 1e-8
TOL_ORACLE = 1e-6
TOL_FD = 1e-4
TOL_GAUSS = 1e-9
TOL_THETA = 1e-12
TOL_SECTIONAL = 1e-8
TOL_EDO10 = 1e-10
TOL_HEIGHT = 1e-6
TOL_JUNCTION = 1e-6
ROUNDING_FRACTION = 1e-6
# below this slope the relative phi' error is measured against the floor instead
FD_FLOOR = 1e-6


@dataclass
class Check:
    name: str
    max_residual: float
    tolerance: float
    passed: bool
    locus: float = None
    skipped: bool = False
    details: dict = field(default_factory=dict)


@dataclass
class VerificationReport:
    checks: list = field(default_factory=list)

    @property
    def passed(self):
        return all(c.passed for c in self.checks)

    def add(self, check):
        self.checks.append(check)
        return check

    def get(self, name):
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self):
        return {
            "format_version": FORMAT_VERSION,
            "passed": self.passed,
            "checks": [_clean(asdict(c)) for c in self.checks],
        }

    def to_json(self):
        from .io import dumps

        return dumps(self.to_dict())


def _clean(d):
    out = {}
    for k, v in d.items():
        if isinstance(v, (np.floating, np.integer)):
            v = v.item()
        elif isinstance(v, np.bool_):
            v = bool(v)
        elif isinstance(v, dict):
            v = _clean(v)
        out[k] = v
    return out


def _worst(values, s, tol, name, relative_to=None):
    values = np.abs(np.asarray(values, dtype=float))
    if relative_to is not None:
        values = values / np.maximum(1.0, np.abs(relative_to))
    if values.size == 0:
        return Check(name, 0.0, tol, True, None, skipped=True)
    i = int(np.nanargmax(values)) if np.any(np.isfinite(values)) else 0
    worst = float(values[i])
    return Check(name, worst, tol, bool(worst <= tol), float(s[i]))


def _expanded_curvatures(family, s, rho, rho_prime):
    """Full list of n principal curvatures at one sample."""
    ks = []
    at_origin = family.origin_singular and s == family.domain[0]
    for j, br in enumerate(family.branches):
        if at_origin:
            k = -family.residues[j] * rho_prime
        else:
            k = -rho * float(br.alpha(s))
        ks.extend([k] * br.mult)
    ks.append(rho_prime)
    return ks


# -- checks ----------------------------------------------------------------------------

def residual_weingarten(model, pair=None, tol=TOL_RESIDUAL):
    """max |W(k, 1 - rho^2) - c| over every sample of every piece."""
    pair = pair or model.pair
    W, c, fam = pair.W, pair.c, pair.family
    worst, locus = 0.0, None
    for prof in model.profiles:
        for i in range(len(prof.s)):
            s, r, rp = float(prof.s[i]), float(prof.rho[i]), float(prof.rho_prime[i])
            k = _expanded_curvatures(fam, s, r, rp)
            theta2 = 1.0 - r * r
            if prof.comp[i] < 0.5:
                q = float(prof.comp[i])
                theta2 = q * (2.0 - q)
            if fam.origin_singular and s == fam.domain[0]:
                theta2 = 1.0
            res = abs(W.func(k, max(theta2, 0.0)) - c)
            if not res <= worst:
                worst, locus = res, s
    return Check("residual_weingarten", worst, tol, bool(worst <= tol), locus)


def gauss_consistency(profile, tol=TOL_GAUSS):
    """Brute-force sum of sectional curvatures against the scalar formula."""
    fam = profile.family
    eps, n = fam.epsilon, fam.n
    diffs = np.empty(len(profile.s))
    scale = np.empty(len(profile.s))
    for i in range(len(profile.s)):
        s, r, rp = float(profile.s[i]), float(profile.rho[i]), float(profile.rho_prime[i])
        k = _expanded_curvatures(fam, s, r, rp)
        rho2 = 1.0 - float(profile.theta[i]) ** 2
        total = 0.0
        for a in range(n):
            for b in range(n):
                if a == b:
                    continue
                # the tangent part of the vertical field lies along the last direction
                t_ab = rho2 if (a == n - 1 or b == n - 1) else 0.0
                total += k[a] * k[b] + eps * (1.0 - t_ab)
        theta2 = float(profile.theta[i]) ** 2
        formula = 2.0 * float(profile.H2[i]) + eps * (n - 1) * (2.0 * theta2 + n - 2)
        diffs[i] = total - formula
        scale[i] = max(abs(total), abs(formula))
    return _worst(diffs, profile.s, tol, "gauss_consistency", relative_to=scale)


def admissibility_check(sol):
    """Conditions C1 (rho(0) = 0), C2 (0 < rho < 1) and C3 (rho' > 0)."""
    s, rho, rp = sol.s, sol.rho, sol.rho_prime
    inner = slice(1, -1)
    c1 = bool(sol.origin_launch and rho[0] == 0.0)
    r = rho[inner]
    margin2 = np.minimum(r, sol.comp[inner]) if len(r) else np.array([1.0])
    c2 = bool(len(r) > 0 and np.all(margin2 > 0))
    c3 = bool(len(r) > 0 and np.all(rp[inner] > -1e-12))
    loc2 = float(s[inner][np.argmin(margin2)]) if len(r) else None
    loc3 = float(s[inner][np.argmin(rp[inner])]) if len(r) else None
    details = {"C1": c1, "C2": c2, "C3": c3, "locus_C2": loc2, "locus_C3": loc3,
               "min_margin_C2": float(np.min(margin2)),
               "min_slope_C3": float(np.min(rp[inner])) if len(r) else None}
    return Check("admissibility", 0.0, 0.0, c1 and c2 and c3, loc3, details=details)


def height_estimate_check(model, tol=TOL_HEIGHT):
    """``max height <= 1 / inf k_0`` on a strictly convex graph piece."""
    for piece in model.pieces:
        prof = piece.profile
        if piece.reflected or prof.convexity is not Convexity.STRICT:
            continue
        kmin = np.minimum(np.min(prof.k_h, axis=0), prof.rho_prime)
        if not np.all(kmin > 0):
            continue
        inf_k0 = float(np.min(kmin))
        t = piece.height
        height = float(np.max(t) - np.min(t))
        excess = height - 1.0 / inf_k0
        return Check("height_estimate", excess, tol, bool(excess <= tol),
                     float(prof.s[int(np.argmin(kmin))]),
                     details={"height": height, "inf_k0": inf_k0, "bound": 1.0 / inf_k0})
    return Check("height_estimate", 0.0, tol, True, skipped=True,
                 details={"reason": "no strictly convex graph piece"})


def oracle_compare(sol, cf, tol=TOL_ORACLE, interval=None, name="oracle_compare"):
    """sup |rho_numeric - rho_closed| on the common sample grid."""
    s = np.asarray(sol.s)
    lo, hi = cf.interval
    if interval is not None:
        lo, hi = max(lo, interval[0]), min(hi, interval[1])
    m = (s >= lo) & (s <= hi)
    diff = np.asarray(sol.rho)[m] - np.asarray(cf.rho(s[m]))
    return _worst(diff, s[m], tol, name)


def theta_identity(profile, tol=TOL_THETA):
    return _worst(profile.theta ** 2 + profile.rho ** 2 - 1.0, profile.s, tol, "theta_identity")


def _fd_derivative(s, y):
    """Finite-difference derivative at the interior points of a non-uniform grid.

    Five-point weights, off-centred next to the ends; three-point when
    fewer than five samples exist.
    """
    s = np.asarray(s, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(s)
    if n < 5:
        h1 = s[1:-1] - s[:-2]
        h2 = s[2:] - s[1:-1]
        return (-h2 / (h1 * (h1 + h2)) * y[:-2] + (h2 - h1) / (h1 * h2) * y[1:-1]
                + h1 / (h2 * (h1 + h2)) * y[2:])
    idx = np.arange(1, n - 1)
    start = np.clip(idx - 2, 0, n - 5)
    win = start[:, None] + np.arange(5)[None, :]
    offs = s[win] - s[idx][:, None]
    scale = np.max(np.abs(offs), axis=1)
    x = offs / scale[:, None]
    V = np.stack([x ** k for k in range(5)], axis=1)
    rhs = np.zeros((len(idx), 5))
    rhs[:, 1] = 1.0
    w = np.linalg.solve(V, rhs[:, :, None])[:, :, 0] / scale[:, None]
    return np.sum(w * y[win], axis=1)


def _fd_mask(profile, fd_scale=None):
    n = len(profile.s)
    mask = np.ones(n - 2, dtype=bool)
    if fd_scale is not None:
        # drop stencils whose phi increments sit at the rounding level of phi itself
        s, phi = profile.s, profile.phi
        h = np.minimum(s[1:-1] - s[:-2], s[2:] - s[1:-1])
        rounding = np.finfo(float).eps * np.maximum(1.0, np.abs(phi[1:-1]))
        mask &= rounding <= ROUNDING_FRACTION * h * np.abs(fd_scale)
    left, right = profile.singular_ends
    if left:
        mask[:2] = False
    if right:
        mask[-2:] = False
    return mask


def phi_fd_check(profile, tol=TOL_FD):
    """Finite-difference phi' against rho / sqrt(1 - rho^2), relative."""
    if len(profile.s) < 3 or not np.any(profile.rho):
        return Check("phi_fd", 0.0, tol, True, skipped=True)
    s, phi = profile.s, profile.phi
    fd = _fd_derivative(s, phi)
    exact = profile.rho[1:-1] / profile.theta[1:-1]
    mask = _fd_mask(profile, exact) & (exact > 0)
    rel = np.abs(fd - exact) / np.maximum(np.abs(exact), FD_FLOOR)
    return _worst(rel[mask], s[1:-1][mask], tol, "phi_fd")


def theta_from_phi_check(profile, tol=TOL_FD):
    """``1 / sqrt(1 + phi'^2)`` with phi' by finite differences against theta."""
    if len(profile.s) < 3:
        return Check("theta_from_phi", 0.0, tol, True, skipped=True)
    s = profile.s
    fd = _fd_derivative(s, profile.phi)
    with np.errstate(divide="ignore", over="ignore"):
        Theta = 1.0 / np.sqrt(1.0 + fd * fd)
    mask = _fd_mask(profile, profile.rho[1:-1] / profile.theta[1:-1])
    return _worst((Theta - profile.theta[1:-1])[mask], s[1:-1][mask], tol, "theta_from_phi")


def sectional_residual_check(cf, family, s=None, tol=TOL_EDO10):
    """``alpha rho rho' + (alpha^2 + eps) rho^2`` along a constant-K profile."""
    if s is None:
        lo, hi = cf.interval
        hi = min(hi, lo + 5.0) if math.isfinite(hi) else lo + 5.0
        lo = lo if math.isfinite(lo) else hi - 10.0
        s = np.linspace(lo, hi, 401)[1:-1]
    s = np.asarray(s, dtype=float)
    alpha = np.asarray(family.branches[0].alpha(s), dtype=float) + 0 * s
    rho = cf.rho(s)
    res = alpha * rho * cf.drho(s) + (alpha ** 2 + family.epsilon) * rho ** 2
    return _worst(res, s, tol, "edo10_residual")


def constant_sectional_check(profile, K, tol=TOL_SECTIONAL):
    """Every sectional curvature recomputed from samples equals K."""
    fam = profile.family
    eps = fam.epsilon
    devs = []
    locs = []
    for i in range(len(profile.s)):
        s, r, rp = float(profile.s[i]), float(profile.rho[i]), float(profile.rho_prime[i])
        k = _expanded_curvatures(fam, s, r, rp)
        theta2 = float(profile.theta[i]) ** 2
        horiz = k[:-1]
        worst = 0.0
        for a in range(len(horiz)):
            worst = max(worst, abs(horiz[a] * rp + eps * theta2 - K))
            for b in range(a + 1, len(horiz)):
                worst = max(worst, abs(horiz[a] * horiz[b] + eps - K))
        devs.append(worst)
        locs.append(s)
    return _worst(np.array(devs), np.array(locs), tol, "constant_sectional",)


def junction_check(model, tol=TOL_JUNCTION):
    """Vertical tangency and matching heights where pieces are glued."""
    if model.topology not in (Topology.SPHERE, Topology.PERIODIC_ANNULUS, Topology.BIGRAPH):
        return Check("junction", 0.0, tol, True, skipped=True)
    a, b = model.pieces[0], model.pieces[1]
    prof = a.profile
    if model.topology is Topology.BIGRAPH:
        idx = -1 if prof.solution is not None and prof.solution.direction < 0 else 0
        ends = [idx]
    elif model.topology is Topology.SPHERE:
        ends = [-1]
    else:
        ends = [-1]
    worst, loc = 0.0, None
    for e in ends:
        gap = abs(float(a.height[e]) - float(b.height[e]))
        vert = float(prof.comp[e])
        w = max(gap, vert)
        if w >= worst:
            worst, loc = w, float(prof.s[e])
    if model.topology is Topology.PERIODIC_ANNULUS:
        # the next period starts where the reflected piece returns to its launch radius
        gap = abs(float(b.height[0]) - model.period)
        worst = max(worst, gap, float(prof.comp[0]))
    return Check("junction", worst, tol, bool(worst <= tol), loc)


def mirror_check(model):
    """Reflected pieces satisfy ``t_1 + t_2 = 2 * plane`` sample by sample."""
    refl = [p for p in model.pieces if p.reflected]
    if not refl:
        return Check("mirror_symmetry", 0.0, 0.0, True, skipped=True)
    base = model.pieces[0]
    worst = 0.0
    for p in refl:
        total = base.height + p.height
        worst = max(worst, float(np.max(np.abs(total - p.offset))))
    tol = 4 * np.finfo(float).eps * max(1.0, max(abs(p.offset) for p in refl))
    return Check("mirror_symmetry", worst, tol, bool(worst <= tol))


def verify_model(model, tolerances=None):
    """Run every applicable audit on a model."""
    tol = dict(residual=TOL_RESIDUAL, oracle=TOL_ORACLE, fd=TOL_FD, gauss=TOL_GAUSS,
               theta=TOL_THETA, sectional=TOL_SECTIONAL, height=TOL_HEIGHT,
               junction=TOL_JUNCTION)
    tol.update(tolerances or {})
    rep = VerificationReport()
    rep.add(residual_weingarten(model, tol=tol["residual"]))
    for prof in model.profiles:
        rep.add(gauss_consistency(prof, tol["gauss"]))
        rep.add(theta_identity(prof, tol["theta"]))
        rep.add(phi_fd_check(prof, tol["fd"]))
        rep.add(theta_from_phi_check(prof, tol["fd"]))
        sol = prof.solution
        if sol is not None and sol.origin_launch and not sol.horizontal_hyperplane:
            rep.add(admissibility_check(sol))
        cf = model.meta.get("closed_form")
        if cf is not None and sol is not None and sol.closed_form is None:
            rep.add(oracle_compare(sol, cf, tol["oracle"]))
    K = model.meta.get("K")
    if K is not None:
        for prof in model.profiles:
            rep.add(constant_sectional_check(prof, K, tol["sectional"]))
    rep.add(junction_check(model, tol["junction"]))
    rep.add(mirror_check(model))
    rep.add(height_estimate_check(model, tol["height"]))
    return rep


def report_json(report):
    return json.loads(report.to_json())
