"""The first-order problem for the rho-function of an (f_s, phi)-graph.

Along a graph over a parallel family the principal curvatures are
``k_i = -rho * alpha_i(s)`` (horizontal, one per branch sheet) and
``k_n = rho'(s)``, while ``theta^2 = 1 - rho^2``.  The Weingarten equation
``W(k, theta^2) = c`` is therefore an implicit first-order ODE for rho.

This module solves it numerically (:func:`integrate_rho`, with the slope at
each state obtained by root-finding in :func:`step_slope`) and exactly for
the constant scalar curvature reductions, where ``tau = rho^2`` obeys the
linear equation ``tau' = a tau + b``.
"""

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy import integrate, optimize

from .ambient import FamilyKind, arctan_eps, cos_eps, make_family, sin_eps, tan_eps
from .errors import (DomainError, InvalidFamily, NoOriginRoot, NonSingularFamily, NoRoot,
                     OutOfRange, StepSizeUnderflow)
from .weingarten import PairConfig, builtin

RHO_ONE_GAP = 1e-6        # rho >= 1 - gap counts as having reached the vertical
SLOPE_ZERO = 1e-12        # a forward slope below -SLOPE_ZERO is a sign change
COMP_FLOOR = 1e-12        # 1 - rho below this while approaching asymptotically
RHO_FLOOR = 1e-8          # decaying tails towards rho = 0 stop here
ROOT_LOST_SLOPE = 1e-4
EVENT_DS = 1e-10
SERIES_S0 = 1e-4
RESIDUAL_TOL = 1e-8


# -- launch descriptions -------------------------------------------------------

@dataclass(frozen=True)
class Origin:
    """Start at the singular origin of a family with rho(0) = 0."""


@dataclass(frozen=True)
class Interior:
    """Start at ``(s0, rho0)``; ``direction = -1`` integrates towards smaller s."""

    s0: float
    rho0: float
    direction: int = 1


@dataclass
class SolverOptions:
    h_init: float = 1e-3
    tol: float = 1e-10
    atol: float = 1e-12
    h_max: float = 0.25
    s_max: float = None
    max_steps: int = 200000


class TerminalKind(str, Enum):
    REACHES_ONE = "ReachesOne"
    SLOPE_ZERO = "SlopeZero"
    TRUNCATED = "Truncated"
    DOMAIN_BOUNDARY = "DomainBoundary"


class Classification(str, Enum):
    SPHERE_CAP = "SphereCap"
    CUSP = "Cusp"
    EQUATOR = "Equator"
    ENTIRE = "Entire"
    INDETERMINATE = "Indeterminate"


@dataclass(frozen=True)
class Terminal:
    kind: TerminalKind
    s: float
    rho_prime_at_delta: float = None
    reason: str = ""


@dataclass(frozen=True)
class Admissibility:
    C1: bool
    C2: bool
    C3: bool
    worst_C2: float = None
    worst_C3: float = None

    @property
    def all(self):
        return self.C1 and self.C2 and self.C3


# -- slope root-finding --------------------------------------------------------

def horizontal_curvatures(family, s, rho):
    """Curvatures ``-rho * alpha_j(s)`` expanded by multiplicity."""
    k = []
    for br in family.branches:
        a = float(br.alpha(s))
        if math.isnan(a):
            raise InvalidFamily(f"branch {br.source!r} returned NaN at s = {s}")
        k.extend([-rho * a] * br.mult)
    return k


def origin_curvatures(family, m):
    """Limit of the horizontal curvatures at s = 0 when rho ~ m s."""
    k = []
    for br, r in zip(family.branches, family.residues):
        k.extend([-r * m] * br.mult)
    return k


def _safe(fn, x):
    try:
        v = fn(x)
    except (DomainError, ZeroDivisionError, OverflowError, ValueError):
        return None
    if v is None or not math.isfinite(v):
        return None
    return v


def solve_last_slot(W, kh, theta2, c, guess=None, what="rho'"):
    """Root x of ``W(kh + [x], theta2) = c``.

    Newton from ``guess`` first; otherwise expand brackets ``[0, B]`` and
    ``[-B, 0]`` with B doubling up to 1e12 and finish with Brent's method.
    """
    idx = W.n - 1
    tol = 1e-12 * max(1.0, abs(c))

    def f(x):
        return W.func(kh + [x], theta2) - c

    if guess is not None and math.isfinite(guess):
        x = float(guess)
        for _ in range(10):
            fx = _safe(f, x)
            if fx is None:
                break
            if abs(fx) <= tol:
                # one more step pushes affine cases to full precision
                d = _safe(lambda y: W.partial(kh + [y], theta2, idx), x)
                if d:
                    x2 = x - fx / d
                    f2 = _safe(f, x2)
                    if f2 is not None and abs(f2) <= abs(fx):
                        return x2
                return x
            d = _safe(lambda y: W.partial(kh + [y], theta2, idx), x)
            if not d:
                break
            x = x - fx / d

    f0 = _safe(f, 0.0)
    if f0 == 0.0:
        return 0.0
    lo_p, f_lo_p = (0.0, f0) if f0 is not None else (None, None)
    lo_n, f_lo_n = lo_p, f_lo_p
    B = 1.0
    bracket = None
    while B <= 1e12:
        fp = _safe(f, B)
        fn = _safe(f, -B)
        if fp is not None:
            if f_lo_p is not None and fp * f_lo_p <= 0:
                bracket = (lo_p, B)
                break
            lo_p, f_lo_p = B, fp
        if fn is not None:
            if f_lo_n is not None and fn * f_lo_n <= 0:
                bracket = (-B, lo_n)
                break
            lo_n, f_lo_n = -B, fn
        B *= 2.0
    if bracket is None:
        raise NoRoot(f"no {what} solves W = {c} (searched |x| <= 1e12)")
    a, b = bracket
    if _safe(f, a) == 0.0:
        return a
    if _safe(f, b) == 0.0:
        return b
    root = optimize.brentq(f, a, b, xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=400)
    return float(root)


def step_slope(pair, s, rho, theta2=None, guess=None):
    """Slope rho'(s) solving ``W(-alpha(s) rho, rho', 1 - rho^2) = c``."""
    if theta2 is None:
        theta2 = (1.0 - rho) * (1.0 + rho)
    theta2 = min(1.0, max(0.0, theta2))
    kh = horizontal_curvatures(pair.family, s, rho)
    return solve_last_slot(pair.W, kh, theta2, pair.c, guess)


def initial_slope(pair):
    """Smallest positive m with ``W(-r_j m, ..., m, 1) = c`` (all r_j = -1 for spheres)."""
    fam = pair.family
    if not fam.origin_singular:
        raise NonSingularFamily(f"family {fam.kind.value} has no singular origin; use Interior")
    W, c = pair.W, pair.c

    def g(m):
        return W.func(origin_curvatures(fam, m) + [m], 1.0) - c

    g0 = g(0.0)
    if g0 == 0.0:
        return 0.0
    prev_m, prev_g = 0.0, g0
    m = 2.0 ** -20
    bracket = None
    while m <= 1e12:
        gm = _safe(g, m)
        if gm is not None:
            if gm == 0.0:
                return m
            if prev_g is not None and gm * prev_g < 0:
                bracket = (prev_m, m)
                break
            prev_m, prev_g = m, gm
        m *= 2.0
    if bracket is None:
        raise NoOriginRoot(f"W(m,...,m,1) = {c} has no positive root m")
    root = optimize.brentq(g, *bracket, xtol=1e-300, rtol=4 * np.finfo(float).eps)
    # Newton polish
    h = 1e-7 * max(1.0, root)
    for _ in range(3):
        gr = g(root)
        d = (g(root + h) - g(root - h)) / (2 * h)
        if d == 0 or abs(gr) <= 1e-15 * max(1.0, abs(c)):
            break
        step = gr / d
        if abs(step) > 1e-6 * max(1.0, root):
            break
        root -= step
    if abs(g(root)) > 1e-12 * max(1.0, abs(c)):
        raise NoOriginRoot(f"origin slope did not converge for c = {c}")
    return float(root)


# -- the solution object -------------------------------------------------------

@dataclass
class RhoSolution:
    """Samples of rho on ``[s_start, delta)`` (or ``(delta, s_start]`` backwards).

    ``comp`` stores ``1 - rho`` computed without cancellation near the
    vertical.  Arrays are always ordered by increasing s.
    """

    s: np.ndarray
    rho: np.ndarray
    rho_prime: np.ndarray
    comp: np.ndarray
    s_start: float
    delta: float
    terminal: Terminal
    admissible: Admissibility
    pair: PairConfig = None
    direction: int = 1
    origin_launch: bool = False
    closed_form: object = None
    horizontal_hyperplane: bool = False
    max_residual: float = 0.0
    meta: dict = field(default_factory=dict)

    @property
    def tau(self):
        return self.rho ** 2

    @property
    def family(self):
        return self.pair.family if self.pair is not None else self.meta.get("family")

    @property
    def singular_ends(self):
        """Which of (left, right) ends sit on the vertical rho = 1."""
        return (bool(self.comp[0] <= 0.0), bool(self.comp[-1] <= 0.0))

    def _dense(self):
        if "dense" not in self.meta:
            self.meta["dense"] = DenseOutput(self.s, self.rho, self.comp, self.rho_prime,
                                             [None] * (len(self.s) - 1))
        return self.meta["dense"]

    def evaluate(self, s):
        """rho at arbitrary s in the sampled range."""
        if self.closed_form is not None:
            return self.closed_form.rho(s)
        if self.horizontal_hyperplane:
            return np.zeros_like(np.asarray(s, dtype=float))
        return self._dense().rho(s)

    def evaluate_comp(self, s):
        """``1 - rho`` at arbitrary s, accurate near rho = 1."""
        if self.closed_form is not None:
            return self.closed_form.comp(s)
        if self.horizontal_hyperplane:
            return np.ones_like(np.asarray(s, dtype=float))
        return self._dense().comp(s)

    def evaluate_prime(self, s):
        if self.closed_form is not None:
            return self.closed_form.drho(s)
        if self.horizontal_hyperplane:
            return np.zeros_like(np.asarray(s, dtype=float))
        return self._dense().drho(s)

    def with_closed_form(self, cf):
        return replace(self, closed_form=cf)


def admissibility_flags(s, rho, rho_prime, origin_launch):
    interior = slice(1, -1) if len(s) > 2 else slice(0, 0)
    r = rho[interior]
    rp = rho_prime[interior]
    c1 = bool(origin_launch and rho[0] == 0.0)
    c2 = bool(len(r) > 0 and np.all(r > 0.0) and np.all(r < 1.0))
    # tolerate roundoff-level negative slopes in flat asymptotic tails
    c3 = bool(len(rp) > 0 and np.all(rp > -SLOPE_ZERO))
    worst2 = float(s[interior][np.argmin(np.minimum(r, 1 - r))]) if len(r) else None
    worst3 = float(s[interior][np.argmin(rp)]) if len(rp) else None
    return Admissibility(c1, c2, c3, worst2, worst3)


# -- Dormand-Prince 5(4) -------------------------------------------------------

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
# continuous extension (Hairer & Wanner, dopri5)
_D = (-12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
      -10690763975 / 1880347072, 701980252875 / 199316789632,
      -1453857185 / 822651844, 69997945 / 29380423)


class _State:
    __slots__ = ("s", "rho", "comp", "slope", "seg")

    def __init__(self, s, rho, comp, slope, seg=None):
        self.s = s
        self.rho = rho
        self.comp = comp
        self.slope = slope
        # dense-output coefficients of the step that ended here
        self.seg = seg


class DenseOutput:
    """Piecewise quartic interpolant from the Dormand-Prince stages.

    Each interval stores ``(s0, h, complement, r1..r5)`` describing
    ``u(s0 + x h)`` with u = rho, or u = 1 - rho when ``complement``.
    Intervals without stage data fall back to cubic Hermite.
    """

    def __init__(self, s, rho, comp, slope, segs):
        self.s = s
        n = len(s) - 1
        self.s0 = np.empty(n)
        self.h = np.empty(n)
        self.cplx = np.zeros(n, dtype=bool)
        self.r = np.zeros((5, n))
        for i in range(n):
            seg = segs[i]
            if seg is None:
                # cubic Hermite in the better-conditioned variable
                h = s[i + 1] - s[i]
                cm = rho[i] > 0.5
                y0, y1 = (comp[i], comp[i + 1]) if cm else (rho[i], rho[i + 1])
                d0, d1 = (-slope[i], -slope[i + 1]) if cm else (slope[i], slope[i + 1])
                r2 = y1 - y0
                r3 = h * d0 - r2
                r4 = r2 - h * d1 - r3
                seg = (s[i], h, cm, y0, r2, r3, r4, 0.0)
            self.s0[i], self.h[i], self.cplx[i] = seg[0], seg[1], seg[2]
            self.r[:, i] = seg[3:]

    def _locate(self, s):
        s = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(self.s, s, side="right") - 1, 0, len(self.s0) - 1)
        x = (s - self.s0[idx]) / self.h[idx]
        return idx, x

    def _u(self, s):
        idx, x = self._locate(s)
        r1, r2, r3, r4, r5 = self.r[:, idx]
        y = r1 + x * (r2 + (1 - x) * (r3 + x * (r4 + (1 - x) * r5)))
        return y, self.cplx[idx]

    def rho(self, s):
        y, cm = self._u(s)
        return np.where(cm, 1.0 - y, y)

    def comp(self, s):
        y, cm = self._u(s)
        return np.where(cm, y, 1.0 - y)

    def drho(self, s):
        idx, x = self._locate(s)
        r1, r2, r3, r4, r5 = self.r[:, idx]
        dy = (r2 + (1 - 2 * x) * r3 + (2 * x - 3 * x * x) * r4
              + (2 * x * (1 - x) ** 2 - 2 * x * x * (1 - x)) * r5) / self.h[idx]
        return np.where(self.cplx[idx], -dy, dy)


class _Integrator:
    def __init__(self, pair, opts):
        self.pair = pair
        self.opts = opts

    def derivative(self, s, u, complement, guess):
        """du/ds for u = rho (or u = 1 - rho in complement mode)."""
        if complement:
            rho = 1.0 - u
            slope = step_slope(self.pair, s, rho, u * (2.0 - u), guess)
            return -slope, slope
        slope = step_slope(self.pair, s, u, None, guess)
        return slope, slope

    def step(self, st, h):
        """One DP step of signed size h. Returns (new_state, error_norm)."""
        complement = st.rho > 0.5
        u0 = st.comp if complement else st.rho
        k0 = -st.slope if complement else st.slope
        ks = [k0]
        guess = st.slope
        for i in range(1, 7):
            u = u0 + h * sum(a * k for a, k in zip(_A[i], ks))
            du, guess = self.derivative(st.s + _C[i] * h, u, complement, guess)
            ks.append(du)
        u5 = u0 + h * sum(b * k for b, k in zip(_B5, ks))
        u4 = u0 + h * sum(b * k for b, k in zip(_B4, ks))
        scale = self.opts.atol + self.opts.tol * max(abs(u0), abs(u5))
        err = abs(u5 - u4) / scale
        slope = guess  # FSAL: last stage is evaluated at (s + h, u5)
        r2 = u5 - u0
        r3 = h * ks[0] - r2
        r4 = r2 - h * ks[6] - r3
        r5 = h * sum(d * k for d, k in zip(_D, ks))
        seg = (st.s, h, complement, u0, r2, r3, r4, r5)
        if complement:
            new = _State(st.s + h, 1.0 - u5, u5, slope, seg)
        else:
            new = _State(st.s + h, u5, 1.0 - u5, slope, seg)
        return new, err


def _domain_limits(family, direction):
    a, b = family.domain
    if direction > 0:
        return b - EVENT_DS if math.isfinite(b) else math.inf
    return a + EVENT_DS if math.isfinite(a) else -math.inf


def integrate_rho(pair, launch=Origin(), opts=None, **kw):
    """Integrate the rho-ODE from ``launch`` until a terminal event.

    Parameters
    ----------
    pair : PairConfig
    launch : Origin or Interior
    opts : SolverOptions, optional
        Keyword arguments (``tol``, ``s_max``, ...) override fields.

    Returns
    -------
    RhoSolution
    """
    opts = replace(opts or SolverOptions(), **kw)
    fam = pair.family

    if isinstance(launch, Origin):
        m0 = initial_slope(pair)
        if m0 == 0.0:
            return _hyperplane_solution(pair, opts)
        direction = 1
        s_start = 0.0
        s0 = SERIES_S0
        r0 = m0 * s0
        first = [_State(0.0, 0.0, 1.0, m0)]
        slope0 = step_slope(pair, s0, r0, None, m0)
        st = _State(s0, r0, 1.0 - r0, slope0)
        origin = True
    elif isinstance(launch, Interior):
        direction = 1 if launch.direction >= 0 else -1
        s_start = float(launch.s0)
        if not fam.in_domain(s_start) or (fam.origin_singular and s_start == fam.domain[0]):
            raise OutOfRange(f"launch point s = {s_start} outside the family domain")
        r0 = float(launch.rho0)
        if not 0.0 <= r0 <= 1.0:
            raise OutOfRange(f"launch value rho = {r0} outside [0, 1]")
        slope0 = step_slope(pair, s_start, r0)
        if r0 == 1.0 and direction * slope0 >= 0:
            raise OutOfRange("launching at rho = 1 requires the solution to move into rho < 1 "
                             f"(rho' = {slope0:.6g})")
        first = []
        st = _State(s_start, r0, 1.0 - r0, slope0)
        origin = False
    else:
        raise TypeError("launch must be Origin() or Interior(...)")

    if opts.s_max is None:
        s_end = s_start + direction * 50.0
    else:
        s_end = float(opts.s_max)
    dom_end = _domain_limits(fam, direction)
    stop_at = min(s_end, dom_end) if direction > 0 else max(s_end, dom_end)
    stop_reason = TerminalKind.DOMAIN_BOUNDARY if stop_at == dom_end else TerminalKind.TRUNCATED

    integ = _Integrator(pair, opts)
    states = first + [st]
    initial_positive = st.slope > 0
    armed = st.comp > 10 * RHO_ONE_GAP
    closing = False
    asymptotic = False
    terminal = None
    h = opts.h_init
    steps = 0

    def barrier_slope(s):
        try:
            return step_slope(pair, s, 1.0, 0.0, st.slope)
        except NoRoot:
            return math.inf

    while terminal is None:
        steps += 1
        if steps > opts.max_steps:
            raise StepSizeUnderflow("maximum number of steps exceeded",
                                    (st.s, st.rho, st.slope))
        remaining = abs(stop_at - st.s)
        if remaining <= 1e-14 * max(1.0, abs(st.s)):
            terminal = Terminal(stop_reason, st.s, st.slope, "s_max" if stop_reason is
                                TerminalKind.TRUNCATED else "domain_end")
            break
        h = min(h, opts.h_max, remaining)
        hit_end = h == remaining
        try:
            new, err = integ.step(st, direction * h)
        except NoRoot:
            if h < EVENT_DS:
                terminal = _root_lost(st)
                break
            h *= 0.25
            continue
        if not math.isfinite(err) or not math.isfinite(new.rho):
            h *= 0.25
            if h < 1e-14 * max(1.0, abs(st.s)):
                raise StepSizeUnderflow("step size underflow", (st.s, st.rho, st.slope))
            continue
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            if h < 1e-14 * max(1.0, abs(st.s)):
                raise StepSizeUnderflow("step size underflow", (st.s, st.rho, st.slope))
            continue
        factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))

        # sign change of the slope (forward, initially increasing solutions)
        if direction > 0 and initial_positive and new.slope < -SLOPE_ZERO:
            last = _bisect_event(integ, st, direction, h, lambda x: x.slope >= -SLOPE_ZERO)
            if last is not st:
                states.append(last)
            terminal = Terminal(TerminalKind.SLOPE_ZERO, last.s, last.slope, "slope_sign_change")
            break

        if armed and new.comp < 0.0:
            if closing or direction * barrier_slope(new.s) > 0:
                last = _bisect_event(integ, st, direction, h, lambda x: x.comp >= 0.0)
                if last is not st:
                    states.append(last)
                terminal = _close_at_one(states, direction, pair)
                break
            h *= 0.25
            continue

        st = new
        states.append(st)

        if not armed and st.comp > 10 * RHO_ONE_GAP:
            armed = True
        if asymptotic and st.comp > 10 * RHO_ONE_GAP:
            asymptotic = False
        if armed and not closing and not asymptotic and st.comp <= RHO_ONE_GAP:
            g = barrier_slope(st.s)
            if direction * g > 0:
                closing = True
                factor = min(factor, 1.0)
            else:
                asymptotic = True
        if closing and st.comp <= 1e-15:
            terminal = _close_at_one(states, direction, pair)
            break
        if asymptotic and st.comp <= COMP_FLOOR:
            terminal = Terminal(TerminalKind.TRUNCATED, st.s, st.slope, "vertical_asymptote")
            break
        if not origin and st.rho < RHO_FLOOR and direction * st.slope < 0:
            # the slope equation degenerates as rho -> 0; the tail is negligible
            terminal = Terminal(TerminalKind.TRUNCATED, st.s, st.slope, "rho_vanishes")
            break
        if hit_end:
            terminal = Terminal(stop_reason, st.s, st.slope, "s_max" if stop_reason is
                                TerminalKind.TRUNCATED else "domain_end")
            break
        h *= factor

    segs = [x.seg for x in states[1:]]
    if direction < 0:
        states = states[::-1]
        segs = segs[::-1]
    s = np.array([x.s for x in states])
    rho = np.array([x.rho for x in states])
    rp = np.array([x.slope for x in states])
    comp = np.array([x.comp for x in states])
    if terminal.kind is TerminalKind.REACHES_ONE:
        # the appended endpoint sits exactly on rho = 1
        end = -1 if direction > 0 else 0
        comp[end] = 0.0
        rho[end] = 1.0
    adm = admissibility_flags(s, rho, rp, origin)
    sol = RhoSolution(s, rho, rp, comp, s_start, terminal.s, terminal, adm, pair,
                      direction, origin)
    sol.meta["dense"] = DenseOutput(s, rho, comp, rp, segs)
    sol.max_residual = _max_residual(sol)
    if sol.max_residual > RESIDUAL_TOL:
        raise StepSizeUnderflow(f"residual {sol.max_residual:.3g} exceeds {RESIDUAL_TOL}",
                                (st.s, st.rho, st.slope))
    return sol


def _root_lost(st):
    if abs(st.slope) <= ROOT_LOST_SLOPE:
        return Terminal(TerminalKind.SLOPE_ZERO, st.s, st.slope, "root_lost")
    if st.comp <= RHO_ONE_GAP:
        return Terminal(TerminalKind.REACHES_ONE, st.s, math.inf, "slope_unbounded")
    raise NoRoot(f"the slope equation loses its root at s = {st.s:.12g}, rho = {st.rho:.12g}")


def _bisect_event(integ, st, direction, h, ok):
    """Largest sub-step (to EVENT_DS) from ``st`` whose end state satisfies ``ok``."""
    lo, hi = 0.0, h
    best = st
    while hi - lo > EVENT_DS:
        mid = 0.5 * (lo + hi)
        try:
            cand, _ = integ.step(st, direction * mid)
        except NoRoot:
            hi = mid
            continue
        if ok(cand):
            lo, best = mid, cand
        else:
            hi = mid
    return best


def _close_at_one(states, direction, pair):
    """Append the endpoint where rho = 1 by linear extrapolation of 1 - rho."""
    last = states[-1]
    if last.comp > 0.0 and last.slope != 0.0:
        s_end = last.s + direction * last.comp / abs(last.slope)
    else:
        s_end = last.s
        states.pop()
    try:
        slope = step_slope(pair, s_end, 1.0, 0.0, last.slope)
    except NoRoot:
        slope = last.slope
    end = _State(s_end, 1.0, 0.0, slope)
    states.append(end)
    return Terminal(TerminalKind.REACHES_ONE, end.s, end.slope, "rho_one")


def _hyperplane_solution(pair, opts):
    s_max = 50.0 if opts.s_max is None else float(opts.s_max)
    R = pair.family.domain[1]
    s_end = min(s_max, R - EVENT_DS) if math.isfinite(R) else s_max
    s = np.linspace(0.0, s_end, 11)
    z = np.zeros_like(s)
    term = Terminal(TerminalKind.TRUNCATED, s_end, 0.0, "horizontal_hyperplane")
    sol = RhoSolution(s, z, z.copy(), np.ones_like(s), 0.0, s_end, term,
                      Admissibility(True, False, False), pair, 1, True,
                      horizontal_hyperplane=True)
    sol.max_residual = _max_residual(sol)
    return sol


def sample_residual(pair, s, rho, rho_prime, comp=None, origin_slope=None):
    """|W(k, theta^2) - c| at one sample (uses residues at s = 0)."""
    fam = pair.family
    if comp is None:
        comp = 1.0 - rho
    theta2 = max(0.0, comp * (2.0 - comp))
    if s == fam.domain[0] and fam.origin_singular:
        kh = origin_curvatures(fam, rho_prime if origin_slope is None else origin_slope)
        theta2 = 1.0
    else:
        kh = horizontal_curvatures(fam, s, rho)
    return abs(pair.W.func(kh + [rho_prime], theta2) - pair.c)


def _max_residual(sol):
    worst = 0.0
    for i in range(len(sol.s)):
        r = sample_residual(sol.pair, sol.s[i], sol.rho[i], sol.rho_prime[i], sol.comp[i])
        worst = max(worst, r)
    return worst


def classify_terminal(sol):
    """Geometric reading of a solution's terminal event."""
    if sol.horizontal_hyperplane:
        return Classification.INDETERMINATE
    t = sol.terminal
    if t.kind is TerminalKind.REACHES_ONE:
        rp = t.rho_prime_at_delta
        return Classification.SPHERE_CAP if rp is not None and rp > 0 else Classification.CUSP
    if t.kind is TerminalKind.SLOPE_ZERO:
        return Classification.EQUATOR
    if t.kind is TerminalKind.TRUNCATED and sol.admissible.all:
        return Classification.ENTIRE
    return Classification.INDETERMINATE


# -- linear tau equations --------------------------------------------------------

@dataclass(frozen=True)
class LinearODECoefficients:
    """``tau' = a(s) tau + b(s)``; ``A`` is an optional antiderivative of ``a``."""

    a: object
    b: object
    interval: tuple
    A: object = None
    name: str = ""


@dataclass(frozen=True)
class CscParameters:
    n: int
    eps: int
    c: float
    frak_C: float = None

    def __post_init__(self):
        fc = (self.c - self.eps * self.n * (self.n - 1)) / (self.n * (self.n - 1))
        if self.frak_C is None:
            object.__setattr__(self, "frak_C", fc)
        elif abs(self.frak_C - fc) > 1e-15 * max(1.0, abs(fc)):
            raise ValueError("frak_C inconsistent with (n, eps, c)")


def frak_c(n, eps, c):
    return (c - eps * n * (n - 1)) / (n * (n - 1))


def csc_coefficients(mode, n, c, eps=1):
    """Coefficients of the tau-equation for W_S over the symmetric families.

    ``mode`` is ``"rotational"`` (geodesic spheres), ``"parabolic"``
    (horospheres) or ``"hyperbolic"`` (equidistants).
    """
    if mode == "rotational":
        R = math.pi / 2 if eps == 1 else math.inf
        bb = c / (n - 1) - eps * n

        def a(s):
            return -(n - 2) / tan_eps(s, eps) + 2 * eps * tan_eps(s, eps)

        def b(s):
            return bb * tan_eps(s, eps)

        def A(s):
            return -(n - 2) * np.log(sin_eps(s, eps)) - 2 * np.log(cos_eps(s, eps))

        return LinearODECoefficients(a, b, (0.0, R), A, "rotational")
    if mode == "parabolic":
        bb = -(c + n * (n - 1)) / (n - 1)
        return LinearODECoefficients(lambda s: n + 0 * s, lambda s: bb + 0 * s,
                                     (-math.inf, math.inf), lambda s: n * s, "parabolic")
    if mode == "hyperbolic":
        fc = frak_c(n, -1, c)

        def a(s):
            return -2 / np.tanh(s) - (n - 2) * np.tanh(s)

        def b(s):
            return n * fc / np.tanh(s)

        def A(s):
            return -2 * np.log(np.sinh(s)) - (n - 2) * np.log(np.cosh(s))

        return LinearODECoefficients(a, b, (0.0, math.inf), A, "hyperbolic")
    raise ValueError(f"unknown mode {mode!r}")


def solve_linear_tau(coeffs, s0, tau0, interval=None):
    """Variation-of-parameters solution of ``tau' = a tau + b`` with ``tau(s0) = tau0``.

    Inner integrals use adaptive quadrature; ``mu(s) = exp(-int_{s0}^s a)``.
    Returns a scalar evaluator ``tau(s)``.
    """
    lo, hi = interval if interval is not None else coeffs.interval
    if not lo <= s0 <= hi:
        raise ValueError("s0 must lie in the interval")

    def int_a(s):
        if coeffs.A is not None:
            return float(coeffs.A(s) - coeffs.A(s0))
        val, _ = integrate.quad(coeffs.a, s0, s, epsabs=1e-13, epsrel=1e-12, limit=200)
        return val

    def tau(s):
        s = float(s)
        if not lo <= s <= hi:
            raise ValueError(f"s = {s} outside [{lo}, {hi}]")
        if s == s0:
            return float(tau0)
        Is = int_a(s)

        def integrand(u):
            return math.exp(Is - int_a(u)) * float(coeffs.b(u))

        val, err = integrate.quad(integrand, s0, s, epsabs=1e-13, epsrel=1e-12, limit=200)
        if not math.isfinite(val):
            raise ArithmeticError("quadrature failure in solve_linear_tau")
        return math.exp(Is) * tau0 + val

    return tau


# -- closed forms ------------------------------------------------------------------

class CscMode(str, Enum):
    ROTATIONAL_SEED = "RotationalSeed"
    PARABOLIC_CONSTANT = "ParabolicConstant"
    PARABOLIC_GRAPH = "ParabolicGraph"
    HYPERBOLIC = "Hyperbolic"
    ANNULUS = "Annulus"


@dataclass
class ClosedFormRho:
    """Vectorized closed-form rho with derivative and stable ``1 - rho``."""

    name: str
    rho: object
    drho: object
    comp: object
    interval: tuple
    meta: dict = field(default_factory=dict)

    def tau(self, s):
        return self.rho(s) ** 2


def _rotational_seed(n, eps, c, fc):
    if fc < 0:
        raise OutOfRange(f"rotational seed needs c >= eps n (n-1) (frak_C = {fc:.6g} < 0)")
    q = math.sqrt(fc)
    delta = arctan_eps(1 / q, eps) if c > 0 and q > 0 else math.inf

    def rho(s):
        return q * tan_eps(np.asarray(s, dtype=float), eps)

    def drho(s):
        t = tan_eps(np.asarray(s, dtype=float), eps)
        return q * (1 + eps * t * t)

    if eps == 1:
        def comp(s):
            s = np.asarray(s, dtype=float)
            return np.sin(delta - s) / (np.sin(delta) * np.cos(s))
    elif math.isfinite(delta):
        def comp(s):
            s = np.asarray(s, dtype=float)
            return np.sinh(delta - s) / (np.sinh(delta) * np.cosh(s))
    else:
        def comp(s):
            s = np.asarray(s, dtype=float)
            x = np.exp(-2 * s)
            return (1 - q) + q * 2 * x / (1 + x)

    rp_delta = (fc + eps) / q if math.isfinite(delta) else None
    R = math.pi / 2 if eps == 1 else math.inf
    return ClosedFormRho("RotationalSeed", rho, drho, comp, (0.0, min(delta, R)),
                         {"delta": delta, "rho_prime_at_delta": rp_delta, "frak_C": fc,
                          "limit": math.sqrt(fc) if eps == -1 and not math.isfinite(delta) else None})


def _parabolic(n, c, graph):
    if not -n * (n - 1) <= c < 0:
        raise OutOfRange(f"parabolic constructions need -n(n-1) <= c < 0, got c = {c}")
    b = -(c + n * (n - 1)) / (n - 1)
    t_inf = -b / n
    if not graph:
        r0 = math.sqrt(t_inf)

        def rho(s):
            return r0 + 0 * np.asarray(s, dtype=float)

        def drho(s):
            return 0 * np.asarray(s, dtype=float)

        def comp(s):
            return (1 - r0) + 0 * np.asarray(s, dtype=float)

        return ClosedFormRho("ParabolicConstant", rho, drho, comp, (-math.inf, math.inf),
                             {"tau": t_inf, "b": b, "delta": math.inf})
    A = 1 + b / n

    def tau(s):
        return A * np.exp(n * np.asarray(s, dtype=float)) + t_inf

    def rho(s):
        return np.sqrt(tau(s))

    def drho(s):
        s = np.asarray(s, dtype=float)
        return n * A * np.exp(n * s) / (2 * np.sqrt(tau(s)))

    def comp(s):
        s = np.asarray(s, dtype=float)
        return -A * np.expm1(n * s) / (1 + np.sqrt(tau(s)))

    return ClosedFormRho("ParabolicGraph", rho, drho, comp, (-math.inf, 0.0),
                         {"b": b, "limit": math.sqrt(t_inf), "delta": -math.inf})


def hyperbolic_tau(n, fc, lam):
    """``tau_lambda`` and its derivative for the equidistant family."""
    Cl, Sl = math.cosh(lam), math.sinh(lam)
    K0 = Cl ** (n - 2) * Sl ** 2

    def parts(s):
        s = np.asarray(s, dtype=float)
        C, S = np.cosh(s), np.sinh(s)
        N = fc * (C ** n - Cl ** n) + K0
        D = C ** (n - 2) * S ** 2
        dN = n * fc * C ** (n - 1) * S
        dD = (n - 2) * C ** (n - 3) * S ** 3 + 2 * C ** (n - 1) * S
        return N, D, dN, dD

    def tau(s):
        N, D, _, _ = parts(s)
        return N / D

    def dtau(s):
        N, D, dN, dD = parts(s)
        return (dN * D - N * dD) / (D * D)

    def one_minus_tau(s):
        N, D, _, _ = parts(s)
        return (D - N) / D

    return tau, dtau, one_minus_tau


def rotational_tau(n, eps, fc, s0, tau0):
    """General rotational solution with ``tau(s0) = tau0``."""
    Dc = sin_eps(s0, eps) ** (n - 2) * cos_eps(s0, eps) ** 2
    Sn0 = sin_eps(s0, eps) ** n

    def parts(s):
        s = np.asarray(s, dtype=float)
        Sn, Cs = sin_eps(s, eps), cos_eps(s, eps)
        N = fc * (Sn ** n - Sn0) + tau0 * Dc
        D = Sn ** (n - 2) * Cs ** 2
        dN = n * fc * Sn ** (n - 1) * Cs
        dD = (n - 2) * Sn ** (n - 3) * Cs ** 3 - 2 * eps * Sn ** (n - 1) * Cs
        return N, D, dN, dD

    def tau(s):
        N, D, _, _ = parts(s)
        return N / D

    def dtau(s):
        N, D, dN, dD = parts(s)
        return (dN * D - N * dD) / (D * D)

    def one_minus_tau(s):
        N, D, _, _ = parts(s)
        return (D - N) / D

    return tau, dtau, one_minus_tau


def _from_tau(name, tau, dtau, one_minus_tau, interval, meta):
    def rho(s):
        return np.sqrt(np.maximum(tau(s), 0.0))

    def drho(s):
        return dtau(s) / (2 * rho(s))

    def comp(s):
        return one_minus_tau(s) / (1 + rho(s))

    return ClosedFormRho(name, rho, drho, comp, interval, meta)


def csc_closed_form(mode, params, extra=None):
    """Closed-form rho for the constant scalar curvature constructions.

    Parameters
    ----------
    mode : CscMode or str
    params : CscParameters
    extra : dict, optional
        ``{"lam": ...}`` for the hyperbolic and annulus modes.

    Returns
    -------
    (ClosedFormRho, dict)
    """
    mode = CscMode(mode)
    extra = extra or {}
    n, eps, c, fc = params.n, params.eps, params.c, params.frak_C
    if mode is CscMode.ROTATIONAL_SEED:
        cf = _rotational_seed(n, eps, c, fc)
    elif mode is CscMode.PARABOLIC_CONSTANT:
        cf = _parabolic(n, c, graph=False)
    elif mode is CscMode.PARABOLIC_GRAPH:
        cf = _parabolic(n, c, graph=True)
    elif mode is CscMode.HYPERBOLIC:
        if not -n * (n - 1) <= c < 0:
            raise OutOfRange(f"hyperbolic constructions need -n(n-1) <= c < 0, got c = {c}")
        lam = float(extra["lam"])
        if lam <= 0:
            raise OutOfRange("lambda must be positive")
        fc = frak_c(n, -1, c)
        cf = _from_tau("Hyperbolic", *hyperbolic_tau(n, fc, lam), (lam, math.inf),
                       {"lam": lam, "limit": math.sqrt(fc), "frak_C": fc})
    else:
        lam = float(extra["lam"])
        cf = _from_tau("Annulus", *rotational_tau(n, eps, fc, lam, 1.0),
                       (lam, math.pi / 2 if eps == 1 else math.inf),
                       {"lam": lam, "frak_C": fc,
                        "limit": fc if eps == -1 else None})
    return cf, cf.meta


def graded_grid(a, b, left_singular=False, right_singular=False, h_max=0.01, q=0.02,
                floor=1e-8):
    """Points on [a, b], spaced at most ``h_max`` and geometrically refined
    (ratio ``1 + q``) towards singular ends down to distance ``floor``."""
    if not b > a:
        return np.array([a])
    length = b - a

    def graded(limit):
        d = [0.0, floor]
        while d[-1] < limit:
            step = min(h_max, q * d[-1])
            d.append(d[-1] + step)
        return np.array(d)

    if left_singular and right_singular:
        half = 0.5 * length
        left = a + graded(half)
        right = b - graded(half)
        pts = np.concatenate([left[left < a + half], [a + half], right[right > a + half]])
    elif left_singular:
        pts = a + graded(length)
    elif right_singular:
        pts = b - graded(length)
    else:
        m = max(1, int(math.ceil(length / h_max)))
        pts = np.linspace(a, b, m + 1)
    pts = np.clip(pts, a, b)
    pts = np.unique(np.concatenate([pts, [a, b]]))
    return pts


def closed_form_solution(cf, pair, s_lo, s_hi, s_start, terminal, origin=False,
                         h_max=0.01):
    """Sample a closed form into a RhoSolution on ``[s_lo, s_hi]``."""
    left = bool(np.asarray(cf.comp(s_lo)) <= 1e-15) if math.isfinite(s_lo) else False
    right = bool(np.asarray(cf.comp(s_hi)) <= 1e-15) if math.isfinite(s_hi) else False
    s = graded_grid(s_lo, s_hi, left, right, h_max=h_max)
    with np.errstate(divide="ignore", invalid="ignore"):
        rho = np.asarray(cf.rho(s), dtype=float) + 0 * s
        rp = np.asarray(cf.drho(s), dtype=float) + 0 * s
        comp = np.asarray(cf.comp(s), dtype=float) + 0 * s
    if origin and s[0] == 0.0:
        rho[0] = 0.0
        comp[0] = 1.0
    if left:
        rho[0], comp[0] = 1.0, 0.0
    if right:
        rho[-1], comp[-1] = 1.0, 0.0
    comp = np.maximum(comp, 0.0)
    direction = -1 if s_start == s_hi and s_start != s_lo else 1
    adm = admissibility_flags(s, rho, rp, origin)
    sol = RhoSolution(s, rho, rp, comp, s_start, terminal.s, terminal, adm, pair, direction,
                      origin, closed_form=cf)
    if pair is not None:
        sol.max_residual = _max_residual(sol)
    return sol


def ws_pair(n, eps, c, kind=FamilyKind.GEODESIC_SPHERES):
    """PairConfig for W_S over one of the standard families."""
    fam = make_family(kind, n, eps)
    return PairConfig(float(c), builtin("scalarWS", {"eps": eps}, n), fam)
