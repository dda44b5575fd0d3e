"""Elliptic Weingarten functions ``W(k_1, ..., k_n, theta^2)``.

A :class:`WeingartenSpec` bundles an evaluator, an optional analytic
gradient in the curvature slots and some metadata (homogeneity degree,
whether the angle enters).  Built-ins are the elementary symmetric
functions ``H_r``, the norm ``|A|`` of the second fundamental form and the
scalar curvature function ``W_S`` of a graph in ``Q^n_eps x R``.

User functions are written in the expression grammar of :mod:`.expr`
extended with ``e1``..``en`` (elementary symmetric polynomials of the
curvatures), ``sumsq`` and ``theta2``.
"""

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import NotElliptic, OutOfRange, SchemaError
from .expr import compile_expression


def elementary_symmetric(k, r):
    """``e_r(k)``; ``e_0 = 1`` and ``e_r = 0`` for r > len(k)."""
    if r < 0 or r > len(k):
        return 0.0
    e = [1.0] + [0.0] * r
    for x in k:
        for j in range(r, 0, -1):
            e[j] += x * e[j - 1]
    return e[r]


def all_elementary(k):
    e = [1.0] + [0.0] * len(k)
    for x in k:
        for j in range(len(k), 0, -1):
            e[j] += x * e[j - 1]
    return e


@dataclass(frozen=True)
class WeingartenSpec:
    """A Weingarten function of ``n`` principal curvatures.

    Attributes
    ----------
    name : str
    n : int
    func : callable
        ``func(k, theta2) -> float`` with ``k`` a sequence of length n.
    grad : callable or None
        Analytic gradient in ``k``; central differences are used otherwise.
    depends_on_theta : bool
    degree : Fraction or None
        Homogeneity degree in ``k`` when known.
    """

    name: str
    n: int
    func: object = field(compare=False)
    grad: object = field(default=None, compare=False)
    depends_on_theta: bool = False
    degree: Fraction = None
    source: str = ""

    def __call__(self, k, theta2=1.0):
        return self.func(k, theta2)

    def evaluate(self, k, theta2=1.0):
        return float(self.func(list(k), float(theta2)))

    def gradient(self, k, theta2=1.0):
        k = [float(x) for x in k]
        if self.grad is not None:
            return np.asarray(self.grad(k, float(theta2)), dtype=float)
        return np.array([self._fd_partial(k, theta2, i) for i in range(self.n)])

    def partial(self, k, theta2, i):
        """Derivative in the i-th curvature slot."""
        if self.grad is not None:
            return float(self.grad(k, theta2)[i])
        return self._fd_partial(list(k), theta2, i)

    def _fd_partial(self, k, theta2, i):
        norm = math.sqrt(sum(x * x for x in k))
        h = 1e-6 * max(1.0, norm)
        # stay inside the positive cone when probing near its boundary
        if k[i] > 0:
            h = min(h, 0.5 * k[i])
        kp = list(k)
        km = list(k)
        kp[i] += h
        km[i] -= h
        return (self.func(kp, theta2) - self.func(km, theta2)) / (2 * h)


# -- built-ins -----------------------------------------------------------------

def _hr(n, r):
    def func(k, theta2=1.0):
        return elementary_symmetric(k, r)

    def grad(k, theta2=1.0):
        out = []
        for i in range(len(k)):
            rest = k[:i] + k[i + 1:]
            out.append(elementary_symmetric(rest, r - 1))
        return out

    return WeingartenSpec(f"H{r}", n, func, grad, False, Fraction(r), f"Hr:{r}")


def _norm_a(n):
    def func(k, theta2=1.0):
        return math.sqrt(sum(x * x for x in k))

    def grad(k, theta2=1.0):
        nrm = math.sqrt(sum(x * x for x in k))
        if nrm == 0.0:
            return [0.0] * len(k)
        return [x / nrm for x in k]

    return WeingartenSpec("normA", n, func, grad, False, Fraction(1), "normA")


def _scalar_ws(n, eps):
    offset = eps * (n - 1)

    def func(k, theta2=1.0):
        s1 = sum(k)
        s2 = sum(x * x for x in k)
        return (s1 * s1 - s2) + offset * (2.0 * theta2 + n - 2)

    def grad(k, theta2=1.0):
        s1 = sum(k)
        return [2.0 * (s1 - x) for x in k]

    return WeingartenSpec(f"WS[eps={eps}]", n, func, grad, True, None, "WS")


def builtin(name, params=None, n=3):
    """Return a built-in Weingarten function.

    Parameters
    ----------
    name : str
        ``"Hr"`` (with ``params={"r": r}``), ``"normA"`` or ``"scalarWS"``
        (with ``params={"eps": eps}``).  The short forms ``"Hr:2"`` and
        ``"WS"`` are understood too.
    params : dict, optional
    n : int
    """
    params = dict(params or {})
    if n < 2:
        raise OutOfRange(f"arity must be >= 2, got {n}")
    if name.startswith("Hr:") or name.startswith("H") and name[1:].isdigit():
        params["r"] = int(name.split(":")[1] if ":" in name else name[1:])
        name = "Hr"
    if name == "Hr":
        r = int(params.get("r", 1))
        if not 1 <= r <= n:
            raise OutOfRange(f"H_r needs 1 <= r <= n, got r = {r}, n = {n}")
        return _hr(n, r)
    if name == "normA":
        return _norm_a(n)
    if name in ("scalarWS", "WS"):
        eps = params.get("eps", 1)
        if eps not in (1, -1):
            raise OutOfRange(f"W_S needs eps = +-1, got {eps}")
        return _scalar_ws(n, eps)
    raise SchemaError(f"unknown built-in Weingarten function {name!r}")


def inverse_of(spec):
    """``W*(k) = 1 / W(1/k_1, ..., 1/k_n)``, defined on the positive cone."""
    if spec.depends_on_theta:
        raise OutOfRange("inverse_of needs a theta-independent function")

    def recip(k):
        if any(x <= 0 for x in k):
            raise OutOfRange("inverse Weingarten function is defined only on the positive cone")
        return [1.0 / x for x in k]

    def func(k, theta2=1.0):
        return 1.0 / spec.func(recip(k), theta2)

    def grad(k, theta2=1.0):
        q = recip(k)
        w = spec.func(q, theta2)
        g = spec.gradient(q, theta2)
        return [g[i] * q[i] * q[i] / (w * w) for i in range(len(k))]

    return WeingartenSpec(f"inv({spec.name})", spec.n, func, grad, False, spec.degree,
                          f"inverse:{spec.source}")


_SYMMETRIC_NAMES = ("sumsq", "theta2", "n")


def from_expression(expr, n, name="custom", theta=None):
    """Compile a user Weingarten function over ``e1..en``, ``sumsq`` and ``theta2``."""
    variables = {f"e{i}" for i in range(1, n + 1)} | set(_SYMMETRIC_NAMES)
    compiled = compile_expression(expr, variables)
    uses_theta = "theta2" in compiled.names
    needed = sorted(v for v in compiled.names if v.startswith("e"))

    def func(k, theta2=1.0):
        e = all_elementary(k)
        env = {v: e[int(v[1:])] for v in needed}
        env["sumsq"] = sum(x * x for x in k)
        env["theta2"] = theta2
        env["n"] = float(n)
        return compiled(**env)

    dep = uses_theta if theta is None else bool(theta)
    return WeingartenSpec(name, n, func, None, dep, None, expr)


def weingarten_from_dict(doc, eps=1):
    if not isinstance(doc, dict) or "n" not in doc or "expr" not in doc:
        raise SchemaError('Weingarten document needs "n" and "expr"')
    n = doc["n"]
    if not isinstance(n, int) or n < 2:
        raise SchemaError('"n" must be an integer >= 2')
    expr = doc["expr"]
    if expr.startswith("Hr:") or expr in ("normA", "WS"):
        return builtin(expr, {"eps": eps}, n)
    return from_expression(expr, n, doc.get("name", "custom"), doc.get("theta"))


def resolve_weingarten(ref, n, eps=1):
    """Accept a built-in reference (``"Hr:2"``, ``"normA"``, ``"WS"``), an
    expression string or a path to a JSON document."""
    if ref.startswith("Hr:") or ref in ("normA", "WS") or (ref[:1] == "H" and ref[1:].isdigit()):
        return builtin(ref, {"eps": eps}, n)
    if ref.endswith(".json"):
        with open(ref) as fh:
            try:
                doc = json.load(fh)
            except json.JSONDecodeError as exc:
                raise SchemaError(f"{ref}: not valid JSON ({exc})") from None
        return weingarten_from_dict(doc, eps)
    return from_expression(ref, n)


# -- audits --------------------------------------------------------------------

@dataclass
class EllipticityReport:
    name: str
    samples: int
    min_partial: float
    violations: list
    min_value: float
    nonpositive_values: int
    strict_positivity: bool = False

    @property
    def passed(self):
        if self.violations:
            return False
        return not (self.strict_positivity and self.nonpositive_values)

    def to_dict(self):
        return {
            "name": self.name,
            "samples": self.samples,
            "min_partial": self.min_partial,
            "violations": len(self.violations),
            "min_value": self.min_value,
            "nonpositive_values": self.nonpositive_values,
            "passed": self.passed,
        }


def sample_positive_cone(n, samples, seed, low=1e-3, high=1e3):
    rng = np.random.default_rng(seed)
    return np.exp(rng.uniform(math.log(low), math.log(high), size=(samples, n)))


def check_ellipticity(spec, samples=1000, seed=0, strict_positivity=False, max_violations=20):
    """Sample grad_k W on the positive cone at theta^2 in {0, 1/2, 1}.

    Positivity of W itself is reported but only enforced when
    ``strict_positivity`` is set (W_S with eps = -1 is negative on part of
    the cone).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    pts = sample_positive_cone(spec.n, samples, seed)
    min_partial = math.inf
    min_value = math.inf
    nonpos = 0
    violations = []
    for k in pts:
        k = k.tolist()
        for t2 in (0.0, 0.5, 1.0):
            g = spec.gradient(k, t2)
            if not np.all(np.isfinite(g)):
                raise NotElliptic(f"{spec.name}: gradient evaluation failed at k = {k}")
            gmin = float(g.min())
            min_partial = min(min_partial, gmin)
            if gmin <= 0 and len(violations) < max_violations:
                violations.append((k, t2, int(g.argmin()), gmin))
            w = spec.evaluate(k, t2)
            min_value = min(min_value, w)
            if w <= 0:
                nonpos += 1
    return EllipticityReport(spec.name, samples, min_partial, violations, min_value, nonpos,
                             strict_positivity)


def homogeneity_degree(spec, seed=0, samples=20, ts=(0.5, 2.0, 7.0)):
    """Fit ``log(W(t k) / W(k)) = d log t``; None when the fit is not exact."""
    if spec.depends_on_theta:
        return None
    pts = sample_positive_cone(spec.n, samples, seed, 0.1, 10.0)
    xs, ys = [], []
    for k in pts:
        w0 = spec.evaluate(k)
        if w0 <= 0:
            return None
        for t in ts:
            w = spec.evaluate(t * k)
            if w <= 0:
                return None
            xs.append(math.log(t))
            ys.append(math.log(w / w0))
    xs = np.array(xs)
    ys = np.array(ys)
    d = float(xs @ ys / (xs @ xs))
    resid = float(np.max(np.abs(ys - d * xs)))
    if resid >= 1e-8 or d <= 0:
        return None
    frac = Fraction(d).limit_denominator(64)
    return frac if abs(float(frac) - d) < 1e-8 else d


@dataclass(frozen=True)
class PairConfig:
    """A Weingarten function, the constant c and the family it is solved over."""

    c: float
    W: WeingartenSpec
    family: object

    def __post_init__(self):
        if self.W.n != self.family.n:
            raise OutOfRange(f"W has arity {self.W.n} but the family lives in dimension {self.family.n}")
