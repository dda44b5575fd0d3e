"""Isoparametric parallel families of hypersurfaces in a base manifold M.

A family ``f_s`` is described by its principal curvature branches: each
branch is a function ``alpha_j(s)`` together with a multiplicity ``m_j``,
with ``sum m_j = n - 1``.  Orientation is fixed so that geodesic spheres have
negative principal curvatures ``alpha = -cot_eps(s)``.

The space-form trigonometric helpers ``sin_eps``, ``cos_eps``, ``tan_eps``,
``cot_eps`` and ``arctan_eps`` (circular for eps = 1, hyperbolic for
eps = -1) live here as well, since every family is built from them.
"""

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import jsonschema
import numpy as np

from .errors import DomainError, InvalidFamily, SchemaError
from .expr import compile_expression


# -- space-form trigonometry -------------------------------------------------

def _check_eps(eps):
    if eps not in (1, -1):
        raise InvalidFamily(f"epsilon must be +1 or -1, got {eps!r}")


def sin_eps(s, eps):
    return np.sin(s) if eps == 1 else np.sinh(s)


def cos_eps(s, eps):
    return np.cos(s) if eps == 1 else np.cosh(s)


def tan_eps(s, eps):
    return np.tan(s) if eps == 1 else np.tanh(s)


def cot_eps(s, eps):
    return 1.0 / tan_eps(s, eps)


def arctan_eps(x, eps):
    """Inverse of ``tan_eps``; for eps = -1 returns inf when x >= 1."""
    if eps == 1:
        return math.atan(x)
    if x >= 1.0:
        return math.inf
    return math.atanh(x)


# -- families ----------------------------------------------------------------

class FamilyKind(str, Enum):
    GEODESIC_SPHERES = "GeodesicSpheres"
    HOROSPHERES = "Horospheres"
    EQUIDISTANTS = "Equidistants"
    CUSTOM = "Custom"


@dataclass(frozen=True)
class Branch:
    """One principal curvature branch ``alpha(s)`` of multiplicity ``mult``."""

    mult: int
    alpha: object
    source: str = ""

    def __call__(self, s):
        return self.alpha(s)


@dataclass(frozen=True)
class AmbientFamily:
    """An isoparametric family of parallel hypersurfaces.

    Attributes
    ----------
    kind : FamilyKind
    n : int
        Dimension of M.
    epsilon : int
        Sign of the ambient sectional curvature.
    branches : tuple of Branch
    domain : tuple of float
        Open interval of admissible parameters ``s``.
    residues : tuple of float or None
        ``lim_{s->0} s * alpha_j(s)`` per branch when the family collapses to
        a point at ``s = 0``; None for families without a singular origin.
    """

    kind: FamilyKind
    n: int
    epsilon: int
    branches: tuple
    domain: tuple
    residues: tuple = None
    name: str = field(default="", compare=False)

    @property
    def origin_singular(self):
        return self.residues is not None

    @property
    def total_multiplicity(self):
        return sum(b.mult for b in self.branches)

    def in_domain(self, s):
        a, b = self.domain
        if self.origin_singular and s == a:
            return True
        return a < s < b

    def alphas(self, s):
        """Branch curvatures at ``s`` (scalar) without domain checks."""
        return [b.alpha(s) for b in self.branches]

    def describe(self):
        return {
            "kind": self.kind.value,
            "n": self.n,
            "epsilon": self.epsilon,
            "domain": [_encode_bound(x) for x in self.domain],
            "branches": [{"mult": b.mult, "alpha": b.source} for b in self.branches],
            "residues": None if self.residues is None else list(self.residues),
        }


def _encode_bound(x):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def _decode_bound(x):
    if isinstance(x, str):
        try:
            return float(x)
        except ValueError:
            raise SchemaError(f"bad domain bound {x!r}") from None
    if x is None:
        raise SchemaError("domain bounds may not be null")
    return float(x)


def _validate(family):
    if family.n < 2:
        raise InvalidFamily(f"ambient dimension must be >= 2, got {family.n}")
    _check_eps(family.epsilon)
    if not family.branches:
        raise InvalidFamily("a family needs at least one curvature branch")
    if any(int(b.mult) != b.mult or b.mult < 1 for b in family.branches):
        raise InvalidFamily("multiplicities must be positive integers")
    if family.total_multiplicity != family.n - 1:
        raise InvalidFamily(
            f"multiplicities sum to {family.total_multiplicity}, expected n-1 = {family.n - 1}"
        )
    a, b = family.domain
    if not a < b:
        raise InvalidFamily(f"empty domain ({a}, {b})")
    if family.residues is not None and len(family.residues) != len(family.branches):
        raise InvalidFamily("one residue per branch is required")
    return family


def _neg_cot(eps):
    if eps == 1:
        return lambda s: -np.cos(s) / np.sin(s)
    return lambda s: -1.0 / np.tanh(s)


def _one(s):
    if np.ndim(s) == 0:
        return 1.0
    return np.ones_like(np.asarray(s, dtype=float))


def _neg_tanh(s):
    return -np.tanh(s)


def make_family(kind, n, eps=-1):
    """Build one of the standard families.

    Parameters
    ----------
    kind : FamilyKind or str
        ``GeodesicSpheres``, ``Horospheres`` or ``Equidistants`` (the CLI
        aliases ``spheres``, ``horospheres``, ``equidistants`` are accepted).
    n : int
    eps : int
        Curvature sign; horospheres and equidistants require -1.
    """
    kind = _parse_kind(kind)
    if not isinstance(n, (int, np.integer)) or n < 2:
        raise InvalidFamily(f"ambient dimension must be an integer >= 2, got {n!r}")
    _check_eps(eps)
    n = int(n)
    if kind is FamilyKind.GEODESIC_SPHERES:
        R = math.pi / 2 if eps == 1 else math.inf
        src = "-cot(s)" if eps == 1 else "-coth(s)"
        fam = AmbientFamily(kind, n, eps, (Branch(n - 1, _neg_cot(eps), src),),
                            (0.0, R), residues=(-1.0,), name="spheres")
    elif kind is FamilyKind.HOROSPHERES:
        if eps != -1:
            raise InvalidFamily("horospheres exist only in hyperbolic space (eps = -1)")
        fam = AmbientFamily(kind, n, -1, (Branch(n - 1, _one, "const(1)"),),
                            (-math.inf, math.inf), name="horospheres")
    elif kind is FamilyKind.EQUIDISTANTS:
        if eps != -1:
            raise InvalidFamily("equidistant hypersurfaces require eps = -1")
        fam = AmbientFamily(kind, n, -1, (Branch(n - 1, _neg_tanh, "-tanh(s)"),),
                            (0.0, math.inf), name="equidistants")
    else:
        raise InvalidFamily("use make_custom_family for custom families")
    return _validate(fam)


_KIND_ALIASES = {
    "spheres": FamilyKind.GEODESIC_SPHERES,
    "geodesicspheres": FamilyKind.GEODESIC_SPHERES,
    "horospheres": FamilyKind.HOROSPHERES,
    "equidistants": FamilyKind.EQUIDISTANTS,
    "custom": FamilyKind.CUSTOM,
}


def _parse_kind(kind):
    if isinstance(kind, FamilyKind):
        return kind
    key = str(kind).replace("_", "").replace("-", "").lower()
    if key not in _KIND_ALIASES:
        raise InvalidFamily(f"unknown family kind {kind!r}")
    return _KIND_ALIASES[key]


def make_custom_family(branches, n, eps, domain, residues=None, name="custom"):
    """Build a family from user-supplied branches.

    Parameters
    ----------
    branches : list of (alpha, mult)
        ``alpha`` is a callable of ``s`` or an expression string in ``s``.
    n, eps : int
    domain : (float, float)
    residues : list of float, optional
        Origin residues, one per branch, for families that collapse at s = 0.
    """
    built = []
    for item in branches:
        if isinstance(item, Branch):
            built.append(item)
            continue
        alpha, mult = item
        if isinstance(alpha, str):
            src = alpha
            alpha = compile_expression(alpha, {"s"})
            alpha = _wrap_expression(alpha)
        else:
            src = getattr(alpha, "__name__", "callable")
        built.append(Branch(int(mult), alpha, src))
    dom = tuple(float(x) for x in domain)
    res = None if residues is None else tuple(float(r) for r in residues)
    return _validate(AmbientFamily(FamilyKind.CUSTOM, int(n), eps, tuple(built), dom, res, name))


def _wrap_expression(expr):
    def alpha(s):
        v = expr(s=s)
        if np.ndim(s) > 0 and np.ndim(v) == 0:
            v = np.full(np.shape(s), v)
        return v

    alpha.__name__ = expr.source
    return alpha


def principal_curvatures_at(family, s):
    """List of ``(alpha_j(s), m_j)`` at a point of the family's domain.

    At ``s = 0`` on an origin-singular family the curvatures are infinite;
    callers needing the limit should use the residues instead.
    """
    s = float(s)
    a, b = family.domain
    if not (a < s < b):
        raise DomainError(f"s = {s} outside the family domain ({a}, {b})")
    out = []
    for br in family.branches:
        v = float(br.alpha(s))
        if math.isnan(v):
            raise InvalidFamily(f"branch {br.source!r} returned NaN at s = {s}")
        out.append((v, br.mult))
    return out


FAMILY_SCHEMA = {
    "type": "object",
    "required": ["n", "epsilon", "domain", "branches"],
    "properties": {
        "format_version": {"type": "integer"},
        "name": {"type": "string"},
        "n": {"type": "integer", "minimum": 2},
        "epsilon": {"enum": [1, -1]},
        "domain": {
            "type": "array",
            "minItems": 2,
            "maxItems": 2,
            "items": {"type": ["number", "string"]},
        },
        "branches": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["mult", "alpha"],
                "properties": {
                    "mult": {"type": "integer", "minimum": 1},
                    "alpha": {"type": "string"},
                },
            },
        },
        "residues": {"type": ["array", "null"], "items": {"type": "number"}},
    },
}


def family_from_dict(doc):
    try:
        jsonschema.validate(doc, FAMILY_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise SchemaError(f"invalid family document: {exc.message}") from None
    domain = [_decode_bound(x) for x in doc["domain"]]
    branches = [(b["alpha"], b["mult"]) for b in doc["branches"]]
    try:
        return make_custom_family(branches, doc["n"], doc["epsilon"], domain,
                                  doc.get("residues"), doc.get("name", "custom"))
    except InvalidFamily as exc:
        raise SchemaError(str(exc)) from None


def load_family(path):
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    return family_from_dict(doc)
