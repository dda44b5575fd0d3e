"""Serialization of models, profiles and reports.

JSON numbers are written with 17 significant digits and non-finite
values as the strings ``"inf"``, ``"-inf"`` and ``"nan"``, so output is
byte-identical across runs.
"""

import csv
import dataclasses
import enum
import json
import math
from fractions import Fraction

import numpy as np

FORMAT_VERSION = 1

PROFILE_COLUMNS = ("s", "rho", "rho_prime", "phi", "theta", "k_min", "k_max",
                   "H1", "H2", "S", "K_tan", "K_mix")


def fmt(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def to_plain(obj):
    """Reduce numpy scalars/arrays, enums, dataclasses and fractions to JSON types."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, np.ndarray):
        return [to_plain(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_plain(x) for x in obj]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if hasattr(obj, "name"):
        return str(obj.name)
    return str(obj)


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if obj is True:
        return "true"
    if obj is False:
        return "false"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        s = fmt(obj)
        return s if math.isfinite(obj) else f'"{s}"'
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_encode(str(k), indent, level + 1)}: {_encode(v, indent, level + 1)}"
                 for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(x, (dict, list)) for x in obj):
            return "[" + ", ".join(_encode(x, indent, level + 1) for x in obj) + "]"
        items = [pad + _encode(x, indent, level + 1) for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent=2):
    return _encode(to_plain(obj), indent, 0) + "\n"


def write_json(obj, path):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


# -- models ---------------------------------------------------------------------------

_META_SKIP = ("closed_form", "family", "dense")


def _meta_plain(meta):
    out = {}
    for k, v in meta.items():
        if k == "closed_form":
            out[k] = None if v is None else getattr(v, "name", "closed")
        elif k not in _META_SKIP and not callable(v):
            out[k] = to_plain(v)
    return out


def pair_to_dict(pair):
    if pair is None:
        return None
    return {
        "c": float(pair.c),
        "W": {"name": pair.W.name, "source": pair.W.source, "n": pair.W.n},
        "family": pair.family.describe(),
    }


def piece_to_dict(piece, index):
    prof = piece.profile
    sol = prof.solution
    d = {
        "index": index,
        "offset": float(piece.offset),
        "reflected": bool(piece.reflected),
        "samples": len(prof.s),
        "s_range": [float(prof.s[0]), float(prof.s[-1])],
        "height_range": [float(np.min(piece.height)), float(np.max(piece.height))],
        "convexity": prof.convexity.value,
        "flags": to_plain(prof.flags),
    }
    if sol is not None:
        term = sol.terminal
        d["terminal"] = {"kind": term.kind.value, "s": term.s,
                         "rho_prime_at_delta": term.rho_prime_at_delta, "reason": term.reason}
        d["truncated"] = term.kind.value == "Truncated"
        d["admissible"] = to_plain(sol.admissible)
        d["closed_form"] = sol.closed_form is not None
        d["max_residual"] = float(sol.max_residual)
    d["s"] = to_plain(prof.s)
    d["rho"] = to_plain(prof.rho)
    d["rho_prime"] = to_plain(prof.rho_prime)
    d["height"] = to_plain(piece.height)
    return d


def model_to_dict(model, report=None):
    from .profile import height_extent

    ext = height_extent(model)
    doc = {
        "format_version": FORMAT_VERSION,
        "topology": model.topology.value,
        "convexity": model.convexity.value,
        "period": model.period,
        "symmetry_planes": [float(x) for x in model.symmetry_planes],
        "height_extent": to_plain(ext),
        "pair": pair_to_dict(model.pair),
        "meta": _meta_plain(model.meta),
        "pieces": [piece_to_dict(p, i) for i, p in enumerate(model.pieces)],
    }
    if report is not None:
        doc["verification"] = report.to_dict()
    return doc


def write_model_json(model, path, report=None):
    write_json(model_to_dict(model, report), path)


# -- per-sample tables -----------------------------------------------------------------

def profile_rows(piece):
    """Rows for one placed piece; ``phi`` holds the placed height."""
    prof = piece.profile
    K_tan = prof.K_tan[min(prof.K_tan)] if prof.K_tan else np.full(len(prof.s), math.nan)
    K_mix = prof.K_mix[0]
    cols = (prof.s, prof.rho, prof.rho_prime, piece.height, prof.theta, prof.k_min, prof.k_max,
            prof.H1, prof.H2, prof.S, K_tan, K_mix)
    return [[fmt(c[i]) for c in cols] for i in range(len(prof.s))]


def write_profile_csv(piece, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PROFILE_COLUMNS)
        w.writerows(profile_rows(piece))


def export_profiles(model, stem):
    """One CSV per piece, named ``<stem>_piece<i>.csv``."""
    paths = []
    for i, piece in enumerate(model.pieces):
        path = f"{stem}_piece{i}.csv"
        write_profile_csv(piece, path)
        paths.append(path)
    return paths


# -- surface meshes --------------------------------------------------------------------

def _radial(family, s):
    if family.epsilon > 0:
        return np.sin(s)
    if family.epsilon < 0:
        return np.tanh(s / 2.0)
    return np.asarray(s, dtype=float)


def _strip(piece, family, segments, width):
    s = piece.profile.s
    t = piece.height
    keep = np.isfinite(s) & np.isfinite(t)
    s, t = s[keep], t[keep]
    verts = []
    if family.origin_singular:
        r = _radial(family, s)
        for k in range(segments):
            a = 2 * math.pi * k / segments
            verts.extend((ri * math.cos(a), ri * math.sin(a), ti) for ri, ti in zip(r, t))
        ncol = segments
        wrap = True
    else:
        # translation-invariant families: extrude the profile along a second axis
        for k in range(segments + 1):
            y = -width + 2 * width * k / segments
            verts.extend((si, y, ti) for si, ti in zip(s, t))
        ncol = segments + 1
        wrap = False
    return verts, len(s), ncol, wrap


def write_revolution_obj(model, path, segments=48, width=1.0):
    """Quad mesh of the model, one fundamental period for annuli."""
    family = model.pair.family if model.pair is not None else model.pieces[0].profile.family
    lines = [f"# topology {model.topology.value}"]
    if model.period is not None:
        lines.append(f"# period {fmt(model.period)}")
        lines.append("# repeat count 1 (translate by the period along t to continue)")
    lines.append(f"# model coordinates: {'r = sin s' if family.epsilon > 0 else 'r = tanh(s/2)'}"
                 if family.origin_singular else "# translational extrusion")
    base = 1
    for i, piece in enumerate(model.pieces):
        verts, nrow, ncol, wrap = _strip(piece, family, segments, width)
        lines.append(f"o piece{i}")
        lines.extend(f"v {fmt(x)} {fmt(y)} {fmt(z)}" for x, y, z in verts)
        cols = ncol if wrap else ncol - 1
        for k in range(cols):
            k2 = (k + 1) % ncol
            for j in range(nrow - 1):
                a = base + k * nrow + j
                b = base + k2 * nrow + j
                lines.append(f"f {a} {b} {b + 1} {a + 1}")
        base += len(verts)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
