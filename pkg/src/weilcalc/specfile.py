"""Spec-file ingestion and canonical emission.

A spec file is a JSON document describing a chart, an algebroid
presentation, and optionally an ideal, a linear connection, an IM
connection, a list of cochains, and a curving. Polynomials are exact
rational strings in the chart variables; all emission is canonical
(sorted keys, graded-lex polynomial strings), so re-serialization is
byte-identical.
"""

import json

from .algebroid import AlgebroidPresentation, VForm
from .connections import LinearConnection
from .errors import SpecError, StructureError
from .ideals import IMConnection, IdealBundle
from .polyring import default_names, poly_from_str, poly_to_str
from .weil import WeilCochain


def _ints(path, text, count=None):
    text = text.strip()
    if not text:
        parts = []
    else:
        try:
            parts = [int(t) for t in text.split(",")]
        except ValueError:
            raise SpecError(path, f"expected comma-separated integers, got {text!r}")
    if count is not None and len(parts) != count:
        raise SpecError(path, f"expected {count} indices, got {len(parts)}")
    return tuple(parts)


def _poly(path, text, nvars, names):
    if not isinstance(text, str):
        raise SpecError(path, "polynomial must be a string")
    try:
        return poly_from_str(text, nvars, names)
    except ValueError as exc:
        raise SpecError(path, str(exc))


def _require(data, key, path, typ):
    if key not in data:
        raise SpecError(f"{path}.{key}", "missing required field")
    val = data[key]
    if not isinstance(val, typ):
        raise SpecError(f"{path}.{key}", f"expected {typ.__name__}")
    return val


class Spec:
    """Parsed spec file contents; raw dict round-trips canonically.

    The ideal and the IM connection are kept raw (indices, cochain) so that
    failures of their mathematical invariants surface as failed checks, not
    as parse errors; ``build_ideal``/``build_imc`` construct the validated
    objects on demand.
    """

    def __init__(self, names, A, ideal_indices=None, conn=None, im_cochain=None,
                 cochains=(), curving=None):
        self.names = names
        self.A = A
        self.ideal_indices = tuple(ideal_indices) if ideal_indices else None
        self.conn = conn
        self.im_cochain = im_cochain
        self.cochains = list(cochains)
        self.curving = curving

    def build_ideal(self):
        if self.ideal_indices is None:
            raise StructureError("spec has no ideal section")
        return IdealBundle(self.A, self.ideal_indices)

    def build_imc(self, ideal=None):
        if self.im_cochain is None:
            raise StructureError("spec has no im_connection section")
        return IMConnection(ideal or self.build_ideal(), self.im_cochain)

    def to_dict(self):
        n = self.A.nvars
        names = self.names
        doc = {
            "chart": {"dim": n, "variables": list(names)},
            "algebroid": {
                "rank": self.A.rank,
                "structure": {f"{i},{j},{k}": poly_to_str(p, names)
                              for (i, j, k), p in sorted(self.A.structure.items())},
                "anchor": {f"{i},{a}": poly_to_str(p, names)
                           for (i, a), p in sorted(self.A.anchor.items())},
            },
        }
        if self.ideal_indices is not None:
            doc["ideal"] = {"indices": list(self.ideal_indices)}
        if self.conn is not None:
            doc["connection"] = connection_to_dict(self.conn, names)
        if self.im_cochain is not None:
            doc["im_connection"] = {"cochain": cochain_to_dict(self.im_cochain, names)}
        if self.cochains:
            doc["cochains"] = [cochain_to_dict(c, names) for c in self.cochains]
        if self.curving is not None:
            doc["curving"] = {"form": vform_to_dict(self.curving, names)}
        return doc


def vform_to_dict(vf, names):
    return {
        "bundle_rank": vf.rank,
        "degree": vf.degree,
        "components": {f"{b}|{','.join(map(str, idx))}": poly_to_str(p, names)
                       for (b, idx), p in sorted(vf.comps.items())},
    }


def vform_from_dict(data, nvars, names, path):
    rank = _require(data, "bundle_rank", path, int)
    degree = _require(data, "degree", path, int)
    comps = {}
    for key, text in _require(data, "components", path, dict).items():
        kpath = f"{path}.components.{key}"
        if "|" not in key:
            raise SpecError(kpath, "component key must be 'b|a1,a2,...'")
        bpart, apart = key.split("|", 1)
        b = _ints(kpath, bpart, 1)[0]
        idx = _ints(kpath, apart)
        p = _poly(kpath, text, nvars, names)
        try:
            comps[(b, idx)] = p
        except StructureError as exc:
            raise SpecError(kpath, str(exc))
    try:
        return VForm(nvars, rank, degree, comps)
    except StructureError as exc:
        raise SpecError(path, str(exc))


def cochain_to_dict(c, names):
    tables = {}
    for k, tbl in sorted(c.tables.items()):
        row = {}
        for (I, J), vf in sorted(tbl.items()):
            key = f"{','.join(map(str, I))}|{','.join(map(str, J))}"
            row[key] = {f"{b}|{','.join(map(str, idx))}": poly_to_str(p, names)
                        for (b, idx), p in sorted(vf.comps.items())}
        tables[str(k)] = row
    return {"p": c.p, "q": c.q, "bundle_rank": c.rank, "tables": tables}


def cochain_from_dict(data, A, names, path):
    p = _require(data, "p", path, int)
    q = _require(data, "q", path, int)
    rank = _require(data, "bundle_rank", path, int)
    tables = {}
    for kstr, row in _require(data, "tables", path, dict).items():
        kpath = f"{path}.tables.{kstr}"
        try:
            k = int(kstr)
        except ValueError:
            raise SpecError(kpath, "table key must be an integer level")
        tbl = {}
        for ijkey, comps in row.items():
            epath = f"{kpath}.{ijkey}"
            if "|" not in ijkey:
                raise SpecError(epath, "entry key must be 'I|J'")
            ipart, jpart = ijkey.split("|", 1)
            I = _ints(epath, ipart)
            J = _ints(epath, jpart)
            vcomps = {}
            for ckey, text in comps.items():
                cpath = f"{epath}.{ckey}"
                bpart, apart = ckey.split("|", 1) if "|" in ckey else (ckey, "")
                b = _ints(cpath, bpart, 1)[0]
                idx = _ints(cpath, apart)
                vcomps[(b, idx)] = _poly(cpath, text, A.nvars, names)
            try:
                tbl[(I, J)] = VForm(A.nvars, rank, q - k, vcomps)
            except StructureError as exc:
                raise SpecError(epath, str(exc))
        tables[k] = tbl
    try:
        return WeilCochain(A, rank, p, q, tables)
    except StructureError as exc:
        raise SpecError(path, str(exc))


def connection_to_dict(conn, names):
    return {
        "bundle_rank": conn.rank,
        "christoffels": {f"{a},{b},{c}": poly_to_str(p, names)
                         for (a, b, c), p in sorted(conn.christoffels.items())},
    }


def connection_from_dict(data, nvars, names, path):
    rank = _require(data, "bundle_rank", path, int)
    table = {}
    for key, text in _require(data, "christoffels", path, dict).items():
        kpath = f"{path}.christoffels.{key}"
        a, b, c = _ints(kpath, key, 3)
        table[(a, b, c)] = _poly(kpath, text, nvars, names)
    try:
        return LinearConnection(nvars, rank, table)
    except StructureError as exc:
        raise SpecError(path, str(exc))


def load_spec(data):
    """Parse a spec document into validated objects (raises SpecError)."""
    if not isinstance(data, dict):
        raise SpecError("$", "spec document must be a JSON object")
    chart = _require(data, "chart", "$", dict)
    n = _require(chart, "dim", "chart", int)
    if n < 0:
        raise SpecError("chart.dim", "dimension must be nonnegative")
    names = chart.get("variables", default_names(n))
    if not isinstance(names, list) or len(names) != n \
            or not all(isinstance(s, str) for s in names):
        raise SpecError("chart.variables", f"expected {n} variable names")

    alg = _require(data, "algebroid", "$", dict)
    r = _require(alg, "rank", "algebroid", int)
    structure = {}
    for key, text in alg.get("structure", {}).items():
        kpath = f"algebroid.structure.{key}"
        i, j, k = _ints(kpath, key, 3)
        if not (1 <= i < j <= r and 1 <= k <= r):
            raise SpecError(kpath, f"index out of range (need 1 <= i < j <= {r})")
        structure[(i, j, k)] = _poly(kpath, text, n, names)
    anchor = {}
    for key, text in alg.get("anchor", {}).items():
        kpath = f"algebroid.anchor.{key}"
        i, a = _ints(kpath, key, 2)
        if not (1 <= i <= r and 1 <= a <= n):
            raise SpecError(kpath, "index out of range")
        anchor[(i, a)] = _poly(kpath, text, n, names)
    try:
        A = AlgebroidPresentation(n, r, structure, anchor)
    except StructureError as exc:
        raise SpecError("algebroid", str(exc))

    ideal_indices = None
    if "ideal" in data:
        indices = _require(data["ideal"], "indices", "ideal", list)
        if not all(isinstance(i, int) and 1 <= i <= r for i in indices):
            raise SpecError("ideal.indices", f"indices must be integers in 1..{r}")
        ideal_indices = tuple(indices)

    conn = None
    if "connection" in data:
        conn = connection_from_dict(data["connection"], n, names, "connection")

    im_cochain = None
    if "im_connection" in data:
        if ideal_indices is None:
            raise SpecError("im_connection", "an IM connection needs an ideal")
        cdata = _require(data["im_connection"], "cochain", "im_connection", dict)
        im_cochain = cochain_from_dict(cdata, A, names, "im_connection.cochain")

    cochains = []
    if "cochains" in data:
        if not isinstance(data["cochains"], list):
            raise SpecError("cochains", "expected a list")
        for t, cdata in enumerate(data["cochains"]):
            cochains.append(cochain_from_dict(cdata, A, names, f"cochains[{t}]"))

    curving = None
    if "curving" in data:
        fdata = _require(data["curving"], "form", "curving", dict)
        curving = vform_from_dict(fdata, n, names, "curving.form")

    return Spec(names, A, ideal_indices, conn, im_cochain, cochains, curving)


def load_spec_path(path):
    try:
        with open(path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
    except OSError as exc:
        raise SpecError(str(path), f"cannot read file: {exc}")
    except json.JSONDecodeError as exc:
        raise SpecError(str(path), f"invalid JSON: {exc}")
    return load_spec(data)


def dumps_canonical(doc):
    """Canonical spec-file bytes: sorted keys, two-space indent, newline EOF."""
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"
