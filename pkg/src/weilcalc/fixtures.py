"""Canonical example builders and seeded random generators.

The named fixtures are produced by the coupling construction, so they are
consistent by construction and exercise it at the same time:

  F0_so3          so(3) over a point (all positive-degree forms vanish)
  F1_abelian_2d   Q^2, TM (+) rank-1 abelian ideal, curving x dx^dy
  F2_semisimple_2d Q^2, TM (+) so(3), nabla = d + x ad(e3) dy, curving -e3 dx^dy
  F3_foliation_4d Q^4, rank-1 foliation (+) rank-1 abelian ideal,
                  curving x2 dx3^dx4 with nonzero 3-form curvature
"""

import random
from fractions import Fraction

from .algebroid import AlgebroidPresentation, Section, VForm
from .connections import LinearConnection
from .errors import StructureError
from .ideals import IdealBundle, IMConnection, build_coupled, frame_splitting
from .polyring import Poly
from .weil import WeilCochain, increasing_tuples, monomials_upto, sorted_multisets

FIXTURE_NAMES = ("F0_so3", "F1_abelian_2d", "F2_semisimple_2d", "F3_foliation_4d")

_SO3 = {(1, 2, 3): 1, (2, 3, 1): 1, (1, 3, 2): -1}


class Fixture:
    """Validated object graph for one named example."""

    def __init__(self, name, A, ideal, imc, curving, vsecs):
        self.name = name
        self.A = A
        self.ideal = ideal
        self.imc = imc
        self.curving = curving
        self.vsecs = vsecs

    @property
    def rep(self):
        return self.ideal.adjoint_rep()

    @property
    def conn(self):
        return self.imc.coupling_connection()


def _so3_fibre(nvars):
    return {key: Poly.const(nvars, val) for key, val in _SO3.items()}


def build_fixture(name):
    if name == "F0_so3":
        A = AlgebroidPresentation(0, 3, _so3_fibre(0), {})
        ideal = IdealBundle(A, (1, 2, 3))
        t1 = {((), (j,)): VForm(0, 3, 0, {(j, ()): Poly.const(0, 1)})
              for j in range(1, 4)}
        imc = IMConnection(ideal, WeilCochain(A, 3, 1, 1, {1: t1}))
        return Fixture(name, A, ideal, imc, VForm.zero(0, 3, 2), frame_splitting(ideal))

    if name == "F1_abelian_2d":
        B = _tangent_presentation(2)
        conn = LinearConnection.trivial(2, 1)
        F = VForm(2, 1, 2, {(1, (1, 2)): Poly.var(2, 0)})
        A, ideal, imc, curving = build_coupled(B, 1, {}, conn, F)
        return Fixture(name, A, ideal, imc, curving, frame_splitting(ideal))

    if name == "F2_semisimple_2d":
        B = _tangent_presentation(2)
        x = Poly.var(2, 0)
        conn = LinearConnection(2, 3, {(2, 2, 1): x, (2, 1, 2): -x})
        F = VForm(2, 3, 2, {(3, (1, 2)): Poly.const(2, -1)})
        A, ideal, imc, curving = build_coupled(B, 3, _so3_fibre(2), conn, F)
        return Fixture(name, A, ideal, imc, curving, frame_splitting(ideal))

    if name == "F3_foliation_4d":
        B = AlgebroidPresentation(4, 1, {}, {(1, 1): Poly.const(4, 1)})
        conn = LinearConnection.trivial(4, 1)
        F = VForm(4, 1, 2, {(1, (3, 4)): Poly.var(4, 1)})
        A, ideal, imc, curving = build_coupled(B, 1, {}, conn, F)
        return Fixture(name, A, ideal, imc, curving, frame_splitting(ideal))

    raise ValueError(f"unknown fixture {name!r}; choose from {FIXTURE_NAMES}")


def _tangent_presentation(n):
    """TM over Q^n: coordinate frame, zero structure, identity anchor."""
    return AlgebroidPresentation(n, n, {}, {(i, i): Poly.const(n, 1)
                                            for i in range(1, n + 1)})


# -- randomized inputs ---------------------------------------------------------


def random_poly(rng, nvars, bound):
    terms = {}
    for exps in monomials_upto(nvars, bound):
        num = rng.randint(-3, 3)
        if num == 0:
            continue
        if rng.random() < 0.5:
            continue
        terms[exps] = (num, rng.randint(1, 2))
    p = Poly.zero(nvars)
    for exps, (num, den) in terms.items():
        p = p + Poly.monomial(nvars, exps, Fraction(num, den))
    return p


def random_vform(rng, nvars, rank, degree, bound):
    comps = {}
    for b in range(1, rank + 1):
        for idx in increasing_tuples(nvars, degree):
            p = random_poly(rng, nvars, bound)
            if not p.is_zero:
                comps[(b, idx)] = p
    return VForm(nvars, rank, degree, comps)


def random_section(A, seed, bound=1):
    rng = random.Random(f"section:{seed}")
    return Section(A.nvars, [random_poly(rng, A.nvars, bound)
                             for _ in range(A.rank)])


def random_cochain(A, rep, p, q, degree_bound=1, seed=0):
    """Deterministic random cochain; a plain form when p = 0.

    Every stored component table is filled with small random rational
    coefficients up to the polynomial degree bound.
    """
    if p < 0 or q < 0:
        raise StructureError("cochain bidegree must be nonnegative")
    rng = random.Random(f"cochain:{p}:{q}:{degree_bound}:{seed}")
    if p == 0:
        return random_vform(rng, A.nvars, rep.rank, q, degree_bound)
    tables = {}
    for k in range(0, min(p, q) + 1):
        qk = q - k
        if qk > A.nvars:
            continue
        tbl = {}
        for I in increasing_tuples(A.rank, p - k):
            for J in sorted_multisets(A.rank, k):
                vf = random_vform(rng, A.nvars, rep.rank, qk, degree_bound)
                if not vf.is_zero:
                    tbl[(I, J)] = vf
        if tbl:
            tables[k] = tbl
    return WeilCochain(A, rep.rank, p, q, tables)


def random_ideal_oneform(fix, seed, bound=1):
    """Random ideal-valued 1-form on a fixture's chart (for deformations)."""
    rng = random.Random(f"gamma:{fix.name}:{seed}")
    return random_vform(rng, fix.A.nvars, fix.ideal.m, 1, bound)


def random_symform(fix, arity, degree, seed, bound=1):
    """Random ideal-valued form with open symmetric slots (pairing tests)."""
    from .connections import SymForm
    rng = random.Random(f"symform:{fix.name}:{arity}:{degree}:{seed}")
    A = fix.A
    table = {}
    for J in sorted_multisets(A.rank, arity):
        vf = random_vform(rng, A.nvars, fix.ideal.m, degree, bound)
        if not vf.is_zero:
            table[J] = vf
    out = SymForm.zero(A.nvars, fix.ideal.m, A.rank, arity, degree)
    out.table = table
    return out


def random_endform(fix, degree, seed, bound=1):
    """Random End-valued form on a fixture's ideal bundle."""
    from .connections import EndForm
    rng = random.Random(f"endform:{fix.name}:{degree}:{seed}")
    n, m = fix.A.nvars, fix.ideal.m
    comps = {}
    for b in range(1, m + 1):
        for c in range(1, m + 1):
            for idx in increasing_tuples(n, degree):
                p = random_poly(rng, n, bound)
                if not p.is_zero:
                    comps[(b, c, idx)] = p
    return EndForm(n, m, degree, comps)
