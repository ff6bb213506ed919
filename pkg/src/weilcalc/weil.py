"""The Weil complex W^{p,q}(A;V) over a trivialized algebroid.

A cochain is stored by its value tables on frame tuples: for each
correction index k, a dict from (I, J) to a degree-(q-k) bundle-valued
form, where I is a strictly increasing tuple of p-k frame indices
(antisymmetric slots) and J a sorted multiset of k frame indices
(symmetric slots). Evaluation on arbitrary sections expands the
antisymmetric arguments through the Leibniz identity

    c_k(f a_1, a_2, ... || .) = f c_k(a_1, ... || .)
                                + df ^ c_{k+1}(a_2, ... || a_1, .)

and is C^infty-multilinear in the symmetric arguments. Any table
respecting the symmetry constraints is accepted; evaluation-order
consistency is a tested property, not a constructor precondition.
"""

import itertools
from fractions import Fraction

from . import _linsolve
from .algebroid import VForm, d_scalar, scalar_wedge, sort_sign
from .connections import SymForm, lieA_derivative, lieA_vform
from .errors import ContractError, StructureError
from .polyring import Poly
from .report import CheckReport


def increasing_tuples(r, length):
    return itertools.combinations(range(1, r + 1), length)


def sorted_multisets(r, length):
    return itertools.combinations_with_replacement(range(1, r + 1), length)


def monomials_upto(nvars, bound):
    if nvars == 0:
        return [()]
    out = []
    for exps in itertools.product(range(bound + 1), repeat=nvars):
        if sum(exps) <= bound:
            out.append(exps)
    return sorted(out)


class WeilCochain:
    """Element of W^{p,q}(A;V) with a rank-``rank`` value bundle."""

    __slots__ = ("A", "rank", "p", "q", "tables")

    def __init__(self, A, rank, p, q, tables=None):
        self.A = A
        self.rank = rank
        self.p = p
        self.q = q
        clean = {}
        for k, tbl in (tables or {}).items():
            if not 0 <= k <= min(p, q):
                raise StructureError(f"correction index {k} out of range for W^{p},{q}")
            if q - k > A.nvars:
                # degree q-k forms on the chart vanish identically
                continue
            row = {}
            for (I, J), vf in tbl.items():
                I, J = tuple(I), tuple(J)
                if len(I) != p - k or any(not 1 <= i <= A.rank for i in I) \
                        or any(I[t] >= I[t + 1] for t in range(len(I) - 1)):
                    raise StructureError(f"bad antisymmetric index tuple {I}")
                if len(J) != k or any(not 1 <= j <= A.rank for j in J) \
                        or tuple(sorted(J)) != J:
                    raise StructureError(f"bad symmetric index tuple {J}")
                if vf.degree != q - k or vf.rank != self.rank or vf.nvars != A.nvars:
                    raise StructureError("table entry has wrong shape")
                if not vf.is_zero:
                    row[(I, J)] = vf
            if row:
                clean[k] = row
        self.tables = clean

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls, A, rank, p, q):
        return cls(A, rank, p, q)

    @classmethod
    def from_vform(cls, A, vf):
        """A plain form as a level-0 cochain."""
        return cls(A, vf.rank, 0, vf.degree, {0: {((), ()): vf}})

    def as_vform(self):
        if self.p != 0:
            raise StructureError("only level-0 cochains are plain forms")
        return self.lookup(0, (), ())

    # -- access --------------------------------------------------------------

    def lookup(self, k, I, J):
        """Signed table access; I in any order, J any order. Zero when absent."""
        qk = self.q - k
        if k < 0 or k > self.p or qk < 0 or qk > self.A.nvars:
            return VForm.zero(self.A.nvars, self.rank, max(qk, 0))
        srt, sign = sort_sign(I)
        if sign == 0:
            return VForm.zero(self.A.nvars, self.rank, qk)
        vf = self.tables.get(k, {}).get((srt, tuple(sorted(J))))
        if vf is None:
            return VForm.zero(self.A.nvars, self.rank, qk)
        return vf if sign > 0 else -vf

    def symrow(self, k, I):
        """The map J -> c_k(e_I || e_J) as a symmetric-slot form."""
        qk = self.q - k
        table = {}
        if 0 <= k <= self.p and 0 <= qk <= self.A.nvars:
            for (II, J), vf in self.tables.get(k, {}).items():
                if II == I:
                    table[J] = vf
        return SymForm(self.A.nvars, self.rank, self.A.rank, k, max(qk, 0), table)

    # -- linear structure -----------------------------------------------------

    def _like(self, other):
        if (self.p, self.q, self.rank) != (other.p, other.q, other.rank) \
                or self.A is not other.A and self.A != other.A:
            raise StructureError("cochain shape mismatch")

    def __add__(self, other):
        self._like(other)
        out = {k: dict(tbl) for k, tbl in self.tables.items()}
        for k, tbl in other.tables.items():
            row = out.setdefault(k, {})
            for key, vf in tbl.items():
                cur = row.get(key)
                s = vf if cur is None else cur + vf
                if s.is_zero:
                    row.pop(key, None)
                else:
                    row[key] = s
        return WeilCochain(self.A, self.rank, self.p, self.q, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return self.scaled(-1)

    def scaled(self, c):
        return WeilCochain(self.A, self.rank, self.p, self.q,
                           {k: {key: vf.scaled(c) for key, vf in tbl.items()}
                            for k, tbl in self.tables.items()})

    @property
    def is_zero(self):
        return not self.tables

    def __eq__(self, other):
        return (isinstance(other, WeilCochain)
                and (self.p, self.q, self.rank) == (other.p, other.q, other.rank)
                and self.tables == other.tables)

    def __repr__(self):
        sizes = {k: len(tbl) for k, tbl in self.tables.items()}
        return f"WeilCochain(p={self.p}, q={self.q}, m={self.rank}, tables={sizes})"


def evaluate(c, antis, syms=()):
    """Evaluate a cochain on sections: antisymmetric args first, symmetric second.

    The arity pair (len(antis), len(syms)) must match a correction level:
    len(antis) = p - k and len(syms) = k.
    """
    k0 = len(syms)
    if len(antis) != c.p - k0:
        raise StructureError(
            f"arity mismatch: got {len(antis)} antisymmetric and {k0} symmetric "
            f"arguments for a level-{c.p} cochain")
    n, r = c.A.nvars, c.A.rank
    qk = c.q - k0
    out = VForm.zero(n, c.rank, max(qk, 0))
    if qk < 0 or qk > n:
        return out
    for jvec in itertools.product(range(1, r + 1), repeat=k0):
        coeff = Poly.const(n, 1)
        dead = False
        for t, j in enumerate(jvec):
            cj = syms[t].comps[j - 1]
            if cj.is_zero:
                dead = True
                break
            coeff = coeff * cj
        if dead:
            continue
        term = _eval_basis(c, k0, (), list(antis), tuple(sorted(jvec)))
        if not term.is_zero:
            out = out + term.scaled(coeff)
    return out


def _eval_basis(c, k, prefix, rest, J):
    """Leibniz expansion with a basis prefix and general remaining sections."""
    if not rest:
        return c.lookup(k, prefix, J)
    n, r = c.A.nvars, c.A.rank
    alpha = rest[0]
    tail = rest[1:]
    pos = len(prefix)
    out = VForm.zero(n, c.rank, max(c.q - k, 0))
    for i in range(1, r + 1):
        ai = alpha.comps[i - 1]
        if not ai.is_zero:
            sub = _eval_basis(c, k, prefix + (i,), tail, J)
            if not sub.is_zero:
                out = out + sub.scaled(ai)
        dai = d_scalar(ai, n)
        if not dai.is_zero:
            sub = _eval_basis(c, k + 1, prefix, tail, tuple(sorted(J + (i,))))
            if not sub.is_zero:
                w = scalar_wedge(dai, sub)
                out = out + (w if pos % 2 == 0 else -w)
    return out


def eval_row(c, k, sections):
    """Partial evaluation c_k(sections || .) as a symmetric-slot form."""
    if len(sections) != c.p - k:
        raise StructureError("wrong number of antisymmetric arguments")
    n, r = c.A.nvars, c.A.rank
    qk = c.q - k
    out = SymForm.zero(n, c.rank, r, k, max(qk, 0))
    if qk < 0 or qk > n:
        return out
    table = {}
    for J in sorted_multisets(r, k):
        vf = _eval_basis(c, k, (), list(sections), J)
        if not vf.is_zero:
            table[J] = vf
    out.table = table
    return out


def delta(A, rep, c):
    """The simplicial differential, level p -> p+1.

    Leading term is the Koszul differential for the Lie derivative induced
    by the representation; correction terms add bracket insertions in the
    symmetric slots and interior products along the anchor.
    """
    if isinstance(c, VForm):
        c = WeilCochain.from_vform(A, c)
    if rep.rank != c.rank or rep.secrank != A.rank:
        raise StructureError("representation does not match cochain")
    p, q, n, r = c.p, c.q, A.nvars, A.rank
    out = {}
    for k in range(0, min(p + 1, q) + 1):
        qk = q - k
        if qk < 0 or qk > n:
            continue
        tbl = {}
        for I in increasing_tuples(r, p + 1 - k):
            lds = []
            for pos in range(len(I)):
                row = c.symrow(k, I[:pos] + I[pos + 1:])
                if row.is_zero:
                    lds.append(None)
                else:
                    lds.append(lieA_derivative(A, rep, A.basis(I[pos]), row))
            brs = []
            for s, t in itertools.combinations(range(len(I)), 2):
                w = A.bracket_basis(I[s], I[t])
                if not w.is_zero:
                    rest = [A.basis(I[u]) for u in range(len(I)) if u not in (s, t)]
                    brs.append((s + t, w, rest))
            for J in sorted_multisets(r, k):
                acc = VForm.zero(n, c.rank, qk)
                for pos in range(len(I)):
                    ld = lds[pos]
                    if ld is None:
                        continue
                    term = ld.get(J)
                    if term.is_zero:
                        continue
                    acc = acc + term if pos % 2 == 0 else acc - term
                for sgn, w, rest in brs:
                    term = _eval_basis(c, k, (), [w] + rest, J)
                    if term.is_zero:
                        continue
                    acc = acc + term if sgn % 2 == 0 else acc - term
                for t in range(len(J)):
                    if t > 0 and J[t] == J[t - 1]:
                        continue
                    mult = J.count(J[t])
                    sub = c.lookup(k - 1, I, J[:t] + J[t + 1:])
                    if sub.is_zero:
                        continue
                    term = sub.iota(A.rho_basis(J[t]))
                    if term.is_zero:
                        continue
                    acc = acc - term.scaled(mult)
                if not acc.is_zero:
                    if k % 2 == 1:
                        acc = -acc
                    tbl[(I, J)] = acc
        if tbl:
            out[k] = tbl
    return WeilCochain(A, c.rank, p + 1, q, out)


def dnabla_cochain(conn, c):
    """Exterior covariant derivative of Weil cochains, degree q -> q+1.

    (d c)_0 = d-nabla of the leading term; the corrections are
    (-1)^k (d c)_k = d-nabla c_k - sum_i c_{k-1}(b_i, . || b's minus b_i).
    """
    if isinstance(c, VForm):
        raise StructureError("wrap plain forms with WeilCochain.from_vform first")
    if conn.rank != c.rank or conn.nvars != c.A.nvars:
        raise StructureError("connection does not match cochain bundle")
    A = c.A
    p, q, n, r = c.p, c.q, A.nvars, A.rank
    out = {}
    for k in range(0, min(p, q + 1) + 1):
        qk = q + 1 - k
        if qk > n:
            continue
        tbl = {}
        for I in increasing_tuples(r, p - k):
            for J in sorted_multisets(r, k):
                src = c.lookup(k, I, J)
                acc = conn.dnabla(src) if not src.is_zero \
                    else VForm.zero(n, c.rank, qk)
                for t in range(len(J)):
                    if t > 0 and J[t] == J[t - 1]:
                        continue
                    mult = J.count(J[t])
                    sub = c.lookup(k - 1, (J[t],) + I, J[:t] + J[t + 1:])
                    if sub.is_zero:
                        continue
                    acc = acc - sub.scaled(mult)
                if not acc.is_zero:
                    if k % 2 == 1:
                        acc = -acc
                    tbl[(I, J)] = acc
        if tbl:
            out[k] = tbl
    return WeilCochain(A, c.rank, p, q + 1, out)


def wedge_Ttheta(inv, c):
    """The operator (T,theta) ^ c, raising level and degree by one.

    ((T,theta)^c)_k = sum_i (-1)^i T(a_i) ^ c_k(a's minus a_i || b's)
                      + sum_j theta(b_j) . c_{k-1}(a's || b's minus b_j).
    """
    A = c.A
    if inv.rank != c.rank:
        raise StructureError("invariance form acts on a different bundle")
    p, q, n, r = c.p, c.q, A.nvars, A.rank
    out = {}
    for k in range(0, min(p + 1, q + 1) + 1):
        qk = q + 1 - k
        if qk > n or qk < 0:
            continue
        tbl = {}
        for I in increasing_tuples(r, p + 1 - k):
            for J in sorted_multisets(r, k):
                acc = VForm.zero(n, c.rank, qk)
                for pos in range(len(I)):
                    sub = c.lookup(k, I[:pos] + I[pos + 1:], J)
                    if sub.is_zero:
                        continue
                    term = inv.T[I[pos]].wedge_vform(sub)
                    if term.is_zero:
                        continue
                    acc = acc + term if pos % 2 == 0 else acc - term
                for t in range(len(J)):
                    if t > 0 and J[t] == J[t - 1]:
                        continue
                    mult = J.count(J[t])
                    sub = c.lookup(k - 1, I, J[:t] + J[t + 1:])
                    if sub.is_zero:
                        continue
                    term = inv.theta[J[t]].act_vform(sub)
                    if term.is_zero:
                        continue
                    acc = acc + term.scaled(mult)
                if not acc.is_zero:
                    tbl[(I, J)] = acc
        if tbl:
            out[k] = tbl
    return WeilCochain(A, c.rank, p + 1, q + 1, out)


def cochain_from_invariance(A, inv):
    """(T, theta) as a W^{1,1} cochain valued in the flattened End bundle."""
    m2 = inv.rank * inv.rank
    t0, t1 = {}, {}
    for i, ef in inv.T.items():
        if not ef.is_zero:
            t0[((i,), ())] = ef.to_flat()
    for j, ef in inv.theta.items():
        if not ef.is_zero:
            t1[((), (j,))] = ef.to_flat()
    return WeilCochain(A, m2, 1, 1, {0: t0, 1: t1})


def check_IM(A, rep, c):
    """Exact pass/fail of the compatibility conditions (C.1)-(C.3) on basis pairs."""
    if c.p != 1:
        raise StructureError("IM check applies to level-1 cochains")
    report = CheckReport("IM compatibility conditions")
    r = A.rank

    def c0(i):
        return c.lookup(0, (i,), ())

    def c1(j):
        return c.lookup(1, (), (j,))

    for i, j in itertools.combinations(range(1, r + 1), 2):
        w = A.bracket_basis(i, j)
        lhs = evaluate(c, [w])
        rhs = lieA_vform(A, rep, A.basis(i), c0(j)) \
            - lieA_vform(A, rep, A.basis(j), c0(i))
        report.record(f"C.1({i},{j})", lhs == rhs,
                      "" if lhs == rhs else "c0[e_i,e_j] != L_i c0(e_j) - L_j c0(e_i)")
    symrow = c.symrow(1, ())
    for i in range(1, r + 1):
        for j in range(1, r + 1):
            w = A.bracket_basis(i, j)
            lhs = symrow.insert(w).vform()
            rhs = lieA_vform(A, rep, A.basis(i), c1(j)) \
                - c0(i).iota(A.rho_basis(j))
            report.record(f"C.2({i},{j})", lhs == rhs,
                          "" if lhs == rhs else "c1[e_i,e_j] != L_i(c1 e_j) - i_rho(e_j) c0(e_i)")
    for i, j in itertools.combinations_with_replacement(range(1, r + 1), 2):
        s = c1(j).iota(A.rho_basis(i)) + c1(i).iota(A.rho_basis(j))
        report.record(f"C.3({i},{j})", s.is_zero,
                      "" if s.is_zero else "symbol is not anchor-antisymmetric")
    return report


def is_horizontal(c, ideal):
    """Correction terms vanish whenever a symmetric slot carries an ideal index."""
    forbidden = set(ideal.indices)
    for k, tbl in c.tables.items():
        if k == 0:
            continue
        for (_, J) in tbl:
            if forbidden.intersection(J):
                return False
    return True


# -- bounded-degree linear solving -------------------------------------------


def _flatten(c):
    flat = {}
    for k, tbl in c.tables.items():
        for (I, J), vf in tbl.items():
            for (b, idx), poly in vf.comps.items():
                for exps, (num, den) in poly.terms.items():
                    flat[(k, I, J, b, idx, exps)] = Fraction(num, den)
    return flat


def _unknown_cells(A, rank, p, q, degree_bound, horizontal_ideal=None):
    cells = []
    n, r = A.nvars, A.rank
    forbidden = set(horizontal_ideal.indices) if horizontal_ideal is not None else set()
    for k in range(0, min(p, q) + 1):
        qk = q - k
        if qk < 0 or qk > n:
            continue
        for I in increasing_tuples(r, p - k):
            for J in sorted_multisets(r, k):
                if k > 0 and forbidden.intersection(J):
                    continue
                for b in range(1, rank + 1):
                    for idx in itertools.combinations(range(1, n + 1), qk):
                        for exps in monomials_upto(n, degree_bound):
                            cells.append((k, I, J, b, idx, exps))
    return cells


def _cell_cochain(A, rank, p, q, cell):
    k, I, J, b, idx, exps = cell
    vf = VForm(A.nvars, rank, q - k, {(b, idx): Poly.monomial(A.nvars, exps, 1)})
    return WeilCochain(A, rank, p, q, {k: {(I, J): vf}})


def _assemble(A, rank, p, q, cells, coeffs):
    out = WeilCochain.zero(A, rank, p, q)
    for cell, x in zip(cells, coeffs):
        if x:
            out = out + _cell_cochain(A, rank, p, q, cell).scaled(x)
    return out


def solve_coboundary(A, rep, target, degree_bound, horizontal_ideal=None):
    """Find b with delta b = target and coefficient degree <= degree_bound.

    The target must be an exact delta-cocycle. Returns None when the
    bounded-degree system is infeasible; the verdict is relative to the
    bound. With ``horizontal_ideal`` the unknown is constrained to the
    horizontal subcomplex.
    """
    if not delta(A, rep, target).is_zero:
        raise ContractError("solve_coboundary target is not a delta-cocycle")
    if target.p == 0:
        raise ContractError("no level below a level-0 cochain")
    p, q = target.p - 1, target.q
    cells = _unknown_cells(A, target.rank, p, q, degree_bound, horizontal_ideal)
    columns = [_flatten(delta(A, rep, _cell_cochain(A, target.rank, p, q, cell)))
               for cell in cells]
    x = _linsolve.solve_sparse(columns, _flatten(target))
    if x is None:
        return None
    out = _assemble(A, target.rank, p, q, cells, x)
    assert delta(A, rep, out) == target
    return out


def bounded_kernel(A, rep, p, q, degree_bound, horizontal_ideal=None):
    """Basis of delta-cocycles at level p with coefficient degree <= bound."""
    rank = rep.rank
    cells = _unknown_cells(A, rank, p, q, degree_bound, horizontal_ideal)
    columns = [_flatten(delta(A, rep, _cell_cochain(A, rank, p, q, cell)))
               for cell in cells]
    basis = _linsolve.nullspace_sparse(columns)
    return [_assemble(A, rank, p, q, cells, x) for x in basis]
