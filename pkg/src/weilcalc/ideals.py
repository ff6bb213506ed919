"""Bundles of ideals, IM connections, and the horizontal calculus.

The ideal is frame-aligned: it is spanned by a designated subset of the
algebroid frame, so the symbol v, the horizontal projection h, and all
restriction operators act at index level. The adjoint action
nabla^A_a xi = [a, xi] is generated from the structure polynomials.
"""

import itertools
from fractions import Fraction

from . import _linsolve
from .algebroid import Section, VForm, bracket, sort_sign
from .connections import (ARep, EndForm, LinearConnection, SymForm,
                          is_A_invariant)
from .errors import ContractError, StructureError
from .polyring import Poly
from .report import CheckReport
from .weil import (WeilCochain, check_IM, delta, dnabla_cochain, evaluate,
                   is_horizontal)


class IdealBundle:
    """Constant subbundle of ker rho spanned by part of the frame and closed
    under bracket with every section."""

    __slots__ = ("A", "indices", "m", "_pos", "_adjoint")

    def __init__(self, A, indices):
        self.A = A
        self.indices = tuple(sorted(indices))
        if len(set(self.indices)) != len(self.indices) \
                or any(not 1 <= k <= A.rank for k in self.indices):
            raise StructureError(f"bad ideal index set {indices}")
        self.m = len(self.indices)
        self._pos = {k: a for a, k in enumerate(self.indices, start=1)}
        for k in self.indices:
            for a in range(1, A.nvars + 1):
                if (k, a) in A.anchor:
                    raise StructureError(f"anchor does not vanish on ideal index {k}")
        inside = set(self.indices)
        for i in range(1, A.rank + 1):
            for k in self.indices:
                w = A.bracket_basis(i, k)
                for l, comp in enumerate(w.comps, start=1):
                    if l not in inside and not comp.is_zero:
                        raise StructureError(
                            f"[e_{i}, e_{k}] leaves the ideal (component {l})")
        self._adjoint = None

    def embed(self, comps):
        """Ideal components (length m) as a full algebroid section."""
        full = [Poly.zero(self.A.nvars) for _ in range(self.A.rank)]
        for a, p in enumerate(comps):
            full[self.indices[a] - 1] = p
        return Section(self.A.nvars, full)

    def restrict(self, section):
        """Ideal components of a section known to lie in the ideal."""
        for l, comp in enumerate(section.comps, start=1):
            if l not in self._pos and not comp.is_zero:
                raise StructureError("section does not lie in the ideal")
        return tuple(section.comps[k - 1] for k in self.indices)

    def fibre_bracket(self, a, b):
        """[u_a, u_b] in ideal components."""
        w = self.A.bracket_basis(self.indices[a - 1], self.indices[b - 1])
        return tuple(w.comps[k - 1] for k in self.indices)

    @property
    def is_abelian(self):
        return all(all(p.is_zero for p in self.fibre_bracket(a, b))
                   for a, b in itertools.combinations(range(1, self.m + 1), 2))

    def adjoint_rep(self):
        """The representation nabla^A_alpha xi = [alpha, xi] in coefficient form."""
        if self._adjoint is None:
            psi = {}
            for i in range(1, self.A.rank + 1):
                for a, k in enumerate(self.indices, start=1):
                    w = self.A.bracket_basis(i, k)
                    for b, l in enumerate(self.indices, start=1):
                        p = w.comps[l - 1]
                        if not p.is_zero:
                            psi[(i, b, a)] = p
            self._adjoint = ARep(self.A.nvars, self.A.rank, self.m, psi)
        return self._adjoint

    def ad_endform(self, vf):
        """ad(F) for an ideal-valued form F, as an End-valued form."""
        acc = {}
        for (c, idx), p in vf.comps.items():
            fab = [self.fibre_bracket(c, d) for d in range(1, self.m + 1)]
            for d in range(1, self.m + 1):
                for b in range(self.m):
                    coeff = fab[d - 1][b]
                    if coeff.is_zero:
                        continue
                    key = (b + 1, d, idx)
                    s = acc.get(key, Poly.zero(self.A.nvars)) + p * coeff
                    if s.is_zero:
                        acc.pop(key, None)
                    else:
                        acc[key] = s
        return EndForm(self.A.nvars, self.m, vf.degree, acc)


def bracket_of_forms(ideal, w1, w2):
    """Fibre-bracket-induced bracket of ideal-valued forms."""
    n = ideal.A.nvars
    deg = w1.degree + w2.degree
    acc = {}
    for (a, S), p in w1.comps.items():
        for (b, T), q in w2.comps.items():
            srt, sign = sort_sign(S + T)
            if sign == 0:
                continue
            fab = ideal.fibre_bracket(a, b)
            for c in range(ideal.m):
                if fab[c].is_zero:
                    continue
                coeff = p * q * fab[c]
                if sign < 0:
                    coeff = -coeff
                key = (c + 1, srt)
                s = acc.get(key, Poly.zero(n)) + coeff
                if s.is_zero:
                    acc.pop(key, None)
                else:
                    acc[key] = s
    return VForm(n, ideal.m, deg, acc)


class IMConnection:
    """IM connection (C, v): a W^{1,1} ideal-valued cochain whose symbol
    restricts to the identity on the ideal."""

    __slots__ = ("ideal", "cochain", "_conn", "_hsec", "_report")

    def __init__(self, ideal, cochain, validate=True):
        A = ideal.A
        if cochain.p != 1 or cochain.q != 1 or cochain.rank != ideal.m:
            raise StructureError("IM connection needs an ideal-valued W^{1,1} cochain")
        self.ideal = ideal
        self.cochain = cochain
        self._conn = None
        self._hsec = {}
        self._report = None
        for a, k in enumerate(ideal.indices, start=1):
            vk = cochain.lookup(1, (), (k,))
            unit = VForm(A.nvars, ideal.m, 0,
                         {(a, ()): Poly.const(A.nvars, 1)})
            if vk != unit:
                raise ContractError(f"symbol does not restrict to the identity at e_{k}")
        if validate:
            rep = check_IM(A, ideal.adjoint_rep(), cochain)
            self._report = rep
            if not rep.passed:
                raise ContractError(
                    "cochain is not infinitesimally multiplicative: "
                    + "; ".join(label for label, _ in rep.failures[:3]))

    @property
    def A(self):
        return self.ideal.A

    def C0(self, i):
        """C(e_i) as an ideal-valued 1-form."""
        return self.cochain.lookup(0, (i,), ())

    def v_comps(self, j):
        """v(e_j) in ideal components."""
        vf = self.cochain.lookup(1, (), (j,))
        return tuple(vf.get(a, ()) for a in range(1, self.ideal.m + 1))

    def v_section(self, alpha):
        """v(alpha) in ideal components (tensorial)."""
        out = [Poly.zero(self.A.nvars) for _ in range(self.ideal.m)]
        for j, aj in enumerate(alpha.comps, start=1):
            if aj.is_zero:
                continue
            for a, p in enumerate(self.v_comps(j)):
                if not p.is_zero:
                    out[a] = out[a] + aj * p
        return tuple(out)

    def h_section(self, alpha):
        """Horizontal component h(alpha) = alpha - v(alpha)."""
        return alpha - self.ideal.embed(self.v_section(alpha))

    def h_basis(self, i):
        sec = self._hsec.get(i)
        if sec is None:
            sec = self.h_section(self.A.basis(i))
            self._hsec[i] = sec
        return sec

    def coupling_connection(self):
        """nabla = C restricted to the ideal, as Christoffels on the ideal frame."""
        if self._conn is None:
            table = {}
            for c, k in enumerate(self.ideal.indices, start=1):
                cf = self.C0(k)
                for (b, (a,)), p in cf.comps.items():
                    table[(a, b, c)] = p
            self._conn = LinearConnection(self.A.nvars, self.ideal.m, table)
        return self._conn

    def U_of_h(self, alpha):
        """U(h alpha) = -C(h alpha) as an ideal-valued 1-form."""
        return -evaluate(self.cochain, [self.h_section(alpha)])

    def deformed(self, L, lam=1):
        """This connection plus lam * L for a horizontal IM 1-form L."""
        return deform(self, L, lam)


def apply_to_ideal_section(c, ideal, comps):
    """Evaluate a level-1 cochain on an ideal-component section."""
    return evaluate(c, [ideal.embed(comps)])


# -- the pairing --------------------------------------------------------------


def wedgedot(gamma, theta, ideal):
    """The slot-consuming pairing of a symmetric-slot form with an
    ideal-valued form; one symmetric slot is filled by the values of theta
    and the form degrees add."""
    if gamma.arity < 1:
        raise StructureError("no symmetric slot left for the pairing")
    if theta.rank != ideal.m:
        raise StructureError("pairing expects an ideal-valued form")
    n = gamma.nvars
    deg = gamma.degree + theta.degree
    rows = {}

    def add(j, key, p):
        tbl = rows.setdefault(j, {})
        s = tbl.get(key, Poly.zero(n)) + p
        if s.is_zero:
            tbl.pop(key, None)
        else:
            tbl[key] = s

    for (tb, S), tp in theta.comps.items():
        sec_idx = ideal.indices[tb - 1]
        for j, vf in gamma.table.items():
            for t in range(len(j)):
                if t > 0 and j[t] == j[t - 1]:
                    continue
                if j[t] != sec_idx:
                    continue
                rest = j[:t] + j[t + 1:]
                for (b, Aidx), gp in vf.comps.items():
                    srt, sign = sort_sign(S + Aidx)
                    if sign == 0:
                        continue
                    q = tp * gp if sign > 0 else -(tp * gp)
                    add(rest, (b, srt), q)
    out = SymForm.zero(n, gamma.rank, gamma.secrank, gamma.arity - 1, deg)
    for j, tbl in rows.items():
        vf = VForm(n, gamma.rank, deg, tbl)
        if not vf.is_zero:
            out.table[j] = vf
    return out


def wedgedot_multi(gamma, thetas, ideal):
    """Iterated pairing, last form first: gamma . (t_1, ..., t_l)
    = gamma . t_l . t_{l-1} ... . t_1."""
    out = gamma
    for theta in reversed(thetas):
        out = wedgedot(out, theta, ideal)
    return out


# -- horizontal projection and derivative -------------------------------------


def hstar(imc, c):
    """Horizontal projection of Weil cochains.

    (h*c)_k(a_1..a_{p-k} || b_1..b_k)
      = sum_{j=k}^{p} (-1)^{j-k} sum_{(j-k, p-j)-shuffles s} sgn(s)
        c_j(a_{s(j-k+1)}, ..., a_{s(p-k)} || h b_1, ..., h b_k, .)
          paired one by one with (C a_{s(1)}, ..., C a_{s(j-k)}).

    Output corrections kill ideal-valued symmetric insertions, so the
    result is horizontal for any value bundle.
    """
    A = imc.A
    ideal = imc.ideal
    if c.A != A:
        raise StructureError("cochain lives over a different algebroid")
    p, q, n, r = c.p, c.q, A.nvars, A.rank
    cforms = {i: imc.C0(i) for i in range(1, r + 1)}
    hsecs = {j: imc.h_basis(j) for j in range(1, r + 1)}
    out = {}
    for k in range(0, min(p, q) + 1):
        qk = q - k
        if qk > n:
            continue
        tbl = {}
        for I in itertools.combinations(range(1, r + 1), p - k):
            for J in itertools.combinations_with_replacement(range(1, r + 1), k):
                acc = VForm.zero(n, c.rank, qk)
                for j_lvl in range(k, p + 1):
                    if q - j_lvl < 0 or q - j_lvl > n:
                        continue
                    npick = j_lvl - k
                    for picks in itertools.combinations(range(p - k), npick):
                        restpos = tuple(t for t in range(p - k) if t not in picks)
                        _, sgn = sort_sign(picks + restpos)
                        part1 = tuple(I[t] for t in picks)
                        part2 = tuple(I[t] for t in restpos)
                        row = c.symrow(j_lvl, part2)
                        if row.is_zero:
                            continue
                        for jb in J:
                            row = row.insert(hsecs[jb])
                            if row.is_zero:
                                break
                        if row.is_zero:
                            continue
                        paired = wedgedot_multi(row, [cforms[i] for i in part1], ideal)
                        term = paired.vform()
                        if term.is_zero:
                            continue
                        if (npick % 2 == 1 and sgn > 0) or (npick % 2 == 0 and sgn < 0):
                            term = -term
                        acc = acc + term
                if not acc.is_zero:
                    tbl[(I, J)] = acc
        if tbl:
            out[k] = tbl
    return WeilCochain(A, c.rank, p, q, out)


def Dhor(imc, c):
    """Horizontal exterior covariant derivative, h* after d-nabla of the
    coupling connection."""
    if c.rank != imc.ideal.m:
        raise StructureError("horizontal derivative acts on ideal-valued cochains")
    return hstar(imc, dnabla_cochain(imc.coupling_connection(), c))


def curvature(imc):
    """Curvature of an IM connection: the horizontal derivative of itself."""
    return Dhor(imc, imc.cochain)


def bianchi_check(imc):
    """True iff the horizontal derivative of the curvature vanishes exactly."""
    return Dhor(imc, curvature(imc)).is_zero


# -- affine deformations -------------------------------------------------------


def deform(imc, L, lam=1):
    """Deform an IM connection by lam times a horizontal IM 1-form."""
    A = imc.A
    if not isinstance(lam, (int, Fraction)):
        lam = Fraction(lam)
    if L.p != 1 or L.q != 1 or L.rank != imc.ideal.m:
        raise ContractError("deformation must be an ideal-valued W^{1,1} cochain")
    if not is_horizontal(L, imc.ideal):
        raise ContractError("deformation is not horizontal")
    if not check_IM(A, imc.ideal.adjoint_rep(), L).passed:
        raise ContractError("deformation is not an IM form")
    return IMConnection(imc.ideal, imc.cochain + L.scaled(lam))


def c2(ideal, L):
    """Second-order curvature coefficient of an affine deformation:
    c2(L, l)(a) = -(L|_ideal paired with L a, L|_ideal . l a)."""
    A = ideal.A
    n, r = A.nvars, A.rank

    def apply_L(comps):
        return apply_to_ideal_section(L, ideal, comps)

    lead = {}
    for i in range(1, r + 1):
        Li = L.lookup(0, (i,), ())
        acc = VForm.zero(n, ideal.m, 2)
        for a, bb in itertools.combinations(range(1, n + 1), 2):
            xi_a = tuple(Li.get(cc, (a,)) for cc in range(1, ideal.m + 1))
            xi_b = tuple(Li.get(cc, (bb,)) for cc in range(1, ideal.m + 1))
            val = [Poly.zero(n) for _ in range(ideal.m)]
            if any(not p.is_zero for p in xi_a):
                va = apply_L(xi_a)
                for cc in range(ideal.m):
                    val[cc] = val[cc] + va.get(cc + 1, (bb,))
            if any(not p.is_zero for p in xi_b):
                vb = apply_L(xi_b)
                for cc in range(ideal.m):
                    val[cc] = val[cc] - vb.get(cc + 1, (a,))
            comps = {(cc + 1, (a, bb)): val[cc] for cc in range(ideal.m)
                     if not val[cc].is_zero}
            if comps:
                acc = acc + VForm(n, ideal.m, 2, comps)
        if not acc.is_zero:
            lead[((i,), ())] = -acc
    symb = {}
    for j in range(1, r + 1):
        lj = L.lookup(1, (), (j,))
        comps = tuple(lj.get(a, ()) for a in range(1, ideal.m + 1))
        if all(p.is_zero for p in comps):
            continue
        term = apply_L(comps)
        if not term.is_zero:
            symb[((), (j,))] = -term
    return WeilCochain(A, ideal.m, 1, 2, {0: lead, 1: symb})


# -- obstruction cocycle -------------------------------------------------------


def splitting_cochain(A, ideal, vsecs, conn, U=None):
    """The W^{1,1} cochain (C, v) of a triple: C = nabla(v .) - U(h .).

    ``vsecs`` maps a frame index to the ideal components of v(e_j) and must
    restrict to the identity on the ideal; ``U`` maps non-ideal frame
    indices to U(h e_i) as an ideal-valued 1-form (vertical slots are not
    part of the domain of U and are rejected).
    """
    n = A.nvars
    for a, k in enumerate(ideal.indices):
        comps = vsecs[k]
        for b, p in enumerate(comps):
            want = Poly.const(n, 1 if b == a else 0)
            if p != want:
                raise ContractError(f"v is not a splitting: v(e_{k}) != e_{k}")
    U = U or {}
    for i in U:
        if i in ideal.indices:
            raise ContractError("U is only defined on the horizontal frame")
    t0, t1 = {}, {}
    for i in range(1, A.rank + 1):
        vform0 = VForm(n, ideal.m, 0,
                       {(a + 1, ()): p for a, p in enumerate(vsecs[i])
                        if not p.is_zero})
        cf = conn.dnabla(vform0)
        ui = U.get(i)
        if ui is not None:
            cf = cf - ui
        if not cf.is_zero:
            t0[((i,), ())] = cf
        if not vform0.is_zero:
            t1[((), (i,))] = vform0
    return WeilCochain(A, ideal.m, 1, 1, {0: t0, 1: t1})


def obstruction_cocycle(A, ideal, vsecs, conn, U=None):
    """delta of the splitting cochain: the obstruction to an IM connection.

    The output is a horizontal delta-cocycle in W^{2,1}; its class does not
    depend on the chosen triple (tested up to horizontal coboundary).
    """
    cv = splitting_cochain(A, ideal, vsecs, conn, U)
    return delta(A, ideal.adjoint_rep(), cv)


def frame_splitting(ideal):
    """The frame-aligned splitting v = projection onto the ideal indices."""
    A = ideal.A
    n = A.nvars
    out = {}
    for j in range(1, A.rank + 1):
        comps = [Poly.zero(n)] * ideal.m
        if j in ideal.indices:
            comps[ideal.indices.index(j)] = Poly.const(n, 1)
        out[j] = tuple(comps)
    return out


# -- coupling data -------------------------------------------------------------


def coupling_checks(imc):
    """Structure conditions S.1-S.3 plus the orbit identities of the coupling
    data, and the abelian <-> A-invariance equivalence."""
    A = imc.A
    ideal = imc.ideal
    n, r, m = A.nvars, A.rank, ideal.m
    conn = imc.coupling_connection()
    rep = ideal.adjoint_rep()
    report = CheckReport("coupling data")

    # S.1: nabla preserves the fibre bracket
    ok = True
    for a in range(1, n + 1):
        for b, cidx in itertools.combinations(range(1, m + 1), 2):
            f = ideal.fibre_bracket(b, cidx)
            for d in range(1, m + 1):
                lhs = f[d - 1].diff(a - 1)
                for e in range(1, m + 1):
                    lhs = lhs + f[e - 1] * conn.gamma(a, d, e)
                rhs = Poly.zero(n)
                for e in range(1, m + 1):
                    rhs = rhs + conn.gamma(a, e, b) * ideal.fibre_bracket(e, cidx)[d - 1]
                    rhs = rhs + conn.gamma(a, e, cidx) * ideal.fibre_bracket(b, e)[d - 1]
                if lhs != rhs:
                    ok = False
    report.record("S.1 bracket-preserving", ok)

    # S.2: iota_{rho(a)} R = [U(h a), .]
    R = conn.curvature_R()
    ok = True
    for i in range(1, r + 1):
        lhs = R.iota(A.rho_basis(i))
        ui = imc.U_of_h(A.basis(i))
        rhs = ideal.ad_endform(ui)
        if lhs != rhs:
            ok = False
    report.record("S.2 curvature vs U", ok)

    # S.3: U(h[a,b]) = L_{rho a} U(h b) - L_{rho b} U(h a) + nabla(U(h a)(rho b))
    ok = True
    for i in range(1, r + 1):
        for j in range(1, r + 1):
            if i == j:
                continue
            w = A.bracket_basis(i, j)
            lhs = imc.U_of_h(w)
            ua, ub = imc.U_of_h(A.basis(i)), imc.U_of_h(A.basis(j))
            rhs = conn.lie_nabla(A.rho_basis(i), ub) \
                - conn.lie_nabla(A.rho_basis(j), ua) \
                + conn.dnabla(ua.iota(A.rho_basis(j)))
            if lhs != rhs:
                ok = False
    report.record("S.3 U on brackets", ok)

    # nabla_{rho(a)} xi = [h(a), xi]
    ok = True
    for i in range(1, r + 1):
        rho_i = A.rho_basis(i)
        for d in range(1, m + 1):
            lhs = [Poly.zero(n) for _ in range(m)]
            for a in range(1, n + 1):
                xa = rho_i.comps[a - 1]
                if xa.is_zero:
                    continue
                for b in range(1, m + 1):
                    g = conn.gamma(a, b, d)
                    if not g.is_zero:
                        lhs[b - 1] = lhs[b - 1] + xa * g
            rhs = ideal.restrict(bracket(A, imc.h_basis(i), ideal.embed(
                tuple(Poly.const(n, 1 if t == d - 1 else 0) for t in range(m)))))
            if tuple(lhs) != tuple(rhs):
                ok = False
    report.record("orbit connection identity", ok)

    # v[h a, h b] = U(h a)(rho b)
    ok = True
    for i, j in itertools.permutations(range(1, r + 1), 2):
        lhs = imc.v_section(bracket(A, imc.h_basis(i), imc.h_basis(j)))
        rhs_form = imc.U_of_h(A.basis(i)).iota(A.rho_basis(j))
        rhs = tuple(rhs_form.get(a, ()) for a in range(1, m + 1))
        if tuple(lhs) != rhs:
            ok = False
    report.record("U along orbits", ok)

    inv = is_A_invariant(A, conn, rep)
    report.record("abelian iff A-invariant", inv == ideal.is_abelian,
                  f"is_A_invariant={inv}, abelian={ideal.is_abelian}")
    return report


# -- the coupling construction --------------------------------------------------


def _check_coupling_inputs(B, m, fibre, conn, F):
    n = B.nvars

    def fib(a, b, c):
        if a == b:
            return Poly.zero(n)
        if a < b:
            return fibre.get((a, b, c), Poly.zero(n))
        p = fibre.get((b, a, c), Poly.zero(n))
        return -p

    # (i) nabla preserves the fibre bracket
    for x in range(1, n + 1):
        for a, b in itertools.combinations(range(1, m + 1), 2):
            for d in range(1, m + 1):
                lhs = fib(a, b, d).diff(x - 1)
                for e in range(1, m + 1):
                    lhs = lhs + fib(a, b, e) * conn.gamma(x, d, e)
                rhs = Poly.zero(n)
                for e in range(1, m + 1):
                    rhs = rhs + conn.gamma(x, e, a) * fib(e, b, d)
                    rhs = rhs + conn.gamma(x, e, b) * fib(a, e, d)
                if lhs != rhs:
                    raise ContractError(
                        "coupling condition (i) fails: connection does not "
                        f"preserve the fibre bracket at (x={x}, {a},{b})")
    # (ii) R = -ad F
    R = conn.curvature_R()
    for a1, a2 in itertools.combinations(range(1, n + 1), 2):
        for bb in range(1, m + 1):
            for cc in range(1, m + 1):
                rhs = Poly.zero(n)
                for e in range(1, m + 1):
                    rhs = rhs - F.get(e, (a1, a2)) * fib(e, cc, bb)
                if R.get(bb, cc, (a1, a2)) != rhs:
                    raise ContractError(
                        "coupling condition (ii) fails: R-nabla != -ad F "
                        f"at (d_{a1}, d_{a2})")
    # (iii) iota_{rho_B} d-nabla F = 0
    dF = conn.dnabla(F)
    for i in range(1, B.rank + 1):
        if not dF.iota(B.rho_basis(i)).is_zero:
            raise ContractError(
                f"coupling condition (iii) fails: iota_rho(b_{i}) d-nabla F != 0")


def coupled_presentation(B, m, fibre, conn, F):
    """Raw presentation of B (+) ideal with the F-twisted bracket; no
    precondition checks (used to exhibit Jacobi failure on tampered input)."""
    n, rB = B.nvars, B.rank
    r = rB + m
    structure = {}
    for (i, j, k), p in B.structure.items():
        structure[(i, j, k)] = p
    for i, j in itertools.combinations(range(1, rB + 1), 2):
        val = F.iota(B.rho_basis(i)).iota(B.rho_basis(j))  # F(rho b_i, rho b_j)
        for a in range(1, m + 1):
            p = val.get(a, ())
            if not p.is_zero:
                structure[(i, j, rB + a)] = -p
    for i in range(1, rB + 1):
        rho_i = B.rho_basis(i)
        for a in range(1, m + 1):
            for b in range(1, m + 1):
                p = Poly.zero(n)
                for x in range(1, n + 1):
                    g = conn.gamma(x, b, a)
                    if not g.is_zero:
                        p = p + rho_i.comps[x - 1] * g
                if not p.is_zero:
                    structure[(i, rB + a, rB + b)] = p
    for (a, b, c), p in fibre.items():
        structure[(rB + a, rB + b, rB + c)] = p
    anchor = {(i, x): p for (i, x), p in B.anchor.items()}
    from .algebroid import AlgebroidPresentation
    return AlgebroidPresentation(n, r, structure, anchor)


def build_coupled(B, m, fibre, conn, F):
    """The coupled algebroid B (+) ideal with its primitive IM connection.

    ``fibre`` maps (a, b, c) with a < b to the fibre bracket coefficients;
    the conditions (i)-(iii) are checked exactly before construction and a
    violation is rejected with the failed condition named. Returns
    (presentation, ideal, im_connection, curving).
    """
    if F.rank != m or F.degree != 2:
        raise StructureError("curving candidate must be an ideal-valued 2-form")
    _check_coupling_inputs(B, m, fibre, conn, F)
    A = coupled_presentation(B, m, fibre, conn, F)
    ideal = IdealBundle(A, range(B.rank + 1, B.rank + m + 1))
    n = A.nvars
    t0, t1 = {}, {}
    for i in range(1, B.rank + 1):
        cf = F.iota(B.rho_basis(i))
        if not cf.is_zero:
            t0[((i,), ())] = cf
    conn_forms = {}
    for a in range(1, m + 1):
        comps = {}
        for b in range(1, m + 1):
            for x in range(1, n + 1):
                g = conn.gamma(x, b, a)
                if not g.is_zero:
                    comps[(b, (x,))] = g
        cf = VForm(n, m, 1, comps)
        if not cf.is_zero:
            t0[((B.rank + a,), ())] = cf
        t1[((), (B.rank + a,))] = VForm(n, m, 0, {(a, ()): Poly.const(n, 1)})
    cochain = WeilCochain(A, m, 1, 1, {0: t0, 1: t1})
    imc = IMConnection(ideal, cochain)
    return A, ideal, imc, F


# -- curvings -------------------------------------------------------------------


class Curving:
    """A base 2-form trivializing the curvature, with its 3-form curvature."""

    __slots__ = ("F", "G")

    def __init__(self, imc, F, validate=True):
        if F.degree != 2 or F.rank != imc.ideal.m:
            raise StructureError("curving must be an ideal-valued 2-form")
        if validate:
            omega = curvature(imc)
            if delta(imc.A, imc.ideal.adjoint_rep(), F) != omega:
                raise ContractError("delta^0 F does not equal the curvature")
        self.F = F
        self.G = imc.coupling_connection().dnabla(F)


def curving_suite(imc, F, gamma=None):
    """All curving identities: delta^0 F = curvature, the determination of
    R and U by F, the 3-form Bianchi identities, and (optionally) the
    gamma-deformation identities."""
    A = imc.A
    ideal = imc.ideal
    rep = ideal.adjoint_rep()
    conn = imc.coupling_connection()
    report = CheckReport("curving identities")

    omega = curvature(imc)
    report.record("delta0(F) == curvature", delta(A, rep, F) == omega)
    report.record("R == -ad(F)", conn.curvature_R() == -ideal.ad_endform(F))
    ok = True
    for i in range(1, A.rank + 1):
        if imc.U_of_h(A.basis(i)) != -F.iota(A.rho_basis(i)):
            ok = False
    report.record("U == -iota_rho(F)", ok)
    G = conn.dnabla(F)
    report.record("delta0(G) == 0", delta(A, rep, G).is_zero)
    report.record("dnabla(G) == 0", conn.dnabla(G).is_zero)
    if gamma is not None:
        L = delta(A, rep, gamma)
        imc2 = deform(imc, L, 1)
        Fg = F + conn.dnabla(gamma) - bracket_of_forms(ideal, gamma, gamma).scaled(Fraction(1, 2))
        report.record("F^gamma is a curving of the deformed connection",
                      delta(A, rep, Fg) == curvature(imc2))
        G2 = imc2.coupling_connection().dnabla(Fg)
        report.record("G^gamma == G", G2 == G)
    return report


# -- semisimple tools ------------------------------------------------------------


def _constant_fibre(ideal):
    """Fibre bracket constants as Fractions; rejects non-constant structure."""
    n = ideal.A.nvars
    zero_exp = (0,) * n
    out = {}
    for a, b in itertools.combinations(range(1, ideal.m + 1), 2):
        f = ideal.fibre_bracket(a, b)
        for c, p in enumerate(f, start=1):
            if p.is_zero:
                continue
            if set(p.terms) != {zero_exp}:
                raise ContractError("semisimple tools need constant fibre structure")
            out[(a, b, c)] = p.coeff(zero_exp)
    return out


def _ad_columns(ideal):
    """ad(u_a) flattened as columns of an (m^2 x m) rational matrix."""
    m = ideal.m
    consts = _constant_fibre(ideal)

    def fib(a, b, c):
        if a == b:
            return Fraction(0)
        if a < b:
            return consts.get((a, b, c), Fraction(0))
        return -consts.get((b, a, c), Fraction(0))

    cols = []
    for a in range(1, m + 1):
        col = {}
        for d in range(1, m + 1):
            for b in range(1, m + 1):
                v = fib(a, d, b)
                if v:
                    col[(b, d)] = v
        cols.append(col)
    return cols


def check_semisimple(ideal):
    """ad is injective and every fibre derivation is inner (exact linear algebra)."""
    m = ideal.m
    cols = _ad_columns(ideal)
    if _linsolve.nullspace_sparse(cols):
        return False
    consts = _constant_fibre(ideal)

    def fib(a, b, c):
        if a == b:
            return Fraction(0)
        if a < b:
            return consts.get((a, b, c), Fraction(0))
        return -consts.get((b, a, c), Fraction(0))

    # derivation constraints: D[u_a,u_b] = [D u_a, u_b] + [u_a, D u_b]
    dcols = []
    for row in range(1, m + 1):
        for colm in range(1, m + 1):
            col = {}
            for a, b in itertools.combinations(range(1, m + 1), 2):
                for d in range(1, m + 1):
                    # coefficient of D^{row}_{colm} in the (a,b,d) constraint
                    v = Fraction(0)
                    if row == d:
                        v -= fib(a, b, colm)
                    if colm == a:
                        v += fib(row, b, d)
                    if colm == b:
                        v += fib(a, row, d)
                    if v:
                        col[(a, b, d)] = col.get((a, b, d), Fraction(0)) + v
            dcols.append(col)
    der_basis = _linsolve.nullspace_sparse(dcols)
    # every derivation must be a combination of the ad columns
    for vec in der_basis:
        flat = {}
        for idx, v in enumerate(vec):
            if v:
                row, colm = divmod(idx, m)
                flat[(row + 1, colm + 1)] = v
        if _linsolve.solve_sparse(cols, flat) is None:
            return False
    return True


def ad_inverse(ideal, D):
    """Solve [xi, gamma] = D . xi for gamma, one exact solve per component.

    D is an End-valued form with values in ad(ideal); the solution is the
    unique form with -ad(gamma) = D. Rejects non-semisimple fibres and
    values outside the image of ad.
    """
    if not check_semisimple(ideal):
        raise ContractError("fibre is not semisimple: ad is not invertible onto Der")
    n = ideal.A.nvars
    cols = _ad_columns(ideal)
    groups = {}
    for (b, d, idx), p in D.comps.items():
        for exps, (num, den) in p.terms.items():
            groups.setdefault((idx, exps), {})[(b, d)] = Fraction(num, den)
    comps = {}
    for (idx, exps), rhs in groups.items():
        x = _linsolve.solve_sparse(cols, {k: -v for k, v in rhs.items()})
        if x is None:
            raise ContractError("End-valued form is not ad of an ideal-valued form")
        for a, v in enumerate(x, start=1):
            if v:
                key = (a, idx)
                cur = comps.get(key, Poly.zero(n))
                comps[key] = cur + Poly.monomial(n, exps, v)
    return VForm(n, ideal.m, D.degree, {k: p for k, p in comps.items() if not p.is_zero})


def unique_curving(imc):
    """The unique curving of an IM connection with semisimple fibre, solved
    from R = -ad(F); uniqueness holds because ad has trivial kernel."""
    R = imc.coupling_connection().curvature_R()
    F = ad_inverse(imc.ideal, R)
    return F


def primitive_from_pair(A, ideal, vsecs, conn):
    """Build the primitive IM connection of a pair (v, nabla) over a
    semisimple ideal; the curving is implicitly defined by R = -ad F."""
    if not check_semisimple(ideal):
        raise ContractError("pair construction needs a semisimple fibre")
    n, m = A.nvars, ideal.m
    # nabla must be bracket-preserving and induce the orbit derivative
    for a in range(1, n + 1):
        for b, c in itertools.combinations(range(1, m + 1), 2):
            f = ideal.fibre_bracket(b, c)
            for d in range(1, m + 1):
                lhs = f[d - 1].diff(a - 1)
                for e in range(1, m + 1):
                    lhs = lhs + f[e - 1] * conn.gamma(a, d, e)
                rhs = Poly.zero(n)
                for e in range(1, m + 1):
                    rhs = rhs + conn.gamma(a, e, b) * ideal.fibre_bracket(e, c)[d - 1]
                    rhs = rhs + conn.gamma(a, e, c) * ideal.fibre_bracket(b, e)[d - 1]
                if lhs != rhs:
                    raise ContractError("connection does not preserve the fibre bracket")
    hsec = {}
    for i in range(1, A.rank + 1):
        full = [Poly.zero(n)] * A.rank
        for t in range(A.rank):
            full[t] = Poly.const(n, 1 if t == i - 1 else 0)
        alpha = Section(n, full)
        hsec[i] = alpha - ideal.embed(vsecs[i])
    for i in range(1, A.rank + 1):
        rho_i = A.rho_basis(i)
        for d in range(1, m + 1):
            unit = tuple(Poly.const(n, 1 if t == d - 1 else 0) for t in range(m))
            lhs = ideal.restrict(bracket(A, hsec[i], ideal.embed(unit)))
            rhs = [Poly.zero(n) for _ in range(m)]
            for a in range(1, n + 1):
                xa = rho_i.comps[a - 1]
                if xa.is_zero:
                    continue
                for b in range(1, m + 1):
                    g = conn.gamma(a, b, d)
                    if not g.is_zero:
                        rhs[b - 1] = rhs[b - 1] + xa * g
            if tuple(lhs) != tuple(rhs):
                raise ContractError(
                    "connection does not induce the orbit derivative nabla^A_h")
    R = conn.curvature_R()
    F = ad_inverse(ideal, R)
    U = {i: -F.iota(A.rho_basis(i)) for i in range(1, A.rank + 1)
         if i not in ideal.indices}
    cv = splitting_cochain(A, ideal, vsecs, conn, U)
    imc = IMConnection(ideal, cv)
    return imc, F


# -- the abelian case -------------------------------------------------------------


def splitting_curvature(A, ideal, vsecs):
    """Curvature of a splitting: sigma [b_i, b_j]_B - [sigma b_i, sigma b_j],
    in ideal components, for pairs of non-ideal frame indices."""
    n = A.nvars
    hsec = {}
    for i in range(1, A.rank + 1):
        alpha = A.basis(i)
        hsec[i] = alpha - ideal.embed(vsecs[i])
    out = {}
    horiz = [i for i in range(1, A.rank + 1) if i not in ideal.indices]
    for i, j in itertools.combinations(horiz, 2):
        z = bracket(A, hsec[i], hsec[j])
        sigma_pr = A.zero_section()
        for k in horiz:
            zk = z.comps[k - 1]
            if not zk.is_zero:
                sigma_pr = sigma_pr + hsec[k].scaled(zk)
        out[(i, j)] = ideal.restrict(sigma_pr - z)
    return out


def abelian_primitive_check(A, ideal, vsecs, conn, F):
    """Criteria for a triple (v, nabla, F) to present a primitive connection
    over an abelian ideal: flatness, inducing the quotient action, matching
    the splitting curvature through the anchor, and transverse d-nabla F."""
    if not ideal.is_abelian:
        raise ContractError("abelian criteria need an abelian ideal")
    n, m = A.nvars, ideal.m
    report = CheckReport("abelian primitive criteria")
    report.record("nabla is flat", conn.curvature_R().is_zero)

    ok = True
    for i in range(1, A.rank + 1):
        rho_i = A.rho_basis(i)
        for d in range(1, m + 1):
            unit = tuple(Poly.const(n, 1 if t == d - 1 else 0) for t in range(m))
            lhs = ideal.restrict(bracket(A, A.basis(i), ideal.embed(unit)))
            rhs = [Poly.zero(n) for _ in range(m)]
            for a in range(1, n + 1):
                xa = rho_i.comps[a - 1]
                if xa.is_zero:
                    continue
                for b in range(1, m + 1):
                    g = conn.gamma(a, b, d)
                    if not g.is_zero:
                        rhs[b - 1] = rhs[b - 1] + xa * g
            if tuple(lhs) != tuple(rhs):
                ok = False
    report.record("nabla induces the quotient action", ok)

    fv = splitting_curvature(A, ideal, vsecs)
    ok = True
    for (i, j), comps in fv.items():
        pulled = F.iota(A.rho_basis(i)).iota(A.rho_basis(j))  # F(rho e_i, rho e_j)
        want = tuple(pulled.get(a, ()) for a in range(1, m + 1))
        if tuple(comps) != want:
            ok = False
    report.record("splitting curvature is the anchor pullback of F", ok)

    dF = conn.dnabla(F)
    ok = all(dF.iota(A.rho_basis(i)).is_zero for i in range(1, A.rank + 1))
    report.record("transverse coboundary", ok)
    return report

