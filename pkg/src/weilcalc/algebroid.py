"""Trivialized Lie algebroid presentations over a polynomial chart.

The base is a single chart Q^n with coordinate frame d_1..d_n; the
algebroid is trivialized by a global frame e_1..e_r. Structure data are
the polynomials c^k_{ij} (stored for i < j and extended antisymmetrically)
and the anchor components rho^a_i. Sections, vector fields and
bundle-valued forms are component tuples / sparse tables of Poly.
"""

import itertools

from .errors import StructureError
from .polyring import Poly
from .report import CheckReport


def sort_sign(idx):
    """Sort an index tuple, returning (sorted tuple, sign); sign 0 on repeats."""
    idx = tuple(idx)
    n = len(idx)
    if len(set(idx)) != n:
        return idx, 0
    perm = sorted(range(n), key=lambda t: idx[t])
    sign = 1
    seen = [False] * n
    for start in range(n):
        if seen[start]:
            continue
        length, t = 0, start
        while not seen[t]:
            seen[t] = True
            t = perm[t]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return tuple(idx[t] for t in perm), sign


def merge_sign(left, right):
    """Sign of sorting the concatenation of two increasing tuples; 0 on overlap."""
    return sort_sign(tuple(left) + tuple(right))


class Section:
    """Section of the algebroid: components alpha^i over the frame e_1..e_r."""

    __slots__ = ("nvars", "comps")

    def __init__(self, nvars, comps):
        self.nvars = nvars
        self.comps = tuple(comps)
        for c in self.comps:
            if c.nvars != nvars:
                raise StructureError("section component over wrong chart")

    @property
    def rank(self):
        return len(self.comps)

    def __add__(self, other):
        if self.rank != other.rank:
            raise StructureError("section rank mismatch")
        return Section(self.nvars, [a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other):
        if self.rank != other.rank:
            raise StructureError("section rank mismatch")
        return Section(self.nvars, [a - b for a, b in zip(self.comps, other.comps)])

    def __neg__(self):
        return Section(self.nvars, [-a for a in self.comps])

    def scaled(self, f):
        return Section(self.nvars, [f * a for a in self.comps])

    @property
    def is_zero(self):
        return all(c.is_zero for c in self.comps)

    def __eq__(self, other):
        return (isinstance(other, Section) and self.nvars == other.nvars
                and self.comps == other.comps)

    def __hash__(self):
        return hash((self.nvars, self.comps))

    def __repr__(self):
        return f"Section({[str(c.terms) for c in self.comps]})"


class VField:
    """Vector field on the chart: components X^a over d_1..d_n."""

    __slots__ = ("nvars", "comps")

    def __init__(self, nvars, comps):
        self.nvars = nvars
        self.comps = tuple(comps)
        if len(self.comps) != nvars:
            raise StructureError("vector field needs one component per chart variable")

    def apply(self, f):
        """Derivation X(f) = sum_a X^a d_a f."""
        out = Poly.zero(self.nvars)
        for a, xa in enumerate(self.comps):
            if not xa.is_zero:
                out = out + xa * f.diff(a)
        return out

    def __add__(self, other):
        return VField(self.nvars, [a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other):
        return VField(self.nvars, [a - b for a, b in zip(self.comps, other.comps)])

    @property
    def is_zero(self):
        return all(c.is_zero for c in self.comps)

    def __eq__(self, other):
        return (isinstance(other, VField) and self.nvars == other.nvars
                and self.comps == other.comps)


def vfield_bracket(x, y):
    """Lie bracket of vector fields, [X,Y]^a = X(Y^a) - Y(X^a)."""
    return VField(x.nvars, [x.apply(ya) - y.apply(xa)
                            for xa, ya in zip(x.comps, y.comps)])


class VForm:
    """Bundle-valued differential form.

    Components live in a dict (b, A) -> Poly with b a 1-based bundle index
    and A a strictly increasing tuple of chart indices; missing entries are
    zero. Degree above the chart dimension makes the form the zero object.
    """

    __slots__ = ("nvars", "rank", "degree", "comps")

    def __init__(self, nvars, rank, degree, comps=None):
        self.nvars = nvars
        self.rank = rank
        self.degree = degree
        clean = {}
        for (b, idx), p in (comps or {}).items():
            idx = tuple(idx)
            if not 1 <= b <= rank:
                raise StructureError(f"bundle index {b} out of range 1..{rank}")
            if len(idx) != degree or any(not 1 <= a <= nvars for a in idx) \
                    or any(idx[t] >= idx[t + 1] for t in range(len(idx) - 1)):
                raise StructureError(f"bad form index tuple {idx}")
            if not p.is_zero:
                clean[(b, idx)] = p
        self.comps = clean

    @classmethod
    def zero(cls, nvars, rank, degree):
        return cls(nvars, rank, degree)

    @classmethod
    def from_items(cls, nvars, rank, degree, items):
        """Build from (b, index tuple in any order, Poly) items, applying signs."""
        acc = {}
        for b, idx, p in items:
            srt, sign = sort_sign(idx)
            if sign == 0 or p.is_zero:
                continue
            key = (b, srt)
            cur = acc.get(key)
            q = p if sign > 0 else -p
            acc[key] = q if cur is None else cur + q
        return cls(nvars, rank, degree, acc)

    def get(self, b, idx):
        """Component at an arbitrary-order index tuple, with antisymmetry sign."""
        srt, sign = sort_sign(idx)
        if sign == 0:
            return Poly.zero(self.nvars)
        p = self.comps.get((b, srt))
        if p is None:
            return Poly.zero(self.nvars)
        return p if sign > 0 else -p

    def _like(self, other):
        if (self.nvars, self.rank, self.degree) != (other.nvars, other.rank, other.degree):
            raise StructureError("form shape mismatch")

    def __add__(self, other):
        self._like(other)
        out = dict(self.comps)
        for key, p in other.comps.items():
            cur = out.get(key)
            s = p if cur is None else cur + p
            if s.is_zero:
                out.pop(key, None)
            else:
                out[key] = s
        return VForm(self.nvars, self.rank, self.degree, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return VForm(self.nvars, self.rank, self.degree,
                     {k: -p for k, p in self.comps.items()})

    def scaled(self, c):
        """Scale by a rational or a Poly (module structure over the chart ring)."""
        return VForm(self.nvars, self.rank, self.degree,
                     {k: p * c for k, p in self.comps.items()})

    @property
    def is_zero(self):
        return not self.comps

    def __eq__(self, other):
        return (isinstance(other, VForm) and self.nvars == other.nvars
                and self.rank == other.rank and self.degree == other.degree
                and self.comps == other.comps)

    def __repr__(self):
        return f"VForm(q={self.degree}, m={self.rank}, {len(self.comps)} comps)"

    # -- Cartan calculus ----------------------------------------------------

    def d(self):
        """Exterior derivative with trivial coefficients."""
        items = []
        for (b, idx), p in self.comps.items():
            for a in range(1, self.nvars + 1):
                if a in idx:
                    continue
                dp = p.diff(a - 1)
                if not dp.is_zero:
                    items.append((b, (a,) + idx, dp))
        return VForm.from_items(self.nvars, self.rank, self.degree + 1, items)

    def iota(self, x):
        """Interior product with a vector field."""
        if self.degree == 0:
            return VForm.zero(self.nvars, self.rank, 0)
        acc = {}
        for (b, idx), p in self.comps.items():
            for t, a in enumerate(idx):
                xa = x.comps[a - 1]
                if xa.is_zero:
                    continue
                rest = idx[:t] + idx[t + 1:]
                q = xa * p if t % 2 == 0 else -(xa * p)
                key = (b, rest)
                s = acc.get(key)
                s = q if s is None else s + q
                if s.is_zero:
                    acc.pop(key, None)
                else:
                    acc[key] = s
        return VForm(self.nvars, self.rank, self.degree - 1, acc)

    def lie(self, x):
        """Lie derivative via the Cartan formula (trivial coefficients)."""
        return self.iota(x).d() + self.d().iota(x)


def scalar_wedge(sf, vf):
    """Wedge a scalar form (rank-1 VForm) onto a bundle-valued form, sf ^ vf."""
    if sf.rank != 1:
        raise StructureError("left factor of scalar_wedge must be a scalar form")
    if sf.nvars != vf.nvars:
        raise StructureError("chart mismatch in scalar_wedge")
    deg = sf.degree + vf.degree
    acc = {}
    for (_, sidx), sp in sf.comps.items():
        for (b, vidx), vp in vf.comps.items():
            srt, sign = sort_sign(sidx + vidx)
            if sign == 0:
                continue
            q = sp * vp if sign > 0 else -(sp * vp)
            key = (b, srt)
            s = acc.get(key)
            s = q if s is None else s + q
            if s.is_zero:
                acc.pop(key, None)
            else:
                acc[key] = s
    return VForm(vf.nvars, vf.rank, deg, acc)


def d_scalar(p, nvars):
    """Differential of a function as a scalar 1-form."""
    comps = {}
    for a in range(1, nvars + 1):
        dp = p.diff(a - 1)
        if not dp.is_zero:
            comps[(1, (a,))] = dp
    return VForm(nvars, 1, 1, comps)


class AlgebroidPresentation:
    """Rank-r trivialized Lie algebroid over an n-variable chart.

    ``structure`` maps (i, j, k) with i < j to c^k_{ij}; ``anchor`` maps
    (i, a) to rho^a_i. Validity of the axioms is checked separately by
    :func:`validate_algebroid`, never assumed by the constructor.
    """

    __slots__ = ("nvars", "rank", "structure", "anchor", "_rho_cache",
                 "_bracket_cache")

    def __init__(self, nvars, rank, structure=None, anchor=None):
        self.nvars = nvars
        self.rank = rank
        self.structure = {}
        for (i, j, k), p in (structure or {}).items():
            if not (1 <= i < j <= rank and 1 <= k <= rank):
                raise StructureError(f"bad structure key {(i, j, k)} (need 1 <= i < j <= r)")
            if p.nvars != nvars:
                raise StructureError("structure polynomial over wrong chart")
            if not p.is_zero:
                self.structure[(i, j, k)] = p
        self.anchor = {}
        for (i, a), p in (anchor or {}).items():
            if not (1 <= i <= rank and 1 <= a <= nvars):
                raise StructureError(f"bad anchor key {(i, a)}")
            if p.nvars != nvars:
                raise StructureError("anchor polynomial over wrong chart")
            if not p.is_zero:
                self.anchor[(i, a)] = p
        self._rho_cache = {}
        self._bracket_cache = {}

    def struct(self, i, j, k):
        """c^k_{ij} for arbitrary i, j, antisymmetrically extended."""
        if i == j:
            return Poly.zero(self.nvars)
        if i < j:
            return self.structure.get((i, j, k), Poly.zero(self.nvars))
        p = self.structure.get((j, i, k))
        return -p if p is not None else Poly.zero(self.nvars)

    def basis(self, i):
        return Section(self.nvars, [Poly.const(self.nvars, 1 if t == i else 0)
                                    for t in range(1, self.rank + 1)])

    def zero_section(self):
        return Section(self.nvars, [Poly.zero(self.nvars)] * self.rank)

    def rho_basis(self, i):
        x = self._rho_cache.get(i)
        if x is None:
            x = VField(self.nvars, [self.anchor.get((i, a), Poly.zero(self.nvars))
                                    for a in range(1, self.nvars + 1)])
            self._rho_cache[i] = x
        return x

    def rho(self, alpha):
        """Anchor image of a section as a vector field."""
        comps = [Poly.zero(self.nvars) for _ in range(self.nvars)]
        for i, ai in enumerate(alpha.comps, start=1):
            if ai.is_zero:
                continue
            for a in range(self.nvars):
                ra = self.anchor.get((i, a + 1))
                if ra is not None:
                    comps[a] = comps[a] + ai * ra
        return VField(self.nvars, comps)

    def rho_apply(self, alpha, f):
        """rho(alpha)(f) as a polynomial."""
        return self.rho(alpha).apply(f)

    def bracket_basis(self, i, j):
        """[e_i, e_j] as a (cached) section."""
        if i == j:
            return self.zero_section()
        key = (i, j) if i < j else (j, i)
        w = self._bracket_cache.get(key)
        if w is None:
            comps = [self.structure.get((key[0], key[1], k), Poly.zero(self.nvars))
                     for k in range(1, self.rank + 1)]
            w = Section(self.nvars, comps)
            self._bracket_cache[key] = w
        return w if i < j else -w

    def __eq__(self, other):
        return (isinstance(other, AlgebroidPresentation)
                and (self.nvars, self.rank) == (other.nvars, other.rank)
                and self.structure == other.structure
                and self.anchor == other.anchor)


def bracket(A, alpha, beta):
    """Frame-expanded algebroid bracket.

    [alpha, beta]^k = alpha^i beta^j c^k_{ij} + rho(alpha)(beta^k)
                      - rho(beta)(alpha^k).
    """
    if alpha.rank != A.rank or beta.rank != A.rank:
        raise StructureError("section rank does not match algebroid rank")
    ra, rb = A.rho(alpha), A.rho(beta)
    comps = []
    for k in range(1, A.rank + 1):
        p = ra.apply(beta.comps[k - 1]) - rb.apply(alpha.comps[k - 1])
        for (i, j, kk), c in A.structure.items():
            if kk != k:
                continue
            ai, aj = alpha.comps[i - 1], alpha.comps[j - 1]
            bi, bj = beta.comps[i - 1], beta.comps[j - 1]
            coef = ai * bj - aj * bi
            if not coef.is_zero:
                p = p + coef * c
        comps.append(p)
    return Section(A.nvars, comps)


def validate_algebroid(A):
    """Exact check of antisymmetry, Jacobi, and the anchor-morphism property."""
    rep = CheckReport("algebroid axioms")
    rep.record("antisymmetry", True, "structure stored on i<j, extended antisymmetrically")
    for i, j, k in itertools.combinations(range(1, A.rank + 1), 3):
        jac = bracket(A, bracket(A, A.basis(i), A.basis(j)), A.basis(k)) \
            + bracket(A, bracket(A, A.basis(j), A.basis(k)), A.basis(i)) \
            + bracket(A, bracket(A, A.basis(k), A.basis(i)), A.basis(j))
        rep.record(f"jacobi({i},{j},{k})", jac.is_zero,
                   "" if jac.is_zero else "Jacobiator nonzero on this basis triple")
    for i, j in itertools.combinations(range(1, A.rank + 1), 2):
        lhs = A.rho(A.bracket_basis(i, j))
        rhs = vfield_bracket(A.rho_basis(i), A.rho_basis(j))
        ok = (lhs - rhs).is_zero
        rep.record(f"anchor_morphism({i},{j})", ok,
                   "" if ok else "rho[e_i,e_j] != [rho e_i, rho e_j]")
    return rep
