"""Pluri-homogeneous multilinear map algebra on truncated Fourier space.

Vectors carry one complex component per letter (j, sigma), j a nonzero
mode in [-box, box] and sigma = +-1.  A degree-p homogeneous map eats p
internal copies of the state plus one distinguished argument; feeding the
same state everywhere makes the nonlinear map U -> M(U,...,U)U.  The
whole module runs on a polynomial coding: the p internal slots collapse
to a multiset of letters whose stored coefficient absorbs the multinomial
multiplicity, so composition, inversion and flows reduce to sparse
polynomial bookkeeping with no combinatorial prefactors anywhere.
"""

from __future__ import annotations

import math
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

Letter = Tuple[int, int]
Vec = Dict[Letter, complex]

# polynomial in the state: multiset of letters (sorted tuple) -> coefficient,
# with an extra integer grading used for flow-time powers
PKey = Tuple[Tuple[Letter, ...], int]
Poly = Dict[PKey, complex]


def flip(letter: Letter) -> Letter:
    """Pairing partner: mode reversed, component kept."""
    return (-letter[0], letter[1])


def sflip(letter: Letter) -> Letter:
    """Reality partner: component reversed, mode kept."""
    return (letter[0], -letter[1])


def pairing(U: Vec, V: Vec) -> complex:
    """Bilinear form sum_l U[l] * V[flip(l)] (no conjugation)."""
    return sum((u * V.get(flip(l), 0j) for l, u in U.items()), 0j)


def letters_in_box(box: int) -> List[Letter]:
    return [(j, s) for j in range(-box, box + 1) if j != 0 for s in (1, -1)]


def embed_state(Z: Dict[int, complex]) -> Vec:
    """Real-to-real embedding of a mode dictionary z_j."""
    out: Vec = {}
    for j, z in Z.items():
        out[(j, 1)] = complex(z)
        out[(j, -1)] = complex(z).conjugate()
    return out


def monomial(U: Vec, L: Sequence[Letter]) -> complex:
    out = 1.0 + 0j
    for l in L:
        u = U.get(l, 0j)
        if u == 0:
            return 0j
        out *= u
    return out


def _pmul(p1: Poly, p2: Poly, maxlen: int) -> Poly:
    out: Poly = {}
    for (l1, m1), c1 in p1.items():
        for (l2, m2), c2 in p2.items():
            if len(l1) + len(l2) > maxlen:
                continue
            key = (tuple(sorted(l1 + l2)), m1 + m2)
            new = out.get(key, 0j) + c1 * c2
            if new == 0:
                out.pop(key, None)
            else:
                out[key] = new
    return out


def _padd(acc: Poly, other: Poly, factor: complex = 1.0) -> None:
    for key, c in other.items():
        new = acc.get(key, 0j) + factor * c
        if new == 0:
            acc.pop(key, None)
        else:
            acc[key] = new


class HomMap:
    """One homogeneous graded piece: degree p = size of the internal block.

    Coefficients are keyed (internal multiset, input letter, output
    letter); the internal tuple is kept sorted so symmetry in the internal
    arguments holds by construction.
    """

    __slots__ = ("degree", "box", "coeffs")

    def __init__(self, degree: int, box: int, coeffs: Optional[Dict] = None):
        if degree < 0:
            raise ValueError("degree must be nonnegative")
        self.degree = degree
        self.box = box
        self.coeffs: Dict[Tuple[Tuple[Letter, ...], Letter, Letter], complex] = {}
        for (L, inl, out), c in (coeffs or {}).items():
            if c == 0:
                continue
            L = tuple(sorted(L))
            if len(L) != degree:
                raise ValueError(f"internal block size {len(L)} != degree {degree}")
            for (j, s) in L + (inl, out):
                if j == 0 or abs(j) > box or s not in (1, -1):
                    raise ValueError(f"letter ({j},{s}) outside box {box}")
            key = (L, inl, out)
            new = self.coeffs.get(key, 0j) + complex(c)
            if new == 0:
                self.coeffs.pop(key, None)
            else:
                self.coeffs[key] = new

    def __len__(self) -> int:
        return len(self.coeffs)

    def __repr__(self) -> str:
        return f"HomMap(degree={self.degree}, box={self.box}, {len(self.coeffs)} coeffs)"

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, HomMap)
            and self.degree == other.degree
            and self.coeffs == other.coeffs
        )

    def max_coeff(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def scale(self, factor: complex) -> "HomMap":
        return HomMap(
            self.degree, self.box, {k: factor * c for k, c in self.coeffs.items()}
        )

    def add(self, other: "HomMap") -> "HomMap":
        if other.degree != self.degree:
            raise ValueError("cannot add pieces of different degree")
        acc = dict(self.coeffs)
        for k, c in other.coeffs.items():
            new = acc.get(k, 0j) + c
            if new == 0:
                acc.pop(k, None)
            else:
                acc[k] = new
        return HomMap(self.degree, max(self.box, other.box), acc)

    def apply_op(self, U: Vec, V: Vec) -> Vec:
        """Operator value M(U,...,U)V."""
        out: Vec = {}
        for (L, inl, ol), c in self.coeffs.items():
            v = V.get(inl, 0j)
            if v == 0:
                continue
            term = c * monomial(U, L) * v
            if term != 0:
                out[ol] = out.get(ol, 0j) + term
        return out

    def apply_full(self, U: Vec) -> Vec:
        return self.apply_op(U, U)

    def transpose(self) -> "HomMap":
        """Adjoint for the mode-flipped pairing: swap and reverse the legs."""
        acc = {}
        for (L, inl, ol), c in self.coeffs.items():
            acc[(L, flip(ol), flip(inl))] = c
        return HomMap(self.degree, self.box, acc)

    def opmul(self, other: "HomMap", maxdeg: Optional[int] = None) -> "HomMap":
        """Operator product (self after other) at a common state argument."""
        deg = self.degree + other.degree
        if maxdeg is not None and deg > maxdeg:
            return HomMap(deg, max(self.box, other.box), {})
        by_out: Dict[Letter, List] = defaultdict(list)
        for (L2, inl2, out2), c2 in other.coeffs.items():
            by_out[out2].append((L2, inl2, c2))
        acc: Dict = {}
        for (L1, inl1, out1), c1 in self.coeffs.items():
            for L2, inl2, c2 in by_out.get(inl1, ()):
                key = (tuple(sorted(L1 + L2)), inl2, out1)
                new = acc.get(key, 0j) + c1 * c2
                if new == 0:
                    acc.pop(key, None)
                else:
                    acc[key] = new
        return HomMap(deg, max(self.box, other.box), acc)

    def momentum_defect(self) -> int:
        bad = 0
        for (L, (j, sp), (k, s)) in self.coeffs:
            if s * k != sum(a * t for a, t in L) + sp * j:
                bad += 1
        return bad

    def reality_defect(self) -> float:
        worst = 0.0
        for (L, inl, out), c in self.coeffs.items():
            mirror = (tuple(sorted(sflip(l) for l in L)), sflip(inl), sflip(out))
            worst = max(worst, abs(c.conjugate() - self.coeffs.get(mirror, 0j)))
        return worst


class PluriMap:
    """Graded stack of HomMap pieces, optionally riding on the identity.

    Encodes U -> U + sum_p M_p(U,...,U)U when identity is set, the pure
    sum otherwise.  A degree-0 piece is an honest linear operator distinct
    from the identity flag.
    """

    __slots__ = ("box", "identity", "pieces")

    def __init__(self, box: int, identity: bool, pieces: Optional[Dict[int, HomMap]] = None):
        self.box = box
        self.identity = bool(identity)
        self.pieces: Dict[int, HomMap] = {}
        for deg, h in (pieces or {}).items():
            if len(h):
                if h.degree != deg:
                    raise ValueError("piece degree mismatch")
                if h.box > box:
                    raise ValueError("piece box exceeds map box")
                self.pieces[deg] = h

    def __repr__(self) -> str:
        degs = sorted(self.pieces)
        return f"PluriMap(box={self.box}, identity={self.identity}, degrees={degs})"

    def degrees(self) -> List[int]:
        return sorted(self.pieces)

    def piece(self, deg: int) -> HomMap:
        return self.pieces.get(deg, HomMap(deg, self.box, {}))

    def max_coeff(self) -> float:
        return max((h.max_coeff() for h in self.pieces.values()), default=0.0)

    def add_pieces(self, other: "PluriMap") -> "PluriMap":
        """Merge graded pieces; identity flag is inherited from self."""
        pieces = dict(self.pieces)
        for deg, h in other.pieces.items():
            pieces[deg] = pieces[deg].add(h) if deg in pieces else h
        return PluriMap(max(self.box, other.box), self.identity, pieces)

    def scale(self, factor: complex) -> "PluriMap":
        return PluriMap(
            self.box, self.identity, {d: h.scale(factor) for d, h in self.pieces.items()}
        )

    def pure(self) -> "PluriMap":
        return PluriMap(self.box, False, dict(self.pieces))

    def with_identity(self) -> "PluriMap":
        return PluriMap(self.box, True, dict(self.pieces))

    def apply(self, U: Vec) -> Vec:
        out: Vec = dict(U) if self.identity else {}
        for h in self.pieces.values():
            for l, v in h.apply_full(U).items():
                new = out.get(l, 0j) + v
                out[l] = new
        return {l: v for l, v in out.items() if v != 0}

    def op_at(self, U: Vec, V: Vec) -> Vec:
        """Operator reading: (Id +) sum M_p(U,...,U) applied to V."""
        out: Vec = dict(V) if self.identity else {}
        for h in self.pieces.values():
            for l, v in h.apply_op(U, V).items():
                out[l] = out.get(l, 0j) + v
        return {l: v for l, v in out.items() if v != 0}

    def transpose(self) -> "PluriMap":
        return PluriMap(
            self.box, self.identity, {d: h.transpose() for d, h in self.pieces.items()}
        )

    def vecpoly(self) -> Dict[Letter, Poly]:
        """The full polynomial map, one letter-polynomial per component."""
        out: Dict[Letter, Poly] = defaultdict(dict)
        if self.identity:
            for l in letters_in_box(self.box):
                out[l][((l,), 0)] = 1.0 + 0j
        for h in self.pieces.values():
            for (L, inl, ol), c in h.coeffs.items():
                key = (tuple(sorted(L + (inl,))), 0)
                poly = out[ol]
                new = poly.get(key, 0j) + c
                if new == 0:
                    poly.pop(key, None)
                else:
                    poly[key] = new
        return dict(out)

    def differential(self) -> "PluriMap":
        """The linearization dPhi(U) as a graded operator family.

        The distinguished slot keeps its own contribution, and every
        internal letter takes a turn as the operator input with the old
        input letter folded into the state monomial.
        """
        grades: Dict[int, Dict] = defaultdict(dict)
        for h in self.pieces.values():
            for (L, inl, ol), c in h.coeffs.items():
                _acc(grades[len(L)], (L, inl, ol), c)
                seen = set()
                full = L + (inl,)
                for i, l in enumerate(L):
                    if l in seen:
                        continue
                    seen.add(l)
                    rest = tuple(sorted(L[:i] + L[i + 1 :] + (inl,)))
                    _acc(grades[len(L)], (rest, l, ol), c * L.count(l))
        pieces = {d: HomMap(d, self.box, cs) for d, cs in grades.items()}
        return PluriMap(self.box, self.identity, pieces)

    def momentum_defect(self) -> int:
        return sum(h.momentum_defect() for h in self.pieces.values())

    def reality_defect(self) -> float:
        return max((h.reality_defect() for h in self.pieces.values()), default=0.0)


def _acc(acc: Dict, key, c) -> None:
    if c == 0:
        return
    new = acc.get(key, 0j) + c
    if new == 0:
        acc.pop(key, None)
    else:
        acc[key] = new


def identity_map(box: int) -> PluriMap:
    return PluriMap(box, True, {})


def symplectic_tensor(box: int) -> PluriMap:
    """The constant antisymmetric structure pairing each mode with itself.

    Component reading: (E U)^s_k = -i s U^{-s}_{-k}.  Squares to the
    identity and transposes to its negative under the mode-flip pairing.
    """
    coeffs = {}
    for (k, s) in letters_in_box(box):
        coeffs[((), (-k, -s), (k, s))] = -1j * s
    return PluriMap(box, False, {0: HomMap(0, box, coeffs)})


def _substitute_internal(
    h: HomMap, vec: Dict[Letter, Poly], maxdeg: int
) -> Dict[Tuple[int, int], Dict]:
    """Feed a polynomial map into every internal slot of one piece.

    Returns raw coefficient dictionaries keyed (degree, time-power) ->
    {(L', inl, out): coeff}; the distinguished input is left open.
    """
    by_L: Dict[Tuple[Letter, ...], List] = defaultdict(list)
    for (L, inl, out), c in h.coeffs.items():
        by_L[L].append((inl, out, c))
    result: Dict[Tuple[int, int], Dict] = defaultdict(dict)
    for L, calls in by_L.items():
        prod: Poly = {((), 0): 1.0 + 0j}
        ok = True
        for l in L:
            p = vec.get(l)
            if not p:
                ok = False
                break
            prod = _pmul(prod, p, maxdeg)
            if not prod:
                ok = False
                break
        if not ok:
            continue
        for (Lp, m), pc in prod.items():
            for inl, out, c in calls:
                _acc(result[(len(Lp), m)], (Lp, inl, out), c * pc)
    return result


def compose(M: PluriMap, inner: PluriMap, N: int) -> PluriMap:
    """Graded coefficients of M(inner(U)), truncated at piece degree N.

    Every internal slot of every piece of M receives the full polynomial
    of the inner map, and the distinguished slot rides through the inner
    trailing operator, so apply(compose(M, inner), U) agrees with
    apply(M, apply(inner, U)) up to the truncation.
    """
    if M.box != inner.box:
        raise ValueError(f"box mismatch: {M.box} vs {inner.box}")
    vec = inner.vecpoly()
    grades: Dict[int, Dict] = defaultdict(dict)
    if M.identity:
        for deg, h in inner.pieces.items():
            if deg <= N:
                for key, c in h.coeffs.items():
                    _acc(grades[deg], key, c)
    for q, Mq in M.pieces.items():
        subbed = _substitute_internal(Mq, vec, N)
        for (deg1, _m), raw in subbed.items():
            if deg1 > N:
                continue
            h1 = HomMap(deg1, M.box, raw)
            if inner.identity:
                for key, c in h1.coeffs.items():
                    _acc(grades[deg1], key, c)
            for r, innr in inner.pieces.items():
                if deg1 + r <= N:
                    prod = h1.opmul(innr)
                    for key, c in prod.coeffs.items():
                        _acc(grades[deg1 + r], key, c)
    pieces = {d: HomMap(d, M.box, cs) for d, cs in grades.items() if cs}
    return PluriMap(M.box, M.identity and inner.identity, pieces)


def opmul_maps(A: PluriMap, B: PluriMap, maxdeg: Optional[int] = None) -> PluriMap:
    """Pointwise operator product A(U).B(U), graded and truncated."""
    grades: Dict[int, Dict] = defaultdict(dict)
    if A.identity and B.identity:
        pass
    for dA, hA in A.pieces.items():
        if B.identity:
            for key, c in hA.coeffs.items():
                if maxdeg is None or dA <= maxdeg:
                    _acc(grades[dA], key, c)
        for dB, hB in B.pieces.items():
            if maxdeg is not None and dA + dB > maxdeg:
                continue
            prod = hA.opmul(hB)
            for key, c in prod.coeffs.items():
                _acc(grades[dA + dB], key, c)
    if A.identity:
        for dB, hB in B.pieces.items():
            if maxdeg is None or dB <= maxdeg:
                for key, c in hB.coeffs.items():
                    _acc(grades[dB], key, c)
    pieces = {d: HomMap(d, A.box, cs) for d, cs in grades.items() if cs}
    return PluriMap(max(A.box, B.box), A.identity and B.identity, pieces)


def approx_inverse(psi: PluriMap, N: int) -> PluriMap:
    """Inverse of Id + M up to homogeneity N, by degreewise back-substitution.

    At each degree the defect of (psi o phi) so far is killed by the new
    piece, so both compositions collapse to the identity through degree N.
    The lowest piece is exactly the sign-flip of the input's lowest piece.
    """
    if not psi.identity:
        raise ValueError("approximate inversion needs an identity part")
    if 0 in psi.pieces:
        raise ValueError("degree-0 linear parts are not invertible here; fold them out first")
    phi = identity_map(psi.box)
    low = min(psi.pieces, default=N + 1)
    for deg in range(low, N + 1):
        defect = compose(psi.pure(), phi, deg).pieces.get(deg)
        if defect is not None and len(defect):
            phi = phi.add_pieces(
                PluriMap(psi.box, False, {deg: defect.scale(-1.0)})
            )
    return phi


def _vecpoly_tau(box: int, F: Dict[int, Dict[int, HomMap]]) -> Dict[Letter, Poly]:
    """Polynomial map of Id + time-graded pieces, time powers in the key."""
    out: Dict[Letter, Poly] = defaultdict(dict)
    for l in letters_in_box(box):
        out[l][((l,), 0)] = 1.0 + 0j
    for m, grades in F.items():
        for h in grades.values():
            for (L, inl, ol), c in h.coeffs.items():
                _acc(out[ol], (tuple(sorted(L + (inl,))), m), c)
    return dict(out)


def approx_flow(X, N: int) -> PluriMap:
    """Time-1 map of dU/dtau = X^tau(U) up to homogeneity N.

    X is a PluriMap field (tau-independent) or a dict tau-power ->
    PluriMap.  Degrees are filled bottom-up: the right side at degree a
    only involves lower flow pieces, and each tau-polynomial integrates
    in closed form.  Linear fields are refused; their flows are matrix
    exponentials, not polynomial perturbations of the identity.
    """
    if isinstance(X, PluriMap):
        X = {0: X}
    box = None
    for n, Xn in X.items():
        if n < 0:
            raise ValueError("negative time powers are not polynomial")
        if Xn.identity:
            raise ValueError("fields carry no identity part")
        if 0 in Xn.pieces:
            raise ValueError("linear (degree-0) fields are not supported here")
        box = Xn.box if box is None else max(box, Xn.box)
    if box is None:
        raise ValueError("empty field family")

    low = min((min(Xn.pieces) for Xn in X.values() if Xn.pieces), default=N + 1)
    # F[m][deg] = coefficient of tau^m in the degree-deg flow piece
    F: Dict[int, Dict[int, HomMap]] = defaultdict(dict)
    for a in range(low, N + 1):
        vec = _vecpoly_tau(box, F)
        rhs: Dict[int, Dict] = defaultdict(dict)  # time power -> raw coeffs
        for n, Xn in X.items():
            for q, Xq in Xn.pieces.items():
                if q > a:
                    continue
                subbed = _substitute_internal(Xq, vec, a)
                for (deg1, m1), raw in subbed.items():
                    h1 = HomMap(deg1, box, raw)
                    if deg1 == a:
                        for key, c in h1.coeffs.items():
                            _acc(rhs[n + m1], key, c)
                    for m2, grades in F.items():
                        for deg2, h2 in grades.items():
                            if deg1 + deg2 == a:
                                prod = h1.opmul(h2)
                                for key, c in prod.coeffs.items():
                                    _acc(rhs[n + m1 + m2], key, c)
        for m, raw in rhs.items():
            if raw:
                piece = HomMap(a, box, raw).scale(1.0 / (m + 1))
                if a in F[m + 1]:
                    piece = F[m + 1][a].add(piece)
                F[m + 1][a] = piece

    grades: Dict[int, Dict] = defaultdict(dict)
    for m, per_deg in F.items():
        for deg, h in per_deg.items():
            for key, c in h.coeffs.items():
                _acc(grades[deg], key, c)
    pieces = {d: HomMap(d, box, cs) for d, cs in grades.items() if cs}
    return PluriMap(box, True, pieces)


def from_fourier_field(field, box: int) -> PluriMap:
    """Convert a polynomial vector field into graded map pieces.

    Each state monomial donates every one of its letters to the
    distinguished slot with weight multiplicity/length, which is the
    symmetric splitting; apply_full then reproduces the field exactly.
    """
    grades: Dict[int, Dict] = defaultdict(dict)
    for (k, s), poly in field.components.items():
        for idx, c in poly.items():
            letters = []
            for j, a, b in idx.entries:
                letters.extend([(j, 1)] * a)
                letters.extend([(j, -1)] * b)
            letters = tuple(sorted(letters))
            n = len(letters)
            if n == 0:
                raise ValueError("constant field components are not homogeneous")
            seen = set()
            for i, l in enumerate(letters):
                if l in seen:
                    continue
                seen.add(l)
                rest = letters[:i] + letters[i + 1 :]
                _acc(
                    grades[n - 1],
                    (rest, l, (k, s)),
                    c * letters.count(l) / n,
                )
        if not poly:
            continue
    pieces = {d: HomMap(d, box, cs) for d, cs in grades.items() if cs}
    return PluriMap(box, False, pieces)


# --- differential forms built on the same polynomial coding ---


def _wedge_canon(ls: Tuple[Letter, ...]) -> Tuple[Optional[Tuple[Letter, ...]], int]:
    """Sort wedge legs, tracking the permutation sign; repeats kill the term."""
    if len(set(ls)) != len(ls):
        return None, 0
    order = sorted(range(len(ls)), key=lambda i: ls[i])
    sign = 1
    seen = list(ls)
    # count inversions by selection
    arr = list(range(len(ls)))
    perm = [order.index(i) for i in arr]
    inv = 0
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                inv += 1
    sign = -1 if inv % 2 else 1
    return tuple(ls[i] for i in order), sign


class KForm:
    """Polynomial-coefficient alternating k-form.

    Stored as coefficients on U-monomials times canonical wedge products
    of coordinate differentials; evaluation feeds k vectors into the
    alternating determinant of their letter components.
    """

    __slots__ = ("k", "box", "coeffs")

    def __init__(self, k: int, box: int, coeffs: Optional[Dict] = None):
        self.k = k
        self.box = box
        self.coeffs: Dict[Tuple[Tuple[Letter, ...], Tuple[Letter, ...]], complex] = {}
        for (L, legs), c in (coeffs or {}).items():
            if c == 0:
                continue
            if len(legs) != k:
                raise ValueError("wedge arity mismatch")
            canon, sign = _wedge_canon(tuple(legs))
            if canon is None:
                continue
            key = (tuple(sorted(L)), canon)
            new = self.coeffs.get(key, 0j) + sign * complex(c)
            if new == 0:
                self.coeffs.pop(key, None)
            else:
                self.coeffs[key] = new

    def __repr__(self) -> str:
        return f"KForm(k={self.k}, box={self.box}, {len(self.coeffs)} coeffs)"

    def max_coeff(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def add(self, other: "KForm", factor: complex = 1.0) -> "KForm":
        if other.k != self.k:
            raise ValueError("arity mismatch")
        acc = dict(self.coeffs)
        for key, c in other.coeffs.items():
            new = acc.get(key, 0j) + factor * c
            if new == 0:
                acc.pop(key, None)
            else:
                acc[key] = new
        return KForm(self.k, max(self.box, other.box), acc)

    def value(self, U: Vec, vectors: Sequence[Vec]) -> complex:
        if len(vectors) != self.k:
            raise ValueError("need exactly k vectors")
        total = 0j
        for (L, legs), c in self.coeffs.items():
            base = c * monomial(U, L)
            if base == 0:
                continue
            # determinant of the k x k matrix vectors[i][legs[j]]
            total += base * _det([[v.get(l, 0j) for l in legs] for v in vectors])
        return total

    def exterior_derivative(self) -> "KForm":
        acc: Dict = {}
        for (L, legs), c in self.coeffs.items():
            seen = set()
            for i, l in enumerate(L):
                if l in seen:
                    continue
                seen.add(l)
                rest = L[:i] + L[i + 1 :]
                key = (rest, (l,) + legs)
                canon, sign = _wedge_canon(key[1])
                if canon is None:
                    continue
                _acc(acc, (tuple(sorted(rest)), canon), sign * c * L.count(l))
        return KForm(self.k + 1, self.box, acc)

    def interior(self, field: Dict[Letter, Poly]) -> "KForm":
        """Contraction of the first slot with a polynomial field."""
        acc: Dict = {}
        for (L, legs), c in self.coeffs.items():
            for i, leg in enumerate(legs):
                comp = field.get(leg)
                if not comp:
                    continue
                sign = -1 if i % 2 else 1
                rest = legs[:i] + legs[i + 1 :]
                for (Lf, m), cf in comp.items():
                    if m != 0:
                        raise ValueError("time-graded fields not supported in forms")
                    key = (tuple(sorted(L + Lf)), rest)
                    _acc(acc, key, sign * c * cf)
        return KForm(self.k - 1, self.box, acc)

    def lie_derivative(self, field: Dict[Letter, Poly]) -> "KForm":
        """Transport derivative along the field, computed directly.

        Coefficient polynomials are differentiated along the field and the
        wedge legs pick up the field's linearization, so the Cartan
        identity can be tested against an independent construction.
        """
        acc: Dict = {}
        for (L, legs), c in self.coeffs.items():
            seen = set()
            for i, l in enumerate(L):
                if l in seen:
                    continue
                seen.add(l)
                comp = field.get(l)
                if not comp:
                    continue
                rest = L[:i] + L[i + 1 :]
                for (Lf, m), cf in comp.items():
                    key = (tuple(sorted(rest + Lf)), legs)
                    _acc(acc, key, c * L.count(l) * cf)
        for (L, legs), c in self.coeffs.items():
            for i, leg in enumerate(legs):
                # replace dx^leg by d(field^leg)
                comp = field.get(leg)
                if not comp:
                    continue
                for (Lf, m), cf in comp.items():
                    seenf = set()
                    for t, lf in enumerate(Lf):
                        if lf in seenf:
                            continue
                        seenf.add(lf)
                        restf = Lf[:t] + Lf[t + 1 :]
                        newlegs = legs[:i] + (lf,) + legs[i + 1 :]
                        canon, sign = _wedge_canon(newlegs)
                        if canon is None:
                            continue
                        key = (tuple(sorted(L + restf)), canon)
                        _acc(acc, key, sign * c * cf * Lf.count(lf))
        return KForm(self.k, self.box, acc)

    def pullback(self, phi: PluriMap, N: int) -> "KForm":
        """Substitute the map into coefficients and push legs through dPhi."""
        vec = {l: p for l, p in phi.vecpoly().items()}
        dphi = phi.differential()
        # leg -> list of (monomial letters, input letter, coeff) including Id
        leg_table: Dict[Letter, List[Tuple[Tuple[Letter, ...], Letter, complex]]] = defaultdict(list)
        if dphi.identity:
            for l in letters_in_box(self.box):
                leg_table[l].append(((), l, 1.0 + 0j))
        for h in dphi.pieces.values():
            for (L, inl, ol), c in h.coeffs.items():
                leg_table[ol].append((L, inl, c))
        acc: Dict = {}
        for (L, legs), c in self.coeffs.items():
            base: Poly = {((), 0): c}
            ok = True
            for l in L:
                p = vec.get(l)
                if not p:
                    ok = False
                    break
                base = _pmul(base, p, N + self.k)
            if not ok or not base:
                continue
            choices = [leg_table.get(leg, []) for leg in legs]
            stack = [((), 1.0 + 0j, ())]
            for ch in choices:
                stack = [
                    (mon + Lc, coeff * cc, ins + (inl,))
                    for mon, coeff, ins in stack
                    for (Lc, inl, cc) in ch
                ]
            for mon, coeff, ins in stack:
                canon, sign = _wedge_canon(ins)
                if canon is None:
                    continue
                for (Lb, m), cb in base.items():
                    letters = tuple(sorted(Lb + mon))
                    if len(letters) > N + self.k:
                        continue
                    _acc(acc, (letters, canon), sign * coeff * cb)
        return KForm(self.k, self.box, acc)


def _det(rows: List[List[complex]]) -> complex:
    n = len(rows)
    if n == 0:
        return 1.0 + 0j
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    total = 0j
    for j in range(n):
        if rows[0][j] == 0:
            continue
        minor = [r[:j] + r[j + 1 :] for r in rows[1:]]
        total += (-1) ** j * rows[0][j] * _det(minor)
    return total


def twoform_from_operator(E: PluriMap) -> KForm:
    """Lambda[V1,V2] = pairing(E(U)V1, V2) as an alternating form."""
    acc: Dict = {}
    box = E.box
    if E.identity:
        raise ValueError("a representing operator has no identity part")
    for h in E.pieces.values():
        for (L, inl, out), c in h.coeffs.items():
            acc_key = (L, (inl, flip(out)))
            canon, sign = _wedge_canon(acc_key[1])
            if canon is None:
                continue
            _acc(acc, (tuple(sorted(L)), canon), 0.5 * sign * c)
    return KForm(2, box, acc)


def operator_from_twoform(form: KForm, box: int) -> PluriMap:
    grades: Dict[int, Dict] = defaultdict(dict)
    for (L, (a, b)), c in form.coeffs.items():
        _acc(grades[len(L)], (L, a, flip(b)), c)
        _acc(grades[len(L)], (L, b, flip(a)), -c)
    pieces = {d: HomMap(d, box, cs) for d, cs in grades.items() if cs}
    return PluriMap(box, False, pieces)


class TwoForm:
    """A two-form through its representing operator, kept antisymmetric."""

    __slots__ = ("op",)

    def __init__(self, op: PluriMap, tol: float = 1e-12):
        defect = antisymmetry_defect(op)
        scale = max(1.0, op.max_coeff())
        if defect > tol * scale:
            raise ValueError(f"representing operator not antisymmetric: defect {defect:.3e}")
        self.op = op

    def value(self, U: Vec, V1: Vec, V2: Vec) -> complex:
        return pairing(self.op.op_at(U, V1), V2)


def antisymmetry_defect(op: PluriMap) -> float:
    worst = 0.0
    neg = op.transpose().scale(-1.0)
    for deg in set(op.degrees()) | set(neg.degrees()):
        a = op.piece(deg)
        b = neg.piece(deg)
        keys = set(a.coeffs) | set(b.coeffs)
        for key in keys:
            worst = max(worst, abs(a.coeffs.get(key, 0j) - b.coeffs.get(key, 0j)))
    return worst


def pullback2(phi: PluriMap, Lambda: TwoForm, N: int) -> TwoForm:
    """Pullback of a two-form: conjugate the representing operator by dPhi."""
    dphi = phi.differential()
    inner = compose_operator_arguments(Lambda.op, phi, N)
    prod = opmul_maps(opmul_maps(dphi.transpose(), inner, N), dphi, N)
    return TwoForm(prod.pure() if not prod.identity else prod, tol=1e-9)


def compose_operator_arguments(E: PluriMap, phi: PluriMap, N: int) -> PluriMap:
    """E(phi(U)) as an operator family in U: internal substitution only."""
    vec = phi.vecpoly()
    grades: Dict[int, Dict] = defaultdict(dict)
    for q, Eq in E.pieces.items():
        subbed = _substitute_internal(Eq, vec, N)
        for (deg1, _m), raw in subbed.items():
            if deg1 <= N:
                for key, c in raw.items():
                    _acc(grades[deg1], key, c)
    pieces = {d: HomMap(d, E.box, cs) for d, cs in grades.items() if cs}
    return PluriMap(E.box, E.identity, pieces)


class SymplecticCheck:
    """Outcome of the symplecticity test, unpacking as (ok, residual)."""

    __slots__ = ("ok", "residual", "low_defect")

    def __init__(self, ok: bool, residual: float, low_defect: float):
        self.ok = ok
        self.residual = residual
        self.low_defect = low_defect

    def __iter__(self):
        return iter((self.ok, self.residual))

    def __bool__(self) -> bool:
        return self.ok

    def __repr__(self) -> str:
        return (
            f"SymplecticCheck(ok={self.ok}, residual={self.residual:.3e}, "
            f"low_defect={self.low_defect:.3e})"
        )


def symplectic_up_to_N(D: PluriMap, N: int, tol: float = 1e-9) -> SymplecticCheck:
    """Test dD^T E dD = E through degree N; report what lives beyond.

    The product is formed without truncation, so the returned residual is
    the largest coefficient in the dropped degrees, the honest measure of
    how far beyond N the map fails to be symplectic.
    """
    if not D.identity:
        raise ValueError("symplecticity is tested on identity-anchored maps")
    Ec = symplectic_tensor(D.box)
    dD = D.differential()
    full = opmul_maps(opmul_maps(dD.transpose(), Ec), dD)
    defect = full.pure().add_pieces(Ec.scale(-1.0))
    low = 0.0
    high = 0.0
    for deg, h in defect.pieces.items():
        if deg <= N:
            low = max(low, h.max_coeff())
        else:
            high = max(high, h.max_coeff())
    return SymplecticCheck(low <= tol, high, low)
