"""Multi-index combinatorics and small-divisor machinery.

A monomial in the complex mode variables z_j, conj(z_j) is recorded as a
MultiIndex: for every nonzero integer mode j it stores the exponent pair
(a_j, b_j) of z_j^{a_j} * conj(z_j)^{b_j}.  On top of that sit the
super-action classification, divisor evaluation against a dispersion law,
exhaustive enumeration up to a degree and mode box, kappa scans producing
non-resonance certificates, and the auxiliary certificate functions used
to bound divisors away from zero on most of a kappa interval.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Dict, Iterable, Iterator, List, Sequence, Tuple

import numpy as np

from gcvlab.medium import Medium, omega

# Divisors whose magnitude falls below this are treated as exact zeros:
# the combinatorially exact cancellations produce true 0.0 here, while
# accidental near-resonances picked up on a kappa grid land just above.
ZERO_DIVISOR = 1e-12


class MultiIndex:
    """Sparse exponent record of a monomial in the pair (z, conj z).

    Entries are kept as a sorted tuple of (mode, a, b) with a + b >= 1.
    Instances are immutable and hashable, so they double as dictionary
    keys for polynomial Hamiltonians.
    """

    __slots__ = ("entries", "_hash", "length", "momentum", "maxmode")

    def __init__(self, exponents: Dict[int, Tuple[int, int]] | None = None):
        items = []
        for j, (a, b) in sorted((exponents or {}).items()):
            if j == 0:
                raise ValueError("mode 0 is not part of the lattice")
            a = int(a)
            b = int(b)
            if a < 0 or b < 0:
                raise ValueError("exponents must be nonnegative")
            if a + b:
                items.append((j, a, b))
        entries = tuple(items)
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_hash", hash(entries))
        object.__setattr__(self, "length", sum(a + b for _, a, b in entries))
        object.__setattr__(self, "momentum", sum(j * (a - b) for j, a, b in entries))
        object.__setattr__(self, "maxmode", max((abs(j) for j, _, _ in entries), default=0))

    def __setattr__(self, name, value):
        raise AttributeError("MultiIndex is immutable")

    def __eq__(self, other):
        return isinstance(other, MultiIndex) and self.entries == other.entries

    def __hash__(self):
        return self._hash

    def __repr__(self):
        if not self.entries:
            return "MultiIndex()"
        bits = []
        for j, a, b in self.entries:
            if a:
                bits.append(f"z[{j}]" + (f"^{a}" if a > 1 else ""))
            if b:
                bits.append(f"zb[{j}]" + (f"^{b}" if b > 1 else ""))
        return " ".join(bits)

    def __iter__(self):
        return iter(self.entries)

    @property
    def support(self) -> Tuple[int, ...]:
        return tuple(j for j, _, _ in self.entries)

    def alpha(self, j: int) -> int:
        for k, a, _ in self.entries:
            if k == j:
                return a
        return 0

    def beta(self, j: int) -> int:
        for k, _, b in self.entries:
            if k == j:
                return b
        return 0

    @property
    def alpha_length(self) -> int:
        return sum(a for _, a, _ in self.entries)

    @property
    def beta_length(self) -> int:
        return sum(b for _, _, b in self.entries)

    @classmethod
    def from_monomial(cls, modes: Iterable[Tuple[int, int]]) -> "MultiIndex":
        """Count letters (j, sign): sign +1 tallies into a, -1 into b."""
        exps: Dict[int, List[int]] = {}
        for j, sign in modes:
            if j == 0:
                raise ValueError("mode 0 is not part of the lattice")
            slot = exps.setdefault(j, [0, 0])
            if sign == 1:
                slot[0] += 1
            elif sign == -1:
                slot[1] += 1
            else:
                raise ValueError(f"sign must be +1 or -1, got {sign!r}")
        return cls({j: (a, b) for j, (a, b) in exps.items()})

    def to_letters(self) -> List[Tuple[int, int]]:
        """Expand back into a sorted list of (mode, sign) letters."""
        out: List[Tuple[int, int]] = []
        for j, a, b in self.entries:
            out.extend([(j, 1)] * a)
            out.extend([(j, -1)] * b)
        return out

    def conj(self) -> "MultiIndex":
        """Swap the z and conj(z) exponents (complex conjugation)."""
        return MultiIndex({j: (b, a) for j, a, b in self.entries})

    def reflect(self) -> "MultiIndex":
        """Flip every mode j -> -j."""
        return MultiIndex({-j: (a, b) for j, a, b in self.entries})

    def merge(self, other: "MultiIndex") -> "MultiIndex":
        """Exponent-wise sum, the index of the product monomial."""
        exps = {j: [a, b] for j, a, b in self.entries}
        for j, a, b in other.entries:
            slot = exps.setdefault(j, [0, 0])
            slot[0] += a
            slot[1] += b
        return MultiIndex({j: (a, b) for j, (a, b) in exps.items()})

    def encode(self) -> str:
        return ";".join(f"{j}:{a}:{b}" for j, a, b in self.entries) or "1"

    @classmethod
    def decode(cls, text: str) -> "MultiIndex":
        text = text.strip()
        if text == "1":
            return cls()
        exps = {}
        for chunk in text.split(";"):
            j, a, b = chunk.split(":")
            exps[int(j)] = (int(a), int(b))
        return cls(exps)


def is_sap(idx: MultiIndex) -> bool:
    """Super-action preservation: a_n + a_{-n} == b_n + b_{-n} for all n."""
    if idx.length % 2:
        return False
    for n in {abs(j) for j in idx.support}:
        if idx.alpha(n) + idx.alpha(-n) != idx.beta(n) + idx.beta(-n):
            return False
    return True


def nset(idx: MultiIndex) -> Tuple[int, ...]:
    """Positive modes where the two-sided exponent balance fails."""
    return tuple(
        n
        for n in sorted({abs(j) for j in idx.support})
        if idx.alpha(n) + idx.alpha(-n) != idx.beta(n) + idx.beta(-n)
    )


def mset(idx: MultiIndex) -> Tuple[int, ...]:
    """Positive modes carrying a nonzero signed (odd) exponent combination."""
    return tuple(
        n
        for n in sorted({abs(j) for j in idx.support})
        if idx.alpha(n) - idx.alpha(-n) - idx.beta(n) + idx.beta(-n) != 0
    )


def vorticity_charge(idx: MultiIndex) -> int:
    """Integer coupling to the vorticity half-shift in the divisor."""
    return sum(
        idx.alpha(n) - idx.alpha(-n) - idx.beta(n) + idx.beta(-n)
        for n in {abs(j) for j in idx.support}
    )


def small_divisor(med: Medium, idx: MultiIndex) -> float:
    """Frequency combination sum_j (a_j - b_j) * Omega_j for this medium.

    Evaluated in the folded form over positive modes, so the even part of
    the dispersion enters through integer coefficients.  Super-action
    preserving indices therefore yield an exact floating-point zero in
    infinite depth instead of a rounding residue.
    """
    even_part = 0.0
    odd_charge = 0
    odd_part = 0.0
    for n in sorted({abs(j) for j in idx.support}):
        c = idx.alpha(n) + idx.alpha(-n) - idx.beta(n) - idx.beta(-n)
        if c:
            even_part += c * omega(med, n)
        d = idx.alpha(n) - idx.alpha(-n) - idx.beta(n) + idx.beta(-n)
        if d:
            if med.infinite_depth:
                odd_charge += d
            else:
                odd_part += d * math.tanh(med.depth * n)
    if med.infinite_depth:
        odd_part = float(odd_charge)
    return even_part + 0.5 * med.gamma * odd_part


def divisor_data(idx: MultiIndex) -> Tuple[Tuple[int, ...], Tuple[int, ...], Tuple[int, ...], Tuple[int, ...]]:
    """Folded coefficient data (nvec, cvec, mvec, dvec) of the divisor.

    nvec lists the positive modes with unbalanced two-sided exponents and
    cvec their integer weights on the even dispersion part; mvec/dvec do
    the same for the odd (vorticity) part.
    """
    nvec = nset(idx)
    cvec = tuple(idx.alpha(n) + idx.alpha(-n) - idx.beta(n) - idx.beta(-n) for n in nvec)
    mvec = mset(idx)
    dvec = tuple(idx.alpha(n) - idx.alpha(-n) - idx.beta(n) + idx.beta(-n) for n in mvec)
    return nvec, cvec, mvec, dvec


@dataclass(frozen=True)
class DivisorRecord:
    index: MultiIndex
    divisor: float
    sap: bool
    kappa: float


@dataclass(frozen=True)
class Certificate:
    """Outcome of a non-resonance check at one kappa.

    nu is the minimum of |divisor| * maxmode**tau over the scanned
    non-super-action-preserving indices, with divisors below the exact-zero
    threshold clamped to zero.  worst records the attaining index.
    """

    kappa: float
    maxdeg: int
    box: int
    tau: float
    nu: float
    worst: DivisorRecord

    @property
    def resonant(self) -> bool:
        return self.nu == 0.0


def enumerate_indices(maxdeg: int, box: int, momentum_zero: bool = False) -> Iterator[MultiIndex]:
    """Yield every index with length <= maxdeg and support inside the box.

    Letters are (mode, side) with side 0 for a z factor and 1 for a
    conj(z) factor; within each degree the output follows the
    lexicographic order of sorted letter combinations, so the stream is
    deterministic and free of duplicates.  The empty index is included
    (it has length 0); momentum_zero keeps only indices whose momentum
    vanishes, which the empty index satisfies.
    """
    if maxdeg < 0 or box < 1:
        raise ValueError("need maxdeg >= 0 and box >= 1")
    alphabet = [
        (j, side)
        for j in range(-box, box + 1)
        if j != 0
        for side in (0, 1)
    ]
    alphabet.sort()
    for deg in range(maxdeg + 1):
        for combo in itertools.combinations_with_replacement(alphabet, deg):
            letters = [(j, 1 if side == 0 else -1) for j, side in combo]
            idx = MultiIndex.from_monomial(letters)
            if momentum_zero and idx.momentum != 0:
                continue
            yield idx


def _omega_table(med: Medium, box: int, kappas: np.ndarray) -> np.ndarray:
    """omega_n(kappa) for n = 1..box as a (box, len(kappas)) array."""
    n = np.arange(1, box + 1, dtype=float)
    if med.infinite_depth:
        gs = n
    else:
        gs = n * np.tanh(med.depth * n)
    base = gs * med.gravity + 0.25 * med.gamma**2 * (gs / n) ** 2
    slope = gs * n**2
    return np.sqrt(base[:, None] + slope[:, None] * np.asarray(kappas, dtype=float)[None, :])


def scan(
    med: Medium,
    kappa_grid: Sequence[float],
    maxdeg: int,
    box: int,
    tau: float,
) -> List[Certificate]:
    """Certify non-resonance on a kappa grid.

    The kappa stored in med is ignored; each grid point gets its own
    Certificate.  Only momentum-zero non-super-action-preserving indices
    enter the minimum, so structural zeros never mask a genuine
    near-resonance.
    """
    grid = np.asarray(list(kappa_grid), dtype=float)
    if grid.size == 0:
        raise ValueError("kappa grid must be nonempty")

    indices: List[MultiIndex] = []
    coeff_rows: List[np.ndarray] = []
    const_terms: List[float] = []
    weights: List[float] = []
    for idx in enumerate_indices(maxdeg, box, momentum_zero=True):
        if is_sap(idx):
            continue
        nvec, cvec, mvec, dvec = divisor_data(idx)
        row = np.zeros(box)
        for n, c in zip(nvec, cvec):
            row[n - 1] = c
        if med.infinite_depth:
            const = 0.5 * med.gamma * sum(dvec)
        else:
            const = 0.5 * med.gamma * sum(
                d * math.tanh(med.depth * m) for m, d in zip(mvec, dvec)
            )
        indices.append(idx)
        coeff_rows.append(row)
        const_terms.append(const)
        weights.append(float(idx.maxmode) ** tau)

    certs: List[Certificate] = []
    if not indices:
        # Nothing to certify against: report an unconditionally clean pass.
        for kap in grid:
            rec = DivisorRecord(MultiIndex(), math.inf, False, float(kap))
            certs.append(Certificate(float(kap), maxdeg, box, tau, math.inf, rec))
        return certs

    coeffs = np.array(coeff_rows)
    consts = np.array(const_terms)
    wvec = np.array(weights)

    block = 256
    for start in range(0, grid.size, block):
        kap = grid[start : start + block]
        table = _omega_table(med, box, kap)
        divisors = coeffs @ table + consts[:, None]
        mags = np.abs(divisors)
        mags[mags < ZERO_DIVISOR] = 0.0
        scores = mags * wvec[:, None]
        pick = np.argmin(scores, axis=0)
        for col, k in enumerate(kap):
            i = int(pick[col])
            rec = DivisorRecord(indices[i], float(divisors[i, col]), False, float(k))
            certs.append(Certificate(float(k), maxdeg, box, tau, float(scores[i, col]), rec))
    return certs


def certificate_csv(certs: Iterable[Certificate]) -> str:
    lines = ["kappa,nu,tau,worst_index,worst_divisor"]
    for c in certs:
        lines.append(
            f"{c.kappa!r},{c.nu!r},{c.tau!r},{c.worst.index.encode()},{c.worst.divisor!r}"
        )
    return "\n".join(lines) + "\n"


# --- certificate functions bounding divisors on a kappa interval ---


def tau_exponent_deep(nmodes: int) -> int:
    """Exponent in the deep-water lower bound for cert_rho at scaled points."""
    return nmodes + 1 + 2 * math.comb(nmodes, 2)


def tau_exponent_finite(nmodes: int) -> int:
    return nmodes + 1 + 12 * math.comb(nmodes, 2)


def cert_x(nvec: Sequence[int], mvec: Sequence[int] = ()) -> Tuple[float, ...]:
    """Scaled evaluation point (x_0, x_1..x_A) with x_0 = 1/(sum n + sum m)."""
    total = sum(nvec) + sum(mvec)
    if total <= 0:
        raise ValueError("mode lists must carry positive total")
    x0 = 1.0 / total
    return (x0,) + tuple(x0 * math.sqrt(n) for n in nvec)


def cert_t(med: Medium, nvec: Sequence[int], mvec: Sequence[int] = ()) -> Tuple[float, ...]:
    """Depth factors sqrt(tanh(h*n)) for the finite-depth certificate."""
    if med.infinite_depth:
        raise ValueError("depth factors require finite depth")
    h = med.depth
    return tuple(math.sqrt(math.tanh(h * n)) for n in nvec) + tuple(
        math.sqrt(math.tanh(h * m)) for m in mvec
    )


def _lam_deep(y: float, x0: float, kappa: float, med: Medium) -> float:
    rad = kappa * y**6 + med.gravity * y**2 * x0**4 + 0.25 * med.gamma**2 * x0**6
    if rad < 0:
        raise ValueError(f"negative radicand {rad} outside admissible kappa range")
    return math.sqrt(rad)


def cert_f(c: Sequence[int], x: Sequence[float], kappa: float, med: Medium) -> float:
    """Deep-water divisor surrogate at a scaled point.

    c = (c_0, c_1, ..., c_A) pairs with x = (x_0, x_1, ..., x_A); c_0
    weights the vorticity half-shift.  At x = cert_x(nvec) this equals
    x_0**3 times the folded divisor with weights c on the listed modes.
    """
    if len(c) != len(x):
        raise ValueError("coefficient and point lengths differ")
    x0 = x[0]
    total = sum(ca * _lam_deep(xa, x0, kappa, med) for ca, xa in zip(c[1:], x[1:]))
    return total + 0.5 * med.gamma * c[0] * x0**3


def _lam_finite(y: float, s: float, x0: float, kappa: float, med: Medium) -> float:
    rad = kappa * y**6 + med.gravity * y**2 * x0**4 + 0.25 * med.gamma**2 * s**2 * x0**6
    if rad < 0:
        raise ValueError(f"negative radicand {rad} outside admissible kappa range")
    return math.sqrt(rad)


def cert_f_finite(
    c: Sequence[int],
    d: Sequence[int],
    x: Sequence[float],
    t: Sequence[float],
    kappa: float,
    med: Medium,
) -> float:
    """Finite-depth divisor surrogate; t carries the depth factors.

    x = (x_0, ..., x_A), t = (t_1, ..., t_{A+B}); the first A entries of
    t belong to the dispersion sum weighted by c, the trailing B to the
    vorticity sum weighted by d.
    """
    na = len(c)
    if len(x) != na + 1:
        raise ValueError("point length must be len(c) + 1")
    if len(t) != na + len(d):
        raise ValueError("depth factor length must be len(c) + len(d)")
    x0 = x[0]
    total = sum(
        ca * ta * _lam_finite(xa, ta, x0, kappa, med)
        for ca, xa, ta in zip(c, x[1:], t[:na])
    )
    total += 0.5 * med.gamma * x0**3 * sum(db * tb**2 for db, tb in zip(d, t[na:]))
    return total


def cert_rho(x: Sequence[float]) -> float:
    """Analytic weight prod x_a * prod_{a<b>=1} (x_a^2 - x_b^2)."""
    out = 1.0
    for xa in x:
        out *= xa
    tail = x[1:]
    for a in range(len(tail)):
        for b in range(a + 1, len(tail)):
            out *= tail[a] ** 2 - tail[b] ** 2
    return out


def cert_rho_finite(x: Sequence[float], t: Sequence[float], med: Medium) -> float:
    """Finite-depth analytic weight with depth-dressed pair factors."""
    nmodes = len(x) - 1
    x0 = x[0]
    out = x0
    for a in range(nmodes):
        out *= x[a + 1] * t[a]
    g = med.gravity
    q = 0.25 * med.gamma**2
    for a in range(nmodes):
        for b in range(a + 1, nmodes):
            xa, xb = x[a + 1], x[b + 1]
            ta, tb = t[a], t[b]
            out *= (g * xa**2 * x0**4 + q * ta**2 * x0**6) * xb**6 - (
                g * xb**2 * x0**4 + q * tb**2 * x0**6
            ) * xa**6
    return out


def badset_measure(
    med: Medium,
    interval: Tuple[float, float],
    alpha: float,
    npow: int,
    families: Iterable[Tuple[Sequence[int], Sequence[int]]],
    grid: int = 2001,
) -> float:
    """Grid estimate of the kappa set where some family divisor is small.

    families supplies (c, nvec) pairs; for each, kappa counts as bad when
    |cert_f(c, cert_x(nvec), kappa)| <= alpha * |cert_rho(cert_x(nvec))|**npow.
    Returns grid fraction times interval length, monotone in alpha by
    construction.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    lo, hi = interval
    if not 0 < lo < hi:
        raise ValueError("kappa interval must be positive and increasing")
    kappas = np.linspace(lo, hi, grid)
    bad = np.zeros(grid, dtype=bool)
    for c, nvec in families:
        x = cert_x(nvec)
        thresh = alpha * abs(cert_rho(x)) ** npow
        vals = np.array([abs(cert_f(c, x, float(k), med)) for k in kappas])
        bad |= vals <= thresh
    return float(bad.mean()) * (hi - lo)
