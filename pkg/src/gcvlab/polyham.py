"""Polynomial Hamiltonians and vector fields on a truncated Fourier lattice.

States live on the modes j in [-J, J] minus 0, one complex amplitude per
mode.  A Hamiltonian is a finite sum of monomials z^a * conj(z)^b recorded
by MultiIndex; the symmetrization factor of the underlying multilinear
form is absorbed into the stored coefficient, so evaluation, derivatives
and brackets are plain polynomial operations with no combinatorial
prefactors.
"""

from __future__ import annotations

import math
from typing import Dict, Iterable, List, Optional, Tuple

from gcvlab.medium import Medium, big_omega
from gcvlab.resonance import MultiIndex, is_sap

State = Dict[int, complex]

_IMAG_TOL = 1e-12


def monomial_value(idx: MultiIndex, Z: State) -> complex:
    """Value of z^a*conj(z)^b at the state, missing modes counting as 0."""
    out = 1.0 + 0.0j
    for j, a, b in idx.entries:
        zj = Z.get(j, 0.0 + 0.0j)
        if zj == 0:
            return 0.0 + 0.0j
        if a:
            out *= zj**a
        if b:
            out *= zj.conjugate() ** b
    return out


def _shift_down(idx: MultiIndex, j: int, side: int) -> Tuple[int, Optional[MultiIndex]]:
    """Formal partial derivative step: exponent pulled down, letter removed.

    side 0 differentiates in z_j, side 1 in conj(z_j).  Returns the old
    exponent (0 when the letter is absent) and the reduced index.
    """
    exps = {k: (a, b) for k, a, b in idx.entries}
    if j not in exps:
        return 0, None
    a, b = exps[j]
    if side == 0:
        if a == 0:
            return 0, None
        exps[j] = (a - 1, b)
        return a, MultiIndex(exps)
    if b == 0:
        return 0, None
    exps[j] = (a, b - 1)
    return b, MultiIndex(exps)


def _merge_term(acc: Dict[MultiIndex, complex], idx: MultiIndex, coeff: complex) -> None:
    if coeff == 0:
        return
    new = acc.get(idx, 0j) + coeff
    if new == 0:
        acc.pop(idx, None)
    else:
        acc[idx] = new


class PolyHamiltonian:
    """Finite polynomial in (z, conj z), graded by total degree.

    Instances are value-semantic: every operation returns a fresh object.
    Momentum-zero and reality are properties of the intended physical
    Hamiltonians, checked by validators rather than forced here, because
    brackets against formal monomials (single letters, test probes) are
    legitimate intermediate objects.
    """

    __slots__ = ("terms", "box")

    def __init__(self, terms: Optional[Dict[MultiIndex, complex]] = None, box: Optional[int] = None):
        clean: Dict[MultiIndex, complex] = {}
        for idx, c in (terms or {}).items():
            if c != 0:
                clean[idx] = complex(c)
        inferred = max((i.maxmode for i in clean), default=0)
        self.terms = clean
        self.box = inferred if box is None else int(box)
        if inferred > self.box:
            raise ValueError(f"monomial mode {inferred} exceeds box {self.box}")

    # -- container plumbing --

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        return isinstance(other, PolyHamiltonian) and self.terms == other.terms

    def __repr__(self) -> str:
        return f"PolyHamiltonian({len(self.terms)} monomials, box={self.box})"

    def coeff(self, idx: MultiIndex) -> complex:
        return self.terms.get(idx, 0j)

    def degrees(self) -> List[int]:
        return sorted({i.length for i in self.terms})

    def piece(self, deg: int) -> "PolyHamiltonian":
        return PolyHamiltonian(
            {i: c for i, c in self.terms.items() if i.length == deg}, self.box
        )

    def max_coeff(self) -> float:
        return max((abs(c) for c in self.terms.values()), default=0.0)

    def add(self, other: "PolyHamiltonian") -> "PolyHamiltonian":
        acc = dict(self.terms)
        for idx, c in other.terms.items():
            _merge_term(acc, idx, c)
        return PolyHamiltonian(acc, max(self.box, other.box))

    def scale(self, factor: complex) -> "PolyHamiltonian":
        return PolyHamiltonian({i: factor * c for i, c in self.terms.items()}, self.box)

    def __add__(self, other: "PolyHamiltonian") -> "PolyHamiltonian":
        return self.add(other)

    def __sub__(self, other: "PolyHamiltonian") -> "PolyHamiltonian":
        return self.add(other.scale(-1.0))

    def split_at(self, maxdeg: int) -> Tuple["PolyHamiltonian", "PolyHamiltonian"]:
        """(degrees <= maxdeg, degrees > maxdeg); nothing is lost."""
        low = {i: c for i, c in self.terms.items() if i.length <= maxdeg}
        high = {i: c for i, c in self.terms.items() if i.length > maxdeg}
        return PolyHamiltonian(low, self.box), PolyHamiltonian(high, self.box)

    # -- validators --

    def is_momentum_zero(self) -> bool:
        return all(i.momentum == 0 for i in self.terms)

    def reality_defect(self) -> float:
        """Max |conj(coeff(a,b)) - coeff(b,a)| over the support."""
        worst = 0.0
        for idx, c in self.terms.items():
            worst = max(worst, abs(c.conjugate() - self.coeff(idx.conj())))
        return worst

    def is_real(self, tol: float = _IMAG_TOL) -> bool:
        scale = max(1.0, self.max_coeff())
        return self.reality_defect() <= tol * scale

    # -- evaluation and calculus --

    def evaluate_complex(self, Z: State) -> complex:
        return sum((c * monomial_value(i, Z) for i, c in self.terms.items()), 0j)

    def evaluate(self, Z: State) -> float:
        val = self.evaluate_complex(Z)
        scale = max(1.0, abs(val))
        if abs(val.imag) > _IMAG_TOL * scale:
            raise ValueError(
                f"evaluation has imaginary residue {val.imag:.3e}; Hamiltonian is not real"
            )
        return val.real

    def derivative(self, j: int, side: int) -> "PolyHamiltonian":
        """Partial in z_j (side 0) or conj(z_j) (side 1), as a polynomial."""
        acc: Dict[MultiIndex, complex] = {}
        for idx, c in self.terms.items():
            e, reduced = _shift_down(idx, j, side)
            if e:
                _merge_term(acc, reduced, e * c)
        return PolyHamiltonian(acc, self.box)

    def gradient(self) -> "FourierField":
        """Gradient with respect to the mode-flipped bilinear pairing."""
        comps: Dict[Tuple[int, int], Dict[MultiIndex, complex]] = {}
        for (j, side) in self._active_letters():
            sigma = 1 if side == 0 else -1
            # (grad H)^sigma_j = dH/du^sigma_{-j}: the pairing flips the
            # output mode, not the component side.
            part = self.derivative(-j, side)
            if part.terms:
                comps[(j, sigma)] = dict(part.terms)
        return FourierField(comps, self.box)

    def ham_field(self) -> "FourierField":
        """Hamiltonian vector field, component (k,s) = -i*s* dH/du^{-s}_k."""
        comps: Dict[Tuple[int, int], Dict[MultiIndex, complex]] = {}
        for idx in self.terms:
            for j, a, b in idx.entries:
                if a:
                    comps.setdefault((j, -1), {})
                if b:
                    comps.setdefault((j, 1), {})
        for (k, sigma) in list(comps):
            part = self.derivative(k, 0 if sigma == -1 else 1)
            scaled = {i: -1j * sigma * c for i, c in part.terms.items()}
            if scaled:
                comps[(k, sigma)] = scaled
            else:
                del comps[(k, sigma)]
        return FourierField(comps, self.box)

    def _active_letters(self):
        letters = set()
        for idx in self.terms:
            for j, a, b in idx.entries:
                if a:
                    letters.add((-j, 0))
                    letters.add((j, 0))
                if b:
                    letters.add((-j, 1))
                    letters.add((j, 1))
        return sorted(letters)

    def poisson(self, other: "PolyHamiltonian") -> "PolyHamiltonian":
        """Canonical bracket i * sum_j (dF/dzb_j dG/dz_j - dF/dz_j dG/dzb_j)."""
        acc: Dict[MultiIndex, complex] = {}
        for i1, c1 in self.terms.items():
            for i2, c2 in other.terms.items():
                modes = set(i1.support) & set(i2.support)
                for j in modes:
                    b1, r1 = _shift_down(i1, j, 1)
                    a2, r2 = _shift_down(i2, j, 0)
                    if b1 and a2:
                        _merge_term(acc, r1.merge(r2), 1j * c1 * c2 * b1 * a2)
                    a1, s1 = _shift_down(i1, j, 0)
                    b2, s2 = _shift_down(i2, j, 1)
                    if a1 and b2:
                        _merge_term(acc, s1.merge(s2), -1j * c1 * c2 * a1 * b2)
        return PolyHamiltonian(acc, max(self.box, other.box))

    def sap_split(self) -> Tuple["PolyHamiltonian", "PolyHamiltonian"]:
        sap = {i: c for i, c in self.terms.items() if is_sap(i)}
        rest = {i: c for i, c in self.terms.items() if not is_sap(i)}
        return PolyHamiltonian(sap, self.box), PolyHamiltonian(rest, self.box)

    # -- serialization --

    def serialize(self) -> str:
        lines = []
        for idx in sorted(self.terms, key=lambda i: (i.length, i.encode())):
            c = self.terms[idx]
            letters = " ".join(
                f"{j}:{'+' if side == 1 else '-'}:{e}"
                for j, side, e in _letter_runs(idx)
            )
            lines.append(f"deg {idx.length} | {letters} | {c.real!r} {c.imag!r}")
        return "\n".join(lines) + ("\n" if lines else "")

    @classmethod
    def deserialize(cls, text: str, box: Optional[int] = None) -> "PolyHamiltonian":
        terms: Dict[MultiIndex, complex] = {}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            head, mid, tail = (part.strip() for part in line.split("|"))
            deg = int(head.split()[1])
            exps: Dict[int, List[int]] = {}
            if mid:
                for tok in mid.split():
                    js, side, es = tok.split(":")
                    j, e = int(js), int(es)
                    slot = exps.setdefault(j, [0, 0])
                    slot[0 if side == "+" else 1] += e
            idx = MultiIndex({j: (a, b) for j, (a, b) in exps.items()})
            if idx.length != deg:
                raise ValueError(f"degree mismatch on line: {line}")
            re_s, im_s = tail.split()
            terms[idx] = complex(float(re_s), float(im_s))
        return cls(terms, box)


def _letter_runs(idx: MultiIndex):
    for j, a, b in idx.entries:
        if a:
            yield j, 1, a
        if b:
            yield j, -1, b


def truncate(H: PolyHamiltonian, maxdeg: int) -> PolyHamiltonian:
    """Keep degrees <= maxdeg; use split_at when the tail must be kept."""
    return H.split_at(maxdeg)[0]


class FourierField:
    """Polynomial vector field: per output letter (k, sigma) a polynomial.

    sigma +1 components drive dz_k/dt; on real-to-real states the -1
    components are their conjugates whenever the source Hamiltonian is
    real, which eval_plus exploits.
    """

    __slots__ = ("components", "box")

    def __init__(
        self,
        components: Optional[Dict[Tuple[int, int], Dict[MultiIndex, complex]]] = None,
        box: Optional[int] = None,
    ):
        comps: Dict[Tuple[int, int], Dict[MultiIndex, complex]] = {}
        top = 0
        for key, poly in (components or {}).items():
            clean = {i: complex(c) for i, c in poly.items() if c != 0}
            if clean:
                comps[key] = clean
                top = max(top, abs(key[0]), max(i.maxmode for i in clean))
        self.components = comps
        self.box = top if box is None else int(box)

    def __eq__(self, other) -> bool:
        return isinstance(other, FourierField) and self.components == other.components

    def __repr__(self) -> str:
        n = sum(len(p) for p in self.components.values())
        return f"FourierField({len(self.components)} components, {n} monomials)"

    def component(self, k: int, sigma: int) -> Dict[MultiIndex, complex]:
        return self.components.get((k, sigma), {})

    def max_coeff(self) -> float:
        return max(
            (abs(c) for poly in self.components.values() for c in poly.values()),
            default=0.0,
        )

    def degrees(self) -> List[int]:
        return sorted({i.length for poly in self.components.values() for i in poly})

    def add(self, other: "FourierField") -> "FourierField":
        comps = {k: dict(v) for k, v in self.components.items()}
        for key, poly in other.components.items():
            acc = comps.setdefault(key, {})
            for idx, c in poly.items():
                _merge_term(acc, idx, c)
        return FourierField(comps, max(self.box, other.box))

    def scale(self, factor: complex) -> "FourierField":
        return FourierField(
            {k: {i: factor * c for i, c in poly.items()} for k, poly in self.components.items()},
            self.box,
        )

    def eval_at(self, Z: State) -> Dict[Tuple[int, int], complex]:
        return {
            key: sum((c * monomial_value(i, Z) for i, c in poly.items()), 0j)
            for key, poly in self.components.items()
        }

    def eval_plus(self, Z: State) -> Dict[int, complex]:
        """The sigma=+1 components at a state: the dz/dt right-hand side."""
        out: Dict[int, complex] = {}
        for (k, sigma), poly in self.components.items():
            if sigma == 1:
                out[k] = sum((c * monomial_value(i, Z) for i, c in poly.items()), 0j)
        return out

    def momentum_defect(self) -> int:
        """Count of monomials violating momentum(index) = sigma*k."""
        bad = 0
        for (k, sigma), poly in self.components.items():
            for idx in poly:
                if idx.momentum != sigma * k:
                    bad += 1
        return bad

    def reality_defect(self) -> float:
        """Max coefficient mismatch of conj(X^{s}_{k}) vs X^{-s}_{k}.

        The conjugate of a monomial swaps exponent sides, so the check is
        purely coefficientwise.
        """
        worst = 0.0
        for (k, sigma), poly in self.components.items():
            mirror = self.component(k, -sigma)
            for idx, c in poly.items():
                worst = max(worst, abs(c.conjugate() - mirror.get(idx.conj(), 0j)))
        return worst


def field_to_hamiltonian(X: FourierField) -> PolyHamiltonian:
    """Reassemble the Hamiltonian whose field is X.

    Uses the homogeneity identity: summing u^{-s}_k times the (k,s)
    component over all letters counts every monomial of H once per letter,
    so dividing by the total degree restores unit weight.
    """
    acc: Dict[MultiIndex, complex] = {}
    for (k, sigma), poly in X.components.items():
        extra = MultiIndex({k: (0, 1) if sigma == 1 else (1, 0)})
        for idx, c in poly.items():
            _merge_term(acc, idx.merge(extra), 1j * sigma * c / (idx.length + 1))
    return PolyHamiltonian(acc)


def superaction(Z: State, n: int) -> float:
    if n < 1:
        raise ValueError("superaction modes are positive")
    zp = Z.get(n, 0j)
    zm = Z.get(-n, 0j)
    return abs(zp) ** 2 + abs(zm) ** 2


def superaction_hamiltonian(n: int) -> PolyHamiltonian:
    if n < 1:
        raise ValueError("superaction modes are positive")
    return PolyHamiltonian({MultiIndex({n: (1, 1)}): 1.0, MultiIndex({-n: (1, 1)}): 1.0})


def momentum_hamiltonian(box: int) -> PolyHamiltonian:
    terms = {
        MultiIndex({j: (1, 1)}): float(j)
        for j in range(-box, box + 1)
        if j != 0
    }
    return PolyHamiltonian(terms, box)


def diagonal_hamiltonian(med: Medium, box: int) -> PolyHamiltonian:
    """Sum of Omega_j |z_j|^2 over the box: the linear-dynamics generator."""
    terms = {
        MultiIndex({j: (1, 1)}): complex(big_omega(med, j))
        for j in range(-box, box + 1)
        if j != 0
    }
    return PolyHamiltonian(terms, box)
