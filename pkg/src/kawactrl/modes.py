"""Integer mode-set saturation and certified quadratic decompositions.

The control space only spans a finite, symmetric set of Fourier modes.  New
modes become reachable through the quadratic transport term: products of
low-mode fields excite sums and differences of their mode indices.  This
module tracks which integers appear after repeated closure under pairwise
sums, and writes any target supported on newly reached modes exactly in the
form ``eta - sum_i zeta_i * d/dx zeta_i`` with every piece supported on the
previous mode set.  Decompositions are certified by exact convolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import ConstantNotRepresentable, DecompositionError, SearchExhausted
from .fields import SpectralField, advection, coeff_distance

# A certificate must close to this absolute tolerance (relative for large targets).
CERTIFICATE_TOL = 1e-12


@dataclass(frozen=True)
class ModeSet:
    """Finite set of nonzero integer mode indices."""

    elems: frozenset[int]

    def __post_init__(self):
        elems = frozenset(int(e) for e in self.elems)
        if 0 in elems:
            raise ValueError("mode sets exclude 0")
        object.__setattr__(self, "elems", elems)

    @staticmethod
    def of(items: Iterable[int]) -> "ModeSet":
        return ModeSet(frozenset(int(i) for i in items))

    @staticmethod
    def symmetric(items: Iterable[int]) -> "ModeSet":
        """Symmetric closure {+-k} of the given indices."""
        base = {int(i) for i in items}
        return ModeSet(frozenset(base | {-i for i in base}))

    @property
    def is_symmetric(self) -> bool:
        return self.elems == frozenset(-e for e in self.elems)

    def __iter__(self):
        return iter(sorted(self.elems))

    def __contains__(self, k: int) -> bool:
        return int(k) in self.elems

    def __len__(self) -> int:
        return len(self.elems)


@dataclass(frozen=True)
class SaturationSequence:
    """Nested mode sets produced by closure under pairwise sums."""

    levels: tuple[frozenset[int], ...]

    def __post_init__(self):
        for a, b in zip(self.levels, self.levels[1:]):
            if not a <= b:
                raise ValueError("saturation levels must be nested")
        for lv in self.levels:
            if lv != frozenset(-e for e in lv):
                raise ValueError("every saturation level must be symmetric")

    def level(self, n: int) -> frozenset[int]:
        return self.levels[n]

    def __len__(self) -> int:
        return len(self.levels)


def is_generator(modes: ModeSet) -> bool:
    """True iff the absolute values of the set have greatest common divisor 1."""
    if len(modes) == 0:
        raise ValueError("mode set must be nonempty")
    g = 0
    for e in modes.elems:
        g = math.gcd(g, abs(e))
    return g == 1


def closure_step(elems: frozenset[int]) -> frozenset[int]:
    """One closure step: keep the set and add all pairwise sums."""
    items = sorted(elems)
    sums = {i + j for i in items for j in items}
    return frozenset(elems | sums)


def saturate(start: ModeSet, n: int) -> SaturationSequence:
    """Levels 0..n of the sum-closure starting from a symmetric nonzero set."""
    if not start.is_symmetric:
        raise ValueError("saturation requires a symmetric starting set")
    if len(start) == 0:
        raise ValueError("saturation requires a nonempty starting set")
    if n < 0:
        raise ValueError("level count must be nonnegative")
    levels = [frozenset(start.elems)]
    for _ in range(n):
        levels.append(closure_step(levels[-1]))
    return SaturationSequence(tuple(levels))


def min_level(
    k: int,
    start: ModeSet,
    *,
    max_levels: int = 40,
    window: int | None = None,
) -> tuple[int, tuple[tuple[int, int, int], ...]]:
    """Smallest closure level containing k, with a witness chain of sums.

    Each witness entry ``(v, i, j)`` means v = i + j where i and j are
    either starting modes or values produced by earlier entries.  The search
    is confined to |value| <= window (sums escaping the window are ignored)
    and to at most ``max_levels`` levels; when k is still missing and the
    windowed sets stop growing, or the level cap is reached, the search is
    reported as exhausted.  Both bounds are generous for starting sets and
    targets of the size exercised here.
    """
    if not start.is_symmetric:
        raise ValueError("reachability search requires a symmetric starting set")
    k = int(k)
    if k in start.elems:
        return 0, ()
    bound = window if window is not None else max(64, 4 * (abs(k) + max(abs(e) for e in start.elems)))
    first: dict[int, int] = {v: 0 for v in start.elems}
    parents: dict[int, tuple[int, int]] = {}
    current = set(start.elems)
    for level in range(1, max_levels + 1):
        items = sorted(current)
        new: dict[int, tuple[int, int]] = {}
        for i in items:
            for j in items:
                v = i + j
                if abs(v) <= bound and v not in first and v not in new:
                    new[v] = (i, j)
        if not new:
            raise SearchExhausted(
                f"mode {k} not reachable from {sorted(start.elems)}: closure stabilized"
            )
        for v in sorted(new):
            first[v] = level
            parents[v] = new[v]
        current.update(new)
        if k in parents:
            return level, _witness_chain(k, first, parents)
    raise SearchExhausted(f"mode {k} not reached from {sorted(start.elems)} within {max_levels} levels")


def _witness_chain(
    k: int,
    first: dict[int, int],
    parents: dict[int, tuple[int, int]],
) -> tuple[tuple[int, int, int], ...]:
    steps: list[tuple[int, int, int]] = []
    emitted: set[int] = set()

    def visit(v: int) -> None:
        if first[v] == 0 or v in emitted:
            return
        i, j = parents[v]
        visit(i)
        visit(j)
        emitted.add(v)
        steps.append((v, i, j))

    visit(k)
    return tuple(steps)


@dataclass(frozen=True)
class TrigDecomposition:
    """Certified representation target = eta - sum_i zeta_i * d/dx zeta_i."""

    target: SpectralField
    eta: SpectralField
    zetas: tuple[SpectralField, ...]
    residual: float

    def reconstruct(self) -> SpectralField:
        out = self.eta
        for z in self.zetas:
            out = out - advection(z, z)
        return out

    def to_json_dict(self) -> dict:
        return {
            "target": self.target.to_json_dict(),
            "eta": self.eta.to_json_dict(),
            "zetas": [z.to_json_dict() for z in self.zetas],
            "residual": self.residual,
        }


def verify_decomposition(d: TrigDecomposition) -> float:
    """Largest coefficient of eta - sum_i B(zeta_i) - target, by exact convolution."""
    return coeff_distance(d.reconstruct(), d.target)


def _shifted_wave(m: int, tau: float, weight: float, kind: str, acc: dict[int, complex]) -> None:
    """Accumulate weight * sin(m(x+tau)) or weight * cos(m(x+tau)) into acc.

    Entries are Fourier coefficients at |m| >= 1; m may be negative.
    """
    c, s = math.cos(m * tau), math.sin(m * tau)
    if kind == "sin":
        a, b = weight * c, weight * s  # a sin(mx) + b cos(mx)
    else:
        a, b = -weight * s, weight * c
    km = abs(m)
    if m < 0:
        a = -a
    acc[km] = acc.get(km, 0.0 + 0.0j) + complex(0.5 * b, -0.5 * a)


def _pair_for(k: int, elems: frozenset[int]) -> tuple[int, int] | None:
    """Deterministic generator pair (J, P) with J - P == k, smallest |J| first."""
    best: tuple[int, int] | None = None
    for j in sorted(elems, key=lambda e: (abs(e), e < 0)):
        p = j - k
        if p in elems:
            best = (j, p)
            break
    return best


def decompose(target: SpectralField, modes: ModeSet | Iterable[int]) -> TrigDecomposition:
    """Write target as eta - sum_i zeta_i * d/dx zeta_i over the given modes.

    Target modes already inside the set pass straight into eta (a constant
    component is allowed only when the set contains 0, which happens at
    saturation levels beyond the first).  Every remaining mode k is produced
    by one generator pair (J, P) with J - P = k: the combination

        -B(sin(Jy) + sin(Py)) - B(cos(Jy) + cos(Py)),  y = x + tau,

    equals (J - P) sin((J-P)y) with no other modes, so a phase shift tau and
    a positive amplitude reproduce the mode's sine/cosine content and sign
    exactly.  At most two zeta terms per target mode; the pair with the
    smallest |J| is chosen, preferring positive J on ties.
    """
    elems = modes.elems if isinstance(modes, ModeSet) else frozenset(int(m) for m in modes)
    if elems != frozenset(-e for e in elems):
        raise DecompositionError("decomposition requires a symmetric mode set")
    reachable = closure_step(elems)
    scale = max(1.0, float(np.max(np.abs(target.coeffs))))

    eta_modes: dict[int, complex] = {}
    zetas: list[SpectralField] = []
    for k in target.support(tol=0.0):
        ck = target.coeff(k)
        if k == 0:
            if 0 in elems:
                eta_modes[0] = ck
                continue
            raise ConstantNotRepresentable(
                "constant targets need mode 0, which the base control set excludes"
            )
        if k in elems:
            eta_modes[k] = ck
            continue
        if k not in reachable:
            raise DecompositionError(
                f"target mode {k} is outside one closure step of {sorted(elems)}"
            )
        a_sin, b_cos = -2.0 * ck.imag, 2.0 * ck.real
        rho = math.hypot(a_sin, b_cos)
        if rho == 0.0:
            continue
        phi = math.atan2(b_cos, a_sin)
        tau = phi / k
        mu = rho / k
        pair = _pair_for(k, elems)
        if pair is None:  # unreachable given the closure check above
            raise DecompositionError(f"no generator pair sums to mode {k}")
        J, P = pair
        w = math.sqrt(mu)
        for kind in ("sin", "cos"):
            acc: dict[int, complex] = {}
            _shifted_wave(J, tau, w, kind, acc)
            _shifted_wave(P, tau, w, kind, acc)
            acc = {m: c for m, c in acc.items() if c != 0}
            if acc:
                zetas.append(SpectralField.from_modes(acc))

    eta = SpectralField.from_modes(eta_modes) if eta_modes else SpectralField.zero()
    deco = TrigDecomposition(target=target, eta=eta, zetas=tuple(zetas), residual=0.0)
    residual = verify_decomposition(deco)
    if residual > CERTIFICATE_TOL * scale:
        raise DecompositionError(f"certificate failed to close (residual {residual:.3e})")
    return TrigDecomposition(target=target, eta=eta, zetas=tuple(zetas), residual=residual)
