"""Exact finite Fourier representation of real 2*pi-periodic functions.

A field is stored as complex coefficients c_k for integer modes
-max_mode..max_mode with f(x) = sum_k c_k exp(i k x).  Real-valuedness is
kept as an exact structural invariant: c_{-k} == conj(c_k) after every
operation.  All algebra here (derivatives, products, norms) is carried out
on coefficients without any grid, so identities between trigonometric
polynomials can be certified to roundoff; collocation grids appear only in
``grid_evaluate``/``grid_transform`` and inside the time stepper.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import UndersampledGrid

TWO_PI = 2.0 * math.pi

# Construction rejects inputs whose conjugate-symmetry defect exceeds this
# (relative to the largest coefficient); below it the defect is averaged away.
HERMITIAN_TOL = 1e-12


def _symmetrize(coeffs: np.ndarray) -> np.ndarray:
    """Average c_k with conj(c_{-k}) so the realness invariant holds exactly."""
    return 0.5 * (coeffs + np.conj(coeffs[::-1]))


def _trim(coeffs: np.ndarray) -> np.ndarray:
    """Drop exactly-zero outer modes; keep at least the k=0 slot."""
    n = coeffs.shape[0]
    half = n // 2
    keep = half
    while keep > 0 and coeffs[half + keep] == 0 and coeffs[half - keep] == 0:
        keep -= 1
    if keep == half:
        return coeffs
    return coeffs[half - keep : half + keep + 1]


def _build(coeffs: np.ndarray) -> "SpectralField":
    c = _trim(coeffs)
    return SpectralField(c, (c.shape[0] - 1) // 2)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real trigonometric polynomial held as centered Fourier coefficients."""

    coeffs: np.ndarray  # complex128, index i holds mode i - max_mode
    max_mode: int

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.shape[0] != 2 * self.max_mode + 1:
            raise ValueError("coefficient array must have length 2*max_mode + 1")
        scale = max(1.0, float(np.max(np.abs(c))) if c.size else 1.0)
        defect = float(np.max(np.abs(c - np.conj(c[::-1]))))
        if defect > HERMITIAN_TOL * scale:
            raise ValueError(f"coefficients are not conjugate-symmetric (defect {defect:.3e})")
        c = _symmetrize(c)
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # -- construction -------------------------------------------------

    @staticmethod
    def zero() -> "SpectralField":
        return SpectralField(np.zeros(1, dtype=np.complex128), 0)

    @staticmethod
    def from_modes(modes: Mapping[int, complex]) -> "SpectralField":
        """Build from a {k: c_k} map; negative modes are implied by symmetry.

        If both k and -k are supplied they must already be conjugate.
        """
        if not modes:
            return SpectralField.zero()
        kmax = max(abs(int(k)) for k in modes)
        c = np.zeros(2 * kmax + 1, dtype=np.complex128)
        seen = set()
        for k, v in modes.items():
            k = int(k)
            c[kmax + k] += complex(v)
            seen.add(k)
        for k in list(seen):
            if -k not in seen:
                c[kmax - k] = np.conj(c[kmax + k])
        return SpectralField(c, kmax)

    @staticmethod
    def constant(value: float) -> "SpectralField":
        return SpectralField.from_modes({0: complex(value)})

    # -- accessors ----------------------------------------------------

    def coeff(self, k: int) -> complex:
        if abs(k) > self.max_mode:
            return 0.0 + 0.0j
        return complex(self.coeffs[self.max_mode + k])

    @property
    def mean(self) -> float:
        """Spatial average (1/2pi) * integral of f."""
        return float(self.coeffs[self.max_mode].real)

    def support(self, tol: float = 0.0) -> tuple[int, ...]:
        """Modes k >= 0 whose coefficient magnitude exceeds tol."""
        return tuple(
            k for k in range(0, self.max_mode + 1) if abs(self.coeffs[self.max_mode + k]) > tol
        )

    def hermitian_defect(self) -> float:
        return float(np.max(np.abs(self.coeffs - np.conj(self.coeffs[::-1]))))

    def is_mean_zero(self, tol: float = 1e-12) -> bool:
        return abs(self.mean) <= tol

    # -- algebra ------------------------------------------------------

    def _centered(self, kmax: int) -> np.ndarray:
        """Coefficients re-centered on a possibly larger mode range."""
        if kmax == self.max_mode:
            return np.asarray(self.coeffs)
        out = np.zeros(2 * kmax + 1, dtype=np.complex128)
        out[kmax - self.max_mode : kmax + self.max_mode + 1] = self.coeffs
        return out

    def __add__(self, other: "SpectralField") -> "SpectralField":
        kmax = max(self.max_mode, other.max_mode)
        return _build(self._centered(kmax) + other._centered(kmax))

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        kmax = max(self.max_mode, other.max_mode)
        return _build(self._centered(kmax) - other._centered(kmax))

    def __neg__(self) -> "SpectralField":
        return SpectralField(-np.asarray(self.coeffs), self.max_mode)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(np.asarray(self.coeffs) * float(scalar), self.max_mode)

    __rmul__ = __mul__

    def derivative(self, order: int = 1) -> "SpectralField":
        return derivative(self, order)

    def norm(self, s=0) -> float:
        return sobolev_norm(self, s)

    def translate(self, tau: float) -> "SpectralField":
        """Shift argument: returns g with g(x) = f(x + tau)."""
        ks = np.arange(-self.max_mode, self.max_mode + 1)
        return SpectralField(np.asarray(self.coeffs) * np.exp(1j * ks * tau), self.max_mode)

    def project(self, modes: Iterable[int]) -> "SpectralField":
        """Keep only coefficients whose |k| lies in the given mode set."""
        allowed = {abs(int(m)) for m in modes}
        c = np.array(self.coeffs)
        for k in range(-self.max_mode, self.max_mode + 1):
            if abs(k) not in allowed:
                c[self.max_mode + k] = 0.0
        return _build(c)

    def isclose(self, other: "SpectralField", tol: float = 1e-12) -> bool:
        return coeff_distance(self, other) <= tol

    # -- serialization ------------------------------------------------

    def to_json_dict(self) -> dict:
        """External format: only k >= 0 stored, negatives implied by symmetry."""
        modes = []
        for k in range(0, self.max_mode + 1):
            c = self.coeffs[self.max_mode + k]
            if c != 0:
                modes.append([k, float(c.real), float(c.imag)])
        return {"modes": modes}

    @staticmethod
    def from_json_dict(data: Mapping) -> "SpectralField":
        entries = data.get("modes", [])
        mapping: dict[int, complex] = {}
        for k, re, im in entries:
            k = int(k)
            if k < 0:
                raise ValueError("serialized fields store only modes k >= 0")
            if k in mapping:
                raise ValueError(f"duplicate mode {k} in serialized field")
            mapping[k] = complex(re, im)
        if 0 in mapping and abs(mapping[0].imag) > HERMITIAN_TOL:
            raise ValueError("mode 0 of a real field must be real")
        return SpectralField.from_modes(mapping)


@dataclass(frozen=True)
class SobolevIndex:
    """Nonnegative integer order selecting which H^s norm is meant."""

    s: int

    def __post_init__(self):
        if int(self.s) != self.s or self.s < 0:
            raise ValueError("Sobolev order must be a nonnegative integer")


def _sobolev_order(s) -> int:
    order = int(getattr(s, "s", s))
    if order < 0:
        raise ValueError("Sobolev order must be a nonnegative integer")
    return order


def from_trig(terms: Sequence[tuple[int, float, float]]) -> SpectralField:
    """Field sum_j a_j sin(k_j x) + b_j cos(k_j x) from (k, a, b) triples.

    Modes must be distinct and >= 1, so the result always has zero mean.
    """
    seen = set()
    mapping: dict[int, complex] = {}
    for k, a, b in terms:
        k = int(k)
        if k < 1:
            raise ValueError("trigonometric terms require k >= 1")
        if k in seen:
            raise ValueError(f"duplicate mode {k} in trigonometric input")
        seen.add(k)
        mapping[k] = complex(0.5 * b, -0.5 * a)
    return SpectralField.from_modes(mapping)


def sobolev_norm(f: SpectralField, s=0) -> float:
    """H^s norm (2*pi * sum_k (1+k^2)^s |c_k|^2)^(1/2); s=0 is the L2 norm."""
    order = _sobolev_order(s)
    ks = np.arange(-f.max_mode, f.max_mode + 1, dtype=float)
    weights = (1.0 + ks * ks) ** order
    return float(math.sqrt(TWO_PI * float(np.sum(weights * np.abs(f.coeffs) ** 2))))


def derivative(f: SpectralField, order: int = 1) -> SpectralField:
    """Coefficient-wise multiplication by (i k)^order; the mean always drops."""
    if order < 0:
        raise ValueError("derivative order must be >= 0")
    if order == 0:
        return f
    ks = np.arange(-f.max_mode, f.max_mode + 1, dtype=float)
    return _build(np.asarray(f.coeffs) * (1j * ks) ** order)


def advection(f: SpectralField, g: SpectralField) -> SpectralField:
    """Product f * dg/dx by exact coefficient convolution (no aliasing).

    The output support is at most the sum of the input supports.  For f == g
    this is the quadratic transport term of the PDE and has exactly zero mean.
    """
    gp = derivative(g, 1)
    return _build(np.convolve(np.asarray(f.coeffs), np.asarray(gp.coeffs)))


def cubic_integral(f: SpectralField) -> float:
    """Integral of f^3 over the torus, via two exact convolutions."""
    c = np.asarray(f.coeffs)
    kmax = f.max_mode
    sq = np.convolve(c, c)  # modes -2*kmax .. 2*kmax, centered at index 2*kmax
    window = sq[kmax : 3 * kmax + 1]  # modes -kmax .. kmax
    cube_mean = np.sum(window * c[::-1])
    return float(TWO_PI * cube_mean.real)


def coeff_distance(f: SpectralField, g: SpectralField) -> float:
    """Largest coefficient magnitude of f - g."""
    kmax = max(f.max_mode, g.max_mode)
    return float(np.max(np.abs(f._centered(kmax) - g._centered(kmax))))


def grid_evaluate(f: SpectralField, n_points: int) -> np.ndarray:
    """Sample f on the uniform grid x_j = 2*pi*j/n.

    Requires n >= 2*max_mode + 2 so that grid_transform recovers f exactly.
    """
    if n_points < 2 * f.max_mode + 2:
        raise UndersampledGrid(
            f"{n_points} points cannot represent max mode {f.max_mode}; "
            f"need at least {2 * f.max_mode + 2}"
        )
    spec = np.zeros(n_points, dtype=np.complex128)
    for k in range(-f.max_mode, f.max_mode + 1):
        spec[k % n_points] = f.coeffs[f.max_mode + k]
    return np.fft.ifft(spec).real * n_points


def grid_transform(samples: Sequence[float]) -> SpectralField:
    """Recover a field from uniform real samples (inverse of grid_evaluate)."""
    u = np.asarray(samples, dtype=float)
    n = u.shape[0]
    if n < 2:
        raise UndersampledGrid("need at least two samples")
    spec = np.fft.fft(u) / n
    kmax = (n - 1) // 2
    c = np.zeros(2 * kmax + 1, dtype=np.complex128)
    for k in range(-kmax, kmax + 1):
        c[kmax + k] = spec[k % n]
    return _build(_symmetrize(c))
