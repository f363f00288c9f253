"""Periodic grid, field containers, synthesis recipes, and the DFT layer.

Conventions
-----------
The domain is the box [0, L)^n sampled at N points per axis (N a power of
two).  Wavenumbers are xi = 2*pi*k/L with integer k in {-N/2, ..., N/2-1},
stored in FFT order.  The forward transform is scaled so that the discrete
Parseval identity holds with each side weighted by its own cell volume:

    sum |f|^2 * (L/N)^n  ==  sum |fhat|^2 * (2*pi/L)^n

Whole space is emulated by fields concentrated in the central half-box
[L/4, 3L/4)^n; :func:`contamination` measures the |f|-mass outside it and
every whole-space experiment is expected to keep it below 1e-6.

Odd multiplier symbols (first derivatives, Riesz transforms) are built
from a Nyquist-zeroed copy of the frequency lattice so that real fields
map to real fields without asymmetric-mode artifacts.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

from .errors import PreconditionError, RepresentationError

PHYSICAL = "physical"
SPECTRAL = "spectral"

HALF_BOX_TOL = 1e-6


def _is_power_of_two(m: int) -> bool:
    return m >= 1 and (m & (m - 1)) == 0


@dataclass(frozen=True)
class GridSpec:
    """Discrete periodic box: dimension n, N points per axis, side length L."""

    n: int
    N: int
    L: float

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise PreconditionError(f"dimension n={self.n} not in {{1, 2, 3}}")
        if not _is_power_of_two(self.N) or self.N < 8:
            raise PreconditionError(f"N={self.N} must be a power of two >= 8")
        if not self.L > 0:
            raise PreconditionError(f"box length L={self.L} must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def spacing(self) -> float:
        return self.L / self.N

    @property
    def cell_volume(self) -> float:
        return (self.L / self.N) ** self.n

    @property
    def nyquist(self) -> float:
        """Largest resolvable |xi| per axis, pi*N/L."""
        return np.pi * self.N / self.L

    def axis_frequencies(self, zero_nyquist: bool = False) -> np.ndarray:
        """1-D wavenumbers 2*pi*k/L in FFT order; optionally kill k = -N/2."""
        k = 2 * np.pi * np.fft.fftfreq(self.N, d=self.spacing)
        if zero_nyquist:
            k = k.copy()
            k[self.N // 2] = 0.0
        return k

    @cached_property
    def frequencies(self) -> tuple[np.ndarray, ...]:
        """Per-axis wavenumber meshes, shape (N,)*n, FFT order."""
        axes = [self.axis_frequencies() for _ in range(self.n)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def deriv_frequencies(self) -> tuple[np.ndarray, ...]:
        """Nyquist-zeroed wavenumber meshes, used for odd symbols."""
        axes = [self.axis_frequencies(zero_nyquist=True) for _ in range(self.n)]
        return tuple(np.meshgrid(*axes, indexing="ij"))

    @cached_property
    def abs_freq(self) -> np.ndarray:
        """|xi| on the lattice."""
        return np.sqrt(sum(x**2 for x in self.frequencies))

    @cached_property
    def coordinates(self) -> tuple[np.ndarray, ...]:
        """Physical coordinate meshes on [0, L)^n."""
        ax = np.linspace(0.0, self.L, self.N, endpoint=False)
        return tuple(np.meshgrid(*([ax] * self.n), indexing="ij"))

    @property
    def center(self) -> tuple[float, ...]:
        return (self.L / 2,) * self.n


def make_grid(n: int, N: int, L: float) -> GridSpec:
    """Build a validated grid; rejects non-power-of-two N and n outside 1..3."""
    return GridSpec(n=n, N=int(N), L=float(L))


@dataclass
class Field:
    """Complex scalar data on a grid, in physical or spectral representation."""

    grid: GridSpec
    data: np.ndarray
    representation: str = PHYSICAL

    def __post_init__(self):
        if self.representation not in (PHYSICAL, SPECTRAL):
            raise RepresentationError(f"unknown representation {self.representation!r}")
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.shape != self.grid.shape:
            raise PreconditionError(
                f"data shape {self.data.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "Field":
        return Field(self.grid, self.data.copy(), self.representation)

    def to_physical(self) -> "Field":
        return self if self.representation == PHYSICAL else transform(self, "inverse")

    def to_spectral(self) -> "Field":
        return self if self.representation == SPECTRAL else transform(self, "forward")

    def is_real(self, tol: float = 1e-12) -> bool:
        phys = self.to_physical().data
        scale = np.max(np.abs(phys)) or 1.0
        return float(np.max(np.abs(phys.imag))) <= tol * scale


def transform(f: Field, direction: str) -> Field:
    """Unitary DFT between physical and spectral representations.

    forward : fhat = fftn(f) * h^n / (2*pi)^(n/2)
    inverse : f = ifftn(fhat) * (2*pi)^(n/2) / h^n
    """
    g = f.grid
    scale = g.cell_volume / (2 * np.pi) ** (g.n / 2)
    if direction == "forward":
        if f.representation != PHYSICAL:
            raise RepresentationError("forward transform requires a physical field")
        return Field(g, np.fft.fftn(f.data) * scale, SPECTRAL)
    if direction == "inverse":
        if f.representation != SPECTRAL:
            raise RepresentationError("inverse transform requires a spectral field")
        return Field(g, np.fft.ifftn(f.data) / scale, PHYSICAL)
    raise PreconditionError(f"unknown transform direction {direction!r}")


def inner_product(f: Field, g: Field) -> complex:
    """L^2 pairing <f, g> = cellvol * sum f * conj(g) in physical space."""
    a, b = f.to_physical().data, g.to_physical().data
    return complex(np.sum(a * np.conj(b)) * f.grid.cell_volume)


def l2_spectral(f: Field) -> float:
    """Spectral-side L^2 value, sqrt(sum |fhat|^2 * (2*pi/L)^n)."""
    fh = f.to_spectral()
    dxi = (2 * np.pi / f.grid.L) ** f.grid.n
    return float(np.sqrt(np.sum(np.abs(fh.data) ** 2) * dxi))


def contamination(f: Field) -> float:
    """Fraction of the |f|-mass outside the central half-box [L/4, 3L/4)^n."""
    data = np.abs(f.to_physical().data)
    total = float(data.sum())
    if total == 0.0:
        return 0.0
    N = f.grid.N
    sl = (slice(N // 4, 3 * N // 4),) * f.grid.n
    inside = float(data[sl].sum())
    return max((total - inside) / total, 0.0)


def mean_mode(f: Field) -> complex:
    """Spectral coefficient at xi = 0 (proportional to the integral of f)."""
    return complex(f.to_spectral().data[(0,) * f.grid.n])


def require_zero_mean(f: Field, what: str) -> None:
    fh = f.to_spectral().data
    scale = np.max(np.abs(fh)) or 1.0
    if abs(fh[(0,) * f.grid.n]) > 1e-12 * scale:
        raise PreconditionError(f"{what} requires a zero-mean field")


# ---------------------------------------------------------------------------
# synthesis recipes
# ---------------------------------------------------------------------------
#
# Every recipe renders deterministically from its parameters.  Recipes with a
# `scale` attribute support exact analytic dilation f(x) -> f(c + s*(x - c))
# about the box center via `dilated`; the map contracts data toward the
# center so dilated fields stay inside the half-box.


def _mapped_coords(grid: GridSpec, scale: float) -> tuple[np.ndarray, ...]:
    c = grid.center
    return tuple(ci + scale * (x - ci) for x, ci in zip(grid.coordinates, c))


@dataclass(frozen=True)
class GaussianBump:
    """Real positive bump amplitude * exp(-|x - center|^2 / (2 width^2))."""

    width: float
    center: tuple[float, ...] | None = None
    amplitude: float = 1.0
    scale: float = 1.0

    def dilated(self, lam: float) -> "GaussianBump":
        return replace(self, scale=self.scale * lam)

    def render(self, grid: GridSpec) -> np.ndarray:
        if self.width > grid.L / 4:
            raise PreconditionError(
                f"bump width {self.width} exceeds L/4 = {grid.L / 4}: "
                "boundary-contamination guard"
            )
        c = self.center if self.center is not None else grid.center
        ys = _mapped_coords(grid, self.scale)
        r2 = sum((y - ci) ** 2 for y, ci in zip(ys, c))
        return self.amplitude * np.exp(-r2 / (2 * self.width**2))


@dataclass(frozen=True)
class PlaneWave:
    """Single Fourier mode exp(i * (2*pi*k/L) . x), k an integer vector."""

    k: tuple[int, ...]
    scale: float = 1.0

    def dilated(self, lam: float) -> "PlaneWave":
        if abs(lam - round(lam)) > 1e-12:
            raise PreconditionError("plane-wave dilation factor must be an integer")
        return replace(self, scale=self.scale * lam)

    def render(self, grid: GridSpec) -> np.ndarray:
        if len(self.k) != grid.n:
            raise PreconditionError("wavevector dimension does not match grid")
        keff = [self.scale * kj for kj in self.k]
        if any(abs(kj) >= grid.N / 2 for kj in keff):
            raise PreconditionError(f"wavevector {keff} at or beyond Nyquist N/2")
        phase = sum(
            (2 * np.pi * kj / grid.L) * x for kj, x in zip(keff, grid.coordinates)
        )
        return np.exp(1j * phase)


@dataclass(frozen=True)
class RandomBandlimited:
    """Real zero-mean field with spectral support in 2^j_min <= |xi| <= 2^(j_max+1).

    Band limits are in physical frequency units.  Global (not localized):
    intended for torus-native tests of the dyadic machinery, not for
    whole-space dilation experiments.
    """

    seed: int
    j_min: int
    j_max: int

    def render(self, grid: GridSpec) -> np.ndarray:
        lo, hi = 2.0**self.j_min, 2.0 ** (self.j_max + 1)
        if hi >= grid.nyquist:
            raise PreconditionError(
                f"band top 2^{self.j_max + 1} = {hi} reaches Nyquist {grid.nyquist}"
            )
        rng = np.random.default_rng(self.seed)
        coef = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        absxi = grid.abs_freq
        coef[(absxi < lo) | (absxi > hi)] = 0.0
        coef = _hermitianize(coef)
        coef[(0,) * grid.n] = 0.0
        data = np.fft.ifftn(coef)
        norm = np.sqrt(np.sum(np.abs(data) ** 2) * grid.cell_volume)
        return data / norm


@dataclass(frozen=True)
class RandomBumps:
    """Signed Gaussian bumps at seeded random positions near the box center.

    Amplitudes come in cancelling +/- pairs so the integral is exactly zero
    (count must be even).  `spread` bounds the max-norm distance of bump
    centers from the box center.
    """

    seed: int
    width: float
    spread: float
    count: int = 4
    scale: float = 1.0

    def dilated(self, lam: float) -> "RandomBumps":
        return replace(self, scale=self.scale * lam)

    def render(self, grid: GridSpec) -> np.ndarray:
        if self.count % 2:
            raise PreconditionError("count must be even for exact cancellation")
        rng = np.random.default_rng(self.seed)
        c = np.array(grid.center)
        ys = _mapped_coords(grid, self.scale)
        data = np.zeros(grid.shape, dtype=np.complex128)
        for _ in range(self.count // 2):
            amp = rng.uniform(0.5, 1.0)
            for sign in (+1.0, -1.0):
                pos = c + rng.uniform(-self.spread, self.spread, size=grid.n)
                r2 = sum((y - pj) ** 2 for y, pj in zip(ys, pos))
                data += sign * amp * np.exp(-r2 / (2 * self.width**2))
        return data


@dataclass(frozen=True)
class WavePackets:
    """Gaussian-enveloped oscillatory packets with lattice carriers near |k| = carrier.

    Packets come in +/- pairs sharing a carrier and phase, so the integral
    cancels exactly (the integral of one packet depends only on its carrier,
    envelope, and phase, not its position) and the field stays localized.
    Spectral content concentrates in an annulus of width ~1/width around
    the carrier radius; carrier wavevectors are integer lattice vectors, so
    dilation by an integer factor is exact.
    """

    seed: int
    carrier: float
    width: float
    count: int = 3
    spread: float | None = None
    scale: float = 1.0

    def dilated(self, lam: float) -> "WavePackets":
        if abs(lam - round(lam)) > 1e-12:
            raise PreconditionError("wave-packet dilation factor must be an integer")
        return replace(self, scale=self.scale * lam)

    def render(self, grid: GridSpec) -> np.ndarray:
        rng = np.random.default_rng(self.seed)
        c = np.array(grid.center)
        spread = self.spread if self.spread is not None else grid.L / 16
        ys = _mapped_coords(grid, self.scale)
        data = np.zeros(grid.shape, dtype=np.complex128)
        for _ in range(self.count):
            amp = rng.uniform(0.5, 1.0)
            kvec = _lattice_vector_near(rng, self.carrier, grid.n)
            if any(abs(self.scale * kj) >= grid.N / 2 for kj in kvec):
                raise PreconditionError("dilated carrier reaches Nyquist")
            theta = rng.uniform(0, 2 * np.pi)
            for sign in (+1.0, -1.0):
                pos = c + rng.uniform(-spread, spread, size=grid.n)
                r2 = np.zeros(grid.shape)
                phase = np.full(grid.shape, theta)
                for y, pj, kj in zip(ys, pos, kvec):
                    r2 = r2 + (y - pj) ** 2
                    phase = phase + (2 * np.pi * kj / grid.L) * (y - pj)
                data += sign * amp * np.exp(-r2 / (2 * self.width**2)) * np.cos(phase)
        spec = np.fft.fftn(data)
        spec[(0,) * grid.n] = 0.0  # removes only rounding residue
        return np.fft.ifftn(spec)


@dataclass(frozen=True)
class WindowedPowerlaw:
    """Compactly supported field with ~|xi|^(-decay) spectral profile.

    Synthesized as a positive-spectrum radial profile (amplitude
    min(1, |k|^-decay) in lattice units, phases aligned at the box center)
    multiplied by a smooth plateau window supported in the central
    half-box, so the contamination is exactly zero.  Used for decay-rate
    experiments whose extremizing data is not bump-like.
    """

    decay: float
    plateau: float = 0.15  # plateau half-width as a fraction of L
    support: float = 0.25  # support half-width as a fraction of L (<= 1/4)

    def render(self, grid: GridSpec) -> np.ndarray:
        if self.support > 0.25 + 1e-12:
            raise PreconditionError("window support must stay inside the half-box")
        klat = grid.abs_freq * grid.L / (2 * np.pi)  # lattice units
        prof = np.where(klat > 1.0, np.power(np.maximum(klat, 1e-300), -self.decay), 1.0)
        prof[(0,) * grid.n] = 0.0
        base = np.fft.ifftn(prof * _center_phase(grid)).real
        win = np.ones(grid.shape)
        for x in grid.coordinates:
            d = np.abs(x - grid.L / 2)
            win = win * _plateau_profile(
                d, self.plateau * grid.L, self.support * grid.L
            )
        # subtract a window-shaped mean so the field is zero-mean while
        # staying compactly supported inside the half-box
        m = np.sum(base * win) / np.sum(win)
        return ((base - m) * win).astype(np.complex128)


Recipe = (
    GaussianBump
    | PlaneWave
    | RandomBandlimited
    | RandomBumps
    | WavePackets
    | WindowedPowerlaw
)


def synthesize_field(grid: GridSpec, recipe: Recipe) -> Field:
    """Render a recipe into a physical-representation field."""
    return Field(grid, recipe.render(grid), PHYSICAL)


def _hermitianize(coef: np.ndarray) -> np.ndarray:
    """Project onto conjugate-symmetric coefficients (real physical field)."""
    rev = coef
    for ax in range(coef.ndim):
        rev = np.roll(np.flip(rev, axis=ax), 1, axis=ax)
    return 0.5 * (coef + np.conj(rev))


def _lattice_vector_near(rng, radius: float, n: int) -> tuple[int, ...]:
    """Random integer lattice vector with |k| within ~1 of `radius`."""
    for _ in range(256):
        v = rng.standard_normal(n)
        v *= radius / np.linalg.norm(v)
        k = tuple(int(round(x)) for x in v)
        if abs(np.linalg.norm(k) - radius) <= 1.0 and any(k):
            return k
    raise PreconditionError(f"no lattice vector near radius {radius}")


def _center_phase(grid: GridSpec) -> np.ndarray:
    """exp(-i xi . c) so that aligned-phase spectra peak at the box center."""
    c = grid.center
    phase = sum(xi * ci for xi, ci in zip(grid.frequencies, c))
    return np.exp(-1j * phase)


def _plateau_profile(d: np.ndarray, r1: float, r2: float) -> np.ndarray:
    """Smooth (C-infinity) profile: 1 for d <= r1, 0 for d >= r2."""

    def g(t):
        out = np.zeros_like(t)
        pos = t > 0
        out[pos] = np.exp(-1.0 / t[pos])
        return out

    u = (np.asarray(d, dtype=float) - r1) / (r2 - r1)  # 0..1 across the roll
    a, b = g(1.0 - u), g(u)
    return a / (a + b + 1e-300)


def dilate_spectrum(f: Field, factor: int) -> Field:
    """Exact torus dilation x -> factor*x via spectral remap k -> factor*k.

    Wraps around the torus (the result tiles factor^n compressed copies),
    so Lebesgue norms are preserved rather than rescaled.  Occupied modes
    must satisfy |factor*k| < N/2.
    """
    if factor < 1 or int(factor) != factor:
        raise PreconditionError("dilation factor must be a positive integer")
    g = f.grid
    src = f.to_spectral().data
    kint = np.rint(np.fft.fftfreq(g.N) * g.N).astype(int)
    out = np.zeros_like(src)
    # gather: target wavenumber m is fed from m/factor when it is an integer
    idx = []
    mask_axes = []
    for _ in range(g.n):
        ok = (kint % factor == 0) & (np.abs(kint) < g.N // 2)
        srcidx = np.where(ok, (kint // factor) % g.N, 0)
        idx.append(srcidx)
        mask_axes.append(ok)
    gathered = src[np.ix_(*idx)]
    mask = np.ones(g.shape, dtype=bool)
    for ax, ok in enumerate(mask_axes):
        shape = [1] * g.n
        shape[ax] = g.N
        mask &= ok.reshape(shape)
    out[mask] = gathered[mask]
    # reject content that cannot be remapped
    lost = np.sum(np.abs(src) ** 2) - np.sum(np.abs(out) ** 2)
    total = np.sum(np.abs(src) ** 2)
    if total > 0 and lost / total > 1e-24:
        raise PreconditionError("field has spectral content beyond Nyquist/factor")
    res = Field(g, out, SPECTRAL)
    return res if f.representation == SPECTRAL else res.to_physical()


# ---------------------------------------------------------------------------
# time series
# ---------------------------------------------------------------------------


@dataclass
class TimeSeries:
    """Snapshots of a Field (or vector field) on a strictly increasing time grid."""

    times: np.ndarray
    snapshots: list
    grading: str = "custom"

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        if self.times.ndim != 1 or len(self.times) != len(self.snapshots):
            raise PreconditionError("times and snapshots must have equal length")
        if len(self.times) and self.times[0] < 0:
            raise PreconditionError("times must be nonnegative")
        if np.any(np.diff(self.times) <= 0):
            raise PreconditionError("times must be strictly increasing")
        grids = {s.grid for s in self.snapshots}
        if len(grids) > 1:
            raise PreconditionError("snapshots must share one grid")
        if self.grading == "geometric" and len(self.times) >= 3:
            dt = np.diff(self.times)
            ratios = dt[1:] / dt[:-1]
            if np.max(np.abs(ratios / ratios[0] - 1)) > 1e-9:
                raise PreconditionError("geometric grading requires a constant ratio")

    def __len__(self) -> int:
        return len(self.times)

    @property
    def grid(self) -> GridSpec:
        return self.snapshots[0].grid


def uniform_times(T: float, m: int, t0: float = 0.0) -> np.ndarray:
    """m+1 equispaced samples on [t0, T]."""
    return np.linspace(t0, T, m + 1)


def geometric_times(
    t_min: float, t_max: float, ratio: float = 1.25, include_zero: bool = False
) -> np.ndarray:
    """Geometric samples anchored at t_min, ending exactly at t_max.

    Anchoring at the refined (singular) end means enlarging t_max only
    appends nodes, so tail-truncation studies share all interior samples.
    """
    if not (0 < t_min < t_max) or ratio <= 1:
        raise PreconditionError("need 0 < t_min < t_max and ratio > 1")
    ts = [t_min]
    while ts[-1] * ratio < t_max * (1 - 1e-12):
        ts.append(ts[-1] * ratio)
    ts.append(t_max)
    ts = np.array(ts)
    if include_zero:
        ts = np.concatenate([[0.0], ts])
    return ts


# ---------------------------------------------------------------------------
# serialization: flat binary, 32-byte header + little-endian (re, im) f64 pairs
# ---------------------------------------------------------------------------

_MAGIC = b"FRSF"
_HEADER = struct.Struct("<4sIIIdB7x")  # magic, version, n, N, L, representation
_VERSION = 1


def write_field(f: Field, path) -> None:
    rep = 0 if f.representation == PHYSICAL else 1
    header = _HEADER.pack(_MAGIC, _VERSION, f.grid.n, f.grid.N, f.grid.L, rep)
    flat = np.ascontiguousarray(f.data, dtype=np.complex128).ravel()
    inter = np.empty(2 * flat.size, dtype="<f8")
    inter[0::2] = flat.real
    inter[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(inter.tobytes())


def read_field(path) -> Field:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, version, n, N, L, rep = _HEADER.unpack_from(raw, 0)
    if magic != _MAGIC:
        raise PreconditionError(f"bad magic {magic!r} in field file")
    if version != _VERSION:
        raise PreconditionError(f"unsupported field file version {version}")
    grid = GridSpec(n=n, N=N, L=L)
    inter = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    data = (inter[0::2] + 1j * inter[1::2]).reshape(grid.shape)
    return Field(grid, data, PHYSICAL if rep == 0 else SPECTRAL)
