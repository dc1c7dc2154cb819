"""Levy jump measures and space-time Poisson-random-measure sampling.

Measures come in two finite-activity variants: a finite list of atoms, or a
symmetric truncated power density amplitude * |z|^(-1-gamma) on
delta_in <= |z| <= M.  Moments and drift have closed forms.  Increments are
sampled cell by cell on a regular space-time grid; streams are keyed by
(seed, replica_index) through a counter-based Philox generator, so identical
keys reproduce identical fields and replicas sample independently.
"""

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMeasureError, DomainError, ValidationError


@dataclass(frozen=True)
class LevyMeasureSpec:
    """Finite-activity jump measure: atoms or truncated power density."""

    variant: str = "atoms"                      # "atoms" | "truncated_power"
    atoms: tuple = ((1.0, 1.0), (-1.0, 1.0))    # ((z, mass), ...)
    gamma_exp: float = 0.5
    delta_in: float = 0.1
    outer_cut: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.variant == "atoms":
            if not self.atoms:
                raise ValidationError("levy.atoms", "measure must be nonzero")
            for z, m in self.atoms:
                if z == 0.0:
                    raise ValidationError("levy.atoms", "atom at z = 0 is not a jump")
                if m <= 0.0:
                    raise ValidationError("levy.atoms", f"atom mass must be > 0, got {m}")
        elif self.variant == "truncated_power":
            if self.delta_in <= 0.0:
                raise ValidationError("levy.delta_in", "inner cutoff must be > 0")
            if self.outer_cut <= self.delta_in:
                raise ValidationError("levy.outer", "outer cutoff must exceed delta_in")
            if self.amplitude <= 0.0:
                raise ValidationError("levy.amplitude", "amplitude must be > 0")
        else:
            raise ValidationError("levy.kind", f"unknown variant {self.variant!r}")

    # -- closed-form functionals ------------------------------------------

    def _power_moment(self, p: float, lo: float, hi: float) -> float:
        """int_lo^hi z^p * amplitude z^(-1-gamma) dz for one side."""
        a = p - self.gamma_exp
        if abs(a) < 1e-14:
            return self.amplitude * math.log(hi / lo)
        return self.amplitude * (hi ** a - lo ** a) / a

    def moment(self, p: float) -> float:
        """int |z|^p lambda(dz); finite for every p >= 0 by construction."""
        if p < 0.0:
            raise DomainError("moment order p must be >= 0")
        if self.variant == "atoms":
            return sum(m * abs(z) ** p for z, m in self.atoms)
        return 2.0 * self._power_moment(p, self.delta_in, self.outer_cut)

    def total_mass(self) -> float:
        return self.moment(0.0)

    def mass_above(self, delta: float) -> float:
        """lambda([-delta, delta]^c)."""
        if self.variant == "atoms":
            return sum(m for z, m in self.atoms if abs(z) > delta)
        lo = max(delta, self.delta_in)
        if lo >= self.outer_cut:
            return 0.0
        return 2.0 * self._power_moment(0.0, lo, self.outer_cut)

    def moment_above(self, p: float, delta: float) -> float:
        """int_{|z| > delta} |z|^p lambda(dz)."""
        if self.variant == "atoms":
            return sum(m * abs(z) ** p for z, m in self.atoms if abs(z) > delta)
        lo = max(delta, self.delta_in)
        if lo >= self.outer_cut:
            return 0.0
        return 2.0 * self._power_moment(p, lo, self.outer_cut)

    def signed_moment(self, lo: float = 0.0) -> float:
        """int_{|z| > lo} z lambda(dz); zero for symmetric specs by construction."""
        if self.variant == "truncated_power":
            return 0.0
        return sum(m * z for z, m in self.atoms if abs(z) > lo)

    def first_moment(self) -> float:
        return self.signed_moment(0.0)

    def discarded_l2(self) -> float:
        """L2 size of the small jumps the inner cutoff removes from the
        un-truncated power target: int_{|z| < delta_in} z^2 amplitude
        |z|^(-1-gamma) dz.  Zero for atom specs (nothing is discarded)."""
        if self.variant != "truncated_power":
            return 0.0
        a = 2.0 - self.gamma_exp
        return 2.0 * self.amplitude * self.delta_in ** a / a

    @property
    def symmetric(self) -> bool:
        if self.variant == "truncated_power":
            return True
        bag: dict = {}
        for z, m in self.atoms:
            bag[z] = bag.get(z, 0.0) + m
        return all(abs(bag.get(-z, 0.0) - m) < 1e-15 * max(m, 1.0)
                   for z, m in bag.items())

    # -- sampling ----------------------------------------------------------

    def sample_sizes(self, rng: np.random.Generator, n: int,
                     min_abs: float = 0.0) -> np.ndarray:
        """n i.i.d. jump sizes from lambda / lambda(R), optionally |z| > min_abs."""
        if n == 0:
            return np.empty(0)
        if self.variant == "atoms":
            zs = np.array([z for z, m in self.atoms if abs(z) > min_abs])
            ms = np.array([m for z, m in self.atoms if abs(z) > min_abs])
            if len(zs) == 0:
                raise DegenerateMeasureError(f"no atoms with |z| > {min_abs}")
            return rng.choice(zs, size=n, p=ms / ms.sum())
        lo = max(min_abs, self.delta_in)
        if lo >= self.outer_cut:
            raise DegenerateMeasureError(f"no mass with |z| > {min_abs}")
        g = self.gamma_exp
        u = rng.random(n)
        if abs(g) < 1e-14:
            mag = lo * (self.outer_cut / lo) ** u
        else:
            mag = (lo ** -g - u * (lo ** -g - self.outer_cut ** -g)) ** (-1.0 / g)
        sign = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        return sign * mag


def levy_moment(spec: LevyMeasureSpec, p: float) -> float:
    """int |z|^p lambda(dz) in closed form."""
    return spec.moment(p)


def drift_b(spec: LevyMeasureSpec) -> float:
    """b = int_{|z| >= 1} z lambda(dz); exactly zero for symmetric specs."""
    if spec.symmetric:
        return 0.0
    return sum(m * z for z, m in spec.atoms if abs(z) >= 1.0)


@dataclass(frozen=True)
class NoiseGrid:
    """Regular space-time lattice of sampling cells plus the stream key."""

    dt: float
    dx: float
    n_t: int
    n_x: int
    seed: int = 0
    replica_index: int = 0

    def __post_init__(self):
        if self.dt <= 0.0 or self.dx <= 0.0:
            raise ValidationError("grid", "dt and dx must be positive")
        if self.n_t < 1 or self.n_x < 1:
            raise ValidationError("grid", "n_t and n_x must be >= 1")

    def generator(self) -> np.random.Generator:
        key = np.array([self.seed & 0xFFFFFFFFFFFFFFFF,
                        self.replica_index & 0xFFFFFFFFFFFFFFFF], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class TiltSpec:
    """Kernel-ratio tilt of the jump intensity toward a space-time point.

    Cell (k, j) keeps jumps with |z| > delta at the reduced rate
    q_{t_ref - s_k}(x_ref - x_j) / q_{t_ref - s_k}(0), with s_k the cell
    midpoint; cells in the final slab t_ref - s_k < dt are excluded (the
    ratio is well defined there but the discrete analogue is not).
    """

    t_ref: float
    x_ref: float
    delta: float = 0.0


@dataclass
class IncrementField:
    """Per-cell noise increments over one replica of the grid.

    jump_sum[k, j]  : sum of sampled jump sizes in cell (k, j)
    compensator     : dt dx int z lambda(dz) (scalar; array under a tilt)
    gaussian[k, j]  : rho * sqrt(dt dx) * N(0, 1), zeros when rho = 0
    """

    grid: NoiseGrid
    jump_sum: np.ndarray
    compensator: np.ndarray | float
    gaussian: np.ndarray | float
    rho: float = 0.0

    def combined(self, b: float = 0.0) -> np.ndarray:
        """Compensated jumps plus drift and Gaussian part: the cell measure
        of the driving noise, Lambda(cell)."""
        return (self.jump_sum - self.compensator
                + b * self.grid.dt * self.grid.dx + self.gaussian)


def sample_increments(spec: LevyMeasureSpec, grid: NoiseGrid, rho: float = 0.0,
                      tilt: TiltSpec | None = None,
                      kernel_params=None) -> IncrementField:
    """Draw one replica of the cell-lumped space-time noise.

    Per cell: N ~ Poisson(dt dx lambda(R)) jumps with sizes i.i.d. from
    lambda / lambda(R); the compensator dt dx int z lambda makes the
    compensated field mean zero; the Gaussian part is scaled by rho.
    Jump positions inside a cell are not tracked.  The whole field is a
    pure function of (spec, grid, rho, tilt).
    """
    if rho < 0.0:
        raise DomainError("rho must be >= 0")
    rng = grid.generator()
    cell = grid.dt * grid.dx
    shape = (grid.n_t, grid.n_x)

    if tilt is None:
        rate = spec.total_mass() * cell
        counts = rng.poisson(rate, shape)
        total = int(counts.sum())
        sizes = spec.sample_sizes(rng, total)
        comp = cell * spec.first_moment()
    else:
        ratio = _tilt_ratios(tilt, grid, kernel_params)
        rate = spec.mass_above(tilt.delta) * cell * ratio
        if spec.mass_above(tilt.delta) <= 0.0:
            raise DegenerateMeasureError(
                f"lambda carries no mass above delta = {tilt.delta}")
        counts = rng.poisson(rate)
        total = int(counts.sum())
        sizes = spec.sample_sizes(rng, total, min_abs=tilt.delta)
        comp = cell * spec.signed_moment(tilt.delta) * ratio

    cell_of_jump = np.repeat(np.arange(grid.n_t * grid.n_x), counts.ravel())
    jump_sum = np.bincount(cell_of_jump, weights=sizes,
                           minlength=grid.n_t * grid.n_x).reshape(shape)
    if rho > 0.0:
        gauss = rho * math.sqrt(cell) * rng.standard_normal(shape)
    else:
        gauss = 0.0
    return IncrementField(grid=grid, jump_sum=jump_sum, compensator=comp,
                          gaussian=gauss, rho=rho)


def _tilt_ratios(tilt: TiltSpec, grid: NoiseGrid, kernel_params) -> np.ndarray:
    from .kernel import KernelParams, get_profile, kappa_const

    kp = kernel_params or KernelParams()
    if kp.d != 1:
        raise DomainError("tilted sampling implemented for d = 1 only")
    s_mid = (np.arange(grid.n_t) + 0.5) * grid.dt
    lag = tilt.t_ref - s_mid
    x = (np.arange(grid.n_x) - grid.n_x // 2) * grid.dx
    dist = np.abs(tilt.x_ref - x)
    ratio = np.zeros((grid.n_t, grid.n_x))
    alive = lag >= grid.dt         # final slab excluded
    if kp.alpha == 1.0:
        for k in np.nonzero(alive)[0]:
            u = lag[k]
            ratio[k] = (u * u) / (u * u + dist * dist)
    else:
        prof = get_profile(kp.alpha)
        p0 = prof(0.0)
        for k in np.nonzero(alive)[0]:
            scale = lag[k] ** (-1.0 / kp.alpha)
            ratio[k] = prof(dist * scale) / p0
    return ratio


# ---------------------------------------------------------------------------
# binary field dumps

_MAGIC = b"LVHN"
_HEADER = struct.Struct("<4sQQddQQ")


def dump_increments(field: IncrementField, path) -> None:
    """Little-endian binary dump: header {n_t, n_x, dt, dx, seed, replica},
    then jump_sum, compensator, gaussian planes as row-major float64."""
    g = field.grid
    shape = (g.n_t, g.n_x)
    comp = np.broadcast_to(np.asarray(field.compensator, dtype=float), shape)
    gauss = np.broadcast_to(np.asarray(field.gaussian, dtype=float), shape)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, g.n_t, g.n_x, g.dt, g.dx,
                              g.seed, g.replica_index))
        fh.write(np.ascontiguousarray(field.jump_sum, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(comp, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(gauss, dtype="<f8").tobytes())


def load_increments(path) -> IncrementField:
    with open(path, "rb") as fh:
        magic, n_t, n_x, dt, dx, seed, replica = _HEADER.unpack(
            fh.read(_HEADER.size))
        if magic != _MAGIC:
            raise ValidationError("file", "not an increment dump")
        plane = n_t * n_x * 8
        jump = np.frombuffer(fh.read(plane), dtype="<f8").reshape(n_t, n_x)
        comp = np.frombuffer(fh.read(plane), dtype="<f8").reshape(n_t, n_x)
        gauss = np.frombuffer(fh.read(plane), dtype="<f8").reshape(n_t, n_x)
    grid = NoiseGrid(dt=dt, dx=dx, n_t=int(n_t), n_x=int(n_x),
                     seed=int(seed), replica_index=int(replica))
    return IncrementField(grid=grid, jump_sum=jump.copy(),
                          compensator=comp.copy(), gaussian=gauss.copy())
