"""Periodic spectral calculus on the unit 2-torus.

Fields live on a uniform n-by-n grid over [0,1)^2 and are manipulated through
their discrete Fourier coefficients.  Because the torus has period 1, every
differential operator carries the angular factor 2*pi*k.  The unpaired Nyquist
mode (k = -n/2) is dropped from odd-order derivatives so that derivatives of
real fields stay real; even-order symbols are real and keep it.
"""

import numpy as np

from .errors import GridMismatch, NonZeroMean

TWO_PI = 2.0 * np.pi

# Relative tolerance used when asserting that a field has zero mean.
MEAN_RTOL = 1e-12


class PeriodicGrid:
    """Uniform n-by-n grid on [0,1)^2 with cached Fourier metadata.

    Wavenumbers are stored as integers in FFT layout; `k2` is the symbol of
    -Laplacian, |2 pi k|^2.  `n` must be even and at least 8 so the 2/3-rule
    band is non-trivial and Nyquist handling is well defined.
    """

    def __init__(self, n: int):
        if n % 2 != 0 or n < 8:
            raise ValueError(f"grid resolution must be even and >= 8, got {n}")
        self.n = n
        self.h = 1.0 / n
        k = np.fft.fftfreq(n, d=1.0 / n)  # integer wavenumbers
        self.kx = k[:, None]
        self.ky = k[None, :]
        self.k2 = (TWO_PI * self.kx) ** 2 + (TWO_PI * self.ky) ** 2
        inv = np.zeros_like(self.k2)
        mask = self.k2 > 0.0
        inv[mask] = -1.0 / self.k2[mask]
        self.inv_laplacian = inv  # symbol of Laplacian^-1, zero on the mean
        cutoff = n / 3.0
        self.dealias_mask = (np.abs(self.kx) <= cutoff) & (np.abs(self.ky) <= cutoff)
        coords = np.arange(n) * self.h
        self.x = np.broadcast_to(coords[:, None], (n, n)).copy()
        self.y = np.broadcast_to(coords[None, :], (n, n)).copy()

    def axis_symbol(self, axis: int, order: int):
        """Fourier multiplier of d^order/d(axis)^order, Nyquist-safe."""
        k = self.kx if axis == 0 else self.ky
        if order == 0:
            return np.ones_like(k)
        sym = (TWO_PI * 1j * k) ** order
        if order % 2 == 1:
            sym = np.where(np.abs(k) == self.n // 2, 0.0, sym)
        return sym

    def __eq__(self, other):
        return isinstance(other, PeriodicGrid) and other.n == self.n

    def __hash__(self):
        return hash(("PeriodicGrid", self.n))

    def __repr__(self):
        return f"PeriodicGrid(n={self.n})"


def _lock(arr):
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


class ScalarField:
    """Real periodic scalar with grid samples and a cached spectrum.

    Instances are immutable values: the sample array is locked on construction
    and the spectrum cache, once computed, never changes.  The cached spectrum
    is the raw (unnormalized) output of `numpy.fft.fft2`.
    """

    __slots__ = ("grid", "values", "_spectrum")

    def __init__(self, grid: PeriodicGrid, values, spectrum=None):
        values = np.asarray(values, dtype=np.float64)
        if values.shape != (grid.n, grid.n):
            raise ValueError(f"expected shape {(grid.n, grid.n)}, got {values.shape}")
        self.grid = grid
        self.values = _lock(values)
        self._spectrum = None if spectrum is None else _lock(spectrum)

    @classmethod
    def from_spectrum(cls, grid, spectrum):
        """Build a field from raw fft2 coefficients (real part is kept)."""
        values = np.fft.ifft2(spectrum).real
        return cls(grid, values, spectrum=np.asarray(spectrum, dtype=np.complex128))

    @classmethod
    def from_function(cls, grid, fn):
        return cls(grid, fn(grid.x, grid.y))

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros((grid.n, grid.n)))

    @classmethod
    def constant(cls, grid, c):
        return cls(grid, np.full((grid.n, grid.n), float(c)))

    @property
    def spectrum(self):
        if self._spectrum is None:
            self._spectrum = _lock(np.fft.fft2(self.values))
        return self._spectrum

    def mean(self) -> float:
        return float(self.values.mean())

    # arithmetic returns new fields; grids must match
    def _coerce(self, other):
        if isinstance(other, ScalarField):
            if other.grid != self.grid:
                raise GridMismatch("fields live on different grids")
            return other.values
        return other

    def __add__(self, other):
        return ScalarField(self.grid, self.values + self._coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - self._coerce(other))

    def __rsub__(self, other):
        return ScalarField(self.grid, self._coerce(other) - self.values)

    def __mul__(self, other):
        return ScalarField(self.grid, self.values * self._coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return ScalarField(self.grid, self.values / float(other))

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


class VectorField:
    """Pair of scalar components on one grid."""

    __slots__ = ("x", "y")

    def __init__(self, x: ScalarField, y: ScalarField):
        if x.grid != y.grid:
            raise GridMismatch("vector components live on different grids")
        self.x = x
        self.y = y

    @property
    def grid(self):
        return self.x.grid

    @classmethod
    def zeros(cls, grid):
        return cls(ScalarField.zeros(grid), ScalarField.zeros(grid))

    def mean(self):
        return np.array([self.x.mean(), self.y.mean()])

    def __add__(self, other):
        if isinstance(other, VectorField):
            return VectorField(self.x + other.x, self.y + other.y)
        return VectorField(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        if isinstance(other, VectorField):
            return VectorField(self.x - other.x, self.y - other.y)
        return VectorField(self.x - other[0], self.y - other[1])

    def __mul__(self, scalar):
        return VectorField(self.x * scalar, self.y * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(-self.x, -self.y)


def derivative(f: ScalarField, order) -> ScalarField:
    """Spectral partial derivative of multi-order `order = (ox, oy)`.

    The coefficient at wavenumber k is multiplied by
    (2 pi i k_x)^ox (2 pi i k_y)^oy.  Total order at most 4.
    """
    ox, oy = int(order[0]), int(order[1])
    if ox < 0 or oy < 0 or ox + oy > 4:
        raise ValueError(f"unsupported derivative order {order}")
    if ox == 0 and oy == 0:
        return f
    grid = f.grid
    sym = grid.axis_symbol(0, ox) * grid.axis_symbol(1, oy)
    return ScalarField.from_spectrum(grid, f.spectrum * sym)


def dx(f):
    return derivative(f, (1, 0))


def dy(f):
    return derivative(f, (0, 1))


def grad(f: ScalarField) -> VectorField:
    return VectorField(dx(f), dy(f))


def div(v: VectorField) -> ScalarField:
    return dx(v.x) + dy(v.y)


def curl(v: VectorField) -> ScalarField:
    """Scalar vorticity d(v.y)/dx - d(v.x)/dy."""
    return dx(v.y) - dy(v.x)


def laplacian(f: ScalarField) -> ScalarField:
    return ScalarField.from_spectrum(f.grid, f.spectrum * (-f.grid.k2))


def hs_norm(f, s: float) -> float:
    """Sobolev H^s norm via the multiplier (1 + |2 pi k|^2)^(s/2).

    Accepts a ScalarField or a VectorField (components combined in
    quadrature).  s = 0 reproduces the L^2 norm on the unit cell.
    """
    if isinstance(f, VectorField):
        return float(np.hypot(hs_norm(f.x, s), hs_norm(f.y, s)))
    grid = f.grid
    weight = (1.0 + grid.k2) ** s
    coeff2 = np.abs(f.spectrum) ** 2 / grid.n**4
    return float(np.sqrt(np.sum(weight * coeff2)))


def l2_norm(f) -> float:
    return hs_norm(f, 0.0)


def inner_l2(f: ScalarField, g: ScalarField) -> float:
    """L^2 inner product by grid quadrature (exact for unaliased products)."""
    return float((f.values * g.values).mean())


def integral(f: ScalarField) -> float:
    """Integral over the unit torus (the cell has measure one)."""
    return f.mean()


def _require_zero_mean(f: ScalarField, what: str):
    m = abs(f.mean())
    # absolute floor absorbs pure roundoff on numerically-zero fields
    if m > max(MEAN_RTOL * l2_norm(f), 1e-15):
        raise NonZeroMean(f"{what} must have zero mean, got mean {f.mean():.3e}")


def zero_mean(f: ScalarField) -> ScalarField:
    return f - f.mean()


def poisson_solve(rhs: ScalarField) -> ScalarField:
    """Zero-mean solution of Laplacian(phi) = rhs on the torus.

    The right-hand side must have zero mean (the compatibility condition on a
    closed manifold); the k = 0 mode of the solution is set to zero.
    """
    _require_zero_mean(rhs, "poisson_solve rhs")
    grid = rhs.grid
    return ScalarField.from_spectrum(grid, rhs.spectrum * grid.inv_laplacian)


def helmholtz(v: VectorField):
    """Split v into (solenoidal, potential, mean).

    v = solenoidal + potential + mean with div(solenoidal) = 0,
    potential = grad(q) for a periodic q, and both parts zero-mean.
    """
    mean = v.mean()
    q = poisson_solve(div(v))
    potential = grad(q)
    solenoidal = VectorField(v.x - potential.x - mean[0], v.y - potential.y - mean[1])
    return solenoidal, potential, mean


def solenoidal_part(v: VectorField) -> VectorField:
    """Divergence-free part including the mean (the Leray projection)."""
    sol, _, mean = helmholtz(v)
    return VectorField(sol.x + mean[0], sol.y + mean[1])


def velocity_from_divcurl(beta: ScalarField, omega: ScalarField, mean) -> VectorField:
    """Unique velocity with div v = beta, curl v = omega and integral `mean`.

    Inverts Laplacian(v.x) = d(beta)/dx - d(omega)/dy and
    Laplacian(v.y) = d(beta)/dy + d(omega)/dx mode by mode.
    """
    if beta.grid != omega.grid:
        raise GridMismatch("div and curl data live on different grids")
    _require_zero_mean(beta, "divergence data")
    _require_zero_mean(omega, "curl data")
    grid = beta.grid
    sx = grid.axis_symbol(0, 1)
    sy = grid.axis_symbol(1, 1)
    inv = grid.inv_laplacian
    spec_x = (sx * beta.spectrum - sy * omega.spectrum) * inv
    spec_y = (sy * beta.spectrum + sx * omega.spectrum) * inv
    n2 = grid.n**2
    spec_x = spec_x.copy()
    spec_y = spec_y.copy()
    spec_x[0, 0] = mean[0] * n2
    spec_y[0, 0] = mean[1] * n2
    return VectorField(
        ScalarField.from_spectrum(grid, spec_x),
        ScalarField.from_spectrum(grid, spec_y),
    )


def dealias(f: ScalarField) -> ScalarField:
    """2/3-rule truncation: zero every mode with |k_x| or |k_y| above n/3."""
    return ScalarField.from_spectrum(f.grid, f.spectrum * f.grid.dealias_mask)


def sample_at(f: ScalarField, px, py):
    """Evaluate the trigonometric interpolant of f at arbitrary points.

    `px`, `py` are flat arrays of coordinates (periodicity is automatic).
    Direct Fourier summation; the symmetrized (real) interpolant is returned,
    which is exact whenever f carries no Nyquist content.
    """
    grid = f.grid
    coeff = f.spectrum / grid.n**2
    px = np.asarray(px, dtype=np.float64).ravel()
    py = np.asarray(py, dtype=np.float64).ravel()
    k = np.fft.fftfreq(grid.n, d=1.0 / grid.n)
    ey = np.exp(TWO_PI * 1j * np.outer(k, py))  # (n, m)
    partial = coeff @ ey  # sum over ky -> (n, m)
    ex = np.exp(TWO_PI * 1j * np.outer(k, px))
    return np.real(np.sum(ex * partial, axis=0))
