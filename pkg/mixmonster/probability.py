"""Probability primitives shared by every other module: samples, exact
finite joint distributions, empirical characteristic functions, the
Kolmogorov-Smirnov distance, positive-definiteness checks and the exact
strong mixing coefficient of a finite joint law.
"""
from __future__ import absolute_import

import collections
import logging

import numpy as np
import six

logger = logging.getLogger("mixmonster")

# Largest atom count enumerated by alpha_exact. 2**20 subsets is about a
# million event sets.
ENUMERATION_LIMIT = 20

PMF_TOLERANCE = 1e-12
PSD_TOLERANCE = 1e-9
HERMITIAN_TOLERANCE = 1e-9
GRID_TOLERANCE = 1e-12

# Subsets are materialised in chunks of this many rows.
_SUBSET_CHUNK = 2 ** 14


class InvalidDistributionError(Exception):
    pass


class GridError(Exception):
    pass


class NotHermitianError(Exception):
    pass


class SizeLimitError(Exception):
    pass


PSDResult = collections.namedtuple('PSDResult', ['is_psd', 'worst_violation'])


class Sample(object):
    """An immutable collection of points in R^d.

    Points are stored as a read-only ``(n, d)`` float array. A flat list of
    numbers is read as n points in dimension 1.
    """
    def __init__(self, points):
        points = np.array(points, dtype=float)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        if points.ndim != 2:
            raise InvalidDistributionError(
                'Sample points must be scalars or vectors, got shape %s' %
                (points.shape,))
        if points.shape[0] == 0:
            raise InvalidDistributionError('Sample must not be empty')
        if points.shape[1] == 0:
            raise InvalidDistributionError('Sample dimension must be >= 1')
        points.setflags(write=False)
        self._points = points

    @property
    def points(self):
        return self._points

    @property
    def d(self):
        return self._points.shape[1]

    @property
    def size(self):
        return self._points.shape[0]

    def __len__(self):
        return self.size

    def values(self):
        """The points of a one dimensional sample as a flat array."""
        if self.d != 1:
            raise InvalidDistributionError(
                'Expected a one dimensional sample, got dimension %d' % self.d)
        return self._points[:, 0]

    def __repr__(self):
        return 'Sample(size=%d, d=%d)' % (self.size, self.d)


class EmpiricalCF(object):
    """Characteristic function values on a symmetric frequency grid.

    The value at frequency 0 is exactly 1 and the value at -t is exactly the
    conjugate of the value at t; the constructor enforces both.
    """
    def __init__(self, grid, values, sample_size):
        grid = check_symmetric_grid(grid)
        values = np.array(values, dtype=complex)
        if values.shape != grid.shape:
            raise GridError(
                'Got %d values for a grid of %d frequencies' %
                (values.size, grid.size))
        if sample_size < 1:
            raise InvalidDistributionError(
                'Sample size must be positive, got %d' % sample_size)
        values = _symmetrise(values)
        if np.any(np.abs(values) > 1.0 + 1e-9):
            raise InvalidDistributionError(
                'Characteristic function modulus exceeds 1')
        grid.setflags(write=False)
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self.sample_size = int(sample_size)

    def at(self, frequencies):
        """Looks up values at frequencies lying on the grid."""
        frequencies = np.asarray(frequencies, dtype=float)
        flat = frequencies.ravel()
        index = np.searchsorted(self.grid, flat)
        index = np.clip(index, 0, self.grid.size - 1)
        left = np.clip(index - 1, 0, self.grid.size - 1)
        closer = np.where(
            np.abs(self.grid[left] - flat) < np.abs(self.grid[index] - flat),
            left, index)
        missing = np.abs(self.grid[closer] - flat) > GRID_TOLERANCE * (
            1.0 + np.abs(flat))
        if np.any(missing):
            raise GridError(
                'Frequency %r is not on the grid of this characteristic '
                'function' % float(flat[np.argmax(missing)]))
        return self.values[closer].reshape(frequencies.shape)

    def __repr__(self):
        return 'EmpiricalCF(frequencies=%d, sample_size=%d)' % (
            self.grid.size, self.sample_size)


def _symmetrise(values):
    values = values.copy()
    half = values.size // 2
    values[half] = 1.0
    values[:half] = np.conj(values[::-1][:half])
    return values


def check_symmetric_grid(grid):
    """Validates a strictly increasing frequency grid symmetric about 0 that
    contains 0, returning it as a float array.
    """
    grid = np.array(grid, dtype=float).ravel()
    if grid.size == 0:
        raise GridError('Frequency grid must not be empty')
    if np.any(np.diff(grid) <= 0):
        raise GridError('Frequency grid must be strictly increasing')
    if grid.size % 2 == 0:
        raise GridError('A symmetric grid containing 0 has an odd size')
    mismatch = np.abs(grid + grid[::-1]) > GRID_TOLERANCE * (
        1.0 + np.abs(grid))
    if np.any(mismatch):
        raise GridError(
            'Frequency grid is not symmetric about 0: %r has no mirror '
            'image' % float(grid[np.argmax(mismatch)]))
    if grid[grid.size // 2] != 0.0:
        raise GridError('Frequency grid must contain 0')
    return grid


def empirical_cf(sample, grid):
    """Evaluates (1/n) sum_j exp(i t x_j) for every t in ``grid``.

    :param Sample sample: a one dimensional sample
    :param grid: a strictly increasing grid symmetric about 0
    """
    if not isinstance(sample, Sample):
        sample = Sample(sample)
    x = sample.values()
    grid = check_symmetric_grid(grid)
    half = grid.size // 2
    positive = grid[half + 1:]
    values = np.empty(grid.size, dtype=complex)
    values[half] = 1.0
    # One frequency row at a time keeps memory flat for large samples.
    upper = np.empty(positive.size, dtype=complex)
    for i, t in enumerate(positive):
        upper[i] = np.mean(np.exp(1j * t * x))
    values[half + 1:] = upper
    values[:half] = np.conj(upper[::-1])
    return EmpiricalCF(grid, values, sample.size)


def difference_matrix(psi, grid):
    """Builds the matrix M[j, k] = psi(t_j - t_k)."""
    grid = np.asarray(grid, dtype=float).ravel()
    differences = grid[:, None] - grid[None, :]
    return np.asarray(psi(differences))


def psd_check(matrix, tol=PSD_TOLERANCE, hermitian_tol=HERMITIAN_TOLERANCE):
    """Checks a Hermitian matrix for positive semi-definiteness.

    Returns ``PSDResult(is_psd, worst_violation)`` where worst_violation is
    the smallest eigenvalue and is_psd holds iff it is >= -tol.
    """
    matrix = np.atleast_2d(np.asarray(matrix))
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NotHermitianError(
            'Expected a square matrix, got shape %s' % (matrix.shape,))
    if matrix.shape[0] == 0:
        raise NotHermitianError('Matrix must have at least one row')
    if not np.all(np.isfinite(matrix)):
        raise NotHermitianError('Matrix has non-finite entries')
    skew = np.max(np.abs(matrix - np.conj(matrix.T)))
    scale = max(1.0, np.max(np.abs(matrix)))
    if skew > hermitian_tol * scale:
        raise NotHermitianError(
            'Matrix is not Hermitian: largest asymmetry %.3e' % skew)
    hermitian = 0.5 * (matrix + np.conj(matrix.T))
    smallest = float(np.linalg.eigvalsh(hermitian)[0])
    return PSDResult(smallest >= -tol, smallest)


def ks_distance(sample, reference_cdf):
    """Kolmogorov-Smirnov distance between a one dimensional sample and a
    reference cdf.

    Both one-sided limits are compared at every jump of the empirical cdf,
    so the supremum is exact for continuous and step references alike.
    ``reference_cdf`` is called with numpy arrays.
    """
    if not isinstance(sample, Sample):
        sample = Sample(sample)
    x = np.sort(sample.values())
    n = float(x.size)
    jumps, first = np.unique(x, return_index=True)
    below = first / n
    at_or_below = np.append(first[1:], x.size) / n
    reference = np.asarray(reference_cdf(jumps), dtype=float)
    reference_left = np.asarray(
        reference_cdf(np.nextafter(jumps, -np.inf)), dtype=float)
    distance = max(np.max(np.abs(at_or_below - reference)),
                   np.max(np.abs(below - reference_left)))
    return float(min(1.0, distance))


def ecdf(sample):
    """Returns the (right-continuous) empirical cdf of a 1-d sample as a
    vectorised function."""
    if not isinstance(sample, Sample):
        sample = Sample(sample)
    x = np.sort(sample.values())

    def cdf(points):
        return np.searchsorted(x, points, side='right') / float(x.size)
    return cdf


def cf_grid_distance(values_a, values_b):
    """Largest modulus difference between two CF evaluations on the same
    grid; the weak convergence proxy used for dimension above one."""
    values_a = np.asarray(values_a)
    values_b = np.asarray(values_b)
    if values_a.shape != values_b.shape:
        raise GridError('CF evaluations must share a grid')
    return float(np.max(np.abs(values_a - values_b)))


class FiniteJointDistribution(object):
    """Exact joint pmf of (X, Z) over finite atom sets.

    ``pmf[i, k]`` is P(X = atoms_x[i], Z = atoms_z[k]). Atoms are labels
    (real vectors); they default to 0..n-1.
    """
    def __init__(self, pmf, atoms_x=None, atoms_z=None, tol=PMF_TOLERANCE):
        pmf = np.array(pmf, dtype=float)
        if pmf.ndim != 2 or 0 in pmf.shape:
            raise InvalidDistributionError(
                'Joint pmf must be a non-empty matrix, got shape %s' %
                (pmf.shape,))
        if not np.all(np.isfinite(pmf)):
            raise InvalidDistributionError('Joint pmf has non-finite entries')
        if np.any(pmf < 0):
            raise InvalidDistributionError(
                'Joint pmf has a negative entry %r' % float(pmf.min()))
        total = pmf.sum()
        if abs(total - 1.0) > tol:
            raise InvalidDistributionError(
                'Joint pmf sums to %.15g, not 1' % total)
        self.atoms_x = _atoms(atoms_x, pmf.shape[0], 'X')
        self.atoms_z = _atoms(atoms_z, pmf.shape[1], 'Z')
        pmf.setflags(write=False)
        self.pmf = pmf

    @classmethod
    def from_pairs(cls, x_labels, z_labels):
        """Plug-in joint pmf of paired discrete observations."""
        x_labels = np.asarray(x_labels)
        z_labels = np.asarray(z_labels)
        if x_labels.shape[0] != z_labels.shape[0] or x_labels.shape[0] == 0:
            raise InvalidDistributionError(
                'Need the same positive number of X and Z observations')
        atoms_x, x_index = np.unique(x_labels, return_inverse=True)
        atoms_z, z_index = np.unique(z_labels, return_inverse=True)
        counts = np.zeros((atoms_x.size, atoms_z.size))
        np.add.at(counts, (x_index, z_index), 1.0)
        return cls(counts / counts.sum(), atoms_x, atoms_z, tol=1e-9)

    @property
    def shape(self):
        return self.pmf.shape

    @property
    def marginal_x(self):
        return self.pmf.sum(axis=1)

    @property
    def marginal_z(self):
        return self.pmf.sum(axis=0)

    def product(self):
        """The independent coupling of the two margins."""
        return FiniteJointDistribution(
            np.outer(self.marginal_x, self.marginal_z),
            self.atoms_x, self.atoms_z, tol=1e-9)

    def transpose(self):
        return FiniteJointDistribution(
            self.pmf.T, self.atoms_z, self.atoms_x, tol=1e-9)

    def __repr__(self):
        return 'FiniteJointDistribution(%d x %d)' % self.shape


def _atoms(atoms, count, side):
    if atoms is None:
        atoms = np.arange(count, dtype=float)
    atoms = np.array(atoms, dtype=float)
    if atoms.ndim == 1:
        atoms = atoms.reshape(-1, 1)
    if atoms.shape[0] != count:
        raise InvalidDistributionError(
            '%d atoms given for %s but the pmf has %d' %
            (atoms.shape[0], side, count))
    atoms.setflags(write=False)
    return atoms


def alpha_exact(joint, limit=ENUMERATION_LIMIT):
    """The strong mixing coefficient sup |P(A and B) - P(A)P(B)| over the
    events generated by the atoms of X and of Z.

    The smaller atom set is enumerated. For a fixed A the best B collects
    the atoms z where P(A, z) - P(A)P(z) is positive (or negative), so only
    the A side needs enumerating. A and its complement give the same value,
    which halves the work.
    """
    pmf = joint.pmf
    # Null atoms generate nothing new.
    pmf = pmf[pmf.sum(axis=1) > 0][:, pmf.sum(axis=0) > 0]
    if pmf.shape[0] > pmf.shape[1]:
        pmf = pmf.T
    atoms = pmf.shape[0]
    if atoms > limit:
        raise SizeLimitError(
            'alpha_exact would enumerate %d atoms, the limit is %d' %
            (atoms, limit))
    if atoms == 1:
        return 0.0
    p_z = pmf.sum(axis=0)
    free = atoms - 1
    total = 2 ** free
    bits = np.arange(free)
    best = 0.0
    for start in six.moves.range(0, total, _SUBSET_CHUNK):
        masks = np.arange(start, min(total, start + _SUBSET_CHUNK))
        members = ((masks[:, None] >> bits[None, :]) & 1).astype(float)
        joint_mass = members.dot(pmf[:free])
        p_a = joint_mass.sum(axis=1)
        signed = joint_mass - p_a[:, None] * p_z[None, :]
        positive = np.where(signed > 0, signed, 0.0).sum(axis=1)
        negative = -np.where(signed < 0, signed, 0.0).sum(axis=1)
        best = max(best, float(np.max(np.maximum(positive, negative))))
    return min(best, 0.25)
