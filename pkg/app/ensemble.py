"""
The sparse random symmetric ensemble, the Erdős–Rényi adjacency model with
its centering, the correction term and the matrix text format.

Matrices are stored by their upper triangle. A pair (i, j) with i <= j is
encoded by its row-major position in the upper triangle, see pair_index().
"""
from dataclasses import dataclass, field, replace
import logging
import math
import re

import numpy as np
from scipy.sparse import coo_matrix


logger = logging.getLogger('kohina.ensemble')


MODELS = ('centered-sparse', 'er-adjacency', 'er-centered')

LAW_KINDS = ('rademacher', 'gaussian', 'uniform-symmetric')

"""
Role codes for the seeding substreams; never renumber these, the record
files of past runs depend on them.
"""
ROLES = {
	'base': 0,
	'fresh': 1,
	'order': 2,
	'single': 3,
	'extra': 4,
	'variance': 5,
	'gaps': 6,
	'chatterjee': 7,
	'bootstrap': 8,
	'generate': 9,
	'heuristic': 10,
	'identity': 11,
}



def make_rng(master_seed, *key):
	"""
	Returns the counter-based stream keyed by (master seed, *key). String
	parts of the key are role names, see ROLES.
	"""
	words = [int(master_seed)]
	for part in key:
		if isinstance(part, str):
			part = ROLES[part]
		words.append(int(part))

	return np.random.Generator(np.random.Philox(np.random.SeedSequence(words)))



"""
Pair encoding
"""

def pair_count(n):
	return n * (n + 1) // 2


def _row_start(n, i):
	return i * n - i * (i - 1) // 2


def pair_index(n, i, j):
	"""
	Position of the 0-based pair (i, j), i <= j, in the row-major upper
	triangle. Works elementwise on arrays.
	"""
	i = np.asarray(i, dtype=np.int64)
	j = np.asarray(j, dtype=np.int64)
	return _row_start(n, i) + (j - i)


def pair_from_index(n, index):
	"""
	Inverse of pair_index(). Returns the (rows, cols) arrays.
	"""
	index = np.asarray(index, dtype=np.int64)
	b = 2 * n + 1
	i = np.floor((b - np.sqrt(np.maximum(b * b - 8.0 * index, 0.0))) / 2)
	i = i.astype(np.int64)

	# float rounding can leave i one off in either direction
	i = np.where(_row_start(n, i) > index, i - 1, i)
	i = np.where(_row_start(n, i + 1) <= index, i + 1, i)

	return i, index - _row_start(n, i) + i


def diagonal_mask(n, index):
	rows, cols = pair_from_index(n, index)
	return rows == cols



"""
Distributions
"""

SQRT3 = math.sqrt(3.0)

DEFAULT_THETA = {
	'rademacher': 0.5,
	'gaussian': 0.25,
	'uniform-symmetric': 0.3,
}

FOURTH_MOMENT = {
	'rademacher': 1.0,
	'gaussian': 3.0,
	'uniform-symmetric': 9 / 5,
}



@dataclass(frozen=True)
class EntryLaw:
	"""
	Law of the x factor of an entry: mean 0, variance 1, sub-Gaussian.

	The sub-Gaussian parameter is kept as metadata only; nothing checks
	E exp(θx²) <= 1/θ numerically.
	"""
	kind: str = 'rademacher'
	subgaussian_param: float = None

	def __post_init__(self):
		try:
			assert self.kind in LAW_KINDS
		except AssertionError:
			raise ValueError('Unknown entry law: {}'.format(self.kind))

		if self.subgaussian_param is None:
			object.__setattr__(
				self, 'subgaussian_param', DEFAULT_THETA[self.kind])

		try:
			assert self.subgaussian_param > 0
		except AssertionError:
			raise ValueError('The sub-Gaussian parameter must be positive.')

	def sample(self, rng, size):
		if self.kind == 'rademacher':
			return 2.0 * rng.integers(0, 2, size=size) - 1.0
		if self.kind == 'gaussian':
			return rng.standard_normal(size)
		return rng.uniform(-SQRT3, SQRT3, size)

	@property
	def fourth_moment(self):
		return FOURTH_MOMENT[self.kind]



@dataclass(frozen=True)
class EnsembleSpec:
	n: int
	q: float
	law: EntryLaw = field(default_factory=EntryLaw)
	model: str = 'centered-sparse'

	def __post_init__(self):
		try:
			assert self.model in MODELS
		except AssertionError:
			raise ValueError('Unknown model: {}'.format(self.model))

		try:
			assert int(self.n) == self.n and self.n >= 2
		except AssertionError:
			raise ValueError('The matrix size must be an integer >= 2.')

		try:
			assert self.q > 0
			assert self.q * self.q <= self.n * (1 + 1e-12)
		except AssertionError:
			raise ValueError('The sparsity q must lie in (0, sqrt(N)].')

		if self.model != 'centered-sparse':
			try:
				assert self.q * self.q < self.n
			except AssertionError:
				raise ValueError('The adjacency model needs q² < N.')

	@property
	def rate(self):
		"""
		Bernoulli rate q²/N of the nonzero pattern.
		"""
		return min(1.0, self.q * self.q / self.n)

	@property
	def zeta(self):
		return (1 - self.q * self.q / self.n) ** -0.5

	@property
	def pair_count(self):
		return pair_count(self.n)

	def draw(self, rng, diagonal):
		"""
		Draws one entry value per element of the boolean diagonal mask.
		Zero values are part of the law.
		"""
		diagonal = np.asarray(diagonal, dtype=bool)
		size = diagonal.shape[0]

		present = rng.random(size) < self.rate

		if self.model == 'centered-sparse':
			x = self.law.sample(rng, size)
			return np.where(present, x / self.q, 0.0)

		return np.where(present & ~diagonal, self.zeta / self.q, 0.0)



class SparseSymMatrix:
	"""
	Symmetric matrix stored by the nonzero entries of its upper triangle.

	The optional shift s adds s to every off-diagonal entry, i.e. the full
	matrix is stored + s·(J − I). The centered adjacency matrix is the only
	user of it. Instances are immutable.
	"""

	def __init__(self, n, index, values, spec=None, seed=None, shift=0.0):
		index = np.asarray(index, dtype=np.int64).ravel()
		values = np.asarray(values, dtype=np.float64).ravel()

		try:
			assert index.shape == values.shape
		except AssertionError:
			raise ValueError('Index and value arrays differ in length.')

		keep = values != 0
		index, values = index[keep], values[keep]

		order = np.argsort(index, kind='stable')
		index, values = index[order], values[order]

		try:
			assert index.size == 0 or index[0] >= 0
			assert index.size == 0 or index[-1] < pair_count(n)
			assert np.all(np.diff(index) > 0)
		except AssertionError:
			raise ValueError('Pair indices out of range or duplicated.')

		index.flags.writeable = False
		values.flags.writeable = False

		self.n = int(n)
		self.index = index
		self.values = values
		self.spec = spec
		self.seed = seed
		self.shift = float(shift)
		self._csr = None


	def __repr__(self):
		return '<SparseSymMatrix n={} nnz={} shift={}>'.format(
			self.n, self.nnz, self.shift)


	@property
	def nnz(self):
		return self.index.size


	@property
	def pairs(self):
		return pair_from_index(self.n, self.index)


	def stored_at(self, index):
		"""
		Stored upper-triangle values at the given pair indices, 0 where
		nothing is stored. The shift is not included.
		"""
		index = np.asarray(index, dtype=np.int64)
		if self.nnz == 0:
			return np.zeros(index.shape)

		pos = np.searchsorted(self.index, index)
		pos = np.minimum(pos, self.nnz - 1)

		hit = self.index[pos] == index
		return np.where(hit, self.values[pos], 0.0)


	def entry(self, i, j):
		"""
		Full matrix entry (i, j), shift included.
		"""
		if i > j:
			i, j = j, i
		value = float(self.stored_at(pair_index(self.n, i, j)))
		if i != j:
			value += self.shift
		return value


	def with_entries(self, index, values):
		"""
		Returns a copy whose stored entries at the given pair indices are
		replaced by the given values.
		"""
		index = np.asarray(index, dtype=np.int64).ravel()
		values = np.asarray(values, dtype=np.float64).ravel()

		untouched = ~np.isin(self.index, index)

		return SparseSymMatrix(
			self.n,
			np.concatenate([self.index[untouched], index]),
			np.concatenate([self.values[untouched], values]),
			spec = self.spec,
			seed = self.seed,
			shift = self.shift
		)


	def same_as(self, other):
		"""
		Bitwise equality of the stored data.
		"""
		return (
			self.n == other.n
			and self.shift == other.shift
			and np.array_equal(self.index, other.index)
			and np.array_equal(self.values, other.values)
		)


	def to_scipy(self):
		"""
		The stored part as a symmetric CSR matrix (shift excluded).
		"""
		if self._csr is None:
			rows, cols = self.pairs
			off = rows != cols

			all_rows = np.concatenate([rows, cols[off]])
			all_cols = np.concatenate([cols, rows[off]])
			all_vals = np.concatenate([self.values, self.values[off]])

			self._csr = coo_matrix(
				(all_vals, (all_rows, all_cols)), shape=(self.n, self.n)
			).tocsr()

		return self._csr


	def matvec(self, x):
		"""
		O(nnz) product with a vector or a block of column vectors.
		"""
		x = np.asarray(x)
		y = self.to_scipy() @ x
		if self.shift:
			y = y + self.shift * (x.sum(axis=0) - x)
		return y


	def to_dense(self):
		dense = self.to_scipy().toarray()
		if self.shift:
			dense += self.shift
			dense[np.diag_indices(self.n)] -= self.shift
		return dense


	def frobenius_sq(self):
		"""
		Squared Frobenius norm of the full symmetric matrix.
		"""
		rows, cols = self.pairs
		diag = rows == cols

		total = float(np.sum(self.values[diag] ** 2))

		off_values = self.values[~diag] + self.shift
		empty_off = self.n * (self.n - 1) // 2 - off_values.size

		total += 2 * (
			float(np.sum(off_values ** 2)) + empty_off * self.shift ** 2
		)
		return total



@dataclass(frozen=True)
class CorrectionTerm:
	value: float



"""
Samplers
"""

def _all_pairs_draw(spec, rng):
	index = np.arange(spec.pair_count, dtype=np.int64)
	values = spec.draw(rng, diagonal_mask(spec.n, index))
	return index, values


def sample_sparse(spec, rng, seed=None):
	"""
	Draws H with h_ij = x_ij y_ij / q independently for every pair i <= j.
	Diagonal entries follow the same law as the off-diagonal ones.
	"""
	try:
		assert spec.model == 'centered-sparse'
	except AssertionError:
		raise ValueError('sample_sparse() draws the centered-sparse model.')

	index, values = _all_pairs_draw(spec, rng)
	return SparseSymMatrix(spec.n, index, values, spec=spec, seed=seed)


def sample_er(n, q, rng, seed=None):
	"""
	Draws the normalized adjacency matrix A: zero diagonal, off-diagonal
	entries ζ/q with probability q²/N.
	"""
	spec = EnsembleSpec(n, q, model='er-adjacency')
	index, values = _all_pairs_draw(spec, rng)
	return SparseSymMatrix(n, index, values, spec=spec, seed=seed)


def center_er(A):
	"""
	Returns (Å, f, a) with A = Å + f·ee* − aI, f = ζq and a = f/N.

	Å keeps A's stored entries and carries the mean −a of its off-diagonal
	entries as shift; its diagonal is zero.
	"""
	try:
		assert A.spec is not None
		assert A.spec.model == 'er-adjacency'
	except AssertionError:
		raise ValueError('center_er() needs a matrix drawn by sample_er().')

	f = A.spec.zeta * A.spec.q
	a = f / A.n

	centered = SparseSymMatrix(
		A.n, A.index, A.values,
		spec = replace(A.spec, model='er-centered'),
		seed = A.seed,
		shift = -a
	)
	return centered, f, a


def sample(spec, rng, seed=None):
	"""
	Draws one matrix of the model given by spec.model.
	"""
	if spec.model == 'centered-sparse':
		return sample_sparse(spec, rng, seed)

	A = sample_er(spec.n, spec.q, rng, seed)
	if spec.model == 'er-centered':
		return center_er(A)[0]
	return A


def correction_term(H):
	"""
	𝓧 = Tr(H²)/N − 1.
	"""
	return CorrectionTerm(H.frobenius_sq() / H.n - 1)



"""
Text format
"""

HEADER_REGEX = re.compile(
	r'''
	^(?P<n>\d+)\s+(?P<q>\S+)\s+(?P<model>[\w-]+)\s+(?P<seed>\d+|-)
	(\s+(?P<law>[\w-]+))?$
	''',
	flags = re.VERBOSE
)

ENTRY_REGEX = re.compile(r'^(?P<i>\d+)\s+(?P<j>\d+)\s+(?P<value>\S+)$')


def dump_matrix(H):
	"""
	Returns the "i j value" text of H (1-based, i <= j) under the header
	"N q model seed law".
	"""
	spec = H.spec or EnsembleSpec(H.n, math.sqrt(H.n))
	seed = '-' if H.seed is None else str(int(H.seed))

	lines = ['{} {} {} {} {}'.format(
		H.n, repr(float(spec.q)), spec.model, seed, spec.law.kind)]

	rows, cols = H.pairs
	for i, j, value in zip(rows.tolist(), cols.tolist(), H.values.tolist()):
		lines.append('{} {} {}'.format(i + 1, j + 1, repr(value)))

	return '\n'.join(lines) + '\n'


def load_matrix(string):
	"""
	Inverse of dump_matrix(). Raises ValueError on anything malformed.
	"""
	lines = [line.strip() for line in string.splitlines() if line.strip()]
	if not lines:
		raise ValueError('Empty matrix file.')

	match = HEADER_REGEX.match(lines[0])
	if match is None:
		raise ValueError('Bad header line: {}'.format(lines[0]))

	n = int(match.group('n'))
	law = EntryLaw(match.group('law') or 'rademacher')
	spec = EnsembleSpec(n, float(match.group('q')), law, match.group('model'))
	seed = None if match.group('seed') == '-' else int(match.group('seed'))

	rows, cols, values = [], [], []
	for line in lines[1:]:
		match = ENTRY_REGEX.match(line)
		if match is None:
			raise ValueError('Bad entry line: {}'.format(line))

		i, j = int(match.group('i')) - 1, int(match.group('j')) - 1
		try:
			assert 0 <= i <= j < n
		except AssertionError:
			raise ValueError('Entry outside the upper triangle: {}'.format(line))

		rows.append(i)
		cols.append(j)
		values.append(float(match.group('value')))

	shift = 0.0
	if spec.model == 'er-centered':
		shift = -spec.zeta * spec.q / n

	return SparseSymMatrix(
		n, pair_index(n, rows, cols), values,
		spec = spec,
		seed = seed,
		shift = shift
	)
