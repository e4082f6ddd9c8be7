"""
Eigenpairs of sparse symmetric matrices and the statistics the noise
sensitivity results are phrased in.
"""
from dataclasses import dataclass, field
import logging

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured
import numpy as np
import scipy.linalg
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigsh


logger = logging.getLogger('kohina.spectral')


DEFAULT_DENSE_CAP = 4096

DEGENERATE_GAP = 1e-9



class SolverFailure(RuntimeError):
	"""
	Raised when an eigensolver or linear solver does not deliver.
	"""
	pass



def dense_cap(cap=None):
	"""
	The largest size that still goes through the dense path.
	"""
	if cap is not None:
		return int(cap)
	try:
		return int(settings.LAB_DENSE_CAP)
	except (ImproperlyConfigured, AttributeError):
		return DEFAULT_DENSE_CAP


def use_dense(n, cap=None):
	"""
	Whether a matrix of size n goes through the dense path; n = cap does.
	"""
	return n <= dense_cap(cap)


def canonical_sign(v):
	"""
	Flips v so that its largest-magnitude coordinate is positive; ties go to
	the lowest index.
	"""
	v = np.asarray(v, dtype=np.float64)
	if v[np.argmax(np.abs(v))] < 0:
		return -v
	return v



@dataclass
class EigenPairs:
	"""
	values[p] is the eigenvalue at (1-based, descending) position
	positions[p]; vectors[:, c] is the unit eigenvector for indices[c].
	"""
	n: int
	values: np.ndarray
	positions: tuple
	indices: tuple
	vectors: np.ndarray
	method: str
	matvecs: int = 0
	flags: list = field(default_factory=list)

	def value(self, index):
		try:
			return float(self.values[self.positions.index(index)])
		except ValueError:
			raise IndexError('Eigenvalue {} not computed.'.format(index))

	def vector(self, index):
		try:
			return self.vectors[:, self.indices.index(index)]
		except ValueError:
			raise IndexError('Eigenvector {} not computed.'.format(index))

	@property
	def is_full(self):
		return len(self.positions) == self.n



def _as_indices(n, indices):
	if indices is None:
		return tuple(range(1, n + 1))
	indices = tuple(int(i) for i in indices)
	try:
		for i in indices:
			assert 1 <= i <= n
	except AssertionError:
		raise IndexError('Eigen index out of range 1..{}.'.format(n))
	return indices


def full_spectrum(H, indices=(1,), cap=None):
	"""
	All eigenvalues and the requested eigenvectors of the dense copy.
	"""
	try:
		assert use_dense(H.n, cap)
	except AssertionError:
		raise ValueError('n = {} exceeds the dense cap.'.format(H.n))

	indices = _as_indices(H.n, indices)

	w, V = scipy.linalg.eigh(H.to_dense())
	values = w[::-1].copy()

	vectors = np.empty((H.n, len(indices)))
	for c, index in enumerate(indices):
		vectors[:, c] = canonical_sign(V[:, H.n - index])

	return EigenPairs(
		n = H.n,
		values = values,
		positions = tuple(range(1, H.n + 1)),
		indices = indices,
		vectors = vectors,
		method = 'dense-full'
	)


def top_eigs(H, m=1, warm_start=None, bottom=False, tol=0, maxiter=None):
	"""
	The m largest (or smallest) eigenpairs by implicitly restarted Lanczos.

	A warm start vector, typically the eigenvector of a nearby matrix,
	shortens the iteration. Non-convergence and residual breaches raise
	SolverFailure.
	"""
	try:
		assert 1 <= m < H.n
	except AssertionError:
		raise ValueError('Need 1 <= m < n.')

	count = [0]

	def product(x):
		count[0] += 1 if x.ndim == 1 else x.shape[1]
		return H.matvec(x)

	operator = LinearOperator(
		(H.n, H.n), matvec=product, matmat=product, dtype=np.float64)

	v0 = None
	if warm_start is not None:
		v0 = np.asarray(warm_start, dtype=np.float64)
		if v0.ndim == 2:
			v0 = v0.sum(axis=1)

	try:
		w, V = eigsh(
			operator, k=m, which='SA' if bottom else 'LA',
			v0=v0, tol=tol, maxiter=maxiter
		)
	except (ArpackNoConvergence, ArpackError) as error:
		raise SolverFailure('Lanczos did not converge: {}'.format(error))

	order = np.argsort(w)[::-1]
	w, V = w[order], V[:, order]

	for c in range(m):
		residual = np.linalg.norm(H.matvec(V[:, c]) - w[c] * V[:, c])
		if residual > 1e-8 * max(1.0, abs(w[c])):
			raise SolverFailure(
				'Residual {:.3e} for eigenvalue {:.6f}.'.format(residual, w[c]))

	if bottom:
		positions = tuple(range(H.n - m + 1, H.n + 1))
	else:
		positions = tuple(range(1, m + 1))

	vectors = np.column_stack([canonical_sign(V[:, c]) for c in range(m)])

	return EigenPairs(
		n = H.n,
		values = w,
		positions = positions,
		indices = positions,
		vectors = vectors,
		method = 'iterative-topm',
		matvecs = count[0]
	)


def eigenpairs(H, indices=(1,), warm_start=None, cap=None):
	"""
	Dense up to the cap, Lanczos above it. The iterative path computes one
	neighbour beyond the requested indices so that gaps can be read off.
	"""
	indices = _as_indices(H.n, indices)

	if use_dense(H.n, cap):
		return full_spectrum(H, indices, cap)

	if max(indices) <= H.n // 2:
		eigs = top_eigs(H, max(indices) + 1, warm_start)
	elif min(indices) > H.n // 2:
		eigs = top_eigs(H, H.n - min(indices) + 2, warm_start, bottom=True)
	else:
		raise ValueError('Mixing top and bottom indices needs the dense path.')

	keep = [eigs.indices.index(i) for i in indices]
	eigs.vectors = eigs.vectors[:, keep]
	eigs.indices = indices
	return eigs



"""
Statistics
"""

def _check_pair(v, w):
	v = np.asarray(v, dtype=np.float64)
	w = np.asarray(w, dtype=np.float64)
	try:
		assert v.shape == w.shape and v.ndim == 1
	except AssertionError:
		raise ValueError('Vectors of different lengths.')
	return v, w


def overlap(v, w):
	"""
	|<v, w>| for unit vectors; exactly 1 for w = ±v.
	"""
	v, w = _check_pair(v, w)

	vv, ww = np.dot(v, v), np.dot(w, w)
	try:
		assert abs(vv - 1) <= 1e-8 and abs(ww - 1) <= 1e-8
	except AssertionError:
		raise ValueError('overlap() expects unit vectors.')

	value = abs(np.dot(v, w)) / np.sqrt(vv * ww)
	return float(min(1.0, value))


def aligned_inf_dist(v, w):
	"""
	min over s = ±1 of √N·‖v − s·w‖_∞.
	"""
	v, w = _check_pair(v, w)
	scale = np.sqrt(v.size)
	return float(scale * min(
		np.max(np.abs(v - w)),
		np.max(np.abs(v + w))
	))


def delocalization_stat(vectors):
	"""
	√N times the largest sup-norm among the given unit vectors (columns).
	"""
	vectors = np.asarray(vectors, dtype=np.float64)
	if vectors.ndim == 1:
		vectors = vectors[:, None]
	return float(np.sqrt(vectors.shape[0]) * np.max(np.abs(vectors)))



@dataclass(frozen=True)
class GapStats:
	indices: tuple
	gaps: tuple
	n: int

	def gap(self, index):
		return self.gaps[self.indices.index(index)]



def gap_stats(eigs, indices):
	"""
	λ_i − λ_{i+1} for every requested i.
	"""
	gaps = []
	for i in indices:
		try:
			assert 1 <= i < eigs.n
			gaps.append(max(0.0, eigs.value(i) - eigs.value(i + 1)))
		except (AssertionError, IndexError):
			raise IndexError('Gap {} not available.'.format(i))

	return GapStats(tuple(indices), tuple(gaps), eigs.n)


def is_degenerate(eigs, index, threshold=DEGENERATE_GAP):
	"""
	True if λ_index is closer than the threshold to an available neighbour;
	eigenvector statistics at such an index are not reported.
	"""
	value = eigs.value(index)
	for other in (index - 1, index + 1):
		try:
			if abs(eigs.value(other) - value) < threshold:
				return True
		except IndexError:
			continue
	return False


def single_resample_sandwich(H, H_st, s, t):
	"""
	Evaluates Z_st·u_s·u_t <= λ₁ − μ₁ <= Z_st·v_s·v_t where v, u are the top
	eigenvectors of H and H_(st). Returns (lower, middle, upper).
	"""
	if s > t:
		s, t = t, s

	eigs = eigenpairs(H)
	eigs_st = eigenpairs(H_st)
	v, u = eigs.vector(1), eigs_st.vector(1)

	z = (H.entry(s, t) - H_st.entry(s, t)) * (1 if s == t else 2)

	return (
		z * u[s] * u[t],
		eigs.value(1) - eigs_st.value(1),
		z * v[s] * v[t]
	)
