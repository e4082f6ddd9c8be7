"""
Resolvent probes R(z) = (H − z)⁻¹ at edge scale: entries, m(z), the Ward
identity, local-law and entry-size residuals, the eigenvector link and the
drift of R and λ₁ under resampling.
"""
from dataclasses import dataclass
import logging
import math

import numpy as np
import scipy.linalg
from scipy.sparse import identity
from scipy.sparse.linalg import splu

from app.edge_model import StieltjesValue, edge_location, m_star
from app.spectral import SolverFailure, eigenpairs, use_dense
from utils.files import atomic_write, csv_text


logger = logging.getLogger('kohina.resolvent')


SOLVE_TOL = 1e-9

SYMMETRY_TOL = 1e-10

BLOCK = 256



def _check_z(z):
	z = complex(z)
	try:
		assert z.imag > 0
	except AssertionError:
		raise ValueError('The spectral parameter needs Im z > 0.')
	return z



class ResolventSolver:
	"""
	Evaluates columns of R(z) for one matrix.

	Below the dense cap the eigendecomposition is computed once and every R
	is assembled from it. Above the cap H − z is factorized per z with a
	sparse LU; the off-diagonal shift of the centered adjacency matrix is a
	rank-one term and is handled by Sherman–Morrison. Every solve gets one
	refinement step and a residual check.
	"""

	def __init__(self, H, cap=None):
		self.H = H
		self.n = H.n
		self.dense = use_dense(H.n, cap)
		self._factors = {}

		if self.dense:
			self.eigenvalues, self.eigenvectors = scipy.linalg.eigh(H.to_dense())


	"""
	Sparse path
	"""

	def _factor(self, z):
		if z not in self._factors:
			if len(self._factors) >= 4:
				self._factors.pop(next(iter(self._factors)))

			shift = self.H.shift
			B = self.H.to_scipy().astype(np.complex128) \
				- (shift + z) * identity(self.n, dtype=np.complex128, format='csc')

			try:
				lu = splu(B.tocsc())
			except RuntimeError as error:
				raise SolverFailure('LU of H − z failed: {}'.format(error))

			y = lu.solve(np.ones(self.n, dtype=np.complex128)) if shift else None
			self._factors[z] = (lu, y)

		return self._factors[z]


	def _raw_solve(self, z, b):
		lu, y = self._factor(z)
		x = lu.solve(b)
		if y is not None:
			s = self.H.shift
			x = x - np.outer(y, s * x.sum(axis=0) / (1 + s * y.sum())).reshape(x.shape)
		return x


	def _apply(self, z, x):
		return self.H.matvec(x) - z * x


	def solve(self, z, b):
		"""
		x with (H − z)x = b, for a vector or a block of columns.
		"""
		z = _check_z(z)
		b = np.asarray(b, dtype=np.complex128)

		x = self._raw_solve(z, b)
		x = x + self._raw_solve(z, b - self._apply(z, x))

		residual = np.linalg.norm(b - self._apply(z, x), axis=0)
		scale = np.linalg.norm(b, axis=0)
		if np.any(residual > SOLVE_TOL * np.maximum(scale, 1.0)):
			raise SolverFailure('Shifted solve residual {:.3e} at z = {}.'.format(
				float(np.max(residual)), z))

		return x


	"""
	Both paths
	"""

	def columns(self, z, js):
		"""
		The columns R[:, j] for the given j, as an n × len(js) array.
		"""
		z = _check_z(z)
		js = np.asarray(js, dtype=np.int64)

		if self.dense:
			V = self.eigenvectors
			weights = 1 / (self.eigenvalues - z)
			return V @ (weights[:, None] * V[js, :].T)

		b = np.zeros((self.n, js.size), dtype=np.complex128)
		b[js, np.arange(js.size)] = 1
		return self.solve(z, b)


	def column_blocks(self, z, size=BLOCK):
		"""
		Yields (js, R[:, js]) over all columns in blocks.
		"""
		for start in range(0, self.n, size):
			js = np.arange(start, min(start + size, self.n))
			yield js, self.columns(z, js)


	def diagonal(self, z):
		z = _check_z(z)
		if self.dense:
			weights = 1 / (self.eigenvalues - z)
			return (self.eigenvectors ** 2) @ weights

		diag = np.empty(self.n, dtype=np.complex128)
		for js, block in self.column_blocks(z):
			diag[js] = block[js, np.arange(js.size)]
		return diag


	def stieltjes(self, z):
		"""
		m(z) = Tr R(z)/N; from the eigenvalues on the dense path and from the
		diagonal of R otherwise.
		"""
		z = _check_z(z)
		if self.dense:
			return complex(np.mean(1 / (self.eigenvalues - z)))
		return complex(np.mean(self.diagonal(z)))



"""
Probes
"""

@dataclass
class ResolventProbe:
	z: complex
	pairs: list
	values: list
	m: complex
	columns: dict

	@property
	def eta(self):
		return self.z.imag

	def value(self, i, j):
		return self.values[self.pairs.index((i, j))]



def probe(H, z, pairs, solver=None, cap=None):
	"""
	R_ij(z) for the requested (0-based) pairs, with the full columns of every
	index involved and m(z).
	"""
	z = _check_z(z)
	solver = solver or ResolventSolver(H, cap)
	pairs = [(int(i), int(j)) for i, j in pairs]

	involved = sorted({i for pair in pairs for i in pair})
	block = solver.columns(z, involved)
	columns = {j: block[:, c] for c, j in enumerate(involved)}

	values = []
	for i, j in pairs:
		value = columns[j][i]
		if abs(value - columns[i][j]) > SYMMETRY_TOL * max(1.0, abs(value)):
			raise SolverFailure('R is not symmetric at ({}, {}).'.format(i, j))
		if i == j and value.imag <= 0:
			raise SolverFailure('Im R_ii <= 0 at i = {}.'.format(i))
		values.append(complex(value))

	if len(involved) == H.n:
		m = complex(np.mean([columns[i][i] for i in range(H.n)]))
	else:
		m = solver.stieltjes(z)

	return ResolventProbe(z, pairs, values, m, columns)


def ward_check(probe):
	"""
	Largest relative residual of Σ_l R_il conj(R_jl) = Im R_ij / η over the
	probed pairs.
	"""
	eta = probe.eta
	worst = 0.0
	for (i, j), value in zip(probe.pairs, probe.values):
		lhs = np.sum(probe.columns[i] * np.conj(probe.columns[j]))
		rhs = value.imag / eta
		residual = abs(lhs - rhs) / (abs(value.imag) / eta + 1e-30)
		worst = max(worst, float(residual))
	return worst



"""
Grids
"""

def edge_window(model, n, delta, points=17):
	"""
	z = E + iη with |E − 𝓛| <= N^{−2/3+δ} on an even grid and η = N^{−2/3−δ}.
	"""
	edge = edge_location(model)
	width = n ** (-2 / 3 + delta)
	eta = n ** (-2 / 3 - delta)
	energies = edge + np.linspace(-width, width, points)
	return energies + 1j * eta


def law_grid(n, points=9, eps0=0.1):
	"""
	(κ, η) pairs: κ on both sides of the edge from N^{−2/3} to 1 and at the
	edge, η log-spaced from N^{ε₀−1} to 1.
	"""
	side = np.geomspace(n ** (-2 / 3), 1, points // 2)
	kappas = np.concatenate([-side[::-1], [0.0], side])
	etas = np.geomspace(n ** (eps0 - 1), 1, points)
	return [(float(k), float(e)) for k in kappas for e in etas]



@dataclass(frozen=True)
class GridPoint:
	kappa: float
	eta: float
	residual: float
	bound: float

	@property
	def ratio(self):
		return self.residual / self.bound



def grid_to_csv(points, path, config_hash='-', artifact_version='-'):
	rows = [
		{'kappa': p.kappa, 'eta': p.eta, 'residual': p.residual, 'bound': p.bound}
		for p in points
	]
	return atomic_write(path, csv_text(
		['kappa', 'eta', 'residual', 'bound'], rows, config_hash, artifact_version))


def _sparsity(H, model, q=None):
	q = q or model.q or (H.spec.q if H.spec is not None else None)
	try:
		assert q is not None
	except AssertionError:
		raise ValueError('The sparsity q is unknown.')
	return q



"""
Residuals
"""

def local_law_residual(H, model, grid, solver=None, q=None):
	"""
	|m(𝓛 + w) − m_⋆(𝓛 + w)| against 1/(Nη) + 1/q³ + (|κ| + η)^{1/4}
	(1/(Nη) + 1/q³)^{1/2} for every w = κ + iη of the grid.
	"""
	solver = solver or ResolventSolver(H)
	q = _sparsity(H, model, q)
	edge = edge_location(model)
	n = H.n

	points = []
	for kappa, eta in grid:
		z = complex(edge + kappa, eta)
		empirical = StieltjesValue(z, solver.stieltjes(z))
		predicted = StieltjesValue(z, m_star(z, model))
		residual = abs(empirical.m - predicted.m)

		small = 1 / (n * eta) + q ** -3
		bound = small + (abs(kappa) + eta) ** 0.25 * math.sqrt(small)

		points.append(GridPoint(kappa, eta, float(residual), bound))

	return points



@dataclass(frozen=True)
class EntryLawStats:
	max_entry_dev: float
	max_im: float
	entry_norm: float
	im_norm: float



def entry_law_residual(H, model, delta, solver=None, q=None, points=17):
	"""
	max_ij ||R_ij| − δ_ij| and max_ij |Im R_ij| over the edge window, each
	also divided by its scale 1/q + 1/(Nη) and 1/(Nη).
	"""
	solver = solver or ResolventSolver(H)
	q = _sparsity(H, model, q)
	n = H.n

	max_dev, max_im = 0.0, 0.0
	for z in edge_window(model, n, delta, points):
		for js, block in solver.column_blocks(z):
			magnitude = np.abs(block)
			magnitude[js, np.arange(js.size)] -= 1
			max_dev = max(max_dev, float(np.max(np.abs(magnitude))))
			max_im = max(max_im, float(np.max(np.abs(block.imag))))

	eta = n ** (-2 / 3 - delta)
	return EntryLawStats(
		max_entry_dev = max_dev,
		max_im = max_im,
		entry_norm = max_dev / (1 / q + 1 / (n * eta)),
		im_norm = max_im * n * eta
	)


def eigvec_link_residual(H, eigs, delta, solver=None):
	"""
	max_ij N·|η Im R_ij(λ₁ + iη) − v_i v_j| with η = N^{−2/3−δ}.
	"""
	solver = solver or ResolventSolver(H)
	n = H.n
	eta = n ** (-2 / 3 - delta)
	z = complex(eigs.value(1), eta)
	v = eigs.vector(1)

	worst = 0.0
	for js, block in solver.column_blocks(z):
		diff = eta * block.imag - np.outer(v, v[js])
		worst = max(worst, float(np.max(np.abs(diff))))

	return n * worst



@dataclass(frozen=True)
class DetectionReport:
	holds: bool
	index: int
	lhs: float
	rhs: float
	converse: float



def detect_top_from_resolvent(H, E, eta, solver=None):
	"""
	Checks that some i has max(η, |λ_j − E|)⁻² <= 2Nη⁻¹ Im R_ii(E + iη) for
	every j, scanning all i. Also reports max_i Nη⁻¹ Im R_ii·min_j |λ_j − E|².
	Needs the dense path.
	"""
	solver = solver or ResolventSolver(H)
	try:
		assert solver.dense
	except AssertionError:
		raise ValueError('detect_top_from_resolvent() needs all eigenvalues.')

	try:
		assert eta > 0
	except AssertionError:
		raise ValueError('Need eta > 0.')

	n = H.n
	im_diag = solver.diagonal(complex(E, eta)).imag
	best = int(np.argmax(im_diag))

	distances = np.abs(solver.eigenvalues - E)
	lhs = float(np.max(np.maximum(eta, distances) ** -2))
	rhs = float(2 * n / eta * im_diag[best])

	return DetectionReport(
		holds = lhs <= rhs * (1 + 1e-12),
		index = best,
		lhs = lhs,
		rhs = rhs,
		converse = float(n / eta * im_diag[best] * np.min(distances) ** 2)
	)



"""
Resampling drift
"""

def resolvent_drift(H, Hk, window, solver=None, solver_k=None):
	"""
	sup over the window and all (i, j) of Nη|Im R^[k]_ij(z) − Im R_ij(z)|.
	"""
	try:
		assert H.n == Hk.n
	except AssertionError:
		raise ValueError('Matrices of different sizes.')

	if H.same_as(Hk):
		return 0.0

	solver = solver or ResolventSolver(H)
	solver_k = solver_k or ResolventSolver(Hk)
	n = H.n

	worst = 0.0
	for z in window:
		z = complex(z)
		for start in range(0, n, BLOCK):
			js = np.arange(start, min(start + BLOCK, n))
			diff = solver_k.columns(z, js).imag - solver.columns(z, js).imag
			worst = max(worst, n * z.imag * float(np.max(np.abs(diff))))

	return worst



@dataclass(frozen=True)
class Lambda1Drift:
	k: int
	drift: float
	normalized: float



def lambda1_drift(H, Hk, delta, k=None, eigs=None, eigs_k=None):
	"""
	|λ₁(H) − λ₁(H^[k])| and the same times N^{2/3+δ}.
	"""
	eigs = eigs or eigenpairs(H)
	eigs_k = eigs_k or eigenpairs(Hk)

	drift = abs(eigs.value(1) - eigs_k.value(1))
	return Lambda1Drift(k, drift, drift * H.n ** (2 / 3 + delta))
