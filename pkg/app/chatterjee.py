"""
Monte Carlo estimate of

	I_k = E[(f(Y) − f(Y^(j)))(f(Y^σ[k−1]) − f(Y^(j)∘σ[k−1]))]

for a uniform coordinate j and a uniform permutation σ, next to its upper
bound ((n + 1)/n)·2Var(f(Y))/k. Y′, Y″ and Y‴ are independent copies of Y.
"""
from dataclasses import dataclass
import logging

import numpy as np

from app.ensemble import (
	SparseSymMatrix, correction_term, diagonal_mask, make_rng, pair_count,
)
from app.experiments import mean_se
from app.spectral import eigenpairs


logger = logging.getLogger('kohina.chatterjee')



def replace_one(Y, Y1, j):
	"""
	Y^(j): the j-th component taken from Y′.
	"""
	out = Y.copy()
	out[j] = Y1[j]
	return out


def resampled_vectors(Y, Y1, Y2, Y3, j, sigma, k):
	"""
	(Y^σ[k−1], Y^(j)∘σ[k−1]). The first takes the components σ(1), ...,
	σ(k−1) from Y′; the second then replaces component j by Y″_j if j is
	among them and by Y‴_j otherwise. Indices are 0-based.
	"""
	chosen = np.asarray(sigma[:k - 1], dtype=np.int64)

	Y_sigma = Y.copy()
	Y_sigma[chosen] = Y1[chosen]

	Y_j_sigma = Y_sigma.copy()
	Y_j_sigma[j] = Y2[j] if j in set(chosen.tolist()) else Y3[j]

	return Y_sigma, Y_j_sigma



@dataclass(frozen=True)
class ChatterjeeReport:
	n_vars: int
	k: int
	trials: int
	estimate: float
	se: float
	variance: float
	bound: float

	@property
	def holds(self):
		"""
		The bound checked with three standard errors of slack.
		"""
		return self.estimate <= self.bound + 3 * self.se



def chatterjee_ik(f, draw, n_vars, k, trials, rng):
	"""
	draw(rng) returns one Y as an array of n_vars components; f maps such an
	array to a number.
	"""
	try:
		assert 1 <= k <= n_vars
		assert trials >= 2
	except AssertionError:
		raise ValueError('Need 1 <= k <= n_vars and trials >= 2.')

	products, values = [], []
	for _ in range(trials):
		Y, Y1, Y2, Y3 = draw(rng), draw(rng), draw(rng), draw(rng)
		j = int(rng.integers(0, n_vars))
		sigma = rng.permutation(n_vars)

		Y_sigma, Y_j_sigma = resampled_vectors(Y, Y1, Y2, Y3, j, sigma, k)

		f_Y = f(Y)
		products.append((f_Y - f(replace_one(Y, Y1, j))) * (f(Y_sigma) - f(Y_j_sigma)))
		values.append(f_Y)

	estimate, se = mean_se(products)
	variance = float(np.var(values, ddof=1))

	return ChatterjeeReport(
		n_vars = n_vars,
		k = k,
		trials = trials,
		estimate = estimate,
		se = se,
		variance = variance,
		bound = (n_vars + 1) / n_vars * 2 * variance / k
	)


def linear_oracle(coordinate_var, n_vars, k):
	"""
	I_k for f = sum of coordinates: the coordinate variance when j is not
	among the first k − 1 resampled, minus it when it is.
	"""
	return coordinate_var * (1 - 2 * (k - 1) / n_vars)



"""
Matrices
"""

def matrix_draw(spec):
	"""
	Y is the vector of all N(N+1)/2 upper-triangle entries of H.
	"""
	index = np.arange(pair_count(spec.n), dtype=np.int64)
	diagonal = diagonal_mask(spec.n, index)

	def draw(rng):
		return spec.draw(rng, diagonal)

	return draw


def top_eigenvalue_statistic(spec, cap=None):
	"""
	f(Y) = λ₁ − 𝓧 of the matrix with entries Y. The constant L of
	λ₁ − L − 𝓧 drops out of both I_k and the variance.
	"""
	index = np.arange(pair_count(spec.n), dtype=np.int64)

	def f(Y):
		H = SparseSymMatrix(spec.n, index, Y, spec=spec)
		return eigenpairs(H, (1,), cap=cap).value(1) - correction_term(H).value

	return f


def matrix_chatterjee(spec, k, trials, master_seed, cap=None):
	rng = make_rng(master_seed, spec.n, k, 'chatterjee')
	logger.info('I_k at N=%d k=%d: %d trials', spec.n, k, trials)
	return chatterjee_ik(
		top_eigenvalue_statistic(spec, cap),
		matrix_draw(spec),
		pair_count(spec.n),
		k,
		trials,
		rng
	)
