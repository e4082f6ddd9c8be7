from django.test import SimpleTestCase
import numpy as np

from app.ensemble import EnsembleSpec, make_rng, pair_count
from app.chatterjee import *



class ResampledVectorsTestCase(SimpleTestCase):

	def setUp(self):
		self.Y = np.zeros(5)
		self.Y1 = np.full(5, 1.0)
		self.Y2 = np.full(5, 2.0)
		self.Y3 = np.full(5, 3.0)
		self.sigma = np.array([2, 3, 1, 5, 4]) - 1

	def resample(self, j, k):
		return resampled_vectors(self.Y, self.Y1, self.Y2, self.Y3, j, self.sigma, k)

	def test_replace_one(self):
		self.assertEqual(list(replace_one(self.Y, self.Y1, 3)), [0, 0, 0, 1, 0])
		self.assertEqual(list(self.Y), [0] * 5)

	def test_chosen_coordinate(self):
		Y_sigma, Y_j_sigma = self.resample(2, 3)
		self.assertEqual(list(Y_sigma), [0, 1, 1, 0, 0])
		self.assertEqual(list(Y_j_sigma), [0, 1, 2, 0, 0])

	def test_other_coordinate(self):
		Y_sigma, Y_j_sigma = self.resample(4, 3)
		self.assertEqual(list(Y_sigma), [0, 1, 1, 0, 0])
		self.assertEqual(list(Y_j_sigma), [0, 1, 1, 0, 3])

	def test_first_step(self):
		Y_sigma, Y_j_sigma = self.resample(1, 1)
		self.assertEqual(list(Y_sigma), [0] * 5)
		self.assertEqual(list(Y_j_sigma), [0, 3, 0, 0, 0])

	def test_all_steps(self):
		Y_sigma, Y_j_sigma = self.resample(3, 5)
		self.assertEqual(list(Y_sigma), [1, 1, 1, 0, 1])
		self.assertEqual(list(Y_j_sigma), [1, 1, 1, 3, 1])



class LinearStatisticTestCase(SimpleTestCase):

	def test_oracle(self):
		self.assertEqual(linear_oracle(1.0, 10, 1), 1.0)
		self.assertAlmostEqual(linear_oracle(2.0, 10, 4), 0.8)

	def test_monte_carlo(self):
		n_vars, k = 10, 4

		def draw(rng):
			return rng.standard_normal(n_vars)

		report = chatterjee_ik(np.sum, draw, n_vars, k, 20000, make_rng(3, 0, 'chatterjee'))

		self.assertLess(abs(report.estimate - linear_oracle(1.0, n_vars, k)), 5 * report.se)
		self.assertAlmostEqual(report.variance, 10, delta=0.5)
		self.assertAlmostEqual(report.bound, 1.1 * 2 * report.variance / 4)
		self.assertTrue(report.holds)

	def test_bad_arguments(self):
		def draw(rng):
			return rng.standard_normal(3)

		rng = make_rng(3, 0, 'chatterjee')
		for k, trials in ((0, 10), (4, 10), (2, 1)):
			with self.assertRaises(ValueError):
				chatterjee_ik(np.sum, draw, 3, k, trials, rng)



class MatrixStatisticTestCase(SimpleTestCase):

	def test_draw(self):
		spec = EnsembleSpec(6, 2)
		Y = matrix_draw(spec)(make_rng(1, 6, 0, 'chatterjee'))
		self.assertEqual(Y.shape, (pair_count(6),))
		self.assertTrue(set(np.abs(Y).tolist()) <= {0.0, 0.5})

	def test_statistic(self):
		spec = EnsembleSpec(4, 2)
		f = top_eigenvalue_statistic(spec)
		self.assertAlmostEqual(f(np.zeros(pair_count(4))), 1.0)

	def test_bound(self):
		spec = EnsembleSpec(8, 2)
		report = matrix_chatterjee(spec, 6, 40, 11)

		self.assertEqual(report.n_vars, pair_count(8))
		self.assertEqual(report.trials, 40)
		self.assertGreater(report.variance, 0)
		self.assertTrue(report.holds)

	def test_reproducible(self):
		spec = EnsembleSpec(6, 2)
		self.assertEqual(
			matrix_chatterjee(spec, 3, 5, 11), matrix_chatterjee(spec, 3, 5, 11))
