import os
import tempfile

from django.test import SimpleTestCase
import numpy as np

from app.ensemble import make_rng
from app.experiments import SUB_THRESHOLD, SweepConfig, run_trial
from app.analysis import *



def config(**kwargs):
	data = {
		'ns': [20, 30, 40, 50],
		'q': {'rule': 'constant', 'value': 3},
		'trials': 12,
		'seed': 77,
		'alphas': [1.0],
		'include_full': True,
		'bootstrap': 200,
	}
	data.update(kwargs)
	return SweepConfig.from_dict(data)


def read_lines(writer, report):
	with tempfile.TemporaryDirectory() as temp_dir:
		path = os.path.join(temp_dir, 'out.csv')
		writer(report, path, 'abc', '1.0')
		with open(path) as f:
			return f.read().splitlines()



class TopSampleTestCase(SimpleTestCase):

	def test_same_matrices_as_sweep(self):
		cfg = config(trials=3)
		samples = top_samples(cfg, 20)
		self.assertEqual([s.trial for s in samples], [0, 1, 2])

		for s in samples:
			record = run_trial(cfg, 20, s.trial)[0]
			self.assertAlmostEqual(s.lambda1, record.lambda1, places=12)
			self.assertAlmostEqual(s.chi, record.chi, places=12)
			self.assertGreaterEqual(s.lambda1, s.lambda2)

	def test_workers(self):
		cfg = config(trials=4)
		self.assertEqual(top_samples(cfg, 30, workers=1), top_samples(cfg, 30, workers=2))



class VarianceTestCase(SimpleTestCase):

	def test_centered_variance(self):
		L, var = centered_variance([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
		self.assertEqual(L, 2.0)
		self.assertEqual(var, 1.0)

		L, var = centered_variance([1.5, 2.5], [0.5, 1.5])
		self.assertEqual(L, 1.0)
		self.assertEqual(var, 0.0)

		lambdas = make_rng(4, 0, 'extra').standard_normal(50)
		chis = make_rng(5, 0, 'extra').standard_normal(50) / 10
		_, var = centered_variance(lambdas, chis)
		_, shifted = centered_variance(lambdas + 3.5, chis)
		self.assertAlmostEqual(var, shifted, places=12)

	def test_bootstrap(self):
		rng = make_rng(1, 0, 'bootstrap')
		self.assertEqual(bootstrap_ci(np.ones(10), rng, 100), (0.0, 0.0))

		values = make_rng(2, 0, 'extra').standard_normal(400)
		low, high = bootstrap_ci(values, rng, 500)
		self.assertLess(low, np.var(values, ddof=1))
		self.assertGreater(high, np.var(values, ddof=1))

	def test_fit_exponent(self):
		ns = np.array([100, 200, 400, 800])
		self.assertAlmostEqual(fit_exponent(ns, 3 * ns ** (-1 / 3)), -1 / 3)

	def test_scan(self):
		report = variance_scan(config())
		self.assertEqual([row.n for row in report.rows], [20, 30, 40, 50])

		for row in report.rows:
			self.assertEqual(row.trials, 12)
			self.assertGreater(row.var, 0)
			self.assertLessEqual(row.ci_low, row.ci_high)
			self.assertEqual(row.regime, 'standard')

		self.assertIsInstance(report.slope, float)
		with self.assertRaises(KeyError):
			report.row(60)

		lines = read_lines(variance_csv, report)
		self.assertEqual(lines[1], ','.join(VARIANCE_HEADER))
		self.assertEqual(len(lines), 7)
		self.assertTrue(lines[-1].startswith('slope,,,,'))

	def test_single_size(self):
		report = variance_scan(config(ns=[20], trials=6))
		self.assertEqual(len(report.rows), 1)
		self.assertIsNone(report.slope)

		lines = read_lines(variance_csv, report)
		self.assertEqual(lines[-1], 'slope,,,,,,,,')



class MarginTestCase(SimpleTestCase):

	def test_check(self):
		variance = VarianceReport(
			rows = (VarianceRow(10, 2.0, 5, 2.0, 0.01, 0.0, 0.1, 0.1, 'standard'),),
			slope = -1.0,
			raw_slope = -1.0
		)
		rows = [
			{'n': 10, 'k': 0, 'overlap_sq_mean': 1.0, 'regime': 'standard'},
			{'n': 10, 'k': 5, 'overlap_sq_mean': 0.5, 'regime': 'standard'},
			{'n': 10, 'k': 50, 'overlap_sq_mean': 0.2, 'regime': SUB_THRESHOLD},
			{'n': 20, 'k': 5, 'overlap_sq_mean': 0.5, 'regime': 'standard'},
		]

		report = hmain1_check(rows, variance)
		self.assertEqual([(r.n, r.k) for r in report.rows], [(10, 5), (10, 50)])
		self.assertAlmostEqual(report.rows[0].rhs, 2.0)
		self.assertAlmostEqual(report.rows[0].ratio, 0.25)
		self.assertAlmostEqual(report.max_ratio, 0.25)

	def test_nothing_to_check(self):
		variance = VarianceReport((), 0.0, 0.0)
		report = hmain1_check([], variance)
		self.assertEqual(report.rows, ())
		self.assertIsNone(report.max_ratio)



class GapTestCase(SimpleTestCase):

	def test_tails(self):
		tails = gap_tails([0.001, 0.005, 0.1], 10, (0.1, 1.0))
		self.assertAlmostEqual(tails[0.1], 2 / 3)
		self.assertEqual(tails[1.0], 1.0)

		row = GapRow(10, 2.0, 3, 0.01, tails)
		self.assertAlmostEqual(row.normalized_tail(1.0), 1 / np.log(10))

	def test_experiment(self):
		report = gap_experiment(config(ns=[20, 40], trials=8), deltas=(0.5, 2.0))
		self.assertEqual(len(report.rows), 2)

		for row in report.rows:
			self.assertEqual(row.trials, 8)
			self.assertGreater(row.median, 0)
			self.assertLessEqual(row.tails[0.5], row.tails[2.0])

		lines = read_lines(gap_csv, report)
		self.assertEqual(lines[1], 'n,q,trials,median,tail_0.5,tail_2.0')

	def test_needs_two_sizes(self):
		with self.assertRaises(ValueError):
			gap_experiment(config(ns=[20]))



class CollapseTestCase(SimpleTestCase):

	def scaled_curves(self, exponent):
		curves = {}
		for n in (100, 200, 400):
			ks = n ** exponent * np.geomspace(0.01, 10, 12)
			curves[n] = (ks, np.exp(-ks / n ** exponent))
		return curves

	def test_constant_curves(self):
		curves = {n: ([1, 10, 100], [0.5, 0.5, 0.5]) for n in (10, 20, 40)}
		report = collapse_one(curves, 1.0)
		self.assertTrue(report.defined)
		self.assertEqual(report.error, 0.0)

	def test_best_exponent(self):
		exponents = (1.5, 5 / 3, 11 / 6)
		reports = scaling_collapse(self.scaled_curves(5 / 3), exponents)

		self.assertEqual(len(reports), 3)
		self.assertEqual(best_exponent(reports), 5 / 3)
		self.assertLess(reports[1].error, 1e-9)
		self.assertGreater(reports[0].error, 0.01)

		lines = read_lines(collapse_csv, reports)
		self.assertEqual(lines[1], 'exponent,error,abscissa_low,abscissa_high,best')
		self.assertEqual([line.split(',')[-1] for line in lines[2:]], ['0', '1', '0'])

	def test_no_overlap(self):
		curves = {n: ([1, 2], [0.9, 0.8]) for n in (10, 100, 1000)}
		report = collapse_one(curves, 1.0)
		self.assertFalse(report.defined)

		with self.assertRaises(InsufficientOverlap):
			scaling_collapse(curves, [1.0])

	def test_too_few_curves(self):
		curves = self.scaled_curves(5 / 3)
		del curves[400]
		with self.assertRaises(ValueError):
			scaling_collapse(curves, [5 / 3])
		with self.assertRaises(ValueError):
			scaling_collapse({n: ([1], [1.0]) for n in (1, 2, 3)}, [1.0])

	def test_index_prefactor(self):
		self.assertEqual(index_prefactor(100, 1), 1)
		self.assertEqual(index_prefactor(100, 100), 1)
		self.assertAlmostEqual(index_prefactor(100, 50), 50 ** (2 / 3))

		curves = self.scaled_curves(5 / 3)
		plain = collapse_one(curves, 5 / 3)
		shifted = collapse_one(curves, 5 / 3, index=8)
		self.assertAlmostEqual(shifted.low - plain.low, np.log(8 ** (2 / 3)))



class ResolventStudyTestCase(SimpleTestCase):

	def test_trial(self):
		cfg = config(ns=[30], trials=1, window_points=3)
		rows, grid = resolvent_trial(cfg, 30, 0)

		self.assertEqual([row['k'] for row in rows], cfg.ks_for(30))
		self.assertEqual(rows[0]['drift'], 0.0)
		self.assertEqual(rows[0]['lambda1_drift'], 0.0)
		self.assertGreater(rows[-1]['drift'], 0)
		self.assertIn(rows[0]['detect'], (True, False))
		self.assertEqual(len(grid), 81)

		for row in rows:
			self.assertEqual(set(RESOLVENT_HEADER) - set(row), set())

		# √N·‖v‖_∞ lies in [1, √N] for unit vectors
		self.assertGreaterEqual(rows[0]['delocalization'], 1.0)
		self.assertLess(rows[0]['delocalization'], np.sqrt(30))

	def test_centered_models_only(self):
		adjacency = config(ns=[30], trials=1, model='er-adjacency')
		with self.assertRaises(ValueError):
			resolvent_trial(adjacency, 30, 0)
		with self.assertRaises(ValueError):
			resolvent_study(adjacency, 30, range(1))

		centered = config(ns=[30], trials=1, window_points=3, alphas=[],
			include_full=False, model='er-centered')
		rows, _ = resolvent_study(centered, 30, range(1))
		self.assertEqual([row['k'] for row in rows], [0])

	def test_study(self):
		cfg = config(ns=[30], trials=2, window_points=3, alphas=[], include_full=False)
		rows, grid = resolvent_study(cfg, 30, range(2))
		self.assertEqual([row['trial'] for row in rows], [0, 1])
		self.assertEqual(len(grid), 2 * 81)
