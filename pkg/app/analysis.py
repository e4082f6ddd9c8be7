"""
Studies built on the top of the spectrum or on finished sweep summaries:
variance scans, the gap law, the overlap-versus-variance inequality, the
scaling collapse of overlap curves and the per-trial resolvent study.
"""
from dataclasses import dataclass
import logging
import math

import numpy as np

from app.edge_model import EdgeModel, edge_location
from app.ensemble import correction_term, make_rng, sample
from app.experiments import (
	FLAG_DEGENERATE, FLAG_SOLVER, SUB_THRESHOLD, parallel_map, regime,
)
from app.resample import ResamplePair, resample_to
from app.resolvent import (
	ResolventSolver, detect_top_from_resolvent, edge_window,
	entry_law_residual, eigvec_link_residual, lambda1_drift, law_grid,
	local_law_residual, resolvent_drift,
)
from app.spectral import (
	SolverFailure, delocalization_stat, dense_cap, eigenpairs, is_degenerate,
)
from utils.files import atomic_write, csv_text


logger = logging.getLogger('kohina.analysis')



class InsufficientOverlap(ValueError):
	pass



"""
Top of the spectrum of the base matrices
"""

@dataclass(frozen=True)
class TopSample:
	trial: int
	lambda1: float
	lambda2: float
	chi: float



def _top_job(job):
	spec, master_seed, trial, cap = job
	H = sample(spec, make_rng(master_seed, spec.n, trial, 'base'), seed=master_seed)
	try:
		eigs = eigenpairs(H, (1,), cap=cap)
	except SolverFailure as error:
		logger.warning('N=%d trial %d: %s', spec.n, trial, error)
		return None
	return TopSample(trial, eigs.value(1), eigs.value(2), correction_term(H).value)


def top_samples(cfg, n, workers=1, cap=None):
	"""
	λ₁, λ₂ and 𝓧 of every trial's base matrix H. These are the same matrices
	the sweep of the same config starts from.
	"""
	cap = dense_cap(cap)
	spec = cfg.spec_for(n)
	jobs = [(spec, cfg.master_seed, trial, cap) for trial in range(cfg.trials)]
	return [s for s in parallel_map(_top_job, jobs, workers) if s is not None]



"""
Variance
"""

def centered_variance(lambdas, chis):
	"""
	(L, Var(λ₁ − L − 𝓧)) with L the grand mean of λ₁ − 𝓧.
	"""
	values = np.asarray(lambdas, dtype=np.float64) - np.asarray(chis, dtype=np.float64)
	L = float(values.mean())
	return L, float(np.var(values - L, ddof=1))


def bootstrap_ci(values, rng, resamples=1000, level=0.95):
	"""
	Percentile interval of the sample variance.
	"""
	values = np.asarray(values, dtype=np.float64)
	picks = rng.integers(0, values.size, size=(resamples, values.size))
	variances = np.var(values[picks], axis=1, ddof=1)
	tail = (1 - level) / 2 * 100
	low, high = np.percentile(variances, [tail, 100 - tail])
	return float(low), float(high)


def fit_exponent(ns, values):
	"""
	Least-squares slope of log value against log N.
	"""
	slope, _ = np.polyfit(np.log(ns), np.log(values), 1)
	return float(slope)



@dataclass(frozen=True)
class VarianceRow:
	n: int
	q: float
	trials: int
	L: float
	var: float
	ci_low: float
	ci_high: float
	raw_var: float
	regime: str



@dataclass(frozen=True)
class VarianceReport:
	rows: tuple
	slope: float
	raw_slope: float

	def row(self, n):
		for row in self.rows:
			if row.n == n:
				return row
		raise KeyError(n)



def variance_scan(cfg, workers=1, cap=None, resamples=None):
	"""
	Per N the variance of λ₁ − L − 𝓧 with a bootstrap interval, the same for
	λ₁ alone, and the fitted exponents of both. The exponents need at least
	four sizes and are left out otherwise.
	"""
	resamples = resamples or cfg.option('bootstrap', 1000)

	rows = []
	for n in cfg.ns:
		samples = top_samples(cfg, n, workers, cap)
		try:
			assert len(samples) >= 2
		except AssertionError:
			raise SolverFailure('Fewer than 2 usable trials at N = {}.'.format(n))

		lambdas = [s.lambda1 for s in samples]
		chis = [s.chi for s in samples]
		L, var = centered_variance(lambdas, chis)

		rng = make_rng(cfg.master_seed, n, 0, 'bootstrap')
		low, high = bootstrap_ci(np.array(lambdas) - np.array(chis), rng, resamples)

		q = cfg.q_for(n)
		rows.append(VarianceRow(
			n = n, q = q, trials = len(samples), L = L, var = var,
			ci_low = low, ci_high = high,
			raw_var = float(np.var(lambdas, ddof=1)),
			regime = regime(n, q)
		))
		logger.info('variance N=%d: %.4e [%.4e, %.4e]', n, var, low, high)

	ns = [row.n for row in rows]
	if len(ns) < 4:
		return VarianceReport(tuple(rows), None, None)

	return VarianceReport(
		rows = tuple(rows),
		slope = fit_exponent(ns, [row.var for row in rows]),
		raw_slope = fit_exponent(ns, [row.raw_var for row in rows])
	)


VARIANCE_HEADER = [
	'n', 'q', 'trials', 'L', 'var', 'ci_low', 'ci_high', 'raw_var', 'regime',
]


def variance_csv(report, path, config_hash='-', artifact_version='-'):
	rows = [{key: getattr(row, key) for key in VARIANCE_HEADER} for row in report.rows]
	rows.append({
		'n': 'slope', 'q': None, 'trials': None, 'L': None, 'var': report.slope,
		'ci_low': None, 'ci_high': None, 'raw_var': report.raw_slope, 'regime': None,
	})
	return atomic_write(path, csv_text(
		VARIANCE_HEADER, rows, config_hash, artifact_version))



"""
Overlap against variance
"""

@dataclass(frozen=True)
class MarginRow:
	n: int
	k: int
	lhs: float
	rhs: float
	ratio: float
	regime: str



@dataclass(frozen=True)
class MarginReport:
	rows: tuple
	max_ratio: float



def hmain1_check(summary_rows, variance):
	"""
	E⟨v₁, v₁^[k]⟩² against N³·Var(λ₁ − L − 𝓧)/k for every k > 0 of the
	sweep. Sub-threshold rows are listed but left out of the maximum.
	"""
	rows = []
	for row in summary_rows:
		if row['k'] == 0 or row['overlap_sq_mean'] is None:
			continue
		try:
			var = variance.row(row['n']).var
		except KeyError:
			continue

		rhs = row['n'] ** 3 * var / row['k']
		rows.append(MarginRow(
			n = row['n'], k = row['k'], lhs = row['overlap_sq_mean'], rhs = rhs,
			ratio = row['overlap_sq_mean'] / rhs, regime = row['regime']
		))

	ratios = [r.ratio for r in rows if r.regime != SUB_THRESHOLD]
	return MarginReport(tuple(rows), max(ratios) if ratios else None)



"""
Gaps
"""

@dataclass(frozen=True)
class GapRow:
	n: int
	q: float
	trials: int
	median: float
	tails: dict

	def normalized_tail(self, delta):
		"""
		P(gap <= δ/N) / (δ log N).
		"""
		return self.tails[delta] / (delta * math.log(self.n))



@dataclass(frozen=True)
class GapReport:
	rows: tuple
	exponent: float



def gap_tails(gaps, n, deltas):
	gaps = np.asarray(gaps, dtype=np.float64)
	return {delta: float(np.mean(gaps <= delta / n)) for delta in deltas}


def gap_experiment(cfg, deltas=None, workers=1, cap=None):
	"""
	The empirical P(λ₁ − λ₂ <= δ/N) per δ and the median gap per N with its
	fitted exponent.
	"""
	try:
		assert len(cfg.ns) >= 2
	except AssertionError:
		raise ValueError('A gap experiment needs at least 2 sizes.')

	deltas = tuple(deltas or cfg.option('deltas', (0.1, 0.3, 1.0)))

	rows = []
	for n in cfg.ns:
		samples = top_samples(cfg, n, workers, cap)
		gaps = [s.lambda1 - s.lambda2 for s in samples]
		rows.append(GapRow(
			n = n,
			q = cfg.q_for(n),
			trials = len(gaps),
			median = float(np.median(gaps)),
			tails = gap_tails(gaps, n, deltas)
		))

	return GapReport(
		rows = tuple(rows),
		exponent = fit_exponent([r.n for r in rows], [r.median for r in rows])
	)


def gap_csv(report, path, config_hash='-', artifact_version='-'):
	deltas = sorted(report.rows[0].tails) if report.rows else []
	header = ['n', 'q', 'trials', 'median'] + ['tail_{}'.format(d) for d in deltas]

	rows = []
	for row in report.rows:
		line = {'n': row.n, 'q': row.q, 'trials': row.trials, 'median': row.median}
		for d in deltas:
			line['tail_{}'.format(d)] = row.tails[d]
		rows.append(line)

	return atomic_write(path, csv_text(header, rows, config_hash, artifact_version))



"""
Scaling collapse
"""

@dataclass(frozen=True)
class CollapseReport:
	exponent: float
	error: float
	low: float
	high: float
	abscissa: np.ndarray
	curves: dict

	@property
	def defined(self):
		return self.error is not None



def index_prefactor(n, index):
	"""
	min(j, N − j)^{2/3}, the threshold factor for v_j.
	"""
	return max(1, min(index, n - index)) ** (2 / 3)


def collapse_one(curves, exponent, index=None, points=64):
	"""
	Interpolates every curve on a common grid of log(k·f_N/N^exponent) and
	measures the largest vertical spread. f_N is 1 unless an eigen index is
	given.
	"""
	rescaled = {}
	for n, (ks, values) in curves.items():
		ks = np.asarray(ks, dtype=np.float64)
		values = np.asarray(values, dtype=np.float64)
		keep = ks > 0

		factor = index_prefactor(n, index) if index else 1.0
		x = np.log(ks[keep] * factor / n ** exponent)
		order = np.argsort(x)
		rescaled[n] = (x[order], values[keep][order])

	low = max(x[0] for x, _ in rescaled.values())
	high = min(x[-1] for x, _ in rescaled.values())

	if not low < high:
		return CollapseReport(exponent, None, low, high, np.empty(0), {})

	grid = np.linspace(low, high, points)
	interpolated = {n: np.interp(grid, x, y) for n, (x, y) in rescaled.items()}

	stack = np.vstack(list(interpolated.values()))
	error = float(np.max(stack.max(axis=0) - stack.min(axis=0)))

	return CollapseReport(exponent, error, low, high, grid, interpolated)


def scaling_collapse(curves, exponents, index=None, min_sizes=3):
	"""
	One report per exponent; raises InsufficientOverlap if no exponent gives
	a common abscissa range.
	"""
	try:
		assert len(curves) >= min_sizes
		for ks, values in curves.values():
			assert len(ks) >= 2 and len(ks) == len(values)
	except AssertionError:
		raise ValueError('Collapse needs {} curves of 2+ points each.'.format(min_sizes))

	reports = [collapse_one(curves, e, index) for e in exponents]

	if not any(r.defined for r in reports):
		raise InsufficientOverlap('No exponent gives overlapping ranges.')

	return reports


def best_exponent(reports):
	defined = [r for r in reports if r.defined]
	return min(defined, key=lambda r: r.error).exponent


def collapse_csv(reports, path, config_hash='-', artifact_version='-'):
	best = best_exponent(reports)
	rows = [{
		'exponent': r.exponent,
		'error': r.error,
		'abscissa_low': r.low if r.defined else None,
		'abscissa_high': r.high if r.defined else None,
		'best': int(r.exponent == best),
	} for r in reports]

	return atomic_write(path, csv_text(
		['exponent', 'error', 'abscissa_low', 'abscissa_high', 'best'],
		rows, config_hash, artifact_version))



"""
Resolvent study
"""

RESOLVENT_MODELS = ('centered-sparse', 'er-centered')

DELOCALIZATION_VECTORS = 5


def _check_resolvent_model(cfg):
	try:
		assert cfg.model in RESOLVENT_MODELS
	except AssertionError:
		raise ValueError(
			'The resolvent study needs a centered model, not {}.'.format(cfg.model))


def _resolvent_job(job):
	cfg, n, trial, cap = job
	return resolvent_trial(cfg, n, trial, cap)


def resolvent_trial(cfg, n, trial, cap=None):
	"""
	For one trial's H: local-law and entry-size residuals, the eigenvector
	link and the resolvent detection check; then for every k of the config
	the drift of Im R and of λ₁ between H and H^[k].

	Returns (rows, grid), one row per k and the local-law grid points.
	"""
	_check_resolvent_model(cfg)

	spec = cfg.spec_for(n)
	ks = cfg.ks_for(n)
	delta = cfg.delta
	points = cfg.option('window_points', 17)

	rp = ResamplePair.draw(spec, cfg.master_seed, trial, k_max=ks[-1])
	H = rp.base
	model = EdgeModel.for_matrix(H)

	flags = []
	solver = ResolventSolver(H, cap)
	top = max(1, min(DELOCALIZATION_VECTORS, n // 2 - 1))
	eigs = eigenpairs(H, tuple(range(1, top + 1)), cap=cap)
	if is_degenerate(eigs, 1):
		flags.append(FLAG_DEGENERATE)

	law = local_law_residual(H, model, law_grid(n), solver)
	entries = entry_law_residual(H, model, delta, solver, points=points)
	link = eigvec_link_residual(H, eigs, delta, solver)

	edge = edge_location(model)
	detection = None
	if solver.dense:
		detection = detect_top_from_resolvent(H, edge, n ** (-2 / 3 - delta), solver).holds

	window = edge_window(model, n, delta, points)
	common = {
		'n': n, 'trial': trial, 'q': spec.q, 'chi': model.chi, 'edge': edge,
		'law_max_ratio': max(p.ratio for p in law),
		'law_within_30': float(np.mean([p.ratio <= 30 for p in law])),
		'entry_norm': entries.entry_norm, 'im_norm': entries.im_norm,
		'link': link, 'detect': detection,
		'delocalization': delocalization_stat(eigs.vectors),
	}

	rows = []
	for k in ks:
		row = dict(common, k=k, flags=list(flags))
		Hk = resample_to(rp, k)
		try:
			row['drift'] = resolvent_drift(
				H, Hk, window, solver, ResolventSolver(Hk, cap))
			l1 = lambda1_drift(H, Hk, delta, k, eigs=eigs)
			row['lambda1_drift'] = l1.drift
			row['lambda1_drift_norm'] = l1.normalized
		except SolverFailure as error:
			logger.warning('N=%d trial %d k=%d: %s', n, trial, k, error)
			row['flags'].append(FLAG_SOLVER)
		rows.append(row)

	grid = [dict(n=n, trial=trial, kappa=p.kappa, eta=p.eta,
		residual=p.residual, bound=p.bound) for p in law]

	return rows, grid


def resolvent_study(cfg, n, trials, workers=1, cap=None):
	_check_resolvent_model(cfg)

	cap = dense_cap(cap)
	jobs = [(cfg, n, trial, cap) for trial in trials]

	rows, grid = [], []
	for trial_rows, trial_grid in parallel_map(_resolvent_job, jobs, workers):
		rows.extend(trial_rows)
		grid.extend(trial_grid)
	return rows, grid


RESOLVENT_HEADER = [
	'n', 'trial', 'k', 'q', 'chi', 'edge', 'law_max_ratio', 'law_within_30',
	'entry_norm', 'im_norm', 'link', 'detect', 'delocalization', 'drift',
	'lambda1_drift', 'lambda1_drift_norm', 'flags',
]
