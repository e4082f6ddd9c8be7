"""
The Monte Carlo sweeps: experiment configs, per-trial records of the
overlap between top eigenvectors before and after k resampling steps, the
Erdős–Rényi variant, and the summaries written next to the records.

A trial is the unit of work: it owns its random substreams, so trials can be
computed in any order and by any number of workers.
"""
from dataclasses import asdict, dataclass, field, fields
from multiprocessing import Pool
import logging
import math

from django.conf import settings
import numpy as np

from app.ensemble import (
	LAW_KINDS, MODELS, EnsembleSpec, EntryLaw, center_er, correction_term,
	make_rng, pair_count, pair_from_index, sample,
)
from app.resample import (
	ResamplePair, apply_diffs, coupled_single_resample, resample_diffs,
	resample_to,
)
from app.spectral import (
	SolverFailure, aligned_inf_dist, dense_cap, eigenpairs, is_degenerate,
	overlap, single_resample_sandwich,
)
from utils.files import atomic_write, csv_text


logger = logging.getLogger('kohina.experiments')


FLAG_DEGENERATE = 'degenerate-gap'

FLAG_SOLVER = 'solver-failure'

SUB_THRESHOLD = 'sub-threshold'



class ConfigError(ValueError):
	"""
	Carries every problem found in a config, not just the first one.
	"""

	def __init__(self, problems):
		self.problems = list(problems)
		super().__init__('; '.join(self.problems))



"""
Configs
"""

@dataclass(frozen=True)
class QRule:
	"""
	q = N^value for the power rule, q = value for the constant rule.
	"""
	kind: str = 'power'
	value: float = 1 / 3

	def __call__(self, n):
		if self.kind == 'power':
			return n ** self.value
		return float(self.value)



OPTION_KEYS = (
	'bootstrap', 'chatterjee_ks', 'deltas', 'exponents', 'index_prefactor',
	'steps', 'window_points',
)

CONFIG_KEYS = (
	'alphas', 'batch_size', 'delta', 'eigen_index', 'include_full', 'ks',
	'law', 'model', 'ns', 'q', 'seed', 'trials',
) + OPTION_KEYS



@dataclass(frozen=True)
class SweepConfig:
	ns: tuple
	q_rule: QRule
	trials: int
	master_seed: int
	alphas: tuple = ()
	ks: tuple = ()
	include_full: bool = False
	model: str = 'centered-sparse'
	law: str = 'rademacher'
	eigen_index: object = 1
	batch_size: int = 25
	delta: float = 0.05
	options: dict = field(default_factory=dict, compare=False, hash=False)

	@classmethod
	def from_dict(cls, data, seed=None):
		"""
		Builds a config from parsed JSON. Values in the data win over the
		seed argument. Raises ConfigError listing every offending key.
		"""
		problems = []
		data = dict(data)

		for key in sorted(data):
			if key not in CONFIG_KEYS:
				problems.append('unknown key: {}'.format(key))

		ns = data.get('ns')
		if not isinstance(ns, list) or not ns \
				or not all(isinstance(n, int) and n >= 2 for n in ns):
			problems.append('ns: a non-empty list of integers >= 2 is needed')
			ns = []

		q_rule = QRule()
		q = data.get('q', {'rule': 'power', 'beta': 1 / 3})
		if not isinstance(q, dict):
			problems.append('q: expected {"rule": ..., ...}')
		elif q.get('rule') == 'power' and isinstance(q.get('beta'), (int, float)):
			q_rule = QRule('power', float(q['beta']))
		elif q.get('rule') == 'constant' and isinstance(q.get('value'), (int, float)) \
				and q['value'] > 0:
			q_rule = QRule('constant', float(q['value']))
		else:
			problems.append('q: rule must be power (beta) or constant (value > 0)')

		trials = data.get('trials')
		if not isinstance(trials, int) or trials < 1:
			problems.append('trials: an integer >= 1 is needed')

		master_seed = data.get('seed', seed)
		if not isinstance(master_seed, int) or master_seed < 0 \
				or master_seed >= 2 ** 64:
			problems.append('seed: an unsigned 64-bit integer is needed')

		model = data.get('model', 'centered-sparse')
		if model not in MODELS:
			problems.append('model: one of {}'.format(', '.join(MODELS)))

		law = data.get('law', 'rademacher')
		if law not in LAW_KINDS:
			problems.append('law: one of {}'.format(', '.join(LAW_KINDS)))

		eigen_index = data.get('eigen_index', 1)
		if not (eigen_index == 'N' or (isinstance(eigen_index, int) and eigen_index >= 1)):
			problems.append('eigen_index: a positive integer or "N"')

		alphas = data.get('alphas', list(settings.LAB_ALPHA_GRID))
		if not isinstance(alphas, list) \
				or not all(isinstance(a, (int, float)) and a >= 0 for a in alphas):
			problems.append('alphas: a list of non-negative exponents')
			alphas = []

		ks = data.get('ks', [])
		if not isinstance(ks, list) \
				or not all(isinstance(k, int) and k >= 0 for k in ks):
			problems.append('ks: a list of non-negative integers')
			ks = []

		batch_size = data.get('batch_size', 25)
		if not isinstance(batch_size, int) or batch_size < 1:
			problems.append('batch_size: an integer >= 1 is needed')

		delta = data.get('delta', settings.LAB_DELTA)
		if not isinstance(delta, (int, float)) or not 0 < delta < 1 / 3:
			problems.append('delta: a number in (0, 1/3)')

		include_full = data.get('include_full', False)
		if not isinstance(include_full, bool):
			problems.append('include_full: true or false')

		for n in ns:
			if ks and max(ks) > pair_count(n):
				problems.append('ks: {} exceeds M = {} at N = {}'.format(
					max(ks), pair_count(n), n))
			if isinstance(eigen_index, int) and eigen_index > n:
				problems.append('eigen_index: {} exceeds N = {}'.format(eigen_index, n))
			if model in MODELS and law in LAW_KINDS:
				try:
					EnsembleSpec(n, q_rule(n), EntryLaw(law), model)
				except ValueError as error:
					problems.append('q at N = {}: {}'.format(n, error))

		if problems:
			raise ConfigError(problems)

		return cls(
			ns = tuple(ns),
			q_rule = q_rule,
			trials = trials,
			master_seed = master_seed,
			alphas = tuple(float(a) for a in alphas),
			ks = tuple(ks),
			include_full = include_full,
			model = model,
			law = law,
			eigen_index = eigen_index,
			batch_size = batch_size,
			delta = float(delta),
			options = {key: data[key] for key in OPTION_KEYS if key in data}
		)

	def to_dict(self):
		"""
		The canonical form that is hashed into the run id.
		"""
		if self.q_rule.kind == 'power':
			q = {'rule': 'power', 'beta': self.q_rule.value}
		else:
			q = {'rule': 'constant', 'value': self.q_rule.value}

		data = {
			'ns': list(self.ns), 'q': q, 'trials': self.trials,
			'seed': self.master_seed, 'alphas': list(self.alphas),
			'ks': list(self.ks), 'include_full': self.include_full,
			'model': self.model, 'law': self.law,
			'eigen_index': self.eigen_index, 'batch_size': self.batch_size,
			'delta': self.delta,
		}
		data.update(self.options)
		return data

	def option(self, key, default=None):
		return self.options.get(key, default)

	def q_for(self, n):
		return self.q_rule(n)

	def spec_for(self, n):
		return EnsembleSpec(n, self.q_for(n), EntryLaw(self.law), self.model)

	def index_for(self, n):
		return n if self.eigen_index == 'N' else int(self.eigen_index)

	def ks_for(self, n):
		"""
		{0} ∪ {round(N^α)} ∪ explicit k's, capped at M, ascending.
		"""
		top = pair_count(n)
		ks = {0}
		ks.update(min(top, int(round(n ** a))) for a in self.alphas)
		ks.update(k for k in self.ks if k <= top)
		if self.include_full:
			ks.add(top)
		return sorted(ks)

	def batches(self, n):
		"""
		Trial ids grouped into the batches the manifest tracks.
		"""
		return [
			list(range(start, min(start + self.batch_size, self.trials)))
			for start in range(0, self.trials, self.batch_size)
		]



def regime(n, q):
	"""
	Sweeps with q < N^{1/9} are kept but marked.
	"""
	return SUB_THRESHOLD if q < n ** (1 / 9) else 'standard'



"""
Records
"""

@dataclass
class TrialRecord:
	"""
	One (N, k, trial) cell. lambda1 and gap12 refer to the tracked eigen
	index, which is 1 unless the config says otherwise.
	"""
	master_seed: int
	trial: int
	n: int
	q: float
	k: int
	index: int = 1
	model: str = 'centered-sparse'
	regime: str = 'standard'
	overlap: float = None
	aligned_inf_dist: float = None
	lambda1: float = None
	lambda1_k: float = None
	chi: float = None
	chi_k: float = None
	gap12: float = None
	changed: int = None
	flags: list = field(default_factory=list)

	def to_dict(self):
		return asdict(self)

	@classmethod
	def from_dict(cls, data):
		names = {f.name for f in fields(cls)}
		return cls(**{key: value for key, value in data.items() if key in names})

	@property
	def usable(self):
		return not (FLAG_DEGENERATE in self.flags or FLAG_SOLVER in self.flags)



def _gap(eigs, index):
	if index < eigs.n:
		return max(0.0, eigs.value(index) - eigs.value(index + 1))
	return max(0.0, eigs.value(index - 1) - eigs.value(index))


def _eigen(H, index, warm_start, cap):
	return eigenpairs(H, (index,), warm_start=warm_start, cap=cap)


def run_trial(cfg, n, trial, cap=None):
	"""
	All k-columns of one trial. Every column shares the trial's (H, H′) and
	pair ordering; the eigenvector at each k is solved afresh, warm started
	from the one of H.
	"""
	spec = cfg.spec_for(n)
	ks = cfg.ks_for(n)
	index = cfg.index_for(n)

	rp = ResamplePair.draw(spec, cfg.master_seed, trial, k_max=ks[-1])
	chi = correction_term(rp.base).value

	common = {
		'master_seed': cfg.master_seed, 'trial': trial, 'n': n, 'q': spec.q,
		'index': index, 'model': spec.model, 'regime': regime(n, spec.q),
		'chi': chi,
	}

	try:
		eigs = _eigen(rp.base, index, None, cap)
	except SolverFailure as error:
		logger.warning('N=%d trial %d: %s', n, trial, error)
		return [TrialRecord(k=k, flags=[FLAG_SOLVER], **common) for k in ks]

	base_flags = [FLAG_DEGENERATE] if is_degenerate(eigs, index) else []
	v = eigs.vector(index)
	value = eigs.value(index)

	records = []
	for k in ks:
		record = TrialRecord(
			k = k,
			lambda1 = value,
			gap12 = _gap(eigs, index),
			flags = list(base_flags),
			**common
		)
		records.append(record)

		if k == 0:
			record.overlap = 1.0
			record.aligned_inf_dist = 0.0
			record.lambda1_k = value
			record.chi_k = chi
			record.changed = 0
			continue

		Hk = resample_to(rp, k)
		record.chi_k = correction_term(Hk).value
		record.changed = rp.changed_count(k)

		try:
			eigs_k = _eigen(Hk, index, v, cap)
		except SolverFailure as error:
			logger.warning('N=%d trial %d k=%d: %s', n, trial, k, error)
			record.flags.append(FLAG_SOLVER)
			continue

		if is_degenerate(eigs_k, index) and FLAG_DEGENERATE not in record.flags:
			record.flags.append(FLAG_DEGENERATE)

		v_k = eigs_k.vector(index)
		record.overlap = overlap(v, v_k)
		record.aligned_inf_dist = aligned_inf_dist(v, v_k)
		record.lambda1_k = eigs_k.value(index)

	return records


def parallel_map(func, jobs, workers=1):
	"""
	[func(job) for job in jobs], spread over a process pool if workers > 1.
	The output order is the order of the jobs.
	"""
	jobs = list(jobs)
	if workers <= 1 or len(jobs) <= 1:
		return [func(job) for job in jobs]

	with Pool(min(workers, len(jobs))) as pool:
		return list(pool.imap(func, jobs))


def _trial_job(job):
	cfg, n, trial, cap = job
	return run_trial(cfg, n, trial, cap)


def run_trials(cfg, n, trials, workers=1, cap=None):
	"""
	Runs the given trial ids of size n, in parallel if asked to.
	"""
	cap = dense_cap(cap)
	jobs = [(cfg, n, trial, cap) for trial in trials]
	results = parallel_map(_trial_job, jobs, workers)
	return [record for records in results for record in records]


def sensitivity_sweep(cfg, workers=1, cap=None, runner=None):
	"""
	Records for every (N, k, trial) of the config plus their summary.

	runner(n), if given, delivers the records of size n instead; the
	commands pass one that goes through the run's batches.
	"""
	records = []
	for n in cfg.ns:
		logger.info('sweep N=%d q=%.3f: %d trials', n, cfg.q_for(n), cfg.trials)
		if runner is None:
			records.extend(run_trials(cfg, n, range(cfg.trials), workers, cap))
		else:
			records.extend(runner(n))

	return records, summarize(records)


def other_index_sweep(cfg, workers=1, cap=None, runner=None):
	"""
	The sweep for v_j, 2 <= j <= N − 1, in the centered model. Exploratory.
	"""
	try:
		assert cfg.model == 'centered-sparse'
		for n in cfg.ns:
			assert 1 <= cfg.index_for(n) <= n
	except AssertionError:
		raise ValueError('Other indices are swept in the centered model only.')

	return sensitivity_sweep(cfg, workers, cap, runner)



"""
Erdős–Rényi
"""

@dataclass(frozen=True)
class StickingRecord:
	n: int
	trial: int
	nu2: float
	nu1_centered: float
	shift: float
	residual: float



def sticking_residual(A, cap=None):
	"""
	N·|ν₂ − (ν̊₁ − a)| for the adjacency matrix A and its centering Å.
	"""
	centered, f, a = center_er(A)
	nu = eigenpairs(A, (1,), cap=cap)
	nu_centered = eigenpairs(centered, (1,), cap=cap)

	nu2 = nu.value(2)
	top = nu_centered.value(1)
	return nu2, top, a, A.n * abs(nu2 - (top - a))


def sticking_study(cfg, cap=None):
	"""
	The sticking residual of every trial's adjacency matrix.
	"""
	sticking = []
	for n in cfg.ns:
		spec = cfg.spec_for(n)
		for trial in range(cfg.trials):
			A = sample(spec, make_rng(cfg.master_seed, n, trial, 'base'),
				seed=cfg.master_seed)
			try:
				nu2, top, a, residual = sticking_residual(A, cap)
			except SolverFailure as error:
				logger.warning('sticking N=%d trial %d: %s', n, trial, error)
				continue
			sticking.append(StickingRecord(n, trial, nu2, top, a, residual))

	return sticking


def er_experiment(cfg, workers=1, cap=None, runner=None):
	"""
	The overlap sweep for w_ℓ of the adjacency matrix and, per trial, the
	sticking of ν₂ to the top of the centered spectrum.
	"""
	try:
		assert cfg.model == 'er-adjacency'
	except AssertionError:
		raise ValueError('er_experiment() wants model = er-adjacency.')

	records, summary = sensitivity_sweep(cfg, workers, cap, runner)
	return records, summary, sticking_study(cfg, cap)


STICKING_HEADER = ['n', 'trial', 'nu2', 'nu1_centered', 'shift', 'residual']


def sticking_csv(sticking, path, config_hash='-', artifact_version='-'):
	return atomic_write(path, csv_text(
		STICKING_HEADER, [asdict(s) for s in sticking], config_hash, artifact_version))



"""
Summaries
"""

def mean_se(values):
	"""
	Sample mean and its standard error; the error is 0 for a single value.
	"""
	values = np.asarray(values, dtype=np.float64)
	if values.size == 0:
		return None, None
	if values.size == 1:
		return float(values[0]), 0.0
	return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


SUMMARY_HEADER = [
	'n', 'q', 'k', 'index', 'regime', 'trials', 'excluded', 'degenerate',
	'solver_failures', 'overlap_mean', 'overlap_se', 'overlap_sq_mean',
	'overlap_sq_se', 'aligned_mean', 'aligned_se', 'changed_mean',
]


def summarize(records):
	"""
	One row per (N, k): means with standard errors over the usable records,
	flagged records counted.
	"""
	groups = {}
	for record in records:
		groups.setdefault((record.n, record.k), []).append(record)

	rows = []
	for (n, k), group in sorted(groups.items()):
		usable = [r for r in group if r.usable]

		overlaps = [r.overlap for r in usable]
		overlap_mean, overlap_se = mean_se(overlaps)
		sq_mean, sq_se = mean_se([x * x for x in overlaps])
		aligned_mean, aligned_se = mean_se([r.aligned_inf_dist for r in usable])
		changed_mean, _ = mean_se([r.changed for r in group if r.changed is not None])

		rows.append({
			'n': n, 'q': group[0].q, 'k': k, 'index': group[0].index,
			'regime': group[0].regime, 'trials': len(group),
			'excluded': len(group) - len(usable),
			'degenerate': sum(FLAG_DEGENERATE in r.flags for r in group),
			'solver_failures': sum(FLAG_SOLVER in r.flags for r in group),
			'overlap_mean': overlap_mean, 'overlap_se': overlap_se,
			'overlap_sq_mean': sq_mean, 'overlap_sq_se': sq_se,
			'aligned_mean': aligned_mean, 'aligned_se': aligned_se,
			'changed_mean': changed_mean,
		})

	return rows


def summary_csv(rows, path, config_hash='-', artifact_version='-'):
	return atomic_write(path, csv_text(
		SUMMARY_HEADER, rows, config_hash, artifact_version))


def curves(rows):
	"""
	{N: (ks, mean overlaps)} from summary rows, k = 0 left out.
	"""
	out = {}
	for row in rows:
		if row['k'] == 0 or row['overlap_mean'] is None:
			continue
		ks, values = out.setdefault(row['n'], ([], []))
		ks.append(row['k'])
		values.append(row['overlap_mean'])

	return {n: (np.array(ks, dtype=float), np.array(v)) for n, (ks, v) in out.items()}



"""
Single-step checks
"""

@dataclass(frozen=True)
class HeuristicReport:
	steps: int
	used: int
	correlation: float
	median_rel_error: float



def heuristic_increments(spec, steps, master_seed, trial=0, cap=None):
	"""
	Compares every visible one-step change λ₁^[k] − λ₁^[k−1] with its
	first-order prediction (1 + 1(i≠j))·v_i·(h′ − h)·v_j.
	"""
	rp = ResamplePair.draw(spec, master_seed, trial, k_max=steps)

	H = rp.base
	eigs = eigenpairs(H, cap=cap)

	actual, predicted = [], []
	for k in range(1, steps + 1):
		diffs = resample_diffs(rp, k - 1, k)
		if not diffs:
			continue

		(i, j), old, new = diffs[0]
		v = eigs.vector(1)
		factor = 1 if i == j else 2
		predicted.append(factor * v[i] * (new - old) * v[j])

		H = apply_diffs(H, diffs)
		step = eigenpairs(H, warm_start=v, cap=cap)
		actual.append(step.value(1) - eigs.value(1))
		eigs = step

	actual, predicted = np.array(actual), np.array(predicted)
	if actual.size < 2:
		return HeuristicReport(steps, int(actual.size), None, None)

	nonzero = actual != 0
	relative = np.abs(actual - predicted)[nonzero] / np.abs(actual[nonzero])

	return HeuristicReport(
		steps = steps,
		used = int(actual.size),
		correlation = float(np.corrcoef(actual, predicted)[0, 1]),
		median_rel_error = float(np.median(relative))
	)



@dataclass(frozen=True)
class IdentityReport:
	trials: int
	estimate: float
	estimate_se: float
	reference: float
	sandwich_violations: int

	@property
	def ratio(self):
		return self.estimate / self.reference if self.reference else None



def overlap_identity(spec, k, trials, master_seed, cap=None):
	"""
	Monte Carlo of E[Z_st Z_st^[k] v_s v_t v_s^[k] v_t^[k]] for a uniform pair
	(s, t), next to (2/N³)·E⟨v₁, v₁^[k]⟩². The sandwich inequality for the
	single resample is checked on every draw.
	"""
	n = spec.n
	products, squares = [], []
	violations = 0

	for trial in range(trials):
		rp = ResamplePair.draw(spec, master_seed, trial, k_max=k)
		rng = make_rng(master_seed, n, trial, 'identity')

		rows, cols = pair_from_index(n, rng.integers(0, pair_count(n), size=1))
		s, t = int(rows[0]), int(cols[0])

		coupled = coupled_single_resample(rp, k, s, t, rng)
		v = eigenpairs(rp.base, cap=cap).vector(1)
		v_k = eigenpairs(coupled.Hk, warm_start=v, cap=cap).vector(1)

		products.append(
			coupled.base.z_st * coupled.resampled.z_st
			* v[s] * v[t] * v_k[s] * v_k[t]
		)
		squares.append(float(np.dot(v, v_k)) ** 2)

		lower, middle, upper = single_resample_sandwich(
			rp.base, coupled.H_st, s, t)
		if not lower - 1e-10 <= middle <= upper + 1e-10:
			violations += 1
			logger.error('Sandwich violated: %r <= %r <= %r', lower, middle, upper)

	estimate, estimate_se = mean_se(products)
	square_mean, _ = mean_se(squares)

	return IdentityReport(
		trials = trials,
		estimate = estimate,
		estimate_se = estimate_se,
		reference = 2 / n ** 3 * square_mean,
		sandwich_violations = violations
	)
