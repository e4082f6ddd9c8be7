from dataclasses import asdict

from django.core.management.base import CommandError

from app.ensemble import pair_count
from app.experiments import heuristic_increments, overlap_identity
from app.management.lab import LabCommand
from utils.files import csv_text


HEURISTIC_HEADER = [
	'n', 'trial', 'steps', 'used', 'correlation', 'median_rel_error',
]

IDENTITY_HEADER = [
	'n', 'k', 'trials', 'estimate', 'estimate_se', 'reference', 'ratio',
	'sandwich_violations',
]



class Command(LabCommand):

	help = (
		"Single-step studies of the centered model: every visible change of "
		"λ₁ over the first steps of the resampling against its first-order "
		"prediction (heuristic.csv), and per k > 0 the Monte Carlo of "
		"E[Z_st Z_st^[k] v_s v_t v_s^[k] v_t^[k]] next to (2/N³)·E⟨v₁, v₁^[k]⟩² "
		"(identity.csv)."
	)

	name = 'single_step'

	def run(self, options):
		cfg = self.load_config(options)

		try:
			assert cfg.model == 'centered-sparse'
		except AssertionError:
			raise CommandError('The single-step studies need the centered model.')

		run = self.open_run(cfg, options)
		if run.finished:
			return

		cap = options.get('dense_cap')
		heuristic, identity = [], []

		for n in cfg.ns:
			spec = cfg.spec_for(n)
			steps = min(cfg.option('steps', 200), pair_count(n))

			for trial in range(cfg.trials):
				report = heuristic_increments(spec, steps, cfg.master_seed, trial, cap)
				heuristic.append(dict(asdict(report), n=n, trial=trial))

			for k in cfg.ks_for(n):
				if k == 0:
					continue
				report = overlap_identity(spec, k, cfg.trials, cfg.master_seed, cap)
				identity.append(dict(asdict(report), n=n, k=k, ratio=report.ratio))

				self.stdout.write('N={} k={}: ratio {}'.format(
					n, k, 'n/a' if report.ratio is None else '{:.3f}'.format(report.ratio)))

		run.write_output('heuristic.csv', csv_text(
			HEURISTIC_HEADER, heuristic, run.config_hash, run.artifact_version))
		run.write_output('identity.csv', csv_text(
			IDENTITY_HEADER, identity, run.config_hash, run.artifact_version))
		run.finish()

		self.stdout.write('Single-step studies done: {} trials, {} k values'.format(
			len(heuristic), len(identity)))
