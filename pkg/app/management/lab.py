"""
What the experiment commands have in common: the flags, reading and
validating the config file, opening the run and the batch loop of sweeps.
"""
import logging
import os

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from app.analysis import InsufficientOverlap
from app.edge_model import BranchError, QuadratureError
from app.experiments import ConfigError, SweepConfig, TrialRecord, run_trials
from app.runs import Run, RunError
from app.spectral import SolverFailure
from utils.json import read_json


logger = logging.getLogger('kohina.commands')


LAB_ERRORS = (
	BranchError, ConfigError, InsufficientOverlap, QuadratureError, RunError,
	SolverFailure, ValueError,
)



class LabCommand(BaseCommand):
	"""
	Subclasses implement run(options) and set name.
	"""
	name = None

	def add_arguments(self, parser):
		parser.add_argument(
			'--config',
			type = str,
			help = 'Experiment config (JSON). Its values override the flags.'
		)
		parser.add_argument(
			'--seed',
			type = int,
			help = 'Master seed, an unsigned 64-bit integer. Mandatory here '
				'or in the config.'
		)
		parser.add_argument(
			'--workers',
			type = int,
			help = 'Worker processes; defaults to LAB_WORKERS.'
		)
		parser.add_argument(
			'--out',
			type = str,
			help = 'Output root; defaults to LAB_OUT_DIR (env RMT_NOISE_OUT).'
		)
		parser.add_argument(
			'--dense-cap',
			type = int,
			help = 'Size from which iterative eigensolvers are used.'
		)
		parser.add_argument(
			'--resume',
			action = 'store_true',
			help = 'Continue a partially completed run.'
		)


	def handle(self, *args, **options):
		"""
		The command's main.
		"""
		if options.get('workers') is None:
			options['workers'] = settings.LAB_WORKERS
		options['out'] = options.get('out') or settings.LAB_OUT_DIR

		try:
			assert options['workers'] >= 1
			assert options.get('dense_cap') is None or options['dense_cap'] >= 2
		except AssertionError:
			raise CommandError('--workers must be >= 1 and --dense-cap >= 2')

		try:
			self.run(options)
		except LAB_ERRORS as error:
			raise CommandError(str(error))


	def run(self, options):
		raise NotImplementedError


	"""
	Helpers
	"""

	def load_config(self, options):
		"""
		Returns the validated SweepConfig; every problem is listed.
		"""
		path = options.get('config')
		if not path:
			raise CommandError('--config is required')
		if not os.path.exists(path):
			raise CommandError('No such config file: {}'.format(path))

		with open(path) as f:
			try:
				data = read_json(f.read())
			except ValueError as error:
				raise CommandError('Invalid JSON in {}: {}'.format(path, error))

		try:
			assert isinstance(data, dict)
		except AssertionError:
			raise CommandError('The config must be a JSON object.')

		if data.get('seed') is None and options.get('seed') is None:
			raise CommandError('A master seed is required (--seed or "seed").')

		try:
			return SweepConfig.from_dict(data, seed=options.get('seed'))
		except ConfigError as error:
			raise CommandError('Invalid config:\n  ' + '\n  '.join(error.problems))


	def open_run(self, cfg, options, name=None):
		run = Run.open(
			name or self.name, cfg.to_dict(), options['out'],
			resume = options.get('resume', False)
		)
		if run.finished:
			self.stdout.write('Run {} is complete, nothing to do'.format(run.directory))
		return run


	def write_csv(self, run, name, writer, report):
		writer(report, run.path(name), run.config_hash, run.artifact_version)
		run.register(name)


	def batch_runner(self, run, cfg, options):
		"""
		Returns runner(n) for the sweep functions: it computes the batches of
		size n the run lacks and returns the records of all of them.
		"""
		def runner(n):
			for index, trials in enumerate(cfg.batches(n)):
				if run.is_done(n, index):
					self.stdout.write('N={} batch {}: already done'.format(n, index))
					continue

				records = run_trials(
					cfg, n, trials, options['workers'], options.get('dense_cap'))
				run.write_batch(n, index, [r.to_dict() for r in records])
				self.stdout.write('N={} batch {}: {} records'.format(
					n, index, len(records)))

			return [TrialRecord.from_dict(row) for row in run.batch_rows(n)]

		return runner
