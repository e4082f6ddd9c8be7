from django.core.management.base import CommandError

from app.analysis import RESOLVENT_HEADER, RESOLVENT_MODELS, resolvent_study
from app.management.lab import LabCommand
from app.resolvent import GridPoint, grid_to_csv
from utils.files import csv_text



class Command(LabCommand):

	help = (
		"Resolvent probes per trial: local-law and entry residuals, the "
		"eigenvector link, the detection check and, for every k, the drift "
		"of Im R and of λ₁. Writes resolvent.csv and local_law.csv."
	)

	name = 'resolvent'

	def run(self, options):
		cfg = self.load_config(options)

		try:
			assert cfg.model in RESOLVENT_MODELS
		except AssertionError:
			raise CommandError('The resolvent study needs "model": {}.'.format(
				' or '.join(RESOLVENT_MODELS)))

		run = self.open_run(cfg, options)
		if run.finished:
			return

		for n in cfg.ns:
			for index, trials in enumerate(cfg.batches(n)):
				if run.is_done(n, index):
					self.stdout.write('N={} batch {}: already done'.format(n, index))
					continue

				rows, grid = resolvent_study(
					cfg, n, trials, options['workers'], options.get('dense_cap'))
				run.write_batch(n, index,
					[dict(row, table='probe') for row in rows]
					+ [dict(point, table='grid') for point in grid])
				self.stdout.write('N={} batch {}: {} rows'.format(n, index, len(rows)))

		probes, points = [], []
		for row in run.batch_rows():
			table = row.pop('table')
			(probes if table == 'probe' else points).append(row)

		for row in probes:
			row['flags'] = ' '.join(row['flags'])

		run.write_output('resolvent.csv', csv_text(
			RESOLVENT_HEADER, probes, run.config_hash, run.artifact_version))

		self.write_csv(run, 'local_law.csv', grid_to_csv, [
			GridPoint(p['kappa'], p['eta'], p['residual'], p['bound'])
			for p in points
		])
		run.finish()

		self.stdout.write('Resolvent study done: {} rows'.format(len(probes)))
