from django.core.management.base import CommandError

from app.experiments import (
	other_index_sweep, sensitivity_sweep, summary_csv,
)
from app.management.lab import LabCommand



class Command(LabCommand):

	help = (
		"Runs the noise sensitivity sweep of a config: for every N, k and "
		"trial the overlap of the tracked eigenvector of H with that of "
		"H^[k]. Writes records.jsonl and summary.csv under "
		"<out>/sweep/<config hash>/."
	)

	name = 'sweep'

	def run(self, options):
		cfg = self.load_config(options)

		try:
			assert cfg.model == 'centered-sparse'
		except AssertionError:
			raise CommandError('Use the er command for the adjacency model.')

		run = self.open_run(cfg, options)
		if run.finished:
			return

		if any(cfg.index_for(n) != 1 for n in cfg.ns):
			sweep = other_index_sweep
		else:
			sweep = sensitivity_sweep

		records, rows = sweep(
			cfg, options['workers'], options.get('dense_cap'),
			runner = self.batch_runner(run, cfg, options)
		)

		run.write_jsonl('records.jsonl', [r.to_dict() for r in records])
		self.write_csv(run, 'summary.csv', summary_csv, rows)
		run.finish()

		self.stdout.write('Sweep done: {} records, {} summary rows'.format(
			len(records), len(rows)))
