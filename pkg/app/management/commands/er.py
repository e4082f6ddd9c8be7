from django.core.management.base import CommandError

from app.experiments import er_experiment, sticking_csv, summary_csv
from app.management.lab import LabCommand



class Command(LabCommand):

	help = (
		"The Erdős–Rényi sweep: overlaps of the eigenvector w_ℓ of the "
		"adjacency matrix (eigen_index 1, 2 or \"N\") and the sticking "
		"residual N|ν₂ − (ν̊₁ − a)| of every trial."
	)

	name = 'er'

	def run(self, options):
		cfg = self.load_config(options)

		try:
			assert cfg.model == 'er-adjacency'
		except AssertionError:
			raise CommandError('The er command needs "model": "er-adjacency".')

		run = self.open_run(cfg, options)
		if run.finished:
			return

		records, rows, sticking = er_experiment(
			cfg, options['workers'], options.get('dense_cap'),
			runner = self.batch_runner(run, cfg, options)
		)

		run.write_jsonl('records.jsonl', [r.to_dict() for r in records])
		self.write_csv(run, 'summary.csv', summary_csv, rows)
		self.write_csv(run, 'sticking.csv', sticking_csv, sticking)
		run.finish()

		self.stdout.write('ER sweep done: {} records, {} sticking residuals'.format(
			len(records), len(sticking)))
