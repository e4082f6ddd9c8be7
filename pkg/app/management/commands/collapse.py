from django.core.management.base import CommandError

from app.analysis import best_exponent, collapse_csv, scaling_collapse
from app.experiments import TrialRecord, curves, summarize
from app.management.lab import LabCommand
from app.runs import Run, read_jsonl


DEFAULT_EXPONENTS = (1.5, 5 / 3, 11 / 6)



class Command(LabCommand):

	help = (
		"Scaling collapse of the overlap curves of a finished sweep (or er) "
		"run of the same config: for every exponent the largest spread of the "
		"curves against k/N^exponent. Writes collapse.csv."
	)

	name = 'collapse'

	def run(self, options):
		cfg = self.load_config(options)

		source = 'er' if cfg.model == 'er-adjacency' else 'sweep'
		sweep = Run.find(source, cfg.to_dict())
		if sweep is None or not sweep.finished:
			raise CommandError(
				'No finished {} run for this config; run it first.'.format(source))

		run = self.open_run(cfg, options)
		if run.finished:
			return

		_, rows = read_jsonl(sweep.path('records.jsonl'))
		records = [TrialRecord.from_dict(row) for row in rows]

		index = None
		if cfg.option('index_prefactor', False):
			index = cfg.index_for(max(cfg.ns))

		reports = scaling_collapse(
			curves(summarize(records)),
			cfg.option('exponents', DEFAULT_EXPONENTS),
			index = index
		)

		self.write_csv(run, 'collapse.csv', collapse_csv, reports)
		run.finish()

		for report in reports:
			self.stdout.write('exponent {:.4f}: error {}'.format(
				report.exponent, report.error))
		self.stdout.write('Best exponent: {:.4f}'.format(best_exponent(reports)))
