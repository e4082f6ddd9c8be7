from app.analysis import gap_csv, gap_experiment
from app.management.lab import LabCommand



class Command(LabCommand):

	help = (
		"Gap statistics of the top of the spectrum: P(λ₁ − λ₂ <= δ/N) for the "
		"config's deltas and the median gap per N with its fitted exponent."
	)

	name = 'gaps'

	def run(self, options):
		cfg = self.load_config(options)

		run = self.open_run(cfg, options)
		if run.finished:
			return

		report = gap_experiment(
			cfg, workers=options['workers'], cap=options.get('dense_cap'))
		self.write_csv(run, 'gaps.csv', gap_csv, report)
		run.finish()

		self.stdout.write('median gap exponent {:.4f}'.format(report.exponent))
