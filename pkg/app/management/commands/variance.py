from app.analysis import hmain1_check, variance_csv, variance_scan
from app.experiments import TrialRecord, summarize
from app.management.lab import LabCommand
from app.runs import Run, read_jsonl
from utils.files import csv_text


MARGIN_HEADER = ['n', 'k', 'lhs', 'rhs', 'ratio', 'regime']



class Command(LabCommand):

	help = (
		"Variance of λ₁ − L − 𝓧 per N with bootstrap intervals and the fitted "
		"exponent; also of λ₁ alone. If a finished sweep of the same config "
		"exists, the ratio of E⟨v₁, v₁^[k]⟩² to N³Var/k is written as well."
	)

	name = 'variance'

	def run(self, options):
		cfg = self.load_config(options)

		run = self.open_run(cfg, options)
		if run.finished:
			return

		report = variance_scan(cfg, options['workers'], options.get('dense_cap'))
		self.write_csv(run, 'variance.csv', variance_csv, report)

		if report.slope is not None:
			self.stdout.write('slope {:.4f} (raw {:.4f})'.format(
				report.slope, report.raw_slope))

		sweep = Run.find('sweep', cfg.to_dict())
		if sweep is not None and sweep.finished:
			_, rows = read_jsonl(sweep.path('records.jsonl'))
			summary = summarize([TrialRecord.from_dict(row) for row in rows])
			margins = hmain1_check(summary, report)

			run.write_output('margins.csv', csv_text(
				MARGIN_HEADER,
				[{key: getattr(row, key) for key in MARGIN_HEADER} for row in margins.rows],
				run.config_hash, run.artifact_version))
			self.stdout.write('max ratio {}'.format(margins.max_ratio))

		run.finish()
