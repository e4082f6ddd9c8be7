from dataclasses import asdict

from app.chatterjee import matrix_chatterjee
from app.ensemble import pair_count
from app.management.lab import LabCommand
from utils.files import csv_text


HEADER = [
	'n', 'k', 'trials', 'estimate', 'se', 'variance', 'bound', 'holds',
]



class Command(LabCommand):

	help = (
		"Monte Carlo of I_k for f = λ₁ − L − 𝓧 over the matrix entries, "
		"against the bound ((M + 1)/M)·2Var(f)/k, for the config's "
		"chatterjee_ks (default 10, 100, 1000)."
	)

	name = 'chatterjee'

	def run(self, options):
		cfg = self.load_config(options)

		run = self.open_run(cfg, options)
		if run.finished:
			return

		rows = []
		for n in cfg.ns:
			for k in cfg.option('chatterjee_ks', [10, 100, 1000]):
				if not 1 <= k <= pair_count(n):
					self.stdout.write('N={}: k={} skipped'.format(n, k))
					continue

				report = matrix_chatterjee(
					cfg.spec_for(n), k, cfg.trials, cfg.master_seed,
					options.get('dense_cap'))

				row = asdict(report)
				row['n'] = n
				row['holds'] = int(report.holds)
				rows.append(row)

				self.stdout.write('N={} k={}: {:.3e} ± {:.1e} <= {:.3e}'.format(
					n, k, report.estimate, report.se, report.bound))

		run.write_output('chatterjee.csv', csv_text(
			HEADER, rows, run.config_hash, run.artifact_version))
		run.finish()
