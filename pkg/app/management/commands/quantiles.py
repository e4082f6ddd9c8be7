from django.core.management.base import BaseCommand, CommandError

from app.edge_model import (
	BranchError, EdgeModel, QuadratureError, quantiles, rigidity_report,
)
from app.ensemble import load_matrix
from app.spectral import full_spectrum



class Command(BaseCommand):

	help = (
		"Writes the table of typical eigenvalue locations γ_1 >= ... >= γ_N "
		"of ρ_⋆ as CSV. With --matrix the correction term is measured on the "
		"given matrix file and the rigidity residuals of its spectrum are "
		"reported."
	)

	def add_arguments(self, parser):
		parser.add_argument('--n', type=int)
		parser.add_argument('--q', type=float)
		parser.add_argument('--chi', type=float, default=0.0)
		parser.add_argument('--quartic', type=float)
		parser.add_argument(
			'--matrix',
			type = str,
			help = 'A file written by the generate command.'
		)
		parser.add_argument('--output', type=str, required=True)


	def handle(self, *args, **options):
		"""
		The command's main.
		"""
		H = None
		if options.get('matrix'):
			try:
				with open(options['matrix']) as f:
					H = load_matrix(f.read())
			except (OSError, ValueError) as error:
				raise CommandError('Cannot read the matrix: {}'.format(error))
			model = EdgeModel.for_matrix(H, quartic=options.get('quartic'))
		else:
			try:
				assert options.get('n') is not None and options['n'] >= 2
				model = EdgeModel(
					chi = options['chi'],
					quartic = options.get('quartic'),
					n = options['n'],
					q = options.get('q')
				)
			except (AssertionError, ValueError):
				raise CommandError('Give --n >= 2 and --chi > -1, or --matrix.')

		try:
			table = quantiles(model, model.n)
		except (BranchError, QuadratureError) as error:
			raise CommandError(str(error))

		table.to_csv(options['output'])
		self.stdout.write('Wrote {} locations, γ_1 = {!r}'.format(
			table.n, float(table.gammas[0])))

		if H is not None:
			try:
				report = rigidity_report(full_spectrum(H, indices=()), table)
			except ValueError as error:
				raise CommandError(str(error))

			self.stdout.write('max normalized rigidity residual {:.4f}'.format(
				float(report.normalized.max())))
