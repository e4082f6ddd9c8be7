import os

from django.core.management.base import BaseCommand, CommandError

from app.ensemble import (
	LAW_KINDS, MODELS, EnsembleSpec, EntryLaw, dump_matrix, make_rng, sample,
)
from utils.files import atomic_write



class Command(BaseCommand):

	help = (
		"Draws one matrix and writes it in the \"i j value\" text format "
		"under the header \"N q model seed law\". The same flags always give "
		"the same file."
	)

	def add_arguments(self, parser):
		parser.add_argument('--n', type=int, required=True)
		parser.add_argument('--q', type=float, required=True)
		parser.add_argument('--model', choices=MODELS, default='centered-sparse')
		parser.add_argument('--law', choices=LAW_KINDS, default='rademacher')
		parser.add_argument('--seed', type=int)
		parser.add_argument(
			'--output',
			type = str,
			help = 'File to write; the text goes to stdout if omitted.'
		)


	def handle(self, *args, **options):
		"""
		The command's main.
		"""
		seed = options.get('seed')
		try:
			assert seed is not None and 0 <= seed < 2 ** 64
		except AssertionError:
			raise CommandError('A master seed is required (--seed).')

		try:
			spec = EnsembleSpec(
				options['n'], options['q'], EntryLaw(options['law']), options['model'])
		except ValueError as error:
			raise CommandError(str(error))

		H = sample(spec, make_rng(seed, spec.n, 0, 'generate'), seed=seed)
		text = dump_matrix(H)

		if options.get('output'):
			atomic_write(options['output'], text)
			self.stdout.write('Wrote {} ({} stored entries)'.format(
				os.path.abspath(options['output']), H.nnz))
		else:
			self.stdout.write(text, ending='')
