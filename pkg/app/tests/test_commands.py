from io import StringIO
import os
import tempfile

from django.core.management.base import CommandError
from django.core.management import call_command
from django.test import TestCase

from app.ensemble import load_matrix
from app.experiments import SweepConfig, run_trials
from app.models import RunManifest
from app.runs import Run, read_jsonl
from utils.json import read_json



def fixture_config(name):
	with open(os.path.join('app/fixtures', name)) as f:
		return SweepConfig.from_dict(read_json(f.read()))


def read_csv(path):
	with open(path) as f:
		return f.read().splitlines()



class CommandTestCase(TestCase):

	def setUp(self):
		self.temp_dir = tempfile.TemporaryDirectory()
		self.out = self.temp_dir.name

		self.stdout = StringIO()
		self.stderr = StringIO()

	def tearDown(self):
		self.temp_dir.cleanup()

	def call(self, command, config, **kwargs):
		kwargs.setdefault('workers', 1)
		kwargs.setdefault('out', self.out)
		call_command(
			command,
			config = 'app/fixtures/{}'.format(config),
			stdout = self.stdout,
			stderr = self.stderr,
			**kwargs
		)

	def directory(self, command):
		return RunManifest.objects.get(command=command).out_dir

	def assertRerunIdentical(self, command, config, names):
		"""
		Runs the command twice, into fresh output roots and with an empty
		manifest table, and compares the bytes of the named outputs.
		"""
		outputs = []
		for _ in range(2):
			RunManifest.objects.all().delete()
			with tempfile.TemporaryDirectory() as out:
				self.call(command, config, out=out)
				directory = self.directory(command)
				self.assertTrue(directory.startswith(out))

				contents = {}
				for name in names:
					with open(os.path.join(directory, name), 'rb') as f:
						contents[name] = f.read()
				outputs.append(contents)

		for name in names:
			self.assertTrue(outputs[0][name])
			self.assertEqual(outputs[0][name], outputs[1][name])



class GenerateTestCase(CommandTestCase):

	def test_stdout(self):
		call_command(
			'generate', n=12, q=2.0, seed=42, stdout=self.stdout)
		H = load_matrix(self.stdout.getvalue())

		self.assertEqual(H.n, 12)
		self.assertEqual(H.seed, 42)
		self.assertEqual(self.stdout.getvalue().splitlines()[0],
			'12 2.0 centered-sparse 42 rademacher')

	def test_file(self):
		path = os.path.join(self.out, 'matrix.txt')
		call_command(
			'generate', n=12, q=2.0, seed=42, output=path, stdout=self.stdout)
		call_command('generate', n=12, q=2.0, seed=42, stdout=self.stderr)

		with open(path) as f:
			self.assertEqual(f.read(), self.stderr.getvalue())
		self.assertIn('Wrote', self.stdout.getvalue())

	def test_bad_input(self):
		with self.assertRaises(CommandError):
			call_command('generate', n=12, q=2.0, stdout=self.stdout)
		with self.assertRaises(CommandError):
			call_command('generate', n=12, q=5.0, seed=1, stdout=self.stdout)



class QuantilesTestCase(CommandTestCase):

	def test_model(self):
		path = os.path.join(self.out, 'gammas.csv')
		call_command(
			'quantiles', n=10, chi=0.0, output=path, stdout=self.stdout)

		lines = read_csv(path)
		self.assertEqual(lines[1], 'index,gamma')
		self.assertEqual(len(lines), 12)
		self.assertTrue(lines[2].startswith('1,'))

		gammas = [float(line.split(',')[1]) for line in lines[2:]]
		self.assertEqual(gammas, sorted(gammas, reverse=True))
		self.assertAlmostEqual(gammas[0], 2.0, places=9)

	def test_matrix(self):
		path = os.path.join(self.out, 'gammas.csv')
		call_command(
			'quantiles', matrix='app/fixtures/sample_matrix.txt', output=path,
			stdout=self.stdout)

		self.assertEqual(len(read_csv(path)), 6)
		self.assertIn('rigidity', self.stdout.getvalue())

	def test_bad_input(self):
		path = os.path.join(self.out, 'gammas.csv')
		with self.assertRaises(CommandError):
			call_command('quantiles', output=path, stdout=self.stdout)
		with self.assertRaises(CommandError):
			call_command('quantiles', n=10, chi=-2.0, output=path, stdout=self.stdout)
		with self.assertRaises(CommandError):
			call_command(
				'quantiles', matrix=os.path.join(self.out, 'missing.txt'),
				output=path, stdout=self.stdout)



class SweepTestCase(CommandTestCase):

	def test_sweep(self):
		self.call('sweep', 'sweep_small.json')
		self.assertIn('Sweep done: 48 records, 12 summary rows', self.stdout.getvalue())

		directory = self.directory('sweep')
		header, rows = read_jsonl(os.path.join(directory, 'records.jsonl'))
		self.assertEqual(len(rows), 48)
		self.assertEqual(header['artifact_version'], '1.0')

		lines = read_csv(os.path.join(directory, 'summary.csv'))
		self.assertEqual(lines[0], '# config_hash={} artifact_version=1.0'.format(
			header['config_hash']))
		self.assertEqual(len(lines), 14)

		manifest = RunManifest.objects.get(command='sweep')
		self.assertTrue(manifest.finished)
		self.assertEqual(manifest.batches.count(), 6)

	def test_rerun_identical(self):
		self.assertRerunIdentical(
			'sweep', 'sweep_small.json', ('records.jsonl', 'summary.csv'))

	def test_other_index(self):
		path = os.path.join(self.out, 'config.json')
		with open(path, 'w') as f:
			f.write('{"ns": [12], "q": {"rule": "constant", "value": 2}, '
				'"trials": 2, "seed": 3, "alphas": [1.0], "eigen_index": "N"}')

		call_command(
			'sweep', config=path, out=self.out, workers=1, stdout=self.stdout)

		_, rows = read_jsonl(os.path.join(self.directory('sweep'), 'records.jsonl'))
		self.assertEqual(len(rows), 4)
		self.assertTrue(all(row['index'] == 12 for row in rows))

	def test_finished_run(self):
		self.call('sweep', 'sweep_small.json')
		with open(os.path.join(self.directory('sweep'), 'records.jsonl')) as f:
			before = f.read()

		self.call('sweep', 'sweep_small.json')
		self.assertIn('nothing to do', self.stdout.getvalue())

		with open(os.path.join(self.directory('sweep'), 'records.jsonl')) as f:
			self.assertEqual(f.read(), before)

	def test_resume(self):
		cfg = fixture_config('sweep_small.json')
		run = Run.open('sweep', cfg.to_dict(), self.out)
		records = run_trials(cfg, 16, [0, 1])
		run.write_batch(16, 0, [r.to_dict() for r in records])

		with self.assertRaises(CommandError):
			self.call('sweep', 'sweep_small.json')

		self.call('sweep', 'sweep_small.json', resume=True)
		self.assertIn('N=16 batch 0: already done', self.stdout.getvalue())

		_, rows = read_jsonl(os.path.join(self.directory('sweep'), 'records.jsonl'))
		self.assertEqual(len(rows), 48)
		self.assertEqual(rows[:len(records)], [r.to_dict() for r in records])

	def test_bad_config(self):
		path = os.path.join(self.out, 'config.json')

		with open(path, 'w') as f:
			f.write('{"ns": [10], "trials": 2}')
		with self.assertRaises(CommandError):
			call_command('sweep', config=path, out=self.out, stdout=self.stdout)

		with open(path, 'w') as f:
			f.write('{"ns": [1], "trials": 0, "seed": 1}')
		with self.assertRaises(CommandError) as context:
			call_command('sweep', config=path, out=self.out, stdout=self.stdout)
		self.assertIn('trials', str(context.exception))

		with open(path, 'w') as f:
			f.write('{"ns": ')
		with self.assertRaises(CommandError):
			call_command('sweep', config=path, out=self.out, stdout=self.stdout)

		with self.assertRaises(CommandError):
			self.call('sweep', 'er_small.json')
		with self.assertRaises(CommandError):
			self.call('sweep', 'sweep_small.json', workers=0)

	def test_seed_flag(self):
		path = os.path.join(self.out, 'config.json')
		with open(path, 'w') as f:
			f.write('{"ns": [10], "q": {"rule": "constant", "value": 2}, '
				'"trials": 2, "alphas": [1.0]}')

		call_command(
			'sweep', config=path, seed=11, out=self.out, workers=1,
			stdout=self.stdout)
		self.assertEqual(RunManifest.objects.get().master_seed, '11')



class ErTestCase(CommandTestCase):

	def test_er(self):
		self.call('er', 'er_small.json')
		self.assertIn('6 sticking residuals', self.stdout.getvalue())

		directory = self.directory('er')
		for name in ('records.jsonl', 'summary.csv', 'sticking.csv'):
			self.assertTrue(os.path.exists(os.path.join(directory, name)))

		_, rows = read_jsonl(os.path.join(directory, 'records.jsonl'))
		self.assertTrue(all(row['index'] == 2 for row in rows))

	def test_rerun_identical(self):
		self.assertRerunIdentical(
			'er', 'er_small.json', ('records.jsonl', 'summary.csv', 'sticking.csv'))

	def test_wrong_model(self):
		with self.assertRaises(CommandError):
			self.call('er', 'sweep_small.json')



class CollapseTestCase(CommandTestCase):

	def test_needs_sweep(self):
		with self.assertRaises(CommandError):
			self.call('collapse', 'sweep_small.json')

	def test_collapse(self):
		self.call('sweep', 'sweep_small.json')
		self.call('collapse', 'sweep_small.json')
		self.assertIn('Best exponent', self.stdout.getvalue())

		lines = read_csv(os.path.join(self.directory('collapse'), 'collapse.csv'))
		self.assertEqual(lines[1], 'exponent,error,abscissa_low,abscissa_high,best')
		self.assertEqual(len(lines), 5)
		self.assertEqual(sum(int(line.split(',')[-1]) for line in lines[2:]), 1)



class VarianceTestCase(CommandTestCase):

	def test_variance(self):
		self.call('variance', 'variance_small.json')
		self.assertIn('slope', self.stdout.getvalue())

		directory = self.directory('variance')
		lines = read_csv(os.path.join(directory, 'variance.csv'))
		self.assertEqual(len(lines), 7)
		self.assertFalse(os.path.exists(os.path.join(directory, 'margins.csv')))

	def test_margins(self):
		self.call('sweep', 'sweep_small.json')
		self.call('variance', 'sweep_small.json')
		self.assertIn('max ratio', self.stdout.getvalue())

		lines = read_csv(os.path.join(self.directory('variance'), 'margins.csv'))
		self.assertEqual(lines[1], 'n,k,lhs,rhs,ratio,regime')
		self.assertEqual(len(lines), 2 + 3 * 3)



class GapsTestCase(CommandTestCase):

	def test_gaps(self):
		self.call('gaps', 'gaps_small.json')
		self.assertIn('median gap exponent', self.stdout.getvalue())

		lines = read_csv(os.path.join(self.directory('gaps'), 'gaps.csv'))
		self.assertEqual(lines[1], 'n,q,trials,median,tail_0.1,tail_1.0')
		self.assertEqual(len(lines), 4)



class ResolventTestCase(CommandTestCase):

	def test_resolvent(self):
		self.call('resolvent', 'resolvent_small.json')
		self.assertIn('Resolvent study done: 6 rows', self.stdout.getvalue())

		directory = self.directory('resolvent')
		lines = read_csv(os.path.join(directory, 'resolvent.csv'))
		self.assertEqual(len(lines), 8)
		self.assertIn('delocalization', lines[1].split(','))
		self.assertEqual(len(read_csv(os.path.join(directory, 'local_law.csv'))), 2 + 2 * 81)

	def test_adjacency_refused(self):
		with self.assertRaises(CommandError):
			self.call('resolvent', 'er_small.json')
		self.assertFalse(RunManifest.objects.exists())



class SingleStepTestCase(CommandTestCase):

	def test_single_step(self):
		self.call('single_step', 'single_step_small.json')
		self.assertIn('Single-step studies done: 3 trials, 2 k values',
			self.stdout.getvalue())

		directory = self.directory('single_step')

		lines = read_csv(os.path.join(directory, 'heuristic.csv'))
		self.assertEqual(lines[1], 'n,trial,steps,used,correlation,median_rel_error')
		self.assertEqual([line.split(',')[1] for line in lines[2:]], ['0', '1', '2'])

		lines = read_csv(os.path.join(directory, 'identity.csv'))
		self.assertEqual(lines[1],
			'n,k,trials,estimate,estimate_se,reference,ratio,sandwich_violations')
		self.assertEqual([line.split(',')[1] for line in lines[2:]], ['20', '210'])
		self.assertTrue(all(line.endswith(',0') for line in lines[2:]))

		manifest = RunManifest.objects.get(command='single_step')
		self.assertTrue(manifest.finished)
		self.assertEqual(read_json(manifest.outputs), ['heuristic.csv', 'identity.csv'])

	def test_wrong_model(self):
		with self.assertRaises(CommandError):
			self.call('single_step', 'er_small.json')



class ChatterjeeTestCase(CommandTestCase):

	def test_chatterjee(self):
		self.call('chatterjee', 'chatterjee_small.json')
		output = self.stdout.getvalue()
		self.assertIn('N=8 k=3', output)
		self.assertIn('N=8: k=100 skipped', output)

		lines = read_csv(os.path.join(self.directory('chatterjee'), 'chatterjee.csv'))
		self.assertEqual(lines[1], 'n,k,trials,estimate,se,variance,bound,holds')
		self.assertEqual(len(lines), 3)
		self.assertTrue(lines[2].startswith('8,3,6,'))
