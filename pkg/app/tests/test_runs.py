import os
import tempfile

from django.test import TestCase

from app.models import CompletedBatch, RunManifest
from app.runs import Run, RunError, read_jsonl
from utils.json import read_json



class RunTestCase(TestCase):

	def setUp(self):
		self.temp_dir = tempfile.TemporaryDirectory()
		self.out = self.temp_dir.name
		self.config = {'ns': [10], 'seed': 3, 'trials': 2}

	def tearDown(self):
		self.temp_dir.cleanup()

	def open(self, **kwargs):
		return Run.open('sweep', self.config, self.out, **kwargs)

	def test_open(self):
		run = self.open()
		config_hash = Run.config_hash_of('sweep', self.config, '1.0')

		self.assertEqual(run.config_hash, config_hash)
		self.assertEqual(run.directory, os.path.join(self.out, 'sweep', config_hash[:12]))
		self.assertEqual(run.config, self.config)
		self.assertFalse(run.finished)

		manifest = RunManifest.objects.get()
		self.assertEqual(manifest.master_seed, '3')
		self.assertEqual(str(manifest), 'sweep ' + config_hash[:12])

		self.open()
		self.assertEqual(RunManifest.objects.count(), 1)

	def test_hash_depends_on_command(self):
		self.assertNotEqual(
			Run.config_hash_of('sweep', self.config, '1.0'),
			Run.config_hash_of('er', self.config, '1.0'))
		self.assertNotEqual(
			Run.config_hash_of('sweep', self.config, '1.0'),
			Run.config_hash_of('sweep', self.config, '2.0'))

	def test_partial_run(self):
		run = self.open()
		run.write_batch(10, 0, [{'trial': 0}])

		with self.assertRaises(RunError):
			self.open()

		run = self.open(resume=True)
		self.assertTrue(run.is_done(10, 0))
		self.assertFalse(run.is_done(10, 1))

	def test_write_batch(self):
		run = self.open()
		run.write_batch(10, 1, [{'trial': 2}, {'trial': 3}])
		run.write_batch(10, 0, [{'trial': 0}, {'trial': 1}])

		done = CompletedBatch.objects.get(n=10, batch=0)
		self.assertEqual(done.path, os.path.join('batches', 'n10_b0.jsonl'))

		header, rows = read_jsonl(run.path(done.path))
		self.assertEqual(header['config_hash'], run.config_hash)
		self.assertEqual(header['batch'], 0)
		self.assertEqual(rows, [{'trial': 0}, {'trial': 1}])

		self.assertEqual([row['trial'] for row in run.batch_rows()], [0, 1, 2, 3])

		with self.assertRaises(RunError):
			run.write_batch(10, 0, [])

	def test_batch_rows_of_one_size(self):
		run = self.open()
		run.write_batch(20, 0, [{'trial': 0, 'n': 20}])
		run.write_batch(10, 0, [{'trial': 0, 'n': 10}, {'trial': 1, 'n': 10}])

		self.assertEqual([row['n'] for row in run.batch_rows()], [10, 10, 20])
		self.assertEqual([row['n'] for row in run.batch_rows(20)], [20])
		self.assertEqual(run.batch_rows(30), [])

	def test_tampered_batch(self):
		run = self.open()
		run.write_batch(10, 0, [{'trial': 0}])

		with open(run.path(run.batch_name(10, 0)), 'a') as f:
			f.write('{"kind":"record","trial":9}\n')

		with self.assertRaises(RunError):
			run.is_done(10, 0)

		os.remove(run.path(run.batch_name(10, 0)))
		with self.assertRaises(RunError):
			run.is_done(10, 0)

	def test_outputs(self):
		run = self.open()
		run.write_jsonl('records.jsonl', [{'a': 1}])
		run.write_output('summary.csv', 'x\n')
		run.register('summary.csv')

		manifest = RunManifest.objects.get()
		self.assertEqual(read_json(manifest.outputs), ['records.jsonl', 'summary.csv'])

		header, rows = read_jsonl(run.path('records.jsonl'))
		self.assertEqual(header['command'], 'sweep')
		self.assertEqual(rows, [{'a': 1}])

	def test_finish(self):
		self.assertIsNone(Run.find('sweep', self.config))

		run = self.open()
		run.write_batch(10, 0, [{'trial': 0}])
		run.finish()

		found = Run.find('sweep', self.config)
		self.assertTrue(found.finished)
		self.assertTrue(self.open().finished)

	def test_no_header(self):
		path = os.path.join(self.out, 'bad.jsonl')
		with open(path, 'w') as f:
			f.write('{"kind":"record"}\n')

		with self.assertRaises(RunError):
			read_jsonl(path)
