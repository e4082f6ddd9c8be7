"""
Run directories and their manifests. A run is identified by the command and
the hash of its canonical config; its outputs live in
<out>/<command>/<first 12 hex digits of the hash>/.

Batches of trials are written once, atomically, and recorded with the sha256
of their bytes. A completed batch is never recomputed or rewritten.
"""
import logging
import os

from django.conf import settings
from django.db import transaction

from app.models import CompletedBatch, RunManifest
from utils.files import atomic_write, file_sha256
from utils.json import json_hash, make_json, read_json


logger = logging.getLogger('kohina.runs')



class RunError(RuntimeError):
	pass



def header_line(config_hash, artifact_version, **extra):
	header = {
		'kind': 'header',
		'config_hash': config_hash,
		'artifact_version': artifact_version,
	}
	header.update(extra)
	return make_json(header)


def jsonl_text(header, rows):
	lines = [header]
	for row in rows:
		line = {'kind': 'record'}
		line.update(row)
		lines.append(make_json(line))
	return '\n'.join(lines) + '\n'


def read_jsonl(path):
	"""
	Returns (header, rows) of a JSON-lines file written by this module.
	"""
	with open(path) as f:
		lines = [read_json(line) for line in f if line.strip()]

	try:
		assert lines and lines[0].get('kind') == 'header'
	except AssertionError:
		raise RunError('{} has no header line.'.format(path))

	rows = []
	for line in lines[1:]:
		line.pop('kind', None)
		rows.append(line)

	return lines[0], rows



class Run:
	"""
	Wraps a RunManifest and its directory.
	"""

	def __init__(self, manifest):
		self.manifest = manifest
		self.command = manifest.command
		self.config_hash = manifest.config_hash
		self.artifact_version = manifest.artifact_version
		self.directory = manifest.out_dir
		self.config = read_json(manifest.config)


	@staticmethod
	def config_hash_of(command, config, artifact_version):
		return json_hash({
			'command': command,
			'config': config,
			'artifact_version': artifact_version,
		})


	@classmethod
	def find(cls, command, config, artifact_version=None):
		"""
		The existing run for this command and config, or None.
		"""
		artifact_version = artifact_version or settings.LAB_ARTIFACT_VERSION
		try:
			manifest = RunManifest.objects.get(
				command = command,
				config_hash = cls.config_hash_of(command, config, artifact_version)
			)
		except RunManifest.DoesNotExist:
			return None
		return cls(manifest)


	@classmethod
	def open(cls, command, config, out_dir, resume=False, artifact_version=None):
		"""
		Returns the run for this command and config, creating it if needed.

		A run with completed batches is only continued if resume is set;
		a finished run is returned as it is.
		"""
		artifact_version = artifact_version or settings.LAB_ARTIFACT_VERSION
		config_hash = cls.config_hash_of(command, config, artifact_version)
		directory = os.path.join(out_dir, command, config_hash[:12])

		with transaction.atomic():
			manifest, created = RunManifest.objects.get_or_create(
				command = command,
				config_hash = config_hash,
				defaults = {
					'config': make_json(config),
					'master_seed': str(config.get('seed', '')),
					'artifact_version': artifact_version,
					'out_dir': directory,
				}
			)

		run = cls(manifest)

		if created:
			logger.info('new run %s in %s', manifest, directory)
		elif manifest.finished:
			logger.info('run %s already finished', manifest)
		elif manifest.batches.exists() and not resume:
			raise RunError(
				'A partial run exists in {}; pass --resume to continue it.'
				.format(directory))
		else:
			logger.info('resuming run %s', manifest)

		return run


	@property
	def finished(self):
		return self.manifest.finished


	def path(self, name):
		return os.path.join(self.directory, name)


	def header(self, **extra):
		return header_line(self.config_hash, self.artifact_version, **extra)


	"""
	Batches
	"""

	def batch_name(self, n, batch):
		return os.path.join('batches', 'n{}_b{}.jsonl'.format(n, batch))


	def is_done(self, n, batch):
		"""
		True if the batch is recorded and its file still has the recorded
		bytes. A recorded batch whose file changed is an error.
		"""
		try:
			done = self.manifest.batches.get(n=n, batch=batch)
		except CompletedBatch.DoesNotExist:
			return False

		path = self.path(done.path)
		if not os.path.exists(path) or file_sha256(path) != done.sha256:
			raise RunError('Batch file {} is missing or was modified.'.format(path))

		return True


	def write_batch(self, n, batch, rows):
		"""
		Writes the rows of a finished batch and records it.
		"""
		try:
			assert not self.manifest.batches.filter(n=n, batch=batch).exists()
		except AssertionError:
			raise RunError('Batch {} of N={} is already complete.'.format(batch, n))

		name = self.batch_name(n, batch)
		text = jsonl_text(self.header(command=self.command, n=n, batch=batch), rows)
		digest = atomic_write(self.path(name), text)

		CompletedBatch.objects.create(
			manifest = self.manifest,
			n = n,
			batch = batch,
			path = name,
			sha256 = digest
		)
		logger.debug('wrote %s', name)
		return digest


	def batch_rows(self, n=None):
		"""
		The rows of every completed batch in (N, batch) order, or of the
		batches of one N.
		"""
		batches = self.manifest.batches.order_by('n', 'batch')
		if n is not None:
			batches = batches.filter(n=n)

		rows = []
		for done in batches:
			_, batch_rows = read_jsonl(self.path(done.path))
			rows.extend(batch_rows)
		return rows


	"""
	Final outputs
	"""

	def register(self, name):
		"""
		Adds a file of the run directory to the manifest's outputs.
		"""
		outputs = read_json(self.manifest.outputs)
		if name not in outputs:
			outputs.append(name)
			self.manifest.outputs = make_json(outputs)
			self.manifest.save()


	def write_output(self, name, text):
		digest = atomic_write(self.path(name), text)
		self.register(name)
		return digest


	def write_jsonl(self, name, rows):
		return self.write_output(name, jsonl_text(self.header(command=self.command), rows))


	def finish(self):
		self.manifest.finished = True
		self.manifest.save()
		logger.info('run %s finished', self.manifest)
