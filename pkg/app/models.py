from django.db import models
from django.utils import timezone



class RunManifest(models.Model):
	command = models.CharField(
		max_length = 40
	)
	config_hash = models.CharField(
		max_length = 64,
		help_text = 'sha256 of the canonical config, command and version.'
	)
	config = models.TextField(
		help_text = 'The canonical config as JSON.'
	)
	master_seed = models.CharField(
		max_length = 20,
		help_text = 'Unsigned 64-bit, kept as text.'
	)
	artifact_version = models.CharField(
		max_length = 20
	)
	out_dir = models.TextField()
	outputs = models.TextField(
		default = '[]',
		help_text = 'JSON list of the files written, relative to out_dir.'
	)
	finished = models.BooleanField(
		default = False
	)

	created = models.DateTimeField(
		default = timezone.now,
		editable = False,
		help_text = 'Timestamp of database entry creation.'
	)
	last_modified = models.DateTimeField(
		default = timezone.now,
		editable = False,
		help_text = 'Timestamp of last database modification.'
	)

	class Meta:
		ordering = ['created']
		unique_together = ('command', 'config_hash')

	def __str__(self):
		"""
		Returns the model's string representation.
		"""
		return '{} {}'.format(self.command, self.config_hash[:12])

	def save(self, *args, **kwargs):
		"""
		Overrides the default save() method in order to update last_modified.
		"""
		self.last_modified = timezone.now()
		super().save(*args, **kwargs)



class CompletedBatch(models.Model):
	manifest = models.ForeignKey(
		RunManifest,
		on_delete = models.CASCADE,
		related_name = 'batches'
	)
	n = models.PositiveIntegerField()
	batch = models.PositiveIntegerField()
	path = models.TextField(
		help_text = 'Relative to the manifest\'s out_dir.'
	)
	sha256 = models.CharField(
		max_length = 64
	)

	created = models.DateTimeField(
		default = timezone.now,
		editable = False,
		help_text = 'Timestamp of database entry creation.'
	)

	class Meta:
		ordering = ['n', 'batch']
		unique_together = ('manifest', 'n', 'batch')

	def __str__(self):
		return 'N={} batch {}'.format(self.n, self.batch)
