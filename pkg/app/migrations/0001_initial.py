from django.db import migrations, models
import django.db.models.deletion
import django.utils.timezone


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='RunManifest',
            fields=[
                ('id', models.AutoField(verbose_name='ID', serialize=False, primary_key=True, auto_created=True)),
                ('command', models.CharField(max_length=40)),
                ('config_hash', models.CharField(max_length=64, help_text='sha256 of the canonical config, command and version.')),
                ('config', models.TextField(help_text='The canonical config as JSON.')),
                ('master_seed', models.CharField(max_length=20, help_text='Unsigned 64-bit, kept as text.')),
                ('artifact_version', models.CharField(max_length=20)),
                ('out_dir', models.TextField()),
                ('outputs', models.TextField(default='[]', help_text='JSON list of the files written, relative to out_dir.')),
                ('finished', models.BooleanField(default=False)),
                ('created', models.DateTimeField(default=django.utils.timezone.now, editable=False, help_text='Timestamp of database entry creation.')),
                ('last_modified', models.DateTimeField(default=django.utils.timezone.now, editable=False, help_text='Timestamp of last database modification.')),
            ],
            options={
                'ordering': ['created'],
                'unique_together': {('command', 'config_hash')},
            },
        ),
        migrations.CreateModel(
            name='CompletedBatch',
            fields=[
                ('id', models.AutoField(verbose_name='ID', serialize=False, primary_key=True, auto_created=True)),
                ('n', models.PositiveIntegerField()),
                ('batch', models.PositiveIntegerField()),
                ('path', models.TextField(help_text="Relative to the manifest's out_dir.")),
                ('sha256', models.CharField(max_length=64)),
                ('created', models.DateTimeField(default=django.utils.timezone.now, editable=False, help_text='Timestamp of database entry creation.')),
                ('manifest', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='batches', to='app.runmanifest')),
            ],
            options={
                'ordering': ['n', 'batch'],
                'unique_together': {('manifest', 'n', 'batch')},
            },
        ),
    ]
