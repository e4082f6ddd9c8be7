"""
Output files are never partially overwritten: everything goes through a
temporary sibling that is renamed into place.
"""
import hashlib
import os
import tempfile



def atomic_write(path, text):
	"""
	Writes the text to path via write-to-temp and atomic rename.
	Returns the sha256 hex digest of the bytes written.
	"""
	data = text.encode()
	directory = os.path.dirname(os.path.abspath(path))
	os.makedirs(directory, exist_ok=True)
	
	fd, tmp = tempfile.mkstemp(dir=directory, prefix='.tmp-')
	try:
		with os.fdopen(fd, 'wb') as f:
			f.write(data)
			f.flush()
			os.fsync(f.fileno())
		os.replace(tmp, path)
	except BaseException:
		if os.path.exists(tmp):
			os.remove(tmp)
		raise
	
	return hashlib.sha256(data).hexdigest()


def file_sha256(path):
	with open(path, 'rb') as f:
		return hashlib.sha256(f.read()).hexdigest()


def csv_text(header, rows, config_hash, artifact_version):
	"""
	Returns CSV text starting with the provenance comment line.
	"""
	lines = [
		'# config_hash={} artifact_version={}'.format(
			config_hash, artifact_version),
		','.join(header),
	]
	for row in rows:
		lines.append(','.join(_csv_cell(row.get(key)) for key in header))
	return '\n'.join(lines) + '\n'


def _csv_cell(value):
	if value is None:
		return ''
	if isinstance(value, float):
		return repr(float(value))
	return str(value)
