from django.core.serializers.json import DjangoJSONEncoder

import hashlib
import json

import numpy as np



class LabJSONEncoder(DjangoJSONEncoder):
	"""
	Adds numpy scalars and arrays to what Django already knows how to encode.
	"""
	
	def default(self, o):
		if isinstance(o, np.integer):
			return int(o)
		if isinstance(o, np.floating):
			return float(o)
		if isinstance(o, np.bool_):
			return bool(o)
		if isinstance(o, np.ndarray):
			return o.tolist()
		return super().default(o)



def make_json(python_things):
	"""
	Converts Python things to JSON things.
	
	Keys are sorted and separators fixed so that equal things always yield
	equal bytes.
	"""
	return json.dumps(
		python_things,
		cls = LabJSONEncoder,
		sort_keys = True,
		separators = (',', ':')
	)


def read_json(json_things):
	"""
	Converts JSON things to Python things.
	"""
	if isinstance(json_things, bytes):
		json_things = json_things.decode()
	return json.loads(json_things)


def json_hash(python_things):
	"""
	Returns the sha256 hex digest of the canonical JSON form.
	"""
	return hashlib.sha256(make_json(python_things).encode()).hexdigest()
