"""
The resampling process: a uniform ordering of the upper-triangle pairs, the
matrices H^[k] it induces from a coupled (H, H′), and single-entry
resamples with their Q and Z quantities.
"""
from dataclasses import dataclass
import logging

import numpy as np

from app.ensemble import (
	make_rng, pair_count, pair_from_index, pair_index, sample,
)


logger = logging.getLogger('kohina.resample')



class PairOrder:
	"""
	Uniform ordering of the N(N+1)/2 pairs, produced by a lazy Fisher–Yates
	shuffle over the pair indices. Only the prefix that has been asked for
	exists in memory; the untouched tail is implicit in the swap table.

	Random offsets are drawn in fixed-size chunks so that the ordering does
	not depend on how far, or in which steps, the prefix was extended.
	Extending is not thread-safe; ResamplePair extends up front.
	"""
	chunk = 1 << 14

	def __init__(self, n, rng):
		try:
			assert n >= 2
		except AssertionError:
			raise ValueError('A pair order needs n >= 2.')

		self.n = n
		self.size = pair_count(n)
		self._rng = rng
		self._swaps = {}
		self._chunks = []
		self._filled = 0
		self._perm = np.empty(0, dtype=np.int64)


	def extend(self, k):
		"""
		Makes sure the first k positions are materialized.
		"""
		k = min(int(k), self.size)
		if k <= self._filled:
			return

		while self._filled < k:
			start = self._filled
			stop = min(start + self.chunk, self.size)

			steps = np.arange(start, stop, dtype=np.int64)
			targets = steps + self._rng.integers(0, self.size - steps)

			out = np.empty(stop - start, dtype=np.int64)
			swaps = self._swaps

			for pos, (s, r) in enumerate(zip(steps.tolist(), targets.tolist())):
				current = swaps.pop(s, s)
				if r == s:
					out[pos] = current
					continue
				out[pos] = swaps.get(r, r)
				swaps[r] = current

			self._chunks.append(out)
			self._filled = stop

		self._perm = np.concatenate(self._chunks)
		self._chunks = [self._perm]
		self._perm.flags.writeable = False


	def _check(self, k):
		try:
			assert 0 <= k <= self.size
		except AssertionError:
			raise ValueError('k = {} outside [0, {}]'.format(k, self.size))


	def prefix(self, k):
		"""
		Pair indices of S_k, in resampling order.
		"""
		self._check(k)
		self.extend(k)
		return self._perm[:k]


	def segment(self, k_lo, k_hi):
		"""
		Pair indices resampled at steps k_lo + 1, ..., k_hi.
		"""
		self._check(k_lo)
		self._check(k_hi)
		self.extend(k_hi)
		return self._perm[k_lo:k_hi]


	def pairs(self, k):
		"""
		S_k as a list of 0-based (i, j) tuples.
		"""
		rows, cols = pair_from_index(self.n, self.prefix(k))
		return list(zip(rows.tolist(), cols.tolist()))



def make_pair_order(n, rng, prefix=0):
	order = PairOrder(n, rng)
	order.extend(prefix)
	return order



class ResamplePair:
	"""
	The coupled (H, H′) of one trial together with its pair ordering; every
	H^[k] of the trial is derived from it.
	"""

	def __init__(self, base, fresh, order, k_max=None):
		try:
			assert base.n == fresh.n == order.n
			assert base.shift == fresh.shift
			assert base.spec == fresh.spec
		except AssertionError:
			raise ValueError('H and H′ must share n, q, law and model.')

		self.base = base
		self.fresh = fresh
		self.order = order
		self.n = base.n

		if k_max is not None:
			order.extend(k_max)


	@classmethod
	def draw(cls, spec, master_seed, trial, k_max=None):
		"""
		Draws H, H′ and the ordering from their own substreams.
		"""
		key = (master_seed, spec.n, trial)
		base = sample(spec, make_rng(*key, 'base'), seed=master_seed)
		fresh = sample(spec, make_rng(*key, 'fresh'), seed=master_seed)
		order = PairOrder(spec.n, make_rng(*key, 'order'))
		return cls(base, fresh, order, k_max)


	@property
	def size(self):
		return self.order.size


	def changed_count(self, k):
		"""
		How many of the k resampled entries actually changed value.
		"""
		pairs = self.order.prefix(k)
		return int(np.sum(
			self.base.stored_at(pairs) != self.fresh.stored_at(pairs)
		))



def resample_to(rp, k):
	"""
	H^[k]: the entries in S_k come from H′, all others from H.
	"""
	pairs = rp.order.prefix(k)
	return rp.base.with_entries(pairs, rp.fresh.stored_at(pairs))


def resample_diffs(rp, k_lo, k_hi):
	"""
	The entries whose value changes between H^[k_lo] and H^[k_hi], as
	((i, j), old, new) in resampling order.
	"""
	try:
		assert k_lo <= k_hi
	except AssertionError:
		raise ValueError('k_lo must not exceed k_hi.')

	pairs = rp.order.segment(k_lo, k_hi)
	old = rp.base.stored_at(pairs)
	new = rp.fresh.stored_at(pairs)

	changed = old != new
	rows, cols = pair_from_index(rp.n, pairs[changed])

	return [
		((i, j), o, w) for i, j, o, w in zip(
			rows.tolist(), cols.tolist(),
			old[changed].tolist(), new[changed].tolist())
	]


def apply_diffs(H, diffs):
	"""
	Replays the output of resample_diffs() on H.
	"""
	if not diffs:
		return H

	rows = [pair[0] for pair, _, _ in diffs]
	cols = [pair[1] for pair, _, _ in diffs]
	values = [new for _, _, new in diffs]

	return H.with_entries(pair_index(H.n, rows, cols), values)



"""
Single-entry resampling
"""

@dataclass(frozen=True)
class SingleResampleQuantities:
	q_st: float
	z_st: float
	pair: tuple



def single_resample(H, i, j, rng):
	"""
	H_(ij): the entries h_ij and h_ji replaced by a fresh draw h″ from the
	same law. Everything else is left bitwise unchanged.
	"""
	try:
		assert 0 <= i <= j < H.n
	except AssertionError:
		raise ValueError('single_resample() wants 0 <= i <= j < n.')

	try:
		assert H.spec is not None
	except AssertionError:
		raise ValueError('The matrix does not know its law.')

	value = H.spec.draw(rng, np.array([i == j]))
	return H.with_entries([pair_index(H.n, i, j)], value)


def single_resample_quantities(H, H_st, s, t):
	"""
	Q_st = (h_st² − h″²)(1 + 1(s≠t))/N and Z_st = (h_st − h″)(1 + 1(s≠t)),
	read off the two matrices.
	"""
	if s > t:
		s, t = t, s

	index = pair_index(H.n, s, t)
	try:
		assert H.n == H_st.n and H.shift == H_st.shift
		assert H.with_entries([index], H_st.stored_at([index])).same_as(H_st)
	except AssertionError:
		raise ValueError('The matrices differ outside ({}, {}).'.format(s, t))

	h = H.entry(s, t)
	h_new = H_st.entry(s, t)
	factor = 1 if s == t else 2

	return SingleResampleQuantities(
		q_st = (h * h - h_new * h_new) * factor / H.n,
		z_st = (h - h_new) * factor,
		pair = (s, t)
	)



@dataclass(frozen=True)
class CoupledResample:
	H_st: object
	Hk: object
	Hk_st: object
	in_resampled: bool
	base: SingleResampleQuantities
	resampled: SingleResampleQuantities



def coupled_single_resample(rp, k, s, t, rng):
	"""
	The pair (H_(st), H^[k]_(st)): H's entry goes to h″; H^[k]'s entry goes
	to h″ as well if (s, t) is in S_k and to an independent h‴ otherwise.
	"""
	if s > t:
		s, t = t, s

	spec = rp.base.spec
	diagonal = np.array([s == t])
	h2 = spec.draw(rng, diagonal)
	h3 = spec.draw(rng, diagonal)

	index = pair_index(rp.n, s, t)
	in_resampled = bool(np.isin(index, rp.order.prefix(k)))

	H_st = rp.base.with_entries([index], h2)
	Hk = resample_to(rp, k)
	Hk_st = Hk.with_entries([index], h2 if in_resampled else h3)

	return CoupledResample(
		H_st = H_st,
		Hk = Hk,
		Hk_st = Hk_st,
		in_resampled = in_resampled,
		base = single_resample_quantities(rp.base, H_st, s, t),
		resampled = single_resample_quantities(Hk, Hk_st, s, t)
	)
