"""
Deterministic edge data: the semicircle transform, the deformed transform
m_⋆ solving P(z, m) = 1 + zm + (1 + 𝓧)m² + c·m⁴ = 0, the random edge 𝓛,
typical eigenvalue locations and rigidity residuals.

Without the quartic coefficient c everything is closed form; with it the
Herglotz root is tracked down from large Im z.
"""
from dataclasses import dataclass
import logging
import math

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.optimize import brentq

from app.ensemble import correction_term
from utils.files import atomic_write, csv_text


logger = logging.getLogger('kohina.edge_model')


DENSITY_ETA = 1e-6

QUADRATURE_POINTS = 2 ** 14 + 1

QUADRATURE_TOL = 1e-6



class BranchError(ArithmeticError):
	pass



class QuadratureError(ArithmeticError):
	pass



@dataclass(frozen=True)
class EdgeModel:
	l0: float = 2.0
	chi: float = 0.0
	quartic: float = None
	n: int = None
	q: float = None

	def __post_init__(self):
		try:
			assert self.chi > -1
		except AssertionError:
			raise ValueError('The edge model needs 𝓧 > -1.')

	@classmethod
	def for_matrix(cls, H, l0=2.0, quartic=None):
		"""
		The model with the measured correction term of H.
		"""
		spec = H.spec
		return cls(
			l0 = l0,
			chi = correction_term(H).value,
			quartic = quartic,
			n = H.n,
			q = None if spec is None else spec.q
		)

	@property
	def b(self):
		return 1 + self.chi

	@property
	def is_quadratic(self):
		return not self.quartic



@dataclass(frozen=True)
class StieltjesValue:
	"""
	A Stieltjes transform m evaluated at z; both lie in the upper half plane.
	"""
	z: complex
	m: complex

	def __post_init__(self):
		try:
			assert self.z.imag > 0 and self.m.imag > 0
		except AssertionError:
			raise BranchError('m({}) = {} is not in the upper half plane.'.format(
				self.z, self.m))



def _check_upper(z):
	z = np.asarray(z, dtype=np.complex128)
	try:
		assert np.all(z.imag > 0)
	except AssertionError:
		raise ValueError('The spectral parameter needs Im z > 0.')
	return z


def _herglotz(m):
	if np.any(m.imag <= 0):
		raise BranchError('Im m <= 0 for some Im z > 0.')
	return m


def _scalar(z, m):
	if np.ndim(z) == 0:
		return complex(m)
	return m


def m_sc(z):
	"""
	The root of 1 + zm + m² = 0 with Im m > 0.

	The two roots multiply to 1, so the small one is taken as the inverse of
	the large one; this keeps m ≈ −1/z accurate for large |z|.
	"""
	z_in = z
	z = _check_upper(z)

	s = np.sqrt(z * z - 4)
	s = np.where(np.abs(z + s) >= np.abs(z - s), s, -s)

	big = -(z + s) / 2
	small = 1 / big
	m = np.where(small.imag > big.imag, small, big)

	return _scalar(z_in, _herglotz(m))


def _companions(w, b, c):
	"""
	Companion matrices of c·m⁴ + b·m² + w·m + 1, one per entry of w.
	"""
	C = np.zeros(w.shape + (4, 4), dtype=np.complex128)
	C[..., 0, 1] = -b / c
	C[..., 0, 2] = -w / c
	C[..., 0, 3] = -1 / c
	C[..., 1, 0] = C[..., 2, 1] = C[..., 3, 2] = 1
	return C


def _track_quartic(z, b, c, steps=80):
	"""
	Follows the Herglotz root of c·m⁴ + b·m² + z·m + 1 down the vertical
	line through every z at once, starting where m ≈ −1/z.
	"""
	z = np.asarray(z, dtype=np.complex128).ravel()
	top = np.maximum(10.0, 4 * np.abs(z))
	etas = np.geomspace(top, z.imag, steps)

	s = math.sqrt(b)
	current = m_sc((z.real + 1j * etas[0]) / s) / s

	for eta in etas:
		w = z.real + 1j * eta
		roots = np.linalg.eigvals(_companions(w, b, c))

		order = np.argsort(np.abs(roots - current[:, None]), axis=1)
		nearest = np.take_along_axis(roots, order[:, :1], axis=1)[:, 0]
		runner_up = np.take_along_axis(roots, order[:, 1:2], axis=1)[:, 0]

		collided = np.abs(nearest - runner_up) < 1e-10 * np.maximum(1.0, np.abs(nearest))
		if np.any(collided):
			raise BranchError('Root collision at z = {}.'.format(w[np.argmax(collided)]))

		current = nearest

	return current


def m_star(z, model):
	"""
	The Herglotz root of P(z, ·). Without the quartic term this is the
	semicircle transform rescaled by √(1 + 𝓧).
	"""
	z_in = z
	z = _check_upper(z)

	if model.is_quadratic:
		s = math.sqrt(model.b)
		return _scalar(z_in, m_sc(z / s) / s)

	m = _track_quartic(z, model.b, model.quartic).reshape(z.shape)

	return _scalar(z_in, _herglotz(m))


def edge_location(model):
	"""
	𝓛, the right edge of ρ_⋆, where two roots of P(𝓛, ·) merge.

	With the quartic term the double root y < 0 solves 1 − by² − 3cy⁴ = 0,
	written as y² = 2/(b + √(b² + 12c)) to stay stable for small c.
	"""
	b = model.b
	if model.is_quadratic:
		return 2 * math.sqrt(b)

	c = model.quartic
	disc = b * b + 12 * c
	try:
		assert disc > 0
	except AssertionError:
		raise BranchError('No real edge for this quartic coefficient.')

	y_sq = 2 / (b + math.sqrt(disc))
	y = -math.sqrt(y_sq)
	return -y * (2 * b + 4 * c * y_sq)


def density(E, model, eta=DENSITY_ETA):
	"""
	ρ_⋆(E) = Im m_⋆(E + i0⁺)/π, extrapolated from η and 2η.
	"""
	E = np.asarray(E, dtype=np.float64)
	one = np.imag(m_star(E + 1j * eta, model))
	two = np.imag(m_star(E + 2j * eta, model))
	return np.maximum(2 * one - two, 0.0) / math.pi



class IntegratedDensity:
	"""
	Tabulates ρ_⋆([E, 𝓛]) on E = 𝓛·cos θ, θ ∈ [0, π], where the square-root
	edges become smooth. ρ_⋆ is symmetric so the support is [−𝓛, 𝓛].
	"""

	def __init__(self, model, points=QUADRATURE_POINTS):
		self.model = model
		self.edge = edge_location(model)

		theta = np.linspace(0, math.pi, points)
		integrand = density(self.edge * np.cos(theta), model) \
			* self.edge * np.sin(theta)

		mass = cumulative_trapezoid(integrand, theta, initial=0)
		coarse = cumulative_trapezoid(integrand[::2], theta[::2], initial=0)

		try:
			assert mass[-1] > 0
			error = np.max(np.abs(mass[::2] / mass[-1] - coarse / coarse[-1]))
			assert error <= QUADRATURE_TOL
		except AssertionError:
			raise QuadratureError('Integrated density did not settle.')

		self.theta = theta
		self.mass = mass / mass[-1]

	def mass_above(self, E):
		"""
		ρ_⋆([E, 𝓛]).
		"""
		theta = np.arccos(np.clip(np.asarray(E) / self.edge, -1, 1))
		return np.interp(theta, self.theta, self.mass)

	def location(self, fraction):
		"""
		The E with ρ_⋆([E, 𝓛]) = fraction.
		"""
		if fraction <= 0:
			return self.edge
		if fraction >= 1:
			return -self.edge

		theta = brentq(
			lambda t: np.interp(t, self.theta, self.mass) - fraction,
			0, math.pi, xtol=1e-15, rtol=4 * np.finfo(float).eps
		)
		return self.edge * math.cos(theta)



@dataclass(frozen=True)
class QuantileTable:
	gammas: np.ndarray
	model: EdgeModel
	n: int

	def to_csv(self, path, config_hash='-', artifact_version='-'):
		rows = [
			{'index': i + 1, 'gamma': float(g)}
			for i, g in enumerate(self.gammas)
		]
		return atomic_write(path, csv_text(
			['index', 'gamma'], rows, config_hash, artifact_version))



def quantiles(model, n, integrated=None):
	"""
	γ_1 >= ... >= γ_N with ρ_⋆([γ_i, 𝓛]) = (i − 1)/N.
	"""
	try:
		assert n >= 2
	except AssertionError:
		raise ValueError('quantiles() needs n >= 2.')

	if integrated is None:
		integrated = IntegratedDensity(model)

	gammas = np.array([integrated.location(i / n) for i in range(n)])
	gammas[0] = integrated.edge

	return QuantileTable(gammas, model, n)



@dataclass(frozen=True)
class RigidityReport:
	residuals: np.ndarray
	normalized: np.ndarray
	scale: float



def rigidity_report(eigs, table, q=None):
	"""
	|λ_i − γ_i| and the same divided by N^{−1/3}q^{−3} + N^{−2/3}.
	"""
	try:
		assert eigs.is_full
		assert eigs.n == table.n
	except AssertionError:
		raise ValueError('Rigidity needs the full spectrum of matching size.')

	q = q or table.model.q
	try:
		assert q is not None
	except AssertionError:
		raise ValueError('Rigidity needs the sparsity q.')

	n = table.n
	scale = n ** (-1 / 3) * q ** -3 + n ** (-2 / 3)
	residuals = np.abs(np.asarray(eigs.values) - table.gammas)

	return RigidityReport(residuals, residuals / scale, scale)
