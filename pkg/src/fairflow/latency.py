"""Parametric edge latency families.

The package works with a closed enumeration of latency functions
(constant, affine, monomial, polynomial, BPR) rather than arbitrary
callables, so the marginal cost, the antiderivative, and the steepness
are all available in closed form.  Every member is nonnegative,
nondecreasing, and standard (``x * value(x)`` is convex) on ``[0, inf)``.

All evaluation methods accept either a float or a numpy array of
nonnegative loads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

__all__ = [
    "LatencyFn",
    "Constant",
    "Affine",
    "Monomial",
    "Polynomial",
    "BPR",
    "LatencyBatch",
    "latency_from_dict",
    "polynomial_degree",
]


def _check_load(x):
    if np.any(np.asarray(x) < 0):
        raise DomainError(f"latency functions are defined for loads >= 0, got {x!r}")
    return x


def _check_param(name, value):
    v = float(value)
    if not math.isfinite(v) or v < 0:
        raise DomainError(f"{name} must be a finite nonnegative real, got {value!r}")
    return v


def _check_degree(name, value):
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    if not isinstance(value, int) or value < 1:
        raise DomainError(f"{name} must be a positive integer, got {value!r}")
    return value


class LatencyFn:
    """Base class of the latency family enumeration."""

    def evaluate(self, x):
        """Latency at load ``x >= 0``."""
        raise NotImplementedError

    def derivative(self, x):
        """First derivative of the latency at load ``x``."""
        raise NotImplementedError

    def marginal(self, x):
        """Marginal cost ``d/dx (x * evaluate(x)) = evaluate(x) + x * derivative(x)``."""
        _check_load(x)
        return self.evaluate(x) + x * self.derivative(x)

    def integral(self, x):
        """Closed-form antiderivative ``int_0^x evaluate(s) ds``."""
        raise NotImplementedError

    def steepness(self):
        """Supremum of ``marginal(x) / evaluate(x)`` over loads ``x > 0``.

        For an identically zero function the convention ``0/0 := 1``
        applies and the steepness is 1.  Use :meth:`steepness_attained`
        to learn whether the supremum is attained at a finite load or
        only approached in the limit ``x -> inf``.
        """
        raise NotImplementedError

    def steepness_attained(self):
        """Whether some finite load attains :meth:`steepness`."""
        raise NotImplementedError

    def is_zero(self):
        """Whether the function is identically zero."""
        raise NotImplementedError

    def to_dict(self):
        """JSON-ready descriptor used by the native instance format."""
        raise NotImplementedError


@dataclass(frozen=True)
class Constant(LatencyFn):
    c: float

    def __post_init__(self):
        object.__setattr__(self, "c", _check_param("c", self.c))

    def evaluate(self, x):
        _check_load(x)
        return self.c * np.ones_like(x, dtype=float) if isinstance(x, np.ndarray) else self.c

    def derivative(self, x):
        _check_load(x)
        return np.zeros_like(x, dtype=float) if isinstance(x, np.ndarray) else 0.0

    def marginal(self, x):
        return self.evaluate(x)

    def integral(self, x):
        _check_load(x)
        return self.c * x

    def steepness(self):
        return 1.0

    def steepness_attained(self):
        return True

    def is_zero(self):
        return self.c == 0.0

    def to_dict(self):
        return {"kind": "constant", "c": self.c}


@dataclass(frozen=True)
class Affine(LatencyFn):
    """``a * x + b`` with nonnegative slope and intercept."""

    a: float
    b: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "a", _check_param("a", self.a))
        object.__setattr__(self, "b", _check_param("b", self.b))

    def evaluate(self, x):
        _check_load(x)
        return self.a * x + self.b

    def derivative(self, x):
        _check_load(x)
        return self.a * np.ones_like(x, dtype=float) if isinstance(x, np.ndarray) else self.a

    def marginal(self, x):
        _check_load(x)
        return 2.0 * self.a * x + self.b

    def integral(self, x):
        _check_load(x)
        return 0.5 * self.a * x * x + self.b * x

    def steepness(self):
        return 1.0 if self.a == 0.0 else 2.0

    def steepness_attained(self):
        # the ratio is exactly 2 everywhere when b == 0, otherwise it
        # approaches 2 only as x -> inf
        return self.a == 0.0 or self.b == 0.0

    def is_zero(self):
        return self.a == 0.0 and self.b == 0.0

    def to_dict(self):
        return {"kind": "affine", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class Monomial(LatencyFn):
    """``coef * x**degree`` with a positive integer degree."""

    coef: float
    degree: int

    def __post_init__(self):
        object.__setattr__(self, "coef", _check_param("coef", self.coef))
        object.__setattr__(self, "degree", _check_degree("degree", self.degree))

    def evaluate(self, x):
        _check_load(x)
        return self.coef * x**self.degree

    def derivative(self, x):
        _check_load(x)
        n = self.degree
        if n == 1:
            return self.coef * np.ones_like(x, dtype=float) if isinstance(x, np.ndarray) else self.coef
        return self.coef * n * x ** (n - 1)

    def marginal(self, x):
        _check_load(x)
        return (self.degree + 1) * self.coef * x**self.degree

    def integral(self, x):
        _check_load(x)
        return self.coef * x ** (self.degree + 1) / (self.degree + 1)

    def steepness(self):
        return 1.0 if self.coef == 0.0 else float(self.degree + 1)

    def steepness_attained(self):
        return True  # the ratio equals degree + 1 at every positive load

    def is_zero(self):
        return self.coef == 0.0

    def to_dict(self):
        return {"kind": "monomial", "coef": self.coef, "degree": self.degree}


@dataclass(frozen=True)
class Polynomial(LatencyFn):
    """``sum_j coefs[j] * x**j`` with nonnegative coefficients."""

    coefs: tuple

    def __post_init__(self):
        coefs = tuple(_check_param(f"coefs[{j}]", c) for j, c in enumerate(self.coefs))
        if not coefs:
            raise DomainError("polynomial needs at least the constant coefficient")
        object.__setattr__(self, "coefs", coefs)

    def _effective_degree(self):
        for j in range(len(self.coefs) - 1, -1, -1):
            if self.coefs[j] != 0.0:
                return j
        return None  # identically zero

    def evaluate(self, x):
        _check_load(x)
        out = 0.0
        for c in reversed(self.coefs):
            out = out * x + c
        return out

    def derivative(self, x):
        _check_load(x)
        out = 0.0
        for j in range(len(self.coefs) - 1, 0, -1):
            out = out * x + j * self.coefs[j]
        return out * np.ones_like(x, dtype=float) if isinstance(x, np.ndarray) and np.ndim(out) == 0 else out

    def marginal(self, x):
        _check_load(x)
        out = 0.0
        for j in range(len(self.coefs) - 1, -1, -1):
            out = out * x + (j + 1) * self.coefs[j]
        return out

    def integral(self, x):
        _check_load(x)
        out = 0.0
        for j in range(len(self.coefs) - 1, -1, -1):
            out = out * x + self.coefs[j] / (j + 1)
        return out * x

    def steepness(self):
        d = self._effective_degree()
        if d is None:
            return 1.0
        return float(d + 1)

    def steepness_attained(self):
        d = self._effective_degree()
        if d is None or d == 0:
            return True
        # attained everywhere iff the top term is the only nonzero one
        return all(c == 0.0 for c in self.coefs[:d])

    def is_zero(self):
        return self._effective_degree() is None

    def to_dict(self):
        return {"kind": "polynomial", "coefs": list(self.coefs)}


@dataclass(frozen=True)
class BPR(LatencyFn):
    """Bureau of Public Roads link delay ``xi * (1 + a * (x / kappa)**p)``.

    ``xi`` is the free-flow time, ``kappa`` the practical capacity,
    ``a`` the congestion coefficient (0.15 in the classic calibration),
    and ``p`` the positive integer power (classically 4).
    """

    xi: float
    kappa: float
    a: float
    p: int

    def __post_init__(self):
        object.__setattr__(self, "xi", _check_param("xi", self.xi))
        object.__setattr__(self, "kappa", _check_param("kappa", self.kappa))
        object.__setattr__(self, "a", _check_param("a", self.a))
        object.__setattr__(self, "p", _check_degree("p", self.p))
        if self.kappa == 0.0:
            raise DomainError("BPR capacity kappa must be positive")

    def evaluate(self, x):
        _check_load(x)
        return self.xi * (1.0 + self.a * (x / self.kappa) ** self.p)

    def derivative(self, x):
        _check_load(x)
        p = self.p
        return self.xi * self.a * p * x ** (p - 1) / self.kappa**p

    def marginal(self, x):
        _check_load(x)
        return self.xi * (1.0 + self.a * (self.p + 1) * (x / self.kappa) ** self.p)

    def integral(self, x):
        _check_load(x)
        p = self.p
        return self.xi * (x + self.a * x ** (p + 1) / ((p + 1) * self.kappa**p))

    def steepness(self):
        # the marginal/latency ratio (1 + a(p+1)u) / (1 + au), u = (x/kappa)^p,
        # increases to p + 1 as the load grows without bound
        if self.xi == 0.0 or self.a == 0.0:
            return 1.0
        return float(self.p + 1)

    def steepness_attained(self):
        return self.xi == 0.0 or self.a == 0.0

    def is_zero(self):
        return self.xi == 0.0

    def to_dict(self):
        return {"kind": "bpr", "xi": self.xi, "kappa": self.kappa, "a": self.a, "p": self.p}


_KINDS = {
    "constant": lambda d: Constant(d["c"]),
    "affine": lambda d: Affine(d["a"], d.get("b", 0.0)),
    "monomial": lambda d: Monomial(d["coef"], d["degree"]),
    "polynomial": lambda d: Polynomial(tuple(d["coefs"])),
    "bpr": lambda d: BPR(d["xi"], d["kappa"], d["a"], d["p"]),
}


def latency_from_dict(d):
    """Rebuild a latency function from its :meth:`LatencyFn.to_dict` descriptor."""
    try:
        kind = d["kind"]
    except (TypeError, KeyError):
        raise DomainError(f"latency descriptor must be a mapping with a 'kind' key, got {d!r}")
    if kind not in _KINDS:
        raise DomainError(f"unknown latency kind {kind!r}")
    try:
        return _KINDS[kind](d)
    except KeyError as exc:
        raise DomainError(f"latency descriptor for {kind!r} is missing field {exc}")


def polynomial_degree(fn):
    """Degree of ``fn`` viewed as a polynomial with nonnegative coefficients.

    Every supported family is such a polynomial; this is the degree bound
    used by the worst-case unfairness comparison.
    """
    if isinstance(fn, Constant):
        return 0
    if isinstance(fn, Affine):
        return 1 if fn.a > 0 else 0
    if isinstance(fn, Monomial):
        return 0 if fn.coef == 0 else fn.degree
    if isinstance(fn, Polynomial):
        d = fn._effective_degree()
        return 0 if d is None else d
    if isinstance(fn, BPR):
        return 0 if (fn.a == 0 or fn.xi == 0) else fn.p
    raise DomainError(f"not a latency function: {fn!r}")


def _pow_int(x, n):
    """``x ** n`` for a small positive integer ``n`` by repeated squaring.

    Much faster than ``np.power`` with a float exponent array, and the
    solver evaluates powers thousands of times per solve.
    """
    result = None
    base = x
    while n:
        if n & 1:
            result = base if result is None else result * base
        n >>= 1
        if n:
            base = base * base
    return result


class LatencyBatch:
    """Vectorized per-edge evaluation for a fixed sequence of latency functions.

    Groups edges by family (and, for powered families, by exponent) so
    that ``evaluate``/``marginal``/``integral`` over a whole edge-flow
    vector reduce to a handful of numpy expressions.  This is the
    solver's hot path; inputs are trusted to be nonnegative.
    """

    def __init__(self, fns):
        self.fns = tuple(fns)
        groups = {}
        for i, fn in enumerate(self.fns):
            if isinstance(fn, (Monomial, BPR)):
                key = (type(fn), fn.degree if isinstance(fn, Monomial) else fn.p)
            elif isinstance(fn, (Constant, Affine, Polynomial)):
                key = (type(fn), None)
            else:
                raise DomainError(f"unsupported latency class {type(fn)!r}")
            groups.setdefault(key, []).append(i)
        self._groups = []
        for (cls, power), idx in groups.items():
            idx = np.asarray(idx, dtype=np.intp)
            if cls is Constant:
                params = (np.array([self.fns[i].c for i in idx]),)
            elif cls is Affine:
                params = (
                    np.array([self.fns[i].a for i in idx]),
                    np.array([self.fns[i].b for i in idx]),
                )
            elif cls is Monomial:
                params = (np.array([self.fns[i].coef for i in idx]),)
            elif cls is Polynomial:
                width = max(len(self.fns[i].coefs) for i in idx)
                mat = np.zeros((len(idx), width))
                for row, i in enumerate(idx):
                    mat[row, : len(self.fns[i].coefs)] = self.fns[i].coefs
                params = (mat,)
            else:  # BPR: precompute xi and xi * a / kappa^p
                xi = np.array([self.fns[i].xi for i in idx])
                slope = np.array([self.fns[i].a / self.fns[i].kappa ** self.fns[i].p for i in idx]) * xi
                params = (xi, slope)
            self._groups.append((cls, power, idx, params))
        self.size = len(self.fns)
        # uniform networks (every edge in one family/power) skip the scatter
        if len(self._groups) == 1 and np.array_equal(self._groups[0][2], np.arange(self.size)):
            cls, power, _, params = self._groups[0]
            self._groups = [(cls, power, slice(None), params)]

    def evaluate(self, x):
        out = np.empty(self.size)
        for cls, power, idx, params in self._groups:
            xs = x[idx]
            if cls is Constant:
                out[idx] = params[0]
            elif cls is Affine:
                out[idx] = params[0] * xs + params[1]
            elif cls is Monomial:
                out[idx] = params[0] * _pow_int(xs, power)
            elif cls is Polynomial:
                mat = params[0]
                acc = mat[:, -1].copy()
                for j in range(mat.shape[1] - 2, -1, -1):
                    acc = acc * xs + mat[:, j]
                out[idx] = acc
            else:  # BPR
                out[idx] = params[0] + params[1] * _pow_int(xs, power)
        return out

    def marginal(self, x):
        out = np.empty(self.size)
        for cls, power, idx, params in self._groups:
            xs = x[idx]
            if cls is Constant:
                out[idx] = params[0]
            elif cls is Affine:
                out[idx] = 2.0 * params[0] * xs + params[1]
            elif cls is Monomial:
                out[idx] = (power + 1.0) * params[0] * _pow_int(xs, power)
            elif cls is Polynomial:
                mat = params[0]
                width = mat.shape[1]
                acc = width * mat[:, -1]
                for j in range(width - 2, -1, -1):
                    acc = acc * xs + (j + 1) * mat[:, j]
                out[idx] = acc
            else:  # BPR
                out[idx] = params[0] + (power + 1.0) * params[1] * _pow_int(xs, power)
        return out

    def integral(self, x):
        out = np.empty(self.size)
        for cls, power, idx, params in self._groups:
            xs = x[idx]
            if cls is Constant:
                out[idx] = params[0] * xs
            elif cls is Affine:
                out[idx] = (0.5 * params[0] * xs + params[1]) * xs
            elif cls is Monomial:
                out[idx] = params[0] * _pow_int(xs, power + 1) / (power + 1.0)
            elif cls is Polynomial:
                mat = params[0]
                width = mat.shape[1]
                acc = mat[:, -1] / width
                for j in range(width - 2, -1, -1):
                    acc = acc * xs + mat[:, j] / (j + 1)
                out[idx] = acc * xs
            else:  # BPR
                out[idx] = (params[0] + params[1] * _pow_int(xs, power) / (power + 1.0)) * xs
        return out
