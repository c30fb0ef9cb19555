"""Positive-variable expression algebra and its log-space transform.

Every node is log-convex by construction: with ``u = log x`` the function
``F(u) = log f(exp u)`` is convex. Monomials map to affine functions,
posynomials to log-sum-exp of affine functions, and the remaining nodes
combine those through operations that preserve convexity.
"""

from __future__ import annotations

import abc
import enum
import math
from typing import Callable, Iterable, Iterator, Literal, Mapping, Union, overload

import attrs
import numpy as np
from scipy import special

Number = Union[int, float]


class VariableKind(enum.Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"


@attrs.frozen
class Variable:
    """A strictly positive decision variable; integer variables are ≥ 1."""

    id: int
    name: str
    kind: VariableKind = VariableKind.CONTINUOUS

    @property
    def is_integer(self) -> bool:
        return self.kind is VariableKind.INTEGER

    def as_monomial(self) -> Monomial:
        return Monomial(1.0, ((self, 1.0),))

    @overload
    def __mul__(self, other: Number | Variable | Monomial) -> Monomial: ...
    @overload
    def __mul__(self, other: Expression) -> Expression: ...
    def __mul__(self, other: Operand) -> Expression:
        return self.as_monomial() * other

    def __rmul__(self, other: Number) -> Monomial:
        return self.as_monomial() * other

    def __truediv__(self, other: Number | Variable | Monomial) -> Monomial:
        return self.as_monomial() / other

    def __rtruediv__(self, other: Number) -> Monomial:
        return as_monomial(other) / self.as_monomial()

    def __pow__(self, exponent: Number) -> Monomial:
        return self.as_monomial() ** exponent

    def __add__(self, other: Operand) -> Expression:
        return self.as_monomial() + other

    def __radd__(self, other: Operand) -> Expression:
        return self.as_monomial() + other

    def __repr__(self) -> str:
        return self.name


@attrs.define
class Registry:
    """Creates variables with unique ids and names."""

    _variables: list[Variable] = attrs.field(factory=list, init=False)
    _names: set[str] = attrs.field(factory=set, init=False)

    def _add(self, name: str, kind: VariableKind) -> Variable:
        if name in self._names:
            raise ValueError(f"Duplicate variable name: {name}")
        variable = Variable(len(self._variables), name, kind)
        self._variables.append(variable)
        self._names.add(name)
        return variable

    def continuous(self, name: str) -> Variable:
        return self._add(name, VariableKind.CONTINUOUS)

    def integer(self, name: str) -> Variable:
        return self._add(name, VariableKind.INTEGER)

    def __iter__(self) -> Iterator[Variable]:
        return iter(self._variables)

    def __len__(self) -> int:
        return len(self._variables)


@attrs.frozen(eq=False)
class Derivatives:
    """Value, gradient and Hessian of ``F`` restricted to its support.

    ``support`` holds sorted variable indices; ``gradient`` and ``hessian`` are
    dense over that support.
    """

    value: float
    support: np.ndarray
    gradient: np.ndarray
    hessian: np.ndarray


_Local = tuple[float, np.ndarray, np.ndarray]


@attrs.frozen(eq=False)
class Compiled:
    """Log-space derivative oracle bound to a variable index.

    The support and any term matrices are fixed at compile time, so calling
    the oracle inside a Newton loop only does the numeric work.
    """

    support: np.ndarray
    local: Callable[[np.ndarray], _Local]

    def __call__(self, u: np.ndarray) -> Derivatives:
        value, g, H = self.local(u)
        return Derivatives(value, self.support, g, H)


def _union(children: list[Compiled]) -> tuple[np.ndarray, list[np.ndarray]]:
    support = np.unique(np.concatenate([c.support for c in children])).astype(int)
    return support, [np.searchsorted(support, c.support) for c in children]


def _embed(
    n: int, positions: list[np.ndarray], parts: list[_Local]
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    grads, hessians = [], []
    for pos, (_, g_k, H_k) in zip(positions, parts):
        g = np.zeros(n)
        g[pos] = g_k
        H = np.zeros((n, n))
        H[np.ix_(pos, pos)] = H_k
        grads.append(g)
        hessians.append(H)
    return grads, hessians


class Expression(abc.ABC):
    """Base class of all log-convex expression nodes."""

    @abc.abstractmethod
    def variables(self) -> frozenset[Variable]: ...

    @abc.abstractmethod
    def evaluate(self, values: Mapping[Variable, float]) -> float: ...

    @abc.abstractmethod
    def log_eval(self, u: Mapping[Variable, float]) -> float: ...

    @abc.abstractmethod
    def compile(self, index: Mapping[Variable, int]) -> Compiled: ...

    @abc.abstractmethod
    def scaled(self, factor: Monomial) -> Expression:
        """Return ``self * factor`` keeping the node structure flat."""

    def derivatives(self, u: np.ndarray, index: Mapping[Variable, int]) -> Derivatives:
        return self.compile(index)(u)

    def contains_max(self) -> bool:
        return False

    def __mul__(self, other: Operand) -> Expression:
        if isinstance(other, (int, float, Variable, Monomial)):
            return self.scaled(as_monomial(other))
        if isinstance(other, Expression):
            return Product((self, other))
        return NotImplemented

    def __rmul__(self, other: Operand) -> Expression:
        return self.__mul__(other)

    def __truediv__(self, other: Number | Variable | Monomial) -> Expression:
        return self.scaled(as_monomial(other) ** -1)

    def __add__(self, other: Operand) -> Expression:
        if isinstance(other, (int, float, Variable)):
            other = as_monomial(other)
        if isinstance(other, Expression):
            return Sum((self, other))
        return NotImplemented

    def __radd__(self, other: Operand) -> Expression:
        return self.__add__(other)

    def __pow__(self, exponent: Number) -> Expression:
        return Power(self, exponent)


Operand = Union[Number, Variable, Expression]


def as_monomial(value: Number | Variable | Monomial) -> Monomial:
    if isinstance(value, Monomial):
        return value
    if isinstance(value, Variable):
        return value.as_monomial()
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return Monomial(float(value), ())
    raise TypeError(f"Cannot convert {type(value).__name__} to a monomial")


def _normalize_exponents(
    pairs: Iterable[tuple[Variable, float]],
) -> tuple[tuple[Variable, float], ...]:
    merged: dict[Variable, float] = {}
    for variable, exponent in pairs:
        merged[variable] = merged.get(variable, 0.0) + float(exponent)
    return tuple(
        sorted(
            ((v, e) for v, e in merged.items() if e != 0.0),
            key=lambda pair: pair[0].id,
        )
    )


@attrs.frozen(init=False)
class Monomial(Expression):
    """``c * prod(x_i ** a_i)`` with ``c > 0``."""

    coefficient: float
    exponents: tuple[tuple[Variable, float], ...]

    def __init__(
        self, coefficient: float, exponents: Iterable[tuple[Variable, float]] = ()
    ) -> None:
        if not coefficient > 0 or not math.isfinite(coefficient):
            raise ValueError(f"Monomial coefficient must be positive, got {coefficient}")
        self.__attrs_init__(float(coefficient), _normalize_exponents(exponents))

    @property
    def exponent_map(self) -> dict[Variable, float]:
        return dict(self.exponents)

    def exponent(self, variable: Variable) -> float:
        return self.exponent_map.get(variable, 0.0)

    def variables(self) -> frozenset[Variable]:
        return frozenset(v for v, _ in self.exponents)

    def evaluate(self, values: Mapping[Variable, float]) -> float:
        result = self.coefficient
        for variable, exponent in self.exponents:
            result *= _positive(values, variable) ** exponent
        return result

    def log_eval(self, u: Mapping[Variable, float]) -> float:
        return math.log(self.coefficient) + sum(
            exponent * u[variable] for variable, exponent in self.exponents
        )

    def affine(self, index: Mapping[Variable, int]) -> tuple[np.ndarray, np.ndarray, float]:
        """Return (support, exponents over the support, log coefficient)."""
        pairs = sorted((index[v], e) for v, e in self.exponents)
        support = np.array([i for i, _ in pairs], dtype=int)
        return support, np.array([e for _, e in pairs], dtype=float), math.log(self.coefficient)

    def compile(self, index: Mapping[Variable, int]) -> Compiled:
        support, a, log_c = self.affine(index)
        zero = np.zeros((len(a), len(a)))

        def local(u: np.ndarray) -> _Local:
            return log_c + float(a @ u[support]), a, zero

        return Compiled(support, local)

    def scaled(self, factor: Monomial) -> Monomial:
        return mono_algebra("mul", self, factor)

    @overload  # type: ignore[override]
    def __mul__(self, other: Number | Variable | Monomial) -> Monomial: ...
    @overload
    def __mul__(self, other: Expression) -> Expression: ...
    def __mul__(self, other: Operand) -> Expression:
        if isinstance(other, (int, float, Variable, Monomial)):
            return mono_algebra("mul", self, as_monomial(other))
        if isinstance(other, Expression):
            return other.scaled(self)
        return NotImplemented

    def __rmul__(self, other: Number) -> Monomial:  # type: ignore[override]
        return mono_algebra("mul", self, as_monomial(other))

    def __truediv__(self, other: Number | Variable | Monomial) -> Monomial:
        return mono_algebra("div", self, as_monomial(other))

    def __rtruediv__(self, other: Number) -> Monomial:
        return mono_algebra("div", as_monomial(other), self)

    def __pow__(self, exponent: Number) -> Monomial:
        return mono_algebra("pow", self, exponent)

    def __add__(self, other: Operand) -> Expression:
        if isinstance(other, (int, float, Variable, Monomial)):
            return Posynomial((self, as_monomial(other)))
        if isinstance(other, Posynomial):
            return Posynomial((self, *other.terms))
        return super().__add__(other)

    def __repr__(self) -> str:
        factors = [f"{self.coefficient:g}"] + [
            f"{v.name}^{e:g}" if e != 1.0 else v.name for v, e in self.exponents
        ]
        return "*".join(factors)


def mono_algebra(
    op: Literal["mul", "div", "pow"], lhs: Monomial, rhs: Monomial | Number
) -> Monomial:
    """Multiply, divide or raise monomials: coefficients combine, exponents add or scale."""
    match op:
        case "mul":
            other = as_monomial(rhs)
            return Monomial(
                lhs.coefficient * other.coefficient, lhs.exponents + other.exponents
            )
        case "div":
            other = as_monomial(rhs)
            return Monomial(
                lhs.coefficient / other.coefficient,
                lhs.exponents + tuple((v, -e) for v, e in other.exponents),
            )
        case "pow":
            if isinstance(rhs, Monomial):
                raise TypeError("Monomial exponent must be a real number")
            p = float(rhs)
            return Monomial(
                lhs.coefficient**p, tuple((v, e * p) for v, e in lhs.exponents)
            )
    raise ValueError(f"Unknown monomial operation: {op}")


@attrs.frozen(init=False)
class Posynomial(Expression):
    """A nonempty sum of monomials; like terms are merged on construction."""

    terms: tuple[Monomial, ...]

    def __init__(self, terms: Iterable[Monomial]) -> None:
        merged: dict[tuple[tuple[Variable, float], ...], float] = {}
        for term in terms:
            merged[term.exponents] = merged.get(term.exponents, 0.0) + term.coefficient
        if not merged:
            raise ValueError("Posynomial needs at least one term")
        self.__attrs_init__(tuple(Monomial(c, e) for e, c in merged.items()))

    def variables(self) -> frozenset[Variable]:
        return frozenset().union(*(t.variables() for t in self.terms))

    def evaluate(self, values: Mapping[Variable, float]) -> float:
        return math.fsum(t.evaluate(values) for t in self.terms)

    def log_eval(self, u: Mapping[Variable, float]) -> float:
        return float(special.logsumexp([t.log_eval(u) for t in self.terms]))

    def term_matrix(
        self, index: Mapping[Variable, int]
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Return (support, exponent rows over the support, log coefficients)."""
        support = np.array(sorted({index[v] for v in self.variables()}), dtype=int)
        A = np.zeros((len(self.terms), len(support)))
        for k, term in enumerate(self.terms):
            for v, e in term.exponents:
                A[k, np.searchsorted(support, index[v])] = e
        log_c = np.log([t.coefficient for t in self.terms])
        return support, A, log_c

    def compile(self, index: Mapping[Variable, int]) -> Compiled:
        support, A, log_c = self.term_matrix(index)

        def local(u: np.ndarray) -> _Local:
            z = log_c + A @ u[support]
            p = special.softmax(z)
            g = A.T @ p
            return float(special.logsumexp(z)), g, (A.T * p) @ A - np.outer(g, g)

        return Compiled(support, local)

    def scaled(self, factor: Monomial) -> Posynomial:
        return Posynomial(mono_algebra("mul", t, factor) for t in self.terms)

    def __mul__(self, other: Operand) -> Expression:
        if isinstance(other, Posynomial):
            return Posynomial(
                mono_algebra("mul", a, b) for a in self.terms for b in other.terms
            )
        return super().__mul__(other)

    def __add__(self, other: Operand) -> Expression:
        if isinstance(other, (int, float, Variable, Monomial)):
            return Posynomial((*self.terms, as_monomial(other)))
        if isinstance(other, Posynomial):
            return Posynomial((*self.terms, *other.terms))
        return super().__add__(other)

    def __repr__(self) -> str:
        return " + ".join(repr(t) for t in self.terms)


@attrs.frozen(init=False)
class Max(Expression):
    """Pointwise maximum; only valid on the smaller side of an inequality."""

    args: tuple[Expression, ...]

    def __init__(self, args: Iterable[Expression | Number]) -> None:
        converted = tuple(
            a if isinstance(a, Expression) else as_monomial(a) for a in args
        )
        if not converted:
            raise ValueError("Max needs at least one argument")
        self.__attrs_init__(converted)

    def variables(self) -> frozenset[Variable]:
        return frozenset().union(*(a.variables() for a in self.args))

    def evaluate(self, values: Mapping[Variable, float]) -> float:
        return max(a.evaluate(values) for a in self.args)

    def log_eval(self, u: Mapping[Variable, float]) -> float:
        return max(a.log_eval(u) for a in self.args)

    def compile(self, index: Mapping[Variable, int]) -> Compiled:
        raise ValueError(
            "Max nodes must be lowered to epigraph form before differentiation"
        )

    def scaled(self, factor: Monomial) -> Max:
        return Max(a.scaled(factor) for a in self.args)

    def contains_max(self) -> bool:
        return True


@attrs.frozen
class ExpOfMonomial(Expression):
    """``exp(m(x))`` for a monomial ``m``; its log-space value is ``m(exp u)``."""

    inner: Monomial

    def variables(self) -> frozenset[Variable]:
        return self.inner.variables()

    def evaluate(self, values: Mapping[Variable, float]) -> float:
        return math.exp(self.inner.evaluate(values))

    def log_eval(self, u: Mapping[Variable, float]) -> float:
        return math.exp(self.inner.log_eval(u))

    def compile(self, index: Mapping[Variable, int]) -> Compiled:
        support, a, log_c = self.inner.affine(index)

        def local(u: np.ndarray) -> _Local:
            with np.errstate(over="ignore"):
                v = float(np.exp(log_c + a @ u[support]))
            return v, v * a, v * np.outer(a, a)

        return Compiled(support, local)

    def scaled(self, factor: Monomial) -> Expression:
        return Product((self, factor))


@attrs.frozen(init=False)
class Power(Expression):
    """``base ** p`` for ``p > 0``."""

    base: Expression
    exponent: float

    def __init__(self, base: Expression, exponent: float) -> None:
        if not exponent > 0:
            raise ValueError(f"Power exponent must be positive, got {exponent}")
        self.__attrs_init__(base, float(exponent))

    def variables(self) -> frozenset[Variable]:
        return self.base.variables()

    def evaluate(self, values: Mapping[Variable, float]) -> float:
        return self.base.evaluate(values) ** self.exponent

    def log_eval(self, u: Mapping[Variable, float]) -> float:
        return self.exponent * self.base.log_eval(u)

    def compile(self, index: Mapping[Variable, int]) -> Compiled:
        base = self.base.compile(index)
        p = self.exponent

        def local(u: np.ndarray) -> _Local:
            value, g, H = base.local(u)
            return p * value, p * g, p * H

        return Compiled(base.support, local)

    def scaled(self, factor: Monomial) -> Expression:
        return Product((self, factor))

    def contains_max(self) -> bool:
        return self.base.contains_max()


@attrs.frozen(init=False)
class Product(Expression):
    """Product of log-convex expressions (a sum in log space)."""

    factors: tuple[Expression, ...]

    def __init__(self, factors: Iterable[Expression]) -> None:
        flat: list[Expression] = []
        for factor in factors:
            flat.extend(factor.factors if isinstance(factor, Product) else (factor,))
        if not flat:
            raise ValueError("Product needs at least one factor")
        self.__attrs_init__(tuple(flat))

    def variables(self) -> frozenset[Variable]:
        return frozenset().union(*(f.variables() for f in self.factors))

    def evaluate(self, values: Mapping[Variable, float]) -> float:
        return math.prod(f.evaluate(values) for f in self.factors)

    def log_eval(self, u: Mapping[Variable, float]) -> float:
        return sum(f.log_eval(u) for f in self.factors)

    def compile(self, index: Mapping[Variable, int]) -> Compiled:
        children = [f.compile(index) for f in self.factors]
        support, positions = _union(children)

        def local(u: np.ndarray) -> _Local:
            parts = [c.local(u) for c in children]
            grads, hessians = _embed(len(support), positions, parts)
            return sum(p[0] for p in parts), sum(grads), sum(hessians)  # type: ignore[return-value]

        return Compiled(support, local)

    def scaled(self, factor: Monomial) -> Product:
        return Product((*self.factors, factor))

    def contains_max(self) -> bool:
        return any(f.contains_max() for f in self.factors)


@attrs.frozen(init=False)
class Sum(Expression):
    """Sum of log-convex expressions (log-sum-exp in log space)."""

    addends: tuple[Expression, ...]

    def __init__(self, addends: Iterable[Expression]) -> None:
        flat: list[Expression] = []
        for addend in addends:
            flat.extend(addend.addends if isinstance(addend, Sum) else (addend,))
        if not flat:
            raise ValueError("Sum needs at least one addend")
        self.__attrs_init__(tuple(flat))

    def variables(self) -> frozenset[Variable]:
        return frozenset().union(*(a.variables() for a in self.addends))

    def evaluate(self, values: Mapping[Variable, float]) -> float:
        return math.fsum(a.evaluate(values) for a in self.addends)

    def log_eval(self, u: Mapping[Variable, float]) -> float:
        return float(special.logsumexp([a.log_eval(u) for a in self.addends]))

    def compile(self, index: Mapping[Variable, int]) -> Compiled:
        children = [a.compile(index) for a in self.addends]
        support, positions = _union(children)

        def local(u: np.ndarray) -> _Local:
            parts = [c.local(u) for c in children]
            grads, hessians = _embed(len(support), positions, parts)
            values = np.array([p[0] for p in parts])
            w = special.softmax(values)
            g = np.zeros(len(support))
            H = np.zeros((len(support), len(support)))
            for w_k, g_k, H_k in zip(w, grads, hessians):
                g += w_k * g_k
                H += w_k * (H_k + np.outer(g_k, g_k))
            return float(special.logsumexp(values)), g, H - np.outer(g, g)

        return Compiled(support, local)

    def scaled(self, factor: Monomial) -> Sum:
        return Sum(a.scaled(factor) for a in self.addends)

    def contains_max(self) -> bool:
        return any(a.contains_max() for a in self.addends)


def _positive(values: Mapping[Variable, float], variable: Variable) -> float:
    try:
        value = values[variable]
    except KeyError:
        raise KeyError(f"No value assigned to variable '{variable.name}'") from None
    if not value > 0:
        raise ValueError(f"Variable '{variable.name}' must be positive, got {value}")
    return value


def evaluate(expr: Expression, assignment: Mapping[Variable, float]) -> float:
    """Evaluate in original space; every variable must be assigned a positive value."""
    for variable in expr.variables():
        _positive(assignment, variable)
    return expr.evaluate(assignment)


def log_transform_eval(expr: Expression, u: Mapping[Variable, float]) -> float:
    """Return ``log f(exp u)``."""
    return expr.log_eval(u)


def gradient(expr: Expression, u: Mapping[Variable, float]) -> dict[Variable, float]:
    """Exact gradient of ``log f(exp u)`` with respect to ``u``."""
    ordered = sorted(expr.variables(), key=lambda v: v.id)
    index = {v: i for i, v in enumerate(ordered)}
    point = np.array([u[v] for v in ordered], dtype=float)
    d = expr.derivatives(point, index)
    return {ordered[i]: float(g) for i, g in zip(d.support, d.gradient)}


def posy_sum(items: Iterable[Monomial | Posynomial]) -> Posynomial:
    """Sum monomials and posynomials into one posynomial."""
    terms: list[Monomial] = []
    for item in items:
        terms.extend(item.terms if isinstance(item, Posynomial) else (item,))
    return Posynomial(terms)
