"""Truncated power series in z with exact coefficients.

Coefficients are elements of any ring supporting +, -, * and division by integers:
`fractions.Fraction` for values at a rational point, `BivariatePolynomial` for results symbolic in mu and nu.
"""

from collections.abc import Iterator, Sequence
from fractions import Fraction
from typing import Any

ZERO = Fraction(0)
ONE = Fraction(1)


def _is_scalar(x: Any) -> bool:
    return not isinstance(x, TruncatedSeries)


class TruncatedSeries:
    """Power series c_0 + c_1 z + ... + c_order z^order, all higher terms discarded."""

    __slots__ = ('_coeffs',)

    def __init__(self, coeffs: Sequence[Any], order: int):
        if order < 0:
            raise ValueError(f'series order must be non-negative, got {order}')
        padded = list(coeffs[: order + 1])
        padded.extend([ZERO] * (order + 1 - len(padded)))
        self._coeffs = padded

    @classmethod
    def zero(cls, order: int) -> 'TruncatedSeries':
        return cls([], order)

    @classmethod
    def one(cls, order: int) -> 'TruncatedSeries':
        return cls([ONE], order)

    @classmethod
    def z_power(cls, k: int, order: int) -> 'TruncatedSeries':
        return cls([ZERO] * k + [ONE], order)

    @classmethod
    def inverse_power(cls, s: int, order: int) -> 'TruncatedSeries':
        """Return (1 - z)^(-s) for an integer s of either sign."""
        coeffs: list[Any] = [ONE]
        for j in range(1, order + 1):
            coeffs.append(coeffs[-1] * Fraction(s + j - 1, j))
        return cls(coeffs, order)

    @classmethod
    def geometric_tail(cls, order: int) -> 'TruncatedSeries':
        """Return z / (1 - z)."""
        return cls([ZERO] + [ONE] * order, order)

    @property
    def order(self) -> int:
        return len(self._coeffs) - 1

    @property
    def coeffs(self) -> list[Any]:
        return list(self._coeffs)

    def __getitem__(self, k: int) -> Any:
        return self._coeffs[k]

    def __len__(self) -> int:
        return len(self._coeffs)

    def __iter__(self) -> Iterator[Any]:
        return iter(self._coeffs)

    def truncate(self, order: int) -> 'TruncatedSeries':
        return TruncatedSeries(self._coeffs, min(order, self.order))

    # Arithmetic

    def _common_order(self, other: 'TruncatedSeries') -> int:
        return min(self.order, other.order)

    def __add__(self, other: Any) -> 'TruncatedSeries':
        if _is_scalar(other):
            return TruncatedSeries([self._coeffs[0] + other, *self._coeffs[1:]], self.order)
        n = self._common_order(other)
        return TruncatedSeries([self._coeffs[k] + other._coeffs[k] for k in range(n + 1)], n)

    __radd__ = __add__

    def __neg__(self) -> 'TruncatedSeries':
        return TruncatedSeries([-c for c in self._coeffs], self.order)

    def __sub__(self, other: Any) -> 'TruncatedSeries':
        return self + (-other)

    def __rsub__(self, other: Any) -> 'TruncatedSeries':
        return (-self) + other

    def __mul__(self, other: Any) -> 'TruncatedSeries':
        if _is_scalar(other):
            return TruncatedSeries([c * other for c in self._coeffs], self.order)
        n = self._common_order(other)
        # a zero of the coefficient ring, so BigFloat series never mix in Fractions
        out: list[Any] = [self._coeffs[0] * 0] * (n + 1)
        for i in range(n + 1):
            a = self._coeffs[i]
            if not a:
                continue
            for j in range(n + 1 - i):
                b = other._coeffs[j]
                if b:
                    out[i + j] = out[i + j] + a * b
        return TruncatedSeries(out, n)

    __rmul__ = __mul__

    def shift(self, k: int) -> 'TruncatedSeries':
        """Multiply by z^k, keeping the order."""
        return TruncatedSeries([ZERO] * k + self._coeffs, self.order)

    def derivative(self) -> 'TruncatedSeries':
        """Term-wise derivative; the order drops by one."""
        if self.order == 0:
            return TruncatedSeries.zero(0)
        return TruncatedSeries([self._coeffs[k] * k for k in range(1, self.order + 1)], self.order - 1)

    def exp(self) -> 'TruncatedSeries':
        """Exponential of a series with vanishing constant term.

        Uses n h_n = sum_k k g_k h_{n-k} for h = exp(g).
        """
        if self._coeffs[0]:
            raise ValueError('exp() needs a series with zero constant term')
        h: list[Any] = [ONE]
        for n in range(1, self.order + 1):
            acc: Any = ZERO
            for k in range(1, n + 1):
                g = self._coeffs[k]
                if g:
                    acc = acc + g * k * h[n - k]
            h.append(acc / n)
        return TruncatedSeries(h, self.order)

    def first_mismatch(self, other: 'TruncatedSeries') -> int | None:
        """Return the lowest power of z where the two series differ, or None."""
        for k in range(self._common_order(other) + 1):
            if self._coeffs[k] != other._coeffs[k]:
                return k
        return None

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return self.order == other.order and self.first_mismatch(other) is None

    def __repr__(self) -> str:
        return f'TruncatedSeries(order={self.order}, coeffs={self._coeffs!r})'
