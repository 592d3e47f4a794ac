"""Dense float64 tensors with tape-based reverse-mode differentiation.

Deliberately minimal: only the scalar / vector / matrix ranks and the
primitive operations the conversation model needs.  No broadcasting
beyond what each primitive defines, no higher-order derivatives.

A ``Tape`` records every primitive executed with at least one tracked
operand.  Because the model runs eagerly, execution order is already a
topological order of the graph, so walking the record backwards once
propagates gradients correctly.  A tape and its tensors are a
single-threaded unit; distinct tapes are independent.
"""

from __future__ import annotations

from typing import Callable, Iterable, Sequence

import numpy as np


class ShapeError(ValueError):
    """An operand shape violates an operation's contract."""


class Tape:
    """Ordered record of executed primitive operations."""

    __slots__ = ("_entries", "_consumed")

    def __init__(self) -> None:
        self._entries: list[Callable[[], None]] = []
        self._consumed = False

    def __len__(self) -> int:
        return len(self._entries)

    def record(self, backward: Callable[[], None]) -> None:
        self._entries.append(backward)

    def leaf(self, values, name: str = "") -> "Tensor":
        """Create a tracked leaf tensor on this tape."""
        return Tensor(values, tape=self, name=name)

    def backward(self, output: "Tensor") -> None:
        """Populate ``grad`` of every tracked tensor with d(output)/d(tensor).

        ``output`` must be a scalar produced under this tape.  A tape can be
        replayed once; build a fresh tape per forward/backward pass.
        """
        if output.tape is not self:
            raise ValueError("output was not produced under this tape")
        if output.values.shape != ():
            raise ShapeError(
                f"backward requires a scalar output, got shape {output.values.shape}"
            )
        if self._consumed:
            raise RuntimeError("tape has already been replayed")
        self._consumed = True
        output.grad[...] = 1.0
        for entry in reversed(self._entries):
            entry()


class Tensor:
    """A rank-0/1/2 array of float64 values, optionally tracked on a tape."""

    __slots__ = ("values", "grad", "tape", "name")

    def __init__(self, values, tape: Tape | None = None, name: str = "") -> None:
        v = np.asarray(values, dtype=np.float64)
        if v.ndim > 2:
            raise ShapeError(f"only scalars, vectors and matrices are supported, got shape {v.shape}")
        self.values = v
        self.tape = tape
        self.grad = np.zeros_like(v) if tape is not None else None
        self.name = name

    # -- tracking ----------------------------------------------------------

    def attach(self, tape: Tape) -> "Tensor":
        """Track this tensor on ``tape`` with a fresh zero gradient slot."""
        self.tape = tape
        self.grad = np.zeros_like(self.values)
        return self

    def detach(self) -> "Tensor":
        self.tape = None
        self.grad = None
        return self

    @property
    def tracked(self) -> bool:
        return self.tape is not None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def ndim(self) -> int:
        return self.values.ndim

    def __len__(self) -> int:
        return len(self.values)

    def __repr__(self) -> str:
        label = f" name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.values.shape}{label}, tracked={self.tracked})"

    def backward(self) -> None:
        if self.tape is None:
            raise ValueError("cannot backpropagate from an untracked tensor")
        self.tape.backward(self)

    # -- operators ---------------------------------------------------------

    def __add__(self, other: "Tensor") -> "Tensor":
        return add(self, other)

    def __sub__(self, other: "Tensor") -> "Tensor":
        return sub(self, other)

    def __rsub__(self, const: float) -> "Tensor":
        return const_minus(float(const), self)

    def __mul__(self, other: "Tensor") -> "Tensor":
        return mul(self, other)

    def scale(self, c: float) -> "Tensor":
        return scale(self, c)

    def sum(self) -> "Tensor":
        return total(self)

    def pick(self, index: int) -> "Tensor":
        return pick(self, index)

    def log(self, floor: float = 0.0) -> "Tensor":
        return log(self, floor)

    def abs(self) -> "Tensor":
        return absolute(self)

    def sigmoid(self) -> "Tensor":
        return sigmoid(self)

    def tanh(self) -> "Tensor":
        return tanh(self)

    def relu(self) -> "Tensor":
        return relu(self)


def _tape_of(*tensors: Tensor) -> Tape | None:
    """The unique tape among tracked operands, or None if all are constants."""
    tape = None
    for t in tensors:
        if t.tape is None:
            continue
        if tape is None:
            tape = t.tape
        elif tape is not t.tape:
            raise ValueError("operands belong to different tapes")
    return tape


def _out(values: np.ndarray, tape: Tape | None) -> Tensor:
    return Tensor(values, tape=tape)


# -- elementwise primitives -------------------------------------------------


def add(a: Tensor, b: Tensor) -> Tensor:
    if a.values.shape != b.values.shape:
        raise ShapeError(f"add: shapes {a.values.shape} and {b.values.shape} differ")
    tape = _tape_of(a, b)
    out = _out(a.values + b.values, tape)
    if tape is not None:
        def backward() -> None:
            if a.grad is not None:
                a.grad += out.grad
            if b.grad is not None:
                b.grad += out.grad
        tape.record(backward)
    return out


def sub(a: Tensor, b: Tensor) -> Tensor:
    if a.values.shape != b.values.shape:
        raise ShapeError(f"sub: shapes {a.values.shape} and {b.values.shape} differ")
    tape = _tape_of(a, b)
    out = _out(a.values - b.values, tape)
    if tape is not None:
        def backward() -> None:
            if a.grad is not None:
                a.grad += out.grad
            if b.grad is not None:
                b.grad -= out.grad
        tape.record(backward)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Hadamard product of same-shape tensors."""
    if a.values.shape != b.values.shape:
        raise ShapeError(f"mul: shapes {a.values.shape} and {b.values.shape} differ")
    tape = _tape_of(a, b)
    out = _out(a.values * b.values, tape)
    if tape is not None:
        def backward() -> None:
            if a.grad is not None:
                a.grad += b.values * out.grad
            if b.grad is not None:
                b.grad += a.values * out.grad
        tape.record(backward)
    return out


def scale(a: Tensor, c: float) -> Tensor:
    """Multiply by a python constant (not differentiated w.r.t. ``c``)."""
    tape = _tape_of(a)
    out = _out(a.values * c, tape)
    if tape is not None:
        def backward() -> None:
            if a.grad is not None:
                a.grad += c * out.grad
        tape.record(backward)
    return out


def const_minus(c: float, a: Tensor) -> Tensor:
    """``c - a`` for a python constant ``c`` (used for GRU's 1 - z gate)."""
    tape = _tape_of(a)
    out = _out(c - a.values, tape)
    if tape is not None:
        def backward() -> None:
            if a.grad is not None:
                a.grad -= out.grad
        tape.record(backward)
    return out


# -- linear algebra ----------------------------------------------------------


def matvec(w: Tensor, x: Tensor) -> Tensor:
    """Matrix-vector product ``w @ x``."""
    if w.values.ndim != 2 or x.values.ndim != 1 or w.values.shape[1] != x.values.shape[0]:
        raise ShapeError(
            f"matvec: incompatible shapes, matrix {w.values.shape} vs vector {x.values.shape}"
        )
    tape = _tape_of(w, x)
    out = _out(w.values @ x.values, tape)
    if tape is not None:
        wv, xv = w.values, x.values
        def backward() -> None:
            if w.grad is not None:
                w.grad += np.outer(out.grad, xv)
            if x.grad is not None:
                x.grad += wv.T @ out.grad
        tape.record(backward)
    return out


def transpose(a: Tensor) -> Tensor:
    if a.values.ndim != 2:
        raise ShapeError(f"transpose: expected a matrix, got shape {a.values.shape}")
    tape = _tape_of(a)
    out = _out(a.values.T.copy(), tape)
    if tape is not None:
        def backward() -> None:
            if a.grad is not None:
                a.grad += out.grad.T
        tape.record(backward)
    return out


def dot(a: Tensor, b: Tensor) -> Tensor:
    if a.values.ndim != 1 or b.values.ndim != 1 or a.values.shape != b.values.shape:
        raise ShapeError(f"dot: incompatible shapes {a.values.shape} and {b.values.shape}")
    tape = _tape_of(a, b)
    out = _out(np.asarray(a.values @ b.values), tape)
    if tape is not None:
        def backward() -> None:
            g = out.grad
            if a.grad is not None:
                a.grad += b.values * g
            if b.grad is not None:
                b.grad += a.values * g
        tape.record(backward)
    return out


# -- structural ops ----------------------------------------------------------


def concat(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate two vectors; gradient routes back to each slice."""
    if a.values.ndim != 1 or b.values.ndim != 1:
        raise ShapeError(
            f"concat: both operands must be vectors, got shapes {a.values.shape} and {b.values.shape}"
        )
    tape = _tape_of(a, b)
    p = a.values.shape[0]
    out = _out(np.concatenate([a.values, b.values]), tape)
    if tape is not None:
        def backward() -> None:
            if a.grad is not None:
                a.grad += out.grad[:p]
            if b.grad is not None:
                b.grad += out.grad[p:]
        tape.record(backward)
    return out


def stack_rows(rows: Sequence[Tensor]) -> Tensor:
    """Stack equal-length vectors into a matrix, one per row."""
    if not rows:
        raise ShapeError("stack_rows: need at least one row")
    n = rows[0].values.shape[0] if rows[0].values.ndim == 1 else None
    for r in rows:
        if r.values.ndim != 1 or r.values.shape[0] != n:
            raise ShapeError("stack_rows: all rows must be vectors of equal length")
    tape = _tape_of(*rows)
    out = _out(np.stack([r.values for r in rows]), tape)
    if tape is not None:
        def backward() -> None:
            for i, r in enumerate(rows):
                if r.grad is not None:
                    r.grad += out.grad[i]
        tape.record(backward)
    return out


def stack_scalars(items: Sequence[Tensor]) -> Tensor:
    """Stack scalars into a vector."""
    if not items:
        raise ShapeError("stack_scalars: need at least one item")
    for t in items:
        if t.values.ndim != 0:
            raise ShapeError(f"stack_scalars: expected scalars, got shape {t.values.shape}")
    tape = _tape_of(*items)
    out = _out(np.array([t.values for t in items]), tape)
    if tape is not None:
        def backward() -> None:
            for i, t in enumerate(items):
                if t.grad is not None:
                    t.grad += out.grad[i]
        tape.record(backward)
    return out


def pick(a: Tensor, index: int) -> Tensor:
    """Select one entry of a vector as a scalar."""
    if a.values.ndim != 1:
        raise ShapeError(f"pick: expected a vector, got shape {a.values.shape}")
    if not 0 <= index < a.values.shape[0]:
        raise IndexError(f"pick: index {index} out of range for length {a.values.shape[0]}")
    tape = _tape_of(a)
    out = _out(np.asarray(a.values[index]), tape)
    if tape is not None:
        def backward() -> None:
            if a.grad is not None:
                a.grad[index] += out.grad
        tape.record(backward)
    return out


def total(a: Tensor) -> Tensor:
    """Sum of all entries, as a scalar."""
    tape = _tape_of(a)
    out = _out(np.asarray(a.values.sum()), tape)
    if tape is not None:
        def backward() -> None:
            if a.grad is not None:
                a.grad += out.grad
        tape.record(backward)
    return out


# -- nonlinearities ----------------------------------------------------------


def sigmoid(a: Tensor) -> Tensor:
    tape = _tape_of(a)
    v = a.values
    with np.errstate(over="ignore"):
        s = np.where(v >= 0, 1.0 / (1.0 + np.exp(-v)), np.exp(v) / (1.0 + np.exp(v)))
    out = _out(s, tape)
    if tape is not None:
        def backward() -> None:
            if a.grad is not None:
                a.grad += s * (1.0 - s) * out.grad
        tape.record(backward)
    return out


def tanh(a: Tensor) -> Tensor:
    tape = _tape_of(a)
    t = np.tanh(a.values)
    out = _out(t, tape)
    if tape is not None:
        def backward() -> None:
            if a.grad is not None:
                a.grad += (1.0 - t * t) * out.grad
        tape.record(backward)
    return out


def relu(a: Tensor) -> Tensor:
    tape = _tape_of(a)
    out = _out(np.maximum(a.values, 0.0), tape)
    if tape is not None:
        mask = a.values > 0
        def backward() -> None:
            if a.grad is not None:
                a.grad += mask * out.grad
        tape.record(backward)
    return out


_ACTIVATIONS = {"sigmoid": sigmoid, "tanh": tanh, "relu": relu}


def activation(kind: str, a: Tensor) -> Tensor:
    """Apply a named elementwise activation: sigmoid, tanh or relu."""
    try:
        fn = _ACTIVATIONS[kind]
    except KeyError:
        raise ValueError(f"unknown activation {kind!r}, expected one of {sorted(_ACTIVATIONS)}")
    return fn(a)


def softmax(a: Tensor) -> Tensor:
    """Softmax of a vector, computed with max-subtraction for overflow safety."""
    if a.values.ndim != 1:
        raise ShapeError(f"softmax: expected a vector, got shape {a.values.shape}")
    if a.values.shape[0] == 0:
        raise ShapeError("softmax: empty input")
    tape = _tape_of(a)
    shifted = a.values - a.values.max()
    e = np.exp(shifted)
    p = e / e.sum()
    out = _out(p, tape)
    if tape is not None:
        def backward() -> None:
            if a.grad is not None:
                g = out.grad
                a.grad += p * (g - np.dot(g, p))
        tape.record(backward)
    return out


def log(a: Tensor, floor: float = 0.0) -> Tensor:
    """Elementwise natural log.

    With ``floor > 0`` the input is clamped from below first; the clamp is
    treated as constant there (zero derivative), which is the honest
    subgradient of log(max(x, floor)).
    """
    tape = _tape_of(a)
    v = np.maximum(a.values, floor) if floor > 0.0 else a.values
    out = _out(np.log(v), tape)
    if tape is not None:
        def backward() -> None:
            if a.grad is not None:
                if floor > 0.0:
                    a.grad += np.where(a.values > floor, out.grad / a.values, 0.0)
                else:
                    a.grad += out.grad / a.values
        tape.record(backward)
    return out


def absolute(a: Tensor) -> Tensor:
    """Elementwise |x| with subgradient 0 at exactly 0."""
    tape = _tape_of(a)
    out = _out(np.abs(a.values), tape)
    if tape is not None:
        sign = np.sign(a.values)
        def backward() -> None:
            if a.grad is not None:
                a.grad += sign * out.grad
        tape.record(backward)
    return out


def zeros(n: int) -> Tensor:
    """Untracked all-zero vector constant."""
    return Tensor(np.zeros(n))
