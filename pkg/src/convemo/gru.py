"""Gated recurrent unit shared by all four recurrences of the model.

Convention: reset gate applied inside the candidate's recurrent term,
update gate blending ``h = (1 - z) * h_prev + z * c``.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterator

import numpy as np

from .tensor import ShapeError, Tensor, matvec


@dataclass
class GruParams:
    """The nine trainable tables of one GRU cell.

    ``w_x_*`` map the input (hidden x input), ``w_h_*`` map the previous
    state (hidden x hidden), ``b_*`` are biases (hidden).
    """

    w_x_r: Tensor
    w_x_z: Tensor
    w_x_c: Tensor
    w_h_r: Tensor
    w_h_z: Tensor
    w_h_c: Tensor
    b_r: Tensor
    b_z: Tensor
    b_c: Tensor

    @property
    def hidden_size(self) -> int:
        return self.w_x_r.values.shape[0]

    @property
    def input_size(self) -> int:
        return self.w_x_r.values.shape[1]

    def validate(self) -> None:
        h, n = self.hidden_size, self.input_size
        for name in ("w_x_r", "w_x_z", "w_x_c"):
            if getattr(self, name).values.shape != (h, n):
                raise ShapeError(f"{name}: expected shape {(h, n)}, got {getattr(self, name).values.shape}")
        for name in ("w_h_r", "w_h_z", "w_h_c"):
            if getattr(self, name).values.shape != (h, h):
                raise ShapeError(f"{name}: expected shape {(h, h)}, got {getattr(self, name).values.shape}")
        for name in ("b_r", "b_z", "b_c"):
            if getattr(self, name).values.shape != (h,):
                raise ShapeError(f"{name}: expected shape {(h,)}, got {getattr(self, name).values.shape}")

    def named_tensors(self, prefix: str = "") -> Iterator[tuple[str, Tensor]]:
        for f in fields(self):
            yield f"{prefix}{f.name}", getattr(self, f.name)

    def copy(self) -> "GruParams":
        return GruParams(**{f.name: Tensor(getattr(self, f.name).values.copy())
                            for f in fields(self)})

    @classmethod
    def init(cls, hidden_size: int, input_size: int, rng: np.random.Generator) -> "GruParams":
        """Weights uniform in +-1/sqrt(hidden), biases zero."""
        bound = 1.0 / np.sqrt(hidden_size)

        def w(rows: int, cols: int) -> Tensor:
            return Tensor(rng.uniform(-bound, bound, (rows, cols)))

        return cls(
            w_x_r=w(hidden_size, input_size),
            w_x_z=w(hidden_size, input_size),
            w_x_c=w(hidden_size, input_size),
            w_h_r=w(hidden_size, hidden_size),
            w_h_z=w(hidden_size, hidden_size),
            w_h_c=w(hidden_size, hidden_size),
            b_r=Tensor(np.zeros(hidden_size)),
            b_z=Tensor(np.zeros(hidden_size)),
            b_c=Tensor(np.zeros(hidden_size)),
        )

    @classmethod
    def zeros(cls, hidden_size: int, input_size: int) -> "GruParams":
        z = np.zeros
        return cls(
            w_x_r=Tensor(z((hidden_size, input_size))),
            w_x_z=Tensor(z((hidden_size, input_size))),
            w_x_c=Tensor(z((hidden_size, input_size))),
            w_h_r=Tensor(z((hidden_size, hidden_size))),
            w_h_z=Tensor(z((hidden_size, hidden_size))),
            w_h_c=Tensor(z((hidden_size, hidden_size))),
            b_r=Tensor(z(hidden_size)),
            b_z=Tensor(z(hidden_size)),
            b_c=Tensor(z(hidden_size)),
        )


def gru_step(p: GruParams, h_prev: Tensor, x: Tensor) -> Tensor:
    """One GRU update: reset and update gates, candidate, blended state."""
    h, n = p.hidden_size, p.input_size
    if h_prev.values.shape != (h,):
        raise ShapeError(f"gru_step: state has shape {h_prev.values.shape}, cell expects {(h,)}")
    if x.values.shape != (n,):
        raise ShapeError(f"gru_step: input has shape {x.values.shape}, cell expects {(n,)}")
    r = (matvec(p.w_x_r, x) + matvec(p.w_h_r, h_prev) + p.b_r).sigmoid()
    z = (matvec(p.w_x_z, x) + matvec(p.w_h_z, h_prev) + p.b_z).sigmoid()
    c = (matvec(p.w_x_c, x) + matvec(p.w_h_c, r * h_prev) + p.b_c).tanh()
    return (1.0 - z) * h_prev + z * c
