"""One-hidden-layer tanh perceptron with a per-parameter activity mask.

The model is  y = W2 . tanh(W1 . x + B1) + B2  with a single linear
output. All parameters live in one flat vector packed as

    [W1 row-major (h x p), B1 (h), W2 (h), B2 (1)]   ->   m = h*p + 2h + 1

and a boolean mask of the same length marks the active entries. Masked
entries are stored as exactly 0.0, so evaluation never has to consult
the mask; the Jacobian simply drops their columns. Networks are
immutable values and safe to share between threads.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataFormatError, ValidationError
from .fileio import atomic_write_text
from .series import LagDataset, _frozen

__all__ = [
    "Topology",
    "MaskedMlp",
    "full_mask",
    "param_labels",
    "init_params",
    "forward",
    "predict",
    "residuals",
    "jacobian",
    "serialize_network",
    "save_network",
    "load_network",
]

_FORMAT_HEADER = "MLPNET 1"


@dataclass(frozen=True)
class Topology:
    """Shape of the network: p inputs, h hidden units, one linear output."""

    n_inputs: int
    n_hidden: int

    def __post_init__(self) -> None:
        if self.n_inputs < 1:
            raise ValidationError("n_inputs must be >= 1")
        if self.n_hidden < 1:
            raise ValidationError("n_hidden must be >= 1")

    @property
    def m(self) -> int:
        """Total parameter count: W1 + B1 + W2 + B2."""
        p, h = self.n_inputs, self.n_hidden
        return h * p + h + h + 1

    # Packing-order slices into the flat parameter vector.
    @property
    def w1_slice(self) -> slice:
        return slice(0, self.n_hidden * self.n_inputs)

    @property
    def b1_slice(self) -> slice:
        start = self.n_hidden * self.n_inputs
        return slice(start, start + self.n_hidden)

    @property
    def w2_slice(self) -> slice:
        start = self.n_hidden * self.n_inputs + self.n_hidden
        return slice(start, start + self.n_hidden)

    @property
    def b2_index(self) -> int:
        return self.m - 1

    @property
    def output_slice(self) -> slice:
        """W2 and B2 together: the region that must keep an active entry."""
        start = self.n_hidden * self.n_inputs + self.n_hidden
        return slice(start, self.m)


def param_labels(topology: Topology) -> list[str]:
    """Human-readable tag per flat index, e.g. W1[0,3], B1[1], W2[0], B2."""
    labels = []
    for q in range(topology.n_hidden):
        for j in range(topology.n_inputs):
            labels.append(f"W1[{q},{j}]")
    labels += [f"B1[{q}]" for q in range(topology.n_hidden)]
    labels += [f"W2[{q}]" for q in range(topology.n_hidden)]
    labels.append("B2")
    return labels


def full_mask(topology: Topology) -> np.ndarray:
    return np.ones(topology.m, dtype=bool)


@dataclass(frozen=True)
class MaskedMlp:
    """Topology + flat parameter vector + boolean connection mask."""

    topology: Topology
    params: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        m = self.topology.m
        params = np.asarray(self.params, dtype=float)
        mask = np.asarray(self.mask, dtype=bool)
        if params.shape != (m,):
            raise ValidationError(f"params must have length {m}, got {params.shape}")
        if mask.shape != (m,):
            raise ValidationError(f"mask must have length {m}, got {mask.shape}")
        if not np.all(np.isfinite(params)):
            raise ValidationError("params must all be finite")
        if np.any(params[~mask] != 0.0):
            raise ValidationError("masked-out parameters must be stored as 0")
        if not np.any(mask[self.topology.output_slice]):
            raise ValidationError(
                "at least one output-layer parameter (W2 or B2) must stay active"
            )
        object.__setattr__(self, "params", _frozen(params.copy()))
        object.__setattr__(self, "mask", _frozen(mask.copy()))

    @property
    def n_active(self) -> int:
        return int(self.mask.sum())

    @property
    def w1(self) -> np.ndarray:
        t = self.topology
        return self.params[t.w1_slice].reshape(t.n_hidden, t.n_inputs)

    @property
    def b1(self) -> np.ndarray:
        return self.params[self.topology.b1_slice]

    @property
    def w2(self) -> np.ndarray:
        return self.params[self.topology.w2_slice]

    @property
    def b2(self) -> float:
        return float(self.params[self.topology.b2_index])

    def with_params(self, params: np.ndarray) -> "MaskedMlp":
        """Same topology and mask, new parameter vector."""
        return dataclasses.replace(self, params=params)


def init_params(topology: Topology, seed: int) -> np.ndarray:
    """Deterministic initial parameters, iid uniform on [-0.5, 0.5].

    Small enough to start every tanh unit in its quasi-linear region;
    the same (topology, seed) pair always yields the same vector.
    """
    if seed < 0:
        raise ValidationError("seed must be a non-negative integer")
    rng = np.random.default_rng(seed)
    return rng.uniform(-0.5, 0.5, topology.m)


def predict(net: MaskedMlp, inputs: np.ndarray) -> np.ndarray:
    """Network outputs for a batch of input rows (n, p) -> (n,)."""
    inputs = np.asarray(inputs, dtype=float)
    if inputs.ndim != 2 or inputs.shape[1] != net.topology.n_inputs:
        raise ValidationError(
            f"inputs must be (n, {net.topology.n_inputs}), got {inputs.shape}"
        )
    hidden = np.tanh(inputs @ net.w1.T + net.b1)
    return hidden @ net.w2 + net.b2


def forward(net: MaskedMlp, x: np.ndarray) -> float:
    """Scalar output for a single length-p input vector."""
    x = np.asarray(x, dtype=float)
    if x.shape != (net.topology.n_inputs,):
        raise ValidationError(
            f"input must have length {net.topology.n_inputs}, got {x.shape}"
        )
    if not np.all(np.isfinite(x)):
        raise ValidationError("input must be finite")
    return float(predict(net, x[None, :])[0])


def residuals(net: MaskedMlp, ds: LagDataset) -> np.ndarray:
    """Signed errors r_i = prediction_i - target_i over a dataset."""
    if ds.p != net.topology.n_inputs:
        raise ValidationError(
            f"dataset width {ds.p} does not match network inputs "
            f"{net.topology.n_inputs}"
        )
    return predict(net, ds.inputs) - ds.targets


def jacobian(net: MaskedMlp, ds: LagDataset) -> np.ndarray:
    """Analytic Jacobian of the residual vector w.r.t. the active parameters.

    Returns an (n, k) matrix, k = number of active parameters, columns in
    packing order restricted to active entries. With a_q the activation
    of hidden unit q:

        dr/dW2_q    = a_q
        dr/dB2      = 1
        dr/dW1_qj   = W2_q * (1 - a_q^2) * x_j
        dr/dB1_q    = W2_q * (1 - a_q^2)
    """
    if ds.p != net.topology.n_inputs:
        raise ValidationError(
            f"dataset width {ds.p} does not match network inputs "
            f"{net.topology.n_inputs}"
        )
    x = ds.inputs
    n = ds.n
    act = np.tanh(x @ net.w1.T + net.b1)          # (n, h)
    gate = (1.0 - act**2) * net.w2                # (n, h): dr/d(preactivation_q)
    j_w1 = (gate[:, :, None] * x[:, None, :]).reshape(n, -1)
    j_b2 = np.ones((n, 1))
    full = np.hstack([j_w1, gate, act, j_b2])
    return full[:, net.mask]


def serialize_network(net: MaskedMlp) -> str:
    """Versioned plain-text form; round-trips float64 exactly (17 sig digits)."""
    t = net.topology
    lines = [_FORMAT_HEADER, f"topology {t.n_inputs} {t.n_hidden}"]
    lines.extend(format(x, ".17g") for x in net.params)
    lines.append("mask " + "".join("1" if b else "0" for b in net.mask))
    return "\n".join(lines) + "\n"


def save_network(net: MaskedMlp, path: str | Path) -> Path:
    return atomic_write_text(path, serialize_network(net))


def load_network(path: str | Path) -> MaskedMlp:
    """Parse a network file; errors name the byte offset of the problem."""
    path = Path(path)
    raw = path.read_bytes()

    # (byte offset, text) per line; a trailing newline adds no empty line.
    entries: list[tuple[int, str]] = []
    offset = 0
    for chunk in raw.split(b"\n"):
        try:
            entries.append((offset, chunk.decode("utf-8").strip()))
        except UnicodeDecodeError as exc:
            raise DataFormatError(
                f"{path}: undecodable bytes at byte {offset} ({exc})"
            ) from exc
        offset += len(chunk) + 1
    if entries and entries[-1][1] == "":
        entries.pop()

    def line(index: int, expected: str) -> tuple[int, str]:
        if index >= len(entries):
            raise DataFormatError(
                f"{path}: truncated network file, expected {expected} "
                f"at byte {len(raw)}"
            )
        return entries[index]

    off, header = line(0, "format header")
    if header != _FORMAT_HEADER:
        raise DataFormatError(
            f"{path}: unrecognized format header {header!r} at byte {off}"
        )

    off, topo_line = line(1, "topology line")
    parts = topo_line.split()
    if len(parts) != 3 or parts[0] != "topology":
        raise DataFormatError(f"{path}: malformed topology line at byte {off}")
    try:
        topology = Topology(int(parts[1]), int(parts[2]))
    except (ValueError, ValidationError) as exc:
        raise DataFormatError(
            f"{path}: bad topology {topo_line!r} at byte {off}: {exc}"
        ) from exc

    m = topology.m
    params = np.empty(m)
    for k in range(m):
        off, token = line(2 + k, f"parameter {k} of {m}")
        try:
            params[k] = float(token)
        except ValueError as exc:
            raise DataFormatError(
                f"{path}: parameter {k} is not a number at byte {off}"
            ) from exc
        if not np.isfinite(params[k]):
            raise DataFormatError(
                f"{path}: parameter {k} is non-finite at byte {off}"
            )

    off, mask_line = line(2 + m, "mask line")
    if not mask_line.startswith("mask "):
        raise DataFormatError(f"{path}: malformed mask line at byte {off}")
    bits = mask_line[len("mask "):]
    if len(bits) != m or set(bits) - {"0", "1"}:
        raise DataFormatError(
            f"{path}: mask must be {m} characters of 0/1 at byte {off}"
        )
    mask = np.array([c == "1" for c in bits])
    try:
        return MaskedMlp(topology, params, mask)
    except ValidationError as exc:
        raise DataFormatError(f"{path}: inconsistent network file: {exc}") from exc
