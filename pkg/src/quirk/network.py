"""QuIRK model assembly: stacked layers of summed DR edges.

A network is a chain of layers.  Each layer owns one DR circuit per
(input, unit) edge; a unit's output is the plain sum of its incoming edge
readouts, so it lives in [-fan_in, +fan_in].  Between layers the unit
outputs are rescaled back into the encoding domain [0, pi].  The final
layer always has a single unit; an optional dense head y = w*v + b (two
scalars) maps its raw sum to an unbounded target.

Raw features enter through a stored per-feature affine normalizer fitted
on training data (min, max) -> [0, pi]; inference clamps.

Parameters are stored stacked per layer -- thetas[k] has shape
(L, fan_in, units, P) for single-qubit edges, (L, fan_in, units, n, P)
for n-qubit edges -- so a whole layer evaluates in one vectorized kernel
call.  ``edge_active`` boolean masks support pruning: an inactive edge
contributes nothing, is not trained, and is not counted.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .dr import (
    DEFAULT_TEMPLATE,
    DRParams,
    GateTemplate,
    _forward_1q,
    _forward_multi,
    _grad_1q,
    _grad_multi,
)
from .qsim import DEFAULT_MAX_QUBITS


class ModelFormatError(ValueError):
    """Model file is malformed; message carries line/field context."""


class ModelVersionError(ModelFormatError):
    """Model file has a version tag this library does not read."""


MODEL_FORMAT_VERSION = "v1"


@dataclass(frozen=True)
class LayerSpec:
    fan_in: int
    units: int
    dr_layers: int
    qubits_per_edge: int = 1
    entangle: bool = False

    def __post_init__(self):
        for name in ("fan_in", "units", "dr_layers", "qubits_per_edge"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")

    @property
    def edges(self) -> int:
        return self.fan_in * self.units


@dataclass(frozen=True)
class NetworkSpec:
    """Architecture: input width, layer chain, head, rescale bias flag, seed.

    Every layer except the last is implicitly followed by a rescale back to
    [0, pi]; the last layer has one unit and feeds the (optional) dense head.
    """

    input_dim: int
    layers: tuple
    dense_head: bool = False
    bias_flag: int = 0
    seed: int = 0
    template: GateTemplate = field(default_factory=GateTemplate)

    def __post_init__(self):
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if not self.layers:
            raise ValueError("need at least one layer")
        object.__setattr__(self, "layers", tuple(self.layers))
        fan = self.input_dim
        for k, layer in enumerate(self.layers):
            if layer.fan_in != fan:
                raise ValueError(
                    f"layer {k} fan_in={layer.fan_in} does not match "
                    f"previous width {fan}"
                )
            fan = layer.units
        if self.layers[-1].units != 1:
            raise ValueError("final layer must have exactly one unit")
        if self.bias_flag not in (0, 1):
            raise ValueError(f"bias_flag must be 0 or 1, got {self.bias_flag}")

    @property
    def shape(self) -> list:
        return [self.input_dim] + [layer.units for layer in self.layers]


def spec_from_shape(shape, dr_layers, dense_head=False, bias_flag=0, seed=0,
                    qubits_per_edge=1, entangle=False,
                    template: GateTemplate = DEFAULT_TEMPLATE) -> NetworkSpec:
    """Build a NetworkSpec from bracket notation, e.g. [2, 2, 1].

    ``dr_layers`` is an int shared by all layers or one int per layer.
    """
    shape = list(shape)
    if len(shape) < 2:
        raise ValueError("shape needs an input width and at least one layer")
    n_layers = len(shape) - 1
    if isinstance(dr_layers, int):
        dr_layers = [dr_layers] * n_layers
    if len(dr_layers) != n_layers:
        raise ValueError(f"got {len(dr_layers)} dr_layers entries for {n_layers} layers")
    layers = tuple(
        LayerSpec(fan_in=shape[k], units=shape[k + 1], dr_layers=dr_layers[k],
                  qubits_per_edge=qubits_per_edge, entangle=entangle)
        for k in range(n_layers)
    )
    return NetworkSpec(input_dim=shape[0], layers=layers, dense_head=dense_head,
                       bias_flag=bias_flag, seed=seed, template=template)


def _theta_shape(layer: LayerSpec, P: int):
    if layer.qubits_per_edge == 1:
        return (layer.dr_layers, layer.fan_in, layer.units, P)
    return (layer.dr_layers, layer.fan_in, layer.units, layer.qubits_per_edge, P)


@dataclass
class Model:
    """Trainable state: stacked per-layer angles, edge masks, head, normalizer."""

    spec: NetworkSpec
    thetas: list
    edge_active: list
    dense_w: float = 1.0
    dense_b: float = 0.0
    input_norm: np.ndarray | None = None  # (input_dim, 2) of (min, max)

    def __post_init__(self):
        P = self.spec.template.params_per_layer
        if len(self.thetas) != len(self.spec.layers):
            raise ValueError("one theta block per layer required")
        for k, layer in enumerate(self.spec.layers):
            want = _theta_shape(layer, P)
            self.thetas[k] = np.asarray(self.thetas[k], dtype=np.float64)
            if self.thetas[k].shape != want:
                raise ValueError(
                    f"layer {k}: theta shape {self.thetas[k].shape} != {want}")
            self.edge_active[k] = np.asarray(self.edge_active[k], dtype=bool)
            if self.edge_active[k].shape != (layer.fan_in, layer.units):
                raise ValueError(
                    f"layer {k}: edge_active shape {self.edge_active[k].shape} "
                    f"!= {(layer.fan_in, layer.units)}")
        if self.input_norm is not None:
            self.input_norm = np.asarray(self.input_norm, dtype=np.float64)
            if self.input_norm.shape != (self.spec.input_dim, 2):
                raise ValueError(
                    f"input_norm shape {self.input_norm.shape} != "
                    f"{(self.spec.input_dim, 2)}")
            if not np.all(self.input_norm[:, 0] < self.input_norm[:, 1]):
                raise ValueError("input_norm requires min < max per feature")

    def edge_params(self, layer: int, i: int, u: int) -> DRParams:
        """The DR circuit on edge (input i -> unit u) of ``layer``."""
        ls = self.spec.layers[layer]
        return DRParams(self.thetas[layer][:, i, u], num_qubits=ls.qubits_per_edge,
                        entangle=ls.entangle, template=self.spec.template)

    def copy(self) -> "Model":
        return Model(
            spec=self.spec,
            thetas=[t.copy() for t in self.thetas],
            edge_active=[a.copy() for a in self.edge_active],
            dense_w=self.dense_w,
            dense_b=self.dense_b,
            input_norm=None if self.input_norm is None else self.input_norm.copy(),
        )


def init_model(spec: NetworkSpec) -> Model:
    """Fresh model: theta ~ U(-pi, pi) from spec.seed (drawn layer by layer in
    C order), all edges active, dense_w = 1, dense_b = 0, normalizer unfitted."""
    rng = np.random.default_rng(spec.seed)
    P = spec.template.params_per_layer
    thetas = [rng.uniform(-np.pi, np.pi, size=_theta_shape(layer, P))
              for layer in spec.layers]
    active = [np.ones((layer.fan_in, layer.units), dtype=bool)
              for layer in spec.layers]
    return Model(spec=spec, thetas=thetas, edge_active=active)


# --- input normalization ----------------------------------------------------


def fit_input_norm(X: np.ndarray) -> np.ndarray:
    """Per-feature (min, max) over a training matrix; degenerate (constant)
    features get a unit-wide window so min < max always holds."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    flat = hi - lo <= 0
    hi = np.where(flat, lo + 1.0, hi)
    return np.stack([lo, hi], axis=1)


def apply_input_norm(norm: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Affine map (min, max) -> [0, pi], clamped (inference may see
    out-of-range features)."""
    lo = norm[:, 0]
    hi = norm[:, 1]
    out = (X - lo) / (hi - lo) * np.pi
    return np.clip(out, 0.0, np.pi)


def input_normalizer(X_train: np.ndarray):
    """Convenience: fit on training features, return (norm, transform)."""
    norm = fit_input_norm(X_train)
    return norm, lambda X: apply_input_norm(norm, np.asarray(X, dtype=np.float64))


# --- forward ----------------------------------------------------------------


def rescale(values, fan_in, b: int = 0):
    """Map unit sums from [-|I|, |I|] back into the encoding domain:
    ((v/|I|) + (1-b)) / 2 * pi.  ``fan_in`` may be a per-unit array (pruned
    layers divide by each unit's surviving edge count).  Out-of-range values
    are clamped with a warning."""
    values = np.asarray(values, dtype=np.float64)
    cap = np.asarray(fan_in, dtype=np.float64)
    if np.any(cap < 1):
        raise ValueError("fan_in must be >= 1")
    over = np.abs(values) > cap
    if np.any(over):
        warnings.warn(
            f"{int(np.count_nonzero(over))} value(s) outside +-fan_in were clamped "
            "before rescaling", RuntimeWarning, stacklevel=2)
        values = np.clip(values, -cap, cap)
    return ((values / cap) + (1 - b)) / 2.0 * np.pi


def _unit_divisors(layer: LayerSpec, active: np.ndarray) -> np.ndarray:
    # per-unit effective fan-in; dead units (no live edges) get 1 to avoid
    # 0/0 -- their output is unused because downstream edges are also pruned
    counts = active.sum(axis=0).astype(np.float64)
    return np.maximum(counts, 1.0)


def _layer_eval(h: np.ndarray, layer: LayerSpec, thetas: np.ndarray,
                active: np.ndarray, template: GateTemplate, want_grads: bool):
    """Evaluate one layer on normalized inputs h (B, fan_in).

    Returns (unit_sums (B, units), edge_vals (B, fan_in, units), edge_dx,
    edge_dtheta); the gradient pieces are None unless requested.  Inactive
    edges contribute nothing and report zero gradients.
    """
    B = h.shape[0]
    mask = active.astype(np.float64)
    if layer.qubits_per_edge == 1:
        x = h[:, :, None]  # broadcast over units
        if want_grads:
            f, dx, dth = _grad_1q(x, thetas, template)
        else:
            f = _forward_1q(x, thetas, template)
            dx = dth = None
    else:
        f = np.empty((B, layer.fan_in, layer.units))
        dx = np.empty_like(f) if want_grads else None
        dth = (np.empty((layer.dr_layers, B) + thetas.shape[1:], dtype=np.float64)
               if want_grads else None)
        for i in range(layer.fan_in):
            for u in range(layer.units):
                if not active[i, u]:
                    f[:, i, u] = 0.0
                    if want_grads:
                        dx[:, i, u] = 0.0
                        dth[:, :, i, u] = 0.0
                    continue
                p = DRParams(thetas[:, i, u], num_qubits=layer.qubits_per_edge,
                             entangle=layer.entangle, template=template)
                if want_grads:
                    fv, dxe, dthe = _grad_multi(h[:, i], p, DEFAULT_MAX_QUBITS)
                    f[:, i, u] = fv
                    dx[:, i, u] = dxe
                    dth[:, :, i, u] = dthe
                else:
                    fv, _, _ = _forward_multi(h[:, i], p, DEFAULT_MAX_QUBITS, False)
                    f[:, i, u] = fv
    f = f * mask
    if want_grads:
        dx = dx * mask
    sums = f.sum(axis=1)
    return sums, f, dx, dth


def layer_forward(inputs, thetas, active=None, entangle: bool = False,
                  template: GateTemplate = DEFAULT_TEMPLATE):
    """Unit sums of one layer: out[u] = sum_i DR(inputs[i]; thetas[:, i, u]).

    ``inputs`` is (fan_in,) or (B, fan_in); ``thetas`` is stacked
    (L, fan_in, units, P) (single qubit) or (L, fan_in, units, n, P).
    """
    thetas = np.asarray(thetas, dtype=np.float64)
    inputs = np.asarray(inputs, dtype=np.float64)
    single = inputs.ndim == 1
    h = np.atleast_2d(inputs)
    if thetas.ndim not in (4, 5):
        raise ValueError(f"stacked thetas must have 4 or 5 dims, got {thetas.ndim}")
    fan_in, units = thetas.shape[1], thetas.shape[2]
    if h.shape[1] != fan_in:
        raise ValueError(f"input length {h.shape[1]} != fan_in {fan_in}")
    n = 1 if thetas.ndim == 4 else thetas.shape[3]
    layer = LayerSpec(fan_in=fan_in, units=units, dr_layers=thetas.shape[0],
                      qubits_per_edge=n, entangle=entangle)
    if active is None:
        active = np.ones((fan_in, units), dtype=bool)
    sums, _, _, _ = _layer_eval(h, layer, thetas, np.asarray(active, dtype=bool),
                                template, want_grads=False)
    return sums[0] if single else sums


def _forward_pass(model: Model, X: np.ndarray, want_grads: bool):
    """Shared forward: returns (yhat (B,), caches).  caches[k] holds the
    layer's (unit_sums, edge_dx, edge_dtheta) plus the rescale divisors."""
    if model.input_norm is None:
        raise RuntimeError(
            "input normalization is unfitted; train first or set model.input_norm")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.spec.input_dim:
        raise ValueError(
            f"expected {model.spec.input_dim} features, got {X.shape[1]}")
    h = apply_input_norm(model.input_norm, X)
    caches = []
    v = None
    n_layers = len(model.spec.layers)
    for k, layer in enumerate(model.spec.layers):
        v, f, dx, dth = _layer_eval(h, layer, model.thetas[k], model.edge_active[k],
                                    model.spec.template, want_grads)
        caches.append({"v": v, "f": f, "dx": dx, "dth": dth})
        if k < n_layers - 1:
            div = _unit_divisors(layer, model.edge_active[k])
            caches[-1]["div"] = div
            h = rescale(v, div, b=model.spec.bias_flag)
            # clip only binds when bias_flag = 1; clipped entries are flat,
            # so the backward pass must drop their gradient
            caches[-1]["open"] = (h > 0.0) & (h < np.pi)
            h = np.clip(h, 0.0, np.pi)
    out = v[:, 0]
    if model.spec.dense_head:
        out = model.dense_w * out + model.dense_b
    return out, caches


def network_forward(raw_input, model: Model):
    """Model output for one sample (returns float) or a batch (B, input_dim)
    (returns (B,)); inputs are raw features, normalized internally."""
    arr = np.asarray(raw_input, dtype=np.float64)
    out, _ = _forward_pass(model, arr, want_grads=False)
    return float(out[0]) if arr.ndim <= 1 else out


@dataclass
class Gradients:
    """d(half-MSE)/d(parameter), shaped exactly like the model's storage."""

    thetas: list
    dense_w: float = 0.0
    dense_b: float = 0.0


def network_backward(X, y, model: Model):
    """Exact gradients of L = mean((yhat - y)^2) / 2 over the batch.

    Returns (loss, yhat, Gradients).  Chain rule runs through the dense head,
    every DR edge, and the inter-layer rescales (derivative pi / (2 |I|) with
    |I| the per-unit divisor).
    """
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    yhat, caches = _forward_pass(model, X, want_grads=True)
    B = y.shape[0]
    if yhat.shape[0] != B:
        raise ValueError(f"got {yhat.shape[0]} inputs but {B} targets")
    res = yhat - y
    loss = 0.5 * float(np.mean(res**2))
    r = res / B  # dL/dyhat

    grads = Gradients(thetas=[np.zeros_like(t) for t in model.thetas])
    v_last = caches[-1]["v"][:, 0]
    if model.spec.dense_head:
        grads.dense_w = float(r @ v_last)
        grads.dense_b = float(r.sum())
        cot = (r * model.dense_w)[:, None]  # dL/dv of last layer
    else:
        cot = r[:, None]

    for k in range(len(model.spec.layers) - 1, -1, -1):
        layer = model.spec.layers[k]
        cache = caches[k]
        mask = model.edge_active[k].astype(np.float64)
        edge_cot = cot[:, None, :] * mask  # (B, fan_in, units)
        dth = cache["dth"]
        if layer.qubits_per_edge == 1:
            grads.thetas[k] = np.einsum("lbiup,biu->liup", dth, edge_cot)
        else:
            grads.thetas[k] = np.einsum("lbiunp,biu->liunp", dth, edge_cot)
        if k > 0:
            dh = np.einsum("biu,biu->bi", cache["dx"], edge_cot)
            div = caches[k - 1]["div"]
            cot = dh * (np.pi / (2.0 * div)) * caches[k - 1]["open"]
    return loss, yhat, grads


def param_count(model: Model) -> int:
    """Active trainable angles plus 2 for the dense head when present.

    Per active edge: dr_layers x params_per_layer x qubits_per_edge.  Pruned
    edges do not count; normalizer statistics and knots never count.
    """
    P = model.spec.template.params_per_layer
    total = 0
    for layer, active in zip(model.spec.layers, model.edge_active):
        per_edge = layer.dr_layers * P * layer.qubits_per_edge
        total += per_edge * int(active.sum())
    if model.spec.dense_head:
        total += 2
    return total


# --- serialization ----------------------------------------------------------
# Versioned line-oriented text; floats as float.hex() so round-trips are
# bitwise.  Field names below are the format documentation (see README).


def _template_str(t: GateTemplate) -> str:
    return ",".join(f"{kind}:{source}" for kind, source in t.gates)


def _template_parse(s: str, lineno: int) -> GateTemplate:
    gates = []
    for part in s.split(","):
        try:
            kind, source = part.split(":")
        except ValueError:
            raise ModelFormatError(f"line {lineno}: bad template entry {part!r}")
        gates.append((kind, "input" if source == "input" else int(source)))
    try:
        return GateTemplate(tuple(gates))
    except ValueError as e:
        raise ModelFormatError(f"line {lineno}: {e}")


def save_model(model: Model, path) -> None:
    """Write the versioned text format (see README for the field list)."""
    lines = [f"quirk-model {MODEL_FORMAT_VERSION}"]
    s = model.spec
    lines.append(f"template {_template_str(s.template)}")
    lines.append(f"input_dim {s.input_dim}")
    lines.append(f"dense_head {int(s.dense_head)}")
    lines.append(f"bias_flag {s.bias_flag}")
    lines.append(f"seed {s.seed}")
    lines.append(f"layers {len(s.layers)}")
    for k, layer in enumerate(s.layers):
        lines.append(
            f"layer {k} fan_in {layer.fan_in} units {layer.units} "
            f"dr_layers {layer.dr_layers} qubits_per_edge {layer.qubits_per_edge} "
            f"entangle {int(layer.entangle)}")
    for k, layer in enumerate(s.layers):
        for i in range(layer.fan_in):
            for u in range(layer.units):
                flat = model.thetas[k][:, i, u].reshape(-1)
                hexes = " ".join(float(v).hex() for v in flat)
                lines.append(
                    f"edge {k} {i} {u} {int(model.edge_active[k][i, u])} {hexes}")
    if model.input_norm is None:
        lines.append("norm unfitted")
    else:
        for i in range(s.input_dim):
            lo, hi = model.input_norm[i]
            lines.append(f"norm {i} {float(lo).hex()} {float(hi).hex()}")
    lines.append(f"dense {float(model.dense_w).hex()} {float(model.dense_b).hex()}")
    lines.append("end")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_float(tok: str, lineno: int) -> float:
    try:
        return float.fromhex(tok)
    except ValueError:
        raise ModelFormatError(f"line {lineno}: bad float literal {tok!r}")


def _parse_int(tok: str, lineno: int, field: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise ModelFormatError(f"line {lineno}: field {field}: not an integer: {tok!r}")


def load_model(path) -> Model:
    """Read a model file; raises ModelVersionError / ModelFormatError with
    line context on anything malformed."""
    with open(path) as fh:
        raw = fh.readlines()
    lines = [(no + 1, ln.strip()) for no, ln in enumerate(raw)
             if ln.strip() and not ln.strip().startswith("#")]
    if not lines:
        raise ModelFormatError("empty model file")
    lineno, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != "quirk-model":
        raise ModelFormatError(f"line {lineno}: expected 'quirk-model <version>' header")
    if parts[1] != MODEL_FORMAT_VERSION:
        raise ModelVersionError(
            f"line {lineno}: unsupported model format {parts[1]!r}; "
            f"this library reads: {MODEL_FORMAT_VERSION}")

    fields = {}
    layer_rows = {}
    edges = {}
    norm_rows = {}
    norm_unfitted = False
    dense = None
    saw_end = False
    for lineno, ln in lines[1:]:
        toks = ln.split()
        key = toks[0]
        if key == "end":
            saw_end = True
            continue
        if key == "template":
            fields["template"] = _template_parse(toks[1], lineno)
        elif key in ("input_dim", "dense_head", "bias_flag", "seed", "layers"):
            if len(toks) != 2:
                raise ModelFormatError(f"line {lineno}: field {key} takes one value")
            fields[key] = _parse_int(toks[1], lineno, key)
        elif key == "layer":
            if len(toks) != 12:
                raise ModelFormatError(f"line {lineno}: malformed layer row")
            idx = _parse_int(toks[1], lineno, "layer index")
            kv = dict(zip(toks[2::2], toks[3::2]))
            want = ("fan_in", "units", "dr_layers", "qubits_per_edge", "entangle")
            if set(kv) != set(want):
                raise ModelFormatError(
                    f"line {lineno}: layer row needs fields {want}")
            layer_rows[idx] = {k: _parse_int(v, lineno, k) for k, v in kv.items()}
        elif key == "edge":
            if len(toks) < 6:
                raise ModelFormatError(f"line {lineno}: malformed edge row")
            k = _parse_int(toks[1], lineno, "edge layer")
            i = _parse_int(toks[2], lineno, "edge input")
            u = _parse_int(toks[3], lineno, "edge unit")
            act = _parse_int(toks[4], lineno, "edge active")
            vals = [_parse_float(t, lineno) for t in toks[5:]]
            edges[(k, i, u)] = (act, vals, lineno)
        elif key == "norm":
            if toks[1:] == ["unfitted"]:
                norm_unfitted = True
            elif len(toks) == 4:
                i = _parse_int(toks[1], lineno, "norm index")
                norm_rows[i] = (_parse_float(toks[2], lineno),
                                _parse_float(toks[3], lineno))
            else:
                raise ModelFormatError(f"line {lineno}: malformed norm row")
        elif key == "dense":
            if len(toks) != 3:
                raise ModelFormatError(f"line {lineno}: malformed dense row")
            dense = (_parse_float(toks[1], lineno), _parse_float(toks[2], lineno))
        else:
            raise ModelFormatError(f"line {lineno}: unknown record {key!r}")

    if not saw_end:
        raise ModelFormatError("truncated model file: missing 'end' marker")
    for need in ("template", "input_dim", "dense_head", "bias_flag", "seed", "layers"):
        if need not in fields:
            raise ModelFormatError(f"missing header field {need!r}")
    n_layers = fields["layers"]
    if sorted(layer_rows) != list(range(n_layers)):
        raise ModelFormatError(
            f"expected layer rows 0..{n_layers - 1}, got {sorted(layer_rows)}")
    layers = tuple(
        LayerSpec(fan_in=layer_rows[k]["fan_in"], units=layer_rows[k]["units"],
                  dr_layers=layer_rows[k]["dr_layers"],
                  qubits_per_edge=layer_rows[k]["qubits_per_edge"],
                  entangle=bool(layer_rows[k]["entangle"]))
        for k in range(n_layers))
    try:
        spec = NetworkSpec(input_dim=fields["input_dim"], layers=layers,
                           dense_head=bool(fields["dense_head"]),
                           bias_flag=fields["bias_flag"], seed=fields["seed"],
                           template=fields["template"])
    except ValueError as e:
        raise ModelFormatError(f"inconsistent architecture: {e}")

    P = spec.template.params_per_layer
    thetas = [np.zeros(_theta_shape(layer, P)) for layer in layers]
    active = [np.ones((layer.fan_in, layer.units), dtype=bool) for layer in layers]
    for k, layer in enumerate(layers):
        per_edge = thetas[k][:, 0, 0].size
        for i in range(layer.fan_in):
            for u in range(layer.units):
                if (k, i, u) not in edges:
                    raise ModelFormatError(f"missing edge record ({k}, {i}, {u})")
                act, vals, lineno = edges.pop((k, i, u))
                if len(vals) != per_edge:
                    raise ModelFormatError(
                        f"line {lineno}: edge ({k}, {i}, {u}) carries {len(vals)} "
                        f"angles, expected {per_edge}")
                thetas[k][:, i, u] = np.asarray(vals).reshape(thetas[k][:, i, u].shape)
                active[k][i, u] = bool(act)
    if edges:
        extra = sorted(edges)[0]
        raise ModelFormatError(f"edge record {extra} does not fit the architecture")

    if norm_unfitted and norm_rows:
        raise ModelFormatError("norm rows present alongside 'norm unfitted'")
    if norm_unfitted:
        input_norm = None
    else:
        if sorted(norm_rows) != list(range(spec.input_dim)):
            raise ModelFormatError(
                f"expected norm rows 0..{spec.input_dim - 1}, got {sorted(norm_rows)}")
        input_norm = np.array([norm_rows[i] for i in range(spec.input_dim)])
    if dense is None:
        raise ModelFormatError("missing dense row")
    try:
        return Model(spec=spec, thetas=thetas, edge_active=active,
                     dense_w=dense[0], dense_b=dense[1], input_norm=input_norm)
    except ValueError as e:
        raise ModelFormatError(str(e))
