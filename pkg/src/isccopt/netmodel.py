"""Layered network model: FLOP counts, forward passes, magnitude pruning,
and the weight-derived quantities used by the accuracy bounds.

Layers are 1-indexed throughout (layer 0 means "the raw input").
Convolution weights are stored as flattened 2-D matrices; they are used only
for norms and pruning statistics. Forward passes are supported for
fully-connected chains (bias-free, ReLU between layers, none after the last),
which is the setting in which the pruning error bound is validated.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

CONV = "conv"
MP = "mp"
FC = "fc"


@dataclass(frozen=True)
class LayerSpec:
    """One layer of the network.

    conv: alpha x beta x gamma output map, psi x psi filters, gamma_prev input
    channels. mp: pooling over psi x psi windows, alpha x beta x gamma output.
    fc: n outputs from n_prev inputs. `weights` is optional; max-pooling
    layers never carry weights.
    """

    kind: str
    alpha: int = 0
    beta: int = 0
    gamma: int = 0
    psi: int = 0
    gamma_prev: int = 0
    n: int = 0
    n_prev: int = 0
    weights: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in (CONV, MP, FC):
            raise ValueError(f"unknown layer kind {self.kind!r}")
        if self.kind == CONV:
            dims = (self.alpha, self.beta, self.gamma, self.psi, self.gamma_prev)
        elif self.kind == MP:
            dims = (self.alpha, self.beta, self.gamma, self.psi)
        else:
            dims = (self.n, self.n_prev)
        if any(d < 1 for d in dims):
            raise ValueError(f"{self.kind} layer dimensions must be >= 1, got {dims}")
        if self.weights is not None:
            if self.kind == MP:
                raise ValueError("max-pooling layers carry no weights")
            w = np.asarray(self.weights, dtype=float)
            if w.size != self.weight_count:
                raise ValueError(
                    f"weight count {w.size} does not match layer size {self.weight_count}"
                )
            object.__setattr__(self, "weights", w)

    @property
    def weight_count(self) -> int:
        """Number of parameters implied by the layer dimensions."""
        if self.kind == CONV:
            return self.gamma * self.gamma_prev * self.psi**2
        if self.kind == FC:
            return self.n * self.n_prev
        return 0

    @property
    def out_dim(self) -> int:
        """Output feature size of this layer."""
        if self.kind == FC:
            return self.n
        return self.alpha * self.beta * self.gamma

    @property
    def is_weighted(self) -> bool:
        return self.kind != MP


def conv(alpha, beta, gamma, psi, gamma_prev, weights=None) -> LayerSpec:
    return LayerSpec(CONV, alpha=alpha, beta=beta, gamma=gamma, psi=psi,
                     gamma_prev=gamma_prev, weights=weights)


def maxpool(alpha, beta, gamma, psi) -> LayerSpec:
    return LayerSpec(MP, alpha=alpha, beta=beta, gamma=gamma, psi=psi)


def fc(n, n_prev, weights=None) -> LayerSpec:
    return LayerSpec(FC, n=n, n_prev=n_prev, weights=weights)


@dataclass(frozen=True)
class NetworkModel:
    """Ordered layer stack plus the set of admissible split points."""

    layers: tuple[LayerSpec, ...]
    input_dim: int
    split_candidates: frozenset[int] = frozenset()

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        if not layers:
            raise ValueError("network needs at least one layer")
        if self.input_dim < 1:
            raise ValueError("input_dim must be >= 1")
        splits = frozenset(self.split_candidates) or frozenset(range(1, len(layers) + 1))
        if not all(1 <= l <= len(layers) for l in splits):
            raise ValueError("split candidates must lie in 1..L")
        object.__setattr__(self, "split_candidates", splits)
        self._check_chain()

    def _check_chain(self):
        prev_dim = self.input_dim
        prev_channels = None
        for i, layer in enumerate(self.layers, start=1):
            if layer.kind == FC:
                if layer.n_prev != prev_dim:
                    raise ValueError(
                        f"layer {i}: n_prev={layer.n_prev} does not chain with "
                        f"previous feature size {prev_dim}"
                    )
            elif prev_channels is not None:
                chan_in = layer.gamma_prev if layer.kind == CONV else layer.gamma
                if chan_in != prev_channels:
                    raise ValueError(
                        f"layer {i}: input channels {chan_in} do not chain with "
                        f"previous channels {prev_channels}"
                    )
            prev_dim = layer.out_dim
            prev_channels = layer.gamma if layer.kind != FC else None

    @property
    def depth(self) -> int:
        return len(self.layers)

    def layer(self, l: int) -> LayerSpec:
        """1-indexed layer access."""
        if not 1 <= l <= self.depth:
            raise IndexError(f"layer index {l} outside 1..{self.depth}")
        return self.layers[l - 1]

    def with_weights(self, weights: list[np.ndarray]) -> "NetworkModel":
        """Attach one weight array per weighted layer (in layer order)."""
        mats = list(weights)
        new_layers = []
        for layer in self.layers:
            if layer.is_weighted:
                if not mats:
                    raise ValueError("fewer weight arrays than weighted layers")
                new_layers.append(replace(layer, weights=mats.pop(0)))
            else:
                new_layers.append(layer)
        if mats:
            raise ValueError("more weight arrays than weighted layers")
        return replace(self, layers=tuple(new_layers))


@dataclass(frozen=True)
class PrunedNetwork:
    """Magnitude-pruned copy of the first `split` layers of `base`."""

    base: NetworkModel
    rho: float
    split: int
    pruned_weights: dict[int, np.ndarray] = field(repr=False, default_factory=dict)


def flops(layer: LayerSpec, rho: float = 1.0, warn: bool = True) -> float:
    """Floating point operations to compute one layer at pruning ratio rho.

    conv: (2*gamma_prev*psi^2*rho - 1)*alpha*beta*gamma
    mp:   alpha*beta*gamma*psi^2          (rho ignored)
    fc:   (2*n_prev*rho - 1)*n

    Degenerate negative values (tiny layers at small rho) clamp to 0 and
    are flagged with a RuntimeWarning unless warn=False (solvers probe the
    tiny-rho region deliberately).
    """
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must be in (0, 1], got {rho}")
    slope, intercept = flops_affine(layer)
    value = slope * rho + intercept
    if value < 0.0:
        if warn:
            warnings.warn(
                f"negative FLOP count clamped to 0 for {layer.kind} layer at rho={rho}",
                RuntimeWarning,
                stacklevel=2,
            )
        return 0.0
    return value


def flops_affine(layer: LayerSpec) -> tuple[float, float]:
    """(slope, intercept) of the exact affine-in-rho FLOP count."""
    if layer.kind == CONV:
        area = layer.alpha * layer.beta * layer.gamma
        return 2.0 * layer.gamma_prev * layer.psi**2 * area, -float(area)
    if layer.kind == FC:
        return 2.0 * layer.n_prev * layer.n, -float(layer.n)
    return 0.0, float(layer.alpha * layer.beta * layer.gamma * layer.psi**2)


def cum_flops(net: NetworkModel, l_from: int, l_to: int, rho: float = 1.0,
              warn: bool = True) -> float:
    """Sum of per-layer FLOPs over the inclusive range l_from..l_to.

    An empty range (l_from > l_to) is allowed and returns 0, so callers can
    write cum_flops(net, l+1, L) for l = L.
    """
    if l_from > l_to:
        return 0.0
    if not (1 <= l_from and l_to <= net.depth):
        raise IndexError(f"range {l_from}..{l_to} outside 1..{net.depth}")
    return sum(flops(net.layer(l), rho, warn=warn) for l in range(l_from, l_to + 1))


def cum_flops_affine(net: NetworkModel, l_from: int, l_to: int) -> tuple[float, float]:
    """(slope, intercept) of the unclamped affine form of cum_flops."""
    slope = intercept = 0.0
    for l in range(l_from, l_to + 1):
        s, c = flops_affine(net.layer(l))
        slope += s
        intercept += c
    return slope, intercept


def feature_dim(net: NetworkModel, l: int) -> int:
    """Output feature size after layer l; l=0 returns the input size."""
    if l == 0:
        return net.input_dim
    return net.layer(l).out_dim


def _weight_chain(net, pruned, l):
    """Weight matrices of layers 1..l, substituting pruned copies if given."""
    mats = []
    for i in range(1, l + 1):
        layer = net.layer(i)
        if not layer.is_weighted:
            continue
        if layer.weights is None:
            raise ValueError(f"layer {i} has no weight matrix")
        if pruned is not None and i in pruned.pruned_weights:
            mats.append(pruned.pruned_weights[i])
        else:
            mats.append(layer.weights)
    return mats


def forward(net: NetworkModel | PrunedNetwork, x: np.ndarray, l: int) -> np.ndarray:
    """Bias-free ReLU chain W_l relu(W_{l-1} relu(... W_1 x)).

    Only fully-connected stacks are supported; ReLU is applied between
    layers but not after layer l. `x` may be a vector or a (dim, batch)
    matrix.
    """
    if isinstance(net, PrunedNetwork):
        base, pruned = net.base, net
    else:
        base, pruned = net, None
    if any(base.layer(i).kind != FC for i in range(1, l + 1)):
        raise ValueError("forward pass supports fully-connected stacks only")
    mats = _weight_chain(base, pruned, l)
    out = np.asarray(x, dtype=float)
    for k, w in enumerate(mats):
        if k > 0:
            out = np.maximum(out, 0.0)
        out = w @ out
    return out


def prune(net: NetworkModel, rho: float, l: int) -> PrunedNetwork:
    """Per-layer magnitude pruning of layers 1..l.

    In each weighted layer the floor((1-rho)*M) entries of smallest absolute
    value are zeroed (ties broken by flat index order); survivors keep their
    original values.
    """
    if not 0.0 < rho <= 1.0:
        raise ValueError(f"rho must be in (0, 1], got {rho}")
    pruned = {}
    for i in range(1, l + 1):
        layer = net.layer(i)
        if not layer.is_weighted:
            continue
        if layer.weights is None:
            raise ValueError(f"layer {i} has no weight matrix to prune")
        w = layer.weights
        n_zero = int(np.floor((1.0 - rho) * w.size))
        out = w.copy()
        if n_zero > 0:
            flat = out.reshape(-1)
            order = np.argsort(np.abs(flat), kind="stable")
            flat[order[:n_zero]] = 0.0
        pruned[i] = out
    return PrunedNetwork(base=net, rho=rho, split=l, pruned_weights=pruned)


def pruning_error_bound(net: NetworkModel, pruned: PrunedNetwork, l: int) -> float:
    """Worst-case squared feature error of the pruned sub-model:

        sum_{k<=l} ||W_k - What_k||_F^2 * prod_{k'!=k, k'<=l} ||W_k'||_F^2

    Valid for unit-norm inputs through the bias-free ReLU chain.
    """
    originals = _weight_chain(net, None, l)
    replaced = _weight_chain(net, pruned, l)
    sq_norms = [float(np.sum(w * w)) for w in originals]
    total = 0.0
    for k, (w, w_hat) in enumerate(zip(originals, replaced)):
        diff = float(np.sum((w - w_hat) ** 2))
        prod = 1.0
        for k2, sq in enumerate(sq_norms):
            if k2 != k:
                prod *= sq
        total += diff * prod
    return total


def tail_norm_product(net: NetworkModel, l: int) -> float:
    """Product of Frobenius norms of layers l+1..L (weightless layers
    contribute factor 1); empty product is 1."""
    prod = 1.0
    for i in range(l + 1, net.depth + 1):
        layer = net.layer(i)
        if not layer.is_weighted:
            continue
        if layer.weights is None:
            raise ValueError(f"layer {i} has no weight matrix")
        prod *= float(np.linalg.norm(layer.weights))
    return prod


def layer_laplace_rate(layer: LayerSpec) -> float:
    """Maximum-likelihood exponential rate of the |weight| distribution:
    lambda = M / sum(|w|)."""
    if layer.weights is None:
        raise ValueError("layer has no weight matrix")
    total = float(np.sum(np.abs(layer.weights)))
    if total == 0.0:
        raise ValueError("all-zero layer: magnitude rate undefined")
    return layer.weight_count / total


def pruning_penalty_coeff(net: NetworkModel, l: int) -> float:
    """Pruning penalty coefficient of the first l layers:

        sum_{k<=l} (M_k / lambda_k^2) * prod_{k'!=k, k'<=l} ||W_k'||_F^2

    with lambda_k the fitted per-layer magnitude rate.
    """
    entries = []
    for i in range(1, l + 1):
        layer = net.layer(i)
        if not layer.is_weighted:
            continue
        rate = layer_laplace_rate(layer)
        sq_norm = float(np.sum(layer.weights**2))
        entries.append((layer.weight_count / rate**2, sq_norm))
    total = 0.0
    for k, (lead, _) in enumerate(entries):
        prod = 1.0
        for k2, (_, sq) in enumerate(entries):
            if k2 != k:
                prod *= sq
        total += lead * prod
    return total


def random_fc_network(dims, rates, rng, split_candidates=None) -> NetworkModel:
    """Analysis network: fully-connected stack with zero-mean Laplacian
    weights, one rate per layer (|w| ~ Exponential(rate))."""
    dims = list(dims)
    rates = list(rates)
    if len(rates) != len(dims) - 1:
        raise ValueError("need one rate per layer (len(dims) - 1)")
    layers = []
    for n_prev, n, rate in zip(dims[:-1], dims[1:], rates):
        w = rng.laplace(0.0, 1.0 / rate, size=(n, n_prev))
        layers.append(fc(n, n_prev, weights=w))
    return NetworkModel(
        layers=tuple(layers),
        input_dim=dims[0],
        split_candidates=frozenset(split_candidates or range(1, len(layers) + 1)),
    )


def generate_weights(net: NetworkModel, rates, seed: int) -> NetworkModel:
    """Attach zero-mean Laplacian weights, one rate per weighted layer."""
    rng = np.random.default_rng(seed)
    rates = list(rates)
    weighted = [layer for layer in net.layers if layer.is_weighted]
    if len(rates) != len(weighted):
        raise ValueError(f"need {len(weighted)} rates, got {len(rates)}")
    mats = []
    for layer, rate in zip(weighted, rates):
        if layer.kind == FC:
            shape = (layer.n, layer.n_prev)
        else:
            shape = (layer.gamma, layer.gamma_prev * layer.psi**2)
        mats.append(rng.laplace(0.0, 1.0 / rate, size=shape))
    return net.with_weights(mats)


def rates_for_norms(net: NetworkModel, target_norms) -> list[float]:
    """Laplacian rates giving E||W||_F ~= target per weighted layer
    (E[w^2] = 2/rate^2 so rate = sqrt(2 M) / target)."""
    targets = list(target_norms)
    weighted = [layer for layer in net.layers if layer.is_weighted]
    if len(targets) != len(weighted):
        raise ValueError(f"need {len(weighted)} target norms, got {len(targets)}")
    return [float(np.sqrt(2.0 * layer.weight_count) / t)
            for layer, t in zip(weighted, targets)]


def load_weights(net: NetworkModel, path) -> NetworkModel:
    """Load a flat weight file (text numbers, or raw little-endian float64
    for .bin/.raw) holding each weighted layer's matrix row-major, in layer
    order, and attach it to the network."""
    path = str(path)
    if path.endswith((".bin", ".raw")):
        flat = np.fromfile(path, dtype="<f8")
    else:
        flat = np.loadtxt(path).reshape(-1)
    mats = []
    offset = 0
    for layer in net.layers:
        if not layer.is_weighted:
            continue
        count = layer.weight_count
        if offset + count > flat.size:
            raise ValueError("weight file too short for network dimensions")
        if layer.kind == FC:
            shape = (layer.n, layer.n_prev)
        else:
            shape = (layer.gamma, layer.gamma_prev * layer.psi**2)
        mats.append(flat[offset:offset + count].reshape(shape))
        offset += count
    if offset != flat.size:
        raise ValueError("weight file longer than network dimensions")
    return net.with_weights(mats)


def save_weights(net: NetworkModel, path) -> None:
    """Write weights in the flat format accepted by load_weights."""
    path = str(path)
    mats = [layer.weights for layer in net.layers if layer.is_weighted]
    if any(m is None for m in mats):
        raise ValueError("network has layers without weights")
    flat = np.concatenate([m.reshape(-1) for m in mats])
    if path.endswith((".bin", ".raw")):
        flat.astype("<f8").tofile(path)
    else:
        np.savetxt(path, flat)
