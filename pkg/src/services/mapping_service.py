"""Mapping network service: forward pass, KL loss, gradients, training and storage."""

import io
import os
import struct
from pathlib import Path
from typing import BinaryIO, Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from ..core.constants import KL_EPSILON, MNW_MAGIC, HIDDEN_LAYERS, StopReason
from ..core.exceptions import (
    DimensionMismatchError, FileAccessError, FormatError, NumericalError, ValidationError,
)
from ..core.logger import get_logger
from ..core.utils import argmax_rows, derive_rng
from ..models.inventory import ClassInventory
from ..models.network import EpochRecord, MappingNetwork, TrainingConfig, TrainingTrace
from ..models.posteriorgram import Posteriorgram
from .posterior_service import discard_silence_utterances, ensure_valid, pair_utterances

logger = get_logger("service.mapping")

_HEADER_LEN = struct.Struct("<I")
_PARAM_DTYPE = np.dtype("<f8")
_EVAL_CHUNK = 4096


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=1, keepdims=True)


def _check_batch(net: MappingNetwork, batch: np.ndarray) -> np.ndarray:
    batch = np.asarray(batch, dtype=np.float64)
    if batch.ndim != 2 or batch.shape[1] != net.source_dim:
        raise DimensionMismatchError(
            f"Network {net.source_lang}->{net.target_lang} expects {net.source_dim} input columns, "
            f"got shape {batch.shape}"
        )
    return batch


def _forward_cache(net: MappingNetwork, batch: np.ndarray) -> Tuple[List[np.ndarray], List[np.ndarray], np.ndarray]:
    """Forward pass keeping layer inputs and hidden pre-activations."""
    inputs, pre_activations = [], []
    h = batch
    for w, b in zip(net.weights[:-1], net.biases[:-1]):
        inputs.append(h)
        z = h @ w + b
        pre_activations.append(z)
        h = np.maximum(z, 0.0)
    inputs.append(h)
    output = _softmax(h @ net.weights[-1] + net.biases[-1])
    return inputs, pre_activations, output


def forward(net: MappingNetwork, batch: np.ndarray) -> np.ndarray:
    """Map ``B x source_dim`` distributions to ``B x target_dim`` distributions."""
    batch = _check_batch(net, batch)
    if batch.shape[0] == 0:
        return np.zeros((0, net.target_dim))
    return _forward_cache(net, batch)[2]


def kl_loss(target_rows: np.ndarray, mapped_rows: np.ndarray, epsilon_floor: float = KL_EPSILON) -> float:
    """Batch-summed KL divergence of ``mapped_rows`` from ``target_rows``.

    Both arguments are clamped to ``epsilon_floor`` inside the logarithms.
    """
    target_rows = np.asarray(target_rows, dtype=np.float64)
    mapped_rows = np.asarray(mapped_rows, dtype=np.float64)
    if target_rows.shape != mapped_rows.shape or target_rows.ndim != 2:
        raise DimensionMismatchError(
            f"KL loss needs equal B x d shapes, got {target_rows.shape} and {mapped_rows.shape}"
        )
    if not (np.all(np.isfinite(target_rows)) and np.all(np.isfinite(mapped_rows))):
        raise NumericalError("KL loss received NaN or Inf", code="non-finite-input")
    log_ratio = np.log(np.maximum(target_rows, epsilon_floor)) - np.log(np.maximum(mapped_rows, epsilon_floor))
    return float(np.sum(target_rows * log_ratio))


def _gradients(net: MappingNetwork, batch: np.ndarray, target_rows: np.ndarray,
               epsilon_floor: float) -> Tuple[float, np.ndarray, List[np.ndarray]]:
    inputs, pre_activations, output = _forward_cache(net, batch)
    loss = kl_loss(target_rows, output, epsilon_floor)

    # softmax + KL: d/dz = q * sum(p) - p, i.e. q - p for normalized targets
    delta = output * target_rows.sum(axis=1, keepdims=True) - target_rows

    grads: List[np.ndarray] = [None] * (2 * len(net.weights))
    for layer in range(len(net.weights) - 1, -1, -1):
        grads[2 * layer] = inputs[layer].T @ delta
        grads[2 * layer + 1] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ net.weights[layer].T) * (pre_activations[layer - 1] > 0.0)
    return loss, output, grads


def backward(net: MappingNetwork, batch: np.ndarray, target_rows: np.ndarray,
             epsilon_floor: float = KL_EPSILON) -> List[np.ndarray]:
    """Gradient of ``kl_loss`` (batch sum) with respect to every parameter.

    The list is aligned with ``net.parameters()``: W then b per layer.
    """
    batch = _check_batch(net, batch)
    target_rows = np.asarray(target_rows, dtype=np.float64)
    if target_rows.shape != (batch.shape[0], net.target_dim):
        raise DimensionMismatchError(
            f"Targets must be {batch.shape[0]} x {net.target_dim}, got {target_rows.shape}"
        )
    return _gradients(net, batch, target_rows, epsilon_floor)[2]


def output_delta(net: MappingNetwork, batch: np.ndarray, target_rows: np.ndarray) -> np.ndarray:
    """Loss gradient with respect to the output-layer pre-activations."""
    batch = _check_batch(net, batch)
    output = _forward_cache(net, batch)[2]
    target_rows = np.asarray(target_rows, dtype=np.float64)
    return output * target_rows.sum(axis=1, keepdims=True) - target_rows


def _stack_pairs(source: Mapping[str, Posteriorgram], target: Mapping[str, Posteriorgram],
                 what: str) -> Tuple[np.ndarray, np.ndarray]:
    utterances = pair_utterances(source, target)
    if not utterances:
        raise ValidationError(f"No aligned {what} utterances", code="no-aligned-frames")
    for utt in utterances:
        ensure_valid(source[utt])
        ensure_valid(target[utt])
    x = np.concatenate([source[utt].as_float64() for utt in utterances])
    y = np.concatenate([target[utt].as_float64() for utt in utterances])
    return x, y


def split_train_dev(utterance_ids: Sequence[str], dev_fraction: float, seed: int) -> Tuple[List[str], List[str]]:
    """Deterministic random utterance split into disjoint train and dev lists."""
    ids = sorted(utterance_ids)
    if len(ids) < 2:
        raise ValidationError("Need at least two utterances to split train/dev", code="no-aligned-frames")
    if not 0.0 < dev_fraction < 1.0:
        raise ValidationError(f"dev_fraction must lie in (0, 1), got {dev_fraction}", code="out-of-range")
    order = derive_rng(seed, "split").permutation(len(ids))
    n_dev = min(len(ids) - 1, max(1, int(round(dev_fraction * len(ids)))))
    dev = sorted(ids[i] for i in order[:n_dev])
    train = sorted(ids[i] for i in order[n_dev:])
    return train, dev


class MappingTrainer:
    """Mini-batch SGD with momentum on the mean per-frame KL loss."""

    def __init__(self, config: TrainingConfig):
        self.config = config
        self.logger = get_logger("service.mapping.trainer")

    def _evaluate(self, net: MappingNetwork, x: np.ndarray, y: np.ndarray) -> Tuple[float, float]:
        total, correct = 0.0, 0
        for start in range(0, x.shape[0], _EVAL_CHUNK):
            out = forward(net, x[start:start + _EVAL_CHUNK])
            ref = y[start:start + _EVAL_CHUNK]
            total += kl_loss(ref, out, self.config.epsilon_floor)
            correct += int(np.sum(argmax_rows(out) == argmax_rows(ref)))
        return total / x.shape[0], correct / x.shape[0]

    def fit(self, x: np.ndarray, y: np.ndarray, dev_x: np.ndarray, dev_y: np.ndarray,
            source_lang: str = "src", target_lang: str = "tgt") -> Tuple[MappingNetwork, TrainingTrace]:
        """Train on stacked frame pairs and return the best-dev-KL network."""
        cfg = self.config
        if x.shape[0] == 0 or dev_x.shape[0] == 0:
            raise ValidationError("Training and dev sets must contain frames", code="no-aligned-frames")

        net = MappingNetwork.initialize(
            x.shape[1], y.shape[1], cfg.hidden_dims, derive_rng(cfg.seed, "init"),
            source_lang=source_lang, target_lang=target_lang,
        )
        trace = TrainingTrace()
        if cfg.max_epochs == 0:
            trace.stop_reason = StopReason.MAX_EPOCHS
            return net, trace

        shuffle_rng = derive_rng(cfg.seed, "shuffle")
        velocity = [np.zeros_like(p) for p in net.parameters()]
        best_net, best_kl, stale = net.copy(), np.inf, 0
        n_frames = x.shape[0]

        self.logger.info(
            f"Training {source_lang}->{target_lang}: {n_frames} train / {dev_x.shape[0]} dev frames, "
            f"dims {net.layer_dims}"
        )
        for epoch in range(1, cfg.max_epochs + 1):
            order = shuffle_rng.permutation(n_frames)
            epoch_loss = 0.0
            for start in range(0, n_frames, cfg.batch_size):
                idx = order[start:start + cfg.batch_size]
                loss, _, grads = _gradients(net, x[idx], y[idx], cfg.epsilon_floor)
                if not np.isfinite(loss):
                    raise NumericalError(f"Non-finite training loss in epoch {epoch}",
                                         code="divergence", trace=trace)
                epoch_loss += loss
                scale = 1.0 / len(idx)
                for param, grad, vel in zip(net.parameters(), grads, velocity):
                    vel *= cfg.momentum
                    vel -= cfg.learning_rate * scale * grad
                    param += vel

            dev_kl, dev_top1 = self._evaluate(net, dev_x, dev_y)
            train_kl = epoch_loss / n_frames
            if not (np.isfinite(dev_kl) and np.isfinite(train_kl)):
                raise NumericalError(f"Non-finite loss after epoch {epoch}", code="divergence", trace=trace)
            trace.records.append(EpochRecord(epoch, train_kl, dev_kl, dev_top1))
            self.logger.info(
                f"epoch {epoch:3d} train_kl={train_kl:.6f} dev_kl={dev_kl:.6f} dev_top1={dev_top1:.4f}"
            )

            if dev_kl < best_kl:
                best_net, best_kl, stale = net.copy(), dev_kl, 0
                trace.best_epoch = epoch
            else:
                stale += 1
                if stale >= max(cfg.patience, 1):
                    trace.stop_reason = StopReason.EARLY_STOPPING
                    break

        if trace.stop_reason is None:
            trace.stop_reason = StopReason.MAX_EPOCHS
        best_net.validate()
        self.logger.success(
            f"{source_lang}->{target_lang} stopped ({trace.stop_reason}) after {trace.epoch_count} epochs, "
            f"best epoch {trace.best_epoch} dev_kl={best_kl:.6f}"
        )
        return best_net, trace


def train(source_pgs: Mapping[str, Posteriorgram], target_pgs: Mapping[str, Posteriorgram],
          cfg: TrainingConfig, dev_source_pgs: Mapping[str, Posteriorgram],
          dev_target_pgs: Mapping[str, Posteriorgram],
          target_inventory: Optional[ClassInventory] = None) -> Tuple[MappingNetwork, TrainingTrace]:
    """Train a mapping network on aligned source/target utterance sets.

    ``target_inventory`` enables dropping silence-only training utterances.
    """
    if set(source_pgs) & set(dev_source_pgs):
        raise ValidationError("Train and dev utterance sets overlap", code="overlapping-sets")
    if target_inventory is not None:
        target_pgs = discard_silence_utterances(dict(target_pgs), target_inventory)
    x, y = _stack_pairs(source_pgs, target_pgs, "training")
    dev_x, dev_y = _stack_pairs(dev_source_pgs, dev_target_pgs, "dev")
    source_lang = next(iter(source_pgs.values())).language_id
    target_lang = next(iter(target_pgs.values())).language_id
    return MappingTrainer(cfg).fit(x, y, dev_x, dev_y, source_lang, target_lang)


def map_posteriorgram(net: MappingNetwork, pg: Posteriorgram) -> Posteriorgram:
    """Translate ``pg`` into the network's target class space."""
    if pg.dim != net.source_dim:
        raise DimensionMismatchError(
            f"Posteriorgram '{pg.utterance_id}' has {pg.dim} classes, network expects {net.source_dim}"
        )
    mapped = Posteriorgram(
        utterance_id=pg.utterance_id,
        language_id=net.target_lang,
        frames=forward(net, pg.as_float64()),
    )
    return ensure_valid(mapped)


def _encode_header(net: MappingNetwork) -> bytes:
    for value in (net.source_lang, net.target_lang):
        if not value or any(ch in value for ch in ";=\n"):
            raise FormatError(f"Language tag '{value}' cannot be stored in a MNW1 header", code="bad-header")
    dims = ",".join(str(d) for d in net.layer_dims)
    return f"src={net.source_lang};tgt={net.target_lang};dims={dims}".encode("utf-8")


def save_network(net: MappingNetwork, destination: Union[str, os.PathLike, BinaryIO, None] = None) -> bytes:
    """Serialize ``net`` as MNW1; writes to ``destination`` when given."""
    header = _encode_header(net)
    payload = b"".join(p.astype(_PARAM_DTYPE, copy=False).tobytes(order="C") for p in net.parameters())
    blob = MNW_MAGIC + _HEADER_LEN.pack(len(header)) + header + payload
    if destination is None:
        return blob
    if hasattr(destination, "write"):
        destination.write(blob)
    else:
        Path(destination).parent.mkdir(parents=True, exist_ok=True)
        with open(destination, "wb") as f:
            f.write(blob)
    return blob


def load_network(source: Union[bytes, str, os.PathLike, BinaryIO]) -> MappingNetwork:
    """Decode a MNW1 stream."""
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif hasattr(source, "read"):
        data = source.read()
    else:
        try:
            with open(source, "rb") as f:
                data = f.read()
        except FileNotFoundError:
            raise FileAccessError(f"No such network file: {source}")

    view = io.BytesIO(data)
    magic = view.read(4)
    if len(magic) < 4:
        raise FormatError("Stream ends inside the magic", code="truncated-stream")
    if magic != MNW_MAGIC:
        raise FormatError(f"Bad magic {magic!r}, expected {MNW_MAGIC!r}", code="bad-magic")
    raw_len = view.read(_HEADER_LEN.size)
    if len(raw_len) < _HEADER_LEN.size:
        raise FormatError("Stream ends inside the header length", code="truncated-stream")
    (header_len,) = _HEADER_LEN.unpack(raw_len)
    raw_header = view.read(header_len)
    if len(raw_header) < header_len:
        raise FormatError("Stream ends inside the header", code="truncated-stream")

    try:
        fields = dict(item.split("=", 1) for item in raw_header.decode("utf-8").split(";"))
        dims = [int(d) for d in fields["dims"].split(",")]
        source_lang, target_lang = fields["src"], fields["tgt"]
    except (ValueError, KeyError):
        raise FormatError("Malformed MNW1 header", code="header-mismatch")
    if len(dims) != HIDDEN_LAYERS + 2 or min(dims) < 1:
        raise FormatError(f"Header dims {dims} do not describe a valid network", code="invalid-topology")

    shapes = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        shapes.extend(((fan_in, fan_out), (fan_out,)))
    expected = sum(int(np.prod(shape)) for shape in shapes) * _PARAM_DTYPE.itemsize
    payload = view.read()
    if len(payload) < expected:
        raise FormatError(f"Payload has {len(payload)} bytes, topology needs {expected}", code="truncated-stream")
    if len(payload) > expected:
        raise FormatError(f"Payload has {len(payload) - expected} trailing bytes", code="header-mismatch")

    params, offset = [], 0
    for shape in shapes:
        count = int(np.prod(shape))
        params.append(np.frombuffer(payload, dtype=_PARAM_DTYPE, count=count, offset=offset).reshape(shape).copy())
        offset += count * _PARAM_DTYPE.itemsize
    return MappingNetwork(
        source_lang=source_lang,
        target_lang=target_lang,
        weights=params[0::2],
        biases=params[1::2],
    )


def map_posteriorgram_set(net: MappingNetwork, pgs: Mapping[str, Posteriorgram]) -> Dict[str, Posteriorgram]:
    """Map every posteriorgram of a set, keyed by utterance id."""
    return {utt: map_posteriorgram(net, pg) for utt, pg in sorted(pgs.items())}
