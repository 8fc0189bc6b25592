"""Receivers behind one estimator interface.

Every receiver is a scikit-learn style estimator: hyperparameters are
constructor arguments (so ``get_params``/``set_params``/``clone`` work),
``fit`` returns ``self`` and sets trailing-underscore attributes, and
``predict_llr(y, n0, h=None)`` maps received grids to LLR grids
``log P(b=1)/P(b=0)`` of shape ``(B, n_sym, n_sc, bits_per_symbol)``.
``predict`` returns the matching hard bits.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .autodiff.tensor import get_default_dtype, no_grad
from .classical import LSReceiver
from .models import build_model, default_config, preprocess_input
from .models.io import load_model
from .phy import LinkConfig, pilot_values
from .training import TrainConfig, loss_mask, train_loop
from .validation import check_bits, check_grid, check_noise


class _ReceiverMixin:
    def predict(self, y, n0, h=None) -> np.ndarray:
        """Hard decisions (``uint8``) from the sign of the LLRs."""
        return (self.predict_llr(y, n0, h) > 0).astype(np.uint8)

    def _link(self) -> LinkConfig:
        return self.link if self.link is not None else LinkConfig()


class ClassicalReceiver(_ReceiverMixin, BaseEstimator):
    """LS pilot estimate, linear time interpolation, per-RE LMMSE combining, exact demapping.

    Nothing is learned: ``fit`` only binds the link's pilot sequence.
    """

    name = "classical"

    def __init__(self, link: LinkConfig | None = None):
        self.link = link

    def fit(self, y=None, bits=None):
        self.link_ = self._link()
        self.pilots_ = pilot_values(self.link_)
        self.receiver_ = LSReceiver(self.link_, self.pilots_)
        return self

    def predict_llr(self, y, n0, h=None) -> np.ndarray:
        """LLR grid; ``h`` is accepted for a uniform interface and ignored."""
        check_is_fitted(self, "receiver_")
        y = check_grid(y, self.link_)
        return self.receiver_.llr(y, check_noise(n0, len(y)))


class PerfectCSIReceiver(ClassicalReceiver):
    """LMMSE combining and exact demapping with the true channel in place of the LS estimate."""

    name = "perfect-csi"

    def predict_llr(self, y, n0, h=None) -> np.ndarray:
        check_is_fitted(self, "receiver_")
        if h is None:
            raise ValueError("the perfect-CSI receiver needs the true channel h")
        y = check_grid(y, self.link_)
        h = check_grid(h, self.link_, name="h")
        if len(h) != len(y):
            raise ValueError(f"h has {len(h)} grids but y has {len(y)}")
        return self.receiver_.llr(y, check_noise(n0, len(y)), h=h)


class NeuralReceiver(_ReceiverMixin, BaseEstimator):
    """A trainable LLR estimator (``kind`` is ``"dat"``, ``"rdnla"`` or ``"transformer"``).

    ``fit`` trains a freshly initialised network on frames generated on the
    fly from ``link``; the ``y``/``bits`` arguments are not used. Use
    :meth:`from_checkpoint` to wrap an already trained network.

    Args:
        kind: network family.
        link: link the network is built for (default link if None).
        model_config: ``DatConfig``/``RdnlaConfig``; the family default if None.
        train_config: ``TrainConfig``; the default if None.
        model_seed: seed of the weight initialisation and dropout stream.
        checkpoint_path: where ``fit`` writes checkpoints (optional).
        metrics_path: where ``fit`` writes the loss trace CSV (optional).
        inference_batch: grids per forward pass in ``predict_llr``.
    """

    def __init__(self, kind: str = "dat", link: LinkConfig | None = None, model_config=None,
                 train_config: TrainConfig | None = None, model_seed: int = 0, checkpoint_path=None,
                 metrics_path=None, inference_batch: int = 16):
        self.kind = kind
        self.link = link
        self.model_config = model_config
        self.train_config = train_config
        self.model_seed = model_seed
        self.checkpoint_path = checkpoint_path
        self.metrics_path = metrics_path
        self.inference_batch = inference_batch

    @property
    def name(self) -> str:
        return self.kind

    def init_model(self):
        """Build the untrained network and mark the estimator fitted with it."""
        link = self._link()
        cfg = self.model_config if self.model_config is not None else default_config(self.kind)
        self.link_ = link
        self.model_ = build_model(self.kind, link.n_sym, link.n_sc, link.n_features, link.bits_per_symbol,
                                  cfg, seed=self.model_seed)
        self.model_.eval()
        self.history_ = []
        return self

    def fit(self, y=None, bits=None, resume: bool = False):
        self.init_model()
        result = train_loop(self.model_, self.link_, self.train_config or TrainConfig(),
                            checkpoint_path=self.checkpoint_path, metrics_path=self.metrics_path,
                            resume=resume, model_seed=self.model_seed)
        self.history_ = result.records
        return self

    @classmethod
    def from_checkpoint(cls, path, link: LinkConfig | None = None, kind: str | None = None) -> "NeuralReceiver":
        model, header, _ = load_model(path, link, kind=kind)
        saved_link = LinkConfig(**header["link"])
        est = cls(kind=model.kind, link=link or saved_link, model_config=model.config,
                  model_seed=int(header.get("seed", 0)), checkpoint_path=path)
        est.link_ = est.link
        est.model_ = model.eval()
        est.history_ = []
        return est

    def predict_llr(self, y, n0, h=None) -> np.ndarray:
        """LLR grid from the network; ``h`` is accepted for a uniform interface and ignored."""
        check_is_fitted(self, "model_")
        y = check_grid(y, self.link_)
        n0 = check_noise(n0, len(y))
        x = preprocess_input(y, n0).astype(get_default_dtype())
        self.model_.eval()
        step = max(1, int(self.inference_batch))
        with no_grad():
            out = [self.model_(x[i:i + step]).data for i in range(0, len(x), step)]
        return np.concatenate(out).astype(np.float64)

    def loss(self, y, n0, bit_grid) -> float:
        """Mean BCE over data REs of held-out frames (nats per bit)."""
        llr = self.predict_llr(y, n0)
        bits = check_bits(bit_grid, llr.shape, name="bit_grid")
        return bce_on_data(llr, bits, self.link_)


def bce_on_data(llr: np.ndarray, bit_grid: np.ndarray, link: LinkConfig) -> float:
    """Mean BCE of an LLR grid against transmitted bits over data REs only."""
    mask = np.broadcast_to(loss_mask(link), llr.shape)
    per_entry = np.logaddexp(0.0, llr) - bit_grid * llr
    return float(per_entry[mask].mean())


RECEIVER_NAMES = ("classical", "perfect-csi", "dat", "rdnla", "transformer")


def make_receiver(name: str, link: LinkConfig, checkpoint=None):
    """Fitted receiver by name; neural receivers are loaded from ``checkpoint``."""
    if name == "transformer-baseline":
        name = "transformer"
    if name == "classical":
        return ClassicalReceiver(link).fit()
    if name == "perfect-csi":
        return PerfectCSIReceiver(link).fit()
    if name in ("dat", "rdnla", "transformer"):
        if checkpoint is None:
            raise ValueError(f"receiver {name!r} needs a checkpoint")
        return NeuralReceiver.from_checkpoint(checkpoint, link, kind=name)
    raise ValueError(f"unknown receiver {name!r}; expected one of {RECEIVER_NAMES}")
