"""Cross-attention fusion head: radiomics queries attend over deep-embedding
keys/values, followed by an MLP regressor. Includes the training loop,
prediction and attention-based feature attribution."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .types import Sample, ValidationError


@dataclass
class TrainConfig:
    lr: float = 1e-5
    weight_decay: float = 1e-6
    batch_size: int = 8
    epochs: int = 60
    seed: int = 0
    val_fraction: float = 0.1
    mode: str = "xa"  # "xa" cross-attention | "concat" ablation
    layer_norm: bool = False
    d_e: int = 512  # hidden embedding size (small override for tests)

    def __post_init__(self):
        if min(self.lr, self.batch_size, self.epochs, self.d_e) <= 0 \
                or self.weight_decay < 0:
            raise ValidationError("non-positive training hyperparameter")
        if self.mode not in ("xa", "concat"):
            raise ValidationError(f"unknown fusion mode {self.mode!r}")


@dataclass
class AttentionTrace:
    attention: np.ndarray  # row-stochastic d_e x d_e
    scores_attn: np.ndarray  # per radiomic feature
    scores_grad: np.ndarray
    top_k: list = field(default_factory=list)  # (name, score) by attn score
    class_rollup: dict = field(default_factory=dict)


class FusionModel:
    """Trainable parameters plus the fitted standardizer statistics."""

    def __init__(self, feat_dim: int, embed_dim: int = 512, d_e: int = 512,
                 mode: str = "xa", layer_norm: bool = False, rng=None):
        self.feat_dim = feat_dim
        self.embed_dim = embed_dim
        self.d_e = d_e
        self.mode = mode
        self.layer_norm = layer_norm
        self.scaler_mean = np.zeros(feat_dim)
        self.scaler_std = np.ones(feat_dim)
        self.feature_names = None
        rng = rng or np.random.default_rng(0)

        def kaiming(rows, cols):
            bound = np.sqrt(6.0 / cols)  # fan-in uniform, ReLU gain
            return Tensor(rng.uniform(-bound, bound, (rows, cols)),
                          requires_grad=True)

        def zeros(n):
            return Tensor(np.zeros(n), requires_grad=True)

        p = {}
        if mode == "xa":
            p["W_Q"] = kaiming(d_e, feat_dim)
            p["b_Q"] = zeros(d_e)
            p["W_K"] = kaiming(d_e, embed_dim)
            p["b_K"] = zeros(d_e)
            p["W_V"] = kaiming(d_e, embed_dim)
            p["b_V"] = zeros(d_e)
            p["W_XA"] = kaiming(d_e, d_e)
        else:
            p["W_XA"] = kaiming(d_e, feat_dim + embed_dim)
        p["b_XA"] = zeros(d_e)
        p["W_MLP1"] = kaiming(d_e, d_e)
        p["b_MLP1"] = zeros(d_e)
        p["W_MLP2"] = kaiming(1, d_e)
        p["b_MLP2"] = zeros(1)
        self.params = p

    # -- forward -----------------------------------------------------------

    def forward(self, x_rad: np.ndarray, x_dl: np.ndarray,
                want_input_grad: bool = False):
        """Returns (prediction Tensor, attention ndarray or None, input Tensor)."""
        if len(x_rad) != self.feat_dim or len(x_dl) != self.embed_dim:
            raise ValidationError(
                f"input dims ({len(x_rad)}, {len(x_dl)}) do not match model "
                f"({self.feat_dim}, {self.embed_dim})")
        p = self.params
        xr = Tensor(x_rad, requires_grad=want_input_grad)
        xd = Tensor(x_dl)
        attn = None
        if self.mode == "xa":
            xr_in = ad.layer_norm(xr) if self.layer_norm else xr
            xd_in = ad.layer_norm(xd) if self.layer_norm else xd
            q = ad.affine(p["W_Q"], xr_in, p["b_Q"])
            k = ad.affine(p["W_K"], xd_in, p["b_K"])
            v = ad.affine(p["W_V"], xd_in, p["b_V"])
            scores = ad.scale(ad.outer(q, k), 1.0 / np.sqrt(self.d_e))
            a = ad.row_softmax(scores)
            attn = a.data
            x_xa = ad.matvec(a, v)  # vec() is the identity on a vector
            fused = x_xa
        else:
            fused = ad.concat(xr, xd)
        y_xa = ad.relu(ad.affine(p["W_XA"], fused, p["b_XA"]))
        h = ad.relu(ad.affine(p["W_MLP1"], y_xa, p["b_MLP1"]))
        yhat = ad.affine(p["W_MLP2"], h, p["b_MLP2"])
        if not np.all(np.isfinite(yhat.data)):
            raise ValidationError("non-finite activation in fusion forward")
        return yhat, attn, xr

    def predict_one(self, x_rad_raw: np.ndarray, x_dl: np.ndarray,
                    already_standardized: bool = False) -> float:
        x = x_rad_raw if already_standardized else \
            (x_rad_raw - self.scaler_mean) / self.scaler_std
        if already_standardized and abs(float(np.mean(x))) > 10:
            warnings.warn("radiomic vector looks unstandardized "
                          "(|mean| sanity check failed)")
        yhat, _, _ = self.forward(x, x_dl)
        return float(yhat.data[0])

    # -- attribution -------------------------------------------------------

    def attribute(self, x_rad_raw: np.ndarray, x_dl: np.ndarray, k: int = 5,
                  already_standardized: bool = False) -> AttentionTrace:
        if self.mode != "xa":
            raise ValidationError("attribution requires the cross-attention mode")
        if k > self.feat_dim:
            raise ValidationError(f"top-k {k} exceeds feature count {self.feat_dim}")
        x = x_rad_raw if already_standardized else \
            (x_rad_raw - self.scaler_mean) / self.scaler_std
        yhat, attn, xr = self.forward(x, x_dl, want_input_grad=True)
        yhat.backward()

        # (a) attention-route score: |W_Q| weighted by each row's deviation
        # from the uniform attention profile
        row_dev = np.abs(attn - 1.0 / attn.shape[1]).sum(axis=1)
        s_attn = np.abs(self.params["W_Q"].data).T @ row_dev
        # (b) input-gradient cross-check
        s_grad = np.abs(x * xr.grad)

        names = self.feature_names or tuple(
            f"f{i}" for i in range(self.feat_dim))
        order = np.argsort(-s_attn, kind="stable")[:k]
        top = [(names[i], float(s_attn[i])) for i in order]
        rollup = {}
        for name, score in zip(names, s_attn):
            cls = name.split(".")[0]
            rollup[cls] = rollup.get(cls, 0.0) + float(score)
        return AttentionTrace(attention=attn, scores_attn=s_attn,
                              scores_grad=s_grad, top_k=top,
                              class_rollup=rollup)

    # -- checkpoint --------------------------------------------------------

    def to_tensors(self) -> dict:
        out = {name: t.data for name, t in self.params.items()}
        out["scaler.mean"] = self.scaler_mean
        out["scaler.std"] = self.scaler_std
        out["meta"] = np.array([
            0.0 if self.mode == "xa" else 1.0,
            1.0 if self.layer_norm else 0.0,
            self.feat_dim, self.embed_dim, self.d_e,
        ])
        return out

    @classmethod
    def from_tensors(cls, tensors: dict) -> "FusionModel":
        meta = tensors["meta"]
        model = cls(feat_dim=int(meta[2]), embed_dim=int(meta[3]),
                    d_e=int(meta[4]),
                    mode="xa" if meta[0] == 0 else "concat",
                    layer_norm=bool(meta[1]))
        for name in model.params:
            model.params[name].data = np.asarray(tensors[name], dtype=np.float64)
        model.scaler_mean = np.asarray(tensors["scaler.mean"], dtype=np.float64)
        model.scaler_std = np.asarray(tensors["scaler.std"], dtype=np.float64)
        return model


def train(samples: list[Sample], cfg: TrainConfig,
          val_samples: list[Sample] | None = None):
    """Mini-batch Adam on the summed squared-error loss. Deterministic given
    cfg.seed; returns the parameters of the best-validation epoch and the
    per-epoch (train_loss, val_mae) history."""
    if not samples:
        raise ValidationError("empty sample list")
    rng = np.random.default_rng(cfg.seed)
    feat_dim = len(samples[0].radiomics.values)
    embed_dim = len(samples[0].embedding.values)

    if val_samples is None:
        n_val = int(round(cfg.val_fraction * len(samples)))
        if n_val and len(samples) > 1:
            perm = rng.permutation(len(samples))
            val_samples = [samples[i] for i in perm[:n_val]]
            samples = [samples[i] for i in perm[n_val:]]
        else:
            val_samples = samples

    model = FusionModel(feat_dim, embed_dim, d_e=cfg.d_e, mode=cfg.mode,
                        layer_norm=cfg.layer_norm, rng=rng)
    state = ad.AdamState(model.params, lr=cfg.lr,
                         weight_decay=cfg.weight_decay)

    X = [(s.radiomics.values, s.embedding.values, s.ga_days) for s in samples]
    Xv = [(s.radiomics.values, s.embedding.values, s.ga_days)
          for s in val_samples]

    history = []
    best = (np.inf, -1, None)
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(X))
        total_loss = 0.0
        for start in range(0, len(X), cfg.batch_size):
            batch = order[start:start + cfg.batch_size]
            for t in model.params.values():
                t.zero_grad()
            terms = []
            for idx in batch:
                xr, xd, y = X[idx]
                yhat, _, _ = model.forward(xr, xd)
                terms.append(ad.squared_error(yhat, y))
            loss = ad.add_scalars(terms)
            if not np.isfinite(loss.data):
                raise ValidationError(
                    f"non-finite loss at epoch {epoch}: {loss.data}")
            loss.backward()
            ad.adam_step(model.params, state)
            total_loss += float(loss.data)
        val_mae = float(np.mean([
            abs(model.forward(xr, xd)[0].data[0] - y) for xr, xd, y in Xv]))
        history.append((epoch, total_loss, val_mae))
        if val_mae < best[0]:  # ties keep the earliest epoch
            best = (val_mae, epoch,
                    {k: t.data.copy() for k, t in model.params.items()})
    for k, t in model.params.items():
        t.data = best[2][k]
    return model, history
