"""Hinge adversarial losses, discriminator feature loss and SI-SDR."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .audio import AudioBuffer
from .errors import DomainError, ShapeError
from .graph import DiscriminatorOutput

SI_SDR_CAP_DB = 100.0


@dataclass(frozen=True)
class LossConfig:
    rec_weight: float = 100.0
    num_scales: int = 3
    num_feature_layers: int = 6


@dataclass(frozen=True)
class LossBreakdown:
    d_loss: float
    g_adv: float
    g_rec: float
    g_total: float

    def as_dict(self) -> dict:
        return {"d_loss": self.d_loss, "g_adv": self.g_adv, "g_rec": self.g_rec, "g_total": self.g_total}


def _check_logits(a: DiscriminatorOutput, b: DiscriminatorOutput) -> None:
    if a.num_scales != b.num_scales:
        raise ShapeError(f"scale count mismatch: {a.num_scales} vs {b.num_scales}")
    for k, (la, lb) in enumerate(zip(a.logits, b.logits)):
        if np.shape(la) != np.shape(lb):
            raise ShapeError(f"scale {k}: logit shapes {np.shape(la)} vs {np.shape(lb)}")


def _scale_mean(logits: list, fn) -> float:
    if not logits:
        raise ShapeError("no discriminator scales")
    return float(np.mean([np.mean(fn(np.asarray(l, dtype=np.float64))) for l in logits]))


def discriminator_loss(real_out: DiscriminatorOutput, fake_out: DiscriminatorOutput) -> float:
    """Mean over scales of the time-averaged hinge ``relu(1 - D(y)) + relu(1 + D(G(x)))``."""
    _check_logits(real_out, fake_out)
    real = _scale_mean(real_out.logits, lambda d: np.maximum(0.0, 1.0 - d))
    fake = _scale_mean(fake_out.logits, lambda d: np.maximum(0.0, 1.0 + d))
    return real + fake


def generator_adv_loss(fake_out: DiscriminatorOutput) -> float:
    """Mean over scales of the time-averaged ``relu(1 - D(G(x)))``."""
    return _scale_mean(fake_out.logits, lambda d: np.maximum(0.0, 1.0 - d))


def feature_loss(real_out: DiscriminatorOutput, fake_out: DiscriminatorOutput) -> float:
    """Mean absolute feature difference, averaged over channels and time per layer,
    then over layers and scales."""
    if len(real_out.features) != len(fake_out.features):
        raise ShapeError("scale count mismatch in features")
    terms = []
    for k, (fr, ff) in enumerate(zip(real_out.features, fake_out.features)):
        if len(fr) != len(ff):
            raise ShapeError(f"scale {k}: layer count {len(fr)} vs {len(ff)}")
        for l, (a, b) in enumerate(zip(fr, ff)):
            a = np.asarray(a, dtype=np.float64)
            b = np.asarray(b, dtype=np.float64)
            if a.shape != b.shape:
                raise ShapeError(f"scale {k} layer {l}: {a.shape} vs {b.shape}")
            terms.append(np.mean(np.abs(a - b)))
    if not terms:
        raise ShapeError("no discriminator features")
    layers = {len(f) for f in real_out.features}
    if len(layers) != 1:
        raise ShapeError("scales have different numbers of feature layers")
    return float(np.sum(terms) / (len(real_out.features) * layers.pop()))


def compose(d_loss: float, g_adv: float, g_rec: float, cfg: LossConfig = LossConfig()) -> LossBreakdown:
    return LossBreakdown(float(d_loss), float(g_adv), float(g_rec), float(g_adv + cfg.rec_weight * g_rec))


def total_generator_loss(real_out: DiscriminatorOutput, fake_out: DiscriminatorOutput,
                         cfg: LossConfig = LossConfig()) -> LossBreakdown:
    return compose(discriminator_loss(real_out, fake_out), generator_adv_loss(fake_out),
                   feature_loss(real_out, fake_out), cfg)


def si_sdr(estimate: AudioBuffer | np.ndarray, reference: AudioBuffer | np.ndarray) -> float:
    """Scale-invariant SDR in dB.

    The reference is scaled by the least-squares gain before the energy
    ratio is taken. Results are clipped to [-100, 100] dB; residuals below
    1e-12 of the target energy count as exact and give +100 dB.
    """
    est = np.asarray(getattr(estimate, "samples", estimate), dtype=np.float64)
    ref = np.asarray(getattr(reference, "samples", reference), dtype=np.float64)
    if est.shape != ref.shape:
        raise ShapeError(f"length mismatch: {est.shape} vs {ref.shape}")
    ref_energy = np.dot(ref, ref)
    if ref_energy == 0:
        raise DomainError("reference signal is all zeros")
    target = (np.dot(est, ref) / ref_energy) * ref
    target_energy = np.dot(target, target)
    if target_energy == 0:
        return -SI_SDR_CAP_DB
    residual = target - est
    residual_energy = np.dot(residual, residual)
    if residual_energy <= 1e-12 * target_energy:
        return SI_SDR_CAP_DB
    return float(np.clip(10.0 * np.log10(target_energy / residual_energy), -SI_SDR_CAP_DB, SI_SDR_CAP_DB))
