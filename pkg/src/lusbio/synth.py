"""Synthetic lung-ultrasound oracle.

Generates a fully labeled dataset whose ground truth is known by
construction: a latent per-patient severity drives a per-video biomarker
vector through committed Bernoulli tables, the biomarkers drive a
procedural B-scan renderer, and the remaining labels are deterministic
functions of the latents (optionally flipped with a committed noise rate).

All generating constants live in this file so every number downstream is
reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import Dataset, VideoRecord, rng_for
from .schema import (
    CANONICAL_SCHEMA,
    InvalidInputError,
    N_DISEASE_CLASSES,
    N_SF_BINS,
    N_SEVERITY_CLASSES,
)

# Latent severity prior for a new patient.
SEVERITY_PRIOR = np.array([0.3, 0.3, 0.2, 0.2])

# Per-severity Bernoulli rate for each of the 38 biomarker checkboxes,
# rows = severity 0..3, concatenated per category in canonical order.
# Healthy lungs light up A-line boxes; sick lungs light up B-line,
# pleural-pathology, consolidation, and effusion boxes.
BIOMARKER_RATES = np.array([
    # A-line(5)                  B-line(5)                    B-origin(3)
    # Pleural thickness(4)       Pleural location(3)
    # Pleural indents(5)         Pleural breaks(5)
    # Consolidation(5)           Effusion(3)
    [0.95, 0.90, 0.80, 0.70, 0.60,  0.05, 0.03, 0.02, 0.01, 0.01,  0.05, 0.02, 0.02,
     0.10, 0.05, 0.02, 0.01,        0.60, 0.30, 0.10,
     0.05, 0.03, 0.02, 0.01, 0.01,  0.04, 0.02, 0.02, 0.01, 0.01,
     0.02, 0.01, 0.01, 0.01, 0.01,  0.02, 0.01, 0.01],
    [0.60, 0.50, 0.40, 0.30, 0.20,  0.50, 0.35, 0.20, 0.10, 0.05,  0.50, 0.20, 0.10,
     0.40, 0.20, 0.10, 0.05,        0.50, 0.30, 0.20,
     0.40, 0.25, 0.15, 0.08, 0.04,  0.35, 0.20, 0.12, 0.06, 0.03,
     0.25, 0.15, 0.08, 0.04, 0.02,  0.15, 0.08, 0.04],
    [0.30, 0.20, 0.15, 0.10, 0.05,  0.80, 0.70, 0.50, 0.30, 0.20,  0.70, 0.40, 0.20,
     0.70, 0.50, 0.30, 0.15,        0.40, 0.35, 0.25,
     0.60, 0.50, 0.35, 0.20, 0.10,  0.55, 0.45, 0.30, 0.18, 0.09,
     0.50, 0.40, 0.30, 0.18, 0.10,  0.40, 0.25, 0.12],
    [0.10, 0.05, 0.05, 0.02, 0.02,  0.95, 0.90, 0.80, 0.70, 0.60,  0.80, 0.60, 0.40,
     0.90, 0.70, 0.50, 0.30,        0.30, 0.40, 0.30,
     0.85, 0.70, 0.55, 0.40, 0.25,  0.80, 0.65, 0.50, 0.35, 0.20,
     0.80, 0.70, 0.55, 0.40, 0.30,  0.70, 0.50, 0.30],
])
assert BIOMARKER_RATES.shape == (N_SEVERITY_CLASSES, 38)

# Feature index ranges, canonical order.
A_LINE = slice(0, 5)
B_LINE = slice(5, 10)
B_ORIGIN = slice(10, 13)
P_THICK = slice(13, 17)
P_LOC = slice(17, 20)
P_INDENT = slice(20, 25)
P_BREAK = slice(25, 30)
CONSOL = slice(30, 35)
EFFUSION = slice(35, 38)

# Severity -> S/F bin before label noise (sicker lung, lower oxygenation).
SF_FROM_SEVERITY = np.array([0, 1, 2, 3])


def disease_lookup(biomarkers: np.ndarray) -> int:
    """Deterministic disease category for a ground-truth biomarker vector.

    A committed decision list over per-category checkbox counts; the
    noiseless disease label is exactly this function of the biomarkers.
    """
    b = np.asarray(biomarkers)
    a = int(b[A_LINE].sum())
    bl = int(b[B_LINE].sum())
    th = int(b[P_THICK].sum())
    brk = int(b[P_BREAK].sum())
    con = int(b[CONSOL].sum())
    eff = int(b[EFFUSION].sum())
    if eff >= 2:
        return 4  # Cardiogenic Pulmonary Edema
    if con >= 3:
        return 1  # COVID Pneumonia
    if bl >= 3 and brk >= 2:
        return 2  # Interstitial Lung Disease
    if th >= 2 and bl <= 2:
        return 3  # Asthma/COPD Exacerbation
    if a >= 3 and bl <= 1:
        return 0  # Healthy
    if bl >= 2:
        return 5  # Other lung
    return 6  # Other non-lung


@dataclass(frozen=True)
class SynthParams:
    n_patients: int
    videos_per_patient: int = 3
    label_noise: float = 0.0
    pixel_noise_sigma: float = 0.03
    seed: int = 0
    frame_side: int = 32
    t_raw: int = 30

    def __post_init__(self):
        if self.n_patients <= 0:
            raise InvalidInputError("n_patients must be positive")
        if self.videos_per_patient < 2:
            raise InvalidInputError("videos_per_patient must be >= 2")
        if not (0.0 <= self.label_noise < 1.0):
            raise InvalidInputError("label_noise must be in [0,1)")
        if self.pixel_noise_sigma < 0:
            raise InvalidInputError("pixel_noise_sigma must be >= 0")
        if self.t_raw < 15 or self.frame_side < 16:
            raise InvalidInputError("t_raw >= 15 and frame_side >= 16 required")


def render_video(biomarkers: np.ndarray, t_raw: int, side: int,
                 rng: np.random.Generator) -> np.ndarray:
    """Procedural B-scan: pleural band, A-line echoes, B-line streaks,
    indents/breaks, consolidation blob, effusion sub-band, breathing jitter.
    """
    b = np.asarray(biomarkers)
    a_count = int(b[A_LINE].sum())
    a_strength = 0.30 + 0.06 * a_count
    bl_count = int(b[B_LINE].sum())
    origin_drop = 2 if b[B_ORIGIN].sum() >= 2 else 0
    thickness = 1 + int(b[P_THICK].sum())
    loc_idx = int(np.argmax(b[P_LOC])) if b[P_LOC].any() else 0
    pleural_row = side // 5 + 3 * loc_idx
    n_indent = int(b[P_INDENT].sum())
    n_break = int(b[P_BREAK].sum())
    con_size = int(b[CONSOL].sum())
    eff_size = int(b[EFFUSION].sum())

    bl_cols = rng.permutation(side - 4)[:bl_count] + 2
    indent_cols = rng.permutation(side - 2)[:n_indent] + 1
    break_cols = rng.permutation(max(1, side - 4))[:n_break] + 2
    con_col = int(rng.integers(4, side - 4))
    phase = rng.uniform(0, 2 * np.pi)

    rows = np.arange(side)
    base = np.empty((t_raw, side, side))
    for t in range(t_raw):
        jitter = int(round(1.2 * np.sin(2 * np.pi * t / t_raw + phase)))
        img = np.full((side, side), 0.12)
        img *= 1.0 - 0.3 * (rows / side)[:, None]  # gentle depth falloff
        pr = np.clip(pleural_row + jitter, 1, side - 6)

        # pleural band
        img[pr:pr + thickness, :] = 0.9
        for c in indent_cols:
            img[pr, c] = 0.3  # notch in the top of the band
        for c in break_cols:
            img[pr:pr + thickness, c:c + 2] = 0.1  # full-thickness break

        # A-line reverberation echoes below the pleura
        spacing = max(4, pr)
        for i in range(1, a_count + 1):
            r = pr + i * spacing
            if r < side:
                img[r, :] = np.maximum(img[r, :], a_strength - 0.05 * i)

        # B-line vertical streaks from (sub-)pleura to the bottom
        start = pr + thickness + origin_drop
        for c in bl_cols:
            img[start:, c] = 0.65

        # consolidation blob below the pleura
        if con_size:
            rad = 1 + con_size // 2
            cr = min(pr + thickness + 3 + rad, side - rad - 1)
            yy, xx = np.ogrid[:side, :side]
            mask = (yy - cr) ** 2 + (xx - con_col) ** 2 <= rad ** 2
            img[mask] = 0.75

        # effusion: anechoic sub-band with a bright floor line
        if eff_size:
            top = min(pr + thickness + 1, side - 2 * eff_size - 2)
            img[top:top + 2 * eff_size, :] = 0.02
            img[top + 2 * eff_size, :] = np.maximum(img[top + 2 * eff_size, :], 0.5)

        base[t] = img
    return np.clip(base, 0.0, 1.0)


def _maybe_flip(label: int, n_classes: int, noise: float, rng: np.random.Generator) -> int:
    if noise > 0 and rng.random() < noise:
        others = [k for k in range(n_classes) if k != label]
        return int(others[rng.integers(0, len(others))])
    return int(label)


def generate_synthetic(params: SynthParams) -> Dataset:
    """Deterministic synthetic dataset; equal params give identical data."""
    records = []
    for p in range(params.n_patients):
        patient_id = f"p{p:04d}"
        prng = rng_for(params.seed, "patient", p)
        severity = int(prng.choice(N_SEVERITY_CLASSES, p=SEVERITY_PRIOR))
        for v in range(params.videos_per_patient):
            vrng = rng_for(params.seed, "video", p, v)
            bio = (vrng.random(38) < BIOMARKER_RATES[severity]).astype(np.float64)
            frames = render_video(bio, params.t_raw, params.frame_side, vrng)
            if params.pixel_noise_sigma > 0:
                frames = np.clip(
                    frames + vrng.normal(0, params.pixel_noise_sigma, frames.shape),
                    0.0, 1.0)
            sf_bin = _maybe_flip(int(SF_FROM_SEVERITY[severity]), N_SF_BINS,
                                 params.label_noise, vrng)
            disease = _maybe_flip(disease_lookup(bio), N_DISEASE_CLASSES,
                                  params.label_noise, vrng)
            records.append(VideoRecord(
                video_id=f"{patient_id}v{v}",
                patient_id=patient_id,
                frames=frames,
                biomarkers=bio,
                severity=severity,
                sf_bin=sf_bin,
                disease=disease,
            ))
    return Dataset(records=tuple(records), schema=CANONICAL_SCHEMA)
