"""Signal windowing, wavelet decomposition, and energy features.

A raw multichannel trial is cut into overlapped fixed-width windows; each
window channel goes through a 4-level pyramidal decomposition with the
biorthogonal spline 2.2 analysis bank, and the per-band energies (sum of
squared coefficients) are concatenated channel-major into one feature
vector. All functions here are pure.
"""

import os
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DataError, ShapeError

__all__ = [
    "BIOR22_DEC_LO",
    "BIOR22_DEC_HI",
    "RawTrial",
    "Segment",
    "WaveletBands",
    "FeatureVector",
    "segment_trial",
    "dwt_bior22",
    "instant_wavelet_energy",
    "extract_features",
    "featurize_trial",
    "parse_trial_file",
]

# Biorthogonal spline 2.2 analysis bank: sqrt(2) * [0, -1/8, 1/4, 3/4,
# 1/4, -1/8] and sqrt(2) * [0, 1/4, -1/2, 1/4, 0, 0], written out so the
# features are bit-stable across platforms.
BIOR22_DEC_LO = np.array([
    0.0,
    -0.17677669529663689,
    0.35355339059327379,
    1.0606601717798212,
    0.35355339059327379,
    -0.17677669529663689,
])
BIOR22_DEC_HI = np.array([
    0.0,
    0.35355339059327379,
    -0.70710678118654757,
    0.35355339059327379,
    0.0,
    0.0,
])

_FILTER_LEN = 6


@dataclass
class RawTrial:
    """One recorded trial: channels x samples plus identifying metadata."""

    samples: np.ndarray
    sample_rate: float
    trial_id: str = ""
    session_id: str = ""
    subject_id: str = ""
    label: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 2:
            raise ShapeError(
                f"trial samples must be (channels, samples), "
                f"got shape {self.samples.shape}"
            )
        if self.sample_rate <= 0:
            raise DataError(f"sample rate must be > 0, got {self.sample_rate}")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[0]

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    @property
    def duration(self) -> float:
        return self.n_samples / self.sample_rate


@dataclass
class Segment:
    """One window of a trial; all segments of a trial share their shape."""

    samples: np.ndarray
    start_time: float


@dataclass
class WaveletBands:
    """Pyramidal decomposition output: details d1..dL plus approximation."""

    details: list
    approx: np.ndarray


@dataclass
class FeatureVector:
    values: np.ndarray
    provenance: Optional[tuple] = None   # (trial_id, segment index)


def _round_half_up(v: float) -> int:
    return int(np.floor(v + 0.5))


def segment_trial(trial: RawTrial, window_s: float = 0.5,
                  step_s: float = 0.1) -> list:
    """Cut a trial into overlapped windows starting at 0, step, 2*step, ...

    Window and step lengths are rounded to samples once (half up) and
    reused, so every segment has the same shape.
    """
    win = _round_half_up(window_s * trial.sample_rate)
    step = _round_half_up(step_s * trial.sample_rate)
    if win < 1 or step < 1:
        raise DataError(
            f"window {window_s}s / step {step_s}s collapse to zero samples "
            f"at {trial.sample_rate} Hz"
        )
    if trial.n_samples < win:
        raise DataError(
            f"trial {trial.trial_id!r} has {trial.n_samples} samples, "
            f"shorter than one {win}-sample window"
        )
    segments = []
    for start in range(0, trial.n_samples - win + 1, step):
        segments.append(
            Segment(
                samples=trial.samples[:, start:start + win],
                start_time=start / trial.sample_rate,
            )
        )
    return segments


def _symmetric_fold(idx: np.ndarray, n: int) -> np.ndarray:
    """Map arbitrary indices onto [0, n) by half-sample symmetric reflection
    (x[-1] mirrors x[0], x[n] mirrors x[n-1], repeating)."""
    j = idx % (2 * n)
    return np.where(j < n, j, 2 * n - 1 - j)


def _analysis_step(x: np.ndarray):
    """One decomposition level: symmetric-pad, convolve with the analysis
    pair, keep every second sample. Output length is ceil(n / 2)."""
    n = x.shape[0]
    ext = x[_symmetric_fold(np.arange(-(_FILTER_LEN - 1), n + _FILTER_LEN - 1), n)]
    out_len = (n + 1) // 2
    pos = (2 * np.arange(out_len) + _FILTER_LEN)[:, None] - np.arange(_FILTER_LEN)[None, :]
    windows = ext[pos]
    return windows @ BIOR22_DEC_LO, windows @ BIOR22_DEC_HI


def dwt_bior22(x, levels: int = 4) -> WaveletBands:
    """Multi-level biorthogonal-2.2 decomposition of a 1-D signal.

    Returns the detail bands from finest (d1) to coarsest, plus the final
    approximation. Needs at least 2**levels samples.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ShapeError(f"expected a 1-D signal, got shape {x.shape}")
    if levels < 1:
        raise DataError(f"levels must be >= 1, got {levels}")
    if x.shape[0] < 2 ** levels:
        raise DataError(
            f"signal of length {x.shape[0]} is too short for {levels} "
            f"decomposition levels (needs >= {2 ** levels})"
        )
    details = []
    approx = x
    for _ in range(levels):
        approx, detail = _analysis_step(approx)
        details.append(detail)
    return WaveletBands(details=details, approx=approx)


def instant_wavelet_energy(bands: WaveletBands,
                           log_transform: bool = False) -> np.ndarray:
    """Per-band energy: sum of squared coefficients of d1..dL then the
    approximation. The optional log10 maps zero energies to -30."""
    energies = [float(np.square(d).sum()) for d in bands.details]
    energies.append(float(np.square(bands.approx).sum()))
    e = np.array(energies)
    if log_transform:
        e = np.log10(np.maximum(e, 1e-30))
    return e


def extract_features(segment: Segment, levels: int = 4,
                     log_energy: bool = False,
                     provenance: Optional[tuple] = None) -> FeatureVector:
    """Concatenate per-channel band energies, channel-major
    (channel 0 bands d1..a, then channel 1, ...)."""
    samples = np.asarray(segment.samples, dtype=float)
    blocks = [
        instant_wavelet_energy(dwt_bior22(samples[ch], levels), log_energy)
        for ch in range(samples.shape[0])
    ]
    return FeatureVector(values=np.concatenate(blocks), provenance=provenance)


def featurize_trial(trial: RawTrial, window_s: float = 0.5,
                    step_s: float = 0.1, levels: int = 4,
                    log_energy: bool = False) -> list:
    """Segment a trial and extract one feature vector per segment."""
    return [
        extract_features(seg, levels, log_energy,
                         provenance=(trial.trial_id, idx))
        for idx, seg in enumerate(segment_trial(trial, window_s, step_s))
    ]


def parse_trial_file(path) -> RawTrial:
    """Read one trial from delimiter-separated text.

    The first line is a header of the form
    ``# rate=<Hz> subject=<id> session=<id> trial=<id> label=<int>``
    followed by one row per sample with a fixed number of channel columns
    (comma or whitespace separated).
    """
    name = os.fspath(path)
    with open(name, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    header_no = None
    for lineno, line in enumerate(lines, start=1):
        if line.strip():
            header_no = lineno
            break
    if header_no is None:
        raise DataError(f"{name}: file is empty")
    header = lines[header_no - 1].strip()
    if not header.startswith("#"):
        raise DataError(f"{name}:{header_no}: expected '# key=value ...' header")
    fields = {}
    for token in header[1:].split():
        if "=" not in token:
            raise DataError(f"{name}:{header_no}: bad header token {token!r}")
        key, _, value = token.partition("=")
        fields[key] = value
    for key in ("rate", "subject", "session", "trial", "label"):
        if key not in fields:
            raise DataError(f"{name}:{header_no}: header is missing {key!r}")
    try:
        rate = float(fields["rate"])
        label = int(fields["label"])
    except ValueError as exc:
        raise DataError(f"{name}:{header_no}: {exc}") from None

    rows = []
    n_cols = None
    for lineno in range(header_no + 1, len(lines) + 1):
        line = lines[lineno - 1].strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",") if "," in line else line.split()
        if n_cols is None:
            n_cols = len(parts)
        elif len(parts) != n_cols:
            raise DataError(
                f"{name}:{lineno}: expected {n_cols} columns, got {len(parts)}"
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise DataError(f"{name}:{lineno}: {exc}") from None
    if not rows:
        raise DataError(f"{name}: no sample rows")

    return RawTrial(
        samples=np.array(rows).T,
        sample_rate=rate,
        trial_id=fields["trial"],
        session_id=fields["session"],
        subject_id=fields["subject"],
        label=label,
    )
