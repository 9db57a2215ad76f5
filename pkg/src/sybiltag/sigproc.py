"""Trace processing: smoothing, backscatter segmentation, signature extraction
and profile windowing.

A received trace carries a constant direct-path level plus, inside the
backscatter region, each tag's reflection switched on and off by that tag's
bit pattern. Tags reflect strictly in turn, so the region is the
concatenation of K per-tag blocks.
"""
import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

logger = logging.getLogger(__name__)

TEMPLATE_SEED = 0x5EED


@dataclass(frozen=True)
class BitTemplate:
    """Known on/off pattern of every tag.

    ``bits`` has shape (K, bits_per_tag); row k is tag k's pattern.
    """

    bits: np.ndarray
    samples_per_bit: int

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=np.int8)
        if bits.ndim != 2:
            raise ValueError("bits must be a (K, bits_per_tag) array")
        if not np.isin(bits, (0, 1)).all():
            raise ValueError("bits must be 0/1")
        if self.samples_per_bit < 1:
            raise ValueError("samples_per_bit must be >= 1")
        for k, row in enumerate(bits):
            if row.all() or not row.any():
                raise ValueError(f"tag {k} pattern needs both reflecting and non-reflecting bits")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    @property
    def num_tags(self):
        return self.bits.shape[0]

    @property
    def bits_per_tag(self):
        return self.bits.shape[1]

    @property
    def tag_length(self):
        """Samples occupied by one tag's block."""
        return self.bits_per_tag * self.samples_per_bit

    @property
    def length(self):
        """Total template length T in samples."""
        return self.num_tags * self.tag_length

    def tag_masks(self):
        """(K, tag_length) boolean array, True where the tag reflects."""
        return np.repeat(self.bits, self.samples_per_bit, axis=1).astype(bool)

    def expanded(self):
        """Sample-level 0/1 template i(t) of length T."""
        return self.tag_masks().reshape(-1).astype(float)


def make_template(num_tags, bits_per_tag=16, samples_per_bit=50, seed=TEMPLATE_SEED):
    """Fixed pseudorandom template shared by every participant.

    Each tag's pattern starts and ends with a 0 bit, so reflecting runs never
    touch the block edges and the correlation peak is a symmetric tent.
    """
    if bits_per_tag < 3:
        raise ValueError("bits_per_tag must be >= 3 (two guard bits plus payload)")
    rng = np.random.default_rng([seed, num_tags, bits_per_tag])
    bits = np.zeros((num_tags, bits_per_tag), dtype=np.int8)
    for k in range(num_tags):
        while True:
            inner = rng.integers(0, 2, size=bits_per_tag - 2)
            if inner.any():
                break
        bits[k, 1:-1] = inner
    return BitTemplate(bits, samples_per_bit)


def default_smoothing_window(samples_per_bit):
    """One fifth of a bit, bumped to the next odd count.

    An odd window keeps the smoothed-to-raw onset offset an integer.
    """
    w = max(1, samples_per_bit // 5)
    return w if w % 2 == 1 else w + 1


def smoothing_offset(window):
    """Index shift between a smoothed peak and the raw backscatter onset."""
    return (window - 1) // 2


def moving_average(samples, window):
    """output[n] = mean(samples[n:n + window]); length shrinks by window - 1."""
    samples = np.asarray(samples, dtype=float)
    if window < 1:
        raise ValueError("window must be >= 1")
    if window > len(samples):
        raise ValueError(f"window {window} larger than trace length {len(samples)}")
    if window == 1:
        return samples.copy()
    return sliding_window_view(samples, window).mean(axis=1)


def correlate_template(smoothed, template):
    """c(n) = sum_t s(n + t) * i(t) for every full-overlap position n."""
    smoothed = np.asarray(smoothed, dtype=float)
    pattern = template.expanded()
    if len(smoothed) < len(pattern):
        raise ValueError(f"trace of {len(smoothed)} samples is shorter than template ({len(pattern)})")
    return np.correlate(smoothed, pattern, mode="valid")


def segment_backscatter(smoothed, template):
    """Locate the backscatter region by template correlation.

    Returns ``(t_start, t_end, segments)`` where ``segments`` is the list of K
    per-tag blocks of ``smoothed[t_start:t_end]``. Ties resolve to the
    smallest index.
    """
    c = correlate_template(smoothed, template)
    t_start = int(np.argmax(c))
    t_end = t_start + template.length
    return t_start, t_end, split_tags(np.asarray(smoothed, dtype=float)[t_start:t_end], template)


def split_tags(region, template):
    region = np.asarray(region, dtype=float)
    if len(region) != template.length:
        raise ValueError(f"region has {len(region)} samples, template needs {template.length}")
    return list(region.reshape(template.num_tags, template.tag_length))


@dataclass(frozen=True)
class MultipathSignature:
    reflections: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.reflections, dtype=float)
        if r.ndim != 1:
            raise ValueError("reflections must be one-dimensional")
        if not np.isfinite(r).all():
            raise ValueError("reflections must be finite")
        r.setflags(write=False)
        object.__setattr__(self, "reflections", r)

    def __len__(self):
        return len(self.reflections)


def extract_signature(segments, template):
    """Per-tag reflection: mean of reflecting samples minus mean of the rest."""
    if len(segments) != template.num_tags:
        raise ValueError(f"expected {template.num_tags} tag segments, got {len(segments)}")
    masks = template.tag_masks()
    out = np.empty(template.num_tags)
    for k, (seg, mask) in enumerate(zip(segments, masks)):
        seg = np.asarray(seg, dtype=float)
        if len(seg) != template.tag_length:
            raise ValueError(f"tag {k} segment has {len(seg)} samples, expected {template.tag_length}")
        if mask.all() or not mask.any():
            raise ValueError(f"tag {k} needs both reflecting and non-reflecting samples")
        out[k] = seg[mask].mean() - seg[~mask].mean()
    return MultipathSignature(out)


def trace_signature(samples, template, window=None):
    """Full per-trace chain: smooth, locate onset, extract from the raw trace.

    The onset is found on the smoothed trace and shifted back by the window's
    centre offset; reflections are then read from the unsmoothed samples so
    bit edges stay sharp. Returns ``(signature, onset)``.
    """
    samples = np.asarray(samples, dtype=float)
    if window is None:
        window = default_smoothing_window(template.samples_per_bit)
    smoothed = moving_average(samples, window)
    t_start, _, _ = segment_backscatter(smoothed, template)
    onset = min(t_start + smoothing_offset(window), len(samples) - template.length)
    region = samples[onset:onset + template.length]
    return extract_signature(split_tags(region, template), template), onset


@dataclass(frozen=True)
class SignalProfile:
    """L successive signatures of one claimed ID, rows in slot order."""

    signatures: np.ndarray
    claimed_id: str
    slots: tuple = field(default=())

    def __post_init__(self):
        s = np.asarray(self.signatures, dtype=float)
        if s.ndim != 2:
            raise ValueError("signatures must be an (L, K) matrix")
        if self.slots and len(self.slots) != s.shape[0]:
            raise ValueError("one slot index per row required")
        if any(b <= a for a, b in zip(self.slots, self.slots[1:])):
            raise ValueError("profile rows must be in increasing slot order")
        s.setflags(write=False)
        object.__setattr__(self, "signatures", s)
        object.__setattr__(self, "slots", tuple(int(x) for x in self.slots))

    @property
    def length(self):
        return self.signatures.shape[0]

    @property
    def num_tags(self):
        return self.signatures.shape[1]

    @property
    def window(self):
        return None if not self.slots else self.slots[0]


def build_profiles(stream, L):
    """Group a (slot, claimed_id, signature) stream into tumbling windows.

    Window w covers slots [w*L, (w+1)*L). Windows past the last complete one
    are dropped silently; a window with a missing slot is dropped for that ID
    with a warning. The stream may arrive in any order.

    Returns ``{window_index: {claimed_id: SignalProfile}}``.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    by_id = defaultdict(dict)
    max_slot = -1
    for slot, claimed_id, sig in stream:
        slot = int(slot)
        if slot in by_id[claimed_id]:
            raise ValueError(f"duplicate signature for {claimed_id!r} at slot {slot}")
        by_id[claimed_id][slot] = sig
        max_slot = max(max_slot, slot)
    num_windows = (max_slot + 1) // L
    out = {}
    for w in range(num_windows):
        slots = range(w * L, (w + 1) * L)
        for claimed_id in sorted(by_id):
            got = by_id[claimed_id]
            missing = [s for s in slots if s not in got]
            if missing:
                logger.warning("dropping window %d of %s: missing slots %s", w, claimed_id, missing)
                continue
            rows = np.stack([_reflections(got[s]) for s in slots])
            out.setdefault(w, {})[claimed_id] = SignalProfile(rows, claimed_id, tuple(slots))
    return out


def _reflections(sig):
    return sig.reflections if isinstance(sig, MultipathSignature) else np.asarray(sig, dtype=float)


def write_signatures_csv(stream, path):
    """One row per signature: slot, id, p_1..p_K."""
    stream = sorted(stream, key=lambda r: (int(r[0]), str(r[1])))
    K = len(_reflections(stream[0][2])) if stream else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["slot", "id"] + [f"p_{k + 1}" for k in range(K)])
        for slot, claimed_id, sig in stream:
            w.writerow([int(slot), claimed_id] + [f"{v:.6f}" for v in _reflections(sig)])
