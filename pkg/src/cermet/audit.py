"""Individual-secrecy audit of a secrecy code.

An eavesdropper sees a subset of the n coded channels. For each message index
j the audit measures how far the conditional distribution of M_j, given what
was seen, is from uniform (total variation distance, 0 meaning no
information). Messages are uniform over GF(2^m)^n.

``exhaustive_audit`` enumerates every message vector and is exact.
``sampled_audit`` is a Monte-Carlo screen for fields too large to enumerate.
"""

from __future__ import annotations

import enum
import itertools
from statistics import NormalDist
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import TooLarge
from .gf import DTYPE, mul_const
from .mrd import SecrecyCode

ENUMERATION_BITS = 24
MIN_SAMPLES = 10_000
FALSE_ALARM = 1e-4  # per-index false-flag budget, split across probes


class CiphertextPolicy(enum.Enum):
    OPAQUE = "opaque"            # encrypted channels reveal nothing
    TRANSPARENT = "transparent"  # encrypted channels reveal their coded symbols (broken cipher)


@dataclass(frozen=True)
class EavesdropperModel:
    observed_channels: frozenset
    ciphertext_policy: CiphertextPolicy = CiphertextPolicy.OPAQUE
    encrypted_channels: frozenset = frozenset({0})

    def __post_init__(self):
        object.__setattr__(self, "observed_channels", frozenset(self.observed_channels))
        object.__setattr__(self, "encrypted_channels", frozenset(self.encrypted_channels))
        object.__setattr__(self, "ciphertext_policy", CiphertextPolicy(self.ciphertext_policy))

    def visible(self, n: int) -> list:
        bad = [k for k in self.observed_channels if not 0 <= k < n]
        if bad:
            raise ValueError(f"observed channels {bad} out of range for n={n}")
        hidden = self.encrypted_channels if self.ciphertext_policy is CiphertextPolicy.OPAQUE else frozenset()
        return sorted(self.observed_channels - hidden)


@dataclass(frozen=True)
class LeakageReport:
    """Per message index: worst-case TV distance from uniform and an
    information estimate in bits. Sampled reports also carry a standard error
    and a flag per index."""

    tv: tuple
    mutual_information: tuple
    exact: bool = True
    stderr: tuple | None = None
    flags: tuple | None = None
    worst_subset: tuple | None = None
    by_size: dict = field(default_factory=dict)

    @property
    def worst_tv(self) -> float:
        return max(self.tv, default=0.0)

    @property
    def secure(self) -> bool:
        if self.flags is not None:
            return not any(self.flags)
        return self.worst_tv == 0


def _check_bound(code: SecrecyCode):
    bits = code.spec.m * code.n
    if bits > ENUMERATION_BITS:
        raise TooLarge(f"q^n = 2^{bits} exceeds the 2^{ENUMERATION_BITS} enumeration bound")


def _joint_counts(code: SecrecyCode, visible: list, j: int, chunk: int):
    """Unique (observation, M_j) keys with multiplicities over all messages."""
    m, n = code.spec.m, code.n
    mask = code.spec.q - 1
    total = 1 << (m * n)
    keys_acc, counts_acc = [], []
    for start in range(0, total, chunk):
        t = np.arange(start, min(start + chunk, total), dtype=np.int64)
        msgs = [((t >> (m * i)) & mask).astype(DTYPE) for i in range(n)]
        y = np.zeros(t.shape, dtype=np.int64)
        for pos, k in enumerate(visible):
            xk = np.zeros(t.shape, dtype=DTYPE)
            for i in range(n):
                g = code.G[k, i]
                if g:
                    xk ^= mul_const(g, msgs[i], code.spec)
            y |= xk.astype(np.int64) << (m * pos)
        key = (y << m) | msgs[j].astype(np.int64)
        u, c = np.unique(key, return_counts=True)
        keys_acc.append(u)
        counts_acc.append(c)
    keys = np.concatenate(keys_acc)
    counts = np.concatenate(counts_acc)
    if len(keys_acc) > 1:
        keys, inv = np.unique(keys, return_inverse=True)
        counts = np.bincount(inv, weights=counts).astype(np.int64)
    return keys, counts.astype(np.int64), total


def _tv_and_mi(keys, counts, total, m):
    q = 1 << m
    y = keys >> m
    _, inv = np.unique(y, return_inverse=True)
    c_y = np.bincount(inv, weights=counts).astype(np.int64)
    present = np.bincount(inv)
    dev = np.abs(q * counts - c_y[inv])
    num = np.bincount(inv, weights=dev).astype(np.int64) + (q - present) * c_y
    den = 2 * q * c_y
    worst = int(np.argmax(num / den))
    tv = Fraction(int(num[worst]), int(den[worst]))
    mi = float(np.sum(counts / total * np.log2(q * counts / c_y[inv])))
    return tv, max(mi, 0.0)


def exhaustive_audit(code: SecrecyCode, model: EavesdropperModel, chunk: int = 1 << 20) -> LeakageReport:
    _check_bound(code)
    visible = model.visible(code.n)
    if not visible:
        zeros = (0.0,) * code.n
        return LeakageReport(zeros, zeros)
    tvs, mis = [], []
    for j in range(code.n):
        keys, counts, total = _joint_counts(code, visible, j, chunk)
        tv, mi = _tv_and_mi(keys, counts, total, code.spec.m)
        tvs.append(float(tv))
        mis.append(mi)
    return LeakageReport(tuple(tvs), tuple(mis))


def all_subsets_audit(
    code: SecrecyCode,
    max_w: int,
    policy: CiphertextPolicy = CiphertextPolicy.TRANSPARENT,
    encrypted_channels=frozenset({0}),
) -> LeakageReport:
    """Worst case over every observed subset of size <= max_w.

    The default TRANSPARENT policy audits the coding layer alone: every
    observed channel counts as seen.
    """
    if not 0 <= max_w <= code.n:
        raise ValueError(f"max_w must be in [0, {code.n}]")
    _check_bound(code)
    n = code.n
    tv = [0.0] * n
    mi = [0.0] * n
    worst = [()] * n
    by_size = {}
    for w in range(max_w + 1):
        size_worst = 0.0
        for subset in itertools.combinations(range(n), w):
            rep = exhaustive_audit(code, EavesdropperModel(frozenset(subset), policy, encrypted_channels))
            for j in range(n):
                if rep.tv[j] > tv[j]:
                    tv[j], worst[j] = rep.tv[j], subset
                mi[j] = max(mi[j], rep.mutual_information[j])
            size_worst = max(size_worst, rep.worst_tv)
        by_size[w] = size_worst
    return LeakageReport(tuple(tv), tuple(mi), worst_subset=tuple(worst), by_size=by_size)


def _null_tv(samples: int, bins: int, rng, reps: int = 400):
    draws = rng.multinomial(samples, [1.0 / bins] * bins, size=reps)
    tvs = 0.5 * np.abs(draws / samples - 1.0 / bins).sum(axis=1)
    return float(tvs.mean()), float(tvs.std(ddof=1))


def sampled_audit(
    code: SecrecyCode,
    model: EavesdropperModel,
    samples: int = MIN_SAMPLES,
    seed=None,
    bits: int = 4,
    random_probes: int = 4,
) -> LeakageReport:
    """Monte-Carlo leakage screen.

    For each message index j, the observed symbols are combined by a set of
    probe vectors (each observed channel alone, the public unmixing row of H
    restricted to what is seen, and a few random field combinations). The
    residual ``(M_j xor probe) mod 2^bits`` must be uniform when nothing
    leaks. Its empirical TV from uniform, minus the mean TV of an exact
    uniform sample of the same size, is the reported estimate; the null
    spread is the standard error. An index is flagged when its estimate
    exceeds z standard errors, with z Bonferroni-corrected for the number of
    probes (and never below 3).
    """
    if samples < MIN_SAMPLES:
        raise ValueError(f"sampled audit needs at least {MIN_SAMPLES} samples, got {samples}")
    rng = np.random.default_rng(seed)
    spec = code.spec
    n = code.n
    visible = model.visible(n)
    bits = min(bits, spec.m)
    bins = 1 << bits
    null_mean, null_sd = _null_tv(samples, bins, rng)
    if not visible:
        zeros = (0.0,) * n
        return LeakageReport(zeros, zeros, exact=False, stderr=(null_sd,) * n, flags=(False,) * n)

    msgs = rng.integers(0, spec.q, size=(n, samples), dtype=np.int64).astype(DTYPE)
    xs = {}
    for k in visible:
        acc = np.zeros(samples, dtype=DTYPE)
        for i in range(n):
            if code.G[k, i]:
                acc ^= mul_const(code.G[k, i], msgs[i], spec)
        xs[k] = acc

    tvs, mis, errs, flags = [], [], [], []
    for j in range(n):
        probes = [[int(k == v) for v in visible] for k in visible]
        probes.append([code.H[j, k] for k in visible])
        for _ in range(random_probes):
            probes.append([int(x) for x in rng.integers(1, spec.q, size=len(visible))])
        z = max(3.0, NormalDist().inv_cdf(1 - FALSE_ALARM / len(probes)))
        best_tv, best_mi = 0.0, 0.0
        for coeffs in probes:
            if not any(coeffs):
                continue
            feat = np.zeros(samples, dtype=DTYPE)
            for c, k in zip(coeffs, visible):
                if c:
                    feat ^= mul_const(c, xs[k], spec)
            resid = (msgs[j] ^ feat) & (bins - 1)
            freq = np.bincount(resid.astype(np.int64), minlength=bins) / samples
            excess = 0.5 * np.abs(freq - 1.0 / bins).sum() - null_mean
            nz = freq[freq > 0]
            deficit = bits + float(np.sum(nz * np.log2(nz)))
            best_tv = max(best_tv, excess)
            best_mi = max(best_mi, deficit)
        tvs.append(float(best_tv))
        mis.append(best_mi)
        errs.append(null_sd)
        flags.append(bool(best_tv > z * null_sd))
    return LeakageReport(tuple(tvs), tuple(mis), exact=False, stderr=tuple(errs), flags=tuple(flags))
