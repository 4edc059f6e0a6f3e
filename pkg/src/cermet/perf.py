"""Analytical cycle, throughput and energy model of the receiver datapath.

Per batch the receiver decrypts one block (``dec_cycles_per_block``) and
unmixes n·N symbols. Both stages are pipelined, so a batch costs
max(cipher cycles, multiplier cycles). Power figures are inputs; the model
only relates them to throughput.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass, replace

from .errors import ZeroThroughput

AES128_CYCLES = 13
AES256_CYCLES = 17
ECC_CYCLES = 83_016  # calibrated: 16 * 256 bits / 4.934 Mbps at 100 MHz


class MultiplierMode(enum.Enum):
    PARALLEL = "parallel"  # n*N multiplier modules, one row of H per 2 cycles
    SERIAL = "serial"      # one module reused for every product


class Bottleneck(enum.Enum):
    CIPHER = "cipher"
    MULTIPLIER = "multiplier"


@dataclass(frozen=True)
class PipelineParams:
    n: int
    clock_hz: float = 1e8
    dec_cycles_per_block: int = AES256_CYCLES
    block_bits: int = 128
    m: int = 16
    mul_cycles_per_unit: int = 2
    store_cycles: int = 1
    store_pipelined: bool = True
    multiplier_mode: MultiplierMode = MultiplierMode.PARALLEL

    def __post_init__(self):
        object.__setattr__(self, "multiplier_mode", MultiplierMode(self.multiplier_mode))
        for name in ("n", "clock_hz", "dec_cycles_per_block", "block_bits", "m", "mul_cycles_per_unit"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.store_cycles < 0:
            raise ValueError("store_cycles must be non-negative")

    @property
    def N(self) -> int:
        return max(1, self.block_bits // self.m)

    @property
    def unit_cycles(self) -> int:
        # the store cycle overlaps the next multiply unless pipelining is off
        return self.mul_cycles_per_unit + (0 if self.store_pipelined else self.store_cycles)

    @classmethod
    def aes256(cls, n: int, **kw) -> "PipelineParams":
        return cls(n=n, **kw)

    @classmethod
    def ecc(cls, n: int = 16, **kw) -> "PipelineParams":
        kw.setdefault("multiplier_mode", MultiplierMode.SERIAL)
        kw.setdefault("dec_cycles_per_block", ECC_CYCLES)
        kw.setdefault("block_bits", 256)
        return cls(n=n, **kw)


@dataclass(frozen=True)
class PowerBreakdown:
    """Milliwatts per block."""

    cipher_core: float
    multiplier: float
    intermediate_registers: float

    def __post_init__(self):
        if min(self.cipher_core, self.multiplier, self.intermediate_registers) < 0:
            raise ValueError("powers must be non-negative")

    @property
    def total_mw(self) -> float:
        return self.cipher_core + self.multiplier + self.intermediate_registers


@dataclass(frozen=True)
class ThroughputReport:
    throughput_bps: float
    bottleneck: Bottleneck
    cycles_per_batch: int


def multiplier_cycles(params: PipelineParams) -> int:
    if params.multiplier_mode is MultiplierMode.PARALLEL:
        return params.unit_cycles * params.n
    return params.unit_cycles * params.n * params.n * params.N


def multiplier_modules(params: PipelineParams) -> int:
    return params.n * params.N if params.multiplier_mode is MultiplierMode.PARALLEL else 1


def huncc_throughput(params: PipelineParams) -> ThroughputReport:
    mult = multiplier_cycles(params)
    cycles = max(params.dec_cycles_per_block, mult)
    neck = Bottleneck.MULTIPLIER if mult > params.dec_cycles_per_block else Bottleneck.CIPHER
    return ThroughputReport(params.n * params.block_bits * params.clock_hz / cycles, neck, cycles)


def baseline_throughput(params: PipelineParams) -> ThroughputReport:
    """n independent cipher cores, no mixing."""
    cycles = params.dec_cycles_per_block
    return ThroughputReport(params.n * params.block_bits * params.clock_hz / cycles, Bottleneck.CIPHER, cycles)


def energy_per_bit(powers: PowerBreakdown | float, throughput_bps: float) -> float:
    """pJ/bit from milliwatts and bits per second."""
    if throughput_bps <= 0:
        raise ZeroThroughput("throughput must be positive")
    total = powers.total_mw if isinstance(powers, PowerBreakdown) else float(powers)
    return total * 1e-3 / throughput_bps * 1e12


# Reported figures, transcribed. n -> (AES mW, Mult mW, Reg mW, Gbps, pJ/bit)
TABLE1 = {
    2: (1.21, 0.14, 0.08, 1.51, 0.95),
    3: (1.21, 0.39, 0.17, 2.26, 0.79),
    4: (1.26, 0.62, 0.29, 3.01, 0.73),
    5: (1.26, 0.93, 0.43, 3.76, 0.70),
    6: (1.26, 1.38, 0.61, 4.52, 0.73),
    7: (1.27, 1.98, 0.81, 5.27, 0.78),
    8: (1.28, 2.69, 1.04, 6.02, 0.85),
    9: (1.19, 3.89, 1.37, 6.40, 1.02),
    10: (1.09, 4.38, 1.05, 6.40, 1.1),
    11: (0.98, 5.18, 1.74, 6.40, 1.25),
}
TABLE1_BASELINE_MW_PER_CH = 1.3
TABLE1_BASELINE_GBPS_PER_CH = 0.752
TABLE1_BASELINE_PJ = 1.72

TABLE3_KBPS = 4934
TABLE3 = {
    # row -> (cipher mW, mult mW, reg mW, reported pJ/bit, area kGE cipher/mult/reg/total)
    "baseline": (42.72, 0.0, 0.0, 8656, (1707, None, None, 1707)),
    "parallel": (2.64, 0.032, 0.019, 564, (102, 222, 80, 404)),
    "serial": (2.745, 0.002, 0.069, 593, (102, 0.9, 80, 182.9)),
}

THROUGHPUT_TOL_GBPS = 0.02
ENERGY_TOL = 0.10
TABLE3_ENERGY_TOL = {"baseline": 0.005, "parallel": 0.05, "serial": 0.05}
TABLE3_THROUGHPUT_TOL_KBPS = 1.0


def _rel(computed: float, reported: float) -> float:
    return abs(computed - reported) / abs(reported)


def reproduce_table1(params: PipelineParams | None = None) -> list:
    base = params or PipelineParams.aes256(2)
    rows = []
    for n, (aes, mult, reg, gbps, pj) in TABLE1.items():
        rep = huncc_throughput(replace(base, n=n))
        got_gbps = rep.throughput_bps / 1e9
        got_pj = energy_per_bit(PowerBreakdown(aes, mult, reg), rep.throughput_bps)
        ok = abs(got_gbps - gbps) <= THROUGHPUT_TOL_GBPS and _rel(got_pj, pj) <= ENERGY_TOL
        rows.append({
            "n": n,
            "throughput_gbps": got_gbps,
            "reported_gbps": gbps,
            "throughput_err_gbps": abs(got_gbps - gbps),
            "bottleneck": rep.bottleneck.value,
            "power_mw": aes + mult + reg,
            "energy_pj_per_bit": got_pj,
            "reported_pj_per_bit": pj,
            "energy_rel_err": _rel(got_pj, pj),
            "tolerance": ENERGY_TOL,
            "pass": ok,
        })
    return rows


def table1_baseline() -> dict:
    rep = baseline_throughput(PipelineParams.aes256(1))
    pj = energy_per_bit(TABLE1_BASELINE_MW_PER_CH, rep.throughput_bps)
    return {
        "throughput_gbps_per_channel": rep.throughput_bps / 1e9,
        "reported_gbps_per_channel": TABLE1_BASELINE_GBPS_PER_CH,
        "energy_pj_per_bit": pj,
        "reported_pj_per_bit": TABLE1_BASELINE_PJ,
        "energy_rel_err": _rel(pj, TABLE1_BASELINE_PJ),
    }


def reproduce_table3(ecc_cycles: int = ECC_CYCLES) -> list:
    rows = []
    for name, (cip, mult, reg, pj, area) in TABLE3.items():
        if name == "baseline":
            p = PipelineParams.ecc(16, dec_cycles_per_block=ecc_cycles)
            rep = baseline_throughput(p)
            mcycles = 0
        else:
            mode = MultiplierMode.SERIAL if name == "serial" else MultiplierMode.PARALLEL
            p = PipelineParams.ecc(16, dec_cycles_per_block=ecc_cycles, multiplier_mode=mode)
            rep = huncc_throughput(p)
            mcycles = multiplier_cycles(p)
        got = energy_per_bit(PowerBreakdown(cip, mult, reg), rep.throughput_bps)
        kbps = rep.throughput_bps / 1e3
        tol = TABLE3_ENERGY_TOL[name]
        rows.append({
            "row": name,
            "throughput_kbps": kbps,
            "reported_kbps": TABLE3_KBPS,
            "bottleneck": rep.bottleneck.value,
            "multiplier_cycles": mcycles,
            "power_mw": cip + mult + reg,
            "energy_pj_per_bit": got,
            "reported_pj_per_bit": pj,
            "energy_rel_err": _rel(got, pj),
            "tolerance": tol,
            "area_kge": area,
            "pass": abs(kbps - TABLE3_KBPS) <= TABLE3_THROUGHPUT_TOL_KBPS and _rel(got, pj) <= tol,
        })
    return rows


def sweep(ns, params: PipelineParams | None = None) -> list:
    base = params or PipelineParams.aes256(1)
    out = []
    for n in ns:
        p = replace(base, n=n)
        rep = huncc_throughput(p)
        out.append({
            "n": n,
            "throughput_gbps": rep.throughput_bps / 1e9,
            "baseline_gbps": baseline_throughput(p).throughput_bps / 1e9,
            "bottleneck": rep.bottleneck.value,
            "cycles_per_batch": rep.cycles_per_batch,
            "multiplier_cycles": multiplier_cycles(p),
        })
    return out


def params_dict(params: PipelineParams) -> dict:
    d = asdict(params)
    d["multiplier_mode"] = params.multiplier_mode.value
    return d
