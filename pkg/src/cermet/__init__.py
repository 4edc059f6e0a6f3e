"""Hybrid secrecy-coded multipath encryption.

n messages are mixed by a Moore-matrix secrecy code over GF(2^m), c of the
n coded channels are encrypted, and all n are sent over separate paths.
"""

from .ciphers import CipherSuiteId, Ciphertext, KeyPair, dec, enc, gen
from .codec import (
    CodecConfig,
    MessageBatch,
    decode_batch,
    decode_stream,
    encode_batch,
    encode_stream,
)
from .errors import CermetError
from .frame import ChannelFrame, frame_parse, frame_serialize
from .gf import FieldSpec, build_log_exp_tables, gf_add, gf_inv, gf_mul_rpa, gf_mul_table, gf_pow
from .mrd import SecrecyCode, build_parity_matrix
from .audit import EavesdropperModel, exhaustive_audit, sampled_audit, all_subsets_audit
from .perf import PipelineParams, huncc_throughput, reproduce_table1, reproduce_table3

__version__ = "0.1.0"
