"""Bit-exact compute-in-BRAM MAC2 simulator and analytical evaluation models."""

from .lanes import (
    PRECISIONS,
    LaneVector,
    PackedWord,
    Precision,
    alg1_mac2,
    mac2_reference,
    precision,
    safe_dot_length,
)
from .dummy_array import DummyArray, Row
from .bram_block import CIM_TRIGGER_ADDR, CimAddress, MainArray, Mode
from .instructions import Mac2Instruction, Variant, VARIANTS, variant
from .efsm import (
    ArrayOp,
    Mac2Request,
    ScheduleError,
    run_dot_product,
    run_instruction_stream,
    run_mac2_stream,
)
from .arch import DeviceSpec, default_device, peak_throughput, throughput_boost
from .gemv import GemvWorkload, cycles_bramac, cycles_ccb, cycles_comefa
from .dla import DlaConfig, dse, evaluate, load_network

__version__ = "0.1.0"
