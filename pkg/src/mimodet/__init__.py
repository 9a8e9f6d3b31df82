"""MIMO-OFDM detection simulation toolkit.

Linear (MF/ZF/MMSE), optimal (ML), evolutionary (PSO/DE) and hybrid
linear-heuristic detectors over spatially correlated Rayleigh channels,
with a reproducible Monte Carlo BER harness and an exact flop-count
complexity model.
"""

from .channel import (
    ChannelRealization,
    CorrelationSpec,
    PdpSpec,
    add_awgn,
    build_correlation_matrix,
    generate_channel,
    generate_pdp_channel,
    load_channel_realization,
    save_channel_realization,
)
from .complexity import FlopCounter, FlopFormulaInput, complexity_sweep, flops_detector, flops_primitive
from .detectors import (
    LinearEqualizer,
    apply_equalizer,
    mf_equalizer,
    ml_detect,
    mmse_equalizer,
    zf_equalizer,
)
from .heuristics import (
    DeParams,
    InitStrategy,
    PopulationState,
    PsoParams,
    SwarmState,
    de_crossover,
    de_detect,
    de_mutation,
    de_selection,
    hard_decision,
    hybrid_detect,
    init_population,
    init_swarm,
    pso_detect,
    pso_iterate,
    run_hybrid,
    run_population,
    run_swarm,
)
from .linalg import SingularMatrixError, draw_standard_complex_gaussian, invert_lu, matmul, psd_sqrt
from .ofdm import (
    Constellation,
    NoiseSpec,
    TxFrame,
    demap_symbols,
    map_bits,
    square_qam,
    time_domain_roundtrip,
    transmit_subcarrier,
)
from .realdomain import RealSystem, complexify, fitness, realify, realify_vec
from .rng import RngStream
from .simulate import (
    BerRecord,
    CalibrationPlan,
    DetectorConfig,
    PairedResult,
    SimulationConfig,
    calibrate,
    convergence_study,
    default_calibration_plan,
    run_ber_point,
    run_paired,
    run_sweep,
)

__version__ = "0.1.0"
