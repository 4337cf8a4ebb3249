"""Link-level simulator for kurtosis-based handover in multi-cell indoor VLC."""

from .handover import HandoverConfig, HandoverEvent, detect_relative_max, process_frame
from .phy import (
    Frame,
    SampledWaveform,
    build_frame,
    demodulate_ook,
    estimate_cell_gains,
    extract_id_segment,
    synthesize_received,
)
from .scene import Scene, grid_positions, lambertian_order, load_scene, load_scene_file, los_gain
from .stats import KurtosisReport, bimodal_kurtosis_analytic, bit_error_rate, histogram_pdf, kurtosis

__version__ = "0.1.0"
