"""Finite-n information-spectrum rates and entanglement manipulation for pure-state sequences.

All entropic quantities are in nats.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundReport,
    coherent_fidelity_bound,
    dense_coding_capacity,
    relent_fidelity_bound,
)
from .concentration import ConcentrationOutcome, concentrate, concentration_sweep, nielsen_majorizes
from .dilution import DilutionOutcome, coding_fidelity, dilution_converse_bound, dilution_sweep
from .errors import EntspecError, NumericalError, ProtocolAborted, ResourceLimitError, ValidationError
from .operators import PureBipartiteState, maximally_entangled, partial_trace, schmidt_spectrum
from .rates import (
    GammaGrid,
    SpectralRateEstimate,
    check_lemma,
    estimate_conditional_rates,
    estimate_divergence_rates,
    estimate_entropy_rates,
    pi_trace,
    run_lemma_suite,
)
from .sequences import (
    MixtureSpec,
    StructuredSpectrum,
    iid_sequence,
    mixture_sequence,
    purify,
    sequence_from_config,
    tail_sum,
)
