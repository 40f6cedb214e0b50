from .approx import (
    Classification,
    Reference,
    SpectralRun,
    classify,
    inject_pollution,
    injected_sweep,
    run_sweep,
)
from .enclosures import (
    EnclosureSpec,
    dirac_excluded,
    enclosure_region,
    gap_region,
    multiplier_spectrum_estimate,
    stokes_region,
)
from .ranges import (
    PencilSection,
    ess_range_tail,
    nrange,
    pencil_member,
    pencil_range,
    resolvent_bound,
    w_range_hpd,
)
from .region import Box, EssentialRange, Raster, SupportFn
from .types import TruncationSpec

__all__ = [
    "PencilSection",
    "TruncationSpec",
    "Box",
    "Raster",
    "SupportFn",
    "EssentialRange",
    "nrange",
    "pencil_member",
    "pencil_range",
    "w_range_hpd",
    "ess_range_tail",
    "resolvent_bound",
    "run_sweep",
    "classify",
    "inject_pollution",
    "injected_sweep",
    "Classification",
    "Reference",
    "SpectralRun",
    "EnclosureSpec",
    "dirac_excluded",
    "stokes_region",
    "gap_region",
    "enclosure_region",
    "multiplier_spectrum_estimate",
]
