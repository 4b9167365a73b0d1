"""Congruence modules, cotangent spaces and Wiles defects of augmented O-algebras."""
from .algebra import (
    AugmentedAlgebra,
    FiberAlgebra,
    FiberModule,
    InputData,
    LambdaModule,
    LambdaStructure,
    TruncationContext,
    character_module,
    consistency_check,
    direct_sum,
    fiber_algebra,
    koszul_ext,
    membership_check,
    parse_input,
    parse_presentation,
    regular_module,
)
from .dvr import DvrScalar, FgOModule, OMatrix, OModuleMap, map_cokernel, smith_normal_form
from .errors import *  # noqa: F401,F403
from .invariants import (
    InvariantReport,
    congruence_module,
    cotangent_module,
    defect_decomposition,
    deform,
    ext1_report,
    ext1_truncated,
    freeness_check,
    invariance_check,
    iso_criteria_check,
    koszul_regular,
    order_of,
    report_for,
    wiles_defect,
)
from .laws import LAWS, run_law, run_laws
from .poly import Poly, format_poly, parse_poly

__version__ = "0.1.0"
