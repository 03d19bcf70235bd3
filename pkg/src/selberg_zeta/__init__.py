"""Selberg zeta functions of arithmetic groups: class-number multiplicities,
truncated Dirichlet series for log Z, and shift-universality experiments."""

from .class_numbers import (
    CoverageError,
    MultiplicityTable,
    QuadForm,
    multiplicity_table,
    narrow_class_number,
    primitive_class_count,
    total_class_count,
    tower_multiplicity,
)
from .congruence import GroupDescriptor, TraceSetDescriptor, condition_check, hat_sets, trace_set
from .quad_core import PowerRelation, build_core_index, epsilon, is_core, power_decomposition
from .series import (
    ComplexPoint,
    IndexSet,
    SeriesResult,
    complement_tail,
    log_zeta_euler,
    log_zeta_strip,
    mean_square,
    partial_series,
    psi,
)
from .universality import (
    CompactRegion,
    PhaseTargetProblem,
    TargetFunction,
    find_shift,
    joint_scan,
    shift_set_density,
    sup_error,
    universality_scan,
    weyl_discrepancy,
)

__version__ = "0.1.0"
