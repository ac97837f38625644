"""Exact toolkit for associativity equations, flat torsionless submanifolds,
nonlocal hydrodynamic Hamiltonian operators, and their integrable hierarchies,
with numeric realization and flow simulation on top."""

from .algebra import (
    ConstSymMatrix,
    JetPoly,
    JetSpace,
    NotClosedError,
    Poly,
    PolyMatrix,
    Rational,
    SingularMatrixError,
    gradient,
    hessian,
    integrate_exact_one_form,
    integrate_exact_two_form,
)
from .exprlang import ExprSource, ParseError, format_polynomial, parse, parse_polynomial
from .frobenius import (
    FrobeniusReport,
    Potential,
    StructureConstants,
    dubrovin_residual,
    find_unit,
    structure_constants,
    verify_frobenius_conditions,
    wdvv_residual,
)
from .submanifold import (
    LaxParams,
    PsiSystem,
    SecondForms,
    codazzi_check,
    gauss_residual,
    reduce_potential,
    ricci_residual,
    second_forms,
    zero_curvature_residual,
)
from .hamop import (
    FlatHamOp,
    GeneralHamOpData,
    HydroFlow,
    NotExactError,
    affinors_from_psi,
    check_relations,
    flat_to_general,
    flows_commute_residual,
    pencil_check,
    psi_from_affinors,
    structural_flows,
)
from .hierarchy import (
    HierarchyLevel,
    LocalityReport,
    NotASolutionError,
    build_hierarchy,
    check_eq10,
    check_locality,
    first_density,
    involution_residual_constant_bracket,
    involution_wdvv_integrals,
    legendre_F,
    lift_density,
    next_density,
)

__version__ = "0.1.0"
