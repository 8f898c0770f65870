"""Worst-case data-generating measures on finite alphabets.

Exponential tilts of a reference measure under a relative-entropy budget,
and the exact decompositions of loss sensitivity and generalization gaps
they yield, including the mutual + lautum information identity for the
Gibbs algorithm.
"""

from ._backend import NAME as BACKEND
from .empirical import Dataset, TypeMeasure, aggregate, empirical_risk, risk_via_type, type_of
from .gen_gap import (
    GapAudit,
    GibbsAlgorithm,
    LearningAlgorithm,
    doubly_expected_gap,
    expected_gap,
    gap_decomposition_general,
    gap_decomposition_pz,
    gen_gap,
    gibbs_audit,
    gibbs_posterior,
    lautum_info,
    model_marginal,
    mutual_info,
)
from .loss import LossModel, erm_minimizer, expected_loss, max_loss_on_support
from .measure import (
    Alphabet,
    DataAlphabet,
    DiscreteMeasure,
    is_abs_continuous,
    jeffreys_divergence,
    kl_divergence,
    mix,
    new_measure,
)
from .sensitivity import (
    SensitivityReport,
    corollary3_specialization,
    empirical_sensitivity,
    g_functional,
    jeffreys_gap,
    mixed_reference,
    sensitivity_closed_form,
    sensitivity_from_worst,
)
from .worst_case import WorstCaseTilt, gamma_sup, lemma3_identities, log_partition, solve_beta, tilt

__version__ = "0.1.0"
