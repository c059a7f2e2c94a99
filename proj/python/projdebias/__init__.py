"""Projective gender debiasing of a toy BERT-style encoder."""

from ._core import (
    Basis,
    DebiasConfig,
    Encoder,
    Error,
    GenderPair,
    InputError,
    Level,
    NLIProbe,
    ProbeTemplate,
    SubspaceSet,
    TripleScores,
    average_ranks,
    default_gender_pairs,
    default_occupations,
    default_templates,
    distance_D,
    enumerate_grid,
    fairness_score,
    format_config_text,
    generate_probes,
    pair_distance,
    pair_strength,
    parse_config_label,
    parse_config_text,
    pca,
    project_out,
    sentence_pair_count,
    spearman,
    ss_score,
    strength_S,
)

__version__ = "0.1.0"
