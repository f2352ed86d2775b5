"""Discrete Bayesian networks for cloud benchmark QoS diagnosis and prediction."""

from .dataset import Dataset, Schema, from_records, load_dataset, save_dataset
from .discretization import (
    BinAssignment,
    DiscretizationSpec,
    assign_state,
    hierarchical_discretize,
    load_preset,
    state_counts,
)
from .inference import (
    EvidenceSet,
    Factor,
    ImpossibleEvidenceError,
    Posterior,
    enumerate_joint,
    map_state,
    posterior,
)
from .learning import (
    EmConfig,
    learn_em,
    learn_mle,
    log_likelihood,
    predict_posteriors,
    sample_dataset,
)
from .network import (
    BayesianNetwork,
    Cpt,
    Dag,
    NoisyMaxCpd,
    Variable,
    expand_noisy_max,
    joint_probability,
    load_network,
    network,
    save_network,
    validate_network,
)
from .structures import (
    StructureSpec,
    build_cbn,
    build_nbn,
    build_nor,
    build_structure,
    build_tan,
)

__version__ = "0.1.0"

__all__ = [
    "BayesianNetwork",
    "BinAssignment",
    "Cpt",
    "Dag",
    "Dataset",
    "DiscretizationSpec",
    "EmConfig",
    "EvidenceSet",
    "Factor",
    "ImpossibleEvidenceError",
    "NoisyMaxCpd",
    "Posterior",
    "Schema",
    "StructureSpec",
    "Variable",
    "assign_state",
    "build_cbn",
    "build_nbn",
    "build_nor",
    "build_structure",
    "build_tan",
    "enumerate_joint",
    "expand_noisy_max",
    "from_records",
    "hierarchical_discretize",
    "joint_probability",
    "learn_em",
    "learn_mle",
    "load_dataset",
    "load_network",
    "load_preset",
    "log_likelihood",
    "map_state",
    "network",
    "posterior",
    "predict_posteriors",
    "sample_dataset",
    "save_dataset",
    "save_network",
    "state_counts",
    "validate_network",
]
