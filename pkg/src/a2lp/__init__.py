"""Label propagation with augmented anchors for transductive domain adaptation."""
from .align import alternate, class_mean_shift, coral_align
from .anchors import (A2lpResult, AnchorSet, a2lp, augment, compute_anchors, entropy_weights,
                      inject_label_noise, label_propagation, propagate, surrogate_source)
from .core import (A2lpConfig, A2lpError, FeatureSet, IterationRecord, NNDescentParams,
                   RunDiagnostics, alpha_to_lambda, lambda_to_alpha, validate)
from .data import SyntheticSpec, benchmark, generate_synthetic_uda
from .graph import build_knn_affinity, normalize, similarity, symmetrize
from .metrics import (accuracy, connectivity_oracle, percent_of_weight,
                      smoothness_decomposition)
from .solver import argmax_labels, solve_cg, solve_closed_form, to_probabilities

__version__ = "0.1.0"
