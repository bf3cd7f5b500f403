"""Classical LDA and prototype-based LDA++ solvers, kernel variants and evaluation tools."""

from .cluster import Partition, kmeans, subclass_partition
from .datasets import SynthConfig, load_csv, load_iris, synth_generate
from .errors import NumericalError, ValidationError
from .evaluation import (EvalReport, KernelConfig, SolverConfig, cross_validate,
                         kfold_split, nn_classify, subspace_equivalence)
from .io import export_filters_pgm, load_model, save_model
from .kernel import (KernelDescriptor, KernelModel, fit_classical, fit_ldapp,
                     kernel_matrix, kernel_objective, kernel_transform, w_matrix)
from .scatter import (Dataset, compute_cluster_stats, compute_factors, compute_scatter,
                      regularize)
from .solvers import (LdaModel, bayes_weights, drop_feature, eig_lda, eig_ldapp, fit,
                      ldapp, objective, optimal_objective, prototype_eig_lda, sw_solution,
                      transform)

__version__ = "0.1.0"
