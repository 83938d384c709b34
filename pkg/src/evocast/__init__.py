"""Evolutionary selective-ensemble engine for one-step-ahead multivariate
time-series prediction."""

from .data import (DataError, SampleMatrix, TimeSeriesDataset,
                   aggregate_resolution, build_samples, load_csv,
                   split_train_test)
from .ensemble import (CandidatePool, EnsembleModel, TrainedMember, ls_combine,
                       mean_combine, merge_pools, pool_fronts, predict_ensemble,
                       sbs_ls, sfs_ls)
from .experiment import (ConfigError, ExperimentConfig, RunReport,
                         generate_synthetic, load_config, run_experiment)
from .features import extract, pla_features, stat_features, wavelet_features
from .genotype import GenotypeSpec, PipelineConfig, decode, random_genotype, repair
from .learners import LearnerSpec, TrainedLearner, predict, pseudoinverse, train
from .moead import MoeadConfig, ParetoFront, nondominated_filter, run
from .objectives import (EvaluatedIndividual, PipelineEvaluator,
                         evaluate_accuracy, ncl_diversity, normalize, rmse,
                         update_factors)

__version__ = "0.1.0"
