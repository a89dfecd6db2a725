from .loss import focal_loss
from .network import ScorerModel
from .scorers import HeuristicScorer, NetScorer, RandomScorer, heuristic_score, neural_score
from .features import sample_zone_pointcloud
from .labeling import Label, TrainingExample, label_examples
from .training import HyperParams, train_scorer
