"""Clustering-aware event-study toolkit.

Ingests daily OHLCV panels, fits single-index market models, computes
abnormal returns, clusters peer firms on pre-event trading features, and
tests cumulative average abnormal returns with parametric and signed-rank
statistics.
"""

from .clustering import (ClusterAssignment, Dendrogram, DistanceMetric,
                         agglomerate, cut, distance, focal_subsample)
from .config import StudyConfig, load_study_config, validate_config
from .errors import (ConfigError, DataError, EventClustError,
                     InsufficientDataError, NumericsError)
from .event_study import CaarPoint, CaarSeries, EventSpec, SampleCategory, caar, car, caar_series
from .features import (FeatureMatrix, FeatureWindow, build_feature_matrix,
                       capm_beta, daily_spread, pre_event_car,
                       realized_volatility, volume_weighted_return)
from .inference import TestResult, annotate, t_ar, t_caar, wilcoxon_signed_rank
from .market_data import (FactorSeries, PricePanel, PriceSeries, ReturnSeries,
                          TradingCalendar, load_factors, load_panel,
                          log_returns, relative_index, write_panel)
from .market_model import (AbnormalReturnMatrix, EstimationWindow,
                           MarketModelFit, abnormal_returns,
                           estimation_abnormal_returns, expected_return,
                           fit_market_model)
from .pipeline import Study, run_study

__version__ = "0.1.0"
