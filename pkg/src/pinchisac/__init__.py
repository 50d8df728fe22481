"""Outage analysis and schedule optimisation for pinching-antenna ISAC."""

from .scenario import (SelectionSchedule, SystemParams, Vec3, default_params,
                       dbm_to_watts, validate_schedule, watts_to_dbm)
from .channel import Channels, ChannelVector, target_channel, user_channel
from .outage import (OutageReport, chernoff_bound, exact_outage, hypoexp_cdf,
                     hypoexp_cdf_distinct, hypoexp_cdf_robust, mc_outage, optimize_s,
                     outage_report)
from .sca import OptimizationResult, SCAConfig, optimize
from .baselines import (BaselineSpec, antenna_selection_baseline, exhaustive_oracle,
                        fixed_pa_baseline)

__version__ = "0.1.0"
