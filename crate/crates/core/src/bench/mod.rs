//! Episode runner, baselines, calibration data, metrics and experiment suites.

pub mod calibration;
pub mod episode;
pub mod generator;
pub mod metrics;
pub mod policy;
pub mod stats;
pub mod suite;

pub use calibration::{draw_pairs, generate_calibration, samples_per_class, CalibrationError, PairDraw};
pub use episode::{run_episode, run_episode_with_oracle, EpisodeConfig, EpisodeError, EpisodeResult};
pub use generator::{generate, size_class, with_extra_agents};
pub use metrics::{compute_curves, size_advantage, CurvePoint, MetricsError, SizeAdvantage, SrNtcCurve, TimeMetric};
pub use policy::Policy;
pub use stats::{wilcoxon_greater, wilcoxon_less, Wilcoxon};
pub use suite::{run_suite, write_suite, SuiteConfig, SuiteKind, SuiteOutput};
