//! Uplink grant-free NOMA link simulation.

pub mod campaign;
pub mod metrics;
pub mod recovery;
pub mod scenario;

pub use campaign::{
    run_campaign, run_point, simulate_point, write_campaign_csv, CampaignGrid, OneOrMany,
    PointMetrics, PointResult,
};
pub use metrics::{evaluate_metrics, Estimate, FrameMetrics, MetricsRecord};
pub use recovery::{oracle_ls, somp_recover, RecoveryResult, StopReason};
pub use scenario::{build_matrix, generate_frame, FrameScenario, ScenarioConfig, StoppingRule};
