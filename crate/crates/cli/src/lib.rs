//! Driver library behind the `imbench` binary: campaign configuration,
//! artifact trees, and the identify / oracle / compare /
//! validate-closed-loop commands.

pub mod artifacts;
pub mod compare;
pub mod config;
pub mod error;
pub mod identify;
pub mod oracle;
pub mod validate;

pub use artifacts::{sha256_hex, ArtifactWriter, Manifest};
pub use compare::{efficiency_report, map_eta, EfficiencyReport};
pub use config::{CampaignConfig, GridFile};
pub use error::{CliError, ErrorReport};
pub use identify::{build_all, identify, load_artifacts, lut_config, map_options, run_logs, Artifacts, Identified};
pub use oracle::{contour_table, default_torques, oracle_config, oracle_table, run_oracle};
pub use validate::{validate_closed_loop, ClosedLoopReport};
