//! Complements, the local model and its verification.

pub mod bundle;
pub mod complement;
pub mod embedding;
pub mod local;
pub mod pre_poisson;
pub mod normal_form;
pub mod saturation;
pub mod tubular;

pub use bundle::BundleChart;
pub use complement::{complement_at, ComplementData, ComplementMode, ComplementSpec};
pub use local::{local_model_bivector, local_model_dirac, sigma_tau, EtaSource};
pub use normal_form::{verify_normal_form, NormalFormReport};
pub use saturation::{saturation_chart, GridSettings, SaturationReport};
