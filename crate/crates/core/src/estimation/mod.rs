//! Exact maximum-likelihood estimation from zero-price panels.

mod fit;
mod likelihood;
mod panel;

pub use fit::{filtered_states, fit_ml, fit_panel, FitConfig, FitResult, OptimizerReport, RHO_LIMIT};
pub use likelihood::{
    g2pp_jacobian, g2pp_states, loglik_g2pp, loglik_g2pp_with, loglik_vasicek, loglik_vasicek_with,
    vasicek_states, LogLik, Spacing,
};
pub use panel::{AlignedPanel, Instrument, Observation, PanelQuote, PricePanel};
