//! Runtime checks of the analysis behind randomized exploration.
//!
//! [`Monitor`] evaluates, at every step, the events the regret analysis
//! conditions on: ridge concentration, perturbation concentration,
//! anti-concentration along the optimism direction and optimism itself. It
//! hard-fails if the first and third hold without the fourth, since that
//! implication is deterministic.

mod bound;
mod optimism;
mod rates;

pub use bound::theoretical_regret_bound;
pub use optimism::{check_optimism_sufficiency, optimism_direction};
pub use rates::{estimate_event_rates, RateReport};

use serde::{Deserialize, Serialize};

use crate::env::EnvironmentSpec;
use crate::linalg::{elliptical_potential_bound, Metric};
use crate::perturb::ConfidenceParams;
use crate::policies::{Choice, Decision, Policy, RidgeState};
use crate::{Error, Result, Vector};

/// Relative tolerance of the algebraic identities checked in full-trace mode.
pub const IDENTITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagnosticsLevel {
    #[default]
    Off,
    /// Event indicators and the optimism assertion.
    Monitors,
    /// Monitors plus explicit perturbation vectors and identity checks.
    FullTrace,
}

impl DiagnosticsLevel {
    pub fn enabled(self) -> bool {
        self != DiagnosticsLevel::Off
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    /// `β_{t−1}`.
    pub beta_prev: f64,
    /// `‖θ̂_{t−1} − θ*‖_{V_{t−1}} ≤ β_{t−1}`.
    pub concentration_ok: bool,
    /// `‖θ̃_{t−1}‖_{V_{t−1}} ≤ γ̃_T`. Always true for index policies.
    pub perturb_concentration_ok: bool,
    /// Perturbation pushes `x*` up by at least `β_{t−1}‖x*‖_{V⁻¹}`; for index
    /// policies, the confidence width is at least `β_{t−1}`.
    pub anti_conc_ok: bool,
    /// `x*ᵀθ* ≤ X_tᵀθ_t` (index policies: the winning index).
    pub optimism_ok: bool,
    /// `Σ_{s≤t} ‖X_s‖²_{V_{s−1}⁻¹}`.
    pub elliptical_sum: f64,
}

/// Per-replication event monitor. Call [`Monitor::observe`] after the
/// policy selects and before it updates.
#[derive(Debug, Clone)]
pub struct Monitor {
    params: ConfidenceParams,
    gamma_tilde: f64,
    level: DiagnosticsLevel,
    elliptical_sum: f64,
    arms_history: Vec<Vector>,
    steps: u64,
}

impl Monitor {
    pub fn new(params: ConfidenceParams, level: DiagnosticsLevel) -> Self {
        Self {
            gamma_tilde: params.gamma_tilde(),
            params,
            level,
            elliptical_sum: 0.0,
            arms_history: Vec::new(),
            steps: 0,
        }
    }

    pub fn params(&self) -> &ConfidenceParams {
        &self.params
    }

    pub fn elliptical_sum(&self) -> f64 {
        self.elliptical_sum
    }

    /// Steps on which the optimism implication was checked.
    pub fn steps_checked(&self) -> u64 {
        self.steps
    }

    /// `‖θ̂ − θ*‖_V ≤ β_n` for the `n` observations in `ridge`.
    pub fn ridge_concentrated(&self, env: &EnvironmentSpec, ridge: &RidgeState) -> bool {
        let dev = ridge.estimate() - env.theta_star();
        let n = ridge.gram().step_count();
        ridge.gram().weighted_norm_unchecked(&dev, Metric::Gram) <= self.params.beta(n)
    }

    /// Whether the running potential respects `2d log(1 + T/(dλ))`. Only
    /// guaranteed for `λ ≥ 1`.
    pub fn elliptical_within_bound(&self) -> bool {
        let p = &self.params;
        self.elliptical_sum <= elliptical_potential_bound(p.dim, p.lambda, self.steps.max(1))
    }

    pub fn observe(
        &mut self,
        env: &EnvironmentSpec,
        policy: &dyn Policy,
        decision: &Decision,
        t: u64,
    ) -> Result<StepDiagnostics> {
        let ridge = policy.ridge();
        let gram = ridge.gram();
        let x_t = env.arm(decision.arm)?;
        let (best, best_value) = env.best_arm();
        let x_star = &env.arms()[best];
        let beta_prev = self.params.beta(t.saturating_sub(1));
        let concentration_ok = self.ridge_concentrated(env, ridge);
        let x_star_width = gram.weighted_norm_unchecked(x_star, Metric::GramInv);

        let (perturb_concentration_ok, anti_conc_ok, played_value, optimism_margin);
        match &decision.choice {
            Choice::Estimate(theta) => {
                let theta_tilde = theta - ridge.estimate();
                perturb_concentration_ok =
                    gram.weighted_norm_unchecked(&theta_tilde, Metric::Gram) <= self.gamma_tilde;
                let push = x_star.dot(&theta_tilde);
                anti_conc_ok = push >= beta_prev * x_star_width;
                played_value = x_t.dot(theta);
                optimism_margin = push.abs() + x_star.dot(theta).abs();
                if self.level == DiagnosticsLevel::FullTrace {
                    self.check_identities(policy, decision, t, x_star, push, x_star_width)?;
                }
            }
            Choice::Optimistic { radius, index } => {
                perturb_concentration_ok = true;
                anti_conc_ok = *radius >= beta_prev;
                played_value = *index;
                optimism_margin = radius * x_star_width;
            }
        }
        let optimism_ok = best_value <= played_value;
        if concentration_ok && anti_conc_ok {
            let slack =
                IDENTITY_TOL * (1.0 + best_value.abs() + played_value.abs() + optimism_margin);
            if best_value > played_value + slack {
                return Err(Error::InvariantViolation(format!(
                    "step {t}: concentration and anti-concentration hold but \
                     x*ᵀθ* = {best_value} > X_tᵀθ_t = {played_value}"
                )));
            }
        }

        let w = gram.weighted_norm_unchecked(x_t, Metric::GramInv);
        self.elliptical_sum += w * w;
        if self.level == DiagnosticsLevel::FullTrace {
            self.arms_history.push(x_t.clone());
        }
        self.steps += 1;

        Ok(StepDiagnostics {
            beta_prev,
            concentration_ok,
            perturb_concentration_ok,
            anti_conc_ok,
            optimism_ok,
            elliptical_sum: self.elliptical_sum,
        })
    }

    fn check_identities(
        &self,
        policy: &dyn Policy,
        decision: &Decision,
        t: u64,
        x_star: &Vector,
        push: f64,
        x_star_width: f64,
    ) -> Result<()> {
        let Some(z) = policy.perturbation_vector(decision, t) else {
            return Ok(());
        };
        let z = z?;
        let u = optimism_direction(policy.ridge().gram(), &self.arms_history, x_star)?;
        if z.len() != u.len() {
            return Err(Error::InvariantViolation(format!(
                "step {t}: perturbation vector has length {}, optimism direction {}",
                z.len(),
                u.len()
            )));
        }
        let norm = u.norm();
        if (norm - x_star_width).abs() > IDENTITY_TOL * (1.0 + x_star_width) {
            return Err(Error::InvariantViolation(format!(
                "step {t}: ‖U‖ = {norm} but ‖x*‖_V⁻¹ = {x_star_width}"
            )));
        }
        let uz = u.dot(&z);
        if (uz - push).abs() > IDENTITY_TOL * (1.0 + push.abs()) {
            return Err(Error::InvariantViolation(format!(
                "step {t}: Uᵀ𝐙 = {uz} but x*ᵀθ̃ = {push}"
            )));
        }
        Ok(())
    }
}
