use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which theoretical schedule to instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    /// Finite-horizon on-policy MDP-E.
    FiniteMdpe,
    /// Discounted on-policy MDP-E.
    InfiniteMdpe,
    Ilarl,
    Brig,
    /// Expert sample size for a target accuracy.
    ExpertConcentration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleInputs {
    pub rounds: usize,
    pub dim: usize,
    pub n_actions: usize,
    pub horizon: Option<usize>,
    pub gamma: Option<f64>,
    pub delta: f64,
    /// Target accuracy (`ε_E` for expert sample sizes).
    pub eps: f64,
    /// Constant in front of the order-only exploration parameter.
    pub beta_const: f64,
}

/// A derived value with the formula that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleEntry {
    pub name: String,
    pub value: f64,
    pub formula: String,
}

/// Hyperparameters consumed by the drivers. Values not used by an algorithm
/// stay `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub rounds: usize,
    pub tau: usize,
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: Option<f64>,
    pub horizon: Option<usize>,
    pub tau_e: Option<usize>,
    /// Truncation of discounted rollouts; `None` uses `⌈10/(1-γ)⌉`.
    pub max_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub formulas: Vec<ScheduleEntry>,
}

impl ScheduleParams {
    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 || self.tau == 0 {
            return Err(Error::invalid("K and tau must be at least 1"));
        }
        if self.tau > self.rounds {
            return Err(Error::invalid(format!("tau = {} exceeds K = {}", self.tau, self.rounds)));
        }
        for (name, x) in [("eta", self.eta), ("alpha", self.alpha), ("beta", self.beta)] {
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::invalid(format!("{name} must be finite and non-negative, got {x}")));
            }
        }
        if let Some(g) = self.gamma {
            if !(0.0..1.0).contains(&g) {
                return Err(Error::invalid(format!("gamma must lie in [0, 1), got {g}")));
            }
        }
        Ok(())
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.formulas.iter().find(|e| e.name == name).map(|e| e.value)
    }
}

fn ceil_count(x: f64) -> usize {
    x.ceil().max(1.0) as usize
}

pub fn schedule_from_theorems(kind: ScheduleKind, inputs: &ScheduleInputs) -> Result<ScheduleParams> {
    let k = inputs.rounds as f64;
    let d = inputs.dim as f64;
    if inputs.rounds == 0 || inputs.dim == 0 {
        return Err(Error::invalid("K and d must be positive"));
    }
    if !(inputs.delta > 0.0) || !(inputs.eps > 0.0) || !(inputs.beta_const > 0.0) {
        return Err(Error::invalid("delta, eps and the beta constant must be positive"));
    }
    let log_a = || -> Result<f64> {
        if inputs.n_actions < 2 {
            return Err(Error::invalid("schedules need at least two actions (log|A| > 0)"));
        }
        Ok((inputs.n_actions as f64).ln())
    };
    let horizon = || -> Result<usize> {
        match inputs.horizon {
            Some(h) if h > 0 => Ok(h),
            _ => Err(Error::invalid("this schedule needs a positive horizon H")),
        }
    };
    let gamma = || -> Result<f64> {
        match inputs.gamma {
            Some(g) if (0.0..1.0).contains(&g) => Ok(g),
            _ => Err(Error::invalid("this schedule needs a discount in [0, 1)")),
        }
    };
    let mut entries = Vec::new();
    let mut entry = |name: &str, value: f64, formula: &str| {
        entries.push(ScheduleEntry {
            name: name.to_string(),
            value,
            formula: formula.to_string(),
        });
        value
    };
    let mut params = ScheduleParams {
        rounds: inputs.rounds,
        tau: 1,
        eta: 0.0,
        alpha: 0.0,
        beta: 0.0,
        gamma: inputs.gamma,
        horizon: inputs.horizon,
        tau_e: None,
        max_len: None,
        formulas: Vec::new(),
    };
    match kind {
        ScheduleKind::FiniteMdpe => {
            let h = horizon()? as f64;
            let la = log_a()?;
            params.beta = entry("beta", inputs.beta_const * d * h, "beta = c * d * H");
            let tau = entry("tau", 2.5 * params.beta * (k * d / la).sqrt(), "tau = (5 beta / 2) sqrt(K d / ln|A|)");
            params.tau = ceil_count(tau);
            params.eta = entry(
                "eta",
                (params.tau as f64 * la / (k * h * h)).sqrt(),
                "eta = sqrt(tau ln|A| / (K H^2))",
            );
        }
        ScheduleKind::InfiniteMdpe => {
            let g = gamma()?;
            let la = log_a()?;
            params.beta = entry("beta", inputs.beta_const * d / (1.0 - g), "beta = c * d / (1 - gamma)");
            let tau = entry("tau", k.powf(2.0 / 3.0).floor(), "tau = floor(K^(2/3)), so that tau <= K / sqrt(tau)");
            params.tau = ceil_count(tau);
            params.eta = entry(
                "eta",
                (params.tau as f64 * la * (1.0 - g).powi(2) / k).sqrt(),
                "eta = sqrt(tau ln|A| (1 - gamma)^2 / K)",
            );
        }
        ScheduleKind::Ilarl => {
            let g = gamma()?;
            let la = log_a()?;
            params.alpha = entry("alpha", 1.0 / (2.0 * k).sqrt(), "alpha = 1 / sqrt(2K)");
            params.beta = entry("beta", inputs.beta_const * d / (1.0 - g), "beta = c * d / (1 - gamma)");
            let tau = entry(
                "tau",
                params.beta * (1.0 - g) * (d * k).sqrt() * (2.0 * d * k / inputs.delta).ln() / la.sqrt(),
                "tau = beta (1 - gamma) sqrt(d K) ln(2 d K / delta) / sqrt(ln|A|)",
            );
            params.tau = ceil_count(tau);
            params.eta = entry(
                "eta",
                (params.tau as f64 * la * (1.0 - g).powi(2) / k).sqrt(),
                "eta = sqrt(tau ln|A| (1 - gamma)^2 / K)",
            );
            let tau_e = entry(
                "tau_e",
                8.0 * d * (d / inputs.delta).ln() / ((1.0 - g).powi(2) * inputs.eps.powi(2)),
                "tau_E = 8 d ln(d / delta) / ((1 - gamma)^2 eps_E^2)",
            );
            params.tau_e = Some(ceil_count(tau_e));
        }
        ScheduleKind::Brig => {
            let h = horizon()? as f64;
            params.alpha = entry("alpha", (1.0 / (2.0 * k)).sqrt(), "alpha = sqrt(1 / (2K))");
            params.beta = entry("beta", inputs.beta_const * d * h, "beta = c * d * H");
            let tau_e = entry(
                "tau_e",
                2.0 * h * h * d * (2.0 * d / inputs.delta).ln() / inputs.eps.powi(2),
                "tau_E = 2 H^2 d ln(2 d / delta) / eps_E^2",
            );
            params.tau_e = Some(ceil_count(tau_e));
        }
        ScheduleKind::ExpertConcentration => {
            let n_e = entry(
                "n_e",
                (2.0 * (2.0 * d / inputs.delta).ln() / inputs.eps.powi(2)).ceil(),
                "n_E = ceil(2 ln(2 d / delta) / eps^2)",
            );
            params.tau_e = Some(ceil_count(n_e));
            if let Some(g) = inputs.gamma {
                let len = entry(
                    "truncation",
                    ((1.0 / inputs.eps).ln() / (1.0 - g)).ceil().max(1.0),
                    "H >= ln(1 / eps) / (1 - gamma)",
                );
                params.max_len = Some(len as usize);
            }
        }
    }
    params.formulas = entries;
    Ok(params)
}
