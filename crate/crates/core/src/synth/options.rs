use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::sdp::SolveOptions;

/// Where the closed-loop matrices in the LMIs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMode {
    /// Data products only, with decision variable `F`.
    #[default]
    Direct,
    /// Certainty equivalence on an identified `(A_hat, B_hat)`.
    Indirect,
    /// Model-based design on the true matrices.
    Oracle,
}

impl DesignMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DesignMode::Direct => "direct",
            DesignMode::Indirect => "indirect",
            DesignMode::Oracle => "oracle",
        }
    }
}

impl std::fmt::Display for DesignMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DesignMode {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "direct" => Ok(DesignMode::Direct),
            "indirect" => Ok(DesignMode::Indirect),
            "oracle" => Ok(DesignMode::Oracle),
            other => Err(SynthError::InvalidOptions(format!(
                "unknown design mode '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthesisOptions {
    /// Certified decay rate of the Lyapunov function, in `(0, 1]`.
    pub eta: f64,
    /// Energy bound on the disturbance, `|w|_2 <= s`.
    pub s: f64,
    /// Optional `Q <= kappa2 I` cap for the basin-of-attraction program.
    pub kappa2: Option<f64>,
    /// Margin turning each strict LMI into `>= epsilon I`.
    pub epsilon: f64,
    pub mode: DesignMode,
    pub solver: SolveOptions,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            eta: 1.0,
            s: 1.0,
            kappa2: None,
            epsilon: 1e-7,
            mode: DesignMode::Direct,
            solver: SolveOptions::default(),
        }
    }
}

impl SynthesisOptions {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return Err(SynthError::InvalidOptions(format!(
                "eta must lie in (0, 1], got {}",
                self.eta
            )));
        }
        if !(self.s >= 0.0 && self.s.is_finite()) {
            return Err(SynthError::InvalidOptions(format!(
                "s must be finite and nonnegative, got {}",
                self.s
            )));
        }
        if let Some(k) = self.kappa2 {
            if !(k > 0.0 && k.is_finite()) {
                return Err(SynthError::InvalidOptions(format!(
                    "kappa2 must be positive, got {k}"
                )));
            }
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(SynthError::InvalidOptions(format!(
                "epsilon must be finite and nonnegative, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn with_mode(mut self, mode: DesignMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(SynthesisOptions::default().validate().is_ok());
        for eta in [0.0, -0.1, 1.01, f64::NAN] {
            assert!(SynthesisOptions::default()
                .with_eta(eta)
                .validate()
                .is_err());
        }
        let o = SynthesisOptions {
            kappa2: Some(0.0),
            ..SynthesisOptions::default()
        };
        assert!(o.validate().is_err());
        let o = SynthesisOptions {
            s: -1.0,
            ..SynthesisOptions::default()
        };
        assert!(o.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let ok: SynthesisOptions =
            serde_json::from_str(r#"{"eta": 0.995, "mode": "indirect"}"#).unwrap();
        assert_eq!(ok.mode, DesignMode::Indirect);
        assert_eq!(ok.s, 1.0);
        assert!(serde_json::from_str::<SynthesisOptions>(r#"{"etaa": 1}"#).is_err());
    }
}
