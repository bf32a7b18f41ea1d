//! Experiment configuration: JSON ingestion, validation and resolution.
//!
//! A raw `ExperimentConfig` describes a scenario symbolically (possibly with
//! a generated p vector or a theorem-derived schedule); `resolve` expands it
//! into the fully explicit `ResolvedConfig` the runner consumes, rejecting
//! anything out of range with a distinctly named error.

use crate::channel::ChannelModel;
use crate::estimators::{phase_lengths, JammerMode, LearningParams, PhaseSchedule};
use crate::su::Algorithm;
use crate::Error;
use serde::{Deserialize, Serialize};

/// Learning-phase schedule: explicit slot counts or theorem-derived from
/// confidence parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum ScheduleSpec {
    Explicit {
        t_c: u64,
        #[serde(default)]
        t_o: u64,
        #[serde(default)]
        t_j: u64,
    },
    Theorem {
        delta: f64,
        epsilon: f64,
        gamma: f64,
    },
}

fn default_runs() -> usize {
    1
}

/// User-facing experiment description (the JSON config surface).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub n: usize,
    pub j: usize,
    /// Explicit busy probabilities; omit to use the spaced generator
    /// p_i = 0.5 + (i - ceil(K/2)) * 0.06.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    pub horizon: u64,
    pub schedule: ScheduleSpec,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Availability-floor override; defaults to the tight bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Jammer-mode override; only the baselines may deviate from their
    /// algorithm's canonical mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jammer_mode: Option<JammerMode>,
}

/// Fully expanded configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedConfig {
    pub algorithm: Algorithm,
    pub k: usize,
    pub n: usize,
    pub j: usize,
    pub p: Vec<f64>,
    pub horizon: u64,
    pub schedule: PhaseSchedule,
    pub runs: usize,
    pub seed: u64,
    pub theta: f64,
    pub jammer_mode: JammerMode,
    /// Ranking tolerance when the schedule came from the theorems.
    pub epsilon: Option<f64>,
}

impl ResolvedConfig {
    pub fn model(&self) -> ChannelModel {
        ChannelModel::new(self.p.clone()).expect("validated during resolve")
    }
}

/// The spaced busy-probability generator centered at 0.5.
pub fn generate_p(k: usize) -> Vec<f64> {
    let center = (k as f64 / 2.0).ceil();
    (1..=k).map(|i| 0.5 + (i as f64 - center) * 0.06).collect()
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self) -> Result<ResolvedConfig, Error> {
        if self.k < 2 {
            return Err(Error::RangeViolation("k must be >= 2".into()));
        }
        if self.n == 0 || self.n >= self.k {
            return Err(Error::RangeViolation("need 1 <= n < k".into()));
        }
        if self.j >= self.n {
            return Err(Error::RangeViolation("need j < n".into()));
        }
        if self.runs == 0 {
            return Err(Error::RangeViolation("runs must be >= 1".into()));
        }
        let p = match &self.p {
            Some(p) => {
                if p.len() != self.k {
                    return Err(Error::RangeViolation(format!(
                        "p has {} entries but k = {}",
                        p.len(),
                        self.k
                    )));
                }
                p.clone()
            }
            None => generate_p(self.k),
        };
        let model = ChannelModel::new(p.clone())?;
        let tight = model.availability_floor();
        let theta = match self.theta {
            Some(t) => {
                // Tolerate rounding in the computed floor (e.g. a nominal
                // 0.45 against a floor summed to 0.44999999999999996).
                if !(t > 0.0 && t <= tight + 1e-9) {
                    return Err(Error::RangeViolation(format!(
                        "theta must lie in (0, {tight:.6}]"
                    )));
                }
                t
            }
            None => tight,
        };
        let gap = model.gap(self.n).unwrap_or(f64::INFINITY);
        if gap <= 0.0 {
            return Err(Error::RangeViolation(
                "the n-th and (n+1)-th best channels must have distinct busy probabilities".into(),
            ));
        }
        let (schedule, epsilon) = match self.schedule {
            ScheduleSpec::Explicit { t_c, t_o, t_j } => {
                if t_c == 0 {
                    return Err(Error::RangeViolation("t_c must be >= 1".into()));
                }
                (PhaseSchedule::explicit(t_c, t_o, t_j), None)
            }
            ScheduleSpec::Theorem { delta, epsilon, gamma } => {
                let params = LearningParams { delta, epsilon, gamma };
                if epsilon >= gap {
                    return Err(Error::RangeViolation(format!(
                        "epsilon {epsilon} must be smaller than the availability gap {gap}"
                    )));
                }
                (phase_lengths(self.algorithm, self.k, theta, &params)?, Some(epsilon))
            }
        };
        let needed = schedule.learning_slots();
        if needed > self.horizon {
            return Err(Error::ScheduleOverflow { needed, horizon: self.horizon });
        }
        let canonical = match self.algorithm {
            Algorithm::Cdj | Algorithm::Cnj => Some(JammerMode::Coordinated),
            Algorithm::Cuj => Some(JammerMode::Uncoordinated),
            _ => None,
        };
        let jammer_mode = match (canonical, self.jammer_mode) {
            (Some(c), Some(m)) if c != m => {
                return Err(Error::RangeViolation(
                    "jammer_mode conflicts with the algorithm's setting".into(),
                ));
            }
            (Some(c), _) => c,
            (None, Some(m)) => m,
            (None, None) => JammerMode::Coordinated,
        };
        Ok(ResolvedConfig {
            algorithm: self.algorithm,
            k: self.k,
            n: self.n,
            j: self.j,
            p,
            horizon: self.horizon,
            schedule,
            runs: self.runs,
            seed: self.seed,
            theta,
            jammer_mode,
            epsilon,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig {
            algorithm: Algorithm::Cnj,
            k: 8,
            n: 4,
            j: 2,
            p: Some(vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]),
            horizon: 7000,
            schedule: ScheduleSpec::Explicit { t_c: 3000, t_o: 50, t_j: 1000 },
            runs: 10,
            seed: 7,
            theta: None,
            jammer_mode: None,
        }
    }

    #[test]
    fn generator_matches_spacing_rule() {
        let p = generate_p(16);
        assert!((p[0] - 0.08).abs() < 1e-12);
        assert!((p[7] - 0.5).abs() < 1e-12);
        assert!((p[15] - 0.98).abs() < 1e-12);
        for w in p.windows(2) {
            assert!((w[1] - w[0] - 0.06).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_json() {
        let cfg = base();
        let back = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(cfg, back);
        let theorem = ExperimentConfig {
            schedule: ScheduleSpec::Theorem { delta: 0.3, epsilon: 0.05, gamma: 0.4 },
            horizon: 200_000,
            ..base()
        };
        let back = ExperimentConfig::from_json(&theorem.to_json()).unwrap();
        assert_eq!(theorem, back);
    }

    #[test]
    fn parses_plain_json_text() {
        let text = r#"{
            "algorithm": "cdj", "k": 8, "n": 4, "j": 2,
            "horizon": 7000,
            "schedule": { "mode": "explicit", "t_c": 3000 },
            "runs": 3, "seed": 1
        }"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.schedule.t_c, 3000);
        assert_eq!((resolved.schedule.t_o, resolved.schedule.t_j), (0, 0));
        assert_eq!(resolved.p, generate_p(8));
        assert_eq!(resolved.jammer_mode, JammerMode::Coordinated);
    }

    #[test]
    fn missing_field_is_a_parse_error() {
        let text = r#"{ "algorithm": "cdj", "k": 8 }"#;
        match ExperimentConfig::from_json(text) {
            Err(Error::Parse(e)) => assert!(e.to_string().contains("missing field")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn named_validation_errors() {
        let mut bad = base();
        bad.n = 8;
        assert!(matches!(bad.resolve(), Err(Error::RangeViolation(_))));
        let mut bad = base();
        bad.j = 4;
        assert!(matches!(bad.resolve(), Err(Error::RangeViolation(_))));
        let mut bad = base();
        bad.horizon = 100;
        assert!(matches!(bad.resolve(), Err(Error::ScheduleOverflow { needed: 4050, horizon: 100 })));
        let mut bad = base();
        bad.p = Some(vec![0.5; 7]);
        assert!(matches!(bad.resolve(), Err(Error::RangeViolation(_))));
    }

    #[test]
    fn theorem_schedule_resolution() {
        let cfg = ExperimentConfig {
            schedule: ScheduleSpec::Theorem { delta: 0.3, epsilon: 0.05, gamma: 0.4 },
            horizon: 500_000,
            ..base()
        };
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.schedule.t_o, 196);
        assert_eq!(resolved.schedule.t_j, 5127);
        assert_eq!(resolved.epsilon, Some(0.05));
        assert!((resolved.theta - 0.45).abs() < 1e-12);
    }

    #[test]
    fn epsilon_must_undershoot_gap() {
        let cfg = ExperimentConfig {
            schedule: ScheduleSpec::Theorem { delta: 0.3, epsilon: 0.2, gamma: 0.4 },
            horizon: 500_000,
            ..base()
        };
        assert!(matches!(cfg.resolve(), Err(Error::RangeViolation(_))));
    }

    #[test]
    fn jammer_mode_override_rules() {
        let mut cfg = base();
        cfg.jammer_mode = Some(JammerMode::Uncoordinated);
        assert!(cfg.resolve().is_err()); // CNJ is pinned to coordinated
        cfg.algorithm = Algorithm::Myopic;
        assert_eq!(cfg.resolve().unwrap().jammer_mode, JammerMode::Uncoordinated);
        cfg.jammer_mode = None;
        assert_eq!(cfg.resolve().unwrap().jammer_mode, JammerMode::Coordinated);
    }
}
