//! Prior-proficiency split of a cohort from pretest performance.

use crate::metrics::PerformanceMetrics;
use crate::AnalyticsError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProficiencyInput {
    /// Valid rule applications; fewer is better.
    pub steps: f64,
    /// Minutes per rule application; less is better.
    pub time_per_step: f64,
    /// Higher is better.
    pub accuracy: f64,
}

impl From<&PerformanceMetrics> for ProficiencyInput {
    fn from(m: &PerformanceMetrics) -> Self {
        ProficiencyInput { steps: m.valid_steps as f64, time_per_step: m.time_per_step(), accuracy: m.accuracy }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProficiencyClass {
    Low,
    High,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Proficiency {
    pub scores: Vec<f64>,
    pub classes: Vec<ProficiencyClass>,
    /// Inputs that were constant across the cohort and scored 0.5 for everyone.
    pub degenerate: Vec<&'static str>,
}

/// Min-max scaling to [0, 1]; `None` when the values are all equal.
fn min_max(values: &[f64]) -> Option<Vec<f64>> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi > lo).then(|| values.iter().map(|v| (v - lo) / (hi - lo)).collect())
}

pub fn proficiency_split(cohort: &[ProficiencyInput]) -> Result<Proficiency, AnalyticsError> {
    if cohort.len() < 2 {
        return Err(AnalyticsError::CohortTooSmall(cohort.len()));
    }
    let n = cohort.len();
    let features: [(&'static str, Vec<f64>, bool); 3] = [
        ("steps", cohort.iter().map(|c| c.steps).collect(), true),
        ("time_per_step", cohort.iter().map(|c| c.time_per_step).collect(), true),
        ("accuracy", cohort.iter().map(|c| c.accuracy).collect(), false),
    ];
    let mut degenerate = Vec::new();
    let mut combined = vec![0.0; n];
    for (name, values, inverted) in &features {
        let scaled = match min_max(values) {
            Some(s) if *inverted => s.into_iter().map(|v| 1.0 - v).collect(),
            Some(s) => s,
            None => {
                degenerate.push(*name);
                vec![0.5; n]
            }
        };
        for (c, s) in combined.iter_mut().zip(scaled) {
            *c += s / features.len() as f64;
        }
    }
    let scores = min_max(&combined).unwrap_or_else(|| vec![0.5; n]);
    let classes = scores.iter().map(|&s| if s > 0.5 { ProficiencyClass::High } else { ProficiencyClass::Low }).collect();
    Ok(Proficiency { scores, classes, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(steps: f64, time_per_step: f64, accuracy: f64) -> ProficiencyInput {
        ProficiencyInput { steps, time_per_step, accuracy }
    }

    #[test]
    fn dominating_student_is_high() {
        let p = proficiency_split(&[input(6.0, 0.5, 1.0), input(12.0, 2.0, 0.5)]).unwrap();
        assert_eq!(p.scores, vec![1.0, 0.0]);
        assert_eq!(p.classes, vec![ProficiencyClass::High, ProficiencyClass::Low]);
        assert!(p.degenerate.is_empty());
    }

    #[test]
    fn identical_students_are_all_low() {
        let p = proficiency_split(&[input(6.0, 1.0, 0.8); 3]).unwrap();
        assert_eq!(p.scores, vec![0.5; 3]);
        assert_eq!(p.classes, vec![ProficiencyClass::Low; 3]);
        assert_eq!(p.degenerate, vec!["steps", "time_per_step", "accuracy"]);
    }

    #[test]
    fn five_student_hand_computation() {
        let cohort = [
            input(6.0, 1.0, 1.0),
            input(8.0, 2.0, 0.8),
            input(10.0, 0.5, 0.9),
            input(7.0, 1.5, 0.6),
            input(9.0, 3.0, 1.0),
        ];
        // steps inverted: 1, .5, 0, .75, .25
        // time inverted: .8, .4, 1, .6, 0
        // accuracy: 1, .5, .75, 0, 1
        let combined = [2.8 / 3.0, 1.4 / 3.0, 1.75 / 3.0, 1.35 / 3.0, 1.25 / 3.0];
        let (lo, hi) = (1.25 / 3.0, 2.8 / 3.0);
        let p = proficiency_split(&cohort).unwrap();
        for (s, c) in p.scores.iter().zip(combined) {
            assert!((s - (c - lo) / (hi - lo)).abs() < 1e-12);
        }
        use ProficiencyClass::*;
        assert_eq!(p.classes, vec![High, Low, Low, Low, Low]);
    }

    #[test]
    fn single_student_is_rejected() {
        assert_eq!(proficiency_split(&[input(1.0, 1.0, 1.0)]), Err(AnalyticsError::CohortTooSmall(1)));
    }
}
