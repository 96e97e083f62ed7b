use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::SessionError;
use crate::hints::{HintModel, SolutionTrace, TraceStep, ValueParams};
use crate::logic::{Formula, Rule};

pub const TRAINING_LEVELS: u8 = 5;
pub const INTRO_EXAMPLES: usize = 2;
pub const PRETEST_PROBLEMS: usize = 2;
pub const POSTTEST_PROBLEMS: usize = 4;
pub const SOLVES_PER_LEVEL: usize = 4;
pub const SKIPS_PER_LEVEL: u8 = 3;

const DEFAULT_BANK: &str = include_str!("../../data/default_bank.toml");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Level {
    Intro,
    Pretest,
    Training(u8),
    Posttest,
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Intro => f.write_str("intro"),
            Level::Pretest => f.write_str("pretest"),
            Level::Training(n) => write!(f, "training level {n}"),
            Level::Posttest => f.write_str("posttest"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub level: Level,
    /// Difficulty inside the level; 1 is easiest.
    pub rank: u32,
    pub premises: Vec<Formula>,
    pub conclusion: Formula,
    pub rules: Vec<Rule>,
    pub expert: Vec<TraceStep>,
}

impl Problem {
    pub fn expert_trace(&self) -> SolutionTrace {
        SolutionTrace { problem: self.id.clone(), steps: self.expert.clone() }
    }
}

#[derive(Deserialize)]
struct RawBank {
    #[serde(default)]
    problem: Vec<RawProblem>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    id: String,
    level: String,
    training_level: Option<u8>,
    rank: u32,
    premises: Vec<String>,
    conclusion: String,
    #[serde(default)]
    rules: Vec<String>,
    expert: Vec<RawStep>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStep {
    rule: String,
    sources: Vec<String>,
    derived: String,
}

fn formula(id: &str, text: &str) -> Result<Formula, SessionError> {
    text.parse()
        .map_err(|e| SessionError::InvalidBank(format!("problem {id}: '{text}': {e}")))
}

fn rule(id: &str, text: &str) -> Result<Rule, SessionError> {
    text.parse()
        .map_err(|e| SessionError::InvalidBank(format!("problem {id}: {e}")))
}

impl RawProblem {
    fn convert(self) -> Result<Problem, SessionError> {
        let id = self.id;
        let level = match (self.level.to_ascii_lowercase().as_str(), self.training_level) {
            ("intro", None) => Level::Intro,
            ("pretest", None) => Level::Pretest,
            ("posttest", None) => Level::Posttest,
            ("training", Some(n)) if (1..=TRAINING_LEVELS).contains(&n) => Level::Training(n),
            (other, lvl) => {
                return Err(SessionError::InvalidBank(format!(
                    "problem {id}: bad level '{other}' (training_level {lvl:?})"
                )))
            }
        };
        let premises = self.premises.iter().map(|p| formula(&id, p)).collect::<Result<Vec<_>, _>>()?;
        let conclusion = formula(&id, &self.conclusion)?;
        let rules = self.rules.iter().map(|r| rule(&id, r)).collect::<Result<Vec<_>, _>>()?;
        let expert = self
            .expert
            .into_iter()
            .map(|s| {
                Ok(TraceStep {
                    rule: rule(&id, &s.rule)?,
                    sources: s.sources.iter().map(|f| formula(&id, f)).collect::<Result<_, _>>()?,
                    derived: formula(&id, &s.derived)?,
                })
            })
            .collect::<Result<Vec<_>, SessionError>>()?;
        Ok(Problem { id, level, rank: self.rank, premises, conclusion, rules, expert })
    }
}

/// All problems of a study, validated on load.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemBank {
    problems: Vec<Problem>,
}

impl ProblemBank {
    pub fn from_toml(text: &str) -> Result<Self, SessionError> {
        let raw: RawBank = toml::from_str(text).map_err(|e| SessionError::InvalidBank(e.to_string()))?;
        let problems = raw.problem.into_iter().map(RawProblem::convert).collect::<Result<Vec<_>, _>>()?;
        Self::new(problems)
    }

    pub fn default_bank() -> Self {
        Self::from_toml(DEFAULT_BANK).expect("bundled bank is valid")
    }

    /// Checks ids are unique, conclusions are not premises, and each expert
    /// solution is a complete valid derivation.
    pub fn new(problems: Vec<Problem>) -> Result<Self, SessionError> {
        let mut seen = HashMap::new();
        for p in &problems {
            if seen.insert(p.id.clone(), ()).is_some() {
                return Err(SessionError::InvalidBank(format!("duplicate problem id {}", p.id)));
            }
            if p.premises.contains(&p.conclusion) {
                return Err(SessionError::InvalidBank(format!("problem {}: conclusion is a premise", p.id)));
            }
            crate::hints::build_network(&p.id, &p.premises, &p.conclusion, &[], &p.expert_trace())
                .map_err(|e| SessionError::InvalidBank(format!("problem {}: expert solution: {e}", p.id)))?;
        }
        Ok(ProblemBank { problems })
    }

    pub fn problems(&self) -> &[Problem] {
        &self.problems
    }

    pub fn get(&self, id: &str) -> Option<&Problem> {
        self.problems.iter().find(|p| p.id == id)
    }

    /// Problems of one level, easiest first.
    pub fn level(&self, level: Level) -> Vec<&Problem> {
        let mut v: Vec<&Problem> = self.problems.iter().filter(|p| p.level == level).collect();
        v.sort_by(|a, b| a.rank.cmp(&b.rank).then_with(|| a.id.cmp(&b.id)));
        v
    }

    /// Slots a study session needs but this bank cannot fill.
    pub fn missing_slots(&self) -> Vec<String> {
        let mut need: Vec<(Level, usize)> =
            vec![(Level::Intro, INTRO_EXAMPLES), (Level::Pretest, PRETEST_PROBLEMS)];
        need.extend((1..=TRAINING_LEVELS).map(|n| (Level::Training(n), SOLVES_PER_LEVEL)));
        need.push((Level::Posttest, POSTTEST_PROBLEMS));
        need.into_iter()
            .filter_map(|(level, n)| {
                let have = self.level(level).len();
                (have < n).then(|| format!("{level}: need {n}, found {have}"))
            })
            .collect()
    }
}

/// A bank plus the hint model of every problem.
#[derive(Clone, Debug)]
pub struct Curriculum {
    bank: ProblemBank,
    models: BTreeMap<String, HintModel>,
}

impl Curriculum {
    /// `corpus` holds prior solutions; traces of unknown problems are ignored.
    pub fn build(bank: ProblemBank, corpus: &[SolutionTrace], params: &ValueParams) -> Result<Self, SessionError> {
        let mut models = BTreeMap::new();
        for p in bank.problems() {
            let traces: Vec<SolutionTrace> = corpus.iter().filter(|t| t.problem == p.id).cloned().collect();
            let model = HintModel::build(&p.id, &p.premises, &p.conclusion, &p.expert_trace(), &traces, params)
                .map_err(|e| SessionError::InvalidBank(format!("problem {}: {e}", p.id)))?;
            models.insert(p.id.clone(), model);
        }
        Ok(Curriculum { bank, models })
    }

    pub fn default_curriculum() -> Self {
        Self::build(ProblemBank::default_bank(), &[], &ValueParams::default()).expect("bundled bank is valid")
    }

    pub fn bank(&self) -> &ProblemBank {
        &self.bank
    }

    pub fn model(&self, problem: &str) -> Option<&HintModel> {
        self.models.get(problem)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bank_is_complete_and_valid() {
        let bank = ProblemBank::default_bank();
        assert!(bank.missing_slots().is_empty(), "{:?}", bank.missing_slots());
        assert_eq!(bank.level(Level::Intro).len(), 2);
        for n in 1..=TRAINING_LEVELS {
            assert!(bank.level(Level::Training(n)).len() > SOLVES_PER_LEVEL);
        }
        for p in bank.problems() {
            assert!(!p.rules.is_empty(), "{} has no info-box rules", p.id);
        }
    }

    #[test]
    fn missing_posttest_problem_is_reported() {
        let mut problems = ProblemBank::default_bank().problems().to_vec();
        let idx = problems.iter().position(|p| p.level == Level::Posttest).unwrap();
        problems.remove(idx);
        let bank = ProblemBank::new(problems).unwrap();
        assert_eq!(bank.missing_slots(), vec!["posttest: need 4, found 3".to_string()]);
    }

    #[test]
    fn rejects_broken_expert_solution() {
        let text = r#"
[[problem]]
id = "x"
level = "pretest"
rank = 1
premises = ["A->B", "A"]
conclusion = "B"
expert = [{ rule = "MT", sources = ["A->B", "A"], derived = "B" }]
"#;
        assert!(matches!(ProblemBank::from_toml(text), Err(SessionError::InvalidBank(_))));
    }

    #[test]
    fn rejects_conclusion_among_premises_and_bad_level() {
        let text = r#"
[[problem]]
id = "x"
level = "pretest"
rank = 1
premises = ["A"]
conclusion = "A"
expert = []
"#;
        assert!(ProblemBank::from_toml(text).is_err());
        let text = text.replace("\"pretest\"", "\"training\"").replace("conclusion = \"A\"", "conclusion = \"B\"");
        assert!(ProblemBank::from_toml(&text).is_err());
    }

    #[test]
    fn every_problem_gets_a_hint_model() {
        let c = Curriculum::default_curriculum();
        for p in c.bank().problems() {
            let m = c.model(&p.id).unwrap();
            let start = crate::hints::StateKey::new(p.premises.iter(), false);
            assert!(m.hint(&[start]).is_ok(), "{}", p.id);
        }
    }
}
