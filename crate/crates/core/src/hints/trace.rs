//! Solution traces and the line-delimited trace corpus format.
//!
//! One step per line, tab separated:
//!
//! ```text
//! problem-id <TAB> ordinal <TAB> rule <TAB> source;source <TAB> derived
//! ```
//!
//! Ordinal 1 starts a new trace. Blank lines and lines starting with `#` are
//! ignored.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::HintError;
use crate::logic::{Formula, Rule};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub rule: Rule,
    pub sources: Vec<Formula>,
    pub derived: Formula,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionTrace {
    pub problem: String,
    pub steps: Vec<TraceStep>,
}

pub fn parse_corpus(text: &str) -> Result<Vec<SolutionTrace>, HintError> {
    let mut traces: Vec<SolutionTrace> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| HintError::CorpusSyntax { line: lineno + 1, message };
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(bad(format!("expected 5 tab-separated fields, found {}", fields.len())));
        }
        let ordinal: usize = fields[1].trim().parse().map_err(|_| bad(format!("bad ordinal '{}'", fields[1])))?;
        let rule: Rule = fields[2].parse().map_err(|e| bad(format!("{e}")))?;
        let sources = fields[3]
            .split(';')
            .filter(|s| !s.trim().is_empty())
            .map(|s| Formula::parse(s).map_err(|e| bad(format!("source: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        let derived = Formula::parse(fields[4]).map_err(|e| bad(format!("derived: {e}")))?;
        let problem = fields[0].trim().to_string();
        let step = TraceStep { rule, sources, derived };
        match traces.last_mut() {
            Some(t) if ordinal != 1 && t.problem == problem => {
                if ordinal != t.steps.len() + 1 {
                    return Err(bad(format!("ordinal {ordinal} does not follow {}", t.steps.len())));
                }
                t.steps.push(step);
            }
            _ if ordinal == 1 => traces.push(SolutionTrace { problem, steps: vec![step] }),
            _ => return Err(bad(format!("trace must start at ordinal 1, found {ordinal}"))),
        }
    }
    Ok(traces)
}

pub fn write_corpus(traces: &[SolutionTrace]) -> String {
    let mut out = String::new();
    for t in traces {
        for (i, s) in t.steps.iter().enumerate() {
            let sources: Vec<String> = s.sources.iter().map(Formula::render).collect();
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{}", t.problem, i + 1, s.rule, sources.join(";"), s.derived);
        }
    }
    out
}
