//! Batch commands behind the CLI.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use tutor_analytics::{analyze, CohortReport};
use tutor_core::hints::{parse_corpus, ValueParams};
use tutor_core::session::{write_log, Curriculum, ProblemBank};
use tutor_core::sim::{simulate_cohort, CohortConfig};

use crate::store::{load_dir, LogStore};

/// Loads a bank file (or the bundled bank) and an optional corpus of prior
/// solutions, then builds the hint models.
pub fn load_curriculum(bank: Option<&Path>, corpus: Option<&Path>) -> Result<Curriculum> {
    let bank = match bank {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            ProblemBank::from_toml(&text).with_context(|| format!("loading {}", path.display()))?
        }
        None => ProblemBank::default_bank(),
    };
    let traces = match corpus {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            parse_corpus(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => Vec::new(),
    };
    Ok(Curriculum::build(bank, &traces, &ValueParams::default())?)
}

/// Runs a cohort and writes one log per session into `out`. Returns the
/// number of sessions written.
pub fn simulate(curriculum: Arc<Curriculum>, config: &CohortConfig, out: &Path) -> Result<usize> {
    let sessions = simulate_cohort(&curriculum, config)?;
    let store = LogStore::open(out)?;
    for s in &sessions {
        store.write_all(s.id(), s.events())?;
    }
    Ok(sessions.len())
}

/// Analyzes every log in `logs` and writes the tab-separated report.
pub fn analyze_dir(logs: &Path, out: &Path) -> Result<CohortReport> {
    let loaded = load_dir(logs)?;
    if loaded.is_empty() {
        bail!("no .jsonl logs found in {}", logs.display());
    }
    let events: Vec<_> = loaded.into_iter().map(|(_, e)| e).collect();
    let report = analyze(&events)?;
    fs::write(out, report.to_tsv()).with_context(|| format!("writing {}", out.display()))?;
    Ok(report)
}

/// Concatenated logs, for byte comparisons.
pub fn render_logs(dir: &Path) -> Result<String> {
    Ok(load_dir(dir)?.iter().map(|(_, e)| write_log(e)).collect())
}
