//! Cohort-level analysis and its tab-separated report.

use std::fmt::Write as _;

use tutor_core::session::InteractionEvent;

use crate::cluster::{ward_cluster, ClusterModel};
use crate::log::reconstruct;
use crate::metrics::{student_metrics, StudentMetrics};
use crate::proficiency::{proficiency_split, ProficiencyClass, ProficiencyInput};
use crate::stats::pearson_corr;
use crate::AnalyticsError;

pub const CLUSTER_FEATURES: [&str; 5] = ["posttest_time", "posttest_length", "unsolved_time", "restarts", "hjr"];
pub const K_RANGE: std::ops::RangeInclusive<usize> = 2..=5;

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationRow {
    pub group: &'static str,
    pub outcome: &'static str,
    pub predictor: &'static str,
    pub n: usize,
    pub r: Result<f64, AnalyticsError>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CohortReport {
    pub students: Vec<StudentMetrics>,
    /// Score and class for students with a complete pretest.
    pub proficiency: Vec<Option<(f64, ProficiencyClass)>>,
    pub degenerate_proficiency: Vec<&'static str>,
    pub proficiency_error: Option<AnalyticsError>,
    /// Students that entered clustering, by index into `students`.
    pub clustered: Vec<usize>,
    pub cluster: Result<ClusterModel, AnalyticsError>,
    pub correlations: Vec<CorrelationRow>,
}

/// Cluster features of a student, if all are defined.
pub fn cluster_features(m: &StudentMetrics) -> Option<Vec<f64>> {
    let post = m.posttest.as_ref().ok()?;
    let hjr = m.hints.unsolicited().hjr()?;
    Some(vec![post.time_minutes, post.avg_length, m.effort.unsolved_minutes, m.effort.restarts as f64, hjr])
}

/// Analyzes one log per student.
pub fn analyze(logs: &[Vec<InteractionEvent>]) -> Result<CohortReport, AnalyticsError> {
    let students: Vec<StudentMetrics> =
        logs.iter().map(|l| reconstruct(l).map(|s| student_metrics(&s))).collect::<Result<_, _>>()?;

    let with_pretest: Vec<usize> = (0..students.len()).filter(|&i| students[i].pretest.is_ok()).collect();
    let inputs: Vec<ProficiencyInput> =
        with_pretest.iter().map(|&i| ProficiencyInput::from(students[i].pretest.as_ref().expect("filtered"))).collect();
    let mut proficiency = vec![None; students.len()];
    let (degenerate_proficiency, proficiency_error) = match proficiency_split(&inputs) {
        Ok(p) => {
            for (slot, &i) in with_pretest.iter().enumerate() {
                proficiency[i] = Some((p.scores[slot], p.classes[slot]));
            }
            (p.degenerate, None)
        }
        Err(e) => (Vec::new(), Some(e)),
    };

    let clustered: Vec<usize> = (0..students.len()).filter(|&i| cluster_features(&students[i]).is_some()).collect();
    let rows: Vec<Vec<f64>> = clustered.iter().map(|&i| cluster_features(&students[i]).expect("filtered")).collect();
    let cluster = ward_cluster(&rows, K_RANGE);

    let correlations = correlations(&students, &proficiency);
    Ok(CohortReport {
        students,
        proficiency,
        degenerate_proficiency,
        proficiency_error,
        clustered,
        cluster,
        correlations,
    })
}

fn correlations(students: &[StudentMetrics], proficiency: &[Option<(f64, ProficiencyClass)>]) -> Vec<CorrelationRow> {
    type Pick = fn(&StudentMetrics) -> Option<f64>;
    let outcomes: [(&'static str, Pick); 2] = [
        ("posttest_length", |m| m.posttest.as_ref().ok().map(|p| p.avg_length)),
        ("posttest_time", |m| m.posttest.as_ref().ok().map(|p| p.time_minutes)),
    ];
    let predictors: [(&'static str, Pick); 3] = [
        ("unsolicited_given", |m| Some(m.hints.unsolicited().given as f64)),
        ("unsolicited_hjr", |m| m.hints.unsolicited().hjr()),
        ("unsolicited_hnr", |m| m.hints.unsolicited().hnr()),
    ];
    let groups: [(&'static str, Option<ProficiencyClass>); 3] =
        [("All", None), ("Low", Some(ProficiencyClass::Low)), ("High", Some(ProficiencyClass::High))];
    let mut rows = Vec::new();
    for (group, class) in groups {
        for (outcome, y_of) in outcomes {
            for (predictor, x_of) in predictors {
                let (xs, ys): (Vec<f64>, Vec<f64>) = students
                    .iter()
                    .zip(proficiency)
                    .filter(|(_, p)| class.is_none() || p.map(|(_, c)| c) == class)
                    .filter_map(|(m, _)| Some((x_of(m)?, y_of(m)?)))
                    .unzip();
                rows.push(CorrelationRow { group, outcome, predictor, n: xs.len(), r: pearson_corr(&xs, &ys) });
            }
        }
    }
    rows
}

fn num(v: Option<f64>) -> String {
    match v {
        Some(x) if x.is_finite() => format!("{x:.4}"),
        Some(x) if x > 0.0 => "inf".into(),
        Some(_) => "-inf".into(),
        None => "NA".into(),
    }
}

impl CohortReport {
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        let _ = writeln!(w, "# students");
        let _ = writeln!(
            w,
            "session\tstudent\tcondition\thints_given\thints_justified\thints_needed\thjr\thnr\t\
             unsolicited_given\tunsolicited_justified\tunsolicited_needed\tunsolicited_hjr\tunsolicited_hnr\t\
             on_demand_given\tmessage_given\tassertion_given\t\
             pre_length\tpre_time\tpre_accuracy\tpost_length\tpost_time\tpost_accuracy\t\
             proficiency\tproficiency_class\tunsolved_time\trestarts\tcluster"
        );
        for (i, m) in self.students.iter().enumerate() {
            let t = m.hints.total();
            let u = m.hints.unsolicited();
            let pre = m.pretest.as_ref().ok();
            let post = m.posttest.as_ref().ok();
            let (score, class) = match self.proficiency[i] {
                Some((s, c)) => (num(Some(s)), format!("{c:?}")),
                None => ("NA".into(), "NA".into()),
            };
            let cluster = match (&self.cluster, self.clustered.iter().position(|&c| c == i)) {
                (Ok(model), Some(slot)) => (model.assignments[slot] + 1).to_string(),
                _ => "NA".into(),
            };
            let _ = writeln!(
                w,
                "{}\t{}\t{:?}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                m.session,
                m.student,
                m.condition,
                t.given,
                t.justified,
                t.needed,
                num(t.hjr()),
                num(t.hnr()),
                u.given,
                u.justified,
                u.needed,
                num(u.hjr()),
                num(u.hnr()),
                m.hints.on_demand.given,
                m.hints.message.given,
                m.hints.assertion.given,
                num(pre.map(|p| p.avg_length)),
                num(pre.map(|p| p.time_minutes)),
                num(pre.map(|p| p.accuracy)),
                num(post.map(|p| p.avg_length)),
                num(post.map(|p| p.time_minutes)),
                num(post.map(|p| p.accuracy)),
                score,
                class,
                num(Some(m.effort.unsolved_minutes)),
                m.effort.restarts,
                cluster,
            );
        }
        if !self.degenerate_proficiency.is_empty() {
            let _ = writeln!(w, "# constant proficiency inputs: {}", self.degenerate_proficiency.join(", "));
        }
        if let Some(e) = &self.proficiency_error {
            let _ = writeln!(w, "# proficiency unavailable: {e}");
        }

        let _ = writeln!(w, "\n# cluster_indices");
        match &self.cluster {
            Ok(model) => {
                let _ = writeln!(w, "k\tsilhouette\tdavies_bouldin\tcalinski_harabasz\tchosen");
                for (k, ix) in &model.indices {
                    let _ = writeln!(
                        w,
                        "{k}\t{}\t{}\t{}\t{}",
                        num(Some(ix.silhouette)),
                        num(Some(ix.davies_bouldin)),
                        num(Some(ix.calinski_harabasz)),
                        if *k == model.k { "*" } else { "" }
                    );
                }
                let _ = writeln!(w, "\n# cluster_centroids");
                let _ = writeln!(w, "cluster\tn\t{}", CLUSTER_FEATURES.join("\t"));
                for (c, centroid) in model.centroids.iter().enumerate() {
                    let size = model.assignments.iter().filter(|&&a| a == c).count();
                    let cols: Vec<String> = centroid.iter().map(|v| num(Some(*v))).collect();
                    let _ = writeln!(w, "{}\t{size}\t{}", c + 1, cols.join("\t"));
                }
            }
            Err(e) => {
                let _ = writeln!(w, "# clustering unavailable: {e}");
            }
        }

        let _ = writeln!(w, "\n# correlations");
        let _ = writeln!(w, "group\toutcome\tpredictor\tn\tr");
        for row in &self.correlations {
            let _ = writeln!(w, "{}\t{}\t{}\t{}\t{}", row.group, row.outcome, row.predictor, row.n, num(row.r.clone().ok()));
        }
        out
    }
}
