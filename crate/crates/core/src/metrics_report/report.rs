use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{avg_fixation_time, build_transition_matrix, symmetry_index, TransitionMatrix, TransitionOptions};
use crate::conversation::{CategoryRatios, Label};
use crate::eye_contact::EyeContactSummary;
use crate::object_fixation::FixationAssignment;
use crate::Category;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("session has no usable subsystem output; missing: {}", missing.join("; "))]
    IncompleteSession { missing: Vec<String> },
}

impl MetricsError {
    pub fn name(&self) -> &'static str {
        "IncompleteSession"
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationSection {
    /// Mean seconds per fixation; categories without fixations are absent.
    pub avg_fixation_s: BTreeMap<Category, f64>,
    pub total_fixation_s: BTreeMap<Category, f64>,
    pub fixation_counts: BTreeMap<Category, usize>,
    pub transition: TransitionMatrix,
    pub symmetry_index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EyeContactSection {
    pub ec_total: usize,
    pub ec_per_dyad: BTreeMap<String, usize>,
    /// Ungrouped mutual-gaze instants per dyad.
    pub instants_per_dyad: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConversationSection {
    pub conv_ratios: BTreeMap<Label, f64>,
    pub label_counts: BTreeMap<Label, usize>,
    pub leader_utterances: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadershipReport {
    pub session_id: String,
    pub leader_id: String,
    pub fixation: Option<FixationSection>,
    pub eye_contact: Option<EyeContactSection>,
    pub conversation: Option<ConversationSection>,
    /// Why each null section is null.
    pub missing: BTreeMap<String, String>,
    pub human_scores: Option<BTreeMap<String, String>>,
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run_metadata: Option<serde_json::Value>,
}

pub struct ReportInputs<'a> {
    pub session_id: &'a str,
    pub leader_id: &'a str,
    pub assignments: Option<&'a [FixationAssignment]>,
    pub transition: TransitionOptions,
    pub eye_contact: Option<&'a EyeContactSummary>,
    pub conversation: Option<&'a CategoryRatios>,
    /// Section name to reason, for sections whose input is absent.
    pub missing: BTreeMap<String, String>,
    pub human_scores: Option<BTreeMap<String, String>>,
    pub params: serde_json::Value,
}

pub fn assemble_report(inputs: ReportInputs<'_>) -> Result<LeadershipReport, MetricsError> {
    let fixation = inputs.assignments.map(|a| {
        let stats = avg_fixation_time(a);
        let transition = build_transition_matrix(a, inputs.transition);
        FixationSection {
            avg_fixation_s: stats.iter().map(|(&c, s)| (c, s.mean_s)).collect(),
            total_fixation_s: Category::ALL
                .iter()
                .map(|c| (*c, stats.get(c).map_or(0.0, |s| s.total_s)))
                .collect(),
            fixation_counts: Category::ALL.iter().map(|c| (*c, stats.get(c).map_or(0, |s| s.count))).collect(),
            symmetry_index: symmetry_index(&transition),
            transition,
        }
    });
    let eye_contact = inputs.eye_contact.map(|s| EyeContactSection {
        ec_total: s.total,
        ec_per_dyad: s.per_dyad.iter().map(|(k, d)| (k.clone(), d.events)).collect(),
        instants_per_dyad: s.per_dyad.iter().map(|(k, d)| (k.clone(), d.instants)).collect(),
    });
    let conversation = inputs.conversation.map(|r| ConversationSection {
        conv_ratios: r.percent.clone(),
        label_counts: r.counts.clone(),
        leader_utterances: r.leader_utterances,
    });
    if fixation.is_none() && eye_contact.is_none() && conversation.is_none() {
        let missing = inputs.missing.iter().map(|(k, v)| format!("{k}: {v}")).collect();
        return Err(MetricsError::IncompleteSession { missing });
    }
    Ok(LeadershipReport {
        session_id: inputs.session_id.to_string(),
        leader_id: inputs.leader_id.to_string(),
        fixation,
        eye_contact,
        conversation,
        missing: inputs.missing,
        human_scores: inputs.human_scores,
        params: inputs.params,
        run_metadata: None,
    })
}

impl LeadershipReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json_str(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Transition counts as CSV: a `from` column then one column per state.
    pub fn transition_csv(&self) -> Option<String> {
        let m = &self.fixation.as_ref()?.transition;
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["from".to_string()];
        header.extend(m.states.iter().map(|c| c.to_string()));
        w.write_record(&header).expect("in-memory write");
        for (state, row) in m.states.iter().zip(&m.counts) {
            let mut rec = vec![state.to_string()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec).expect("in-memory write");
        }
        Some(String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is UTF-8"))
    }

    pub fn to_markdown(&self) -> String {
        let na = "n/a".to_string();
        let mut md = String::new();
        let _ = writeln!(md, "# Leadership report: {}\n", self.session_id);
        let _ = writeln!(md, "Leader: `{}`\n", self.leader_id);

        let human: Vec<(&String, &String)> = self.human_scores.iter().flatten().collect();
        let mut header = vec!["Leader".to_string()];
        header.extend(Category::ALL.iter().map(|c| format!("Fix {c} (s)")));
        header.push("EC Count".into());
        header.extend(Label::CLASSES.iter().map(|l| format!("{l} (%)")));
        header.extend(human.iter().map(|(k, _)| k.to_string()));

        let mut row = vec![self.leader_id.clone()];
        for c in Category::ALL {
            row.push(
                self.fixation
                    .as_ref()
                    .and_then(|f| f.avg_fixation_s.get(&c))
                    .map_or(na.clone(), |v| format!("{v:.2}")),
            );
        }
        row.push(self.eye_contact.as_ref().map_or(na.clone(), |e| e.ec_total.to_string()));
        for l in Label::CLASSES {
            row.push(
                self.conversation
                    .as_ref()
                    .and_then(|c| c.conv_ratios.get(&l))
                    .map_or(na.clone(), |v| format!("{v:.1}")),
            );
        }
        row.extend(human.iter().map(|(_, v)| v.to_string()));

        let _ = writeln!(md, "| {} |", header.join(" | "));
        let _ = writeln!(md, "|{}|", vec!["---"; header.len()].join("|"));
        let _ = writeln!(md, "| {} |\n", row.join(" | "));

        if let Some(f) = &self.fixation {
            let _ = writeln!(md, "## Fixation transitions\n");
            let _ = writeln!(md, "Rows are the fixated category, columns the next one.\n");
            let names: Vec<String> = f.transition.states.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(md, "| from \\ to | {} |", names.join(" | "));
            let _ = writeln!(md, "|{}|", vec!["---"; names.len() + 1].join("|"));
            for (name, counts) in names.iter().zip(&f.transition.counts) {
                let cells: Vec<String> = counts.iter().map(u64::to_string).collect();
                let _ = writeln!(md, "| {name} | {} |", cells.join(" | "));
            }
            let _ = writeln!(md, "\nSymmetry index: {:.3}\n", f.symmetry_index);
            let counts: Vec<String> =
                Category::ALL.iter().map(|c| format!("{c} {}", f.fixation_counts.get(c).copied().unwrap_or(0))).collect();
            let _ = writeln!(md, "Fixation counts: {}\n", counts.join(", "));
        }
        if let Some(e) = &self.eye_contact {
            let _ = writeln!(md, "## Eye contact\n");
            let _ = writeln!(md, "| member | events | instants |\n|---|---|---|");
            for (m, n) in &e.ec_per_dyad {
                let _ = writeln!(md, "| {m} | {n} | {} |", e.instants_per_dyad.get(m).copied().unwrap_or(0));
            }
            md.push('\n');
        }
        if let Some(c) = &self.conversation {
            let _ = writeln!(md, "## Conversation\n");
            let _ = writeln!(md, "{} leader utterances.\n", c.leader_utterances);
        }
        if !self.missing.is_empty() {
            let _ = writeln!(md, "## Not computed\n");
            for (k, v) in &self.missing {
                let _ = writeln!(md, "- {k}: {v}");
            }
        }
        md
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics_report::tests::assignments;
    use Category::*;

    fn inputs<'a>(a: Option<&'a [FixationAssignment]>) -> ReportInputs<'a> {
        ReportInputs {
            session_id: "s1",
            leader_id: "L",
            assignments: a,
            transition: TransitionOptions::default(),
            eye_contact: None,
            conversation: None,
            missing: BTreeMap::from([("eye_contact".to_string(), "no face tracks".to_string())]),
            human_scores: Some(BTreeMap::from([("TEAM".to_string(), "38".to_string())])),
            params: serde_json::json!({"k": 5.0}),
        }
    }

    #[test]
    fn null_sections_and_round_trip() {
        let a = assignments(&[(Patient, 2.0), (Member, 1.3), (Patient, 2.56), (Screen, 0.7)]);
        let r = assemble_report(inputs(Some(&a))).unwrap();
        assert!(r.eye_contact.is_none() && r.conversation.is_none());
        let f = r.fixation.as_ref().unwrap();
        for c in Category::ALL {
            let avg = f.avg_fixation_s.get(&c).copied().unwrap_or(0.0);
            assert!((avg * f.fixation_counts[&c] as f64 - f.total_fixation_s[&c]).abs() < 1e-9);
        }
        assert!(!f.avg_fixation_s.contains_key(&Device));
        let text = r.to_json_string();
        assert!(text.contains("\"eye_contact\": null"));
        assert_eq!(LeadershipReport::from_json_str(&text).unwrap(), r);

        let md = r.to_markdown();
        assert!(md.contains("| 2.28 |"));
        assert!(md.contains("| n/a |"));
        assert!(md.contains("TEAM"));
        let csv = r.transition_csv().unwrap();
        assert!(csv.starts_with("from,patient,member,screen,device,unknown\npatient,0,1,1,0,0\n"));
    }

    #[test]
    fn all_missing_is_incomplete() {
        assert_eq!(assemble_report(inputs(None)).unwrap_err().name(), "IncompleteSession");
    }
}
