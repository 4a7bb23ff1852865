//! CSV tables, their column documentation, and the JSON run manifest.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stats::Summary;
use super::{AggregateRow, ExperimentPlan, PlanOutput};
use crate::error::Result;
use crate::phy::{is_valid, sinr, StrategyProfile};
use crate::scenario::{linear_to_db, Topology};

/// Columns and meaning of one output file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CsvDoc {
    pub file: &'static str,
    pub columns: &'static [&'static str],
    pub description: &'static str,
}

const SUMMARY_COLUMNS: &[&str] = &["label", "link_count", "runs", "failures", "mean", "std", "ci95"];

/// Every CSV file the tool writes.
pub const CSV_DOCS: &[CsvDoc] = &[
    CsvDoc {
        file: "instances.csv",
        columns: &[
            "label", "link_count", "instance", "topology_seed", "run_seed", "status", "nu", "nu_valid", "valid_links",
            "iterations", "converged", "error",
        ],
        description: "one row per (label, link count, instance); status is ok or error; converged is empty for learners and the GA",
    },
    CsvDoc { file: "nu.csv", columns: SUMMARY_COLUMNS, description: "network utility per cell: mean, sample std, 95% CI half-width" },
    CsvDoc { file: "nu_valid.csv", columns: SUMMARY_COLUMNS, description: "network utility over valid links only" },
    CsvDoc { file: "valid_links.csv", columns: SUMMARY_COLUMNS, description: "links meeting the SINR threshold" },
    CsvDoc {
        file: "iterations.csv",
        columns: SUMMARY_COLUMNS,
        description: "steps used (games), learning steps (learners) or generations (GA)",
    },
    CsvDoc {
        file: "convergence.csv",
        columns: &["label", "link_count", "runs", "converged", "convergence_rate"],
        description: "fraction of game runs ending in a verified pure equilibrium; empty for learners and the GA",
    },
    CsvDoc {
        file: "trajectory.csv",
        columns: &["step", "acting", "nu", "nu_valid", "valid_links", "changed"],
        description: "repeated game, one row per step; acting lists the players that moved, ';'-separated",
    },
    CsvDoc {
        file: "profile.csv",
        columns: &["link", "strategy", "channel", "power_mw", "sinr_db", "valid"],
        description: "one row per link of a joint assignment; channel and power empty when off",
    },
    CsvDoc {
        file: "learning_trajectory.csv",
        columns: &["step", "nu", "nu_valid", "valid_links"],
        description: "learning run, metrics of the realized joint play each step",
    },
    CsvDoc {
        file: "mixed_strategies.csv",
        columns: &["link", "strategy", "probability"],
        description: "final mixed strategy of every learner",
    },
    CsvDoc {
        file: "regret.csv",
        columns: &["link", "average_external_regret"],
        description: "time-averaged external regret of every learner",
    },
    CsvDoc {
        file: "ga_progress.csv",
        columns: &["generation", "best_nu", "mean_nu"],
        description: "GA population fitness per generation (generation 0 is the initial population)",
    },
];

pub fn csv_doc(file: &str) -> Option<&'static CsvDoc> {
    CSV_DOCS.iter().find(|d| d.file == file)
}

/// Column reference for `--help` output.
pub fn columns_help() -> String {
    CSV_DOCS.iter().map(|d| format!("  {}: {}\n", d.file, d.columns.join(","))).collect()
}

/// Run description written next to the outputs. Holds no timestamps or
/// host details so repeated runs produce identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub files: Vec<ManifestFile>,
    pub summary: serde_json::Value,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub file: String,
    pub columns: Vec<String>,
    pub description: String,
}

impl ManifestFile {
    /// Entry for a documented CSV, or a bare entry for other files.
    pub fn for_file(file: &str) -> Self {
        match csv_doc(file) {
            Some(d) => Self {
                file: d.file.into(),
                columns: d.columns.iter().map(|c| c.to_string()).collect(),
                description: d.description.into(),
            },
            None => Self { file: file.into(), columns: Vec::new(), description: String::new() },
        }
    }
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, config: serde_json::Value) -> Self {
        Self {
            tool: "crn".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config,
            files: Vec::new(),
            summary: serde_json::Value::Null,
            warnings: Vec::new(),
        }
    }

    pub fn add_file(&mut self, file: &str) {
        self.files.push(ManifestFile::for_file(file));
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }
}

/// CSV of a joint assignment with per-link SINR and validity.
pub fn write_profile_csv<W: Write>(out: W, profile: &StrategyProfile, topo: &Topology, alpha: f64) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(csv_doc("profile.csv").expect("documented").columns)?;
    for i in 0..profile.len() {
        let s = profile[i];
        let (channel, power, sinr_db) = match s.channel() {
            Some(c) => (c.to_string(), s.power_mw(topo).to_string(), linear_to_db(sinr(i, profile, topo)).to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        let valid = s.is_on() && is_valid(i, profile, topo, alpha);
        w.write_record([i.to_string(), s.to_string(), channel, power, sinr_db, valid.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_summary_csv(path: &Path, rows: &[AggregateRow], pick: fn(&AggregateRow) -> &Summary) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(SUMMARY_COLUMNS)?;
    for r in rows {
        let s = pick(r);
        w.write_record([
            r.label.to_string(),
            r.link_count.to_string(),
            r.runs.to_string(),
            r.failures.to_string(),
            s.mean.to_string(),
            s.std.to_string(),
            s.ci95.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the per-instance table, one CSV per metric family and the
/// manifest into `dir`.
pub fn write_plan_outputs(dir: &Path, plan: &ExperimentPlan, output: &PlanOutput) -> Result<Manifest> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join("instances.csv"))?;
    w.write_record(csv_doc("instances.csv").expect("documented").columns)?;
    for r in &output.records {
        let head = [
            r.label.to_string(),
            r.link_count.to_string(),
            r.instance.to_string(),
            r.topology_seed.to_string(),
            r.run_seed.to_string(),
        ];
        let tail: [String; 7] = match &r.outcome {
            Ok(o) => [
                "ok".into(),
                o.nu.to_string(),
                o.nu_valid.to_string(),
                o.valid_links.to_string(),
                o.iterations.to_string(),
                o.converged.map(|c| c.to_string()).unwrap_or_default(),
                String::new(),
            ],
            Err(e) => ["error".into(), String::new(), String::new(), String::new(), String::new(), String::new(), e.clone()],
        };
        w.write_record(head.iter().chain(tail.iter()))?;
    }
    w.flush()?;

    write_summary_csv(&dir.join("nu.csv"), &output.aggregates, |r| &r.nu)?;
    write_summary_csv(&dir.join("nu_valid.csv"), &output.aggregates, |r| &r.nu_valid)?;
    write_summary_csv(&dir.join("valid_links.csv"), &output.aggregates, |r| &r.valid_links)?;
    write_summary_csv(&dir.join("iterations.csv"), &output.aggregates, |r| &r.iterations)?;

    let mut w = csv::Writer::from_path(dir.join("convergence.csv"))?;
    w.write_record(csv_doc("convergence.csv").expect("documented").columns)?;
    for r in &output.aggregates {
        let (converged, rate) = match r.convergence_rate {
            Some(rate) => (((rate * r.runs as f64).round() as usize).to_string(), rate.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([r.label.to_string(), r.link_count.to_string(), r.runs.to_string(), converged, rate])?;
    }
    w.flush()?;

    let mut manifest = Manifest::new("batch", Some(plan.base_seed), serde_json::to_value(plan.to_file()?)?);
    for f in ["instances.csv", "nu.csv", "nu_valid.csv", "valid_links.csv", "iterations.csv", "convergence.csv"] {
        manifest.add_file(f);
    }
    manifest.summary = serde_json::to_value(&output.aggregates)?;
    manifest.warnings = output.warnings.clone();
    manifest.write(dir)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{run_plan, LearningSettings};
    use crate::ga::GaConfig;
    use crate::scenario::ScenarioConfig;

    #[test]
    fn batch_outputs_are_reproducible() {
        let plan = ExperimentPlan {
            scenario: ScenarioConfig::desk(30, 6, 4),
            labels: vec!["dc-a-potential".parse().unwrap(), "dcp-a-fs".parse().unwrap(), "ga-dc".parse().unwrap()],
            link_counts: vec![6],
            instances: 2,
            learning: LearningSettings { total_steps: 200, ..Default::default() },
            ga: GaConfig { max_generations: 10, ..GaConfig::desk() },
            ..Default::default()
        };
        let read_all = |dir: &Path| {
            let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
                .unwrap()
                .map(|e| {
                    let e = e.unwrap();
                    (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
                })
                .collect();
            files.sort();
            files
        };
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        write_plan_outputs(a.path(), &plan, &run_plan(&plan).unwrap()).unwrap();
        write_plan_outputs(b.path(), &plan, &run_plan(&plan).unwrap()).unwrap();
        let fa = read_all(a.path());
        assert_eq!(fa.len(), 7);
        assert_eq!(fa, read_all(b.path()));

        let instances = String::from_utf8(fs::read(a.path().join("instances.csv")).unwrap()).unwrap();
        assert_eq!(instances.lines().next().unwrap(), csv_doc("instances.csv").unwrap().columns.join(","));
        assert_eq!(instances.lines().count(), 1 + 3 * 2);
        let manifest: Manifest = serde_json::from_slice(&fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest.files.len(), 6);
        assert_eq!(ExperimentPlan::from_file(serde_json::from_value(manifest.config).unwrap()).unwrap(), plan);
    }

    #[test]
    fn every_doc_is_unique() {
        let mut names: Vec<&str> = CSV_DOCS.iter().map(|d| d.file).collect();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), CSV_DOCS.len());
        assert!(columns_help().contains("ga_progress.csv: generation,best_nu,mean_nu"));
    }
}
