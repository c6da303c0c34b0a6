//! Cross-run comparison of manifests from runs of the same physical system.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{NpiError, Result};
use crate::manifest::RunManifest;
use crate::output::num;

/// One row per sweep member, ordered by bead count then input order.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub source: String,
    pub beads: usize,
    pub seed: u64,
    pub temperature: Option<f64>,
    pub temperature_err: Option<f64>,
    pub flux: Option<f64>,
    pub flux_err: Option<f64>,
    /// Differences to the previous row.
    pub delta_temperature: Option<f64>,
    pub delta_flux: Option<f64>,
    pub relative_delta_flux: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub physics_hash: String,
    pub rows: Vec<SummaryRow>,
}

pub const SUMMARY_HEADER: [&str; 10] = [
    "source",
    "beads",
    "seed",
    "temperature",
    "temperature_err",
    "flux",
    "flux_err",
    "delta_temperature",
    "delta_flux",
    "relative_delta_flux",
];

pub fn summarize_paths(paths: &[PathBuf]) -> Result<Summary> {
    let manifests =
        paths.iter().map(|p| Ok((p.display().to_string(), RunManifest::load(p)?))).collect::<Result<Vec<_>>>()?;
    summarize(&manifests)
}

/// Refuses manifests whose physics hashes differ: those runs describe different systems.
pub fn summarize(manifests: &[(String, RunManifest)]) -> Result<Summary> {
    let (first_name, first) = manifests.first().ok_or_else(|| NpiError::Incompatible("no manifests given".into()))?;
    for (name, m) in &manifests[1..] {
        if m.physics_hash != first.physics_hash {
            return Err(NpiError::Incompatible(format!(
                "{name} ({} run, physics {}) and {first_name} ({} run, physics {}) simulate different systems",
                m.mode.name(),
                short(&m.physics_hash),
                first.mode.name(),
                short(&first.physics_hash)
            )));
        }
    }
    let mut rows: Vec<SummaryRow> = manifests
        .iter()
        .flat_map(|(name, m)| {
            m.results.iter().map(move |r| SummaryRow {
                source: name.clone(),
                beads: r.beads,
                seed: r.seed,
                temperature: r.temperature,
                temperature_err: r.temperature_err,
                flux: r.flux,
                flux_err: r.flux_err,
                delta_temperature: None,
                delta_flux: None,
                relative_delta_flux: None,
            })
        })
        .collect();
    rows.sort_by_key(|r| r.beads);
    for k in 1..rows.len() {
        let (prev, cur) = (rows[k - 1].clone(), &mut rows[k]);
        cur.delta_temperature = prev.temperature.zip(cur.temperature).map(|(a, b)| b - a);
        cur.delta_flux = prev.flux.zip(cur.flux).map(|(a, b)| b - a);
        cur.relative_delta_flux = prev.flux.zip(cur.delta_flux).map(|(a, d)| (d / a).abs());
    }
    Ok(Summary { physics_hash: first.physics_hash.clone(), rows })
}

fn short(hash: &str) -> &str {
    &hash[..hash.len().min(12)]
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

impl SummaryRow {
    fn fields(&self) -> Vec<String> {
        vec![
            self.source.clone(),
            self.beads.to_string(),
            self.seed.to_string(),
            opt(self.temperature),
            opt(self.temperature_err),
            opt(self.flux),
            opt(self.flux_err),
            opt(self.delta_temperature),
            opt(self.delta_flux),
            opt(self.relative_delta_flux),
        ]
    }
}

impl Summary {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| NpiError::Serialization(e.to_string());
        w.write_record(SUMMARY_HEADER).map_err(err)?;
        for r in &self.rows {
            w.write_record(r.fields()).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| NpiError::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| NpiError::Serialization(e.to_string()))
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.5}"));
        let head = ["P", "T", "T_err", "J", "J_err", "dT", "dJ", "|dJ/J|", "source"];
        let mut cells: Vec<Vec<String>> = vec![head.map(String::from).to_vec()];
        for r in &self.rows {
            cells.push(vec![
                r.beads.to_string(),
                fmt(r.temperature),
                fmt(r.temperature_err),
                fmt(r.flux),
                fmt(r.flux_err),
                fmt(r.delta_temperature),
                fmt(r.delta_flux),
                fmt(r.relative_delta_flux),
                r.source.clone(),
            ]);
        }
        let widths: Vec<usize> =
            (0..head.len()).map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0)).collect();
        let mut out = format!("physics {}\n", short(&self.physics_hash));
        for row in cells {
            let line: Vec<String> = row.iter().zip(&widths).map(|(s, w)| format!("{s:>w$}")).collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        out
    }
}

pub fn write_summary(summary: &Summary, out: &Path) -> Result<()> {
    std::fs::write(out, summary.to_csv()?).map_err(|e| NpiError::io(out, e))
}
