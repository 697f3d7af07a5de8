use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Duration;

use super::PraseConfig;
use crate::error::Result;

/// Counts gathered in one round of the loop. Round 0 is the initial
/// reasoning pass and has no embedding numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationReport {
    pub k: usize,
    pub seeds: usize,
    pub se_mappings: usize,
    /// Hits@1 of the embedding predictions against the gold links, when the
    /// dataset carries any. Diagnostic only; the loop never reads it.
    pub se_hits_at_1: Option<f64>,
    pub pr_mappings: usize,
    pub unaligned_left: usize,
    pub unaligned_right: usize,
    pub sweeps: usize,
}

/// Everything a run reports about itself, produced even when it aborts.
#[derive(Debug, Clone, Default)]
pub struct RunReport {
    pub config: Vec<(&'static str, String)>,
    pub iterations: Vec<IterationReport>,
    pub phases: Vec<(String, Duration)>,
    pub final_mappings: usize,
}

impl RunReport {
    pub fn new(cfg: &PraseConfig) -> Self {
        Self {
            config: cfg.entries(),
            ..Default::default()
        }
    }

    pub(crate) fn phase(&mut self, name: &str, elapsed: Duration) {
        log::info!("{name}: {:.2}s", elapsed.as_secs_f64());
        self.phases.push((name.to_owned(), elapsed));
    }

    pub fn total_time(&self) -> Duration {
        self.phases.iter().map(|(_, d)| *d).sum()
    }

    /// Machine-readable `key=value` lines.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.config {
            out.push_str(&format!("config.{k}={v}\n"));
        }
        for it in &self.iterations {
            let k = it.k;
            out.push_str(&format!("iter.{k}.seeds={}\n", it.seeds));
            out.push_str(&format!("iter.{k}.se_mappings={}\n", it.se_mappings));
            if let Some(h) = it.se_hits_at_1 {
                out.push_str(&format!("iter.{k}.se_hits_at_1={h:.6}\n"));
            }
            out.push_str(&format!("iter.{k}.pr_mappings={}\n", it.pr_mappings));
            out.push_str(&format!("iter.{k}.unaligned_left={}\n", it.unaligned_left));
            out.push_str(&format!(
                "iter.{k}.unaligned_right={}\n",
                it.unaligned_right
            ));
            out.push_str(&format!("iter.{k}.sweeps={}\n", it.sweeps));
        }
        for (name, d) in &self.phases {
            out.push_str(&format!(
                "time.{}={:.3}\n",
                name.replace(' ', "_"),
                d.as_secs_f64()
            ));
        }
        out.push_str(&format!(
            "time.total={:.3}\n",
            self.total_time().as_secs_f64()
        ));
        out.push_str(&format!("final_mappings={}\n", self.final_mappings));
        out
    }

    pub fn write_summary(&self, path: &Path) -> Result<()> {
        fs::write(path, self.summary())?;
        Ok(())
    }
}

impl fmt::Display for RunReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>3} {:>8} {:>10} {:>9} {:>10} {:>10} {:>10} {:>6}",
            "k", "seeds", "se_maps", "se_h@1", "pr_maps", "unal_1", "unal_2", "sweeps"
        )?;
        for it in &self.iterations {
            let hits = it
                .se_hits_at_1
                .map_or_else(|| "-".to_string(), |h| format!("{h:.4}"));
            writeln!(
                f,
                "{:>3} {:>8} {:>10} {:>9} {:>10} {:>10} {:>10} {:>6}",
                it.k,
                it.seeds,
                it.se_mappings,
                hits,
                it.pr_mappings,
                it.unaligned_left,
                it.unaligned_right,
                it.sweeps
            )?;
        }
        for (name, d) in &self.phases {
            writeln!(f, "{name:<20} {:>9.2}s", d.as_secs_f64())?;
        }
        write!(f, "final mappings: {}", self.final_mappings)
    }
}
