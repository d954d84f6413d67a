//! Per-iteration convergence records.

use std::io::Write;

use crate::energy::EnergyBreakdown;

/// State after one outer iteration; iteration 0 is the initialization.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub energy: EnergyBreakdown,
    /// `|E_k − E_{k−1}| / E_{k−1}`; NaN for the initialization, 0 when the
    /// previous energy was already 0.
    pub rel_change: f64,
    pub cg_iterations: usize,
    /// Seconds since the solve started.
    pub wall_time: f64,
    /// Views whose lighting design matrix had rank below 9.
    pub rank_deficient_views: Vec<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
}

pub const CSV_HEADER: &str = "iter,E_total,E_photo,E_smooth,E_consist,rel_change,cg_iters,seconds";

impl SolverTrace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Total energies in iteration order.
    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy.total).collect()
    }

    /// True when some lighting fit was rank deficient.
    pub fn conditioning_warning(&self) -> bool {
        self.records.iter().any(|r| !r.rank_deficient_views.is_empty())
    }

    /// CSV with a header line. `with_time = false` writes 0 in the seconds
    /// column, which makes the output reproducible byte for byte.
    pub fn write_csv<W: Write>(&self, mut out: W, with_time: bool) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for r in &self.records {
            let e = &r.energy;
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{},{}",
                r.iteration,
                e.total,
                e.photometric,
                e.smoothness,
                e.consistency,
                r.rel_change,
                r.cg_iterations,
                if with_time { r.wall_time } else { 0.0 }
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let t = SolverTrace {
            records: vec![TraceRecord {
                iteration: 0,
                energy: EnergyBreakdown {
                    photometric: 0.0,
                    smoothness: 1.5,
                    consistency: 0.25,
                    total: 1.75,
                },
                rel_change: f64::NAN,
                cg_iterations: 0,
                wall_time: 0.5,
                rank_deficient_views: vec![],
            }],
        };
        let mut buf = Vec::new();
        t.write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines[1], "0,1.75e0,0e0,1.5e0,2.5e-1,NaN,0,0");
        assert!(!t.conditioning_warning());
    }
}
