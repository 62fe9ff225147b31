//! Efficiency of each strategy's table over torque and speed, read from the
//! identified efficiency maps.

use imbench_lut::{lut_query, Lut2d, Strategy};
use imbench_maps::MachineMaps;
use imbench_util::table::{fmt_f64, Table};

use crate::error::CliError;

/// Slack for ordering and sign checks, as a fraction of η.
pub const ETA_SLACK: f64 = 0.002;

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    pub speeds: Vec<f64>,
    /// Non-negative half of the tables' torque axis.
    pub tau: Vec<f64>,
    pub strategies: Vec<Strategy>,
    /// `eta[speed][strategy][tau]`; NaN where undefined.
    pub eta: Vec<Vec<Vec<f64>>>,
    /// η_MEPT − η_VHz(standard) at the largest torque, per speed.
    pub gap: Vec<f64>,
}

/// η from the map's efficiency layer at a current pair; NaN off the map.
pub fn map_eta(m: &MachineMaps, i_sd: f64, i_sq: f64) -> f64 {
    m.l("eta").interp(&m.d, &m.q, i_sd, i_sq).unwrap_or(f64::NAN)
}

pub fn efficiency_report(maps: &[MachineMaps], luts: &[Lut2d]) -> Result<EfficiencyReport, CliError> {
    if maps.len() < 2 {
        return Err(CliError::Config(format!("comparison needs maps for at least 2 speeds, found {}", maps.len())));
    }
    let first = luts.first().ok_or_else(|| CliError::Config("no lookup tables found".into()))?;
    let tau: Vec<f64> = first.tau.iter().copied().filter(|&t| t >= 0.0).collect();
    let mut order: Vec<&MachineMaps> = maps.iter().collect();
    order.sort_by(|a, b| a.speed.total_cmp(&b.speed));
    let eta: Vec<Vec<Vec<f64>>> = order
        .iter()
        .map(|m| luts.iter().map(|l| tau.iter().map(|&t| {
            let q = lut_query(l, t, m.speed);
            map_eta(m, q.i_sd, q.i_sq)
        }).collect()).collect())
        .collect();
    let strategies: Vec<Strategy> = luts.iter().map(|l| l.strategy).collect();
    let idx = |s: Strategy| strategies.iter().position(|&x| x == s);
    let last = tau.len() - 1;
    let gap = eta
        .iter()
        .map(|e| match (idx(Strategy::Mept), idx(Strategy::VhzStd)) {
            (Some(a), Some(b)) => e[a][last] - e[b][last],
            _ => f64::NAN,
        })
        .collect();
    Ok(EfficiencyReport { speeds: order.iter().map(|m| m.speed).collect(), tau, strategies, eta, gap })
}

impl EfficiencyReport {
    /// η over torque at one speed: a `tau` column and one per strategy.
    pub fn speed_table(&self, s: usize) -> Table {
        let mut t = Table::new("imbench-efficiency", 1);
        t.set_f64("speed", self.speeds[s]);
        t.push_column("tau", self.tau.clone());
        for (k, st) in self.strategies.iter().enumerate() {
            t.push_column(&format!("eta_{st}"), self.eta[s][k].clone());
        }
        t
    }

    pub fn gap_table(&self) -> Table {
        let mut t = Table::new("imbench-efficiency-gap", 1);
        t.set_f64("tau", *self.tau.last().expect("non-empty torque axis"));
        t.push_column("speed", self.speeds.clone());
        t.push_column("gap", self.gap.clone());
        t
    }

    /// Violated expectations: η outside [0, 1], a negative gap, a gap that
    /// does not shrink from the lowest to the highest speed.
    pub fn check(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (s, per) in self.eta.iter().enumerate() {
            for (k, row) in per.iter().enumerate() {
                for (t, &e) in row.iter().enumerate() {
                    if e.is_finite() && !(0.0..=1.0).contains(&e) {
                        v.push(format!("η = {e} outside [0, 1] ({} at speed {}, τ {})", self.strategies[k], self.speeds[s], self.tau[t]));
                    }
                }
            }
        }
        for (s, &g) in self.gap.iter().enumerate() {
            if g.is_finite() && g < -ETA_SLACK {
                v.push(format!("negative MEPT − V/Hz gap {g} at speed {}", self.speeds[s]));
            }
        }
        let (g0, g1) = (self.gap[0], self.gap[self.gap.len() - 1]);
        if g0.is_finite() && g1.is_finite() && g0 <= g1 {
            v.push(format!("gap does not shrink with speed: {g0} at {} vs {g1} at {}", self.speeds[0], self.speeds[self.speeds.len() - 1]));
        }
        v
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for (i, w) in self.speeds.iter().enumerate() {
            s.push_str(&format!("speed {} rad/s\n  tau", fmt_f64(*w)));
            for st in &self.strategies {
                s.push_str(&format!("  {st:>8}"));
            }
            s.push('\n');
            for (t, tau) in self.tau.iter().enumerate() {
                s.push_str(&format!("  {tau:6.2}"));
                for k in 0..self.strategies.len() {
                    s.push_str(&format!("  {:8.4}", self.eta[i][k][t]));
                }
                s.push('\n');
            }
            s.push_str(&format!("  gap (mept − vhz_std at τ = {:.2}): {:+.2} pp\n", self.tau[self.tau.len() - 1], 100.0 * self.gap[i]));
        }
        s
    }
}
