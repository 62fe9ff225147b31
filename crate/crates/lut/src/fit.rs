//! Least-squares fit of `i_sd = a·atan(b·τ)` to selected excitation currents.

use crate::contour::LutError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArctanFit {
    pub a: f64,
    pub b: f64,
}

impl ArctanFit {
    pub fn eval(&self, tau: f64) -> f64 {
        self.a * (self.b * tau).atan()
    }
}

/// Fitted excitation curve; the table variant is the fallback when the
/// fit does not converge (monotone, linear between samples).
#[derive(Debug, Clone, PartialEq)]
pub enum ExcitationCurve {
    Arctan(ArctanFit),
    Table { tau: Vec<f64>, i_sd: Vec<f64> },
}

impl ExcitationCurve {
    pub fn eval(&self, tau: f64) -> f64 {
        match self {
            ExcitationCurve::Arctan(f) => f.eval(tau),
            ExcitationCurve::Table { tau: t, i_sd } => {
                let x = tau.clamp(t[0], t[t.len() - 1]);
                let k = t.partition_point(|&v| v <= x).clamp(1, t.len() - 1);
                let s = (x - t[k - 1]) / (t[k] - t[k - 1]);
                i_sd[k - 1] + s * (i_sd[k] - i_sd[k - 1])
            }
        }
    }

    pub fn is_fallback(&self) -> bool {
        matches!(self, ExcitationCurve::Table { .. })
    }
}

fn sse(f: ArctanFit, s: &[(f64, f64)]) -> f64 {
    s.iter().map(|&(t, y)| (y - f.eval(t)).powi(2)).sum()
}

/// Gauss–Newton with step halving. Initial `a` from the sample maximum,
/// `b` from the small-torque slope. Converged when the relative step is
/// below 1e-10.
pub fn fit_arctan(samples: &[(f64, f64)]) -> Result<ArctanFit, LutError> {
    let pos = samples.iter().filter(|s| s.0 > 0.0).count();
    let neg = samples.iter().filter(|s| s.0 < 0.0).count();
    if samples.len() < 4 || pos == 0 || neg == 0 {
        return Err(LutError::TooFewSamples);
    }
    let ymax = samples.iter().fold(0.0f64, |m, s| m.max(s.1.abs()));
    let a0 = ymax * 2.0 / std::f64::consts::PI * 1.1;
    let (t1, y1) = samples
        .iter()
        .filter(|s| s.0 != 0.0)
        .min_by(|x, y| x.0.abs().total_cmp(&y.0.abs()))
        .copied()
        .expect("nonzero samples exist");
    let slope = (y1 / t1).abs().max(1e-12);
    let mut f = ArctanFit { a: a0, b: slope / a0 };
    let mut cost = sse(f, samples);
    for _ in 0..200 {
        // Normal equations of the 2-parameter problem.
        let (mut jj, mut jr) = ([[0.0; 2]; 2], [0.0; 2]);
        for &(t, y) in samples {
            let bt = f.b * t;
            let ja = bt.atan();
            let jb = f.a * t / (1.0 + bt * bt);
            let r = y - f.a * ja;
            jj[0][0] += ja * ja;
            jj[0][1] += ja * jb;
            jj[1][1] += jb * jb;
            jr[0] += ja * r;
            jr[1] += jb * r;
        }
        let det = jj[0][0] * jj[1][1] - jj[0][1] * jj[0][1];
        if det.abs() < 1e-300 {
            break;
        }
        let da = (jr[0] * jj[1][1] - jr[1] * jj[0][1]) / det;
        let db = (jj[0][0] * jr[1] - jj[0][1] * jr[0]) / det;
        let mut s = 1.0;
        let mut next = f;
        let mut next_cost = f64::INFINITY;
        for _ in 0..40 {
            next = ArctanFit { a: f.a + s * da, b: f.b + s * db };
            if next.a > 0.0 && next.b > 0.0 {
                next_cost = sse(next, samples);
                if next_cost <= cost {
                    break;
                }
            }
            s *= 0.5;
        }
        if !(next_cost <= cost) {
            // No descent along the Gauss–Newton direction: stationary.
            return Ok(f);
        }
        let rel = ((next.a - f.a) / f.a).abs().max(((next.b - f.b) / f.b).abs());
        f = next;
        cost = next_cost;
        if rel < 1e-10 {
            return Ok(f);
        }
    }
    Err(LutError::FitDiverged)
}

/// Arctan fit, or the monotone table through the samples when it fails.
pub fn fit_excitation(samples: &[(f64, f64)]) -> Result<ExcitationCurve, LutError> {
    match fit_arctan(samples) {
        Ok(f) => Ok(ExcitationCurve::Arctan(f)),
        Err(LutError::FitDiverged) => {
            let mut s = samples.to_vec();
            s.sort_by(|a, b| a.0.total_cmp(&b.0));
            s.dedup_by(|a, b| a.0 == b.0);
            // Enforce monotonicity with a running maximum.
            let mut run = f64::NEG_INFINITY;
            let i_sd = s
                .iter()
                .map(|p| {
                    run = run.max(p.1);
                    run
                })
                .collect();
            Ok(ExcitationCurve::Table { tau: s.iter().map(|p| p.0).collect(), i_sd })
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn odd(samples: &[(f64, f64)]) -> Vec<(f64, f64)> {
        samples.iter().flat_map(|&(t, y)| [(t, y), (-t, -y)]).collect()
    }

    #[test]
    fn recovers_exact_parameters() {
        let truth = ArctanFit { a: 3.0, b: 0.4 };
        let s = odd(&(1..=10).map(|i| (i as f64, truth.eval(i as f64))).collect::<Vec<_>>());
        let f = fit_arctan(&s).unwrap();
        assert!((f.a - 3.0).abs() < 1e-8 && (f.b - 0.4).abs() < 1e-8, "{f:?}");
        assert_eq!(f.eval(-2.0), -f.eval(2.0));
        assert!((f.eval(1e12) - 3.0 * std::f64::consts::FRAC_PI_2).abs() < 1e-9);
    }

    #[test]
    fn tolerates_one_percent_noise() {
        let truth = ArctanFit { a: 3.0, b: 0.4 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = Normal::new(0.0, 0.01).unwrap();
        for _ in 0..20 {
            let s: Vec<(f64, f64)> = (1..=10)
                .map(|i| {
                    let t = i as f64;
                    (t, truth.eval(t) * (1.0 + n.sample(&mut rng)))
                })
                .collect();
            let f = fit_arctan(&odd(&s)).unwrap();
            assert!((f.a / 3.0 - 1.0).abs() < 0.05 && (f.b / 0.4 - 1.0).abs() < 0.05, "{f:?}");
        }
    }

    #[test]
    fn needs_both_signs() {
        assert_eq!(fit_arctan(&[(1.0, 1.0), (2.0, 1.5), (3.0, 1.8), (4.0, 2.0)]), Err(LutError::TooFewSamples));
    }

    #[test]
    fn table_fallback_is_monotone() {
        let c = ExcitationCurve::Table { tau: vec![-1.0, 0.0, 1.0], i_sd: vec![-2.0, 0.0, 2.0] };
        assert_eq!(c.eval(0.5), 1.0);
        assert_eq!(c.eval(5.0), 2.0);
        assert!(c.is_fallback());
    }
}
