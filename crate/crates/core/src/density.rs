//! Counting functions over computed zero sets, finite-radius density fits,
//! jump detection and matching of zeros to predicted chains.

use crate::diagram::{ChainId, DistributionDiagram, PredictedSequence};
use crate::polynomial::Root;
use crate::rootfind::{mirror_symmetric, ResonanceMultiset};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::Write;
use thiserror::Error;

/// Ratio of consecutive radii in a fitting grid.
pub const R_GRID_RATIO: f64 = 1.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DensityError {
    #[error("radius {r} exceeds the certified radius {certified}")]
    BeyondCertified { r: f64, certified: f64 },
    #[error(
        "density fit needs at least 5 radii spanning a factor 4 (got {count} spanning {span})"
    )]
    InsufficientSpan { count: usize, span: f64 },
}

/// Zeros known completely inside the disc of radius `certified_radius`
/// intersected with the searched horizontal band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedZeros {
    pub zeros: Vec<Root>,
    pub certified_radius: f64,
}

impl CertifiedZeros {
    /// Direct use of a search result; the radius is the smallest distance
    /// from the imaginary axis to a vertical edge of the region.
    pub fn from_search(res: &ResonanceMultiset) -> Self {
        let r = &res.region;
        CertifiedZeros {
            zeros: res.zeros.clone(),
            certified_radius: (-r.x0()).min(r.x1()).max(0.0),
        }
    }

    /// A search over `Re k ≥ −δ` completed by the mirror symmetry `k ↦ −k̄`.
    pub fn from_mirrored_search(res: &ResonanceMultiset, tol: f64) -> Self {
        CertifiedZeros {
            zeros: mirror_symmetric(res, tol),
            certified_radius: res.region.x1(),
        }
    }

    fn check(&self, r: f64) -> Result<(), DensityError> {
        if r > self.certified_radius * (1.0 + 1e-12) {
            return Err(DensityError::BeyondCertified {
                r,
                certified: self.certified_radius,
            });
        }
        Ok(())
    }

    fn count_where(&self, r: f64, keep: impl Fn(Complex64) -> bool) -> Result<usize, DensityError> {
        self.check(r)?;
        Ok(self
            .zeros
            .iter()
            .filter(|z| z.value.norm() <= r && keep(z.value))
            .map(|z| z.multiplicity)
            .sum())
    }

    /// `#{k : |k| ≤ R}` with multiplicity.
    pub fn count_ball(&self, r: f64) -> Result<usize, DensityError> {
        self.count_where(r, |_| true)
    }

    /// `#{k : −μ ln(|Re k| + 1) ≤ Im k, |k| ≤ R}`; `μ = +∞` counts the ball.
    pub fn count_log(&self, mu: f64, r: f64) -> Result<usize, DensityError> {
        self.count_strip(mu, 0.0, r)
    }

    /// `#{k : −μ ln(|Re k| + 1) − γ ≤ Im k, |k| ≤ R}`.
    pub fn count_strip(&self, mu: f64, gamma: f64, r: f64) -> Result<usize, DensityError> {
        if mu == f64::INFINITY {
            return self.count_ball(r);
        }
        self.count_where(r, |k| {
            let l = (k.re.abs() + 1.0).ln();
            let floor = if l == 0.0 { -gamma } else { -mu * l - gamma };
            k.im >= floor
        })
    }
}

/// Geometric radius grid from `r_min` up to `r_max` with ratio 1.3; the last
/// point is `r_max` itself.
pub fn r_grid(r_min: f64, r_max: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r_min;
    while r < r_max * (1.0 - 1e-12) {
        out.push(r);
        r *= R_GRID_RATIO;
    }
    out.push(r_max);
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySample {
    pub mu: f64,
    pub gamma: f64,
    pub r: f64,
    pub count: usize,
}

pub fn write_samples_csv<W: Write>(samples: &[DensitySample], mut w: W) -> std::io::Result<()> {
    writeln!(w, "mu,gamma,R,count")?;
    for s in samples {
        writeln!(w, "{},{},{},{}", s.mu, s.gamma, s.r, s.count)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square deviation of the counts from the fitted line.
    pub residual: f64,
}

/// Least-squares line through `(R, count)` pairs.
pub fn fit_density(points: &[(f64, f64)]) -> Result<DensityFit, DensityError> {
    let (lo, hi) = points.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), p| {
        (lo.min(p.0), hi.max(p.0))
    });
    let span = if lo > 0.0 { hi / lo } else { 0.0 };
    if points.len() < 5 || span < 4.0 {
        return Err(DensityError::InsufficientSpan {
            count: points.len(),
            span,
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (points
        .iter()
        .map(|p| (p.1 - slope * p.0 - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DensityFit {
        slope,
        intercept,
        residual,
    })
}

/// Sampled `count_log(μ, R)` on `radii` and the fitted slope.
pub fn log_density(
    zeros: &CertifiedZeros,
    mu: f64,
    radii: &[f64],
) -> Result<(Vec<DensitySample>, DensityFit), DensityError> {
    let samples: Vec<DensitySample> = radii
        .iter()
        .map(|&r| {
            zeros.count_log(mu, r).map(|count| DensitySample {
                mu,
                gamma: 0.0,
                r,
                count,
            })
        })
        .collect::<Result<_, _>>()?;
    let pts: Vec<(f64, f64)> = samples.iter().map(|s| (s.r, s.count as f64)).collect();
    Ok((samples, fit_density(&pts)?))
}

/// Effective slope `−Im k / ln(|Re k| + 1)` of a single zero.
pub fn effective_mu(k: Complex64) -> f64 {
    -k.im / (k.re.abs() + 1.0).ln()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpEstimate {
    pub predicted_mu: f64,
    /// Slope of `Im k` against `−ln(|Re k|+1)` over the zeros attributed to this step.
    pub estimated_mu: f64,
    /// Difference of fitted densities across the step.
    pub height: f64,
    pub predicted_height: f64,
    pub zeros_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySummary {
    pub jumps: Vec<JumpEstimate>,
    pub effective_size: f64,
    pub total_density: f64,
    /// `π · total_density / effective_size`.
    pub weyl_ratio: f64,
    pub samples: Vec<DensitySample>,
}

/// Compares the log-strip densities of `zeros` with a diagram.
///
/// The μ axis is cut at geometric midpoints of consecutive slopes; zeros in
/// the outer half of the radius range are attributed to the step whose cell
/// contains their effective slope. Heights come from fitted densities at
/// `0.8 μ_n` and `1.2 μ_n`.
pub fn analyze_density(
    zeros: &CertifiedZeros,
    diag: &DistributionDiagram,
    r_min: f64,
    r_max: f64,
) -> Result<DensitySummary, DensityError> {
    let radii = r_grid(r_min, r_max);
    let mut samples = Vec::new();
    let mut slopes: Vec<f64> = diag
        .segments
        .iter()
        .map(|s| s.mu)
        .filter(|m| *m > 0.0)
        .collect();
    slopes.sort_by(f64::total_cmp);
    let mut fit_at = |mu: f64| -> Result<f64, DensityError> {
        let (s, f) = log_density(zeros, mu, &radii)?;
        samples.extend(s);
        Ok(f.slope)
    };
    let total_density = fit_at(f64::INFINITY)?;

    let cuts: Vec<f64> = slopes.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    let cell_of = |m: f64| cuts.iter().filter(|&&c| m > c).count();
    let mut jumps = Vec::new();
    for (i, &mu) in slopes.iter().enumerate() {
        let height = fit_at(1.2 * mu)? - fit_at(0.8 * mu)?;
        let pts: Vec<(f64, f64)> = zeros
            .zeros
            .iter()
            .filter(|z| {
                let n = z.value.norm();
                n >= 0.5 * r_max && n <= r_max && z.value.im < 0.0
            })
            .filter(|z| cell_of(effective_mu(z.value)) == i)
            .flat_map(|z| {
                std::iter::repeat_n((-(z.value.re.abs() + 1.0).ln(), z.value.im), z.multiplicity)
            })
            .collect();
        let estimated_mu = regression_slope(&pts)
            .unwrap_or_else(|| median(pts.iter().map(|p| -p.1 / -p.0).collect()));
        let predicted_height = diag
            .segments
            .iter()
            .find(|s| s.mu == mu)
            .map(|s| s.width() / PI)
            .unwrap_or(0.0);
        jumps.push(JumpEstimate {
            predicted_mu: mu,
            estimated_mu,
            height,
            predicted_height,
            zeros_used: pts.len(),
        });
    }
    let effective_size = diag.points.first().map(|p| -p.beta).unwrap_or(0.0);
    Ok(DensitySummary {
        jumps,
        effective_size,
        total_density,
        weyl_ratio: PI * total_density / effective_size,
        samples,
    })
}

/// Theil-Sen slope: median of pairwise slopes. Interleaved chains sharing a
/// slope but not an intercept bias least squares; the median shrugs them off.
fn regression_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 3 {
        return None;
    }
    let mut slopes = Vec::new();
    for (i, a) in pts.iter().enumerate() {
        for b in &pts[i + 1..] {
            let dx = b.0 - a.0;
            if dx.abs() > 1e-3 {
                slopes.push((b.1 - a.1) / dx);
            }
        }
    }
    (slopes.len() >= 3).then(|| median(slopes))
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = 0.5 * (i + j) as f64 + 1.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainMatch {
    pub t: u64,
    pub predicted: Complex64,
    pub found: Complex64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub id: ChainId,
    pub mu: f64,
    pub omega: Complex64,
    pub matches: Vec<ChainMatch>,
    /// Smallest matched `t`.
    pub start_t: Option<u64>,
    /// Spearman correlation of residual against `t`.
    pub residual_trend: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub radius_constant: f64,
    pub chains: Vec<ChainReport>,
    pub unmatched_zeros: Vec<Root>,
    /// `(chain index, t, predicted k)`.
    pub unmatched_predictions: Vec<(usize, u64, Complex64)>,
}

/// Greedy nearest-neighbour matching of `zeros` to predicted chain points.
///
/// A predicted point at `t` may take a zero within `c / ln(1 + t)`. Each
/// prediction absorbs up to its root multiplicity and each zero is used up to
/// its own multiplicity. If `c` is `None` it is fitted: a first pass with
/// `c₀ = π·min μ` gives residuals, and `c = min(c₀, 3·median(residual·ln(1+t)))`.
pub fn match_chains(
    zeros: &[Root],
    chains: &[(ChainId, usize, PredictedSequence)],
    c: Option<f64>,
) -> MatchReport {
    let c = c.unwrap_or_else(|| {
        let mu_min = chains
            .iter()
            .map(|ch| ch.2.mu)
            .fold(f64::INFINITY, f64::min);
        let c0 = PI * if mu_min.is_finite() { mu_min } else { 1.0 };
        let first = greedy(zeros, chains, c0);
        let scaled: Vec<f64> = first
            .iter()
            .map(|m| m.3 * (1.0 + m.1 as f64).ln())
            .collect();
        if scaled.is_empty() {
            c0
        } else {
            c0.min(3.0 * median(scaled))
        }
    });
    let pairs = greedy(zeros, chains, c);

    let mut reports: Vec<ChainReport> = chains
        .iter()
        .map(|(id, _, seq)| ChainReport {
            id: *id,
            mu: seq.mu,
            omega: seq.omega,
            matches: Vec::new(),
            start_t: None,
            residual_trend: None,
        })
        .collect();
    let mut used = vec![0usize; zeros.len()];
    let mut filled: std::collections::HashMap<(usize, u64), usize> = Default::default();
    for &(ci, t, zi, residual) in &pairs {
        used[zi] += 1;
        *filled.entry((ci, t)).or_default() += 1;
        let predicted = chains[ci]
            .2
            .terms
            .iter()
            .find(|p| p.0 == t)
            .map(|p| p.1)
            .unwrap_or_default();
        reports[ci].matches.push(ChainMatch {
            t,
            predicted,
            found: zeros[zi].value,
            residual,
        });
    }
    for r in &mut reports {
        r.matches.sort_by_key(|m| m.t);
        r.start_t = r.matches.first().map(|m| m.t);
        if r.matches.len() >= 3 {
            let ts: Vec<f64> = r.matches.iter().map(|m| m.t as f64).collect();
            let rs: Vec<f64> = r.matches.iter().map(|m| m.residual).collect();
            r.residual_trend = Some(spearman(&ts, &rs));
        }
    }
    let unmatched_zeros = zeros
        .iter()
        .zip(&used)
        .filter(|(z, &u)| u < z.multiplicity)
        .map(|(z, &u)| Root {
            value: z.value,
            multiplicity: z.multiplicity - u,
        })
        .collect();
    let mut unmatched_predictions = Vec::new();
    for (ci, (_, mult, seq)) in chains.iter().enumerate() {
        for &(t, k) in &seq.terms {
            let got = filled.get(&(ci, t)).copied().unwrap_or(0);
            for _ in got..*mult {
                unmatched_predictions.push((ci, t, k));
            }
        }
    }
    MatchReport {
        radius_constant: c,
        chains: reports,
        unmatched_zeros,
        unmatched_predictions,
    }
}

/// `(chain, t, zero index, distance)` assignments, one per multiplicity unit.
fn greedy(
    zeros: &[Root],
    chains: &[(ChainId, usize, PredictedSequence)],
    c: f64,
) -> Vec<(usize, u64, usize, f64)> {
    let mut cand = Vec::new();
    for (ci, (_, _, seq)) in chains.iter().enumerate() {
        for &(t, k) in &seq.terms {
            let radius = c / (1.0 + t as f64).ln();
            for (zi, z) in zeros.iter().enumerate() {
                let d = (z.value - k).norm();
                if d <= radius {
                    cand.push((d, ci, t, zi));
                }
            }
        }
    }
    cand.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
            .then(a.3.cmp(&b.3))
    });
    let mut zero_left: Vec<usize> = zeros.iter().map(|z| z.multiplicity).collect();
    let mut pred_left: std::collections::HashMap<(usize, u64), usize> = Default::default();
    let mut out = Vec::new();
    for (d, ci, t, zi) in cand {
        let cap = pred_left.entry((ci, t)).or_insert(chains[ci].1);
        while *cap > 0 && zero_left[zi] > 0 {
            *cap -= 1;
            zero_left[zi] -= 1;
            out.push((ci, t, zi, d));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex_util::c;
    use crate::diagram::{predicted_resonances, ChainSign};

    fn zs(v: &[(Complex64, usize)]) -> CertifiedZeros {
        CertifiedZeros {
            zeros: v
                .iter()
                .map(|&(value, multiplicity)| Root {
                    value,
                    multiplicity,
                })
                .collect(),
            certified_radius: 100.0,
        }
    }

    #[test]
    fn ball_counts() {
        assert_eq!(zs(&[]).count_ball(5.0), Ok(0));
        let z = zs(&[(c(1.0, 0.0), 1), (c(0.0, 2.0), 2)]);
        assert_eq!(z.count_ball(1.5), Ok(1));
        assert_eq!(z.count_ball(2.0), Ok(3));
        assert!(matches!(
            z.count_ball(200.0),
            Err(DensityError::BeyondCertified { .. })
        ));
    }

    #[test]
    fn log_and_strip_counts() {
        let z = zs(&[(c(3.0, -1.0), 1), (c(10.0, -3.0), 1), (c(0.0, -0.5), 1)]);
        assert_eq!(z.count_log(-1.0, 50.0), Ok(0));
        assert_eq!(z.count_log(f64::INFINITY, 50.0), z.count_ball(50.0));
        assert_eq!(z.count_log(1.0, 50.0), Ok(1));
        assert_eq!(z.count_log(1.5, 50.0), Ok(2));
        assert_eq!(z.count_strip(1.0, 0.0, 50.0), z.count_log(1.0, 50.0));
        assert_eq!(z.count_strip(0.0, 10.0, 50.0), z.count_ball(50.0));
        assert_eq!(z.count_strip(0.0, 0.5, 50.0), Ok(1));
    }

    #[test]
    fn fit_recovers_linear_counts() {
        let radii = r_grid(10.0, 100.0);
        let pts: Vec<(f64, f64)> = radii
            .iter()
            .map(|&r| (r, (0.7 * r).floor() + 2.0))
            .collect();
        let f = fit_density(&pts).unwrap();
        assert!((f.slope - 0.7).abs() < 2.0 / 100.0);
        assert!(matches!(
            fit_density(&pts[..3]),
            Err(DensityError::InsufficientSpan { .. })
        ));
        assert!(fit_density(&[
            (10.0, 1.0),
            (11.0, 2.0),
            (12.0, 3.0),
            (13.0, 4.0),
            (14.0, 5.0)
        ])
        .is_err());
    }

    #[test]
    fn grid_is_geometric() {
        let g = r_grid(10.0, 100.0);
        assert_eq!(g[0], 10.0);
        assert_eq!(*g.last().unwrap(), 100.0);
        assert!((g[1] / g[0] - R_GRID_RATIO).abs() < 1e-12);
    }

    #[test]
    fn spearman_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[4.0, 3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert!((spearman(&x, &[1.0, 5.0, 6.0, 9.0]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_synthetic_zeros_match() {
        let id = ChainId {
            n: 1,
            j: 1,
            sign: ChainSign::Plus,
        };
        let seq = predicted_resonances(1.0, c(1.0, 0.0), ChainSign::Plus, 1..=20);
        let zeros: Vec<Root> = seq
            .terms
            .iter()
            .map(|&(_, k)| Root {
                value: k,
                multiplicity: 1,
            })
            .collect();
        let rep = match_chains(&zeros, &[(id, 1, seq)], None);
        assert!(rep.unmatched_zeros.is_empty());
        assert!(rep.unmatched_predictions.is_empty());
        assert_eq!(rep.chains[0].matches.len(), 20);
        assert!(rep.chains[0].matches.iter().all(|m| m.residual == 0.0));
        assert_eq!(rep.chains[0].start_t, Some(1));
    }

    #[test]
    fn multiplicity_two_chain_takes_double_zero() {
        let id = ChainId {
            n: 1,
            j: 1,
            sign: ChainSign::Minus,
        };
        let seq = predicted_resonances(1.0, c(-1.0, 0.0), ChainSign::Minus, 3..=5);
        let zeros: Vec<Root> = seq
            .terms
            .iter()
            .map(|&(_, k)| Root {
                value: k + c(0.01, 0.0),
                multiplicity: 2,
            })
            .collect();
        let rep = match_chains(&zeros, &[(id, 2, seq)], Some(1.0));
        assert!(rep.unmatched_zeros.is_empty());
        assert!(rep.unmatched_predictions.is_empty());
        assert_eq!(rep.chains[0].matches.len(), 6);
    }

    #[test]
    fn far_zero_left_unmatched() {
        let id = ChainId {
            n: 1,
            j: 1,
            sign: ChainSign::Plus,
        };
        let seq = predicted_resonances(1.0, c(1.0, 0.0), ChainSign::Plus, 1..=2);
        let zeros = vec![Root {
            value: c(100.0, -50.0),
            multiplicity: 1,
        }];
        let rep = match_chains(&zeros, &[(id, 1, seq)], Some(1.0));
        assert_eq!(rep.unmatched_zeros.len(), 1);
        assert_eq!(rep.unmatched_predictions.len(), 2);
    }

    #[test]
    fn samples_csv() {
        let mut buf = Vec::new();
        write_samples_csv(
            &[DensitySample {
                mu: 1.0,
                gamma: 0.0,
                r: 10.0,
                count: 3,
            }],
            &mut buf,
        )
        .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "mu,gamma,R,count\n1,0,10,3\n"
        );
    }
}
