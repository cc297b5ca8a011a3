//! Mutual-information fusion of two predicted state sequences.
//!
//! For each state dimension the two sequences are binned on shared equal-width
//! edges, their normalized mutual information `I / √(H_p·H_m)` is computed, and
//! the dimension is blended as `w1·pursuit + w2·mpc` with `w2 = nmi / (nmi + 1)`
//! when `nmi` exceeds the threshold. Otherwise the MPC sequence is used as-is.

use crate::error::{Error, Result};
use crate::geometry::normalize_angle;
use crate::vehicle::{Trajectory, VehicleState};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Histogram bins per dimension.
    pub bins: usize,
    /// Fusion is active only when nmi is strictly above this value.
    pub threshold: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            bins: 10,
            threshold: 0.85,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins < 2 {
            return Err(Error::InvalidConfig("fusion bins must be >= 2".into()));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(Error::InvalidConfig("fusion threshold must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StateDim {
    X,
    Y,
    Theta,
    V,
}

impl StateDim {
    pub const ALL: [StateDim; 4] = [StateDim::X, StateDim::Y, StateDim::Theta, StateDim::V];

    pub fn name(self) -> &'static str {
        match self {
            StateDim::X => "x",
            StateDim::Y => "y",
            StateDim::Theta => "theta",
            StateDim::V => "v",
        }
    }

    pub fn get(self, s: &VehicleState) -> f64 {
        match self {
            StateDim::X => s.x,
            StateDim::Y => s.y,
            StateDim::Theta => s.theta,
            StateDim::V => s.v,
        }
    }

    fn set(self, s: &mut VehicleState, value: f64) {
        match self {
            StateDim::X => s.x = value,
            StateDim::Y => s.y = value,
            StateDim::Theta => s.theta = value,
            StateDim::V => s.v = value,
        }
    }
}

/// Information quantities for one dimension, in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimReport {
    pub dim: StateDim,
    /// Entropy of the pursuit sequence.
    pub h_p: f64,
    /// Entropy of the MPC sequence.
    pub h_m: f64,
    pub mi: f64,
    pub nmi: f64,
    /// Pursuit weight.
    pub w1: f64,
    /// MPC weight.
    pub w2: f64,
    /// True when the dimension fell back to the MPC sequence.
    pub gated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MiReport {
    pub dims: [DimReport; 4],
}

impl MiReport {
    pub fn get(&self, dim: StateDim) -> &DimReport {
        &self.dims[dim as usize]
    }
}

/// Bin index of `v` among `bins` equal-width bins over `[lo, hi]`; the last bin is closed.
fn bin_index(v: f64, lo: f64, hi: f64, bins: usize) -> usize {
    if hi <= lo {
        return 0;
    }
    let b = ((v - lo) / (hi - lo) * bins as f64).floor();
    (b.max(0.0) as usize).min(bins - 1)
}

fn entropy_of_counts(counts: impl Iterator<Item = usize>, total: usize) -> f64 {
    let n = total as f64;
    -counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>()
}

fn pooled_range(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    xs.iter().chain(ys).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    })
}

/// Shannon entropy (bits) of `values` histogrammed into `bins` bins over `range`.
pub fn entropy(values: &[f64], bins: usize, range: (f64, f64)) -> f64 {
    let (lo, hi) = range;
    if values.is_empty() || hi <= lo {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    for &v in values {
        counts[bin_index(v, lo, hi, bins)] += 1;
    }
    entropy_of_counts(counts.into_iter(), values.len())
}

/// Histogram mutual information on shared bin edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutualInformation {
    pub mi: f64,
    pub h_x: f64,
    pub h_y: f64,
}

/// `I(X;Y) = H(X) + H(Y) − H(X,Y)` with both sequences binned on the edges of
/// their pooled range, clamped at zero.
pub fn mutual_information(xs: &[f64], ys: &[f64], bins: usize) -> Result<MutualInformation> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::Shape(format!(
            "mutual information needs equal non-empty sequences, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let (lo, hi) = pooled_range(xs, ys);
    let h_x = entropy(xs, bins, (lo, hi));
    let h_y = entropy(ys, bins, (lo, hi));
    let mut joint = vec![0usize; bins * bins];
    for (&x, &y) in xs.iter().zip(ys) {
        joint[bin_index(x, lo, hi, bins) * bins + bin_index(y, lo, hi, bins)] += 1;
    }
    let h_xy = entropy_of_counts(joint.into_iter(), xs.len());
    Ok(MutualInformation {
        mi: (h_x + h_y - h_xy).max(0.0),
        h_x,
        h_y,
    })
}

fn nmi_from(xs: &[f64], ys: &[f64], bins: usize, m: &MutualInformation) -> f64 {
    if m.h_x == 0.0 || m.h_y == 0.0 {
        if m.h_x == 0.0 && m.h_y == 0.0 {
            let (lo, hi) = pooled_range(xs, ys);
            let same = xs
                .iter()
                .zip(ys)
                .all(|(&x, &y)| bin_index(x, lo, hi, bins) == bin_index(y, lo, hi, bins));
            return if same { 1.0 } else { 0.0 };
        }
        return 0.0;
    }
    (m.mi / (m.h_x * m.h_y).sqrt()).clamp(0.0, 1.0)
}

/// `I / √(H_x·H_y)`. Two constant sequences in the same bin give 1; any other
/// zero-entropy case gives 0.
pub fn normalized_mi(xs: &[f64], ys: &[f64], bins: usize) -> Result<f64> {
    let m = mutual_information(xs, ys, bins)?;
    Ok(nmi_from(xs, ys, bins, &m))
}

/// `(w1, w2)` for a normalized MI value: `w2 = nmi / (nmi + 1)`, `w1 = 1 − w2`.
pub fn fusion_weights(nmi: f64) -> (f64, f64) {
    let w2 = nmi / (nmi + 1.0);
    (1.0 - w2, w2)
}

fn blend_linear(p: f64, m: f64, w1: f64) -> f64 {
    if p == m {
        m
    } else {
        m + w1 * (p - m)
    }
}

fn blend_angle(p: f64, m: f64, w1: f64, w2: f64) -> f64 {
    if p == m {
        return m;
    }
    let (sp, cp) = p.sin_cos();
    let (sm, cm) = m.sin_cos();
    normalize_angle((w1 * sp + w2 * sm).atan2(w1 * cp + w2 * cm))
}

/// Fuses two equally shaped trajectories dimension by dimension.
pub fn fuse_states(
    pursuit: &Trajectory,
    mpc: &Trajectory,
    cfg: &FusionConfig,
) -> Result<(Trajectory, MiReport)> {
    if pursuit.len() != mpc.len() {
        return Err(Error::Shape(format!(
            "fusion needs equal-length trajectories, got {} and {}",
            pursuit.len(),
            mpc.len()
        )));
    }
    if pursuit.dt() != mpc.dt() {
        return Err(Error::Shape(format!(
            "fusion needs equal dt, got {} and {}",
            pursuit.dt(),
            mpc.dt()
        )));
    }
    let mut combined: Vec<VehicleState> = mpc.states().to_vec();
    let theta_ref = pursuit.first().theta;
    let mut reports = Vec::with_capacity(4);

    for dim in StateDim::ALL {
        let raw_p: Vec<f64> = pursuit.states().iter().map(|s| dim.get(s)).collect();
        let raw_m: Vec<f64> = mpc.states().iter().map(|s| dim.get(s)).collect();
        let (hist_p, hist_m) = if dim == StateDim::Theta {
            let unwrap = |v: &f64| theta_ref + normalize_angle(v - theta_ref);
            (
                raw_p.iter().map(unwrap).collect::<Vec<_>>(),
                raw_m.iter().map(unwrap).collect::<Vec<_>>(),
            )
        } else {
            (raw_p.clone(), raw_m.clone())
        };
        let m = mutual_information(&hist_p, &hist_m, cfg.bins)?;
        let nmi = nmi_from(&hist_p, &hist_m, cfg.bins, &m);
        let (w1, w2) = fusion_weights(nmi);
        let active = nmi > cfg.threshold;
        if active {
            for (k, state) in combined.iter_mut().enumerate() {
                let v = if dim == StateDim::Theta {
                    blend_angle(raw_p[k], raw_m[k], w1, w2)
                } else {
                    blend_linear(raw_p[k], raw_m[k], w1)
                };
                dim.set(state, v);
            }
        }
        reports.push(DimReport {
            dim,
            h_p: m.h_x,
            h_m: m.h_y,
            mi: m.mi,
            nmi,
            w1,
            w2,
            gated: !active,
        });
    }

    let report = MiReport {
        dims: [reports[0], reports[1], reports[2], reports[3]],
    };
    Ok((Trajectory::new(combined, mpc.dt())?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&[0.0, 0.0, 1.0, 1.0], 2, (0.0, 1.0)), 1.0);
        assert_eq!(entropy(&[3.0; 5], 4, (0.0, 10.0)), 0.0);
        assert_eq!(entropy(&[3.0; 5], 4, (3.0, 3.0)), 0.0);
        let h = entropy(&[0.0, 0.0, 0.0, 1.0], 2, (0.0, 1.0));
        let expected = -(0.75f64 * 0.75f64.log2() + 0.25 * 0.25f64.log2());
        assert!((h - expected).abs() < 1e-15);
        assert!((h - 0.81128).abs() < 1e-5);
    }

    #[test]
    fn mi_examples() {
        let m = mutual_information(&[0.0, 0.0, 1.0, 1.0], &[0.0, 0.0, 1.0, 1.0], 2).unwrap();
        assert_eq!((m.h_x, m.h_y, m.mi), (1.0, 1.0, 1.0));
        let m = mutual_information(&[0.0, 0.0, 1.0, 1.0], &[0.0, 1.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(m.mi, 0.0);
        let m = mutual_information(&[2.0; 4], &[0.0, 1.0, 2.0, 3.0], 4).unwrap();
        assert_eq!(m.h_x, 0.0);
        assert_eq!(m.mi, 0.0);
        assert!(matches!(mutual_information(&[1.0], &[1.0, 2.0], 2), Err(Error::Shape(_))));
    }

    #[test]
    fn nmi_examples() {
        let a = [0.1, 0.5, 0.9, 0.3, 0.7];
        assert_eq!(normalized_mi(&a, &a, 10).unwrap(), 1.0);
        assert_eq!(normalized_mi(&[0.0, 0.0, 1.0, 1.0], &[0.0, 1.0, 0.0, 1.0], 2).unwrap(), 0.0);
        assert_eq!(normalized_mi(&[4.0; 3], &[4.0; 3], 10).unwrap(), 1.0);
        assert_eq!(normalized_mi(&[4.0; 3], &[5.0; 3], 10).unwrap(), 0.0);
    }

    fn traj(xs: &[f64]) -> Trajectory {
        Trajectory::new(
            xs.iter().map(|&x| VehicleState::new(x, 0.0, 0.0, 1.0)).collect(),
            0.1,
        )
        .unwrap()
    }

    #[test]
    fn low_nmi_keeps_mpc_bits() {
        let p = traj(&[0.0, 0.0, 1.0, 1.0]);
        let m = traj(&[0.0, 1.0, 0.0, 1.0]);
        let (c, r) = fuse_states(&p, &m, &FusionConfig::default()).unwrap();
        assert!(r.get(StateDim::X).gated);
        assert_eq!(c.states(), m.states());
    }

    #[test]
    fn full_agreement_blends_evenly() {
        let p = traj(&[0.0, 0.0, 5.0, 5.0]);
        let m = traj(&[2.0, 2.0, 4.0, 4.0]);
        let (c, r) = fuse_states(&p, &m, &FusionConfig { bins: 2, threshold: 0.85 }).unwrap();
        let x = r.get(StateDim::X);
        assert_eq!(x.nmi, 1.0);
        assert_eq!((x.w1, x.w2), (0.5, 0.5));
        assert!(!x.gated);
        assert_eq!(c.states()[0].x, 1.0);
    }

    #[test]
    fn identical_inputs_are_a_fixed_point() {
        let states: Vec<VehicleState> = (0..11)
            .map(|i| VehicleState::new(0.3 * i as f64, 0.1 * i as f64, 3.0 + 0.02 * i as f64, 2.0 + 0.1 * i as f64))
            .collect();
        let t = Trajectory::new(states, 0.1).unwrap();
        let (c, _) = fuse_states(&t, &t, &FusionConfig::default()).unwrap();
        assert_eq!(c, t);
    }

    #[test]
    fn heading_blends_across_the_seam() {
        let mk = |th: &[f64]| {
            Trajectory::new(th.iter().map(|&t| VehicleState::new(0.0, 0.0, t, 0.0)).collect(), 0.1).unwrap()
        };
        let p = mk(&[3.1, 3.12, 3.13, -3.12]);
        let m = mk(&[3.1, 3.13, -3.13, -3.11]);
        let (c, r) = fuse_states(&p, &m, &FusionConfig { bins: 4, threshold: 0.0 }).unwrap();
        assert!(!r.get(StateDim::Theta).gated);
        for s in c.states() {
            assert!(s.theta.abs() > 3.0, "blended heading jumped off the seam: {}", s.theta);
        }
    }

    #[test]
    fn shape_errors() {
        let a = traj(&[0.0, 1.0]);
        let b = traj(&[0.0, 1.0, 2.0]);
        assert!(matches!(fuse_states(&a, &b, &FusionConfig::default()), Err(Error::Shape(_))));
        let c = Trajectory::new(a.states().to_vec(), 0.2).unwrap();
        assert!(matches!(fuse_states(&a, &c, &FusionConfig::default()), Err(Error::Shape(_))));
    }
}
