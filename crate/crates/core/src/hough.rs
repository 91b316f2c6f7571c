//! 1-D angular Hough transform and its entropy.
//!
//! Marginalizing the (ρ, θ) line accumulator over ρ leaves a histogram of
//! edgel orientations, so ρ is never computed. Orientations are taken mod π:
//! the two signs of a line normal describe the same line.

use std::f64::consts::PI;
use std::io::Write;

use crate::error::{Error, Result};
use crate::model::Edgel;

pub const DEFAULT_BINS: usize = 360;

#[derive(Debug, Clone, PartialEq)]
pub struct OrientationHistogram {
    bins: Vec<f64>,
}

impl OrientationHistogram {
    pub fn zeros(bins: usize) -> Result<Self> {
        if bins < 2 {
            return Err(Error::invalid(format!("need at least 2 bins, got {bins}")));
        }
        Ok(Self {
            bins: vec![0.0; bins],
        })
    }

    pub fn bins(&self) -> &[f64] {
        &self.bins
    }

    pub fn len(&self) -> usize {
        self.bins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0.0
    }

    pub fn total(&self) -> f64 {
        self.bins.iter().sum()
    }

    /// Orientation of bin `b`'s center, radians in `[0, π)`.
    pub fn bin_center(&self, b: usize) -> f64 {
        b as f64 * PI / self.bins.len() as f64
    }

    /// Adds one unit vote for a line with the given normal, split linearly
    /// between the two nearest bins (wrapping at π).
    pub fn vote(&mut self, normal: [f64; 2]) {
        let n = self.bins.len();
        let mut theta = normal[1].atan2(normal[0]);
        if theta < 0.0 {
            theta += PI;
        }
        let u = theta * n as f64 / PI;
        let lo = u.floor();
        let frac = u - lo;
        let i = (lo as usize) % n;
        self.bins[i] += 1.0 - frac;
        self.bins[(i + 1) % n] += frac;
    }

    /// Normalized histogram; `None` when the total mass is zero.
    pub fn normalized(&self) -> Option<Vec<f64>> {
        let total = self.total();
        (total > 0.0).then(|| self.bins.iter().map(|b| b / total).collect())
    }

    /// Writes `bin_index,theta_center_radians,mass` with a header row.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "bin_index,theta_center_radians,mass")?;
        for (b, mass) in self.bins.iter().enumerate() {
            writeln!(out, "{},{},{}", b, self.bin_center(b), mass)?;
        }
        Ok(())
    }
}

/// Builds the orientation histogram; every edgel contributes a mass of one
/// regardless of its saliency weight.
pub fn hough_1d(edgels: &[Edgel], bins: usize) -> Result<OrientationHistogram> {
    let mut h = OrientationHistogram::zeros(bins)?;
    for e in edgels {
        h.vote(e.normal);
    }
    Ok(h)
}

/// Shannon entropy in bits of the normalized histogram.
pub fn entropy(h: &OrientationHistogram) -> Result<f64> {
    let total = h.total();
    if total <= 0.0 {
        return Err(Error::domain("entropy of an empty histogram"));
    }
    Ok(entropy_of(&h.bins, total))
}

pub(crate) fn entropy_of(bins: &[f64], total: f64) -> f64 {
    let mut acc = 0.0;
    for &b in bins {
        if b > 0.0 {
            let p = b / total;
            acc -= p * p.log2();
        }
    }
    // -0.0 for a single occupied bin
    acc.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn edgel(theta: f64) -> Edgel {
        Edgel::new([0.0, 0.0], [theta.cos(), theta.sin()])
    }

    #[test]
    fn rejects_single_bin() {
        assert!(hough_1d(&[], 1).is_err());
    }

    #[test]
    fn exact_bin_center() {
        let h = hough_1d(&[Edgel::new([3.0, 4.0], [1.0, 0.0])], 360).unwrap();
        assert_eq!(h.bins()[0], 1.0);
        assert_eq!(h.total(), 1.0);
    }

    #[test]
    fn half_bin_splits_evenly() {
        let h = hough_1d(&[edgel(PI / 720.0)], 360).unwrap();
        assert!((h.bins()[0] - 0.5).abs() < 1e-9);
        assert!((h.bins()[1] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn opposite_normals_share_a_bin() {
        let h = hough_1d(
            &[
                Edgel::new([0.0, 0.0], [1.0, 0.0]),
                Edgel::new([0.0, 0.0], [-1.0, 0.0]),
            ],
            360,
        )
        .unwrap();
        assert_eq!(h.bins()[0], 2.0);
    }

    #[test]
    fn wraps_past_last_bin() {
        // Three quarters of the way from the last bin center back to θ = π.
        let b = 8;
        let theta = PI - 0.25 * PI / b as f64;
        let h = hough_1d(&[edgel(theta)], b).unwrap();
        assert!((h.bins()[b - 1] - 0.25).abs() < 1e-9);
        assert!((h.bins()[0] - 0.75).abs() < 1e-9);
    }

    #[test]
    fn entropy_examples() {
        let mut single = OrientationHistogram::zeros(360).unwrap();
        single.bins[17] = 5.0;
        assert_eq!(entropy(&single).unwrap(), 0.0);

        let uniform = OrientationHistogram {
            bins: vec![1.0; 360],
        };
        assert!((entropy(&uniform).unwrap() - 360f64.log2()).abs() < 1e-12);

        let mut two = OrientationHistogram::zeros(10).unwrap();
        two.bins[2] = 0.5;
        two.bins[3] = 0.5;
        assert_eq!(entropy(&two).unwrap(), 1.0);

        let empty = OrientationHistogram::zeros(4).unwrap();
        assert!(matches!(entropy(&empty), Err(Error::Domain(_))));
    }

    #[test]
    fn csv_layout() {
        let h = hough_1d(&[edgel(0.0)], 2).unwrap();
        let mut buf = Vec::new();
        h.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "bin_index,theta_center_radians,mass");
        assert_eq!(lines[1], "0,0,1");
        assert!(lines[2].starts_with("1,1.5707963"));
    }

    proptest! {
        #[test]
        fn mass_and_entropy_bounds(thetas in proptest::collection::vec(-10.0..10.0f64, 1..200), bins in 2usize..720) {
            let edgels: Vec<_> = thetas.iter().map(|&t| edgel(t)).collect();
            let h = hough_1d(&edgels, bins).unwrap();
            prop_assert!(h.bins().iter().all(|&b| b >= 0.0));
            prop_assert!((h.total() - edgels.len() as f64).abs() < 1e-9);
            let c = entropy(&h).unwrap();
            prop_assert!(c >= 0.0 && c <= (bins as f64).log2() + 1e-12);
            let p: f64 = h.normalized().unwrap().iter().sum();
            prop_assert!((p - 1.0).abs() < 1e-12);
        }

        #[test]
        fn order_does_not_matter(thetas in proptest::collection::vec(0.0..7.0f64, 1..100)) {
            let edgels: Vec<_> = thetas.iter().map(|&t| edgel(t)).collect();
            let mut rev = edgels.clone();
            rev.reverse();
            let a = hough_1d(&edgels, 360).unwrap();
            let b = hough_1d(&rev, 360).unwrap();
            for (x, y) in a.bins().iter().zip(b.bins()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
