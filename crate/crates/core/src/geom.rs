use serde::{Deserialize, Serialize};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Axis-aligned bounding box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        Self { min, max }
    }

    /// Smallest box containing all `points`; `None` when empty.
    pub fn of_points<'a, I: IntoIterator<Item = &'a Vec3>>(points: I) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        let mut min = [first.x, first.y, first.z];
        let mut max = min;
        for p in it {
            for d in 0..3 {
                min[d] = min[d].min(p[d]);
                max[d] = max[d].max(p[d]);
            }
        }
        Some(Self { min, max })
    }

    pub fn diagonal(&self) -> f64 {
        let mut s = 0.0;
        for d in 0..3 {
            let e = self.max[d] - self.min[d];
            s += e * e;
        }
        s.sqrt()
    }

    pub fn contains(&self, p: &Vec3) -> bool {
        (0..3).all(|d| p[d] >= self.min[d] && p[d] <= self.max[d])
    }

    /// Box grown by `margin` on every side.
    pub fn expanded(&self, margin: f64) -> Self {
        let mut out = *self;
        for d in 0..3 {
            out.min[d] -= margin;
            out.max[d] += margin;
        }
        out
    }
}

/// Sum of a slice of `f64` with a fixed pairwise association order.
///
/// The association depends only on the slice length, so the result is
/// reproducible regardless of how the terms were produced.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if xs.len() <= LEAF {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aabb_of_points() {
        let pts = [Vec3::new(0.0, 1.0, -1.0), Vec3::new(2.0, -1.0, 0.5)];
        let b = Aabb::of_points(pts.iter()).unwrap();
        assert_eq!(b.min, [0.0, -1.0, -1.0]);
        assert_eq!(b.max, [2.0, 1.0, 0.5]);
        assert!((b.diagonal() - (4.0f64 + 4.0 + 2.25).sqrt()).abs() < 1e-15);
        assert!(b.contains(&Vec3::new(1.0, 0.0, 0.0)));
        assert!(!b.contains(&Vec3::new(3.0, 0.0, 0.0)));
        assert!(Aabb::of_points(std::iter::empty()).is_none());
    }

    #[test]
    fn pairwise_sum_matches_naive_on_integers() {
        let xs: Vec<f64> = (0..1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
        assert_eq!(pairwise_sum(&[]), 0.0);
    }
}
