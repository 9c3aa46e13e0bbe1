//! Boxes, grids and seeded quasi-random points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Axis-aligned box `[lo_i, hi_i]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len());
        DomainBox { lo, hi }
    }

    pub fn cube(dim: usize, half: f64) -> Self {
        DomainBox::new(vec![-half; dim], vec![half; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= *l && *v <= *h)
    }

    /// Tensor grid with `counts[i]` points per axis, endpoints included.
    pub fn grid(&self, counts: &[usize]) -> Vec<Vec<f64>> {
        assert_eq!(counts.len(), self.dim());
        let axes: Vec<Vec<f64>> = (0..self.dim())
            .map(|i| {
                let c = counts[i].max(1);
                if c == 1 {
                    vec![0.5 * (self.lo[i] + self.hi[i])]
                } else {
                    (0..c)
                        .map(|k| self.lo[i] + (self.hi[i] - self.lo[i]) * k as f64 / (c - 1) as f64)
                        .collect()
                }
            })
            .collect();
        let mut out = vec![vec![]];
        for axis in axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for p in &out {
                for v in &axis {
                    let mut q = p.clone();
                    q.push(*v);
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }

    /// Uniform points from a seeded generator.
    pub fn random_points(&self, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        (0..count)
            .map(|_| {
                (0..self.dim())
                    .map(|i| {
                        if self.hi[i] > self.lo[i] {
                            rng.gen_range(self.lo[i]..self.hi[i])
                        } else {
                            self.lo[i]
                        }
                    })
                    .collect()
            })
            .collect()
    }

    /// Same box shrunk towards its center by `factor`.
    pub fn shrink(&self, factor: f64) -> Self {
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| {
                let c = 0.5 * (l + h);
                let r = 0.5 * (h - l) * factor;
                (c - r, c + r)
            })
            .unzip();
        DomainBox { lo, hi }
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point in the Euclidean ball of radius `r` in `R^dim`.
pub fn random_in_ball(dim: usize, r: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if dim == 0 {
        return vec![];
    }
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let n2: f64 = v.iter().map(|x| x * x).sum();
        if n2 <= 1.0 {
            return v.into_iter().map(|x| x * r).collect();
        }
    }
}

/// Cartesian grid of `per_axis` points on `[-r, r]^dim`, kept inside the ball.
pub fn ball_grid(dim: usize, r: f64, per_axis: usize) -> Vec<Vec<f64>> {
    if dim == 0 {
        return vec![vec![]];
    }
    let cube = DomainBox::cube(dim, r);
    cube.grid(&vec![per_axis; dim])
        .into_iter()
        .filter(|p| p.iter().map(|x| x * x).sum::<f64>() <= r * r * (1.0 + 1e-12))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_includes_endpoints_and_center() {
        let b = DomainBox::cube(2, 1.0);
        let g = b.grid(&[5, 3]);
        assert_eq!(g.len(), 15);
        assert!(g.contains(&vec![0.0, 0.0]));
        assert!(g.contains(&vec![-1.0, 1.0]));
    }

    #[test]
    fn seeded_points_repeat() {
        let b = DomainBox::cube(3, 2.0);
        let a = b.random_points(10, &mut rng(7));
        let c = b.random_points(10, &mut rng(7));
        assert_eq!(a, c);
        assert!(a.iter().all(|p| b.contains(p)));
    }

    #[test]
    fn ball_grid_filters_corners() {
        let g = ball_grid(2, 1.0, 3);
        assert_eq!(g.len(), 5);
    }
}
