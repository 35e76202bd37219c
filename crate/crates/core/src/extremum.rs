//! Grid sampling plus golden-section refinement for 1-periodic functions.
//!
//! Used wherever the code needs `min_x` or `max_x` of a smooth periodic
//! function: distortion constants, the mediant sign test and the plateau
//! target functions. None of this is a certified global optimizer.

use rayon::prelude::*;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremum {
    Min,
    Max,
}

impl Extremum {
    fn sign(self) -> f64 {
        match self {
            Extremum::Min => -1.0,
            Extremum::Max => 1.0,
        }
    }
}

/// Samples of a 1-periodic function at `i / n`, `i = 0..n`.
#[derive(Clone, Debug)]
pub struct PeriodicGrid {
    pub values: Vec<f64>,
}

impl PeriodicGrid {
    pub fn sample<F>(n: usize, f: &F) -> Self
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let step = 1.0 / n as f64;
        let values = if n >= 256 {
            (0..n).into_par_iter().map(|i| f(i as f64 * step)).collect()
        } else {
            (0..n).map(|i| f(i as f64 * step)).collect()
        };
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Indices of cyclic local extrema, best first, at most `limit` of them.
    pub fn local_extrema(&self, kind: Extremum, limit: usize) -> Vec<usize> {
        let n = self.values.len();
        let s = kind.sign();
        let v = |i: usize| s * self.values[i % n];
        let mut idx: Vec<usize> = (0..n)
            .filter(|&i| {
                let here = v(i);
                here >= v(i + n - 1) && here >= v(i + 1)
            })
            .collect();
        idx.sort_by(|&a, &b| v(b).total_cmp(&v(a)));
        idx.truncate(limit);
        idx
    }

    /// Best extremum after golden-section refinement of the top `candidates`
    /// grid extrema. Returns `(x, f(x))` with `x` in `[0, 1)`.
    pub fn refine<F>(&self, f: &F, kind: Extremum, candidates: usize, x_tol: f64) -> (f64, f64)
    where
        F: Fn(f64) -> f64 + Sync,
    {
        let n = self.values.len();
        let step = 1.0 / n as f64;
        let s = kind.sign();
        let mut best_i = 0;
        for i in 1..n {
            if s * self.values[i] > s * self.values[best_i] {
                best_i = i;
            }
        }
        let mut best = (best_i as f64 * step, self.values[best_i]);
        let picks = self.local_extrema(kind, candidates.max(1));
        let refined: Vec<(f64, f64)> = picks
            .par_iter()
            .map(|&i| {
                let centre = i as f64 * step;
                golden_section(|x| s * f(x), centre - step, centre + step, x_tol)
            })
            .map(|(x, v)| (x.rem_euclid(1.0), s * v))
            .collect();
        for cand in refined {
            if s * cand.1 > s * best.1 {
                best = cand;
            }
        }
        best
    }
}

/// Maximize `f` on `[a, b]` by golden-section search down to width `x_tol`.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, x_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fc > fd { (c, fc) } else { (d, fd) };
    let mut iters = 0;
    while (b - a) > x_tol && iters < 200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        }
        iters += 1;
    }
    best
}

/// Extremum of a 1-periodic function on an `n`-point grid with refinement.
pub fn periodic_extremum<F>(f: &F, kind: Extremum, n: usize, candidates: usize, x_tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64 + Sync,
{
    PeriodicGrid::sample(n, f).refine(f, kind, candidates, x_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn golden_section_finds_parabola_vertex() {
        let (x, v) = golden_section(|x| -(x - 0.3) * (x - 0.3) + 2.0, 0.0, 1.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-8);
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn periodic_min_of_shifted_cosine() {
        let f = |x: f64| (TAU * (x - 0.123_456)).cos();
        let (x, v) = periodic_extremum(&f, Extremum::Min, 64, 2, 1e-12);
        assert!((x - 0.623_456).abs() < 1e-7, "x = {x}");
        assert!((v + 1.0).abs() < 1e-14);
    }

    #[test]
    fn refinement_beats_coarse_grid() {
        // narrow bump far from any grid point
        let f = |x: f64| (-((x - 0.5003) / 1e-3).powi(2)).exp();
        let grid = PeriodicGrid::sample(256, &f);
        assert!(grid.max() < 0.95);
        let (_, v) = grid.refine(&f, Extremum::Max, 3, 1e-12);
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn local_extrema_wrap_around() {
        let grid = PeriodicGrid {
            values: vec![5.0, 1.0, 2.0, 0.5, 4.0],
        };
        assert_eq!(grid.local_extrema(Extremum::Max, 5), vec![0, 2]);
        assert_eq!(grid.local_extrema(Extremum::Min, 5), vec![3, 1]);
    }
}
