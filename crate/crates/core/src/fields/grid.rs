use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A point in ℝⁿ padded with zeros up to three coordinates.
pub type Point = [f64; 3];

/// Closed ball used for quadrature and containment checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Self {
        Self { center, radius }
    }

    pub fn unit() -> Self {
        Self::new([0.0; 3], 1.0)
    }
}

const CONTAIN_EPS: f64 = 1e-12;

/// Node-centered axis-aligned box grid in one to three dimensions.
///
/// Unused trailing axes carry a single node so that multi-indices are always
/// three wide. Node ordering is row-major with the last active axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    lo: [f64; 3],
    hi: [f64; 3],
    counts: [usize; 3],
    spacing: [f64; 3],
}

pub fn make_grid(dim: usize, extents: &[(f64, f64)], resolution: &[usize]) -> Result<Grid> {
    Grid::new(dim, extents, resolution)
}

impl Grid {
    /// `extents` and `resolution` may hold a single entry that is broadcast
    /// to every axis.
    pub fn new(dim: usize, extents: &[(f64, f64)], resolution: &[usize]) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidDimension(dim));
        }
        let pick = |len: usize, a: usize| if len == 1 { 0 } else { a };
        if (extents.len() != 1 && extents.len() != dim)
            || (resolution.len() != 1 && resolution.len() != dim)
        {
            return Err(Error::InvalidArgument(format!(
                "expected {dim} extents and resolutions, got {} and {}",
                extents.len(),
                resolution.len()
            )));
        }
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        let mut counts = [1usize; 3];
        let mut spacing = [1.0; 3];
        for a in 0..dim {
            let (l, h) = extents[pick(extents.len(), a)];
            let c = resolution[pick(resolution.len(), a)];
            if !(l < h) || !l.is_finite() || !h.is_finite() {
                return Err(Error::DegenerateExtent { axis: a, lo: l, hi: h });
            }
            if c < 3 {
                return Err(Error::ResolutionTooSmall { axis: a, count: c });
            }
            lo[a] = l;
            hi[a] = h;
            counts[a] = c;
            spacing[a] = (h - l) / (c - 1) as f64;
        }
        Ok(Self { dim, lo, hi, counts, spacing })
    }

    /// `[lo, hi]ⁿ` with `count` nodes per axis.
    pub fn cube(dim: usize, lo: f64, hi: f64, count: usize) -> Result<Self> {
        Self::new(dim, &[(lo, hi)], &[count])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn lo(&self) -> [f64; 3] {
        self.lo
    }

    pub fn hi(&self) -> [f64; 3] {
        self.hi
    }

    /// Largest spacing over the active axes.
    pub fn h_max(&self) -> f64 {
        self.spacing[..self.dim].iter().cloned().fold(0.0, f64::max)
    }

    pub fn h_min(&self) -> f64 {
        self.spacing[..self.dim].iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Volume of one grid cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing[..self.dim].iter().product()
    }

    pub fn node_count(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn cell_count(&self) -> usize {
        (0..self.dim).map(|a| self.counts[a] - 1).product()
    }

    /// Linear stride of each axis.
    pub fn strides(&self) -> [usize; 3] {
        [self.counts[1] * self.counts[2], self.counts[2], 1]
    }

    pub fn index(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.counts[1] + idx[1]) * self.counts[2] + idx[2]
    }

    pub fn multi_index(&self, node: usize) -> [usize; 3] {
        let i2 = node % self.counts[2];
        let rest = node / self.counts[2];
        [rest / self.counts[1], rest % self.counts[1], i2]
    }

    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        if axis >= self.dim {
            0.0
        } else {
            self.lo[axis] + i as f64 * self.spacing[axis]
        }
    }

    pub fn coord_of(&self, idx: [usize; 3]) -> Point {
        [
            self.axis_coord(0, idx[0]),
            self.axis_coord(1, idx[1]),
            self.axis_coord(2, idx[2]),
        ]
    }

    pub fn coord(&self, node: usize) -> Point {
        self.coord_of(self.multi_index(node))
    }

    pub fn is_boundary_index(&self, idx: [usize; 3]) -> bool {
        (0..self.dim).any(|a| idx[a] == 0 || idx[a] + 1 == self.counts[a])
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.is_boundary_index(self.multi_index(node))
    }

    /// Boundary node indices in ascending order.
    pub fn boundary_nodes(&self) -> Vec<usize> {
        (0..self.node_count()).filter(|&i| self.is_boundary(i)).collect()
    }

    pub fn contains_point(&self, x: &Point) -> bool {
        (0..self.dim).all(|a| x[a] >= self.lo[a] - CONTAIN_EPS && x[a] <= self.hi[a] + CONTAIN_EPS)
    }

    pub fn contains_ball(&self, ball: &Ball) -> bool {
        ball.radius > 0.0
            && (0..self.dim).all(|a| {
                ball.center[a] - ball.radius >= self.lo[a] - CONTAIN_EPS
                    && ball.center[a] + ball.radius <= self.hi[a] + CONTAIN_EPS
            })
    }

    pub fn require_ball(&self, ball: &Ball) -> Result<()> {
        if self.contains_ball(ball) {
            Ok(())
        } else {
            Err(Error::BallNotContained {
                center: ball.center[..self.dim].to_vec(),
                radius: ball.radius,
            })
        }
    }

    /// Lower corner index and local coordinates in `[0,1]` of the cell holding `x`.
    /// Points are clamped into the box first.
    pub fn locate(&self, x: &Point) -> ([usize; 3], [f64; 3]) {
        let mut idx = [0usize; 3];
        let mut t = [0.0; 3];
        for a in 0..self.dim {
            let s = ((x[a] - self.lo[a]) / self.spacing[a]).clamp(0.0, (self.counts[a] - 1) as f64);
            let i = (s.floor() as usize).min(self.counts[a] - 2);
            idx[a] = i;
            t[a] = s - i as f64;
        }
        (idx, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_grid_spacing() {
        let g = make_grid(2, &[(-1.0, 1.0)], &[129]).unwrap();
        assert_eq!(g.spacing()[0], 1.0 / 64.0);
        assert_eq!(g.spacing()[1], 1.0 / 64.0);
        assert_eq!(g.node_count(), 129 * 129);
    }

    #[test]
    fn cube_grid_spacing() {
        let g = make_grid(3, &[(0.0, 1.0)], &[65]).unwrap();
        assert_eq!(g.spacing(), [1.0 / 64.0; 3]);
        assert_eq!(g.node_count(), 65 * 65 * 65);
    }

    #[test]
    fn guards() {
        assert!(matches!(
            make_grid(2, &[(-1.0, 1.0)], &[2]),
            Err(Error::ResolutionTooSmall { .. })
        ));
        assert!(matches!(make_grid(4, &[(0.0, 1.0)], &[5]), Err(Error::InvalidDimension(4))));
        assert!(matches!(
            make_grid(1, &[(1.0, 1.0)], &[5]),
            Err(Error::DegenerateExtent { .. })
        ));
    }

    #[test]
    fn coordinates_are_lo_plus_ih() {
        let g = make_grid(2, &[(-1.0, 1.0), (0.0, 3.0)], &[9, 7]).unwrap();
        for node in 0..g.node_count() {
            let idx = g.multi_index(node);
            assert_eq!(g.index(idx), node);
            let x = g.coord(node);
            assert_eq!(x[0], -1.0 + idx[0] as f64 * 0.25);
            assert_eq!(x[1], 0.0 + idx[1] as f64 * 0.5);
        }
    }

    #[test]
    fn containment() {
        let g = Grid::cube(2, -1.0, 1.0, 33).unwrap();
        assert!(g.contains_ball(&Ball::unit()));
        assert!(!g.contains_ball(&Ball::new([0.9, 0.9, 0.0], 0.5)));
    }
}
