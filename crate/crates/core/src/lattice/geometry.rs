use super::Torus;
use crate::{Error, Result};

/// A subset of grid points.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSet {
    torus: Torus,
    mask: Vec<bool>,
}

impl GridSet {
    pub fn new(torus: Torus, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != torus.num_points() {
            return Err(Error::DimensionMismatch(format!("mask of {} for {} points", mask.len(), torus.num_points())));
        }
        Ok(Self { torus, mask })
    }

    pub fn empty(torus: Torus) -> Self {
        Self { torus, mask: vec![false; torus.num_points()] }
    }

    pub fn full(torus: Torus) -> Self {
        Self { torus, mask: vec![true; torus.num_points()] }
    }

    pub fn singleton(torus: Torus, idx: usize) -> Self {
        let mut s = Self::empty(torus);
        s.mask[idx] = true;
        s
    }

    /// Points whose position satisfies `pred`.
    pub fn from_fn(torus: Torus, mut pred: impl FnMut(&[f64]) -> bool) -> Self {
        let mask = (0..torus.num_points())
            .map(|p| pred(&torus.position(p)[..torus.dim()]))
            .collect();
        Self { torus, mask }
    }

    /// Grid points of the open ball `|x - c| < r` in the torus metric.
    pub fn ball(torus: Torus, ball: &Ball) -> Self {
        Self::from_fn(torus, |x| torus.distance(x, &ball.center) < ball.radius)
    }

    /// Points at distance at least `d` from `self`.
    pub fn far_from(&self, d: f64) -> Self {
        let members: Vec<[f64; 3]> = self.indices().map(|p| self.torus.position(p)).collect();
        let torus = self.torus;
        let mask = (0..torus.num_points())
            .map(|p| {
                let x = torus.position(p);
                members.iter().all(|y| torus.distance(&x, y) >= d)
            })
            .collect();
        Self { torus, mask }
    }

    pub fn torus(&self) -> &Torus {
        &self.torus
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.mask[idx]
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn union(&self, other: &GridSet) -> GridSet {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &GridSet) -> GridSet {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &GridSet) -> GridSet {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> GridSet {
        GridSet { torus: self.torus, mask: self.mask.iter().map(|b| !b).collect() }
    }

    fn zip_with(&self, other: &GridSet, f: impl Fn(bool, bool) -> bool) -> GridSet {
        GridSet {
            torus: self.torus,
            mask: self.mask.iter().zip(&other.mask).map(|(&a, &b)| f(a, b)).collect(),
        }
    }
}

/// Periodic distance `inf{|x - y| : x ∈ E, y ∈ F}` between grid sets.
pub fn periodic_distance(e: &GridSet, f: &GridSet) -> Result<f64> {
    if e.is_empty() || f.is_empty() {
        return Err(Error::EmptySet);
    }
    if e.torus != f.torus {
        return Err(Error::DimensionMismatch("sets on different tori".into()));
    }
    let torus = e.torus;
    let fs: Vec<[f64; 3]> = f.indices().map(|p| torus.position(p)).collect();
    let mut best = f64::INFINITY;
    for p in e.indices() {
        if f.contains(p) {
            return Ok(0.0);
        }
        let x = torus.position(p);
        for y in &fs {
            best = best.min(torus.distance(&x, y));
        }
    }
    Ok(best)
}

/// A ball `B(c, r)` in the torus.
#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    pub center: [f64; 3],
    pub radius: f64,
}

impl Ball {
    pub fn new(center: &[f64], radius: f64) -> Self {
        let mut c = [0.0; 3];
        c[..center.len()].copy_from_slice(center);
        Self { center: c, radius }
    }

    pub fn scaled(&self, factor: f64) -> Ball {
        Ball { center: self.center, radius: self.radius * factor }
    }
}

/// Annulus `S_j(B)`: `4B` for `j = 1`, otherwise `2^{j+1}B \ 2^jB`.
pub fn shell(torus: Torus, ball: &Ball, j: u32) -> Result<GridSet> {
    if j == 0 {
        return Err(Error::InvalidArgument("shells are indexed from 1".into()));
    }
    let outer = GridSet::ball(torus, &ball.scaled(2f64.powi(j as i32 + 1)));
    if j == 1 {
        return Ok(outer);
    }
    Ok(outer.difference(&GridSet::ball(torus, &ball.scaled(2f64.powi(j as i32)))))
}

/// A dyadic cube of side `2^level` grid cells.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicCube {
    pub level: u32,
    pub anchor: [usize; 3],
    dim: usize,
}

impl DyadicCube {
    /// Side points per axis, `2^level`.
    pub fn side_points(&self) -> usize {
        1 << self.level
    }

    /// Physical sidelength `l(Q) = 2^level·h`.
    pub fn sidelength(&self, torus: &Torus) -> f64 {
        self.side_points() as f64 * torus.spacing()
    }

    /// Volume `|Q| = l(Q)^n`.
    pub fn volume(&self, torus: &Torus) -> f64 {
        self.sidelength(torus).powi(self.dim as i32)
    }

    pub fn contains(&self, torus: &Torus, idx: usize) -> bool {
        let c = torus.coords(idx);
        (0..self.dim).all(|a| c[a] >= self.anchor[a] && c[a] < self.anchor[a] + self.side_points())
    }

    /// Grid points of the cube.
    pub fn points(&self, torus: &Torus) -> Vec<usize> {
        (0..torus.num_points()).filter(|&p| self.contains(torus, p)).collect()
    }
}

fn check_level(torus: &Torus, level: u32) -> Result<()> {
    if level >= usize::BITS || (1usize << level) > torus.points_per_axis() {
        return Err(Error::LevelTooLarge { level, points: torus.points_per_axis() });
    }
    Ok(())
}

/// All cubes of a level; they tile the torus.
pub fn dyadic_cubes(torus: &Torus, level: u32) -> Result<Vec<DyadicCube>> {
    check_level(torus, level)?;
    let side = 1usize << level;
    let per_axis = torus.points_per_axis() / side;
    let dim = torus.dim();
    let count = per_axis.pow(dim as u32);
    Ok((0..count)
        .map(|k| {
            let mut anchor = [0usize; 3];
            let mut rest = k;
            for a in (0..dim).rev() {
                anchor[a] = (rest % per_axis) * side;
                rest /= per_axis;
            }
            DyadicCube { level, anchor, dim }
        })
        .collect())
}

/// The unique cube of a level containing grid point `idx`.
pub fn dyadic_cube_of(torus: &Torus, level: u32, idx: usize) -> Result<DyadicCube> {
    check_level(torus, level)?;
    let side = 1usize << level;
    let c = torus.coords(idx);
    let mut anchor = [0usize; 3];
    for a in 0..torus.dim() {
        anchor[a] = c[a] / side * side;
    }
    Ok(DyadicCube { level, anchor, dim: torus.dim() })
}
