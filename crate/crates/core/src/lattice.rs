//! Finite 1+1 dimensional spacetime lattice.
//!
//! Space is a circle of `n_x` sites, time a finite window of `n_t` rows. The
//! causal cone grows by exactly one site per time step, which is the
//! dependency cone of the second order finite difference wave operator, so
//! every support statement made on this lattice is exact.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub t: usize,
    pub x: usize,
}

impl Point {
    pub const fn new(t: usize, x: usize) -> Self {
        Point { t, x }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpacetime {
    n_t: usize,
    n_x: usize,
    dt: f64,
    dx: f64,
}

impl LatticeSpacetime {
    pub fn new(n_t: usize, n_x: usize, dt: f64, dx: f64) -> Result<Self> {
        if n_x < 3 {
            return Err(Error::InvalidLattice(format!("n_x = {n_x} < 3")));
        }
        if n_t < 4 {
            return Err(Error::InvalidLattice(format!("n_t = {n_t} < 4")));
        }
        if !(dt > 0.0 && dx > 0.0 && dt.is_finite() && dx.is_finite()) {
            return Err(Error::InvalidLattice(format!("spacings must be positive, got dt = {dt}, dx = {dx}")));
        }
        if dt / dx > 1.0 {
            return Err(Error::Unstable(format!("dt/dx = {} exceeds 1", dt / dx)));
        }
        Ok(LatticeSpacetime { n_t, n_x, dt, dx })
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn num_points(&self) -> usize {
        self.n_t * self.n_x
    }

    pub fn contains(&self, p: Point) -> bool {
        p.t < self.n_t && p.x < self.n_x
    }

    pub fn check(&self, p: Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutOfBounds(p))
        }
    }

    /// Row-major index, time outer.
    pub fn index(&self, p: Point) -> usize {
        p.t * self.n_x + p.x
    }

    pub fn point(&self, index: usize) -> Point {
        Point::new(index / self.n_x, index % self.n_x)
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.num_points()).map(move |i| self.point(i))
    }

    /// Rows where the wave operator has both time neighbours.
    pub fn is_interior(&self, p: Point) -> bool {
        p.t >= 1 && p.t + 1 < self.n_t
    }

    /// Length of the shorter arc between two spatial sites.
    pub fn periodic_distance(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b) % self.n_x;
        d.min(self.n_x - d)
    }

    pub fn shift_x(&self, x: usize, by: isize) -> usize {
        (x as isize + by).rem_euclid(self.n_x as isize) as usize
    }

    /// `q ∈ J⁺(p)`.
    pub fn in_future(&self, p: Point, q: Point) -> bool {
        q.t >= p.t && self.periodic_distance(q.x, p.x) <= q.t - p.t
    }

    /// `q ∈ J⁻(p)`.
    pub fn in_past(&self, p: Point, q: Point) -> bool {
        self.in_future(q, p)
    }

    pub fn causal_future(&self, p: Point) -> Result<BTreeSet<Point>> {
        self.check(p)?;
        Ok(self.points().filter(|&q| self.in_future(p, q)).collect())
    }

    pub fn causal_past(&self, p: Point) -> Result<BTreeSet<Point>> {
        self.check(p)?;
        Ok(self.points().filter(|&q| self.in_past(p, q)).collect())
    }

    pub fn is_spacelike(&self, p: Point, q: Point) -> bool {
        !self.in_future(p, q) && !self.in_past(p, q)
    }

    /// Whether a cone of the given radius touches itself around the circle.
    /// Beyond this radius nothing is spacelike to the apex.
    pub fn cone_wraps(&self, radius: usize) -> bool {
        radius >= self.n_x / 2
    }

    pub fn diamond(&self, base: Point, apex: Point) -> Result<Region> {
        self.check(base)?;
        self.check(apex)?;
        if !self.in_future(base, apex) {
            return Err(Error::NotInFuture { base, apex });
        }
        let points = self.points().filter(|&q| self.in_future(base, q) && self.in_past(apex, q)).collect();
        Ok(Region { points, kind: RegionKind::Diamond })
    }

    pub fn cauchy_slab(&self, t0: usize, thickness: usize) -> Result<Region> {
        if thickness == 0 || t0 + thickness > self.n_t {
            return Err(Error::SlabOutOfRange { t0, thickness, n_t: self.n_t });
        }
        let points = (t0..t0 + thickness).flat_map(|t| (0..self.n_x).map(move |x| Point::new(t, x))).collect();
        Ok(Region { points, kind: RegionKind::Slab { t0, thickness } })
    }

    /// Every point of `set` outside `J⁺(other)`, i.e. `set` is not to the
    /// future of `other`.
    pub fn not_to_future_of(&self, set: &BTreeSet<Point>, other: &BTreeSet<Point>) -> bool {
        set.iter().all(|&q| other.iter().all(|&p| !self.in_future(p, q)))
    }

    pub fn sets_spacelike(&self, a: &BTreeSet<Point>, b: &BTreeSet<Point>) -> bool {
        a.iter().all(|&p| b.iter().all(|&q| self.is_spacelike(p, q)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionKind {
    Diamond,
    Slab { t0: usize, thickness: usize },
    Arbitrary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub points: BTreeSet<Point>,
    pub kind: RegionKind,
}

impl Region {
    pub fn arbitrary(points: impl IntoIterator<Item = Point>) -> Self {
        Region { points: points.into_iter().collect(), kind: RegionKind::Arbitrary }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.points.contains(&p)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.points.is_subset(&other.points)
    }

    pub fn intersection(&self, other: &Region) -> Region {
        Region::arbitrary(self.points.intersection(&other.points).copied())
    }

    pub fn is_causally_convex(&self, lattice: &LatticeSpacetime) -> bool {
        for &p in &self.points {
            for &q in &self.points {
                if !lattice.in_future(p, q) {
                    continue;
                }
                for r in lattice.points() {
                    if lattice.in_future(p, r) && lattice.in_past(q, r) && !self.contains(r) {
                        return false;
                    }
                }
            }
        }
        true
    }
}
