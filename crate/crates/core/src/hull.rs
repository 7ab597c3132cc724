//! Convex hulls of small point clouds in up to six dimensions, returned as
//! halfspaces `a·p ≥ w` plus equalities `a·p = w` for clouds that are not
//! full-dimensional.
//!
//! The cloud is first projected onto its affine hull (found by SVD). Inside
//! that subspace an incremental beneath–beyond construction with outside
//! sets builds a simplicial boundary; coplanar simplices are then merged by
//! their incident point sets and each merged facet is refitted through all of
//! its incident points.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::HullError;

pub const MAX_DIM: usize = 6;

/// Coplanarity and visibility tolerance, relative to the cloud diameter.
pub const COPLANAR_TOL: f64 = 1e-9;

const NONE: u32 = u32::MAX;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Points of a common dimension, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize) -> Result<Self, HullError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(HullError::UnsupportedDimension(dim));
        }
        Ok(Self { dim, coords: Vec::new() })
    }

    pub fn from_points<P: AsRef<[f64]>>(
        dim: usize,
        points: impl IntoIterator<Item = P>,
    ) -> Result<Self, HullError> {
        let mut pc = Self::new(dim)?;
        for p in points {
            pc.push(p.as_ref())?;
        }
        Ok(pc)
    }

    pub fn push(&mut self, p: &[f64]) -> Result<(), HullError> {
        if p.len() != self.dim {
            return Err(HullError::DimensionMismatch { expected: self.dim, got: p.len() });
        }
        if p.iter().any(|c| !c.is_finite()) {
            return Err(HullError::NonFinite);
        }
        self.coords.extend_from_slice(p);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for p in self.points() {
            c.iter_mut().zip(p).for_each(|(a, b)| *a += b);
        }
        let n = self.len().max(1) as f64;
        c.iter_mut().for_each(|a| *a /= n);
        c
    }
}

/// A halfspace `normal·p ≥ offset` (or a hyperplane, for equalities) with a
/// unit normal.
#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Facet {
    /// `normal·p − offset`; nonnegative on the hull side.
    pub fn slack(&self, p: &[f64]) -> f64 {
        dot(&self.normal, p) - self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullResult {
    pub dim: usize,
    pub affine_dim: usize,
    pub facets: Vec<Facet>,
    pub equalities: Vec<Facet>,
}

impl HullResult {
    /// Smallest facet slack, or minus the largest equality residual if that
    /// is worse. Nonnegative exactly on the hull.
    pub fn margin(&self, p: &[f64]) -> f64 {
        let ineq = self.facets.iter().map(|f| f.slack(p)).fold(f64::INFINITY, f64::min);
        let eq = self.equalities.iter().map(|f| -f.slack(p).abs()).fold(f64::INFINITY, f64::min);
        ineq.min(eq)
    }

    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        self.margin(p) >= -tol
    }
}

/// Affine hull of a cloud: an orthonormal basis of its directions, the
/// orthogonal complement and the centroid.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineHull {
    pub dim: usize,
    pub basis: Vec<Vec<f64>>,
    pub complement: Vec<Vec<f64>>,
    pub centroid: Vec<f64>,
}

/// Splits the right singular vectors of the centered cloud into directions
/// the points actually extend along and directions where every point stays
/// within `tol · diameter` of the centroid.
pub fn affine_dimension(pc: &PointCloud, tol: f64) -> AffineHull {
    let d = pc.dim;
    let n = pc.len();
    let centroid = pc.centroid();
    let rows = n.max(d);
    let mut centered = DMatrix::<f64>::zeros(rows, d);
    let mut radius: f64 = 0.0;
    let mut magnitude: f64 = 0.0;
    for (i, p) in pc.points().enumerate() {
        let mut r2 = 0.0;
        for k in 0..d {
            let v = p[k] - centroid[k];
            centered[(i, k)] = v;
            r2 += v * v;
            magnitude = magnitude.max(p[k].abs());
        }
        radius = radius.max(libm::sqrt(r2));
    }
    let threshold = (tol * 2.0 * radius).max(1e-14 * magnitude);

    let mut directions: Vec<(f64, Vec<f64>)> = Vec::with_capacity(d);
    if radius > 0.0 {
        let svd = centered.clone().svd(false, true);
        let vt = svd.v_t.expect("right singular vectors requested");
        for k in 0..vt.nrows() {
            let u: Vec<f64> = vt.row(k).iter().copied().collect();
            let spread = pc.points().map(|p| (dot(&u, p) - dot(&u, &centroid)).abs()).fold(0.0, f64::max);
            directions.push((spread, u));
        }
        directions.sort_by(|a, b| b.0.total_cmp(&a.0));
    } else {
        for k in 0..d {
            let mut u = vec![0.0; d];
            u[k] = 1.0;
            directions.push((0.0, u));
        }
    }
    let dim = directions.iter().filter(|(s, _)| *s > threshold).count();
    let mut basis = Vec::with_capacity(dim);
    let mut complement = Vec::with_capacity(d - dim);
    for (k, (_, u)) in directions.into_iter().enumerate() {
        if k < dim {
            basis.push(u);
        } else {
            complement.push(canonical_sign(u));
        }
    }
    AffineHull { dim, basis, complement, centroid }
}

fn canonical_sign(mut u: Vec<f64>) -> Vec<f64> {
    if let Some(first) = u.iter().copied().find(|c| c.abs() > 1e-12) {
        if first < 0.0 {
            u.iter_mut().for_each(|c| *c = -*c);
        }
    }
    u
}

fn lex_cmp(a: &Facet, b: &Facet) -> Ordering {
    for (x, y) in a.normal.iter().zip(&b.normal) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    a.offset.total_cmp(&b.offset)
}

/// Facets and equalities describing `conv(pc)`.
///
/// Equalities get a lexicographically positive unit normal; facets are
/// oriented by their sense and sorted lexicographically.
pub fn convex_hull(pc: &PointCloud) -> Result<HullResult, HullError> {
    if pc.is_empty() {
        return Err(HullError::DegenerateInput);
    }
    let d = pc.dim;
    let affine = affine_dimension(pc, COPLANAR_TOL);
    let r = affine.dim;

    let equalities: Vec<Facet> = affine
        .complement
        .iter()
        .map(|u| Facet { normal: u.clone(), offset: dot(u, &affine.centroid) })
        .collect();

    // Coordinates inside the affine hull.
    let n = pc.len();
    let mut projected = Vec::with_capacity(n * r);
    for p in pc.points() {
        let shifted: Vec<f64> = p.iter().zip(&affine.centroid).map(|(a, c)| a - c).collect();
        projected.extend(affine.basis.iter().map(|b| dot(b, &shifted)));
    }

    let local = match r {
        0 => Vec::new(),
        1 => {
            let (lo, hi) = projected.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
            vec![(vec![1.0], lo), (vec![-1.0], -hi)]
        }
        _ => {
            let diameter = 2.0
                * projected
                    .chunks_exact(r)
                    .map(|q| libm::sqrt(dot(q, q)))
                    .fold(0.0, f64::max);
            build_local(&projected, r, diameter)?
        }
    };

    let mut facets: Vec<Facet> = local
        .into_iter()
        .map(|(nl, w)| {
            let mut normal = vec![0.0; d];
            for (coef, b) in nl.iter().zip(&affine.basis) {
                normal.iter_mut().zip(b).for_each(|(a, bk)| *a += coef * bk);
            }
            let norm = libm::sqrt(dot(&normal, &normal));
            normal.iter_mut().for_each(|a| *a /= norm);
            let offset = (w + dot(&normal, &affine.centroid)).min(
                pc.points().map(|p| dot(&normal, p)).fold(f64::INFINITY, f64::min),
            );
            Facet { normal, offset }
        })
        .collect();
    facets.sort_by(lex_cmp);
    Ok(HullResult { dim: d, affine_dim: r, facets, equalities })
}

/// Relative joggle sizes tried, in order, when the exact construction hits
/// an inconsistent visibility decision.
const JOGGLE_STEPS: [f64; 5] = [0.0, 1e-11, 1e-10, 1e-9, 1e-8];

/// Builds on the projected points, retrying on deterministically perturbed
/// copies when the construction fails. Merging, refitting and the offsets
/// always use the unperturbed points, so every returned halfspace contains
/// the whole cloud.
fn build_local(projected: &[f64], r: usize, diameter: f64) -> Result<Vec<(Vec<f64>, f64)>, HullError> {
    let base_eps = COPLANAR_TOL * diameter;
    let mut rng = ChaCha8Rng::seed_from_u64(0x6a09_e667_f3bc_c908);
    let mut last = HullError::NumericalFailure("hull construction failed");
    for &step in &JOGGLE_STEPS {
        let joggle = step * diameter;
        let (pts, eps) = if joggle == 0.0 {
            (projected.to_vec(), base_eps)
        } else {
            let pts = projected.iter().map(|&c| c + joggle * rng.random_range(-1.0..1.0)).collect();
            (pts, 1e-3 * joggle)
        };
        let mut builder = Builder::new(&pts, r, eps);
        match builder.run() {
            Ok(()) => return Ok(builder.merged_facets(projected, base_eps + 4.0 * joggle)),
            Err(e) => last = e,
        }
    }
    Err(last)
}

type Key = [u32; MAX_DIM];

struct Face {
    verts: Key,
    normal: [f64; MAX_DIM],
    offset: f64,
    outside: Vec<u32>,
    alive: bool,
}

/// Beneath–beyond construction inside an `r`-dimensional subspace where the
/// points are full-dimensional.
struct Builder<'a> {
    pts: &'a [f64],
    r: usize,
    eps: f64,
    interior: [f64; MAX_DIM],
    faces: Vec<Face>,
    ridges: BTreeMap<Key, [u32; 2]>,
}

impl<'a> Builder<'a> {
    fn new(pts: &'a [f64], r: usize, eps: f64) -> Self {
        Self { pts, r, eps, interior: [0.0; MAX_DIM], faces: Vec::new(), ridges: BTreeMap::new() }
    }

    fn n(&self) -> usize {
        self.pts.len() / self.r
    }

    fn point(&self, i: u32) -> &[f64] {
        let i = i as usize;
        &self.pts[i * self.r..(i + 1) * self.r]
    }

    /// Positive when `p` lies beyond the face.
    fn height(&self, face: &Face, i: u32) -> f64 {
        face.offset - dot(&face.normal[..self.r], self.point(i))
    }

    fn ridge_key(&self, verts: &Key, skip: usize) -> Key {
        let mut key = [NONE; MAX_DIM];
        let mut k = 0;
        for (j, &v) in verts[..self.r].iter().enumerate() {
            if j != skip {
                key[k] = v;
                k += 1;
            }
        }
        key
    }

    /// Hyperplane through `verts`, oriented so the interior point is on the
    /// nonnegative side.
    fn plane(&self, verts: &Key) -> Option<([f64; MAX_DIM], f64)> {
        let r = self.r;
        let x0 = self.point(verts[0]);
        let mut basis: Vec<[f64; MAX_DIM]> = Vec::with_capacity(r - 1);
        for &v in &verts[1..r] {
            let mut e = [0.0; MAX_DIM];
            let p = self.point(v);
            for k in 0..r {
                e[k] = p[k] - x0[k];
            }
            let len0 = libm::sqrt(dot(&e[..r], &e[..r]));
            orthogonalize(&mut e[..r], &basis, r);
            let len = libm::sqrt(dot(&e[..r], &e[..r]));
            if len <= 1e-13 * len0.max(self.eps) {
                return None;
            }
            e[..r].iter_mut().for_each(|c| *c /= len);
            basis.push(e);
        }
        let mut normal = [0.0; MAX_DIM];
        for k in 0..r {
            normal[k] = self.interior[k] - x0[k];
        }
        orthogonalize(&mut normal[..r], &basis, r);
        let len = libm::sqrt(dot(&normal[..r], &normal[..r]));
        if len <= 0.0 || !len.is_finite() {
            return None;
        }
        normal[..r].iter_mut().for_each(|c| *c /= len);
        let offset = verts[..r].iter().map(|&v| dot(&normal[..r], self.point(v))).sum::<f64>() / r as f64;
        Some((normal, offset))
    }

    fn add_face(&mut self, verts: Key) -> Result<u32, HullError> {
        let (normal, offset) =
            self.plane(&verts).ok_or(HullError::NumericalFailure("degenerate facet simplex"))?;
        let id = self.faces.len() as u32;
        for skip in 0..self.r {
            let key = self.ridge_key(&verts, skip);
            let slot = self.ridges.entry(key).or_insert([NONE, NONE]);
            if slot[0] == NONE {
                slot[0] = id;
            } else if slot[1] == NONE {
                slot[1] = id;
            } else {
                return Err(HullError::NumericalFailure("ridge shared by more than two facets"));
            }
        }
        self.faces.push(Face { verts, normal, offset, outside: Vec::new(), alive: true });
        Ok(id)
    }

    fn remove_face(&mut self, id: u32) -> Vec<u32> {
        let verts = self.faces[id as usize].verts;
        for skip in 0..self.r {
            let key = self.ridge_key(&verts, skip);
            if let Some(slot) = self.ridges.get_mut(&key) {
                if slot[0] == id {
                    slot[0] = slot[1];
                    slot[1] = NONE;
                } else if slot[1] == id {
                    slot[1] = NONE;
                }
                if slot[0] == NONE {
                    self.ridges.remove(&key);
                }
            }
        }
        let face = &mut self.faces[id as usize];
        face.alive = false;
        core::mem::take(&mut face.outside)
    }

    fn neighbor(&self, id: u32, skip: usize) -> Option<u32> {
        let key = self.ridge_key(&self.faces[id as usize].verts, skip);
        let slot = self.ridges.get(&key)?;
        let other = if slot[0] == id { slot[1] } else { slot[0] };
        (other != NONE).then_some(other)
    }

    /// Hands each point to the face it lies farthest beyond, if any.
    fn assign(&mut self, candidates: &[u32], faces: &[u32]) {
        for &p in candidates {
            let mut best: Option<(u32, f64)> = None;
            for &f in faces {
                let h = self.height(&self.faces[f as usize], p);
                if h > self.eps && best.is_none_or(|(_, bh)| h > bh) {
                    best = Some((f, h));
                }
            }
            if let Some((f, _)) = best {
                self.faces[f as usize].outside.push(p);
            }
        }
    }

    fn initial_simplex(&self) -> Result<Vec<u32>, HullError> {
        let r = self.r;
        let n = self.n() as u32;
        // The cloud is centered, so start from the point farthest from the origin.
        let first = (0..n)
            .max_by(|&a, &b| {
                let pa = self.point(a);
                let pb = self.point(b);
                dot(pa, pa).total_cmp(&dot(pb, pb))
            })
            .expect("non-empty cloud");
        let mut chosen = vec![first];
        let mut basis: Vec<[f64; MAX_DIM]> = Vec::with_capacity(r);
        let origin = self.point(first);
        for _ in 0..r {
            let mut best: Option<(u32, f64, [f64; MAX_DIM])> = None;
            for i in 0..n {
                let mut e = [0.0; MAX_DIM];
                let p = self.point(i);
                for k in 0..r {
                    e[k] = p[k] - origin[k];
                }
                orthogonalize(&mut e[..r], &basis, r);
                let dist = libm::sqrt(dot(&e[..r], &e[..r]));
                if best.is_none_or(|(_, bd, _)| dist > bd) {
                    best = Some((i, dist, e));
                }
            }
            let (i, dist, mut e) = best.expect("non-empty cloud");
            if dist <= self.eps {
                return Err(HullError::NumericalFailure("could not find a full-dimensional simplex"));
            }
            e[..r].iter_mut().for_each(|c| *c /= dist);
            basis.push(e);
            chosen.push(i);
        }
        Ok(chosen)
    }

    fn run(&mut self) -> Result<(), HullError> {
        let r = self.r;
        let simplex = self.initial_simplex()?;
        for &v in &simplex {
            for k in 0..r {
                self.interior[k] += self.point(v)[k] / (r + 1) as f64;
            }
        }
        let mut initial = Vec::with_capacity(r + 1);
        for skip in 0..=r {
            let mut verts = [NONE; MAX_DIM];
            let mut k = 0;
            for (j, &v) in simplex.iter().enumerate() {
                if j != skip {
                    verts[k] = v;
                    k += 1;
                }
            }
            verts[..r].sort_unstable();
            initial.push(self.add_face(verts)?);
        }
        let rest: Vec<u32> = (0..self.n() as u32).filter(|i| !simplex.contains(i)).collect();
        self.assign(&rest, &initial);

        let mut pending: Vec<u32> = initial.clone();
        let mut stamp: Vec<(u32, bool)> = Vec::new();
        let mut round: u32 = 0;
        let max_rounds = 64 * self.n() + 1024;
        while let Some(seed) = pending.pop() {
            let seed_face = &self.faces[seed as usize];
            if !seed_face.alive || seed_face.outside.is_empty() {
                continue;
            }
            round += 1;
            if round as usize > max_rounds {
                return Err(HullError::NumericalFailure("too many hull updates"));
            }
            let eye = *seed_face
                .outside
                .iter()
                .max_by(|&&a, &&b| self.height(seed_face, a).total_cmp(&self.height(seed_face, b)))
                .expect("non-empty outside set");

            stamp.resize(self.faces.len(), (0, false));
            stamp[seed as usize] = (round, true);
            let mut visible = vec![seed];
            let mut horizon: Vec<Key> = Vec::new();
            let mut cursor = 0;
            while cursor < visible.len() {
                let f = visible[cursor];
                cursor += 1;
                for skip in 0..r {
                    let g = self
                        .neighbor(f, skip)
                        .ok_or(HullError::NumericalFailure("open ridge during construction"))?;
                    if stamp[g as usize].0 != round {
                        let vis = self.height(&self.faces[g as usize], eye) > self.eps;
                        stamp[g as usize] = (round, vis);
                        if vis {
                            visible.push(g);
                        }
                    }
                    if !stamp[g as usize].1 {
                        horizon.push(self.ridge_key(&self.faces[f as usize].verts, skip));
                    }
                }
            }

            let mut orphans = Vec::new();
            for &f in &visible {
                orphans.extend(self.remove_face(f));
            }
            orphans.retain(|&p| p != eye);
            let mut created = Vec::with_capacity(horizon.len());
            for ridge in horizon {
                let mut verts = ridge;
                verts[r - 1] = eye;
                verts[..r].sort_unstable();
                created.push(self.add_face(verts)?);
            }
            self.assign(&orphans, &created);
            pending.extend(created.iter().filter(|&&f| !self.faces[f as usize].outside.is_empty()));
        }
        if self.ridges.values().any(|slot| slot[1] == NONE) {
            return Err(HullError::NumericalFailure("hull boundary is not closed"));
        }
        self.check_convex()
    }

    /// A closed simplicial boundary that is convex across every ridge bounds
    /// a convex body; also every point must lie beneath every face.
    fn check_convex(&self) -> Result<(), HullError> {
        let tol = 10.0 * self.eps;
        for (id, face) in self.faces.iter().enumerate() {
            if !face.alive {
                continue;
            }
            for skip in 0..self.r {
                let g = self.neighbor(id as u32, skip).ok_or(HullError::NumericalFailure("open ridge"))?;
                let far = self.faces[g as usize].verts[..self.r].iter().find(|v| !face.verts[..self.r].contains(v));
                if far.is_some_and(|&v| self.height(face, v) > tol) {
                    return Err(HullError::NumericalFailure("hull boundary is not convex"));
                }
            }
            if (0..self.n() as u32).any(|i| self.height(face, i) > tol) {
                return Err(HullError::NumericalFailure("point left outside the hull"));
            }
        }
        Ok(())
    }

    /// Merges coplanar simplices by the points of `original` within `tol` of
    /// their plane and refits each merged facet through those points.
    fn merged_facets(&self, original: &[f64], tol: f64) -> Vec<(Vec<f64>, f64)> {
        let r = self.r;
        let at = |i: u32| &original[i as usize * r..(i as usize + 1) * r];
        let n = self.n() as u32;
        let mut groups: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
        for (id, face) in self.faces.iter().enumerate() {
            if !face.alive {
                continue;
            }
            let incident: Vec<u32> =
                (0..n).filter(|&i| (face.offset - dot(&face.normal[..r], at(i))).abs() <= tol).collect();
            groups.entry(incident).or_insert(id);
        }
        let mut merged: Vec<(Vec<f64>, f64)> = Vec::with_capacity(groups.len());
        for (incident, id) in groups {
            let face = &self.faces[id];
            let pts: Vec<&[f64]> = incident.iter().map(|&i| at(i)).collect();
            let normal = self.refit(&pts, tol).unwrap_or_else(|| face.normal[..r].to_vec());
            let offset = (0..n).map(|i| dot(&normal, at(i))).fold(f64::INFINITY, f64::min);
            let duplicate = merged.iter().any(|(m, w)| {
                (w - offset).abs() <= 1e-12 * (1.0 + offset.abs())
                    && m.iter().zip(&normal).all(|(a, b)| (a - b).abs() <= 1e-12)
            });
            if !duplicate {
                merged.push((normal, offset));
            }
        }
        merged
    }

    /// Least-squares hyperplane normal through `incident`, if every point
    /// fits within `tol`.
    fn refit(&self, incident: &[&[f64]], tol: f64) -> Option<Vec<f64>> {
        let r = self.r;
        let k = incident.len();
        if k < r {
            return None;
        }
        let mut mean = vec![0.0; r];
        for p in incident {
            mean.iter_mut().zip(p.iter()).for_each(|(m, c)| *m += c / k as f64);
        }
        let rows = k.max(r);
        let mut m = DMatrix::<f64>::zeros(rows, r);
        for (row, p) in incident.iter().enumerate() {
            for (c, (x, mu)) in p.iter().zip(&mean).enumerate() {
                m[(row, c)] = x - mu;
            }
        }
        let svd = m.svd(false, true);
        let vt = svd.v_t?;
        let (smallest, _) = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))?;
        let mut normal: Vec<f64> = vt.row(smallest).iter().copied().collect();
        let towards: Vec<f64> = self.interior[..r].iter().zip(&mean).map(|(a, b)| a - b).collect();
        if dot(&normal, &towards) < 0.0 {
            normal.iter_mut().for_each(|c| *c = -*c);
        }
        let offset = dot(&normal, &mean);
        let fits = incident.iter().all(|p| (dot(&normal, p) - offset).abs() <= tol);
        fits.then_some(normal)
    }
}

/// Two passes of modified Gram–Schmidt against an orthonormal basis.
fn orthogonalize(v: &mut [f64], basis: &[[f64; MAX_DIM]], r: usize) {
    for _ in 0..2 {
        for b in basis {
            let c = dot(v, &b[..r]);
            v.iter_mut().zip(&b[..r]).for_each(|(x, bk)| *x -= c * bk);
        }
    }
}
