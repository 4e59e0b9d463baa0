//! Polynomial kernel over binary feature vectors and the row cache used
//! during training.
//!
//! For binary vectors `⟨x, y⟩` is the size of the intersection, so a Gram
//! entry is fully described by an integer overlap. Rows are cached as
//! `u16` overlaps and mapped through a precomputed `(o + 1)^d` table.

use std::rc::Rc;

use crate::features::FeatureVector;

/// Problems up to this many points keep every Gram row resident.
pub const FULL_GRAM_LIMIT: usize = 5_000;

/// Overlap entries kept resident once the LRU cache kicks in.
const LRU_BUDGET_ENTRIES: usize = 32 * 1024 * 1024;

/// `(⟨x, y⟩ + 1)^d`.
pub fn kernel(x: &FeatureVector, y: &FeatureVector, degree: u32) -> f64 {
    poly(x.overlap(y), degree)
}

#[inline]
pub(crate) fn poly(overlap: usize, degree: u32) -> f64 {
    (overlap as f64 + 1.0).powi(degree as i32)
}

pub(crate) struct KernelMatrix<'a> {
    points: &'a [FeatureVector],
    table: Vec<f64>,
    marks: Vec<bool>,
    rows: Vec<Option<Rc<[u16]>>>,
    last_used: Vec<u64>,
    resident: usize,
    capacity: usize,
    clock: u64,
}

impl<'a> KernelMatrix<'a> {
    /// # Panics
    ///
    /// Panics if a point has more than `u16::MAX` active features.
    pub(crate) fn new(points: &'a [FeatureVector], degree: u32) -> Self {
        let longest = points.iter().map(FeatureVector::len).max().unwrap_or(0);
        assert!(longest <= u16::MAX as usize, "feature vector too long for the kernel cache");
        let width = points
            .iter()
            .filter_map(|p| p.ids().last())
            .map(|f| f.index() + 1)
            .max()
            .unwrap_or(0);
        let n = points.len();
        let capacity = if n <= FULL_GRAM_LIMIT {
            n
        } else {
            (LRU_BUDGET_ENTRIES / n).max(2)
        };
        KernelMatrix {
            points,
            table: (0..=longest).map(|o| poly(o, degree)).collect(),
            marks: vec![false; width],
            rows: vec![None; n],
            last_used: vec![0; n],
            resident: 0,
            capacity,
            clock: 0,
        }
    }

    pub(crate) fn diag(&self, i: usize) -> f64 {
        self.table[self.points[i].len()]
    }

    #[inline]
    pub(crate) fn value(&self, overlap: u16) -> f64 {
        self.table[overlap as usize]
    }

    /// Overlaps of point `i` with every point.
    pub(crate) fn row(&mut self, i: usize) -> Rc<[u16]> {
        self.clock += 1;
        self.last_used[i] = self.clock;
        if let Some(row) = &self.rows[i] {
            return Rc::clone(row);
        }
        if self.resident >= self.capacity {
            self.evict();
        }
        let row = self.compute(i);
        self.rows[i] = Some(Rc::clone(&row));
        self.resident += 1;
        row
    }

    fn evict(&mut self) {
        let victim = (0..self.rows.len())
            .filter(|&r| self.rows[r].is_some())
            .min_by_key(|&r| self.last_used[r]);
        if let Some(v) = victim {
            self.rows[v] = None;
            self.resident -= 1;
        }
    }

    fn compute(&mut self, i: usize) -> Rc<[u16]> {
        let x = self.points[i].ids();
        for f in x {
            self.marks[f.index()] = true;
        }
        let row: Rc<[u16]> = self
            .points
            .iter()
            .map(|p| p.ids().iter().filter(|f| self.marks[f.index()]).count() as u16)
            .collect();
        for f in x {
            self.marks[f.index()] = false;
        }
        row
    }
}
