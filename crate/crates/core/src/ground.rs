//! Joint indexing of the target and auxiliary pools.
//!
//! Items `0..m` are the labeled target items and `m..m+n` are the auxiliary
//! pool. Every item carries a class id in `0..C`; auxiliary ids are
//! pseudo-labels supplied by the caller.

use std::ops::Range;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundSet {
    target_count: usize,
    labels: Vec<u32>,
    class_count: usize,
}

impl GroundSet {
    /// Validates counts and labels and derives the target/auxiliary split.
    pub fn new(target_count: usize, labels: Vec<u32>, class_count: usize) -> Result<Self> {
        if target_count == 0 {
            return Err(invalid("target_count must be at least 1"));
        }
        if class_count == 0 {
            return Err(invalid("class_count must be at least 1"));
        }
        if target_count >= labels.len() {
            return Err(invalid(format!(
                "target_count {} leaves no auxiliary items among {} labels",
                target_count,
                labels.len()
            )));
        }
        if let Some((i, &l)) = labels
            .iter()
            .enumerate()
            .find(|(_, &l)| l as usize >= class_count)
        {
            return Err(invalid(format!(
                "label {l} of item {i} is out of range for {class_count} classes"
            )));
        }
        Ok(Self {
            target_count,
            labels,
            class_count,
        })
    }

    /// Like [`GroundSet::new`] with the class count inferred as `max(label) + 1`.
    pub fn infer_classes(target_count: usize, labels: Vec<u32>) -> Result<Self> {
        let classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        Self::new(target_count, labels, classes)
    }

    pub fn total_count(&self) -> usize {
        self.labels.len()
    }

    pub fn target_count(&self) -> usize {
        self.target_count
    }

    pub fn aux_count(&self) -> usize {
        self.labels.len() - self.target_count
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, item: usize) -> usize {
        self.labels[item] as usize
    }

    #[inline]
    pub fn is_target(&self, item: usize) -> bool {
        item < self.target_count
    }

    #[inline]
    pub fn is_aux(&self, item: usize) -> bool {
        item >= self.target_count && item < self.labels.len()
    }

    pub fn target_range(&self) -> Range<usize> {
        0..self.target_count
    }

    pub fn aux_range(&self) -> Range<usize> {
        self.target_count..self.labels.len()
    }

    /// Auxiliary items carrying the given (pseudo-)label, ascending.
    pub fn aux_of_class(&self, class: usize) -> Vec<usize> {
        self.aux_range()
            .filter(|&i| self.label(i) == class)
            .collect()
    }

    /// Per-class counts of the given items.
    pub fn class_counts(&self, items: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &i in items {
            counts[self.label(i)] += 1;
        }
        counts
    }

    pub fn check_index(&self, item: usize) -> Result<()> {
        if item >= self.labels.len() {
            return Err(Error::IndexOutOfBounds {
                index: item,
                size: self.labels.len(),
            });
        }
        Ok(())
    }

    /// Errors unless every item is an auxiliary index.
    pub fn check_aux_subset(&self, items: &[usize]) -> Result<()> {
        for &i in items {
            self.check_index(i)?;
            if self.is_target(i) {
                return Err(invalid(format!(
                    "item {i} is a target index; selections must lie in {}..{}",
                    self.target_count,
                    self.total_count()
                )));
            }
        }
        Ok(())
    }
}

/// Membership mask for `items` over `0..size`, rejecting duplicates and
/// out-of-range indices.
pub fn membership(items: &[usize], size: usize) -> Result<Vec<bool>> {
    let mut mask = vec![false; size];
    for &i in items {
        if i >= size {
            return Err(Error::IndexOutOfBounds { index: i, size });
        }
        if mask[i] {
            return Err(invalid(format!("item {i} appears more than once")));
        }
        mask[i] = true;
    }
    Ok(mask)
}
