//! Multi-index spaces and the flattening maps between separable and dense
//! index layouts.
//!
//! All coordinates are 0-based and linearized first-index-fastest: the
//! coordinate of dimension `d` has stride `dims[0] * ... * dims[d - 1]`.

use std::fmt;

use crate::error::{Error, Result};

/// Shape of a tensor indexed by tuples of per-dimension coordinates.
///
/// A rank-0 space (no dimensions) has exactly one element.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IndexSpace {
    dims: Vec<usize>,
}

/// A coordinate tuple inside some [`IndexSpace`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(pub Vec<usize>);

impl MultiIndex {
    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for MultiIndex {
    fn from(coords: Vec<usize>) -> Self {
        MultiIndex(coords)
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (n, c) in self.0.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl IndexSpace {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::Shape(format!(
                "dimension {pos} of {dims:?} has size zero"
            )));
        }
        Ok(IndexSpace { dims })
    }

    pub fn scalar() -> Self {
        IndexSpace { dims: Vec::new() }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn total_size(&self) -> usize {
        self.dims.iter().product()
    }

    /// Stride of every dimension in the first-index-fastest layout.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = Vec::with_capacity(self.dims.len());
        let mut acc = 1;
        for &d in &self.dims {
            strides.push(acc);
            acc *= d;
        }
        strides
    }

    /// Linear position of `idx`: `sum_d idx[d] * prod_{d' < d} dims[d']`.
    pub fn flatten(&self, idx: &MultiIndex) -> Result<usize> {
        self.flatten_coords(idx.coords())
    }

    pub fn flatten_coords(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.dims.len() {
            return Err(Error::Range(format!(
                "index of rank {} used in space of rank {}",
                coords.len(),
                self.dims.len()
            )));
        }
        let mut linear = 0;
        let mut stride = 1;
        for (d, (&c, &n)) in coords.iter().zip(&self.dims).enumerate() {
            if c >= n {
                return Err(Error::Range(format!(
                    "coordinate {c} in dimension {d} exceeds size {n}"
                )));
            }
            linear += c * stride;
            stride *= n;
        }
        Ok(linear)
    }

    pub fn unflatten(&self, linear: usize) -> Result<MultiIndex> {
        let total = self.total_size();
        if linear >= total {
            return Err(Error::Range(format!(
                "linear index {linear} exceeds space size {total}"
            )));
        }
        let mut rest = linear;
        let coords = self
            .dims
            .iter()
            .map(|&n| {
                let c = rest % n;
                rest /= n;
                c
            })
            .collect();
        Ok(MultiIndex(coords))
    }

    /// Iterates every multi-index in ascending flattened order.
    pub fn iter(&self) -> IndexIter<'_> {
        IndexIter {
            dims: &self.dims,
            next: Some(vec![0; self.dims.len()]),
        }
    }

    /// Calls `f(linear, coords)` for every element, in ascending linear order,
    /// without allocating per element.
    pub fn for_each(&self, mut f: impl FnMut(usize, &[usize])) {
        let total = self.total_size();
        let mut coords = vec![0; self.dims.len()];
        for linear in 0..total {
            f(linear, &coords);
            for (c, &n) in coords.iter_mut().zip(&self.dims) {
                *c += 1;
                if *c < n {
                    break;
                }
                *c = 0;
            }
        }
    }
}

impl fmt::Display for IndexSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", MultiIndex(self.dims.clone()))
    }
}

pub struct IndexIter<'a> {
    dims: &'a [usize],
    next: Option<Vec<usize>>,
}

impl Iterator for IndexIter<'_> {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let current = self.next.take()?;
        let mut succ = current.clone();
        let mut carried_out = true;
        for (c, &n) in succ.iter_mut().zip(self.dims) {
            *c += 1;
            if *c < n {
                carried_out = false;
                break;
            }
            *c = 0;
        }
        if !carried_out {
            self.next = Some(succ);
        }
        Some(MultiIndex(current))
    }
}

/// Maps the dictionary pair `(f, k)` to its position in the concatenated
/// dictionary list: `k + sum_{f' < f} layout[f']`.
///
/// `layout[f]` is the number of dictionaries owned by factor `f`.
pub fn group_dictionary_index(f: usize, k: usize, layout: &[usize]) -> Result<usize> {
    let Some(&n_f) = layout.get(f) else {
        return Err(Error::Range(format!(
            "factor {f} out of range for {} factors",
            layout.len()
        )));
    };
    if k >= n_f {
        return Err(Error::Range(format!(
            "dictionary {k} out of range for factor {f} with {n_f} dictionaries"
        )));
    }
    Ok(layout[..f].iter().sum::<usize>() + k)
}

/// Inverse of [`group_dictionary_index`].
pub fn split_dictionary_index(grouped: usize, layout: &[usize]) -> Result<(usize, usize)> {
    let mut offset = 0;
    for (f, &n_f) in layout.iter().enumerate() {
        if grouped < offset + n_f {
            return Ok((f, grouped - offset));
        }
        offset += n_f;
    }
    Err(Error::Range(format!(
        "grouped dictionary index {grouped} exceeds total {offset}"
    )))
}
