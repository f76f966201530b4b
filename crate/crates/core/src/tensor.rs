//! Dense complex tensors in first-index-fastest order.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::index::{IndexSpace, MultiIndex};

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexTensor {
    space: IndexSpace,
    data: Vec<Complex64>,
}

impl ComplexTensor {
    /// Wraps `data`, rejecting length mismatches and non-finite entries.
    pub fn new(space: IndexSpace, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != space.total_size() {
            return Err(Error::Shape(format!(
                "{} values supplied for a tensor of shape {space}",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("tensor data"));
        }
        Ok(ComplexTensor { space, data })
    }

    pub fn from_dims(dims: &[usize], data: Vec<Complex64>) -> Result<Self> {
        Self::new(IndexSpace::new(dims.to_vec())?, data)
    }

    pub fn zeros(space: IndexSpace) -> Self {
        let data = vec![Complex64::new(0.0, 0.0); space.total_size()];
        ComplexTensor { space, data }
    }

    pub fn from_fn(space: IndexSpace, mut f: impl FnMut(&[usize]) -> Complex64) -> Result<Self> {
        let mut data = Vec::with_capacity(space.total_size());
        space.for_each(|_, coords| data.push(f(coords)));
        Self::new(space, data)
    }

    /// Internal constructor for results of finite arithmetic on finite inputs.
    pub(crate) fn from_parts(space: IndexSpace, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(space.total_size(), data.len());
        ComplexTensor { space, data }
    }

    pub fn space(&self) -> &IndexSpace {
        &self.space
    }

    pub fn dims(&self) -> &[usize] {
        self.space.dims()
    }

    pub fn rank(&self) -> usize {
        self.space.rank()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<Complex64> {
        self.data
    }

    pub fn get(&self, coords: &[usize]) -> Result<Complex64> {
        Ok(self.data[self.space.flatten_coords(coords)?])
    }

    pub fn at(&self, idx: &MultiIndex) -> Result<Complex64> {
        self.get(idx.coords())
    }

    /// Same data viewed under a different shape of equal size.
    pub fn reshape(self, dims: Vec<usize>) -> Result<Self> {
        let space = IndexSpace::new(dims)?;
        if space.total_size() != self.data.len() {
            return Err(Error::Shape(format!(
                "cannot reshape {} into {space}",
                self.space
            )));
        }
        Ok(ComplexTensor {
            space,
            data: self.data,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn conj(&self) -> Self {
        ComplexTensor {
            space: self.space.clone(),
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexTensor {
            space: self.space.clone(),
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    /// Sub-tensor with some coordinates bound.
    ///
    /// `fixed[d] = Some(c)` binds dimension `d` to `c`; the remaining
    /// dimensions keep their original order.
    pub fn slice(&self, fixed: &[Option<usize>]) -> Result<Self> {
        if fixed.len() != self.rank() {
            return Err(Error::Range(format!(
                "slice spec of rank {} for tensor of rank {}",
                fixed.len(),
                self.rank()
            )));
        }
        let dims = self.dims();
        let strides = self.space.strides();
        let mut base = 0;
        let mut free_dims = Vec::new();
        let mut free_strides = Vec::new();
        for (d, fix) in fixed.iter().enumerate() {
            match *fix {
                Some(c) if c >= dims[d] => {
                    return Err(Error::Range(format!(
                        "slice coordinate {c} in dimension {d} exceeds size {}",
                        dims[d]
                    )))
                }
                Some(c) => base += c * strides[d],
                None => {
                    free_dims.push(dims[d]);
                    free_strides.push(strides[d]);
                }
            }
        }
        let out_space = IndexSpace::new(free_dims)?;
        let mut data = Vec::with_capacity(out_space.total_size());
        out_space.for_each(|_, coords| {
            let offset: usize = coords.iter().zip(&free_strides).map(|(c, s)| c * s).sum();
            data.push(self.data[base + offset]);
        });
        Ok(ComplexTensor::from_parts(out_space, data))
    }

    /// Contracts dimension `axis` against `v`, removing that dimension:
    /// `out[.., ..] = sum_j self[.., j, ..] * v[j]`.
    pub fn contract_axis(&self, axis: usize, v: &[Complex64]) -> Result<Self> {
        let dims = self.dims();
        if axis >= dims.len() {
            return Err(Error::Range(format!(
                "axis {axis} out of range for rank {}",
                dims.len()
            )));
        }
        if v.len() != dims[axis] {
            return Err(Error::Shape(format!(
                "vector of length {} contracted with axis of size {}",
                v.len(),
                dims[axis]
            )));
        }
        let inner: usize = dims[..axis].iter().product();
        let outer: usize = dims[axis + 1..].iter().product();
        let n = dims[axis];
        let mut out = vec![Complex64::new(0.0, 0.0); inner * outer];
        for o in 0..outer {
            let dst = &mut out[o * inner..(o + 1) * inner];
            for (j, &w) in v.iter().enumerate() {
                let src = &self.data[(o * n + j) * inner..(o * n + j + 1) * inner];
                for (d, &s) in dst.iter_mut().zip(src) {
                    *d += s * w;
                }
            }
        }
        let mut out_dims = dims.to_vec();
        out_dims.remove(axis);
        Ok(ComplexTensor::from_parts(IndexSpace::new(out_dims)?, out))
    }

    /// Energy `sum |.|^2` of [`Self::contract_axis`] without materializing it.
    pub fn contract_axis_energy(
        &self,
        axis: usize,
        v: &[Complex64],
        scratch: &mut Vec<Complex64>,
    ) -> f64 {
        let dims = self.dims();
        let inner: usize = dims[..axis].iter().product();
        let outer: usize = dims[axis + 1..].iter().product();
        let n = dims[axis];
        scratch.clear();
        scratch.resize(inner, Complex64::new(0.0, 0.0));
        let mut energy = 0.0;
        for o in 0..outer {
            scratch
                .iter_mut()
                .for_each(|z| *z = Complex64::new(0.0, 0.0));
            for (j, &w) in v.iter().enumerate() {
                let src = &self.data[(o * n + j) * inner..(o * n + j + 1) * inner];
                for (d, &s) in scratch.iter_mut().zip(src) {
                    *d += s * w;
                }
            }
            energy += scratch.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        energy
    }

    /// Contracts the leading dimension of `self` with the leading dimension
    /// of `other`: `out[rest, s] = sum_q self[q, rest] * other[q, s]`.
    ///
    /// The result has the trailing dimensions of `self` followed by the
    /// trailing dimensions of `other`.
    pub fn contract_leading(&self, other: &ComplexTensor) -> Result<Self> {
        let (Some(&nq), Some(&nq2)) = (self.dims().first(), other.dims().first()) else {
            return Err(Error::Shape("contraction of a rank-0 tensor".into()));
        };
        if nq != nq2 {
            return Err(Error::Shape(format!(
                "leading dimensions differ: {} vs {}",
                self.space, other.space
            )));
        }
        let rest = self.len() / nq;
        let cols = other.len() / nq;
        let mut out = vec![Complex64::new(0.0, 0.0); rest * cols];
        for s in 0..cols {
            let b = &other.data[s * nq..(s + 1) * nq];
            let dst = &mut out[s * rest..(s + 1) * rest];
            for (r, d) in dst.iter_mut().enumerate() {
                let a = &self.data[r * nq..(r + 1) * nq];
                *d = a.iter().zip(b).map(|(x, y)| x * y).sum();
            }
        }
        let mut dims = self.dims()[1..].to_vec();
        dims.extend_from_slice(&other.dims()[1..]);
        Ok(ComplexTensor::from_parts(IndexSpace::new(dims)?, out))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random(dims: &[usize], seed: u64) -> ComplexTensor {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let space = IndexSpace::new(dims.to_vec()).unwrap();
        ComplexTensor::from_fn(space, |_| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
        .unwrap()
    }

    #[test]
    fn construction_checks() {
        let s = IndexSpace::new(vec![2]).unwrap();
        assert!(ComplexTensor::new(s.clone(), vec![c(1.0, 0.0)]).is_err());
        assert!(matches!(
            ComplexTensor::new(s.clone(), vec![c(1.0, 0.0), c(f64::NAN, 0.0)]),
            Err(Error::NonFinite(_))
        ));
        assert!(ComplexTensor::new(s, vec![c(1.0, 0.0), c(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn slice_identity_row() {
        let eye = ComplexTensor::from_dims(
            &[2, 2],
            vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        )
        .unwrap();
        let row = eye.slice(&[Some(0), None]).unwrap();
        assert_eq!(row.dims(), &[2]);
        assert_eq!(row.data(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(eye.slice(&[None, None]).unwrap(), eye);
        assert!(eye.slice(&[Some(2), None]).is_err());
    }

    #[test]
    fn slice_matches_loop_extraction() {
        let t = random(&[2, 3, 4], 7);
        let s = t.slice(&[Some(1), None, None]).unwrap();
        assert_eq!(s.dims(), &[3, 4]);
        for b in 0..3 {
            for d in 0..4 {
                assert_eq!(s.get(&[b, d]).unwrap(), t.get(&[1, b, d]).unwrap());
            }
        }
        let s2 = t.slice(&[None, Some(2), Some(3)]).unwrap();
        for a in 0..2 {
            assert_eq!(s2.get(&[a]).unwrap(), t.get(&[a, 2, 3]).unwrap());
        }
    }

    #[test]
    fn contract_axis_matches_loops() {
        let t = random(&[3, 4, 2], 11);
        let v: Vec<Complex64> = (0..4).map(|j| c(j as f64 - 1.5, 0.25 * j as f64)).collect();
        let out = t.contract_axis(1, &v).unwrap();
        assert_eq!(out.dims(), &[3, 2]);
        let mut scratch = Vec::new();
        let mut energy = 0.0;
        for a in 0..3 {
            for b in 0..2 {
                let expect: Complex64 = (0..4).map(|j| t.get(&[a, j, b]).unwrap() * v[j]).sum();
                assert!((out.get(&[a, b]).unwrap() - expect).norm() < 1e-14);
                energy += expect.norm_sqr();
            }
        }
        assert!((t.contract_axis_energy(1, &v, &mut scratch) - energy).abs() < 1e-12);
        assert!(t.contract_axis(3, &v).is_err());
        assert!(t.contract_axis(0, &v).is_err());
    }

    #[test]
    fn contract_leading_matches_loops() {
        let a = random(&[3, 2, 2], 1);
        let b = random(&[3, 4], 2);
        let out = a.contract_leading(&b).unwrap();
        assert_eq!(out.dims(), &[2, 2, 4]);
        for x in 0..2 {
            for y in 0..2 {
                for s in 0..4 {
                    let expect: Complex64 = (0..3)
                        .map(|q| a.get(&[q, x, y]).unwrap() * b.get(&[q, s]).unwrap())
                        .sum();
                    assert!((out.get(&[x, y, s]).unwrap() - expect).norm() < 1e-14);
                }
            }
        }
        assert!(a.contract_leading(&random(&[2, 2], 3)).is_err());
    }
}
