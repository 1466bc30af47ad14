//! Dense multi-way arrays with a uniform mode size.
//!
//! Every tensor of order `k` has `dim^k` entries stored row-major (the last
//! mode varies fastest). Modes are addressed 0-based throughout the API, so
//! the textbook product `A ×_{1,2} B` is written `A.contract(0, &B, 1)`.

use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("mode {mode} out of range for a tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimMismatch { left: usize, right: usize },

    #[error("entry {value} lies outside [0, 1]")]
    NotBoolean { value: f64 },

    #[error("expected {expected} entries, got {got}")]
    BadLength { expected: usize, got: usize },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
}

/// Where an output index of [`DenseTensor::restrict`] comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// Take the index of output mode `usize`.
    Axis(usize),
    /// Pin the source mode to a fixed index.
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    order: usize,
    dim: usize,
    data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(order: usize, dim: usize) -> Self {
        Self::filled(order, dim, 0.0)
    }

    pub fn ones(order: usize, dim: usize) -> Self {
        Self::filled(order, dim, 1.0)
    }

    fn filled(order: usize, dim: usize, value: f64) -> Self {
        Self {
            order,
            dim,
            data: vec![value; dim.pow(order as u32)],
        }
    }

    /// An order-0 tensor. Its `dim` is 1 but it combines with tensors of any
    /// dimension.
    pub fn scalar(value: f64) -> Self {
        Self {
            order: 0,
            dim: 1,
            data: vec![value],
        }
    }

    /// The standard basis vector `e_index` of ℝ^dim.
    pub fn one_hot(index: usize, dim: usize) -> Self {
        let mut t = Self::zeros(1, dim);
        t.data[index] = 1.0;
        t
    }

    pub fn from_vec(order: usize, dim: usize, data: Vec<f64>) -> Result<Self, TensorError> {
        let expected = dim.pow(order as u32);
        if data.len() != expected {
            return Err(TensorError::BadLength {
                expected,
                got: data.len(),
            });
        }
        Ok(Self { order, dim, data })
    }

    pub fn from_fn(order: usize, dim: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        let mut t = Self::zeros(order, dim);
        let mut idx = vec![0usize; order];
        for flat in 0..t.data.len() {
            t.data[flat] = f(&idx);
            increment(&mut idx, dim);
        }
        t
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn is_scalar(&self) -> bool {
        self.order == 0
    }

    /// Value of an order-0 tensor.
    pub fn as_scalar(&self) -> Option<f64> {
        self.is_scalar().then(|| self.data[0])
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.data[self.flat_index(index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let flat = self.flat_index(index);
        self.data[flat] = value;
    }

    fn flat_index(&self, index: &[usize]) -> usize {
        assert_eq!(index.len(), self.order, "index arity must equal tensor order");
        index.iter().fold(0, |acc, &i| {
            debug_assert!(i < self.dim);
            acc * self.dim + i
        })
    }

    /// Mode-(n, m) contracted product: sums mode `n` of `self` against mode
    /// `m` of `other`. The remaining modes of `self` come first, followed by
    /// the remaining modes of `other`.
    pub fn contract(&self, n: usize, other: &Self, m: usize) -> Result<Self, TensorError> {
        if n >= self.order {
            return Err(TensorError::ModeOutOfRange {
                mode: n,
                order: self.order,
            });
        }
        if m >= other.order {
            return Err(TensorError::ModeOutOfRange {
                mode: m,
                order: other.order,
            });
        }
        if self.dim != other.dim {
            return Err(TensorError::DimMismatch {
                left: self.dim,
                right: other.dim,
            });
        }
        let dim = self.dim;
        // self viewed as [a_pre, dim, a_post], other as [b_pre, dim, b_post].
        let a_pre = dim.pow(n as u32);
        let a_post = dim.pow((self.order - n - 1) as u32);
        let b_pre = dim.pow(m as u32);
        let b_post = dim.pow((other.order - m - 1) as u32);

        let mut out = Self::zeros(self.order + other.order - 2, dim);
        let out_block = b_pre * b_post;
        for ip in 0..a_pre {
            for iq in 0..a_post {
                let dst = &mut out.data[(ip * a_post + iq) * out_block..][..out_block];
                for kp in 0..b_pre {
                    let row = &mut dst[kp * b_post..][..b_post];
                    for j in 0..dim {
                        let av = self.data[(ip * dim + j) * a_post + iq];
                        if av == 0.0 {
                            continue;
                        }
                        let src = &other.data[(kp * dim + j) * b_post..][..b_post];
                        for (o, &bv) in row.iter_mut().zip(src) {
                            *o += av * bv;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn outer(&self, other: &Self) -> Result<Self, TensorError> {
        let dim = match (self.order, other.order) {
            (0, _) => other.dim,
            (_, 0) => self.dim,
            _ if self.dim == other.dim => self.dim,
            _ => {
                return Err(TensorError::DimMismatch {
                    left: self.dim,
                    right: other.dim,
                })
            }
        };
        let data = self
            .data
            .iter()
            .flat_map(|&a| other.data.iter().map(move |&b| a * b))
            .collect();
        Ok(Self {
            order: self.order + other.order,
            dim: if self.order + other.order == 0 { 1 } else { dim },
            data,
        })
    }

    /// Componentwise `min(x, 1)`.
    pub fn min1(&self) -> Self {
        self.map(|x| x.min(1.0))
    }

    /// All-ones tensor of the same shape minus `self`.
    pub fn complement(&self) -> Result<Self, TensorError> {
        if let Some(&value) = self.data.iter().find(|&&x| !(0.0..=1.0).contains(&x)) {
            return Err(TensorError::NotBoolean { value });
        }
        Ok(self.map(|x| 1.0 - x))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            order: self.order,
            dim: self.dim,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Moves mode `mode` to the front, keeping the other modes in order.
    /// Equivalent to `I ×_{1,mode+1} self` for the identity matrix `I`.
    pub fn move_mode_to_front(&self, mode: usize) -> Result<Self, TensorError> {
        if mode >= self.order {
            return Err(TensorError::ModeOutOfRange {
                mode,
                order: self.order,
            });
        }
        let mut slots: Vec<Slot> = Vec::with_capacity(self.order);
        for src in 0..self.order {
            slots.push(Slot::Axis(match src {
                s if s == mode => 0,
                s if s < mode => s + 1,
                s => s,
            }));
        }
        self.restrict(&slots, self.order)
    }

    /// Builds `S` of order `out_order` with `S[o] = self[i]`, where source
    /// mode `s` reads `o[a]` for `slots[s] = Axis(a)` or a fixed index for
    /// `Fixed`. Repeating an axis extracts a generalized diagonal.
    pub fn restrict(&self, slots: &[Slot], out_order: usize) -> Result<Self, TensorError> {
        if slots.len() != self.order {
            return Err(TensorError::BadLength {
                expected: self.order,
                got: slots.len(),
            });
        }
        for slot in slots {
            match *slot {
                Slot::Axis(a) if a >= out_order => {
                    return Err(TensorError::ModeOutOfRange {
                        mode: a,
                        order: out_order,
                    })
                }
                Slot::Fixed(i) if i >= self.dim => {
                    return Err(TensorError::IndexOutOfRange {
                        index: i,
                        dim: self.dim,
                    })
                }
                _ => {}
            }
        }
        let mut src = vec![0usize; self.order];
        let out = Self::from_fn(out_order, self.dim, |o| {
            for (s, slot) in src.iter_mut().zip(slots) {
                *s = match *slot {
                    Slot::Axis(a) => o[a],
                    Slot::Fixed(i) => i,
                };
            }
            self.get(&src)
        });
        Ok(out)
    }

    /// True when every entry is within `tol` of 0 or 1.
    pub fn is_boolean(&self, tol: f64) -> bool {
        self.data
            .iter()
            .all(|&x| x.abs() <= tol || (x - 1.0).abs() <= tol)
    }

    /// Nested JSON arrays, one nesting level per mode.
    pub fn to_json(&self) -> Value {
        fn nest(data: &[f64], order: usize, dim: usize) -> Value {
            if order == 0 {
                return Value::from(data[0]);
            }
            let stride = data.len() / dim;
            Value::Array(
                data.chunks(stride)
                    .map(|chunk| nest(chunk, order - 1, dim))
                    .collect(),
            )
        }
        nest(&self.data, self.order, self.dim)
    }
}

/// The order-`arity` existential quantifier tensor: 1 where all indices agree.
pub fn quantifier_tensor(arity: usize, dim: usize) -> DenseTensor {
    assert!(arity >= 1, "quantifier tensor needs arity >= 1");
    match arity {
        1 => DenseTensor::ones(1, dim),
        _ => {
            let mut t = DenseTensor::zeros(arity, dim);
            let step: usize = (0..arity).map(|p| dim.pow(p as u32)).sum();
            for k in 0..dim {
                t.data[k * step] = 1.0;
            }
            t
        }
    }
}

/// Row-major odometer increment.
pub(crate) fn increment(idx: &mut [usize], dim: usize) {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < dim {
            return;
        }
        *slot = 0;
    }
}
