//! Small dense tensors over three spatial indices.
//!
//! Components are stored first-slot-major: for rank 3, slot `[a][b][c]` sits
//! at `9a + 3b + c`. Slots are 0-based here even though the math is usually
//! written 1-based.

use core::fmt;
use core::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{arg, Result};

pub type Vec3 = [f64; 3];
pub type Mat3 = [[f64; 3]; 3];

pub const X: usize = 0;
pub const Y: usize = 1;
pub const Z: usize = 2;

/// In-plane index values, used wherever a Greek index runs over (x, y).
pub const PLANE: [usize; 2] = [X, Y];

pub const MAX_RANK: usize = 4;

/// `EPS[i][j][k]`, 0-based permutation symbol.
pub const EPS: [[[f64; 3]; 3]; 3] = [
    [[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, -1.0, 0.0]],
    [[0.0, 0.0, -1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]],
    [[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 0.0]],
];

#[inline]
pub fn eps(i: usize, j: usize, k: usize) -> f64 {
    EPS[i][j][k]
}

/// Two-index symbol `ε_αβ = ε_zαβ`.
#[inline]
pub fn eps2(a: usize, b: usize) -> f64 {
    EPS[Z][a][b]
}

#[inline]
pub fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Permutation symbol with 1-based indices `1..=3`, as written in formulas.
pub fn levi_civita(i: usize, j: usize, k: usize) -> Result<f64> {
    for v in [i, j, k] {
        if !(1..=3).contains(&v) {
            return Err(arg(alloc::format!("levi_civita index {v} outside 1..=3")));
        }
    }
    Ok(EPS[i - 1][j - 1][k - 1])
}

pub const fn component_count(rank: usize) -> usize {
    let mut n = 1;
    let mut r = 0;
    while r < rank {
        n *= 3;
        r += 1;
    }
    n
}

/// Flat offset of a multi-index; `idx.len()` is the rank.
#[inline]
pub fn flat_index(idx: &[usize]) -> usize {
    idx.iter().fold(0, |acc, &s| 3 * acc + s)
}

/// Inverse of [`flat_index`] for a given rank.
pub fn multi_index(rank: usize, mut flat: usize) -> [usize; MAX_RANK] {
    let mut out = [0; MAX_RANK];
    for slot in (0..rank).rev() {
        out[slot] = flat % 3;
        flat /= 3;
    }
    out
}

/// Dense tensor of rank 0 to 4 with 3D indices.
#[derive(Clone, Copy, PartialEq)]
pub struct SmallTensor {
    rank: u8,
    data: [f64; 81],
}

impl SmallTensor {
    pub fn zeros(rank: usize) -> Result<Self> {
        if rank > MAX_RANK {
            return Err(arg(alloc::format!("rank {rank} exceeds {MAX_RANK}")));
        }
        Ok(Self {
            rank: rank as u8,
            data: [0.0; 81],
        })
    }

    pub fn from_components(rank: usize, comps: &[f64]) -> Result<Self> {
        let mut t = Self::zeros(rank)?;
        if comps.len() != component_count(rank) {
            return Err(arg(alloc::format!(
                "rank {rank} needs {} components, got {}",
                component_count(rank),
                comps.len()
            )));
        }
        t.data[..comps.len()].copy_from_slice(comps);
        Ok(t)
    }

    pub fn scalar(v: f64) -> Self {
        let mut data = [0.0; 81];
        data[0] = v;
        Self { rank: 0, data }
    }

    pub fn vector(v: Vec3) -> Self {
        let mut data = [0.0; 81];
        data[..3].copy_from_slice(&v);
        Self { rank: 1, data }
    }

    pub fn matrix(m: Mat3) -> Self {
        let mut data = [0.0; 81];
        for i in 0..3 {
            data[3 * i..3 * i + 3].copy_from_slice(&m[i]);
        }
        Self { rank: 2, data }
    }

    pub fn identity() -> Self {
        Self::matrix([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    }

    pub fn rank(&self) -> usize {
        self.rank as usize
    }

    pub fn len(&self) -> usize {
        component_count(self.rank())
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn components(&self) -> &[f64] {
        &self.data[..self.len()]
    }

    pub fn components_mut(&mut self) -> &mut [f64] {
        let n = self.len();
        &mut self.data[..n]
    }

    /// Component at a multi-index of length `rank`.
    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.rank());
        self.data[flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        debug_assert_eq!(idx.len(), self.rank());
        self.data[flat_index(idx)] = v;
    }

    pub fn as_vector(&self) -> Option<Vec3> {
        (self.rank == 1).then(|| [self.data[0], self.data[1], self.data[2]])
    }

    pub fn as_matrix(&self) -> Option<Mat3> {
        (self.rank == 2).then(|| {
            let mut m = [[0.0; 3]; 3];
            for i in 0..3 {
                m[i].copy_from_slice(&self.data[3 * i..3 * i + 3]);
            }
            m
        })
    }

    pub fn is_finite(&self) -> bool {
        self.components().iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.components().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `A_[mn] = A_..m..n.. − A_..n..m..` over slots `m` and `n`.
    pub fn skew_pair(&self, m: usize, n: usize) -> Result<Self> {
        let r = self.rank();
        if r < 2 || m >= r || n >= r || m == n {
            return Err(arg(alloc::format!(
                "skew_pair slots ({m}, {n}) invalid for rank {r}"
            )));
        }
        let mut out = *self;
        for f in 0..self.len() {
            let mut idx = multi_index(r, f);
            idx.swap(m, n);
            out.data[f] = self.data[f] - self.data[flat_index(&idx[..r])];
        }
        Ok(out)
    }

    pub fn sym_part(&self) -> Result<Self> {
        let m = self.require_matrix()?;
        let mut s = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = 0.5 * (m[i][j] + m[j][i]);
            }
        }
        Ok(Self::matrix(s))
    }

    pub fn skew_part(&self) -> Result<Self> {
        let m = self.require_matrix()?;
        let mut s = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                s[i][j] = 0.5 * (m[i][j] - m[j][i]);
            }
        }
        Ok(Self::matrix(s))
    }

    fn require_matrix(&self) -> Result<Mat3> {
        self.as_matrix()
            .ok_or_else(|| arg(alloc::format!("expected rank 2, got rank {}", self.rank)))
    }
}

impl fmt::Debug for SmallTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SmallTensor")
            .field("rank", &self.rank)
            .field("components", &self.components())
            .finish()
    }
}

impl Index<usize> for SmallTensor {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.components()[i]
    }
}

impl IndexMut<usize> for SmallTensor {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.components_mut()[i]
    }
}

impl Add for SmallTensor {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        assert_eq!(self.rank, rhs.rank, "rank mismatch in tensor add");
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a += b;
        }
        self
    }
}

impl Sub for SmallTensor {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        assert_eq!(self.rank, rhs.rank, "rank mismatch in tensor sub");
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a -= b;
        }
        self
    }
}

impl Mul<f64> for SmallTensor {
    type Output = Self;
    fn mul(mut self, s: f64) -> Self {
        for a in self.data.iter_mut() {
            *a *= s;
        }
        self
    }
}

impl Neg for SmallTensor {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

pub fn mat_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

pub fn det3(m: &Mat3) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// The three leading principal minors.
pub fn leading_minors(m: &Mat3) -> [f64; 3] {
    [
        m[0][0],
        m[0][0] * m[1][1] - m[0][1] * m[1][0],
        det3(m),
    ]
}
