use crate::bp::MessageState;
use crate::error::{Error, Result};

/// A vector in R^3 ⊗ R^A: three color components per arc, arc-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcVector(pub Vec<[f64; 3]>);

impl ArcVector {
    pub fn zeros(len: usize) -> ArcVector {
        ArcVector(vec![[0.0; 3]; len])
    }

    pub fn from_state(state: &MessageState) -> ArcVector {
        ArcVector(state.deltas().to_vec())
    }

    /// `e_color ⊗ values`: `values` on one color block, zero elsewhere.
    pub fn from_color(color: usize, values: &[f64]) -> ArcVector {
        ArcVector(
            values
                .iter()
                .map(|&x| {
                    let mut e = [0.0; 3];
                    e[color] = x;
                    e
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn color(&self, c: usize) -> Vec<f64> {
        self.0.iter().map(|x| x[c]).collect()
    }

    pub fn check_len(&self, len: usize) -> Result<()> {
        if self.len() != len {
            return Err(Error::DimensionMismatch {
                expected: len,
                found: self.len(),
            });
        }
        Ok(())
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// Euclidean norm, scaled so tiny entries do not underflow when squared.
    pub fn norm(&self) -> f64 {
        scaled_norm(self.0.iter().flatten().copied())
    }

    pub fn dot(&self, other: &ArcVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a[0] * b[0] + a[1] * b[1] + a[2] * b[2])
            .sum()
    }

    pub fn sub(&self, other: &ArcVector) -> ArcVector {
        ArcVector(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| [a[0] - b[0], a[1] - b[1], a[2] - b[2]])
                .collect(),
        )
    }

    pub fn scale(&self, s: f64) -> ArcVector {
        ArcVector(self.0.iter().map(|a| a.map(|x| x * s)).collect())
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &ArcVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for c in 0..3 {
                a[c] += s * b[c];
            }
        }
    }

    /// Largest per-arc color sum in absolute value.
    pub fn column_sum_residual(&self) -> f64 {
        self.0
            .iter()
            .fold(0.0, |m, a| m.max((a[0] + a[1] + a[2]).abs()))
    }
}

pub fn scaled_norm(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let scale = values.clone().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * values.map(|x| (x / scale).powi(2)).sum::<f64>().sqrt()
}

pub fn norm2(values: &[f64]) -> f64 {
    scaled_norm(values.iter().copied())
}
