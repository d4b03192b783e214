use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::Matrix;
use crate::error::{Error, Result};

/// Named parameter matrices in insertion order. Names ending in `.bias` are biases.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParameterStore {
    entries: IndexMap<String, Matrix>,
}

/// Gradients share the layout of the parameters they belong to.
pub type Gradients = ParameterStore;

impl ParameterStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Matrix) -> Result<()> {
        let name = name.into();
        if self.entries.contains_key(&name) {
            return Err(Error::Config(format!("duplicate parameter `{name}`")));
        }
        self.entries.insert(name, value);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Matrix> {
        self.entries
            .get(name)
            .ok_or_else(|| Error::Config(format!("missing parameter `{name}`")))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Matrix> {
        self.entries
            .get_mut(name)
            .ok_or_else(|| Error::Config(format!("missing parameter `{name}`")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.entries.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Matrix)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Matrix)> {
        self.entries.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Total number of scalars.
    pub fn num_scalars(&self) -> usize {
        self.entries.values().map(|m| m.data().len()).sum()
    }

    pub fn is_bias(name: &str) -> bool {
        name.ends_with(".bias")
    }

    /// Same names and shapes, all zeros.
    pub fn zeros_like(&self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(k, v)| (k.clone(), Matrix::zeros(v.rows(), v.cols())))
                .collect(),
        }
    }

    pub fn check_same_layout(&self, other: &ParameterStore) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::Shape("parameter stores differ in size".into()));
        }
        for ((a, ma), (b, mb)) in self.entries.iter().zip(&other.entries) {
            if a != b || ma.shape() != mb.shape() {
                return Err(Error::Shape(format!("parameter `{a}` does not match `{b}`")));
            }
        }
        Ok(())
    }

    /// `self += alpha * other`, entry by entry.
    pub fn axpy(&mut self, alpha: f64, other: &ParameterStore) -> Result<()> {
        self.check_same_layout(other)?;
        for (a, b) in self.entries.values_mut().zip(other.entries.values()) {
            a.axpy(alpha, b)?;
        }
        Ok(())
    }

    pub fn scale(&mut self, s: f64) {
        self.entries.values_mut().for_each(|m| m.scale(s));
    }

    pub fn ensure_finite(&self, what: &str) -> Result<()> {
        for (name, m) in &self.entries {
            if !m.is_finite() {
                return Err(Error::Numerical(format!("non-finite {what} in `{name}`")));
            }
        }
        Ok(())
    }

    /// Largest absolute difference over all entries.
    pub fn max_abs_diff(&self, other: &ParameterStore) -> Result<f64> {
        self.check_same_layout(other)?;
        self.entries
            .values()
            .zip(other.entries.values())
            .try_fold(0.0f64, |acc, (a, b)| Ok(acc.max(a.max_abs_diff(b)?)))
    }
}
