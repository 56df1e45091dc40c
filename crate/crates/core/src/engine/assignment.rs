use std::fmt;

use crate::{Error, Result};

/// A map from a subset of the variables `0..n` to {F, T}.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct PartialAssignment {
    values: Vec<Option<bool>>,
}

impl PartialAssignment {
    /// The empty assignment over `n` variables.
    pub fn new(n: usize) -> Self {
        PartialAssignment {
            values: vec![None; n],
        }
    }

    /// Assign every variable from a total assignment.
    pub fn total(values: &[bool]) -> Self {
        PartialAssignment {
            values: values.iter().map(|&b| Some(b)).collect(),
        }
    }

    pub fn from_pairs(n: usize, pairs: impl IntoIterator<Item = (usize, bool)>) -> Result<Self> {
        let mut a = Self::new(n);
        for (v, b) in pairs {
            if v >= n {
                return Err(Error::InvalidParameter(format!(
                    "variable {v} out of range for n = {n}"
                )));
            }
            a.set(v, b);
        }
        Ok(a)
    }

    /// Number of variables of the underlying formula.
    pub fn n(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn get(&self, v: usize) -> Option<bool> {
        self.values[v]
    }

    #[inline]
    pub fn is_assigned(&self, v: usize) -> bool {
        self.values[v].is_some()
    }

    pub fn set(&mut self, v: usize, value: bool) -> Option<bool> {
        self.values[v].replace(value)
    }

    pub fn unset(&mut self, v: usize) -> Option<bool> {
        self.values[v].take()
    }

    /// Size of the domain.
    pub fn len(&self) -> usize {
        self.values.iter().filter(|x| x.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.values.iter().all(Option::is_none)
    }

    /// Assigned variables, ascending.
    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.iter().map(|(v, _)| v)
    }

    /// Unassigned variables, ascending.
    pub fn unassigned(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(|&v| self.values[v].is_none())
    }

    /// `(variable, value)` pairs, ascending by variable.
    pub fn iter(&self) -> impl Iterator<Item = (usize, bool)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(v, x)| x.map(|b| (v, b)))
    }

    /// The restriction to `vars`.
    pub fn restrict(&self, vars: &[usize]) -> Self {
        let mut out = Self::new(self.n());
        for &v in vars {
            if let Some(b) = self.values[v] {
                out.set(v, b);
            }
        }
        out
    }

    /// The union with an assignment on a disjoint domain.
    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.n() != other.n() {
            return Err(Error::InvalidParameter("assignments over different n".into()));
        }
        let mut out = self.clone();
        for (v, b) in other.iter() {
            if out.set(v, b).is_some() {
                return Err(Error::InvalidParameter(format!("variable {v} assigned twice")));
            }
        }
        Ok(out)
    }

    /// The values as a total assignment, if every variable is assigned.
    pub fn to_total(&self) -> Option<Vec<bool>> {
        self.values.iter().copied().collect()
    }

    pub fn as_slice(&self) -> &[Option<bool>] {
        &self.values
    }
}

impl fmt::Debug for PartialAssignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map()
            .entries(self.iter().map(|(v, b)| (v, if b { 'T' } else { 'F' })))
            .finish()
    }
}
