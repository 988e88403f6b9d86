//! Per-unit data model and the recall-bias specification.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One study subject: covariates, binary outcome, observed exposure, and
/// (for simulated data only) the true exposure.
#[derive(Debug, Clone, PartialEq)]
pub struct Unit {
    pub x: Vec<f64>,
    pub y: u8,
    pub z_star: u8,
    /// True exposure; present only when the generating mechanism is known.
    pub z: Option<u8>,
}

impl Unit {
    pub fn new(x: Vec<f64>, y: u8, z_star: u8) -> Self {
        Unit {
            x,
            y,
            z_star,
            z: None,
        }
    }
}

/// An ordered collection of units with named covariate columns.
///
/// Invariants checked on construction: every unit has the same covariate
/// dimension, `y` and `z_star` are 0/1, and whenever the true exposure is
/// recorded, `z_star = 1` implies `z = 1` (exposure can only be hidden,
/// never invented).
#[derive(Debug, Clone)]
pub struct Dataset {
    units: Vec<Unit>,
    covariate_names: Vec<String>,
}

impl Dataset {
    pub fn new(units: Vec<Unit>, covariate_names: Vec<String>) -> Result<Self> {
        let d = covariate_names.len();
        for (i, u) in units.iter().enumerate() {
            if u.x.len() != d {
                return Err(Error::CovariateDimension {
                    index: i,
                    expected: d,
                    found: u.x.len(),
                });
            }
            if u.y > 1 {
                return Err(Error::NonBinary {
                    field: "y",
                    index: i,
                });
            }
            if u.z_star > 1 {
                return Err(Error::NonBinary {
                    field: "z_star",
                    index: i,
                });
            }
            match u.z {
                Some(z) if z > 1 => {
                    return Err(Error::NonBinary {
                        field: "z",
                        index: i,
                    })
                }
                Some(z) if u.z_star == 1 && z == 0 => {
                    return Err(Error::ExposureDirection { index: i })
                }
                _ => {}
            }
        }
        Ok(Dataset {
            units,
            covariate_names,
        })
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    /// Covariate dimension d.
    pub fn dim(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.covariate_names.iter().position(|c| c == name)
    }

    /// Bootstrap resample of the same size, drawn with replacement.
    pub fn resample<R: Rng>(&self, rng: &mut R) -> Dataset {
        let n = self.units.len();
        let units = (0..n)
            .map(|_| self.units[rng.gen_range(0..n)].clone())
            .collect();
        Dataset {
            units,
            covariate_names: self.covariate_names.clone(),
        }
    }

    /// Indices drawn for a bootstrap resample; used when per-unit quantities
    /// (e.g. per-unit etas) must be resampled alongside the units.
    pub fn resample_indices<R: Rng>(&self, rng: &mut R) -> Vec<usize> {
        let n = self.units.len();
        (0..n).map(|_| rng.gen_range(0..n)).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            units: indices.iter().map(|&i| self.units[i].clone()).collect(),
            covariate_names: self.covariate_names.clone(),
        }
    }
}

fn check_eta(value: f64) -> Result<f64> {
    if value.is_finite() && (0.0..1.0).contains(&value) {
        Ok(value)
    } else {
        Err(Error::InvalidEta { value })
    }
}

/// The assumed under-reporting probabilities (eta0, eta1): the chance that a
/// truly exposed unit reports no exposure, by outcome group. Either constant
/// across units or supplied per unit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RecallBiasSpec {
    Constant { eta0: f64, eta1: f64 },
    PerUnit { eta0: Vec<f64>, eta1: Vec<f64> },
}

impl RecallBiasSpec {
    pub fn constant(eta0: f64, eta1: f64) -> Result<Self> {
        Ok(RecallBiasSpec::Constant {
            eta0: check_eta(eta0)?,
            eta1: check_eta(eta1)?,
        })
    }

    pub fn per_unit(eta0: Vec<f64>, eta1: Vec<f64>) -> Result<Self> {
        if eta0.len() != eta1.len() {
            return Err(Error::EtaLength {
                expected: eta0.len(),
                found: eta1.len(),
            });
        }
        for &v in eta0.iter().chain(eta1.iter()) {
            check_eta(v)?;
        }
        Ok(RecallBiasSpec::PerUnit { eta0, eta1 })
    }

    /// No bias at all.
    pub fn none() -> Self {
        RecallBiasSpec::Constant {
            eta0: 0.0,
            eta1: 0.0,
        }
    }

    pub fn as_constant(&self) -> Option<(f64, f64)> {
        match self {
            RecallBiasSpec::Constant { eta0, eta1 } => Some((*eta0, *eta1)),
            RecallBiasSpec::PerUnit { .. } => None,
        }
    }

    /// (eta0, eta1) for unit `i`.
    pub fn etas(&self, i: usize) -> (f64, f64) {
        match self {
            RecallBiasSpec::Constant { eta0, eta1 } => (*eta0, *eta1),
            RecallBiasSpec::PerUnit { eta0, eta1 } => (eta0[i], eta1[i]),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            RecallBiasSpec::Constant { eta0, eta1 } => *eta0 == 0.0 && *eta1 == 0.0,
            RecallBiasSpec::PerUnit { eta0, eta1 } => {
                eta0.iter().all(|&v| v == 0.0) && eta1.iter().all(|&v| v == 0.0)
            }
        }
    }

    /// Check a per-unit spec against the dataset size.
    pub fn validate_len(&self, n: usize) -> Result<()> {
        if let RecallBiasSpec::PerUnit { eta0, .. } = self {
            if eta0.len() != n {
                return Err(Error::EtaLength {
                    expected: n,
                    found: eta0.len(),
                });
            }
        }
        Ok(())
    }

    /// Per-unit spec aligned to a bootstrap resample.
    pub fn reindex(&self, indices: &[usize]) -> RecallBiasSpec {
        match self {
            RecallBiasSpec::Constant { .. } => self.clone(),
            RecallBiasSpec::PerUnit { eta0, eta1 } => RecallBiasSpec::PerUnit {
                eta0: indices.iter().map(|&i| eta0[i]).collect(),
                eta1: indices.iter().map(|&i| eta1[i]).collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dataset_rejects_mixed_dimensions() {
        let units = vec![
            Unit::new(vec![1.0, 2.0], 1, 0),
            Unit::new(vec![1.0], 0, 1),
        ];
        let err = Dataset::new(units, vec!["a".into(), "b".into()]).unwrap_err();
        assert!(matches!(err, Error::CovariateDimension { index: 1, .. }));
    }

    #[test]
    fn dataset_rejects_invented_exposure() {
        let mut u = Unit::new(vec![0.0], 1, 1);
        u.z = Some(0);
        let err = Dataset::new(vec![u], vec!["a".into()]).unwrap_err();
        assert!(matches!(err, Error::ExposureDirection { index: 0 }));
    }

    #[test]
    fn dataset_accepts_hidden_exposure() {
        let mut u = Unit::new(vec![0.0], 1, 0);
        u.z = Some(1);
        assert!(Dataset::new(vec![u], vec!["a".into()]).is_ok());
    }

    #[test]
    fn spec_rejects_eta_of_one() {
        assert!(RecallBiasSpec::constant(0.0, 1.0).is_err());
        assert!(RecallBiasSpec::constant(-0.1, 0.0).is_err());
        assert!(RecallBiasSpec::constant(0.0, 0.999).is_ok());
    }

    #[test]
    fn per_unit_lengths_must_match() {
        assert!(RecallBiasSpec::per_unit(vec![0.1], vec![0.1, 0.2]).is_err());
    }
}
