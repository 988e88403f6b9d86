//! Joint cell probabilities of (outcome, exposure) and the adjustment
//! identities that undo differential under-reporting.
//!
//! For a fixed covariate level, `p_yz = Pr(Y = y, Z = z)` describes the true
//! joint distribution and `p*_yz = Pr(Y = y, Z* = z)` the observed one. Under
//! the under-reporting model the two are linked cell by cell:
//!
//! ```text
//! p11 = p*11 / (1 - eta1)        p10 = p*10 - eta1/(1 - eta1) * p*11
//! p01 = p*01 / (1 - eta0)        p00 = p*00 - eta0/(1 - eta0) * p*01
//! ```
//!
//! [`adjust_cells`] applies these identities, [`misclassify_cells`] is the
//! exact forward map, [`joint_observed_prob`] gives the observed-data cell
//! probabilities as a function of outcome models and the propensity (the MLE
//! building block), and [`cate_point`] is the point-identified conditional
//! treatment effect for known (eta0, eta1).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SIMPLEX_TOL: f64 = 1e-9;

/// Joint distribution of a binary outcome and binary exposure at one
/// covariate level: `(p11, p10, p01, p00)` indexed as `p{y}{z}`.
///
/// Values form a probability simplex; construction renormalizes deviations
/// up to 1e-9 and rejects anything larger.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellProbabilities {
    pub p11: f64,
    pub p10: f64,
    pub p01: f64,
    pub p00: f64,
}

impl CellProbabilities {
    pub fn new(p11: f64, p10: f64, p01: f64, p00: f64) -> Result<Self> {
        let cells = [p11, p10, p01, p00];
        let sum: f64 = cells.iter().sum();
        let min = cells.iter().cloned().fold(f64::INFINITY, f64::min);
        if !sum.is_finite() || (sum - 1.0).abs() > SIMPLEX_TOL || min < -SIMPLEX_TOL {
            return Err(Error::InvalidSimplex { sum, min });
        }
        let clamped: Vec<f64> = cells.iter().map(|&c| c.max(0.0)).collect();
        let total: f64 = clamped.iter().sum();
        Ok(CellProbabilities {
            p11: clamped[0] / total,
            p10: clamped[1] / total,
            p01: clamped[2] / total,
            p00: clamped[3] / total,
        })
    }

    /// Pr(Y = 1 | Z = 1) and Pr(Y = 1 | Z = 0) derived from the joint cells.
    pub fn conditional_outcome_probs(&self) -> Result<(f64, f64)> {
        let exposed = self.p11 + self.p01;
        let unexposed = self.p10 + self.p00;
        if exposed <= 0.0 {
            return Err(Error::DegenerateMargin { arm: 1 });
        }
        if unexposed <= 0.0 {
            return Err(Error::DegenerateMargin { arm: 0 });
        }
        Ok((self.p11 / exposed, self.p10 / unexposed))
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.p11, self.p10, self.p01, self.p00]
    }
}

/// Observed 2x2 table of (Y, Z*) counts for one stratum:
/// `a` = (Y=1, Z*=1), `b` = (Y=0, Z*=1), `c` = (Y=1, Z*=0), `d` = (Y=0, Z*=0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub a: u64,
    pub b: u64,
    pub c: u64,
    pub d: u64,
}

impl ContingencyTable {
    pub fn new(a: u64, b: u64, c: u64, d: u64) -> Self {
        ContingencyTable { a, b, c, d }
    }

    pub fn n(&self) -> u64 {
        self.a + self.b + self.c + self.d
    }

    /// Empirical cell frequencies (observed-exposure scale).
    pub fn frequencies(&self) -> Result<CellProbabilities> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidSimplex { sum: 0.0, min: 0.0 });
        }
        let n = n as f64;
        CellProbabilities::new(
            self.a as f64 / n,
            self.c as f64 / n,
            self.b as f64 / n,
            self.d as f64 / n,
        )
    }
}

/// Constant etas extracted from a spec, or an error: cell-level algebra is
/// only defined for constant bias probabilities.
fn constant_etas(spec: &crate::model::RecallBiasSpec) -> Result<(f64, f64)> {
    spec.as_constant().ok_or(Error::ConstantEtaRequired)
}

/// Recover the true joint cells from observed ones for known (eta0, eta1).
///
/// Fails with `InadmissibleEtas` when the assumed etas would make an adjusted
/// cell negative, i.e. they are too large for the observed table; sensitivity
/// sweeps use this to mark infeasible grid points.
pub fn adjust_cells(
    observed: &CellProbabilities,
    spec: &crate::model::RecallBiasSpec,
) -> Result<CellProbabilities> {
    let (eta0, eta1) = constant_etas(spec)?;
    let p11 = observed.p11 / (1.0 - eta1);
    let p10 = observed.p10 - eta1 / (1.0 - eta1) * observed.p11;
    let p01 = observed.p01 / (1.0 - eta0);
    let p00 = observed.p00 - eta0 / (1.0 - eta0) * observed.p01;
    if p10 < 0.0 {
        return Err(Error::InadmissibleEtas {
            cell: "p10",
            value: p10,
        });
    }
    if p00 < 0.0 {
        return Err(Error::InadmissibleEtas {
            cell: "p00",
            value: p00,
        });
    }
    CellProbabilities::new(p11, p10, p01, p00)
}

/// Forward misclassification map: what the observed cells look like when the
/// truth is `truth` and exposure is hidden with probabilities (eta0, eta1).
/// Exact inverse of [`adjust_cells`].
pub fn misclassify_cells(
    truth: &CellProbabilities,
    spec: &crate::model::RecallBiasSpec,
) -> Result<CellProbabilities> {
    let (eta0, eta1) = constant_etas(spec)?;
    CellProbabilities::new(
        (1.0 - eta1) * truth.p11,
        truth.p10 + eta1 * truth.p11,
        (1.0 - eta0) * truth.p01,
        truth.p00 + eta0 * truth.p01,
    )
}

/// Observed-data cell probability Pr(Y = y, Z* = z | x) expressed through the
/// outcome models `m0 = Pr(Y=1|Z=0,x)`, `m1 = Pr(Y=1|Z=1,x)` and the true
/// propensity `e = Pr(Z=1|x)`, marginalizing over the hidden true exposure.
pub fn joint_observed_prob(
    m0: f64,
    m1: f64,
    e: f64,
    spec: &crate::model::RecallBiasSpec,
    y: u8,
    z_star: u8,
) -> Result<f64> {
    let (eta0, eta1) = constant_etas(spec)?;
    Ok(joint_observed_prob_raw(m0, m1, e, eta0, eta1, y, z_star))
}

/// Same as [`joint_observed_prob`] but taking bare etas; hot path for the MLE.
#[inline]
pub(crate) fn joint_observed_prob_raw(
    m0: f64,
    m1: f64,
    e: f64,
    eta0: f64,
    eta1: f64,
    y: u8,
    z_star: u8,
) -> f64 {
    match (y, z_star) {
        (1, 1) => m1 * e * (1.0 - eta1),
        (0, 1) => (1.0 - m1) * e * (1.0 - eta0),
        (1, 0) => m1 * e * eta1 + m0 * (1.0 - e),
        (0, 0) => (1.0 - m1) * e * eta0 + (1.0 - m0) * (1.0 - e),
        _ => panic!("y and z_star must be 0 or 1"),
    }
}

/// Point-identified conditional treatment effect
/// `tau(x) = Pr(Y=1|Z=1,x) - Pr(Y=1|Z=0,x)` for known (eta0, eta1), computed
/// from the observed cells through the adjustment identities.
pub fn cate_point(
    observed: &CellProbabilities,
    spec: &crate::model::RecallBiasSpec,
) -> Result<f64> {
    let (eta0, eta1) = constant_etas(spec)?;
    let p11 = observed.p11 / (1.0 - eta1);
    let p10 = observed.p10 - eta1 / (1.0 - eta1) * observed.p11;
    let p01 = observed.p01 / (1.0 - eta0);
    let p00 = observed.p00 - eta0 / (1.0 - eta0) * observed.p01;
    if p10 < 0.0 {
        return Err(Error::InadmissibleEtas {
            cell: "p10",
            value: p10,
        });
    }
    if p00 < 0.0 {
        return Err(Error::InadmissibleEtas {
            cell: "p00",
            value: p00,
        });
    }
    let exposed = p11 + p01;
    let unexposed = p10 + p00;
    if exposed <= 0.0 {
        return Err(Error::DegenerateMargin { arm: 1 });
    }
    if unexposed <= 0.0 {
        return Err(Error::DegenerateMargin { arm: 0 });
    }
    Ok(p11 / exposed - p10 / unexposed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RecallBiasSpec;

    fn cells(p11: f64, p10: f64, p01: f64, p00: f64) -> CellProbabilities {
        CellProbabilities::new(p11, p10, p01, p00).unwrap()
    }

    #[test]
    fn adjust_hand_example() {
        let spec = RecallBiasSpec::constant(0.0, 0.5).unwrap();
        let adj = adjust_cells(&cells(0.2, 0.3, 0.2, 0.3), &spec).unwrap();
        assert!((adj.p11 - 0.4).abs() < 1e-12);
        assert!((adj.p10 - 0.1).abs() < 1e-12);
        assert!((adj.p01 - 0.2).abs() < 1e-12);
        assert!((adj.p00 - 0.3).abs() < 1e-12);
    }

    #[test]
    fn adjust_identity_at_zero() {
        let spec = RecallBiasSpec::none();
        let obs = cells(0.1, 0.2, 0.3, 0.4);
        assert_eq!(adjust_cells(&obs, &spec).unwrap(), obs);
    }

    #[test]
    fn adjust_rejects_incompatible_etas() {
        let spec = RecallBiasSpec::constant(0.0, 0.5).unwrap();
        // p10 = 0.1 - 0.2 < 0
        let err = adjust_cells(&cells(0.2, 0.1, 0.2, 0.5), &spec).unwrap_err();
        assert!(matches!(err, Error::InadmissibleEtas { cell: "p10", .. }));
    }

    #[test]
    fn misclassify_hand_examples() {
        let spec = RecallBiasSpec::constant(0.0, 0.5).unwrap();
        let obs = misclassify_cells(&cells(0.4, 0.1, 0.2, 0.3), &spec).unwrap();
        let want = cells(0.2, 0.3, 0.2, 0.3);
        for (got, exp) in obs.as_array().iter().zip(want.as_array()) {
            assert!((got - exp).abs() < 1e-12);
        }

        let spec = RecallBiasSpec::constant(0.2, 0.2).unwrap();
        let obs = misclassify_cells(&cells(0.25, 0.25, 0.25, 0.25), &spec).unwrap();
        assert!((obs.p11 - 0.20).abs() < 1e-12);
        assert!((obs.p10 - 0.30).abs() < 1e-12);
        assert!((obs.p01 - 0.20).abs() < 1e-12);
        assert!((obs.p00 - 0.30).abs() < 1e-12);
    }

    #[test]
    fn joint_prob_hand_examples() {
        let none = RecallBiasSpec::none();
        assert!((joint_observed_prob(0.5, 0.5, 0.5, &none, 1, 1).unwrap() - 0.25).abs() < 1e-15);

        let spec = RecallBiasSpec::constant(0.0, 0.5).unwrap();
        let p = joint_observed_prob(0.5, 0.5, 0.5, &spec, 1, 0).unwrap();
        assert!((p - 0.375).abs() < 1e-15);
    }

    #[test]
    fn joint_prob_cells_sum_to_one() {
        let spec = RecallBiasSpec::constant(0.1, 0.2).unwrap();
        let total: f64 = [(1, 1), (0, 1), (1, 0), (0, 0)]
            .iter()
            .map(|&(y, z)| joint_observed_prob(0.3, 0.6, 0.4, &spec, y, z).unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cate_hand_examples() {
        let none = RecallBiasSpec::none();
        assert_eq!(cate_point(&cells(0.25, 0.25, 0.25, 0.25), &none).unwrap(), 0.0);

        let spec = RecallBiasSpec::constant(0.0, 0.5).unwrap();
        let tau = cate_point(&cells(0.2, 0.3, 0.2, 0.3), &spec).unwrap();
        assert!((tau - 5.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn cate_degenerate_margin() {
        let none = RecallBiasSpec::none();
        let err = cate_point(&cells(0.0, 0.6, 0.0, 0.4), &none).unwrap_err();
        assert!(matches!(err, Error::DegenerateMargin { arm: 1 }));
    }

    #[test]
    fn simplex_validation() {
        assert!(CellProbabilities::new(0.3, 0.3, 0.3, 0.3).is_err());
        assert!(CellProbabilities::new(0.5, 0.6, -0.2, 0.1).is_err());
        // within tolerance: renormalized
        let c = CellProbabilities::new(0.25, 0.25, 0.25, 0.25 + 5e-10).unwrap();
        let sum: f64 = c.as_array().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn table_frequencies_round() {
        let t = ContingencyTable::new(20, 20, 30, 30);
        let f = t.frequencies().unwrap();
        assert_eq!(f, cells(0.2, 0.3, 0.2, 0.3));
    }
}
