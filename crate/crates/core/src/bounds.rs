//! Partial identification of conditional outcome probabilities and the
//! treatment effect when only an upper bound `delta` on the under-reporting
//! probabilities is assumed.
//!
//! Three assumption regions are supported for `(eta0, eta1)`:
//! the symmetric box `0 <= eta0, eta1 <= delta`, the ordered region
//! `eta0 <= eta1 <= delta` (outcome cases under-report at least as often),
//! and its mirror `eta1 <= eta0 <= delta`.
//!
//! Probability bounds are evaluated from the closed forms and then
//! intersected with [0, 1]; the raw expressions can leave the unit interval
//! exactly when the extreme eta corner is inadmissible for the observed
//! table, where the estimand itself is still a probability. The ATE interval
//! is composed as [L(p1|1) - U(p1|0), U(p1|1) - L(p1|0)].

use serde::{Deserialize, Serialize};

use crate::cells::{CellProbabilities, ContingencyTable};
use crate::error::{Error, Result};

/// Which (eta0, eta1) region a bound was computed under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundAssumption {
    /// 0 <= eta0, eta1 <= delta
    SymmetricBox,
    /// 0 <= eta0 <= eta1 <= delta
    Eta0LeEta1,
    /// 0 <= eta1 <= eta0 <= delta
    Eta1LeEta0,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalBound {
    pub lower: f64,
    pub upper: f64,
    pub assumption: BoundAssumption,
    pub delta: f64,
}

impl IntervalBound {
    fn probability(lower: f64, upper: f64, assumption: BoundAssumption, delta: f64) -> Self {
        IntervalBound {
            lower: lower.clamp(0.0, 1.0),
            upper: upper.clamp(0.0, 1.0),
            assumption,
            delta,
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        value >= self.lower - 1e-12 && value <= self.upper + 1e-12
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Whether `self` is contained in `other` (up to rounding slack).
    pub fn within(&self, other: &IntervalBound) -> bool {
        self.lower >= other.lower - 1e-12 && self.upper <= other.upper + 1e-12
    }
}

/// Bounds on Pr(Y=1|Z=1), Pr(Y=1|Z=0), and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CateBounds {
    pub p1_given_1: IntervalBound,
    pub p1_given_0: IntervalBound,
    pub ate: IntervalBound,
}

fn check_delta(delta: f64) -> Result<()> {
    if delta.is_finite() && (0.0..1.0).contains(&delta) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "delta must lie in [0, 1), got {delta}"
        )))
    }
}

/// Largest delta keeping every listed denominator `base - delta/(1-delta) * scale`
/// strictly positive.
fn max_admissible_delta(constraints: &[(f64, f64)]) -> f64 {
    let mut max = 1.0_f64;
    for &(base, scale) in constraints {
        if scale > 0.0 {
            if base <= 0.0 {
                return 0.0;
            }
            let s = base / scale;
            max = max.min(s / (1.0 + s));
        }
    }
    max
}

struct Pieces {
    p11: f64,
    p10: f64,
    p01: f64,
    p00: f64,
    /// delta / (1 - delta)
    c: f64,
}

impl Pieces {
    fn new(observed: &CellProbabilities, delta: f64) -> Self {
        Pieces {
            p11: observed.p11,
            p10: observed.p10,
            p01: observed.p01,
            p00: observed.p00,
            c: delta / (1.0 - delta),
        }
    }

    fn exposed_margin(&self) -> f64 {
        self.p11 + self.p01
    }

    fn control_margin(&self) -> f64 {
        self.p10 + self.p00
    }

    /// Observed conditional probabilities p*_{1|1}, p*_{1|0}.
    fn starred_conditionals(&self) -> (f64, f64) {
        (
            self.p11 / self.exposed_margin(),
            self.p10 / self.control_margin(),
        )
    }
}

fn compose(
    p1: (f64, f64),
    p0: (f64, f64),
    assumption: BoundAssumption,
    delta: f64,
) -> CateBounds {
    let p1_given_1 = IntervalBound::probability(p1.0, p1.1, assumption, delta);
    let p1_given_0 = IntervalBound::probability(p0.0, p0.1, assumption, delta);
    let ate = IntervalBound {
        lower: p1_given_1.lower - p1_given_0.upper,
        upper: p1_given_1.upper - p1_given_0.lower,
        assumption,
        delta,
    };
    CateBounds {
        p1_given_1,
        p1_given_0,
        ate,
    }
}

/// Bounds under the symmetric box `0 <= eta0, eta1 <= delta`.
pub fn prop1_bounds(observed: &CellProbabilities, delta: f64) -> Result<CateBounds> {
    check_delta(delta)?;
    let p = Pieces::new(observed, delta);
    let constraints = [(p.control_margin(), p.p11), (p.control_margin(), p.p01)];
    if p.exposed_margin() <= 0.0 || p.control_margin() <= 0.0 {
        return Err(Error::DegenerateBound {
            delta,
            max_delta: 0.0,
        });
    }
    let den_lower0 = p.p10 + p.p00 - p.c * p.p11;
    let den_upper0 = p.p10 + p.p00 - p.c * p.p01;
    if den_lower0 <= 0.0 || den_upper0 <= 0.0 {
        return Err(Error::DegenerateBound {
            delta,
            max_delta: max_admissible_delta(&constraints),
        });
    }
    let p1 = (
        p.p11 / (p.p11 + p.p01 / (1.0 - delta)),
        p.p11 / (p.p11 + (1.0 - delta) * p.p01),
    );
    let p0 = ((p.p10 - p.c * p.p11) / den_lower0, p.p10 / den_upper0);
    Ok(compose(p1, p0, BoundAssumption::SymmetricBox, delta))
}

/// Bounds under `0 <= eta0 <= eta1 <= delta`.
pub fn prop2a_bounds(observed: &CellProbabilities, delta: f64) -> Result<CateBounds> {
    check_delta(delta)?;
    let p = Pieces::new(observed, delta);
    if p.exposed_margin() <= 0.0 || p.control_margin() <= 0.0 {
        return Err(Error::DegenerateBound {
            delta,
            max_delta: 0.0,
        });
    }
    let den_lower0 = p.p10 + p.p00 - p.c * p.p11;
    let den_diag = p.p10 + p.p00 - p.c * (p.p01 + p.p11);
    if den_lower0 <= 0.0 || den_diag <= 0.0 {
        return Err(Error::DegenerateBound {
            delta,
            max_delta: max_admissible_delta(&[
                (p.control_margin(), p.p11),
                (p.control_margin(), p.p01 + p.p11),
            ]),
        });
    }
    let (star_1, star_0) = p.starred_conditionals();
    let p1 = (star_1, p.p11 / (p.p11 + (1.0 - delta) * p.p01));
    let diag = (p.p10 - p.c * p.p11) / den_diag;
    let p0 = ((p.p10 - p.c * p.p11) / den_lower0, star_0.max(diag));
    Ok(compose(p1, p0, BoundAssumption::Eta0LeEta1, delta))
}

/// Bounds under `0 <= eta1 <= eta0 <= delta`.
pub fn prop2b_bounds(observed: &CellProbabilities, delta: f64) -> Result<CateBounds> {
    check_delta(delta)?;
    let p = Pieces::new(observed, delta);
    if p.exposed_margin() <= 0.0 || p.control_margin() <= 0.0 {
        return Err(Error::DegenerateBound {
            delta,
            max_delta: 0.0,
        });
    }
    let den_upper0 = p.p10 + p.p00 - p.c * p.p01;
    let den_diag = p.p10 + p.p00 - p.c * (p.p01 + p.p11);
    if den_upper0 <= 0.0 || den_diag <= 0.0 {
        return Err(Error::DegenerateBound {
            delta,
            max_delta: max_admissible_delta(&[
                (p.control_margin(), p.p01),
                (p.control_margin(), p.p01 + p.p11),
            ]),
        });
    }
    let (star_1, star_0) = p.starred_conditionals();
    let p1 = (p.p11 / (p.p11 + p.p01 / (1.0 - delta)), star_1);
    let diag = (p.p10 - p.c * p.p11) / den_diag;
    let p0 = (star_0.min(diag), p.p10 / den_upper0);
    Ok(compose(p1, p0, BoundAssumption::Eta1LeEta0, delta))
}

/// Dispatch on the assumption region.
pub fn bounds_for(
    assumption: BoundAssumption,
    observed: &CellProbabilities,
    delta: f64,
) -> Result<CateBounds> {
    match assumption {
        BoundAssumption::SymmetricBox => prop1_bounds(observed, delta),
        BoundAssumption::Eta0LeEta1 => prop2a_bounds(observed, delta),
        BoundAssumption::Eta1LeEta0 => prop2b_bounds(observed, delta),
    }
}

/// Count-form bound for a stratum table under the symmetric box assumption:
///
/// ```text
/// a/(a + b/(1-delta)) - c/(c + d - b*delta/(1-delta))
///   <= tau_i <=
/// a/(a + b*(1-delta)) - (c - a*delta/(1-delta))/(c + d - a*delta/(1-delta))
/// ```
pub fn table_bounds(table: &ContingencyTable, delta: f64) -> Result<IntervalBound> {
    check_delta(delta)?;
    let (a, b, c, d) = (
        table.a as f64,
        table.b as f64,
        table.c as f64,
        table.d as f64,
    );
    let r = delta / (1.0 - delta);
    if a + b <= 0.0 || c + d <= 0.0 {
        return Err(Error::DegenerateBound {
            delta,
            max_delta: 0.0,
        });
    }
    let den_lower = c + d - b * r;
    let den_upper = c + d - a * r;
    if den_lower <= 0.0 || den_upper <= 0.0 {
        return Err(Error::DegenerateBound {
            delta,
            max_delta: max_admissible_delta(&[(c + d, a), (c + d, b)]),
        });
    }
    let lower_p1 = (a / (a + b / (1.0 - delta))).clamp(0.0, 1.0);
    let upper_p1 = (a / (a + b * (1.0 - delta))).clamp(0.0, 1.0);
    let lower_p0 = (((c - a * r) / den_upper) as f64).clamp(0.0, 1.0);
    let upper_p0 = ((c / den_lower) as f64).clamp(0.0, 1.0);
    Ok(IntervalBound {
        lower: lower_p1 - upper_p0,
        upper: upper_p1 - lower_p0,
        assumption: BoundAssumption::SymmetricBox,
        delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cells::{adjust_cells, cate_point};
    use crate::model::RecallBiasSpec;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cellp(p11: f64, p10: f64, p01: f64, p00: f64) -> CellProbabilities {
        CellProbabilities::new(p11, p10, p01, p00).unwrap()
    }

    fn random_cells(rng: &mut ChaCha8Rng) -> CellProbabilities {
        // exponential spacings give a uniform draw on the simplex
        let raw: Vec<f64> = (0..4).map(|_| -rng.gen::<f64>().ln()).collect();
        let sum: f64 = raw.iter().sum();
        cellp(raw[0] / sum, raw[1] / sum, raw[2] / sum, raw[3] / sum)
    }

    #[test]
    fn prop1_hand_example() {
        let b = prop1_bounds(&cellp(0.2, 0.3, 0.2, 0.3), 0.5).unwrap();
        assert!((b.p1_given_1.lower - 1.0 / 3.0).abs() < 1e-12);
        assert!((b.p1_given_1.upper - 2.0 / 3.0).abs() < 1e-12);
        assert!((b.p1_given_0.lower - 0.25).abs() < 1e-12);
        assert!((b.p1_given_0.upper - 0.75).abs() < 1e-12);
        assert!((b.ate.lower + 5.0 / 12.0).abs() < 1e-12);
        assert!((b.ate.upper - 5.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn delta_zero_collapses_to_observed_conditionals() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let obs = random_cells(&mut rng);
            let (s1, s0) = obs.conditional_outcome_probs().unwrap();
            for f in [prop1_bounds, prop2a_bounds, prop2b_bounds] {
                let b = f(&obs, 0.0).unwrap();
                assert!((b.p1_given_1.lower - s1).abs() < 1e-12);
                assert!((b.p1_given_1.upper - s1).abs() < 1e-12);
                assert!((b.p1_given_0.lower - s0).abs() < 1e-12);
                assert!((b.p1_given_0.upper - s0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn prop2a_lower_is_starred_conditional() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..50 {
            let obs = random_cells(&mut rng);
            if let Ok(b) = prop2a_bounds(&obs, 0.3) {
                let (s1, _) = obs.conditional_outcome_probs().unwrap();
                assert!((b.p1_given_1.lower - s1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn prop2b_upper_is_starred_conditional() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let obs = random_cells(&mut rng);
            if let Ok(b) = prop2b_bounds(&obs, 0.3) {
                let (s1, _) = obs.conditional_outcome_probs().unwrap();
                assert!((b.p1_given_1.upper - s1).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn restricted_regions_nest_inside_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut checked = 0;
        for _ in 0..1000 {
            let obs = random_cells(&mut rng);
            for delta in [0.1, 0.3, 0.5] {
                let (b1, b2a, b2b) = match (
                    prop1_bounds(&obs, delta),
                    prop2a_bounds(&obs, delta),
                    prop2b_bounds(&obs, delta),
                ) {
                    (Ok(a), Ok(b), Ok(c)) => (a, b, c),
                    _ => continue,
                };
                checked += 1;
                for (sub, sup) in [(&b2a, &b1), (&b2b, &b1)] {
                    assert!(sub.p1_given_1.within(&sup.p1_given_1));
                    assert!(sub.p1_given_0.within(&sup.p1_given_0));
                    assert!(sub.ate.within(&sup.ate));
                }
            }
        }
        assert!(checked > 500, "too few feasible draws: {checked}");
    }

    #[test]
    fn point_identification_stays_inside_box_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..200 {
            let obs = random_cells(&mut rng);
            let delta = 0.3;
            let b = match prop1_bounds(&obs, delta) {
                Ok(b) => b,
                Err(_) => continue,
            };
            for i in 0..=6 {
                for j in 0..=6 {
                    let eta0 = delta * i as f64 / 6.0;
                    let eta1 = delta * j as f64 / 6.0;
                    let spec = RecallBiasSpec::constant(eta0, eta1).unwrap();
                    if let Ok(tau) = cate_point(&obs, &spec) {
                        assert!(
                            b.ate.contains(tau),
                            "tau {tau} outside [{}, {}]",
                            b.ate.lower,
                            b.ate.upper
                        );
                        let adj = adjust_cells(&obs, &spec).unwrap();
                        let (p1, p0) = adj.conditional_outcome_probs().unwrap();
                        assert!(b.p1_given_1.contains(p1));
                        assert!(b.p1_given_0.contains(p0));
                    }
                }
            }
        }
    }

    #[test]
    fn table_bound_hand_example() {
        let t = ContingencyTable::new(20, 20, 30, 30);
        let zero = table_bounds(&t, 0.0).unwrap();
        assert!(zero.lower.abs() < 1e-12 && zero.upper.abs() < 1e-12);

        let b = table_bounds(&t, 0.5).unwrap();
        assert!((b.lower + 5.0 / 12.0).abs() < 1e-12);
        assert!((b.upper - 5.0 / 12.0).abs() < 1e-12);
    }

    #[test]
    fn table_bound_matches_prop1_on_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..300 {
            let t = ContingencyTable::new(
                rng.gen_range(0..60),
                rng.gen_range(0..60),
                rng.gen_range(0..60),
                rng.gen_range(0..60),
            );
            if t.a + t.b == 0 || t.c + t.d == 0 {
                continue;
            }
            let delta = rng.gen_range(0.0..0.6);
            let via_counts = table_bounds(&t, delta);
            let via_probs = prop1_bounds(&t.frequencies().unwrap(), delta);
            match (via_counts, via_probs) {
                (Ok(tb), Ok(pb)) => {
                    assert!((tb.lower - pb.ate.lower).abs() < 1e-12);
                    assert!((tb.upper - pb.ate.upper).abs() < 1e-12);
                }
                (Err(Error::DegenerateBound { .. }), Err(Error::DegenerateBound { .. })) => {}
                (a, b) => panic!("mismatched outcomes: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn degenerate_bound_reports_max_delta() {
        // huge exposed Y=1 mass: the lower denominator dies quickly
        let t = ContingencyTable::new(90, 1, 4, 5);
        let err = table_bounds(&t, 0.5).unwrap_err();
        match err {
            Error::DegenerateBound { max_delta, .. } => {
                assert!(max_delta > 0.0 && max_delta < 0.5);
                // binding constraint: c + d - a * r > 0, r = delta/(1-delta) = 9/90
                let s = 9.0 / 90.0;
                assert!((max_delta - s / (1.0 + s)).abs() < 1e-12);
                assert!(table_bounds(&t, max_delta - 1e-9).is_ok());
                assert!(table_bounds(&t, max_delta + 1e-9).is_err());
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn widening_is_monotone_in_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let obs = random_cells(&mut rng);
            for f in [prop1_bounds, prop2a_bounds, prop2b_bounds] {
                let mut prev: Option<CateBounds> = None;
                for step in 0..=10 {
                    let delta = step as f64 * 0.05;
                    match f(&obs, delta) {
                        Ok(b) => {
                            if let Some(p) = prev {
                                assert!(p.ate.within(&b.ate));
                                assert!(p.p1_given_1.within(&b.p1_given_1));
                                assert!(p.p1_given_0.within(&b.p1_given_0));
                            }
                            prev = Some(b);
                        }
                        Err(_) => break,
                    }
                }
            }
        }
    }
}
