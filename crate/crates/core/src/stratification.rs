//! Stratified estimation of the treatment effect with recall-bias-corrected
//! stratum tables.
//!
//! Strata are built one of three ways: quantiles of the biased propensity
//! score `Pr(Z* = 1 | x)`, quantiles of a prognostic score fitted on the
//! observed-exposed subsample, or model-free blocking into equal-size groups
//! by iterated optimal matching on a rank-based Mahalanobis distance.
//!
//! Within each stratum the 2x2 table of (Y, Z*) is corrected for
//! under-reporting: exposed counts are inflated by `1/(1 - eta)` and the
//! hidden mass `eta/(1 - eta)` is removed from the unexposed cells. Sparse or
//! over-corrected strata are merged into their nearest neighbor before
//! estimation, and stratum effects are combined with `n_i / N` weights.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::cells::ContingencyTable;
use crate::error::{Error, Result};
use crate::estimators::ModelSpec;
use crate::linalg::{cholesky_with_ridge, forward_solve, Matrix};
use crate::logistic::{build_design, fit_logistic};
use crate::matching::{optimal_assignment_capacitated, CostMatrix};
use crate::model::{Dataset, RecallBiasSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StratMethod {
    Prop,
    Prog,
    Block,
}

/// A partition of the units into strata.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumAssignment {
    /// `labels[i]` is the stratum id of unit `i`; ids are contiguous from 0.
    pub labels: Vec<usize>,
    pub n_strata: usize,
    pub method: StratMethod,
    /// Per-unit score when the strata came from score quantiles.
    pub scores: Option<Vec<f64>>,
    /// Configured stratum count (score methods) or block size (blocking).
    pub group_size: usize,
}

impl StratumAssignment {
    pub fn stratum_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.n_strata];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

/// A fitted per-unit score with fit diagnostics.
#[derive(Debug, Clone)]
pub struct ScoreFit {
    pub scores: Vec<f64>,
    pub coef: Vec<f64>,
    pub converged: bool,
    /// Quasi-separation: some fitted probability pinned to 0/1.
    pub separation: bool,
}

/// Biased propensity score: fitted `Pr(Z* = 1 | x)` from a logistic model on
/// the exposure covariates.
pub fn fit_propensity_star(data: &Dataset, models: &ModelSpec) -> Result<ScoreFit> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    models.validate(data.dim())?;
    let design = build_design(
        data.units(),
        &models.exposure_covariates,
        models.include_intercept,
        None,
    );
    let y: Vec<f64> = data.units().iter().map(|u| u.z_star as f64).collect();
    let fit = fit_logistic(&design, &y)?;
    Ok(ScoreFit {
        scores: fit.fitted.clone(),
        coef: fit.coef,
        converged: fit.converged,
        separation: fit.separation,
    })
}

/// Prognostic score: the covariate part of a logistic outcome model fitted on
/// the observed-exposed subsample (valid because `Z* = 1` implies `Z = 1`
/// under pure under-reporting). Returns the linear score for every unit.
pub fn fit_prognostic(data: &Dataset, models: &ModelSpec) -> Result<ScoreFit> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    models.validate(data.dim())?;
    let exposed: Vec<crate::model::Unit> = data
        .units()
        .iter()
        .filter(|u| u.z_star == 1)
        .cloned()
        .collect();
    let needed = models.outcome_covariates.len() + 2;
    let y_sum: usize = exposed.iter().map(|u| u.y as usize).sum();
    if exposed.len() < needed || y_sum == 0 || y_sum == exposed.len() {
        return Err(Error::InsufficientExposed {
            needed,
            found: exposed.len(),
        });
    }
    let design = build_design(
        &exposed,
        &models.outcome_covariates,
        models.include_intercept,
        None,
    );
    let y: Vec<f64> = exposed.iter().map(|u| u.y as f64).collect();
    let fit = fit_logistic(&design, &y)?;
    // slope part only; the intercept shifts every score equally
    let offset = usize::from(models.include_intercept);
    let slopes = &fit.coef[offset..];
    let scores: Vec<f64> = data
        .units()
        .iter()
        .map(|u| {
            models
                .outcome_covariates
                .iter()
                .zip(slopes)
                .map(|(&c, &g)| g * u.x[c])
                .sum()
        })
        .collect();
    Ok(ScoreFit {
        scores,
        coef: fit.coef,
        converged: fit.converged,
        separation: fit.separation,
    })
}

/// Partition units into `n_strata` groups by score quantile rank. Ties are
/// broken by stable unit order, so stratum sizes differ by at most one.
pub fn quantile_strata(
    scores: &[f64],
    n_strata: usize,
    method: StratMethod,
) -> Result<StratumAssignment> {
    let n = scores.len();
    if n_strata < 2 {
        return Err(Error::InvalidConfig(format!(
            "need at least 2 strata, got {n_strata}"
        )));
    }
    if n < n_strata {
        return Err(Error::InvalidConfig(format!(
            "cannot split {n} units into {n_strata} strata"
        )));
    }
    let mut distinct: Vec<f64> = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < n_strata {
        return Err(Error::DegenerateScores {
            distinct: distinct.len(),
            needed: n_strata,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| scores[i].total_cmp(&scores[j]));
    let mut labels = vec![0usize; n];
    for (rank, &unit) in order.iter().enumerate() {
        labels[unit] = rank * n_strata / n;
    }
    Ok(StratumAssignment {
        labels,
        n_strata,
        method,
        scores: Some(scores.to_vec()),
        group_size: n_strata,
    })
}

/// Rank each covariate (average ranks for ties), whiten by the Cholesky
/// factor of the rank covariance, and return the whitened vectors; Euclidean
/// distance between them is the rank-based Mahalanobis distance.
fn whitened_ranks(data: &Dataset, covariates: &[usize]) -> Vec<Vec<f64>> {
    let n = data.len();
    let d = covariates.len();
    let mut ranks = vec![vec![0.0; d]; n];
    for (k, &c) in covariates.iter().enumerate() {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| data.units()[i].x[c].total_cmp(&data.units()[j].x[c]));
        let mut pos = 0;
        while pos < n {
            let mut end = pos;
            while end + 1 < n
                && data.units()[order[end + 1]].x[c] == data.units()[order[pos]].x[c]
            {
                end += 1;
            }
            let avg = (pos + end) as f64 / 2.0 + 1.0;
            for &u in &order[pos..=end] {
                ranks[u][k] = avg;
            }
            pos = end + 1;
        }
    }
    // covariance of the rank vectors
    let mut mean = vec![0.0; d];
    for r in &ranks {
        for k in 0..d {
            mean[k] += r[k];
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let mut cov = Matrix::zeros(d, d);
    for r in &ranks {
        for i in 0..d {
            for j in 0..=i {
                cov.add_at(i, j, (r[i] - mean[i]) * (r[j] - mean[j]));
            }
        }
    }
    for i in 0..d {
        for j in 0..=i {
            let v = cov.get(i, j) / n as f64;
            cov.set(i, j, v);
            cov.set(j, i, v);
        }
    }
    match cholesky_with_ridge(&cov) {
        Some(l) => ranks
            .iter()
            .map(|r| {
                let centered: Vec<f64> = r.iter().zip(&mean).map(|(v, m)| v - m).collect();
                forward_solve(&l, &centered)
            })
            .collect(),
        // all covariates constant: every distance is zero
        None => vec![vec![0.0; d]; n],
    }
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Pairwise rank-Mahalanobis distances between all units.
pub fn covariate_distances(data: &Dataset, covariates: &[usize]) -> Vec<Vec<f64>> {
    let w = whitened_ranks(data, covariates);
    let n = data.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let d = euclid(&w[i], &w[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    dist
}

#[derive(Debug, Clone)]
pub struct BlockingResult {
    pub assignment: StratumAssignment,
    /// Total within-block pairwise distance after each accepted round.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub rounds: usize,
}

fn partition_objective(blocks: &[Vec<usize>], dist: &[Vec<f64>]) -> f64 {
    blocks
        .iter()
        .map(|block| {
            let mut total = 0.0;
            for (i, &u) in block.iter().enumerate() {
                for &v in &block[i + 1..] {
                    total += dist[u][v];
                }
            }
            total
        })
        .sum()
}

fn canonical_blocks(mut blocks: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for b in &mut blocks {
        b.sort_unstable();
    }
    blocks.sort_by_key(|b| b[0]);
    blocks
}

/// Build `N / k` blocks of exactly `k` units by iterated optimal matching:
/// random templates are matched `(k-1):1`, then each block ejects its most
/// distant member, the ejected units become the new templates, and the
/// process repeats until the partition stops changing. A round that would
/// increase the total within-block distance is rejected, which also
/// guarantees termination.
pub fn build_blocks<R: Rng>(
    data: &Dataset,
    covariates: &[usize],
    k: usize,
    rng: &mut R,
    max_rounds: usize,
) -> Result<BlockingResult> {
    let n = data.len();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    if k == 0 || n % k != 0 {
        return Err(Error::NonDivisibleN { n, k });
    }
    let n_blocks = n / k;
    if n_blocks == 1 {
        return Ok(BlockingResult {
            assignment: StratumAssignment {
                labels: vec![0; n],
                n_strata: 1,
                method: StratMethod::Block,
                scores: None,
                group_size: k,
            },
            objective_trace: Vec::new(),
            converged: true,
            rounds: 0,
        });
    }
    let dist = covariate_distances(data, covariates);

    // initial templates: a random draw of one unit per block
    let mut templates = rand::seq::index::sample(rng, n, n_blocks).into_vec();
    templates.sort_unstable();

    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut objective_trace: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut rounds = 0;

    for _ in 0..max_rounds {
        rounds += 1;
        let mut is_template = vec![false; n];
        for &t in &templates {
            is_template[t] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&u| !is_template[u]).collect();
        let mut costs = Vec::with_capacity(free.len() * n_blocks);
        for &u in &free {
            for &t in &templates {
                costs.push(dist[u][t]);
            }
        }
        let cost = CostMatrix::new(free.len(), n_blocks, costs)?;
        let assignment = optimal_assignment_capacitated(&cost, &vec![k - 1; n_blocks])?;

        let mut new_blocks: Vec<Vec<usize>> = templates.iter().map(|&t| vec![t]).collect();
        for (row, &col) in assignment.row_to_col.iter().enumerate() {
            new_blocks[col].push(free[row]);
        }
        let new_blocks = canonical_blocks(new_blocks);
        let objective = partition_objective(&new_blocks, &dist);

        if let Some(&prev) = objective_trace.last() {
            if objective > prev + 1e-9 {
                // refinement made things worse: keep the previous partition
                converged = true;
                break;
            }
        }
        let unchanged = !blocks.is_empty() && new_blocks == blocks;
        blocks = new_blocks;
        objective_trace.push(objective);
        if unchanged {
            converged = true;
            break;
        }

        // eject the member farthest from the rest of its block
        templates = blocks
            .iter()
            .map(|block| {
                let mut worst = block[0];
                let mut worst_sum = f64::NEG_INFINITY;
                for &u in block {
                    let sum: f64 = block.iter().map(|&v| dist[u][v]).sum();
                    if sum > worst_sum {
                        worst_sum = sum;
                        worst = u;
                    }
                }
                worst
            })
            .collect();
        templates.sort_unstable();
    }

    let mut labels = vec![0usize; n];
    for (b, block) in blocks.iter().enumerate() {
        for &u in block {
            labels[u] = b;
        }
    }
    Ok(BlockingResult {
        assignment: StratumAssignment {
            labels,
            n_strata: blocks.len(),
            method: StratMethod::Block,
            scores: None,
            group_size: k,
        },
        objective_trace,
        converged,
        rounds,
    })
}

/// Per-stratum accumulators: the observed 2x2 table plus the bias-corrected
/// pseudo-counts, all additive under merging.
#[derive(Debug, Clone, PartialEq)]
pub struct StratumCells {
    pub table: ContingencyTable,
    /// Sum of `z* y / (1 - eta1)` over members.
    pub exposed_y1_weighted: f64,
    /// Sum of `z* (1 - y) / (1 - eta0)` over members.
    pub exposed_y0_weighted: f64,
    /// Sum of `z* y eta1 / (1 - eta1)`: exposed Y=1 mass hiding among controls.
    pub hidden_y1: f64,
    /// Sum of `z* (1 - y) eta0 / (1 - eta0)`.
    pub hidden_y0: f64,
    /// Mean score (score-based strata) or mean covariate vector (blocks);
    /// nearest-neighbor merging measures distance between these.
    pub position: Vec<f64>,
    /// Mean covariate vector of the members.
    pub mean_x: Vec<f64>,
    /// Original stratum ids folded into this one.
    pub members: Vec<usize>,
}

impl StratumCells {
    pub fn n(&self) -> u64 {
        self.table.n()
    }

    /// Corrected exposed and control masses (the balance weights).
    pub fn corrected_masses(&self) -> (f64, f64) {
        let treated = self.exposed_y1_weighted + self.exposed_y0_weighted;
        let control =
            self.table.c as f64 + self.table.d as f64 - self.hidden_y1 - self.hidden_y0;
        (treated, control)
    }
}

/// Aggregate units into per-stratum tables and corrected pseudo-counts.
pub fn stratum_cells(
    data: &Dataset,
    assignment: &StratumAssignment,
    spec: &RecallBiasSpec,
) -> Result<Vec<StratumCells>> {
    spec.validate_len(data.len())?;
    let d = data.dim();
    let mut cells: Vec<StratumCells> = (0..assignment.n_strata)
        .map(|s| StratumCells {
            table: ContingencyTable::new(0, 0, 0, 0),
            exposed_y1_weighted: 0.0,
            exposed_y0_weighted: 0.0,
            hidden_y1: 0.0,
            hidden_y0: 0.0,
            position: Vec::new(),
            mean_x: vec![0.0; d],
            members: vec![s],
        })
        .collect();
    for (i, u) in data.units().iter().enumerate() {
        let s = assignment.labels[i];
        let (eta0, eta1) = spec.etas(i);
        let cell = &mut cells[s];
        match (u.y, u.z_star) {
            (1, 1) => {
                cell.table.a += 1;
                let w = 1.0 / (1.0 - eta1);
                cell.exposed_y1_weighted += w;
                cell.hidden_y1 += w - 1.0;
            }
            (0, 1) => {
                cell.table.b += 1;
                let w = 1.0 / (1.0 - eta0);
                cell.exposed_y0_weighted += w;
                cell.hidden_y0 += w - 1.0;
            }
            (1, 0) => cell.table.c += 1,
            (0, 0) => cell.table.d += 1,
            _ => unreachable!("dataset invariants guarantee binary values"),
        }
        for (k, &x) in u.x.iter().enumerate() {
            cell.mean_x[k] += x;
        }
    }
    let mut score_sums = vec![0.0; assignment.n_strata];
    if let Some(scores) = &assignment.scores {
        for (i, &s) in assignment.labels.iter().enumerate() {
            score_sums[s] += scores[i];
        }
    }
    for (s, cell) in cells.iter_mut().enumerate() {
        let n = cell.n() as f64;
        if n > 0.0 {
            for m in &mut cell.mean_x {
                *m /= n;
            }
        }
        cell.position = if assignment.scores.is_some() {
            vec![if n > 0.0 { score_sums[s] / n } else { 0.0 }]
        } else {
            cell.mean_x.clone()
        };
    }
    Ok(cells)
}

/// Why a stratum cannot be estimated on its own.
fn degenerate_reason(cell: &StratumCells) -> Option<&'static str> {
    let t = &cell.table;
    if t.a + t.b == 0 {
        return Some("no observed-exposed units");
    }
    if t.c + t.d == 0 {
        return Some("no observed-control units");
    }
    let c_corr = t.c as f64 - cell.hidden_y1;
    let d_corr = t.d as f64 - cell.hidden_y0;
    if c_corr < 0.0 || d_corr < 0.0 || c_corr + d_corr <= 0.0 {
        return Some("correction exceeds an unexposed cell");
    }
    None
}

/// Merge policy: what makes a stratum degenerate.
#[derive(Debug, Clone)]
pub enum MergePolicy {
    /// Degenerate under the point-estimation correction (the working spec is
    /// already baked into the cells).
    ForEstimation,
    /// Degenerate for the count-form bound at this delta.
    ForDelta(f64),
}

impl MergePolicy {
    fn is_degenerate(&self, cell: &StratumCells) -> bool {
        match self {
            MergePolicy::ForEstimation => degenerate_reason(cell).is_some(),
            MergePolicy::ForDelta(delta) => {
                let t = &cell.table;
                if t.a + t.b == 0 || t.c + t.d == 0 {
                    return true;
                }
                let r = delta / (1.0 - delta);
                let margin = (t.c + t.d) as f64;
                margin - t.b as f64 * r <= 0.0 || margin - t.a as f64 * r <= 0.0
            }
        }
    }
}

fn merge_pair(target: &mut StratumCells, source: &StratumCells) {
    let n_t = target.n() as f64;
    let n_s = source.n() as f64;
    let total = n_t + n_s;
    target.table.a += source.table.a;
    target.table.b += source.table.b;
    target.table.c += source.table.c;
    target.table.d += source.table.d;
    target.exposed_y1_weighted += source.exposed_y1_weighted;
    target.exposed_y0_weighted += source.exposed_y0_weighted;
    target.hidden_y1 += source.hidden_y1;
    target.hidden_y0 += source.hidden_y0;
    if total > 0.0 {
        for (t, s) in target.position.iter_mut().zip(&source.position) {
            *t = (*t * n_t + *s * n_s) / total;
        }
        for (t, s) in target.mean_x.iter_mut().zip(&source.mean_x) {
            *t = (*t * n_t + *s * n_s) / total;
        }
    }
    target.members.extend_from_slice(&source.members);
    target.members.sort_unstable();
}

/// Merge every degenerate stratum into the stratum with the nearest position
/// until none remain. Counts and corrected masses add; each merge reduces the
/// stratum count by one.
pub fn combine_strata(
    mut cells: Vec<StratumCells>,
    policy: &MergePolicy,
) -> Result<(Vec<StratumCells>, usize)> {
    let mut merges = 0;
    loop {
        let idx = match cells.iter().position(|c| policy.is_degenerate(c)) {
            Some(idx) => idx,
            None => return Ok((cells, merges)),
        };
        if cells.len() == 1 {
            return Err(Error::AllDegenerate);
        }
        let mut nearest = usize::MAX;
        let mut nearest_dist = f64::INFINITY;
        for (j, other) in cells.iter().enumerate() {
            if j == idx {
                continue;
            }
            let dist = euclid(&cells[idx].position, &other.position);
            if dist < nearest_dist {
                nearest_dist = dist;
                nearest = j;
            }
        }
        let source = cells.remove(idx);
        let target_idx = if nearest > idx { nearest - 1 } else { nearest };
        merge_pair(&mut cells[target_idx], &source);
        merges += 1;
    }
}

/// Stratum-specific treatment effect from the corrected table.
pub fn stratum_estimate(cell: &StratumCells) -> Result<f64> {
    if let Some(reason) = degenerate_reason(cell) {
        return Err(Error::DegenerateStratum {
            index: cell.members.first().copied().unwrap_or(0),
            reason,
        });
    }
    let exposed = cell.exposed_y1_weighted + cell.exposed_y0_weighted;
    let p1 = cell.exposed_y1_weighted / exposed;
    let c_corr = cell.table.c as f64 - cell.hidden_y1;
    let d_corr = cell.table.d as f64 - cell.hidden_y0;
    let p0 = c_corr / (c_corr + d_corr);
    Ok(p1 - p0)
}

/// Size-weighted combination of stratum effects: `sum tau_i * n_i / N`.
pub fn aggregate(estimates: &[f64], sizes: &[u64]) -> f64 {
    let total: u64 = sizes.iter().sum();
    if total == 0 {
        return f64::NAN;
    }
    estimates
        .iter()
        .zip(sizes)
        .map(|(tau, &n)| tau * n as f64 / total as f64)
        .sum()
}

/// Merge-then-estimate pipeline for one stratification.
#[derive(Debug, Clone)]
pub struct StratifiedEstimate {
    pub tau: f64,
    pub stratum_taus: Vec<f64>,
    pub stratum_sizes: Vec<u64>,
    pub merges: usize,
}

pub fn stratified_estimate(
    data: &Dataset,
    assignment: &StratumAssignment,
    spec: &RecallBiasSpec,
) -> Result<StratifiedEstimate> {
    let cells = stratum_cells(data, assignment, spec)?;
    let (cells, merges) = combine_strata(cells, &MergePolicy::ForEstimation)?;
    let mut taus = Vec::with_capacity(cells.len());
    let mut sizes = Vec::with_capacity(cells.len());
    for cell in &cells {
        taus.push(stratum_estimate(cell)?);
        sizes.push(cell.n());
    }
    Ok(StratifiedEstimate {
        tau: aggregate(&taus, &sizes),
        stratum_taus: taus,
        stratum_sizes: sizes,
        merges,
    })
}

/// Covariate balance between corrected-weight exposed and control groups.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CovariateBalance {
    pub covariate: String,
    /// ASMD using the bias-corrected stratum masses.
    pub corrected: f64,
    /// ASMD using the raw observed-exposure counts.
    pub naive: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StratumMasses {
    pub stratum: usize,
    pub treated: f64,
    pub control: f64,
    pub n: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BalanceReport {
    pub covariates: Vec<CovariateBalance>,
    pub masses: Vec<StratumMasses>,
}

fn weighted_asmd(positions: &[f64], treated_w: &[f64], control_w: &[f64]) -> f64 {
    let wsum = |w: &[f64]| w.iter().sum::<f64>();
    let wmean =
        |w: &[f64]| positions.iter().zip(w).map(|(x, wi)| x * wi).sum::<f64>() / wsum(w);
    let mu_t = wmean(treated_w);
    let mu_c = wmean(control_w);
    let wvar = |w: &[f64], mu: f64| {
        positions
            .iter()
            .zip(w)
            .map(|(x, wi)| wi * (x - mu) * (x - mu))
            .sum::<f64>()
            / wsum(w)
    };
    let pooled = ((wvar(treated_w, mu_t) + wvar(control_w, mu_c)) / 2.0).sqrt();
    if pooled < 1e-12 {
        0.0
    } else {
        (mu_t - mu_c).abs() / pooled
    }
}

/// Standardized mean differences per covariate, before and after correcting
/// the group masses for under-reporting. Each unit is represented by its
/// stratum's average covariate vector, so only constant etas are meaningful
/// here.
pub fn balance_diagnostics(
    data: &Dataset,
    assignment: &StratumAssignment,
    spec: &RecallBiasSpec,
) -> Result<BalanceReport> {
    if spec.as_constant().is_none() {
        return Err(Error::ConstantEtaRequired);
    }
    let cells = stratum_cells(data, assignment, spec)?;
    let mut masses = Vec::with_capacity(cells.len());
    for (s, cell) in cells.iter().enumerate() {
        let (treated, control) = cell.corrected_masses();
        if control < 0.0 {
            return Err(Error::DegenerateStratum {
                index: s,
                reason: "corrected control mass negative",
            });
        }
        masses.push(StratumMasses {
            stratum: s,
            treated,
            control,
            n: cell.n(),
        });
    }
    let treated_w: Vec<f64> = masses.iter().map(|m| m.treated).collect();
    let control_w: Vec<f64> = masses.iter().map(|m| m.control).collect();
    let naive_t: Vec<f64> = cells
        .iter()
        .map(|c| (c.table.a + c.table.b) as f64)
        .collect();
    let naive_c: Vec<f64> = cells
        .iter()
        .map(|c| (c.table.c + c.table.d) as f64)
        .collect();
    let covariates = data
        .covariate_names()
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let positions: Vec<f64> = cells.iter().map(|c| c.mean_x[k]).collect();
            CovariateBalance {
                covariate: name.clone(),
                corrected: weighted_asmd(&positions, &treated_w, &control_w),
                naive: weighted_asmd(&positions, &naive_t, &naive_c),
            }
        })
        .collect();
    Ok(BalanceReport { covariates, masses })
}
