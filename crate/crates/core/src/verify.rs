//! Exact distributions of the extended model and sample comparison.
//!
//! The reference for a sample is the chain-rule product of the extended CPTs,
//! pushed forward through `MY`. The joint mass from [`crate::fusion`] is not a
//! sampling target (it can be negative).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::cpt::ExtCpt;
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::tables::{Frame, SubsetMask};
use crate::vexpr::VExpr;

/// Largest extended state space enumerated.
pub const MAX_STATES: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution<K: Ord> {
    pub scope: Vec<String>,
    pub probs: BTreeMap<K, f64>,
}

impl<K: Ord> ExactDistribution<K> {
    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }

    pub fn get(&self, key: &K) -> f64 {
        self.probs.get(key).copied().unwrap_or(0.0)
    }
}

/// Extended states keyed by each node's position in its extended domain.
pub type ExtendedDistribution = ExactDistribution<Vec<usize>>;

/// Collapsed states keyed by subsets, one per variable.
pub type CollapsedDistribution = ExactDistribution<Vec<SubsetMask>>;

/// Probability of every extended assignment with nonzero probability.
pub fn exact_extended_joint(net: &Network, cpts: &[ExtCpt]) -> Result<ExtendedDistribution> {
    if cpts.len() != net.len() {
        return Err(Error::Shape(format!("{} CPTs for {} nodes", cpts.len(), net.len())));
    }
    let states: u128 = cpts.iter().map(|c| c.width() as u128).product();
    if states > MAX_STATES {
        return Err(Error::TooLarge(format!("{states} extended states")));
    }
    let order = net.topological_order().to_vec();
    let mut probs = BTreeMap::new();
    let mut assignment = vec![0usize; net.len()];
    descend(net, cpts, &order, 0, 1.0, &mut assignment, &mut probs)?;
    Ok(ExactDistribution { scope: net.variable_names(), probs })
}

fn parent_row(net: &Network, cpt: &ExtCpt, j: usize, assignment: &[usize], cpts: &[ExtCpt]) -> Result<usize> {
    let mut cfg = Vec::with_capacity(net.parents(j).len());
    for (l, &p) in net.parents(j).iter().enumerate() {
        let h = net.edge_index(p, j)?;
        let sent: VExpr = cpts[p].child_domain()[assignment[p]].component(h)?;
        let pos = cpt.parent_domains()[l]
            .iter()
            .position(|v| *v == sent)
            .ok_or_else(|| Error::OutOfRange("component outside parent domain".into()))?;
        cfg.push(pos);
    }
    Ok(cpt.row_index(&cfg))
}

fn descend(
    net: &Network,
    cpts: &[ExtCpt],
    order: &[usize],
    depth: usize,
    mass: f64,
    assignment: &mut Vec<usize>,
    out: &mut BTreeMap<Vec<usize>, f64>,
) -> Result<()> {
    let Some(&j) = order.get(depth) else {
        out.insert(assignment.clone(), mass);
        return Ok(());
    };
    let cpt = &cpts[j];
    let ri = parent_row(net, cpt, j, assignment, cpts)?;
    for (x, p) in cpt.row(ri).iter().enumerate() {
        if *p > 0.0 {
            assignment[j] = x;
            descend(net, cpts, order, depth + 1, mass * p, assignment, out)?;
        }
    }
    Ok(())
}

/// Push-forward of [`exact_extended_joint`] under coordinatewise `MY`.
pub fn exact_collapsed_joint(net: &Network, cpts: &[ExtCpt]) -> Result<CollapsedDistribution> {
    let ext = exact_extended_joint(net, cpts)?;
    Ok(collapse_distribution(&ext, cpts))
}

pub fn collapse_distribution(ext: &ExtendedDistribution, cpts: &[ExtCpt]) -> CollapsedDistribution {
    let mut probs = BTreeMap::new();
    for (state, p) in &ext.probs {
        let key: Vec<SubsetMask> =
            state.iter().enumerate().map(|(j, &x)| cpts[j].child_domain()[x].my()).collect();
        *probs.entry(key).or_insert(0.0) += p;
    }
    ExactDistribution { scope: ext.scope.clone(), probs }
}

/// Collapsed records with the variable names they are ordered by.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalSample {
    pub scope: Vec<String>,
    pub rows: Vec<Vec<SubsetMask>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellComparison {
    pub state: Vec<SubsetMask>,
    pub count: u64,
    pub empirical: f64,
    pub exact: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub sample_size: u64,
    pub cells: Vec<CellComparison>,
    pub linf: f64,
    pub chi2: f64,
    /// Cells with positive exact probability, minus one.
    pub dof: usize,
    pub p_value: Option<f64>,
    pub threshold: f64,
    pub pass: bool,
}

impl ComparisonReport {
    pub fn render(&self, frames: &[Frame]) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "cell,count,empirical,exact,diff");
        for c in &self.cells {
            let label: Vec<String> =
                c.state.iter().zip(frames).map(|(m, f)| f.format_subset(*m)).collect();
            let _ = writeln!(
                s,
                "{},{},{:.9},{:.9},{:+.9}",
                label.join("x"),
                c.count,
                c.empirical,
                c.exact,
                c.empirical - c.exact
            );
        }
        let _ = writeln!(s, "N = {}", self.sample_size);
        let _ = writeln!(s, "L-inf = {:.9} (threshold {:.9})", self.linf, self.threshold);
        match self.p_value {
            Some(p) => {
                let _ = writeln!(s, "chi2 = {:.6}, dof = {}, p = {:.6}", self.chi2, self.dof, p);
            }
            None => {
                let _ = writeln!(s, "chi2 = {:.6}, dof = {}", self.chi2, self.dof);
            }
        }
        let _ = writeln!(s, "{}", if self.pass { "PASS" } else { "FAIL" });
        s
    }
}

/// Compares observed counts (or fractional weights) against `exact`.
pub fn compare_counts(
    counts: &BTreeMap<Vec<SubsetMask>, f64>,
    exact: &CollapsedDistribution,
    linf_threshold: f64,
) -> Result<ComparisonReport> {
    let n: f64 = counts.values().sum();
    if n <= 0.0 {
        return Err(Error::Shape("empty sample".into()));
    }
    let mut keys: Vec<&Vec<SubsetMask>> = exact.probs.keys().chain(counts.keys()).collect();
    keys.sort();
    keys.dedup();

    let mut cells = Vec::with_capacity(keys.len());
    let mut linf = 0.0f64;
    let mut chi2 = 0.0f64;
    let mut positive = 0usize;
    for key in keys {
        let c = counts.get(key).copied().unwrap_or(0.0);
        let p = exact.get(key);
        let emp = c / n;
        linf = linf.max((emp - p).abs());
        if p > 0.0 {
            positive += 1;
            let expected = n * p;
            chi2 += (c - expected).powi(2) / expected;
        } else if c > 0.0 {
            chi2 = f64::INFINITY;
        }
        cells.push(CellComparison { state: key.clone(), count: c.round() as u64, empirical: emp, exact: p });
    }
    let dof = positive.saturating_sub(1);
    let p_value = if dof > 0 && chi2.is_finite() {
        ChiSquared::new(dof as f64).ok().map(|d| 1.0 - d.cdf(chi2))
    } else {
        None
    };
    Ok(ComparisonReport {
        sample_size: n.round() as u64,
        cells,
        linf,
        chi2,
        dof,
        p_value,
        threshold: linf_threshold,
        pass: linf <= linf_threshold,
    })
}

/// L∞ and χ² comparison of a collapsed sample with the exact collapsed distribution.
pub fn compare_empirical(
    sample: &EmpiricalSample,
    exact: &CollapsedDistribution,
    linf_threshold: f64,
) -> Result<ComparisonReport> {
    if sample.scope != exact.scope {
        return Err(Error::Scope(format!(
            "sample over [{}], exact distribution over [{}]",
            sample.scope.join(","),
            exact.scope.join(",")
        )));
    }
    if sample.rows.is_empty() {
        return Err(Error::Shape("empty sample".into()));
    }
    let mut counts: BTreeMap<Vec<SubsetMask>, f64> = BTreeMap::new();
    for row in &sample.rows {
        if row.len() != sample.scope.len() {
            return Err(Error::Scope("record width differs from scope".into()));
        }
        *counts.entry(row.clone()).or_insert(0.0) += 1.0;
    }
    compare_counts(&counts, exact, linf_threshold)
}
