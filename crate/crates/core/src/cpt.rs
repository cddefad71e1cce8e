//! Conditional probability tables over extended domains.
//!
//! Rows with plain parent values come straight from the K table: each
//! family of `2^n - 1` vectors sharing `SU = V` splits the probability of
//! `V^n` equally, and the plain vector `s^n` takes what is left of `K(s|cfg)`
//! so that every MY-class sums to `K`. A `⊙` parent value reuses the row of
//! its `SU`; a `⊗` parent value `x` gets `2·P(·|MY(x)) - P(·|SU(x))`, so that
//! averaging over `x` and `SU(x)` gives back the row of `MY(x)`.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::graph::{validate_structure, Network};
use crate::report::ValidationReport;
use crate::tables::{CondKTable, Frame, SubsetMask, COMPUTED_TOL, NEG_CLAMP};
use crate::vexpr::{enumerate_vexprs, index_of, node_domain, Op, VExpr, VnExpr};

/// Rows for plain parent configurations only, indexed like the K table's configurations.
#[derive(Debug, Clone)]
pub struct PlainRows {
    k: CondKTable,
    n: usize,
    child_domain: Vec<VnExpr>,
    rows: Vec<Vec<f64>>,
}

impl PlainRows {
    pub fn k(&self) -> &CondKTable {
        &self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn child_domain(&self) -> &[VnExpr] {
        &self.child_domain
    }

    /// Row for the K-table configuration at dense index `ci`.
    pub fn row(&self, ci: usize) -> &[f64] {
        &self.rows[ci]
    }
}

/// `P(child' | parent'' configuration)` for every parent V-expression configuration.
#[derive(Debug, Clone)]
pub struct ExtCpt {
    k: CondKTable,
    n: usize,
    child_domain: Vec<VnExpr>,
    parent_domains: Vec<Vec<VExpr>>,
    strides: Vec<usize>,
    row_count: usize,
    probs: Vec<f64>,
}

fn plain_rows_unchecked(k: &CondKTable, n: usize) -> Result<PlainRows> {
    let child = k.child();
    let child_domain = node_domain(child, n)?;
    let width = child_domain.len();
    let plain_pos: HashMap<SubsetMask, usize> = child_domain
        .iter()
        .enumerate()
        .filter(|(_, x)| x.is_plain())
        .map(|(i, x)| (x.my(), i))
        .collect();

    let mut rows = Vec::with_capacity(k.config_count());
    if n == 0 {
        for ci in 0..k.config_count() {
            let kr = k.row(ci);
            let mut row = vec![0.0; width];
            for (s, &i) in &plain_pos {
                row[i] = kr[s.dense_index()];
            }
            rows.push(row);
        }
        return Ok(PlainRows { k: k.clone(), n, child_domain, rows });
    }

    let vexprs = enumerate_vexprs(child)?;
    let mut families_by_my: HashMap<SubsetMask, Vec<usize>> = HashMap::new();
    for (i, x) in child_domain.iter().enumerate() {
        if !x.is_plain() {
            families_by_my.entry(x.my()).or_default().push(i);
        }
    }
    let mut compounds_by_my: HashMap<SubsetMask, Vec<&VExpr>> = HashMap::new();
    for v in vexprs.iter().filter(|v| !v.is_base()) {
        compounds_by_my.entry(v.my()).or_default().push(v);
    }
    let base_of: HashMap<SubsetMask, VExpr> =
        child.subsets().into_iter().map(|s| (s, VExpr::Base(s))).collect();
    let mut by_size = child.subsets();
    by_size.sort_by_key(|s| std::cmp::Reverse(s.len()));
    let split = ((1u64 << n) - 1) as f64;

    for ci in 0..k.config_count() {
        let kr = k.row(ci);
        let mut row = vec![0.0; width];
        // probability of the constant vector V^n, per V-expression V
        let mut whole: HashMap<&VExpr, f64> = HashMap::new();
        for s in &by_size {
            let mut family_total = 0.0;
            for &i in families_by_my.get(s).into_iter().flatten() {
                let su = child_domain[i].su().expect("family member");
                let p = whole[su] / split;
                row[i] = p;
                family_total += p;
            }
            let plain = kr[s.dense_index()] - family_total;
            row[plain_pos[s]] = plain;
            whole.insert(&base_of[s], plain);
            for v in compounds_by_my.get(s).into_iter().flatten() {
                let p = match v.op() {
                    Some(Op::At) => whole[v.su().expect("compound")] / split,
                    // the all-⊙ vector is not a V(n)-expression
                    _ => 0.0,
                };
                whole.insert(v, p);
            }
        }
        rows.push(row);
    }
    Ok(PlainRows { k: k.clone(), n, child_domain, rows })
}

fn first_negative(
    k: &CondKTable,
    values: impl Iterator<Item = (usize, usize, f64)>,
    describe: impl Fn(usize, usize) -> String,
) -> Result<()> {
    for (ri, ci, v) in values {
        if v < -NEG_CLAMP {
            return Err(Error::Infeasible {
                node: k.child().name().to_string(),
                row: describe(ri, ci),
                value: v,
            });
        }
    }
    Ok(())
}

fn probability_label(child: &str, cfg: &[String]) -> String {
    if cfg.is_empty() {
        format!("P({child})")
    } else {
        format!("P({child}|{})", cfg.join(","))
    }
}

/// Rule 1 and the divided rule 2 for every plain parent configuration.
/// `n` is the node's successor count; `n = 0` gives the plain-subset domain
/// of a leaf with `P(s|cfg) = K(s|cfg)`.
pub fn build_plain_rows(k: &CondKTable, n: usize) -> Result<PlainRows> {
    let rows = plain_rows_unchecked(k, n)?;
    let width = rows.child_domain.len();
    first_negative(
        k,
        rows.rows.iter().enumerate().flat_map(|(ri, r)| r.iter().enumerate().map(move |(ci, v)| (ri, ci, *v))),
        |ri, ci| {
            let cfg = k.config_at(ri);
            let cfg: Vec<String> =
                cfg.iter().zip(k.parents()).map(|(m, f)| f.format_subset(*m)).collect();
            probability_label(&rows.child_domain[ci].format(k.child()), &cfg)
        },
    )?;
    debug_assert!(rows.rows.iter().all(|r| r.len() == width));
    Ok(clamp_rows(rows))
}

fn clamp_rows(mut rows: PlainRows) -> PlainRows {
    for r in &mut rows.rows {
        for v in r.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }
    rows
}

fn extend_unchecked(partial: &PlainRows) -> Result<ExtCpt> {
    let k = &partial.k;
    let parent_domains: Vec<Vec<VExpr>> =
        k.parents().iter().map(enumerate_vexprs).collect::<Result<_>>()?;
    let mut strides = vec![0; parent_domains.len()];
    let mut row_count = 1usize;
    for (i, d) in parent_domains.iter().enumerate().rev() {
        strides[i] = row_count;
        row_count = row_count
            .checked_mul(d.len())
            .filter(|&c| c <= crate::tables::MAX_TABLE_CELLS)
            .ok_or_else(|| Error::TooLarge(format!("CPT rows of {}", k.child().name())))?;
    }
    let width = partial.child_domain.len();
    if row_count.saturating_mul(width) > crate::tables::MAX_TABLE_CELLS {
        return Err(Error::TooLarge(format!("CPT cells of {}", k.child().name())));
    }

    // per parent domain: position of SU and of Base(MY) for every entry
    let links: Vec<Vec<(Option<usize>, usize)>> = parent_domains
        .iter()
        .map(|d| {
            let idx = index_of(d);
            d.iter()
                .map(|v| (v.su().map(|su| idx[su]), idx[&VExpr::Base(v.my())]))
                .collect()
        })
        .collect();

    let mut cpt = ExtCpt {
        k: k.clone(),
        n: partial.n,
        child_domain: partial.child_domain.clone(),
        parent_domains,
        strides,
        row_count,
        probs: vec![0.0; row_count * width],
    };

    // Every row depends only on rows of strictly smaller total nesting depth.
    let mut by_depth: Vec<(usize, usize)> = (0..row_count)
        .map(|ri| {
            let depth = cpt
                .row_config(ri)
                .iter()
                .enumerate()
                .map(|(l, &x)| cpt.parent_domains[l][x].depth())
                .sum();
            (depth, ri)
        })
        .collect();
    by_depth.sort_unstable();

    for (_, ri) in by_depth {
        let cfg = cpt.row_config(ri);
        let compound = cfg.iter().enumerate().find_map(|(l, &x)| {
            let v = &cpt.parent_domains[l][x];
            v.op().map(|op| (l, x, op))
        });
        let values: Vec<f64> = match compound {
            None => {
                let masks: Vec<SubsetMask> = cfg
                    .iter()
                    .enumerate()
                    .map(|(l, &x)| cpt.parent_domains[l][x].my())
                    .collect();
                partial.rows[k.config_index(&masks)?].clone()
            }
            Some((l, x, op)) => {
                let (su, base) = links[l][x];
                let su = su.expect("compound has SU");
                let with = |to: usize| ri - x * cpt.strides[l] + to * cpt.strides[l];
                match op {
                    Op::Dot => cpt.row(with(su)).to_vec(),
                    Op::At => cpt
                        .row(with(base))
                        .iter()
                        .zip(cpt.row(with(su)))
                        .map(|(my, su)| 2.0 * my - su)
                        .collect(),
                }
            }
        };
        cpt.probs[ri * width..(ri + 1) * width].copy_from_slice(&values);
    }
    Ok(cpt)
}

/// Rules 3 and 4: rows for every parent V-expression configuration.
pub fn extend_parent_rows(partial: &PlainRows) -> Result<ExtCpt> {
    let mut cpt = extend_unchecked(partial)?;
    cpt.first_negative()?;
    cpt.clamp();
    Ok(cpt)
}

/// Full construction, failing on the first negative probability.
pub fn build(k: &CondKTable, n: usize) -> Result<ExtCpt> {
    extend_parent_rows(&build_plain_rows(k, n)?)
}

/// Full construction that keeps negative entries, for diagnostics.
pub fn construct(k: &CondKTable, n: usize) -> Result<ExtCpt> {
    extend_unchecked(&plain_rows_unchecked(k, n)?)
}

impl ExtCpt {
    pub fn k(&self) -> &CondKTable {
        &self.k
    }

    pub fn child(&self) -> &Frame {
        self.k.child()
    }

    pub fn parents(&self) -> &[Frame] {
        self.k.parents()
    }

    /// Successor count of the child (0 for a leaf).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn child_domain(&self) -> &[VnExpr] {
        &self.child_domain
    }

    pub fn parent_domains(&self) -> &[Vec<VExpr>] {
        &self.parent_domains
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn width(&self) -> usize {
        self.child_domain.len()
    }

    pub fn row(&self, ri: usize) -> &[f64] {
        let w = self.width();
        &self.probs[ri * w..(ri + 1) * w]
    }

    /// Row index for parent values given as positions in their domains.
    pub fn row_index(&self, cfg: &[usize]) -> usize {
        cfg.iter().zip(&self.strides).map(|(x, s)| x * s).sum()
    }

    pub fn row_config(&self, ri: usize) -> Vec<usize> {
        self.parent_domains
            .iter()
            .zip(&self.strides)
            .map(|(d, s)| (ri / s) % d.len())
            .collect()
    }

    pub fn prob(&self, cfg: &[VExpr], child: &VnExpr) -> Result<f64> {
        if cfg.len() != self.parent_domains.len() {
            return Err(Error::Shape(format!("expected {} parent values", self.parent_domains.len())));
        }
        let mut pos = Vec::with_capacity(cfg.len());
        for (v, d) in cfg.iter().zip(&self.parent_domains) {
            pos.push(d.iter().position(|x| x == v).ok_or_else(|| {
                Error::OutOfRange("parent value outside its extended domain".into())
            })?);
        }
        let ci = self
            .child_domain
            .iter()
            .position(|x| x == child)
            .ok_or_else(|| Error::OutOfRange("child value outside its extended domain".into()))?;
        Ok(self.row(self.row_index(&pos))[ci])
    }

    pub fn format_config(&self, ri: usize) -> Vec<String> {
        self.row_config(ri)
            .iter()
            .enumerate()
            .map(|(l, &x)| self.parent_domains[l][x].format(&self.parents()[l]))
            .collect()
    }

    pub fn label(&self, ri: usize, ci: usize) -> String {
        probability_label(&self.child_domain[ci].format(self.child()), &self.format_config(ri))
    }

    fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.width();
        self.probs.iter().enumerate().map(move |(i, v)| (i / w, i % w, *v))
    }

    pub(crate) fn first_negative(&self) -> Result<()> {
        first_negative(&self.k, self.entries(), |ri, ci| self.label(ri, ci))
    }

    fn clamp(&mut self) {
        for v in &mut self.probs {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.probs.iter().all(|v| *v >= -NEG_CLAMP)
    }

    /// CSV: one column per parent, the child, then `p` with 9 decimals.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.parents().iter().map(|f| f.name().to_string()).collect();
        header.push(self.child().name().to_string());
        header.push("p".into());
        w.write_record(&header)?;
        let child_text: Vec<String> =
            self.child_domain.iter().map(|x| x.format(self.child())).collect();
        for ri in 0..self.row_count {
            let cfg = self.format_config(ri);
            for (ci, p) in self.row(ri).iter().enumerate() {
                let mut rec = cfg.clone();
                rec.push(child_text[ci].clone());
                rec.push(format_prob(*p));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn format_prob(p: f64) -> String {
    let s = format!("{p:.9}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

/// Negative entries, row sums, MY-class aggregation against K, equal family
/// splits, `⊙` rows equal to their `SU` rows, and the `⊗` averaging identity.
pub fn check_feasibility(cpt: &ExtCpt) -> ValidationReport {
    let mut report = ValidationReport::new();
    let node = cpt.child().name();
    for (ri, ci, v) in cpt.entries() {
        if v < -NEG_CLAMP {
            report.error(format!("{node}: {} = {v:.9} is negative", cpt.label(ri, ci)));
        }
    }
    for ri in 0..cpt.row_count {
        let sum: f64 = cpt.row(ri).iter().sum();
        if (sum - 1.0).abs() > COMPUTED_TOL {
            report.error(format!(
                "{node}: row [{}] sums to {sum:.12}",
                cpt.format_config(ri).join(",")
            ));
        }
    }

    let domains = &cpt.parent_domains;
    let index: Vec<HashMap<VExpr, usize>> = domains.iter().map(|d| index_of(d)).collect();
    let k = &cpt.k;
    for ri in 0..cpt.row_count {
        let cfg = cpt.row_config(ri);
        let vals: Vec<&VExpr> = cfg.iter().enumerate().map(|(l, &x)| &domains[l][x]).collect();
        let row = cpt.row(ri);
        let label = || cpt.format_config(ri).join(",");

        if vals.iter().all(|v| v.is_base()) {
            let masks: Vec<SubsetMask> = vals.iter().map(|v| v.my()).collect();
            let kci = k.config_index(&masks).expect("plain configuration");
            for s in cpt.child().subsets() {
                let class: f64 = cpt
                    .child_domain
                    .iter()
                    .zip(row)
                    .filter(|(x, _)| x.my() == s)
                    .map(|(_, p)| p)
                    .sum();
                let kv = k.row(kci)[s.dense_index()];
                if (class - kv).abs() > COMPUTED_TOL {
                    report.error(format!(
                        "{node}: MY-class {} at [{}] sums to {class:.12}, K = {kv:.12}",
                        cpt.child().format_subset(s),
                        label()
                    ));
                }
            }
            let mut split: HashMap<(SubsetMask, &VExpr), f64> = HashMap::new();
            for (x, p) in cpt.child_domain.iter().zip(row) {
                if let Some(su) = x.su() {
                    let first = *split.entry((x.my(), su)).or_insert(*p);
                    if (first - p).abs() > COMPUTED_TOL {
                        report.error(format!(
                            "{node}: unequal family split at [{}] for {}",
                            label(),
                            x.format(cpt.child())
                        ));
                    }
                }
            }
        }

        let with = |l: usize, to: &VExpr| {
            let mut c = cfg.clone();
            c[l] = index[l][to];
            cpt.row_index(&c)
        };
        for (l, v) in vals.iter().enumerate() {
            if v.op() == Some(Op::Dot) {
                let other = cpt.row(with(l, v.su().expect("compound")));
                if other != row {
                    report.error(format!("{node}: ⊙ row [{}] differs from its SU row", label()));
                }
            }
        }

        let at: Vec<usize> =
            (0..vals.len()).filter(|&l| vals[l].op() == Some(Op::At)).collect();
        if !at.is_empty() {
            let mut all_my = cfg.clone();
            for &l in &at {
                all_my[l] = index[l][&VExpr::Base(vals[l].my())];
            }
            let target = cpt.row(cpt.row_index(&all_my));
            let mut mean = vec![0.0; cpt.width()];
            let choices = 1usize << at.len();
            for choice in 0..choices {
                let mut c = cfg.clone();
                for (b, &l) in at.iter().enumerate() {
                    if choice & (1 << b) != 0 {
                        c[l] = index[l][vals[l].su().expect("compound")];
                    }
                }
                for (m, p) in mean.iter_mut().zip(cpt.row(cpt.row_index(&c))) {
                    *m += p / choices as f64;
                }
            }
            if mean.iter().zip(target).any(|(a, b)| (a - b).abs() > COMPUTED_TOL) {
                report.error(format!("{node}: ⊗ averaging identity fails at [{}]", label()));
            }
        }
    }
    report
}

/// CPTs for every node (indexed by variable), built in topological order.
/// The structure must satisfy the parent restriction.
pub fn build_network(net: &Network) -> Result<Vec<ExtCpt>> {
    let report = validate_structure(net);
    if !report.is_ok() {
        return Err(Error::Structure(
            report.errors().map(|i| i.message.clone()).collect::<Vec<_>>().join("; "),
        ));
    }
    let mut out: Vec<Option<ExtCpt>> = vec![None; net.len()];
    for &j in net.topological_order() {
        let k = net.k_table(j)?;
        out[j] = Some(build(&k, net.successor_count(j))?);
    }
    Ok(out.into_iter().map(|c| c.expect("every node visited")).collect())
}

/// Like [`build_network`] but keeps infeasible tables.
pub fn construct_network(net: &Network) -> Result<Vec<ExtCpt>> {
    let report = validate_structure(net);
    if !report.is_ok() {
        return Err(Error::Structure(
            report.errors().map(|i| i.message.clone()).collect::<Vec<_>>().join("; "),
        ));
    }
    (0..net.len()).map(|j| construct(&net.k_table(j)?, net.successor_count(j))).collect()
}
