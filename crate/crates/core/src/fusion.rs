//! Unnormalized conjunctive combination over product frames.
//!
//! Masses that land on a focal element with an empty coordinate are collected
//! in [`JointMass::empty_mass`] and never redistributed.

use std::collections::BTreeMap;
use std::io::Write;

use crate::cpt::format_prob;
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::tables::{CondMassTable, Frame, ProductFocal, NEG_CLAMP};

/// Combination aborts when the number of focal pairs reaches this.
pub const MAX_FOCAL_PAIRS: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct JointMass {
    scope: Vec<Frame>,
    masses: BTreeMap<ProductFocal, f64>,
    empty_mass: f64,
}

impl JointMass {
    pub fn new(scope: Vec<Frame>, masses: BTreeMap<ProductFocal, f64>) -> Self {
        JointMass { scope, masses, empty_mass: 0.0 }
    }

    /// All mass on the full product.
    pub fn vacuous(scope: Vec<Frame>) -> Self {
        let full = ProductFocal(scope.iter().map(Frame::full).collect());
        JointMass { scope, masses: BTreeMap::from([(full, 1.0)]), empty_mass: 0.0 }
    }

    pub fn scope(&self) -> &[Frame] {
        &self.scope
    }

    pub fn masses(&self) -> &BTreeMap<ProductFocal, f64> {
        &self.masses
    }

    pub fn empty_mass(&self) -> f64 {
        self.empty_mass
    }

    pub fn get(&self, focal: &ProductFocal) -> f64 {
        self.masses.get(focal).copied().unwrap_or(0.0)
    }

    /// Sum over nonempty focal elements.
    pub fn focal_total(&self) -> f64 {
        self.masses.values().sum()
    }

    pub fn total(&self) -> f64 {
        self.focal_total() + self.empty_mass
    }

    /// Looks a focal element up by its subset literals, one per scope variable.
    pub fn get_by_labels(&self, literals: &[&str]) -> Result<f64> {
        if literals.len() != self.scope.len() {
            return Err(Error::Scope(format!(
                "{} literals for a scope of {}",
                literals.len(),
                self.scope.len()
            )));
        }
        let focal = literals
            .iter()
            .zip(&self.scope)
            .map(|(l, f)| f.parse_subset(l))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.get(&ProductFocal(focal)))
    }

    /// Entries below `-NEG_CLAMP`.
    pub fn negative_entries(&self) -> Vec<(ProductFocal, f64)> {
        self.masses
            .iter()
            .filter(|(_, v)| **v < -NEG_CLAMP)
            .map(|(k, v)| (k.clone(), *v))
            .collect()
    }

    /// Rows sorted by the printed subset literals; `|mass| <= NEG_CLAMP` is omitted.
    pub fn rows(&self) -> Vec<(Vec<String>, f64)> {
        let mut rows: Vec<(Vec<String>, f64)> = self
            .masses
            .iter()
            .filter(|(_, v)| v.abs() > NEG_CLAMP)
            .map(|(k, v)| (k.format(&self.scope), *v))
            .collect();
        rows.sort_by(|a, b| a.0.cmp(&b.0));
        rows
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = self.scope.iter().map(|f| f.name().to_string()).collect();
        header.push("mass".into());
        w.write_record(&header)?;
        for (mut cells, v) in self.rows() {
            cells.push(format_prob(v));
            w.write_record(&cells)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Extends a conditional table to `scope`: every (configuration, child subset)
/// becomes a product focal element with full sets on the other variables.
pub fn cylindrical_extension(t: &CondMassTable, scope: &[Frame]) -> Result<JointMass> {
    let locate = |f: &Frame| {
        scope.iter().position(|g| g == f).ok_or_else(|| {
            Error::Scope(format!("variable {} is not in the target scope", f.name()))
        })
    };
    let child_pos = locate(t.child())?;
    let parent_pos: Vec<usize> = t.parents().iter().map(locate).collect::<Result<_>>()?;
    let mut masses = BTreeMap::new();
    for ci in 0..t.config_count() {
        let cfg = t.config_at(ci);
        for (k, v) in t.row(ci).iter().enumerate() {
            if *v == 0.0 {
                continue;
            }
            let mut focal: Vec<_> = scope.iter().map(Frame::full).collect();
            for (m, &p) in cfg.iter().zip(&parent_pos) {
                focal[p] = *m;
            }
            focal[child_pos] = crate::tables::SubsetMask::from_dense_index(k);
            *masses.entry(ProductFocal(focal)).or_insert(0.0) += v;
        }
    }
    Ok(JointMass { scope: scope.to_vec(), masses, empty_mass: 0.0 })
}

/// `p ⊕ q` without normalization. Focal pairs are visited in a fixed order,
/// so results are bit-stable.
pub fn conjunctive_combine(p: &JointMass, q: &JointMass) -> Result<JointMass> {
    if p.scope != q.scope {
        return Err(Error::Scope("operands have different scopes".into()));
    }
    let pairs = p.masses.len().saturating_mul(q.masses.len());
    if pairs >= MAX_FOCAL_PAIRS {
        return Err(Error::TooLarge(format!("{pairs} focal pairs")));
    }
    let mut masses = BTreeMap::new();
    let mut empty = p.empty_mass * q.total() + p.focal_total() * q.empty_mass;
    for (a, x) in &p.masses {
        for (b, y) in &q.masses {
            match a.intersect(b) {
                Some(c) => *masses.entry(c).or_insert(0.0) += x * y,
                None => empty += x * y,
            }
        }
    }
    Ok(JointMass { scope: p.scope.clone(), masses, empty_mass: empty })
}

/// Entries of a joint below `-NEG_CLAMP`.
#[derive(Debug, Clone, PartialEq)]
pub struct NegativityReport {
    pub entries: Vec<(ProductFocal, f64)>,
}

impl NegativityReport {
    pub fn is_proper(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Left fold of [`conjunctive_combine`] over every node table, in topological order.
pub fn network_joint(net: &Network) -> Result<(JointMass, NegativityReport)> {
    let scope = net.frames().to_vec();
    let mut acc: Option<JointMass> = None;
    for &j in net.topological_order() {
        let ext = cylindrical_extension(&net.mass_table(j)?, &scope)?;
        acc = Some(match acc {
            None => ext,
            Some(prev) => conjunctive_combine(&prev, &ext)?,
        });
    }
    let joint = acc.unwrap_or_else(|| JointMass::vacuous(scope));
    let report = NegativityReport { entries: joint.negative_entries() };
    Ok((joint, report))
}
