//! Frames, subset masks and conditional mass / K tables.
//!
//! A conditional table stores one real per pair (conditioning configuration,
//! child subset), where a configuration assigns one nonempty subset to each
//! parent frame. Only product-form focal elements are representable.
//!
//! The K transform sums, for a fixed child subset, the masses of every
//! configuration that is coordinatewise a superset of the given one. Its
//! inverse is the Möbius inversion over the same product lattice.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::report::ValidationReport;

/// Largest frame that a [`SubsetMask`] can address.
pub const MAX_FRAME_SIZE: usize = 16;

/// Upper bound on stored table cells.
pub const MAX_TABLE_CELLS: usize = 10_000_000;

/// Negative values down to this magnitude are treated as rounding noise and clamped to zero.
pub const NEG_CLAMP: f64 = 1e-12;

/// Row-sum tolerance when comparing against 6-significant-digit inputs.
pub const PRINTED_TOL: f64 = 1e-6;

/// Row-sum tolerance for tables computed from exact inputs.
pub const COMPUTED_TOL: f64 = 1e-9;

/// The ordered value set of one variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Frame {
    name: String,
    labels: Vec<String>,
}

fn valid_ident(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '\''))
}

impl Frame {
    pub fn new<S: Into<String>, L: Into<String>>(
        name: S,
        labels: impl IntoIterator<Item = L>,
    ) -> Result<Self> {
        let name = name.into();
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if !valid_ident(&name) {
            return Err(Error::Frame(format!("invalid variable name `{name}`")));
        }
        if labels.is_empty() {
            return Err(Error::Frame(format!("variable {name} has no values")));
        }
        if labels.len() > MAX_FRAME_SIZE {
            return Err(Error::Frame(format!(
                "variable {name} has {} values, at most {MAX_FRAME_SIZE} supported",
                labels.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if !valid_ident(l) {
                return Err(Error::Frame(format!("invalid value label `{l}` for {name}")));
            }
            if labels[..i].contains(l) {
                return Err(Error::DuplicateLabel { var: name, label: l.clone() });
            }
        }
        Ok(Frame { name, labels })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn full(&self) -> SubsetMask {
        SubsetMask(((1u64 << self.len()) - 1) as u32)
    }

    /// Number of nonempty subsets, `2^|frame| - 1`.
    pub fn subset_count(&self) -> usize {
        (1usize << self.len()) - 1
    }

    /// Nonempty subsets in canonical order: by size, then lexicographically in frame order.
    pub fn subsets(&self) -> Vec<SubsetMask> {
        let mut out: Vec<SubsetMask> =
            (1..=self.full().bits()).map(SubsetMask).collect();
        out.sort_by(SubsetMask::canonical_cmp);
        out
    }

    /// Proper nonempty subsets of `mask`, canonical order.
    pub fn proper_subsets(&self, mask: SubsetMask) -> Vec<SubsetMask> {
        let mut out = Vec::new();
        let m = mask.bits();
        let mut sub = (m.wrapping_sub(1)) & m;
        while sub != 0 {
            out.push(SubsetMask(sub));
            sub = (sub - 1) & m;
        }
        out.sort_by(SubsetMask::canonical_cmp);
        out
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Parses a literal such as `{a,b}`.
    pub fn parse_subset(&self, text: &str) -> Result<SubsetMask> {
        let t = text.trim();
        let inner = t
            .strip_prefix('{')
            .and_then(|r| r.strip_suffix('}'))
            .ok_or_else(|| Error::Syntax(t.to_string()))?;
        if inner.trim().is_empty() {
            return Err(Error::EmptySubset { var: self.name.clone() });
        }
        let mut bits = 0u32;
        for label in inner.split(',') {
            let label = label.trim();
            let i = self.label_index(label).ok_or_else(|| Error::UnknownLabel {
                var: self.name.clone(),
                label: label.to_string(),
            })?;
            if bits & (1 << i) != 0 {
                return Err(Error::DuplicateLabel {
                    var: self.name.clone(),
                    label: label.to_string(),
                });
            }
            bits |= 1 << i;
        }
        Ok(SubsetMask(bits))
    }

    /// Canonical literal, members in frame order.
    pub fn format_subset(&self, mask: SubsetMask) -> String {
        let members: Vec<&str> =
            mask.members().map(|i| self.labels[i].as_str()).collect();
        format!("{{{}}}", members.join(","))
    }

    pub fn contains_mask(&self, mask: SubsetMask) -> bool {
        mask.bits() & !self.full().bits() == 0
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} : {}", self.name, self.labels.join(" "))
    }
}

/// A nonempty subset of one frame's values, one bit per value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetMask(u32);

impl SubsetMask {
    pub fn from_bits(bits: u32) -> Option<Self> {
        (bits != 0).then_some(SubsetMask(bits))
    }

    pub fn singleton(index: usize) -> Self {
        SubsetMask(1 << index)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn contains(self, index: usize) -> bool {
        self.0 & (1 << index) != 0
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&i| self.0 & (1 << i) != 0)
    }

    pub fn is_subset_of(self, other: SubsetMask) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_proper_subset_of(self, other: SubsetMask) -> bool {
        self.is_subset_of(other) && self != other
    }

    /// `None` when the intersection is empty.
    pub fn intersect(self, other: SubsetMask) -> Option<SubsetMask> {
        SubsetMask::from_bits(self.0 & other.0)
    }

    /// Dense position among the nonempty subsets (`bits - 1`).
    pub fn dense_index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_dense_index(i: usize) -> Self {
        SubsetMask(i as u32 + 1)
    }

    pub fn canonical_cmp(&self, other: &SubsetMask) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| {
            // Same size: compare member lists lexicographically.
            let a: Vec<usize> = self.members().collect();
            let b: Vec<usize> = other.members().collect();
            a.cmp(&b)
        })
    }
}

/// A product-form focal element: one subset per in-scope variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProductFocal(pub Vec<SubsetMask>);

impl ProductFocal {
    /// Coordinatewise intersection; `None` if any coordinate is empty.
    pub fn intersect(&self, other: &ProductFocal) -> Option<ProductFocal> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.intersect(*b))
            .collect::<Option<Vec<_>>>()
            .map(ProductFocal)
    }

    pub fn project(&self, coords: &[usize]) -> ProductFocal {
        ProductFocal(coords.iter().map(|&i| self.0[i]).collect())
    }

    pub fn format(&self, frames: &[Frame]) -> Vec<String> {
        self.0.iter().zip(frames).map(|(m, f)| f.format_subset(*m)).collect()
    }
}

/// Shape and values shared by mass and K tables.
#[derive(Debug, Clone, PartialEq)]
pub struct CondTable {
    child: Frame,
    parents: Vec<Frame>,
    // radix of each parent coordinate and its stride in configuration index space
    strides: Vec<usize>,
    config_count: usize,
    values: Vec<f64>,
}

impl CondTable {
    pub fn zeros(child: Frame, parents: Vec<Frame>) -> Result<Self> {
        let mut names = vec![child.name()];
        for p in &parents {
            if names.contains(&p.name()) {
                return Err(Error::Shape(format!("variable {} appears twice", p.name())));
            }
            names.push(p.name());
        }
        let mut config_count = 1usize;
        let mut strides = vec![0; parents.len()];
        for (i, p) in parents.iter().enumerate().rev() {
            strides[i] = config_count;
            config_count = config_count
                .checked_mul(p.subset_count())
                .filter(|&c| c <= MAX_TABLE_CELLS)
                .ok_or_else(|| Error::TooLarge("conditioning space".into()))?;
        }
        let cells = config_count
            .checked_mul(child.subset_count())
            .filter(|&c| c <= MAX_TABLE_CELLS)
            .ok_or_else(|| Error::TooLarge("table cells".into()))?;
        Ok(CondTable { child, parents, strides, config_count, values: vec![0.0; cells] })
    }

    pub fn from_fn(
        child: Frame,
        parents: Vec<Frame>,
        mut f: impl FnMut(&[SubsetMask], SubsetMask) -> f64,
    ) -> Result<Self> {
        let mut t = Self::zeros(child, parents)?;
        let nc = t.child.subset_count();
        for ci in 0..t.config_count {
            let cfg = t.config_at(ci);
            for k in 0..nc {
                t.values[ci * nc + k] = f(&cfg, SubsetMask::from_dense_index(k));
            }
        }
        Ok(t)
    }

    pub fn child(&self) -> &Frame {
        &self.child
    }

    pub fn parents(&self) -> &[Frame] {
        &self.parents
    }

    pub fn config_count(&self) -> usize {
        self.config_count
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Configuration stored at dense index `ci`.
    pub fn config_at(&self, ci: usize) -> Vec<SubsetMask> {
        self.parents
            .iter()
            .zip(&self.strides)
            .map(|(p, &s)| SubsetMask::from_dense_index((ci / s) % p.subset_count()))
            .collect()
    }

    pub fn config_index(&self, cfg: &[SubsetMask]) -> Result<usize> {
        if cfg.len() != self.parents.len() {
            return Err(Error::Shape(format!(
                "configuration has {} coordinates, table has {} parents",
                cfg.len(),
                self.parents.len()
            )));
        }
        let mut ci = 0;
        for ((m, p), &s) in cfg.iter().zip(&self.parents).zip(&self.strides) {
            if !p.contains_mask(*m) {
                return Err(Error::Shape(format!("subset outside frame of {}", p.name())));
            }
            ci += m.dense_index() * s;
        }
        Ok(ci)
    }

    /// All configurations in canonical order (each coordinate in canonical subset order).
    pub fn canonical_configs(&self) -> Vec<Vec<SubsetMask>> {
        let mut out: Vec<Vec<SubsetMask>> = vec![Vec::new()];
        for p in &self.parents {
            let subs = p.subsets();
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    subs.iter().map(move |s| {
                        let mut v = prefix.clone();
                        v.push(*s);
                        v
                    })
                })
                .collect();
        }
        out
    }

    pub fn get(&self, cfg: &[SubsetMask], child: SubsetMask) -> Result<f64> {
        let ci = self.config_index(cfg)?;
        self.check_child(child)?;
        Ok(self.values[ci * self.child.subset_count() + child.dense_index()])
    }

    pub fn set(&mut self, cfg: &[SubsetMask], child: SubsetMask, value: f64) -> Result<()> {
        let ci = self.config_index(cfg)?;
        self.check_child(child)?;
        let nc = self.child.subset_count();
        self.values[ci * nc + child.dense_index()] = value;
        Ok(())
    }

    fn check_child(&self, child: SubsetMask) -> Result<()> {
        if self.child.contains_mask(child) {
            Ok(())
        } else {
            Err(Error::Shape(format!("subset outside frame of {}", self.child.name())))
        }
    }

    /// Values for one configuration, indexed by child dense index.
    pub fn row(&self, ci: usize) -> &[f64] {
        let nc = self.child.subset_count();
        &self.values[ci * nc..(ci + 1) * nc]
    }

    pub fn row_sum(&self, ci: usize) -> f64 {
        self.row(ci).iter().sum()
    }

    pub fn format_config(&self, cfg: &[SubsetMask]) -> String {
        cfg.iter()
            .zip(&self.parents)
            .map(|(m, p)| p.format_subset(*m))
            .collect::<Vec<_>>()
            .join(",")
    }

    fn is_full_config(&self, ci: usize) -> bool {
        self.config_at(ci).iter().zip(&self.parents).all(|(m, p)| *m == p.full())
    }

    /// Superset sum (`sign = 1`) or Möbius inversion (`sign = -1`) along every
    /// parent coordinate.
    fn superset_transform(&mut self, sign: f64) {
        let nc = self.child.subset_count();
        for (i, p) in self.parents.iter().enumerate() {
            let stride = self.strides[i];
            let radix = p.subset_count();
            for b in 0..p.len() {
                let bit = 1u32 << b;
                for ci in 0..self.config_count {
                    let mask = ((ci / stride) % radix) as u32 + 1;
                    if mask & bit != 0 {
                        continue;
                    }
                    let other = ci + bit as usize * stride;
                    for k in 0..nc {
                        let add = self.values[other * nc + k];
                        self.values[ci * nc + k] += sign * add;
                    }
                }
            }
        }
    }
}

/// Conditional mass function `m(child | configuration)`; values may be negative.
#[derive(Debug, Clone, PartialEq)]
pub struct CondMassTable(CondTable);

impl CondMassTable {
    pub fn new(table: CondTable) -> Result<Self> {
        if let Some(v) = table.values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Shape(format!("non-finite mass {v}")));
        }
        Ok(CondMassTable(table))
    }

    pub fn table(&self) -> &CondTable {
        &self.0
    }

    pub fn into_table(self) -> CondTable {
        self.0
    }
}

impl std::ops::Deref for CondMassTable {
    type Target = CondTable;
    fn deref(&self) -> &CondTable {
        &self.0
    }
}

/// Conditional K function; nonnegative everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct CondKTable(CondTable);

impl CondKTable {
    /// Clamps values in `[-NEG_CLAMP, 0)` to zero and rejects anything more negative.
    pub fn new(mut table: CondTable) -> Result<Self> {
        let nc = table.child.subset_count();
        for idx in 0..table.values.len() {
            let v = table.values[idx];
            if !v.is_finite() || v < -NEG_CLAMP {
                let cfg = table.config_at(idx / nc);
                return Err(Error::NotKRepresentable {
                    cfg: table.format_config(&cfg),
                    child: table.child.format_subset(SubsetMask::from_dense_index(idx % nc)),
                    value: v,
                });
            }
            if v < 0.0 {
                table.values[idx] = 0.0;
            }
        }
        Ok(CondKTable(table))
    }

    pub fn table(&self) -> &CondTable {
        &self.0
    }

    pub fn into_table(self) -> CondTable {
        self.0
    }
}

impl std::ops::Deref for CondKTable {
    type Target = CondTable;
    fn deref(&self) -> &CondTable {
        &self.0
    }
}

/// `K(child | cfg) = Σ m(child | cfg')` over every `cfg'` that is coordinatewise a superset of `cfg`.
pub fn m_to_k(m: &CondMassTable) -> Result<CondKTable> {
    let mut t = m.0.clone();
    t.superset_transform(1.0);
    CondKTable::new(t)
}

/// Inverse of [`m_to_k`].
pub fn k_to_m(k: &CondKTable) -> CondMassTable {
    let mut t = k.0.clone();
    t.superset_transform(-1.0);
    CondMassTable(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Mass,
    K,
}

fn exceeds(deviation: f64, tol: f64) -> bool {
    // slack absorbs the binary representation of decimal inputs
    deviation.abs() - tol > 1e-12
}

/// Checks a raw table of the given kind. Mass-table row sums that break the
/// "1 when every conditioning coordinate is full, else 0" convention are
/// warnings only.
pub fn validate_tables(t: &CondTable, kind: TableKind) -> ValidationReport {
    let mut report = ValidationReport::new();
    let var = t.child().name();
    match kind {
        TableKind::K => {
            for ci in 0..t.config_count() {
                let cfg = t.format_config(&t.config_at(ci));
                let sum = t.row_sum(ci);
                if exceeds(sum - 1.0, PRINTED_TOL) {
                    report.error(format!(
                        "K row of {var} at [{cfg}] sums to {sum:.9}, expected 1"
                    ));
                }
                for (k, v) in t.row(ci).iter().enumerate() {
                    if *v < -NEG_CLAMP {
                        let child = t.child().format_subset(SubsetMask::from_dense_index(k));
                        report.error(format!("K({child}|{cfg}) of {var} is negative: {v:.9}"));
                    }
                }
            }
        }
        TableKind::Mass => {
            let mass = CondMassTable(t.clone());
            if let Err(e) = m_to_k(&mass) {
                report.error(format!("mass table of {var}: {e}"));
            }
            for ci in 0..t.config_count() {
                let expected = if t.is_full_config(ci) { 1.0 } else { 0.0 };
                let sum = t.row_sum(ci);
                if exceeds(sum - expected, PRINTED_TOL) {
                    let cfg = t.format_config(&t.config_at(ci));
                    report.warning(format!(
                        "mass row of {var} at [{cfg}] sums to {sum:.9}, convention expects {expected}"
                    ));
                }
            }
        }
    }
    report
}
