//! Network definitions: parsing, structural checks and ordering.
//!
//! File format (line oriented, `#` starts a comment):
//!
//! ```text
//! net NAME
//! var X1 : a b
//! var X2 : a b
//! edge X1 -> X2
//! table X1 | kind=m
//!   {a} : 0.4
//!   {b} : 0.4
//!   {a,b} : 0.2
//! end
//! table X2 | X1 kind=m          # kind=m (mass) or kind=k
//!   {a} | {a} : 0.166667       # child subset | parent subsets : value
//!   ...
//! end
//! ```
//!
//! Rows left out of a table are zero. Parent subsets in a row follow the
//! order of the parents in the table header.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::report::ValidationReport;
use crate::tables::{
    k_to_m, m_to_k, validate_tables, CondKTable, CondMassTable, CondTable, Frame, SubsetMask,
    TableKind,
};

/// The table attached to one node, conditioned on `parents` (variable indices, header order).
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    pub kind: TableKind,
    pub parents: Vec<usize>,
    pub table: CondTable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    name: String,
    frames: Vec<Frame>,
    edges: Vec<(usize, usize)>,
    tables: Vec<NodeTable>,
    successors: Vec<Vec<usize>>,
    order: Vec<usize>,
}

impl Network {
    /// `tables[j]` belongs to variable `j`. Edges keep their declaration order,
    /// which fixes each node's successor list.
    pub fn new(
        name: impl Into<String>,
        frames: Vec<Frame>,
        edges: Vec<(usize, usize)>,
        tables: Vec<NodeTable>,
    ) -> Result<Self> {
        let v = frames.len();
        for (i, f) in frames.iter().enumerate() {
            if frames[..i].iter().any(|g| g.name() == f.name()) {
                return Err(Error::Structure(format!("variable {} declared twice", f.name())));
            }
        }
        let mut successors = vec![Vec::new(); v];
        let mut parent_sets = vec![BTreeSet::new(); v];
        for &(p, c) in &edges {
            if p >= v || c >= v {
                return Err(Error::Structure(format!("edge {p} -> {c} out of range")));
            }
            if successors[p].contains(&c) {
                return Err(Error::Structure(format!(
                    "duplicate edge {} -> {}",
                    frames[p].name(),
                    frames[c].name()
                )));
            }
            successors[p].push(c);
            parent_sets[c].insert(p);
        }
        if tables.len() != v {
            return Err(Error::Structure(format!("{} tables for {v} variables", tables.len())));
        }
        for (j, t) in tables.iter().enumerate() {
            let declared: BTreeSet<usize> = t.parents.iter().copied().collect();
            if declared != parent_sets[j] || declared.len() != t.parents.len() {
                return Err(Error::Structure(format!(
                    "table of {} is conditioned on [{}], edges give [{}]",
                    frames[j].name(),
                    names(&frames, t.parents.iter().copied()),
                    names(&frames, parent_sets[j].iter().copied())
                )));
            }
            let shape_ok = t.table.child() == &frames[j]
                && t.table.parents().len() == t.parents.len()
                && t.table.parents().iter().zip(&t.parents).all(|(f, &p)| f == &frames[p]);
            if !shape_ok {
                return Err(Error::Shape(format!(
                    "table of {} does not match the declared frames",
                    frames[j].name()
                )));
            }
        }
        let order = kahn_order(v, &edges).map_err(|stuck| {
            Error::Cycle(names(&frames, stuck.into_iter()))
        })?;
        Ok(Network { name: name.into(), frames, edges, tables, successors, order })
    }

    pub fn parse(text: &str) -> Result<Self> {
        parse_network(text)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn frame(&self, j: usize) -> &Frame {
        &self.frames[j]
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.frames.iter().position(|f| f.name() == name)
    }

    pub fn variable_names(&self) -> Vec<String> {
        self.frames.iter().map(|f| f.name().to_string()).collect()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn table(&self, j: usize) -> &NodeTable {
        &self.tables[j]
    }

    /// Parents of `j` in table-header order.
    pub fn parents(&self, j: usize) -> &[usize] {
        &self.tables[j].parents
    }

    /// Successors of `j` in edge declaration order.
    pub fn successors(&self, j: usize) -> &[usize] {
        &self.successors[j]
    }

    pub fn successor_count(&self, j: usize) -> usize {
        self.successors[j].len()
    }

    /// Parents before children; ties broken by declaration order.
    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    /// 1-based position of `child` among the successors of `parent`.
    pub fn edge_index(&self, parent: usize, child: usize) -> Result<usize> {
        self.successors
            .get(parent)
            .and_then(|s| s.iter().position(|&c| c == child))
            .map(|i| i + 1)
            .ok_or_else(|| Error::NoSuchEdge {
                parent: self.frames.get(parent).map_or("?".into(), |f| f.name().into()),
                child: self.frames.get(child).map_or("?".into(), |f| f.name().into()),
            })
    }

    pub fn mass_table(&self, j: usize) -> Result<CondMassTable> {
        let t = &self.tables[j];
        match t.kind {
            TableKind::Mass => CondMassTable::new(t.table.clone()),
            TableKind::K => Ok(k_to_m(&CondKTable::new(t.table.clone())?)),
        }
    }

    pub fn k_table(&self, j: usize) -> Result<CondKTable> {
        let t = &self.tables[j];
        match t.kind {
            TableKind::Mass => m_to_k(&CondMassTable::new(t.table.clone())?),
            TableKind::K => CondKTable::new(t.table.clone()),
        }
    }

    /// Same network with every table converted to `kind`.
    pub fn convert_tables(&self, kind: TableKind) -> Result<Network> {
        let mut net = self.clone();
        for j in 0..net.len() {
            if net.tables[j].kind == kind {
                continue;
            }
            let table = match kind {
                TableKind::K => self.k_table(j)?.into_table(),
                TableKind::Mass => self.mass_table(j)?.into_table(),
            };
            net.tables[j] = NodeTable { kind, parents: net.tables[j].parents.clone(), table };
        }
        Ok(net)
    }

    /// Canonical text form; every table row is written, zeros included.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "net {}", self.name);
        for f in &self.frames {
            let _ = writeln!(s, "var {f}");
        }
        for &(p, c) in &self.edges {
            let _ = writeln!(s, "edge {} -> {}", self.frames[p].name(), self.frames[c].name());
        }
        for &j in &self.order {
            let t = &self.tables[j];
            let kind = match t.kind {
                TableKind::Mass => "m",
                TableKind::K => "k",
            };
            let header_parents: String =
                t.parents.iter().map(|&p| format!("{} ", self.frames[p].name())).collect();
            let _ = writeln!(s, "\ntable {} | {}kind={kind}", self.frames[j].name(), header_parents);
            for cfg in t.table.canonical_configs() {
                let cfg_text: Vec<String> = cfg
                    .iter()
                    .zip(t.table.parents())
                    .map(|(m, f)| f.format_subset(*m))
                    .collect();
                for child in self.frames[j].subsets() {
                    let v = t.table.get(&cfg, child).expect("canonical configuration");
                    let child_text = self.frames[j].format_subset(child);
                    if cfg.is_empty() {
                        let _ = writeln!(s, "  {child_text} : {v}");
                    } else {
                        let _ = writeln!(s, "  {child_text} | {} : {v}", cfg_text.join(" "));
                    }
                }
            }
            s.push_str("end\n");
        }
        s
    }
}

fn names(frames: &[Frame], idx: impl Iterator<Item = usize>) -> String {
    idx.map(|i| frames[i].name().to_string()).collect::<Vec<_>>().join(", ")
}

/// Kahn's algorithm taking the lowest-index ready node first. On a cycle,
/// returns the nodes that could not be ordered.
fn kahn_order(v: usize, edges: &[(usize, usize)]) -> std::result::Result<Vec<usize>, Vec<usize>> {
    let mut indeg = vec![0usize; v];
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); v];
    for &(p, c) in edges {
        indeg[c] += 1;
        out[p].push(c);
    }
    let mut ready: BTreeSet<usize> = (0..v).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(v);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &c in &out[i] {
            indeg[c] -= 1;
            if indeg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() == v {
        Ok(order)
    } else {
        Err((0..v).filter(|&i| indeg[i] > 0).collect())
    }
}

/// Cycles, and nodes with two parents joined by an edge.
pub fn validate_structure(net: &Network) -> ValidationReport {
    let mut report = ValidationReport::new();
    if let Err(stuck) = kahn_order(net.len(), net.edges()) {
        report.error(format!("cycle through {}", names(net.frames(), stuck.into_iter())));
    }
    for j in 0..net.len() {
        let ps = net.parents(j);
        for (a, &u) in ps.iter().enumerate() {
            for &w in &ps[a + 1..] {
                if net.successors(u).contains(&w) || net.successors(w).contains(&u) {
                    report.error(format!(
                        "parents {} and {} of {} are directly connected",
                        net.frame(u).name(),
                        net.frame(w).name(),
                        net.frame(j).name()
                    ));
                }
            }
        }
    }
    report
}

/// Structure plus every node table.
pub fn validate_network(net: &Network) -> ValidationReport {
    let mut report = validate_structure(net);
    for j in 0..net.len() {
        let t = net.table(j);
        report.merge(validate_tables(&t.table, t.kind));
    }
    report
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Splits `{a} {a,b}` into its brace groups.
fn split_literals(s: &str, line: usize) -> Result<Vec<&str>> {
    let mut out = Vec::new();
    let mut rest = s.trim_start();
    while !rest.is_empty() {
        if !rest.starts_with('{') {
            return Err(perr(line, format!("expected a subset literal at `{rest}`")));
        }
        let close = rest.find('}').ok_or_else(|| perr(line, "unterminated subset literal"))?;
        out.push(&rest[..=close]);
        rest = rest[close + 1..].trim_start();
    }
    Ok(out)
}

struct PendingTable {
    line: usize,
    child: usize,
    kind: TableKind,
    parents: Vec<usize>,
    table: CondTable,
    seen: BTreeSet<usize>,
}

pub fn parse_network(text: &str) -> Result<Network> {
    let mut name: Option<String> = None;
    let mut frames: Vec<Frame> = Vec::new();
    let mut var_lines: Vec<usize> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut tables: HashMap<usize, NodeTable> = HashMap::new();
    let mut open: Option<PendingTable> = None;

    let lookup = |index: &HashMap<String, usize>, n: &str, line: usize| {
        index.get(n).copied().ok_or_else(|| perr(line, format!("undeclared variable `{n}`")))
    };

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }

        if let Some(t) = open.as_mut() {
            if content == "end" {
                let t = open.take().expect("open table");
                tables.insert(
                    t.child,
                    NodeTable { kind: t.kind, parents: t.parents, table: t.table },
                );
                continue;
            }
            let (lhs, value) =
                content.rsplit_once(':').ok_or_else(|| perr(line, "expected `... : value`"))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| perr(line, format!("invalid number `{}`", value.trim())))?;
            if !value.is_finite() {
                return Err(perr(line, "non-finite value"));
            }
            let (child_text, parent_text) = match lhs.split_once('|') {
                Some((c, p)) => (c.trim(), p),
                None => (lhs.trim(), ""),
            };
            let child = t.table.child().parse_subset(child_text).map_err(|e| perr(line, e.to_string()))?;
            let lits = split_literals(parent_text, line)?;
            if lits.len() != t.parents.len() {
                return Err(perr(
                    line,
                    format!("expected {} parent subsets, found {}", t.parents.len(), lits.len()),
                ));
            }
            let cfg: Vec<SubsetMask> = lits
                .iter()
                .zip(t.table.parents())
                .map(|(l, f)| f.parse_subset(l))
                .collect::<Result<_>>()
                .map_err(|e| perr(line, e.to_string()))?;
            let cell = t.table.config_index(&cfg).map_err(|e| perr(line, e.to_string()))?
                * t.table.child().subset_count()
                + child.dense_index();
            if !t.seen.insert(cell) {
                return Err(perr(line, "duplicate table row"));
            }
            t.table.set(&cfg, child, value).map_err(|e| perr(line, e.to_string()))?;
            continue;
        }

        let (keyword, rest) = content.split_once(char::is_whitespace).unwrap_or((content, ""));
        let rest = rest.trim();
        match keyword {
            "net" => {
                if name.is_some() {
                    return Err(perr(line, "duplicate `net` line"));
                }
                if rest.is_empty() {
                    return Err(perr(line, "missing network name"));
                }
                name = Some(rest.to_string());
            }
            "var" => {
                let (vname, labels) =
                    rest.split_once(':').ok_or_else(|| perr(line, "expected `var NAME : values`"))?;
                let vname = vname.trim();
                if index.contains_key(vname) {
                    return Err(perr(line, format!("variable `{vname}` declared twice")));
                }
                let labels: Vec<&str> = labels.split_whitespace().collect();
                if labels.len() < 2 {
                    return Err(perr(line, format!("variable `{vname}` needs at least 2 values")));
                }
                let frame = Frame::new(vname, labels).map_err(|e| perr(line, e.to_string()))?;
                index.insert(vname.to_string(), frames.len());
                frames.push(frame);
                var_lines.push(line);
            }
            "edge" => {
                let (p, c) =
                    rest.split_once("->").ok_or_else(|| perr(line, "expected `edge A -> B`"))?;
                let p = lookup(&index, p.trim(), line)?;
                let c = lookup(&index, c.trim(), line)?;
                if p == c {
                    return Err(Error::Cycle(frames[p].name().to_string()));
                }
                if edges.contains(&(p, c)) {
                    return Err(perr(line, "duplicate edge"));
                }
                edges.push((p, c));
            }
            "table" => {
                let (child, tail) =
                    rest.split_once('|').ok_or_else(|| perr(line, "expected `table X | ... kind=m|k`"))?;
                let child = lookup(&index, child.trim(), line)?;
                if tables.contains_key(&child) {
                    return Err(perr(line, format!("duplicate table for `{}`", frames[child].name())));
                }
                let mut kind = None;
                let mut parents = Vec::new();
                for tok in tail.split_whitespace() {
                    if let Some(k) = tok.strip_prefix("kind=") {
                        kind = Some(match k {
                            "m" => TableKind::Mass,
                            "k" => TableKind::K,
                            _ => return Err(perr(line, format!("unknown table kind `{k}`"))),
                        });
                    } else {
                        let p = lookup(&index, tok, line)?;
                        if parents.contains(&p) {
                            return Err(perr(line, format!("parent `{tok}` listed twice")));
                        }
                        parents.push(p);
                    }
                }
                let kind = kind.ok_or_else(|| perr(line, "missing `kind=m` or `kind=k`"))?;
                let table = CondTable::zeros(
                    frames[child].clone(),
                    parents.iter().map(|&p| frames[p].clone()).collect(),
                )
                .map_err(|e| perr(line, e.to_string()))?;
                open = Some(PendingTable { line, child, kind, parents, table, seen: BTreeSet::new() });
            }
            "end" => return Err(perr(line, "`end` outside a table")),
            other => return Err(perr(line, format!("unknown statement `{other}`"))),
        }
    }

    if let Some(t) = open {
        return Err(perr(t.line, "table not closed with `end`"));
    }
    let mut ordered = Vec::with_capacity(frames.len());
    for (j, f) in frames.iter().enumerate() {
        let t = tables
            .remove(&j)
            .ok_or_else(|| perr(var_lines[j], format!("no table for `{}`", f.name())))?;
        ordered.push(t);
    }
    Network::new(name.unwrap_or_else(|| "unnamed".into()), frames, edges, ordered)
}
