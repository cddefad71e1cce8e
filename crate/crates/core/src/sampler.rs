//! Forward sampling over extended domains.
//!
//! Nodes are visited in topological order. A node reads, from each parent,
//! the component of the parent's sampled vector that belongs to the edge
//! between them, and draws its own value from the matching CPT row by inverse
//! CDF over the canonical domain order. Record `r` uses its own ChaCha stream
//! `r` under the given seed, so output does not depend on how records are
//! scheduled across threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cpt::ExtCpt;
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::tables::SubsetMask;
use crate::vexpr::{enumerate_vexprs, index_of, VnExpr};

/// One sampled record. Both vectors are indexed by variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    /// Position of the sampled value in the node's extended domain.
    pub extended: Vec<usize>,
    pub collapsed: Vec<SubsetMask>,
}

/// Coordinatewise `MY`.
pub fn collapse(values: &[&VnExpr]) -> Vec<SubsetMask> {
    values.iter().map(|v| v.my()).collect()
}

pub struct Sampler<'a> {
    net: &'a Network,
    cpts: &'a [ExtCpt],
    // per node: (parent, 1-based edge index) for each CPT parent slot
    inputs: Vec<Vec<(usize, usize)>>,
    // per node: [extended value][h - 1] -> position in the node's V-expression domain
    components: Vec<Vec<Vec<usize>>>,
    // per node: row-wise cumulative probabilities, same layout as the CPT
    cdfs: Vec<Vec<f64>>,
}

impl<'a> Sampler<'a> {
    /// Refuses CPTs that do not fit the network or contain negative entries.
    pub fn new(net: &'a Network, cpts: &'a [ExtCpt]) -> Result<Self> {
        if cpts.len() != net.len() {
            return Err(Error::Shape(format!("{} CPTs for {} nodes", cpts.len(), net.len())));
        }
        let mut inputs = Vec::with_capacity(net.len());
        let mut components = Vec::with_capacity(net.len());
        let mut cdfs = Vec::with_capacity(net.len());
        for (j, cpt) in cpts.iter().enumerate() {
            let frame = net.frame(j);
            let n = net.successor_count(j);
            let parents = net.parents(j);
            let fits = cpt.child() == frame
                && cpt.n() == n
                && cpt.parents().len() == parents.len()
                && cpt.parents().iter().zip(parents).all(|(f, &p)| f == net.frame(p));
            if !fits {
                return Err(Error::Shape(format!("CPT does not match node {}", frame.name())));
            }
            cpt.first_negative()?;

            inputs.push(
                parents
                    .iter()
                    .map(|&p| net.edge_index(p, j).map(|h| (p, h)))
                    .collect::<Result<Vec<_>>>()?,
            );

            let comp = if n == 0 {
                Vec::new()
            } else {
                let idx = index_of(&enumerate_vexprs(frame)?);
                cpt.child_domain()
                    .iter()
                    .map(|x| {
                        (1..=n).map(|h| x.component(h).map(|v| idx[&v])).collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            components.push(comp);

            let mut cdf = Vec::with_capacity(cpt.row_count() * cpt.width());
            for ri in 0..cpt.row_count() {
                let mut acc = 0.0;
                for p in cpt.row(ri) {
                    acc += p.max(0.0);
                    cdf.push(acc);
                }
            }
            cdfs.push(cdf);
        }
        Ok(Sampler { net, cpts, inputs, components, cdfs })
    }

    pub fn network(&self) -> &Network {
        self.net
    }

    pub fn extended_value(&self, node: usize, pos: usize) -> &VnExpr {
        &self.cpts[node].child_domain()[pos]
    }

    /// Draws record `index` of the stream identified by `seed`.
    pub fn record(&self, seed: u64, index: u64) -> SampleRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let v = self.net.len();
        let mut extended = vec![0usize; v];
        let mut cfg = Vec::new();
        for &j in self.net.topological_order() {
            let cpt = &self.cpts[j];
            cfg.clear();
            cfg.extend(self.inputs[j].iter().map(|&(p, h)| self.components[p][extended[p]][h - 1]));
            let ri = cpt.row_index(&cfg);
            let w = cpt.width();
            let cdf = &self.cdfs[j][ri * w..(ri + 1) * w];
            let u: f64 = rng.random::<f64>() * cdf[w - 1];
            let mut pick = cdf.partition_point(|&c| c <= u);
            if pick >= w {
                // u landed on the total through rounding; take the last positive entry
                pick = (0..w).rev().find(|&i| cpt.row(ri)[i] > 0.0).expect("row has mass");
            }
            extended[j] = pick;
        }
        let collapsed =
            (0..v).map(|j| self.cpts[j].child_domain()[extended[j]].my()).collect();
        SampleRecord { extended, collapsed }
    }

    /// Records `0..count`; identical output with or without `parallel`.
    pub fn generate(&self, count: usize, seed: u64, parallel: bool) -> Vec<SampleRecord> {
        if parallel {
            (0..count as u64).into_par_iter().map(|r| self.record(seed, r)).collect()
        } else {
            (0..count as u64).map(|r| self.record(seed, r)).collect()
        }
    }
}

/// `count` i.i.d. records from the network's extended CPTs.
pub fn generate(
    net: &Network,
    cpts: &[ExtCpt],
    count: usize,
    seed: u64,
) -> Result<Vec<SampleRecord>> {
    Ok(Sampler::new(net, cpts)?.generate(count, seed, true))
}

/// Header of variable names, then one line of collapsed subset literals per record.
pub fn write_csv<W: Write>(net: &Network, records: &[SampleRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(net.variable_names())?;
    for rec in records {
        w.write_record(rec.collapsed.iter().zip(net.frames()).map(|(m, f)| f.format_subset(*m)))?;
    }
    w.flush()?;
    Ok(())
}
