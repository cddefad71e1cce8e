//! Extended variable domains.
//!
//! A V-expression is either a plain nonempty subset `S` or a compound `s ⊙ V`
//! / `s ⊗ V` where `s` is a proper nonempty subset of `MY(V)`. A V(n)-expression
//! is a vector of `n` V-expressions: either the constant vector of a plain
//! subset, or a member of `{s⊙V, s⊗V}^n` other than the all-⊙ vector.
//!
//! Text forms: `{a}`, `{a}o{a,b}` (⊙), `{a}@{a,b}` (⊗). Compounds nest to the
//! right, so `{a}@{a,b}o{a,b,c}` is `{a} ⊗ ({a,b} ⊙ {a,b,c})`. Vectors print as
//! `[c1;c2;...;cn]`, except that plain vectors and length-one vectors print as
//! their single component.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::tables::{Frame, SubsetMask};

/// Largest frame for which extended domains are enumerated.
pub const MAX_EXTENDED_FRAME: usize = 4;

/// Largest successor count (vector length) supported.
pub const MAX_SUCCESSORS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    /// `⊙`, printed `o`.
    Dot,
    /// `⊗`, printed `@`.
    At,
}

impl Op {
    pub fn symbol(self) -> char {
        match self {
            Op::Dot => 'o',
            Op::At => '@',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VExpr {
    Base(SubsetMask),
    Compound { my: SubsetMask, op: Op, su: Box<VExpr> },
}

impl VExpr {
    pub fn compound(s: SubsetMask, op: Op, v: VExpr) -> Result<VExpr> {
        if !s.is_proper_subset_of(v.my()) {
            return Err(Error::Syntax(format!(
                "compound subset {:#b} is not a proper subset of {:#b}",
                s.bits(),
                v.my().bits()
            )));
        }
        Ok(VExpr::Compound { my: s, op, su: Box::new(v) })
    }

    pub fn my(&self) -> SubsetMask {
        match self {
            VExpr::Base(s) => *s,
            VExpr::Compound { my, .. } => *my,
        }
    }

    /// `None` stands for `SU = ∅`.
    pub fn su(&self) -> Option<&VExpr> {
        match self {
            VExpr::Base(_) => None,
            VExpr::Compound { su, .. } => Some(su),
        }
    }

    pub fn op(&self) -> Option<Op> {
        match self {
            VExpr::Base(_) => None,
            VExpr::Compound { op, .. } => Some(*op),
        }
    }

    pub fn is_base(&self) -> bool {
        matches!(self, VExpr::Base(_))
    }

    pub fn depth(&self) -> usize {
        match self {
            VExpr::Base(_) => 0,
            VExpr::Compound { su, .. } => 1 + su.depth(),
        }
    }

    pub fn format(&self, frame: &Frame) -> String {
        match self {
            VExpr::Base(s) => frame.format_subset(*s),
            VExpr::Compound { my, op, su } => {
                format!("{}{}{}", frame.format_subset(*my), op.symbol(), su.format(frame))
            }
        }
    }

    pub fn parse(text: &str, frame: &Frame) -> Result<VExpr> {
        let t = text.trim();
        let close = t.find('}').ok_or_else(|| Error::Syntax(t.to_string()))?;
        let my = frame.parse_subset(&t[..=close])?;
        let rest = t[close + 1..].trim_start();
        let mut chars = rest.chars();
        let op = match chars.next() {
            None => return Ok(VExpr::Base(my)),
            Some('o' | '⊙') => Op::Dot,
            Some('@' | '⊗') => Op::At,
            Some(_) => return Err(Error::Syntax(t.to_string())),
        };
        let su = VExpr::parse(chars.as_str(), frame)?;
        VExpr::compound(my, op, su).map_err(|_| Error::Syntax(t.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VnExpr {
    /// `S^n`. Leaves use `n = 0`.
    Plain { set: SubsetMask, n: usize },
    /// Bit `h - 1` of `pattern` set means coordinate `h` is `s ⊗ V`, clear means `s ⊙ V`.
    Family { my: SubsetMask, su: VExpr, pattern: u32, n: usize },
}

impl VnExpr {
    pub fn my(&self) -> SubsetMask {
        match self {
            VnExpr::Plain { set, .. } => *set,
            VnExpr::Family { my, .. } => *my,
        }
    }

    pub fn su(&self) -> Option<&VExpr> {
        match self {
            VnExpr::Plain { .. } => None,
            VnExpr::Family { su, .. } => Some(su),
        }
    }

    pub fn n(&self) -> usize {
        match self {
            VnExpr::Plain { n, .. } | VnExpr::Family { n, .. } => *n,
        }
    }

    pub fn is_plain(&self) -> bool {
        matches!(self, VnExpr::Plain { .. })
    }

    /// The V-expression handed to the successor on outgoing edge `h` (1-based).
    pub fn component(&self, h: usize) -> Result<VExpr> {
        if h == 0 || h > self.n() {
            return Err(Error::OutOfRange(format!(
                "edge index {h} for a vector of length {}",
                self.n()
            )));
        }
        Ok(match self {
            VnExpr::Plain { set, .. } => VExpr::Base(*set),
            VnExpr::Family { my, su, pattern, .. } => {
                let op = if pattern & (1 << (h - 1)) != 0 { Op::At } else { Op::Dot };
                VExpr::Compound { my: *my, op, su: Box::new(su.clone()) }
            }
        })
    }

    pub fn format(&self, frame: &Frame) -> String {
        match self {
            VnExpr::Plain { set, .. } => frame.format_subset(*set),
            VnExpr::Family { n: 1, .. } => {
                self.component(1).expect("n = 1").format(frame)
            }
            VnExpr::Family { n, .. } => {
                let parts: Vec<String> = (1..=*n)
                    .map(|h| self.component(h).expect("h in range").format(frame))
                    .collect();
                format!("[{}]", parts.join(";"))
            }
        }
    }

    pub fn parse(text: &str, frame: &Frame, n: usize) -> Result<VnExpr> {
        let t = text.trim();
        let parts: Vec<VExpr> = match t.strip_prefix('[') {
            Some(inner) => {
                let inner = inner.strip_suffix(']').ok_or_else(|| Error::Syntax(t.into()))?;
                inner.split(';').map(|p| VExpr::parse(p, frame)).collect::<Result<_>>()?
            }
            None => {
                let v = VExpr::parse(t, frame)?;
                if let VExpr::Base(set) = v {
                    return Ok(VnExpr::Plain { set, n });
                }
                vec![v]
            }
        };
        if parts.len() != n {
            return Err(Error::Syntax(format!("`{t}` is not a vector of length {n}")));
        }
        let (my, su) = match &parts[0] {
            VExpr::Compound { my, su, .. } => (*my, su.as_ref().clone()),
            VExpr::Base(set) => {
                return if parts.iter().all(|p| *p == VExpr::Base(*set)) {
                    Ok(VnExpr::Plain { set: *set, n })
                } else {
                    Err(Error::Syntax(t.into()))
                };
            }
        };
        let mut pattern = 0u32;
        for (i, p) in parts.iter().enumerate() {
            match p {
                VExpr::Compound { my: m, op, su: s } if *m == my && **s == su => {
                    if *op == Op::At {
                        pattern |= 1 << i;
                    }
                }
                _ => return Err(Error::Syntax(t.into())),
            }
        }
        if pattern == 0 {
            return Err(Error::Syntax(format!("`{t}`: the all-⊙ vector is excluded")));
        }
        Ok(VnExpr::Family { my, su, pattern, n })
    }
}

/// All V-expressions over `frame`, in canonical order: by nesting depth, then
/// by the position of `SU` in this same list, then `⊙` before `⊗`, then by `s`
/// in canonical subset order. Every nonempty subset is a base expression.
pub fn enumerate_vexprs(frame: &Frame) -> Result<Vec<VExpr>> {
    if frame.len() > MAX_EXTENDED_FRAME {
        return Err(Error::TooLarge(format!(
            "extended domain of {} ({} values, at most {MAX_EXTENDED_FRAME})",
            frame.name(),
            frame.len()
        )));
    }
    let mut out: Vec<VExpr> = frame.subsets().into_iter().map(VExpr::Base).collect();
    let mut level = 0..out.len();
    while !level.is_empty() {
        let start = out.len();
        for i in level {
            let v = out[i].clone();
            let subs = frame.proper_subsets(v.my());
            for op in [Op::Dot, Op::At] {
                for s in &subs {
                    out.push(VExpr::Compound { my: *s, op, su: Box::new(v.clone()) });
                }
            }
        }
        level = start..out.len();
    }
    Ok(out)
}

fn check_n(frame: &Frame, n: usize) -> Result<()> {
    if n == 0 || n > MAX_SUCCESSORS {
        return Err(Error::OutOfRange(format!(
            "successor count {n} for {} (supported 1..={MAX_SUCCESSORS})",
            frame.name()
        )));
    }
    Ok(())
}

/// All V(n)-expressions over `frame`: the plain vectors in canonical subset
/// order, then for each `V` (in [`enumerate_vexprs`] order) and each proper
/// nonempty `s ⊂ MY(V)`, the `2^n - 1` patterns in increasing order.
pub fn enumerate_vn(frame: &Frame, n: usize) -> Result<Vec<VnExpr>> {
    check_n(frame, n)?;
    let vexprs = enumerate_vexprs(frame)?;
    let mut out: Vec<VnExpr> =
        frame.subsets().into_iter().map(|set| VnExpr::Plain { set, n }).collect();
    for v in &vexprs {
        for s in frame.proper_subsets(v.my()) {
            for pattern in 1..(1u32 << n) {
                out.push(VnExpr::Family { my: s, su: v.clone(), pattern, n });
            }
        }
    }
    Ok(out)
}

/// Domain of a node without successors: the plain subsets.
pub fn plain_domain(frame: &Frame) -> Vec<VnExpr> {
    frame.subsets().into_iter().map(|set| VnExpr::Plain { set, n: 0 }).collect()
}

/// Extended domain of a node with `n` successors (`n = 0` for leaves).
pub fn node_domain(frame: &Frame, n: usize) -> Result<Vec<VnExpr>> {
    if n == 0 {
        Ok(plain_domain(frame))
    } else {
        enumerate_vn(frame, n)
    }
}

/// Position lookup for an enumerated list.
pub fn index_of<T: Clone + Eq + std::hash::Hash>(items: &[T]) -> HashMap<T, usize> {
    items.iter().cloned().enumerate().map(|(i, v)| (v, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Frame {
        Frame::new("X", ["a", "b"]).unwrap()
    }

    fn show(frame: &Frame, xs: &[VExpr]) -> Vec<String> {
        xs.iter().map(|x| x.format(frame)).collect()
    }

    #[test]
    fn binary_vexprs() {
        let f = ab();
        let xs = enumerate_vexprs(&f).unwrap();
        assert_eq!(
            show(&f, &xs),
            ["{a}", "{b}", "{a,b}", "{a}o{a,b}", "{b}o{a,b}", "{a}@{a,b}", "{b}@{a,b}"]
        );
    }

    #[test]
    fn singleton_frame_has_one_vexpr() {
        let f = Frame::new("X", ["a"]).unwrap();
        assert_eq!(enumerate_vexprs(&f).unwrap().len(), 1);
    }

    #[test]
    fn frame_guard() {
        let f = Frame::new("X", ["a", "b", "c", "d", "e"]).unwrap();
        assert!(matches!(enumerate_vexprs(&f), Err(Error::TooLarge(_))));
        assert!(enumerate_vn(&ab(), 7).is_err());
        assert!(enumerate_vn(&ab(), 0).is_err());
    }

    #[test]
    fn binary_vn_n1() {
        let f = ab();
        let xs: Vec<String> =
            enumerate_vn(&f, 1).unwrap().iter().map(|x| x.format(&f)).collect();
        assert_eq!(xs, ["{a}", "{b}", "{a,b}", "{a}@{a,b}", "{b}@{a,b}"]);
    }

    #[test]
    fn binary_vn_counts() {
        let f = ab();
        assert_eq!(enumerate_vn(&f, 2).unwrap().len(), 9);
        assert_eq!(enumerate_vn(&f, 4).unwrap().len(), 33);
    }

    #[test]
    fn components() {
        let f = ab();
        let full = f.full();
        let a = f.parse_subset("{a}").unwrap();
        let plain = VnExpr::Plain { set: full, n: 4 };
        assert_eq!(plain.component(3).unwrap(), VExpr::Base(full));
        let fam1 = VnExpr::Family { my: a, su: VExpr::Base(full), pattern: 0b1, n: 1 };
        assert_eq!(fam1.component(1).unwrap().format(&f), "{a}@{a,b}");
        let fam2 = VnExpr::Family { my: a, su: VExpr::Base(full), pattern: 0b10, n: 2 };
        assert_eq!(fam2.component(1).unwrap().format(&f), "{a}o{a,b}");
        assert_eq!(fam2.component(2).unwrap().format(&f), "{a}@{a,b}");
        assert!(fam2.component(0).is_err());
        assert!(fam2.component(3).is_err());
        assert_eq!(fam2.format(&f), "[{a}o{a,b};{a}@{a,b}]");
    }

    #[test]
    fn parse_rejects_bad_compounds() {
        let f = ab();
        assert!(VExpr::parse("{a,b}o{a,b}", &f).is_err());
        assert!(VExpr::parse("{a}x{a,b}", &f).is_err());
        assert!(VExpr::parse("{a}o{b}", &f).is_err());
        assert!(VnExpr::parse("{a}o{a,b}", &f, 1).is_err());
        assert!(VnExpr::parse("[{a}o{a,b};{a}o{a,b}]", &f, 2).is_err());
        assert!(VnExpr::parse("[{a}@{a,b};{b}@{a,b}]", &f, 2).is_err());
        assert_eq!(
            VExpr::parse("{a}⊗{a,b}", &f).unwrap(),
            VExpr::parse("{a}@{a,b}", &f).unwrap()
        );
    }

    #[test]
    fn nested_printing() {
        let f = Frame::new("X", ["a", "b", "c"]).unwrap();
        let v = VExpr::parse("{a}@{a,b}o{a,b,c}", &f).unwrap();
        assert_eq!(v.depth(), 2);
        assert_eq!(v.su().unwrap().format(&f), "{a,b}o{a,b,c}");
        assert_eq!(v.format(&f), "{a}@{a,b}o{a,b,c}");
    }
}
