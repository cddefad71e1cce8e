//! Library results against naive reimplementations.

use std::collections::{BTreeMap, HashSet};

use condbel::cpt::build_network;
use condbel::fixtures;
use condbel::fusion::{conjunctive_combine, cylindrical_extension, network_joint};
use condbel::tables::{k_to_m, m_to_k, CondMassTable, CondTable, Frame, ProductFocal, SubsetMask};
use condbel::verify::{exact_collapsed_joint, exact_extended_joint};
use condbel::vexpr::{enumerate_vexprs, enumerate_vn, Op, VExpr};
use condbel::Network;

fn frame(name: &str, labels: &[&str]) -> Frame {
    Frame::new(name, labels.iter().copied()).unwrap()
}

fn all_subsets(f: &Frame) -> Vec<SubsetMask> {
    (1..(1u32 << f.len())).map(|b| SubsetMask::from_bits(b).unwrap()).collect()
}

fn all_configs(parents: &[Frame]) -> Vec<Vec<SubsetMask>> {
    let mut out = vec![vec![]];
    for p in parents {
        out = out
            .into_iter()
            .flat_map(|c| {
                all_subsets(p).into_iter().map(move |s| {
                    let mut c = c.clone();
                    c.push(s);
                    c
                })
            })
            .collect();
    }
    out
}

fn superset_cfg(big: &[SubsetMask], small: &[SubsetMask]) -> bool {
    big.iter().zip(small).all(|(b, s)| s.bits() & !b.bits() == 0)
}

/// Deterministic pseudo-random fill, no dependence on the library's RNG use.
fn mixed_table() -> CondMassTable {
    let child = frame("C", &["x", "y", "z"]);
    let parents = vec![frame("P", &["a", "b"]), frame("Q", &["u", "v", "w"])];
    let mut state = 12345u64;
    let t = CondTable::from_fn(child, parents, |_, _| {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((state >> 33) as f64 / (1u64 << 31) as f64) - 0.5
    })
    .unwrap();
    CondMassTable::new(t).unwrap()
}

#[test]
fn signed_masses_with_negative_k_are_rejected() {
    let m = mixed_table();
    let configs = all_configs(m.parents());
    let mut most_negative = 0.0f64;
    for cfg in &configs {
        for child in all_subsets(m.child()) {
            let naive: f64 = configs
                .iter()
                .filter(|big| superset_cfg(big, cfg))
                .map(|big| m.get(big, child).unwrap())
                .sum();
            most_negative = most_negative.min(naive);
        }
    }
    assert!(most_negative < -1e-12);
    assert!(matches!(m_to_k(&m), Err(condbel::Error::NotKRepresentable { .. })));
}

#[test]
fn k_transform_on_nonnegative_masses() {
    let child = frame("C", &["x", "y"]);
    let parents = vec![frame("P", &["a", "b", "c"]), frame("Q", &["u", "v"])];
    let mut i = 0.0;
    let t = CondTable::from_fn(child, parents, |_, _| {
        i += 1.0;
        (i * 0.37f64).fract()
    })
    .unwrap();
    let m = CondMassTable::new(t).unwrap();
    let k = m_to_k(&m).unwrap();
    let configs = all_configs(m.parents());
    for cfg in &configs {
        for child in all_subsets(m.child()) {
            let naive: f64 = configs
                .iter()
                .filter(|big| superset_cfg(big, cfg))
                .map(|big| m.get(big, child).unwrap())
                .sum();
            assert!((k.get(cfg, child).unwrap() - naive).abs() < 1e-12);
        }
    }
    let back = k_to_m(&k);
    for cfg in &configs {
        for child in all_subsets(m.child()) {
            // Signed sum over supersets, sign from the number of added elements.
            let naive: f64 = configs
                .iter()
                .filter(|big| superset_cfg(big, cfg))
                .map(|big| {
                    let extra: usize =
                        big.iter().zip(cfg).map(|(b, s)| b.len() - s.len()).sum();
                    let sign = if extra.is_multiple_of(2) { 1.0 } else { -1.0 };
                    sign * k.get(big, child).unwrap()
                })
                .sum();
            assert!((back.get(cfg, child).unwrap() - naive).abs() < 1e-12);
            assert!((back.get(cfg, child).unwrap() - m.get(cfg, child).unwrap()).abs() < 1e-12);
        }
    }
}

fn closure(f: &Frame) -> HashSet<VExpr> {
    let mut set: HashSet<VExpr> = all_subsets(f).into_iter().map(VExpr::Base).collect();
    loop {
        let mut added = Vec::new();
        for v in &set {
            for s in all_subsets(f) {
                if s.bits() & !v.my().bits() == 0 && s != v.my() {
                    for op in [Op::Dot, Op::At] {
                        let c = VExpr::Compound { my: s, op, su: Box::new(v.clone()) };
                        if !set.contains(&c) {
                            added.push(c);
                        }
                    }
                }
            }
        }
        if added.is_empty() {
            return set;
        }
        set.extend(added);
    }
}

#[test]
fn enumeration_matches_closure() {
    for labels in [&["a"][..], &["a", "b"], &["a", "b", "c"]] {
        let f = frame("X", labels);
        let listed = enumerate_vexprs(&f).unwrap();
        let unique: HashSet<VExpr> = listed.iter().cloned().collect();
        assert_eq!(unique.len(), listed.len());
        assert_eq!(unique, closure(&f));
    }
    assert_eq!(closure(&frame("X", &["a", "b"])).len(), 7);
    assert_eq!(closure(&frame("X", &["a", "b", "c"])).len(), 55);
}

#[test]
fn extended_domain_counts() {
    for labels in [&["a", "b"][..], &["a", "b", "c"]] {
        let f = frame("X", labels);
        let vs = closure(&f);
        let pairs = vs
            .iter()
            .map(|v| all_subsets(&f).iter().filter(|s| s.is_proper_subset_of(v.my())).count())
            .sum::<usize>();
        let plains = all_subsets(&f).len();
        for n in 1..=3 {
            let expected = plains + pairs * ((1 << n) - 1);
            assert_eq!(enumerate_vn(&f, n).unwrap().len(), expected);
        }
    }
}

fn extend_entries(t: &CondMassTable, scope: &[Frame]) -> Vec<(Vec<SubsetMask>, f64)> {
    let child_at = scope.iter().position(|f| f == t.child()).unwrap();
    let parent_at: Vec<usize> =
        t.parents().iter().map(|p| scope.iter().position(|f| f == p).unwrap()).collect();
    let mut out = Vec::new();
    for cfg in all_configs(t.parents()) {
        for child in all_subsets(t.child()) {
            let mut focal: Vec<SubsetMask> = scope.iter().map(Frame::full).collect();
            focal[child_at] = child;
            for (l, &at) in parent_at.iter().enumerate() {
                focal[at] = cfg[l];
            }
            out.push((focal, t.get(&cfg, child).unwrap()));
        }
    }
    out
}

fn intersect(a: &[SubsetMask], b: &[SubsetMask]) -> Option<Vec<SubsetMask>> {
    a.iter().zip(b).map(|(x, y)| SubsetMask::from_bits(x.bits() & y.bits())).collect()
}

#[test]
fn pairwise_combination_by_brute_force() {
    let net = Network::parse(fixtures::STAR5).unwrap();
    let scope = net.frames()[..2].to_vec();
    let root = net.mass_table(0).unwrap();
    let cond = net.mass_table(1).unwrap();
    let mut naive: BTreeMap<Vec<SubsetMask>, f64> = BTreeMap::new();
    let mut empty = 0.0;
    for (f1, m1) in extend_entries(&root, &scope) {
        for (f2, m2) in extend_entries(&cond, &scope) {
            match intersect(&f1, &f2) {
                Some(f) => *naive.entry(f).or_insert(0.0) += m1 * m2,
                None => empty += m1 * m2,
            }
        }
    }
    let joint = conjunctive_combine(
        &cylindrical_extension(&root, &scope).unwrap(),
        &cylindrical_extension(&cond, &scope).unwrap(),
    )
    .unwrap();
    for (focal, v) in &naive {
        assert!((joint.get(&ProductFocal(focal.clone())) - v).abs() < 1e-12);
    }
    assert!((joint.empty_mass() - empty).abs() < 1e-12);
    let a = net.frame(0).parse_subset("{a}").unwrap();
    let b = net.frame(1).parse_subset("{b}").unwrap();
    assert!((naive[&vec![a, b]] - 0.09).abs() < 1e-12);
}

fn naive_network_joint(net: &Network) -> (BTreeMap<Vec<SubsetMask>, f64>, f64) {
    let scope = net.frames().to_vec();
    let per_node: Vec<Vec<(Vec<SubsetMask>, f64)>> =
        (0..net.len()).map(|j| extend_entries(&net.mass_table(j).unwrap(), &scope)).collect();
    let mut out = BTreeMap::new();
    let mut empty = 0.0;
    let mut idx = vec![0usize; net.len()];
    'outer: loop {
        let mut focal: Option<Vec<SubsetMask>> = Some(scope.iter().map(Frame::full).collect());
        let mut mass = 1.0;
        for (j, &i) in idx.iter().enumerate() {
            let (f, m) = &per_node[j][i];
            focal = focal.and_then(|x| intersect(&x, f));
            mass *= m;
        }
        match focal {
            Some(f) => *out.entry(f).or_insert(0.0) += mass,
            None => empty += mass,
        }
        for j in (0..idx.len()).rev() {
            idx[j] += 1;
            if idx[j] < per_node[j].len() {
                continue 'outer;
            }
            idx[j] = 0;
        }
        break;
    }
    (out, empty)
}

#[test]
fn network_joint_by_brute_force() {
    for src in [fixtures::CHAIN4, fixtures::STAR5, fixtures::CHAIN3, fixtures::STAR4] {
        let net = Network::parse(src).unwrap();
        let (naive, empty) = naive_network_joint(&net);
        let (joint, _) = network_joint(&net).unwrap();
        for (focal, v) in &naive {
            let got = joint.get(&ProductFocal(focal.clone()));
            assert!((got - v).abs() < 1e-12, "{}: {focal:?} {got} vs {v}", net.name());
        }
        for (focal, v) in joint.masses() {
            assert!((naive.get(&focal.0).copied().unwrap_or(0.0) - v).abs() < 1e-12);
        }
        assert!((joint.empty_mass() - empty).abs() < 1e-12);
    }
}

/// Chain-rule product over the full Cartesian product of extended domains.
#[test]
fn extended_joint_by_full_enumeration() {
    for src in [fixtures::CHAIN4_SAMPLABLE, fixtures::STAR5, fixtures::VACUOUS_LEAVES] {
        let net = Network::parse(src).unwrap();
        let cpts = build_network(&net).unwrap();
        let exact = exact_extended_joint(&net, &cpts).unwrap();
        let widths: Vec<usize> = cpts.iter().map(|c| c.width()).collect();
        let mut state = vec![0usize; net.len()];
        let mut total = 0.0;
        let mut collapsed: BTreeMap<Vec<SubsetMask>, f64> = BTreeMap::new();
        'outer: loop {
            let mut p = 1.0;
            for j in 0..net.len() {
                let cfg: Vec<VExpr> = net
                    .parents(j)
                    .iter()
                    .map(|&q| {
                        let h = net.successors(q).iter().position(|&s| s == j).unwrap() + 1;
                        cpts[q].child_domain()[state[q]].component(h).unwrap()
                    })
                    .collect();
                p *= cpts[j].prob(&cfg, &cpts[j].child_domain()[state[j]]).unwrap();
            }
            assert!((exact.get(&state) - p).abs() < 1e-15);
            total += p;
            let key = state.iter().enumerate().map(|(j, &x)| cpts[j].child_domain()[x].my()).collect();
            *collapsed.entry(key).or_insert(0.0) += p;
            for j in (0..state.len()).rev() {
                state[j] += 1;
                if state[j] < widths[j] {
                    continue 'outer;
                }
                state[j] = 0;
            }
            break;
        }
        assert!((total - 1.0).abs() < 1e-9);
        let col = exact_collapsed_joint(&net, &cpts).unwrap();
        for (k, v) in &collapsed {
            assert!((col.get(k) - v).abs() < 1e-12);
        }
    }
}
