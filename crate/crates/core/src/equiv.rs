//! Ehrenfeucht-Fraisse games, elementary distances and capped isomorphism
//! types of colored rooted trees.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::structure::{RootedTree, Structure, StructureError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EquivError {
    #[error("tuples have different lengths ({0} and {1})")]
    TupleLengthMismatch(usize, usize),
    #[error("structures have different signatures")]
    SignatureMismatch,
    #[error("element {element} out of range for a structure of size {size}")]
    ElementOutOfRange { element: usize, size: usize },
    #[error("the round bound must be at least 1")]
    ZeroRounds,
    #[error("cap must be at least 1")]
    ZeroCap,
    #[error(transparent)]
    Structure(#[from] StructureError),
}

/// An `r`-round Ehrenfeucht-Fraisse game between two structures.
///
/// Positions are sets of pebble pairs; results are memoised per position
/// and number of remaining rounds.
pub struct EfGame<'a> {
    a: &'a Structure,
    b: &'a Structure,
    memo: RefCell<HashMap<(Vec<(usize, usize)>, usize), bool>>,
}

impl<'a> EfGame<'a> {
    pub fn new(a: &'a Structure, b: &'a Structure) -> Result<Self, EquivError> {
        if a.signature() != b.signature() {
            return Err(EquivError::SignatureMismatch);
        }
        Ok(Self {
            a,
            b,
            memo: RefCell::new(HashMap::new()),
        })
    }

    /// Whether adding `(x, y)` to a partial isomorphism keeps it one.
    fn consistent(&self, pebbles: &[(usize, usize)], x: usize, y: usize) -> bool {
        for &(p, q) in pebbles {
            if (p == x) != (q == y) {
                return false;
            }
        }
        let mut xs: Vec<usize> = pebbles.iter().map(|&(p, _)| p).collect();
        let mut ys: Vec<usize> = pebbles.iter().map(|&(_, q)| q).collect();
        xs.push(x);
        ys.push(y);
        let last = xs.len() - 1;
        for (idx, rel) in self.a.signature().relations().iter().enumerate() {
            let k = rel.arity;
            // every index tuple over the pebbles that mentions the new pair
            let m = xs.len();
            let mut ta = vec![0usize; k];
            let mut tb = vec![0usize; k];
            for code in 0..m.pow(k as u32) {
                let mut c = code;
                let mut mentions = false;
                for i in (0..k).rev() {
                    let j = c % m;
                    c /= m;
                    ta[i] = xs[j];
                    tb[i] = ys[j];
                    mentions |= j == last;
                }
                if mentions && self.a.holds(idx, &ta) != self.b.holds(idx, &tb) {
                    return false;
                }
            }
        }
        true
    }

    /// Whether the pebbled tuples form a partial isomorphism.
    pub fn is_partial_isomorphism(&self, pebbles: &[(usize, usize)]) -> bool {
        (0..pebbles.len()).all(|i| self.consistent(&pebbles[..i], pebbles[i].0, pebbles[i].1))
    }

    fn normalise(pebbles: &[(usize, usize)]) -> Vec<(usize, usize)> {
        let mut key = pebbles.to_vec();
        key.sort_unstable();
        key.dedup();
        key
    }

    /// Duplicator wins `rounds` further rounds from a partial isomorphism.
    fn duplicator_wins(&self, pebbles: &[(usize, usize)], rounds: usize) -> bool {
        if rounds == 0 {
            return true;
        }
        let key = (Self::normalise(pebbles), rounds);
        if let Some(&hit) = self.memo.borrow().get(&key) {
            return hit;
        }
        let result =
            self.spoiler_fails(&key.0, rounds, false) && self.spoiler_fails(&key.0, rounds, true);
        self.memo.borrow_mut().insert(key, result);
        result
    }

    fn spoiler_fails(&self, pebbles: &[(usize, usize)], rounds: usize, in_b: bool) -> bool {
        let (own, other) = if in_b {
            (self.b, self.a)
        } else {
            (self.a, self.b)
        };
        let mut next = pebbles.to_vec();
        for x in 0..own.size() {
            // moves on pebbled elements give Spoiler nothing new
            if pebbles
                .iter()
                .any(|&(p, q)| if in_b { q == x } else { p == x })
            {
                continue;
            }
            let answered = (0..other.size()).any(|y| {
                let (pa, pb) = if in_b { (y, x) } else { (x, y) };
                if !self.consistent(pebbles, pa, pb) {
                    return false;
                }
                next.push((pa, pb));
                let win = self.duplicator_wins(&next, rounds - 1);
                next.pop();
                win
            });
            if !answered {
                return false;
            }
        }
        true
    }

    /// Duplicator wins the `rounds`-round game starting from `(a_tuple, b_tuple)`.
    pub fn equivalent(
        &self,
        a_tuple: &[usize],
        b_tuple: &[usize],
        rounds: usize,
    ) -> Result<bool, EquivError> {
        if a_tuple.len() != b_tuple.len() {
            return Err(EquivError::TupleLengthMismatch(
                a_tuple.len(),
                b_tuple.len(),
            ));
        }
        for (t, s) in [(a_tuple, self.a), (b_tuple, self.b)] {
            if let Some(&element) = t.iter().find(|&&e| e >= s.size()) {
                return Err(EquivError::ElementOutOfRange {
                    element,
                    size: s.size(),
                });
            }
        }
        let pebbles: Vec<(usize, usize)> = a_tuple
            .iter()
            .copied()
            .zip(b_tuple.iter().copied())
            .collect();
        if !self.is_partial_isomorphism(&pebbles) {
            return Ok(false);
        }
        Ok(self.duplicator_wins(&pebbles, rounds))
    }
}

/// `(A, a) ==_r (B, b)`: Duplicator wins the `r`-round game.
pub fn ef_equivalent(
    a: &Structure,
    a_tuple: &[usize],
    b: &Structure,
    b_tuple: &[usize],
    rounds: usize,
) -> Result<bool, EquivError> {
    EfGame::new(a, b)?.equivalent(a_tuple, b_tuple, rounds)
}

/// Elementary distance: `2^-r` for the least distinguishing rank `r`, or
/// zero when no rank up to `r_max` distinguishes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Distance {
    pub first_failure: Option<usize>,
    pub r_max: usize,
}

impl Distance {
    pub fn value(&self) -> BigRational {
        match self.first_failure {
            Some(r) => BigRational::new(BigInt::one(), BigInt::one() << r),
            None => BigRational::from_integer(0.into()),
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.first_failure.map_or(0.0, |r| 0.5f64.powi(r as i32))
    }

    pub fn is_determined(&self) -> bool {
        self.first_failure.is_some()
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.first_failure {
            Some(r) => write!(f, "1/{}", 1u128 << r.min(127)),
            None => write!(
                f,
                "0 (equivalent through {} rounds; undetermined below 2^-{})",
                self.r_max,
                self.r_max + 1
            ),
        }
    }
}

/// Distance between two pointed structures `(A, a)` and `(B, b)`.
pub fn dist_p(
    a: &Structure,
    a_tuple: &[usize],
    b: &Structure,
    b_tuple: &[usize],
    r_max: usize,
) -> Result<Distance, EquivError> {
    if r_max == 0 {
        return Err(EquivError::ZeroRounds);
    }
    let game = EfGame::new(a, b)?;
    for r in 0..=r_max {
        if !game.equivalent(a_tuple, b_tuple, r)? {
            return Ok(Distance {
                first_failure: Some(r),
                r_max,
            });
        }
    }
    Ok(Distance {
        first_failure: None,
        r_max,
    })
}

/// Distance between two structures via sentences.
pub fn dist0(a: &Structure, b: &Structure, r_max: usize) -> Result<Distance, EquivError> {
    dist_p(a, &[], b, &[], r_max)
}

/// Isomorphism type of a colored rooted tree with child multiplicities
/// capped at `cap`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CapType {
    pub color: u32,
    pub children: Vec<(Arc<CapType>, u32)>,
    pub cap: u32,
}

impl CapType {
    pub fn leaf(color: u32, cap: u32) -> Self {
        Self {
            color,
            children: Vec::new(),
            cap,
        }
    }

    /// Builds a type from (possibly unsorted, repeated) children; counts
    /// are merged and capped.
    pub fn from_children(
        color: u32,
        children: impl IntoIterator<Item = (Arc<CapType>, u32)>,
        cap: u32,
    ) -> Self {
        let mut list: Vec<(Arc<CapType>, u32)> = children.into_iter().collect();
        list.sort();
        let mut merged: Vec<(Arc<CapType>, u32)> = Vec::with_capacity(list.len());
        for (ty, count) in list {
            match merged.last_mut() {
                Some((last, c)) if *last == ty => *c = c.saturating_add(count),
                _ => merged.push((ty, count)),
            }
        }
        for (_, c) in merged.iter_mut() {
            *c = (*c).min(cap);
        }
        merged.retain(|(_, c)| *c > 0);
        Self {
            color,
            children: merged,
            cap,
        }
    }

    /// Number of levels (a leaf has height 1).
    pub fn height(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|(c, _)| c.height())
            .max()
            .unwrap_or(0)
    }

    /// The same type seen with a smaller cap (`cap <= self.cap`).
    pub fn recap(&self, cap: u32) -> CapType {
        let children = self
            .children
            .iter()
            .map(|(c, n)| (Arc::new(c.recap(cap)), *n));
        CapType::from_children(self.color, children, cap)
    }

    /// Child count of `child`, or 0.
    pub fn count_of(&self, child: &CapType) -> u32 {
        self.children
            .iter()
            .find(|(c, _)| c.as_ref() == child)
            .map_or(0, |(_, n)| *n)
    }

    /// Smallest tree realising the type: every capped count is realised
    /// exactly `cap` times.
    pub fn min_size(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(|(c, n)| *n as usize * c.min_size())
            .sum::<usize>()
    }
}

impl fmt::Display for CapType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.color)?;
        if !self.children.is_empty() {
            write!(f, "[")?;
            for (i, (c, n)) in self.children.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                if *n == self.cap {
                    write!(f, "{c}*{n}+")?;
                } else {
                    write!(f, "{c}*{n}")?;
                }
            }
            write!(f, "]")?;
        }
        Ok(())
    }
}

/// Types of the subtrees rooted at every vertex of `t`.
pub fn cap_types(t: &RootedTree, cap: u32) -> Result<Vec<Arc<CapType>>, EquivError> {
    if cap == 0 {
        return Err(EquivError::ZeroCap);
    }
    let mut types: Vec<Option<Arc<CapType>>> = vec![None; t.len()];
    for v in t.postorder() {
        let children = t.children(v).iter().map(|&c| {
            (
                types[c]
                    .clone()
                    .expect("children precede parents in postorder"),
                1,
            )
        });
        types[v] = Some(Arc::new(CapType::from_children(t.color(v), children, cap)));
    }
    Ok(types
        .into_iter()
        .map(|t| t.expect("all vertices typed"))
        .collect())
}

/// Type of the subtree rooted at `v`.
pub fn cap_type(t: &RootedTree, v: usize, cap: u32) -> Result<CapType, EquivError> {
    t.check_vertex(v)?;
    Ok(cap_types(&t.subtree(v)?, cap)?[0].as_ref().clone())
}

/// Types of the subtrees rooted at the ancestors of a vertex, root first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EncodeTuple {
    pub path: Vec<Arc<CapType>>,
}

impl EncodeTuple {
    pub fn new(path: Vec<Arc<CapType>>) -> Self {
        Self { path }
    }

    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }

    pub fn last(&self) -> &Arc<CapType> {
        self.path.last().expect("tuples are nonempty")
    }

    /// The tuple of the parent vertex.
    pub fn parent(&self) -> Option<EncodeTuple> {
        (self.path.len() > 1).then(|| EncodeTuple::new(self.path[..self.path.len() - 1].to_vec()))
    }

    /// Extends the tuple by a child type.
    pub fn child(&self, ty: Arc<CapType>) -> EncodeTuple {
        let mut path = self.path.clone();
        path.push(ty);
        EncodeTuple::new(path)
    }

    /// Each entry occurs among the children of its predecessor.
    pub fn is_consistent(&self) -> bool {
        self.path.windows(2).all(|w| w[0].count_of(&w[1]) > 0)
    }

    /// Re-expressed with a smaller cap.
    pub fn recap(&self, cap: u32) -> EncodeTuple {
        EncodeTuple::new(self.path.iter().map(|t| Arc::new(t.recap(cap))).collect())
    }
}

impl fmt::Display for EncodeTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.path.iter().map(|t| t.to_string()).collect();
        write!(f, "<{}>", parts.join(" / "))
    }
}

/// Encode tuples of all vertices.
pub fn encode_all(t: &RootedTree, cap: u32) -> Result<Vec<EncodeTuple>, EquivError> {
    let types = cap_types(t, cap)?;
    let mut out: Vec<Option<EncodeTuple>> = vec![None; t.len()];
    for v in t.preorder_from(t.root()) {
        let tuple = match t.parent(v) {
            None => EncodeTuple::new(vec![types[v].clone()]),
            Some(p) => out[p]
                .as_ref()
                .expect("parents first in preorder")
                .child(types[v].clone()),
        };
        out[v] = Some(tuple);
    }
    Ok(out
        .into_iter()
        .map(|e| e.expect("all vertices encoded"))
        .collect())
}

/// Encode tuple of a single vertex.
pub fn encode_vertex(t: &RootedTree, v: usize, cap: u32) -> Result<EncodeTuple, EquivError> {
    t.check_vertex(v)?;
    let types = cap_types(t, cap)?;
    Ok(EncodeTuple::new(
        t.ancestors(v)
            .into_iter()
            .map(|u| types[u].clone())
            .collect(),
    ))
}

/// Dense numbering of cap types, children before parents.
#[derive(Debug, Clone, Default)]
pub struct TypeTable {
    types: Vec<Arc<CapType>>,
    ids: HashMap<Arc<CapType>, usize>,
}

impl TypeTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, ty: &Arc<CapType>) -> usize {
        if let Some(&id) = self.ids.get(ty) {
            return id;
        }
        for (c, _) in &ty.children {
            self.intern(c);
        }
        let id = self.types.len();
        self.types.push(ty.clone());
        self.ids.insert(ty.clone(), id);
        id
    }

    pub fn id(&self, ty: &CapType) -> Option<usize> {
        self.ids.get(ty).copied()
    }

    pub fn get(&self, id: usize) -> Option<&Arc<CapType>> {
        self.types.get(id)
    }

    pub fn types(&self) -> &[Arc<CapType>] {
        &self.types
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::ColorCoding;

    fn complete(n: usize) -> Structure {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        Structure::graph(n, &edges).unwrap()
    }

    fn path(n: usize) -> Structure {
        let edges: Vec<(usize, usize)> = (1..n).map(|i| (i - 1, i)).collect();
        Structure::graph(n, &edges).unwrap()
    }

    fn star(leaves: usize) -> RootedTree {
        RootedTree::new(vec![0; leaves + 1], vec![0; leaves + 1], 2).unwrap()
    }

    #[test]
    fn game_examples() {
        let k2 = complete(2);
        let two = Structure::graph(2, &[]).unwrap();
        assert!(ef_equivalent(&k2, &[], &k2, &[], 4).unwrap());
        assert!(ef_equivalent(&k2, &[], &two, &[], 1).unwrap());
        assert!(!ef_equivalent(&k2, &[], &two, &[], 2).unwrap());
        assert!(ef_equivalent(&path(4), &[], &path(5), &[], 1).unwrap());
        assert!(matches!(
            ef_equivalent(&k2, &[0], &k2, &[], 1),
            Err(EquivError::TupleLengthMismatch(1, 0))
        ));
    }

    #[test]
    fn distances() {
        let k2 = complete(2);
        let two = Structure::graph(2, &[]).unwrap();
        assert_eq!(dist0(&k2, &k2, 3).unwrap().first_failure, None);
        assert_eq!(dist0(&k2, &two, 3).unwrap().first_failure, Some(2));
        assert_eq!(dist0(&k2, &two, 3).unwrap().to_string(), "1/4");
        // four pairwise distinct vertices need four rounds
        assert_eq!(
            dist0(&complete(3), &complete(4), 5).unwrap().first_failure,
            Some(4)
        );
        // non-isomorphic pebbles differ already at rank 0
        assert_eq!(
            dist_p(&k2, &[0, 1], &two, &[0, 1], 2)
                .unwrap()
                .first_failure,
            Some(0)
        );
    }

    #[test]
    fn cap_type_examples() {
        let leaf = RootedTree::single(0, 3).unwrap();
        for k in 1..5 {
            assert_eq!(cap_type(&leaf, 0, k).unwrap(), CapType::leaf(0, k));
        }
        assert_eq!(
            cap_type(&star(5), 0, 3).unwrap(),
            cap_type(&star(7), 0, 3).unwrap()
        );
        assert_ne!(
            cap_type(&star(5), 0, 6).unwrap(),
            cap_type(&star(7), 0, 6).unwrap()
        );
        assert!(cap_type(&star(2), 3, 2).is_err());
    }

    #[test]
    fn encode_examples() {
        let s3 = star(3);
        let root = encode_vertex(&s3, 0, 3).unwrap();
        assert_eq!(root.path, vec![Arc::new(cap_type(&s3, 0, 3).unwrap())]);
        let leaf = encode_vertex(&s3, 2, 3).unwrap();
        assert_eq!(leaf.len(), 2);
        assert_eq!(*leaf.path[1], CapType::leaf(0, 3));
        assert!(leaf.is_consistent());
        let t = RootedTree::new(vec![0, 0, 1], vec![0, 1, 2], 3).unwrap();
        assert_eq!(encode_vertex(&t, 2, 5).unwrap().len(), 3);
        assert_eq!(
            encode_all(&t, 5).unwrap()[2],
            encode_vertex(&t, 2, 5).unwrap()
        );
    }

    #[test]
    fn recap_merges_types() {
        // root with children: a 2-leaf star and a 3-leaf star
        let t = RootedTree::new(vec![0, 0, 1, 1, 0, 4, 4, 4], vec![0; 8], 3).unwrap();
        let fine = cap_type(&t, 0, 4).unwrap();
        assert_eq!(fine.children.len(), 2);
        let coarse = fine.recap(2);
        assert_eq!(coarse, cap_type(&t, 0, 2).unwrap());
        assert_eq!(coarse.children.len(), 1);
        assert_eq!(coarse.children[0].1, 2);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        pub(crate) fn arb_tree(
            max: usize,
            h: usize,
            colors: u32,
        ) -> impl Strategy<Value = RootedTree> {
            (1..=max)
                .prop_flat_map(move |n| {
                    (
                        proptest::collection::vec(any::<proptest::sample::Index>(), n),
                        proptest::collection::vec(0..colors, n),
                    )
                })
                .prop_map(move |(picks, colors)| {
                    let n = picks.len();
                    let mut parent = vec![0; n];
                    let mut depth = vec![1; n];
                    for v in 1..n {
                        let allowed: Vec<usize> = (0..v).filter(|&u| depth[u] < h).collect();
                        let p = allowed[picks[v].index(allowed.len())];
                        parent[v] = p;
                        depth[v] = depth[p] + 1;
                    }
                    RootedTree::new(parent, colors, h).unwrap()
                })
        }

        fn arb_graph(max: usize) -> impl Strategy<Value = Structure> {
            (1..=max).prop_flat_map(|n| {
                proptest::collection::vec(any::<bool>(), n * (n - 1) / 2).prop_map(move |bits| {
                    let mut edges = Vec::new();
                    let mut k = 0;
                    for i in 0..n {
                        for j in i + 1..n {
                            if bits[k] {
                                edges.push((i, j));
                            }
                            k += 1;
                        }
                    }
                    Structure::graph(n, &edges).unwrap()
                })
            })
        }

        fn permute(t: &RootedTree, seed: u64) -> RootedTree {
            let n = t.len();
            let mut perm: Vec<usize> = (0..n).collect();
            let mut state = seed | 1;
            for i in (1..n).rev() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                perm.swap(i, state as usize % (i + 1));
            }
            let mut parent = vec![0; n];
            let mut color = vec![0; n];
            for v in 0..n {
                parent[perm[v]] = perm[t.parents()[v]];
                color[perm[v]] = t.color(v);
            }
            RootedTree::new(parent, color, t.height_bound()).unwrap()
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn equivalence_relation_and_monotone(a in arb_graph(4), b in arb_graph(4), c in arb_graph(4), r in 0usize..3) {
                let eq = |x: &Structure, y: &Structure, r| ef_equivalent(x, &[], y, &[], r).unwrap();
                prop_assert!(eq(&a, &a, r));
                prop_assert_eq!(eq(&a, &b, r), eq(&b, &a, r));
                if eq(&a, &b, r) && eq(&b, &c, r) {
                    prop_assert!(eq(&a, &c, r));
                }
                if eq(&a, &b, r + 1) {
                    prop_assert!(eq(&a, &b, r));
                }
            }

            #[test]
            fn ultrametric(a in arb_graph(4), b in arb_graph(4), c in arb_graph(4)) {
                let d = |x: &Structure, y: &Structure| dist0(x, y, 4).unwrap().value();
                let (ab, bc, ac) = (d(&a, &b), d(&b, &c), d(&a, &c));
                prop_assert!(ac <= ab.clone().max(bc.clone()));
                prop_assert!(ac <= ab + bc);
            }

            #[test]
            fn cap_types_are_label_invariant(t in arb_tree(10, 3, 2), seed in any::<u64>(), k in 1u32..4) {
                let u = permute(&t, seed);
                prop_assert_eq!(cap_type(&t, t.root(), k).unwrap(), cap_type(&u, u.root(), k).unwrap());
                let mut a: Vec<EncodeTuple> = encode_all(&t, k).unwrap();
                let mut b: Vec<EncodeTuple> = encode_all(&u, k).unwrap();
                a.sort();
                b.sort();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn recap_commutes_with_typing(t in arb_tree(12, 3, 2), k in 1u32..5, j in 1u32..5) {
                let (lo, hi) = (k.min(j), k.max(j));
                prop_assert_eq!(cap_type(&t, t.root(), hi).unwrap().recap(lo), cap_type(&t, t.root(), lo).unwrap());
            }

            #[test]
            fn equal_encode_tuples_are_ef_equivalent(
                t in arb_tree(8, 2, 1),
                u in arb_tree(8, 2, 1),
            ) {
                let (r, h) = (1usize, 2usize);
                let k = (r + h) as u32;
                let et = encode_all(&t, k).unwrap();
                let eu = encode_all(&u, k).unwrap();
                // the marked vertex becomes color 1
                let marked = |tree: &RootedTree, v: usize| {
                    let colors: Vec<u32> = (0..tree.len()).map(|x| u32::from(x == v)).collect();
                    RootedTree::new(tree.parents().to_vec(), colors, h)
                        .unwrap()
                        .to_structure(ColorCoding::Indexed(2))
                        .unwrap()
                };
                for v in 0..t.len() {
                    for w in 0..u.len() {
                        if et[v] == eu[w] {
                            let (a, b) = (marked(&t, v), marked(&u, w));
                            prop_assert!(ef_equivalent(&a, &[], &b, &[], r).unwrap());
                        }
                    }
                }
            }

            #[test]
            fn encode_tuples_are_consistent(t in arb_tree(12, 3, 3), k in 1u32..4) {
                for (v, e) in encode_all(&t, k).unwrap().iter().enumerate() {
                    prop_assert!(e.is_consistent());
                    prop_assert_eq!(e.len(), t.depth(v));
                }
            }
        }
    }
}
