//! Finite-rank statistics of bounded-height colored rooted trees.
//!
//! A [`TreeStatistic`] of height bound `h` and rank `r` is a mass
//! distribution over encode tuples with cap `K = r + h`, together with the
//! branching multiplicities `w'(t, t')` (capped child counts). Statistics
//! are extracted from finite trees and realised again by [`build_tree`] and
//! [`build_approx`].

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::equiv::{cap_types, encode_all, CapType, EncodeTuple, EquivError};
use crate::interp::{i_f_to_y, InterpError};
use crate::seqan::{fmtp_check, FmtpViolation};
use crate::structure::{ColorCoding, RootedTree, Structure, StructureError, PRINCIPAL, ROOT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TreeError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Equiv(#[from] EquivError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error("height bound must be at least 1")]
    ZeroHeight,
    #[error("encode tuples must be nonempty")]
    EmptyTuple,
    #[error("tuple {tuple} is longer than the height bound {h}")]
    TupleTooLong { tuple: String, h: usize },
    #[error("type {ty} has cap {found}, expected {expected}")]
    CapMismatch {
        ty: String,
        found: u32,
        expected: u32,
    },
    #[error("type {ty} at level {level} is too high for the height bound {h}")]
    TypeTooHigh { ty: String, level: usize, h: usize },
    #[error("mass {mass} of {tuple} is outside [0, 1]")]
    MassOutOfRange { tuple: String, mass: String },
    #[error("w' entry {from} -> {to} does not extend its source by one type")]
    NotAnExtension { from: String, to: String },
    #[error("w' entry {from} -> {to} is {found} but the types give {expected}")]
    WeightMismatch {
        from: String,
        to: String,
        found: u32,
        expected: u32,
    },
    #[error("statistic is not pure: {0}")]
    NotPure(String),
    #[error("statistic violates mass transport in {} place(s)", .0.len())]
    Fmtp(Vec<FmtpViolation>),
    #[error("target size must be at least {min}, got {found}")]
    TargetTooSmall { min: usize, found: usize },
    #[error("tuple {0} would get vertices but its parent tuple has none")]
    InconsistentCounts(String),
    #[error("threshold must lie in (0, 1), got {0}")]
    InvalidAlpha(String),
    #[error("accuracy must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("the tree is too large to build ({0} vertices)")]
    TooLarge(String),
}

/// Masses of encode tuples and capped branching multiplicities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeStatistic {
    h: usize,
    r: usize,
    mu: BTreeMap<EncodeTuple, BigRational>,
    w: BTreeMap<(EncodeTuple, EncodeTuple), u32>,
}

fn check_type(ty: &CapType, cap: u32, level: usize, h: usize) -> Result<(), TreeError> {
    if ty.cap != cap {
        return Err(TreeError::CapMismatch {
            ty: ty.to_string(),
            found: ty.cap,
            expected: cap,
        });
    }
    if level + ty.height() > h {
        return Err(TreeError::TypeTooHigh {
            ty: ty.to_string(),
            level,
            h,
        });
    }
    for (c, _) in &ty.children {
        check_type(c, cap, level + 1, h)?;
    }
    Ok(())
}

impl TreeStatistic {
    /// Checks structural well-formedness: tuple lengths, caps, type heights,
    /// masses in `[0, 1]` and `w'` entries agreeing with the types. Mass
    /// transport is not checked here, see [`fmtp_check`].
    pub fn new(
        h: usize,
        r: usize,
        mu: BTreeMap<EncodeTuple, BigRational>,
        w: BTreeMap<(EncodeTuple, EncodeTuple), u32>,
    ) -> Result<Self, TreeError> {
        if h == 0 {
            return Err(TreeError::ZeroHeight);
        }
        let cap = (r + h) as u32;
        for (t, m) in &mu {
            if t.is_empty() {
                return Err(TreeError::EmptyTuple);
            }
            if t.len() > h {
                return Err(TreeError::TupleTooLong {
                    tuple: t.to_string(),
                    h,
                });
            }
            for (level, ty) in t.path.iter().enumerate() {
                check_type(ty, cap, level, h)?;
            }
            if m.is_negative() || *m > BigRational::one() {
                return Err(TreeError::MassOutOfRange {
                    tuple: t.to_string(),
                    mass: m.to_string(),
                });
            }
        }
        for ((from, to), &count) in &w {
            if to.parent().as_ref() != Some(from) {
                return Err(TreeError::NotAnExtension {
                    from: from.to_string(),
                    to: to.to_string(),
                });
            }
            let expected = from.last().count_of(to.last()).min(cap);
            if count != expected {
                return Err(TreeError::WeightMismatch {
                    from: from.to_string(),
                    to: to.to_string(),
                    found: count,
                    expected,
                });
            }
        }
        Ok(Self { h, r, mu, w })
    }

    /// A statistic whose `w'` table is read off the types.
    pub fn with_derived_w(
        h: usize,
        r: usize,
        mu: BTreeMap<EncodeTuple, BigRational>,
    ) -> Result<Self, TreeError> {
        let w = derive_w(&mu, (r + h) as u32);
        Self::new(h, r, mu, w)
    }

    pub fn height_bound(&self) -> usize {
        self.h
    }

    pub fn rank(&self) -> usize {
        self.r
    }

    /// The cap `K = r + h`.
    pub fn cap(&self) -> u32 {
        (self.r + self.h) as u32
    }

    pub fn masses(&self) -> &BTreeMap<EncodeTuple, BigRational> {
        &self.mu
    }

    pub fn weights(&self) -> &BTreeMap<(EncodeTuple, EncodeTuple), u32> {
        &self.w
    }

    /// Mass of a tuple, zero when absent.
    pub fn mass(&self, t: &EncodeTuple) -> BigRational {
        self.mu.get(t).cloned().unwrap_or_else(BigRational::zero)
    }

    /// Branching multiplicity `w'(t, t')`: the stored value, or the capped
    /// count of the last type of `t'` among the children of the last type of `t`.
    pub fn w_prime(&self, t: &EncodeTuple, t2: &EncodeTuple) -> u32 {
        if let Some(&c) = self.w.get(&(t.clone(), t2.clone())) {
            return c;
        }
        if t2.parent().as_ref() != Some(t) {
            return 0;
        }
        t.last().count_of(t2.last()).min(self.cap())
    }

    /// Tuples of positive mass.
    pub fn support(&self) -> impl Iterator<Item = &EncodeTuple> {
        self.mu
            .iter()
            .filter(|(_, m)| m.is_positive())
            .map(|(t, _)| t)
    }

    pub fn support_size(&self) -> usize {
        self.support().count()
    }

    pub fn total_mass(&self) -> BigRational {
        self.mu.values().fold(BigRational::zero(), |acc, m| acc + m)
    }

    /// Total mass of the tuples extending `t` (including `t`).
    pub fn subtree_mass(&self, t: &EncodeTuple) -> BigRational {
        self.mu
            .iter()
            .filter(|(s, _)| s.len() >= t.len() && s.path[..t.len()] == t.path[..])
            .fold(BigRational::zero(), |acc, (_, m)| acc + m)
    }

    /// The size constant `C = K^h * |support|`.
    pub fn size_constant(&self) -> u64 {
        (self.cap() as u64)
            .saturating_pow(self.h as u32)
            .saturating_mul(self.support_size() as u64)
    }

    /// The unique length-1 tuple, provided the total mass is 1.
    pub fn pure_root(&self) -> Result<&EncodeTuple, TreeError> {
        let roots: Vec<&EncodeTuple> = self.mu.keys().filter(|t| t.len() == 1).collect();
        if roots.len() != 1 {
            return Err(TreeError::NotPure(format!(
                "expected one root tuple, found {}",
                roots.len()
            )));
        }
        let total = self.total_mass();
        if !total.is_one() {
            return Err(TreeError::NotPure(format!("total mass is {total}, not 1")));
        }
        Ok(roots[0])
    }
}

/// `w'` for every stored parent/child pair, read off the types.
pub fn derive_w(
    mu: &BTreeMap<EncodeTuple, BigRational>,
    cap: u32,
) -> BTreeMap<(EncodeTuple, EncodeTuple), u32> {
    mu.keys()
        .filter_map(|t2| {
            let t = t2.parent()?;
            mu.contains_key(&t).then(|| {
                (
                    (t.clone(), t2.clone()),
                    t.last().count_of(t2.last()).min(cap),
                )
            })
        })
        .collect()
}

/// Fraction of vertices realising each encode tuple at cap `r + h`, where
/// `h` is the height bound of `t`. Child counts are determined by the types,
/// so `w'` is the same for every realising parent.
pub fn statistic_of_tree(t: &RootedTree, r: usize) -> Result<TreeStatistic, TreeError> {
    let h = t.height_bound();
    let cap = (r + h) as u32;
    let n = t.len();
    let mut counts: BTreeMap<EncodeTuple, usize> = BTreeMap::new();
    for e in encode_all(t, cap)? {
        *counts.entry(e).or_insert(0) += 1;
    }
    let mu = counts
        .into_iter()
        .map(|(e, c)| (e, BigRational::new(BigInt::from(c), BigInt::from(n))))
        .collect();
    TreeStatistic::with_derived_w(h, r, mu)
}

fn floor_scaled(m: &BigRational, scale: usize) -> Result<usize, TreeError> {
    (m * BigRational::from_integer(BigInt::from(scale)))
        .floor()
        .to_integer()
        .to_usize()
        .ok_or_else(|| TreeError::TooLarge(format!("{m} * {scale}")))
}

#[derive(Debug, Clone)]
struct PlanNode {
    tuple: EncodeTuple,
    parent: Option<usize>,
    mass: BigRational,
    w: u32,
}

/// Every tuple reachable from the root through the child lists of the
/// types, parents before children.
fn plan(stat: &TreeStatistic, root: &EncodeTuple) -> Vec<PlanNode> {
    let mut nodes = vec![PlanNode {
        tuple: root.clone(),
        parent: None,
        mass: stat.mass(root),
        w: 1,
    }];
    let mut i = 0;
    while i < nodes.len() {
        let t = nodes[i].tuple.clone();
        for (ty, _) in &t.last().children {
            let t2 = t.child(ty.clone());
            nodes.push(PlanNode {
                mass: stat.mass(&t2),
                w: stat.w_prime(&t, &t2),
                tuple: t2,
                parent: Some(i),
            });
        }
        i += 1;
    }
    nodes
}

/// Whether the count of a node grows with the scale.
fn scaled(nodes: &[PlanNode], i: usize, cap: u32) -> bool {
    let node = &nodes[i];
    match node.parent {
        None => false,
        Some(p) => node.mass.is_positive() && (nodes[p].mass.is_zero() || node.w >= cap),
    }
}

fn plan_counts(nodes: &[PlanNode], cap: u32, scale: usize) -> Result<Vec<usize>, TreeError> {
    let mut counts = vec![0usize; nodes.len()];
    for (i, node) in nodes.iter().enumerate() {
        counts[i] = match node.parent {
            None => 1,
            Some(p) => {
                let parent = counts[p];
                let multiplied = parent
                    .checked_mul(node.w as usize)
                    .ok_or_else(|| TreeError::TooLarge(node.tuple.to_string()))?;
                if scaled(nodes, i, cap) {
                    multiplied.max(floor_scaled(&node.mass, scale)?)
                } else {
                    multiplied
                }
            }
        };
        if let Some(p) = node.parent {
            if counts[p] == 0 && counts[i] > 0 {
                return Err(TreeError::InconsistentCounts(node.tuple.to_string()));
            }
        }
    }
    Ok(counts)
}

fn plan_size(nodes: &[PlanNode], cap: u32, scale: usize) -> Result<usize, TreeError> {
    let counts = plan_counts(nodes, cap, scale)?;
    counts
        .iter()
        .try_fold(0usize, |acc, &c| acc.checked_add(c))
        .ok_or_else(|| TreeError::TooLarge("sum of counts".into()))
}

/// Outcome of [`build_tree`].
#[derive(Debug, Clone, PartialEq)]
pub struct BuildReport {
    pub tree: RootedTree,
    /// Scale `M` at which the four-case rule was evaluated.
    pub scale: usize,
    pub target: usize,
    pub size: usize,
    /// The constant `C = K^h * |support|`.
    pub c_bound: u64,
    /// No count depends on the scale, so the size is fixed by the statistic.
    pub degenerate: bool,
}

/// Realises a pure, mass-transport consistent statistic as a finite tree of
/// roughly `target` vertices.
///
/// The root gets one vertex. A child tuple `t'` of `t` gets `w' * |V_t|`
/// vertices, except when its mass is positive and either `t` has mass zero
/// or `w' = K`; then it gets `max(K * |V_t|, floor(mu(t') M))`. The scale
/// `M` is the least value `>= target` for which the size reaches `target`.
/// Vertices of `t'` are spread round-robin over the vertices of `t`.
pub fn build_tree(stat: &TreeStatistic, target: usize) -> Result<BuildReport, TreeError> {
    if target == 0 {
        return Err(TreeError::TargetTooSmall { min: 1, found: 0 });
    }
    let root = stat.pure_root()?.clone();
    let violations = fmtp_check(stat);
    if !violations.is_empty() {
        return Err(TreeError::Fmtp(violations));
    }
    let cap = stat.cap();
    let nodes = plan(stat, &root);
    let degenerate = !(0..nodes.len()).any(|i| scaled(&nodes, i, cap));
    let mut scale = target;
    if !degenerate && plan_size(&nodes, cap, scale)? < target {
        let mut lo = scale;
        let mut hi = scale;
        while plan_size(&nodes, cap, hi)? < target {
            lo = hi;
            hi = hi
                .checked_mul(2)
                .ok_or_else(|| TreeError::TooLarge("scale".into()))?;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if plan_size(&nodes, cap, mid)? >= target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        scale = hi;
    }
    let counts = plan_counts(&nodes, cap, scale)?;
    let size: usize = counts.iter().sum();
    let mut start = vec![0usize; nodes.len()];
    let mut parent = Vec::with_capacity(size);
    let mut color = Vec::with_capacity(size);
    for (i, node) in nodes.iter().enumerate() {
        start[i] = parent.len();
        for j in 0..counts[i] {
            let v = parent.len();
            parent.push(match node.parent {
                None => v,
                Some(p) => start[p] + j % counts[p],
            });
            color.push(node.tuple.last().color);
        }
    }
    Ok(BuildReport {
        tree: RootedTree::new(parent, color, stat.h)?,
        scale,
        target,
        size,
        c_bound: stat.size_constant(),
        degenerate,
    })
}

/// The smallest tree whose root has type `ty`: every child type occurs
/// exactly its (capped) count.
pub fn realize_type(ty: &CapType, height_bound: usize) -> Result<RootedTree, TreeError> {
    let mut parent = vec![0usize];
    let mut color = vec![ty.color];
    let mut stack: Vec<(&CapType, usize)> = vec![(ty, 0)];
    while let Some((t, v)) = stack.pop() {
        for (c, n) in &t.children {
            for _ in 0..*n {
                let u = parent.len();
                parent.push(v);
                color.push(c.color);
                stack.push((c.as_ref(), u));
            }
        }
    }
    Ok(RootedTree::new(parent, color, height_bound)?)
}

/// A node of a heavy skeleton.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkeletonNode {
    pub tuple: EncodeTuple,
    pub parent: Option<usize>,
    /// Mass of the subtree of one vertex realising the tuple.
    pub mass: BigRational,
    /// Index among the copies of the same tuple below the same parent node.
    pub copy: usize,
}

/// Tree of heavy nodes; node 0 is the root with mass 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Skeleton {
    pub nodes: Vec<SkeletonNode>,
}

impl Skeleton {
    pub fn children(&self, i: usize) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&j| self.nodes[j].parent == Some(i))
            .collect()
    }
}

/// A child tuple of some vertex together with how many siblings share it
/// and the mass below one of them.
#[derive(Debug, Clone, PartialEq)]
struct Branch {
    tuple: EncodeTuple,
    /// Sons per parent vertex; `None` when the count is unbounded.
    multiplicity: Option<BigRational>,
    per_vertex: BigRational,
}

fn branches(stat: &TreeStatistic, t: &EncodeTuple, per_vertex: &BigRational) -> Vec<Branch> {
    let cap = stat.cap();
    let sub = stat.subtree_mass(t);
    let mt = stat.mass(t);
    t.last()
        .children
        .iter()
        .map(|(ty, _)| {
            let t2 = t.child(ty.clone());
            let w = stat.w_prime(t, &t2);
            let multiplicity = if w < cap {
                Some(BigRational::from_integer(BigInt::from(w)))
            } else if mt.is_positive() {
                Some(stat.mass(&t2) / &mt)
            } else {
                None
            };
            let per = match &multiplicity {
                Some(m) if sub.is_positive() && m.is_positive() => {
                    per_vertex * stat.subtree_mass(&t2) / &sub / m
                }
                _ => BigRational::zero(),
            };
            Branch {
                tuple: t2,
                multiplicity,
                per_vertex: per,
            }
        })
        .collect()
}

fn copies(m: &Option<BigRational>) -> usize {
    m.as_ref()
        .and_then(|m| m.floor().to_integer().to_usize())
        .unwrap_or(1)
        .max(1)
}

fn check_alpha(alpha: &BigRational) -> Result<(), TreeError> {
    if alpha.is_positive() && *alpha < BigRational::one() {
        Ok(())
    } else {
        Err(TreeError::InvalidAlpha(alpha.to_string()))
    }
}

/// Vertices whose subtree carries more than `alpha` times the mass of the
/// subtree of their (heavy) parent. Tuples with a bounded multiplicity are
/// expanded into that many copies.
pub fn heavy_skeleton(stat: &TreeStatistic, alpha: &BigRational) -> Result<Skeleton, TreeError> {
    check_alpha(alpha)?;
    let root = stat.pure_root()?.clone();
    let mut nodes = vec![SkeletonNode {
        tuple: root,
        parent: None,
        mass: BigRational::one(),
        copy: 0,
    }];
    let mut i = 0;
    while i < nodes.len() {
        let (t, m) = (nodes[i].tuple.clone(), nodes[i].mass.clone());
        for b in branches(stat, &t, &m) {
            if b.per_vertex > alpha * &m {
                for copy in 0..copies(&b.multiplicity) {
                    nodes.push(SkeletonNode {
                        tuple: b.tuple.clone(),
                        parent: Some(i),
                        mass: b.per_vertex.clone(),
                        copy,
                    });
                }
            }
        }
        i += 1;
    }
    Ok(Skeleton { nodes })
}

/// Outcome of [`build_approx`].
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxReport {
    pub tree: RootedTree,
    pub target: usize,
    pub size: usize,
    /// Additive size slack accumulated over the recursion.
    pub c_bound: u64,
    /// Heavy root sons split off at the top level, with their copy counts.
    pub heavy_sons: Vec<(EncodeTuple, usize)>,
    /// The root of the result has the type of the statistic's root tuple.
    pub root_type_matches: bool,
    /// Some piece was realised at a size fixed by its statistic.
    pub degenerate: bool,
}

fn colors_of(ty: &CapType) -> u32 {
    ty.children
        .iter()
        .map(|(c, _)| colors_of(c))
        .max()
        .unwrap_or(0)
        .max(ty.color + 1)
}

fn rescale(m: &BigRational, total: &BigRational) -> BigRational {
    if total.is_zero() {
        BigRational::zero()
    } else {
        m / total
    }
}

fn ceil_scaled(m: &BigRational, n: usize) -> Result<usize, TreeError> {
    (m * BigRational::from_integer(BigInt::from(n)))
        .ceil()
        .to_integer()
        .to_usize()
        .ok_or_else(|| TreeError::TooLarge(format!("{m} * {n}")))
}

/// Recursive approximation: heavy root sons (threshold
/// `alpha = eps^2 / (2 (3c)^h)` with `c = max(p, 1)`) of bounded
/// multiplicity `w' < K` are built separately from their branch statistics
/// with accuracy `eps / (3c)`. The rest of the statistic is built first by
/// [`build_tree`], the heavy copies share the remaining size in proportion
/// to their mass, and the pieces are glued back with the forest-to-tree
/// scheme.
pub fn build_approx(
    stat: &TreeStatistic,
    p: usize,
    eps: f64,
    target: usize,
) -> Result<ApproxReport, TreeError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(TreeError::InvalidEpsilon(eps));
    }
    if target == 0 {
        return Err(TreeError::TargetTooSmall { min: 1, found: 0 });
    }
    let root = stat.pure_root()?.clone();
    let violations = fmtp_check(stat);
    if !violations.is_empty() {
        return Err(TreeError::Fmtp(violations));
    }
    let c = p.max(1) as f64;
    let alpha = eps * eps / (2.0 * (3.0 * c).powi(stat.h as i32));
    let alpha = BigRational::from_float(alpha).unwrap_or_else(BigRational::zero);
    let heavy: Vec<(Branch, usize)> = branches(stat, &root, &BigRational::one())
        .into_iter()
        .filter(|b| stat.w_prime(&root, &b.tuple) < stat.cap() && b.per_vertex > alpha)
        .map(|b| {
            let k = copies(&b.multiplicity);
            (b, k)
        })
        .collect();
    if heavy.is_empty() {
        let built = build_tree(stat, target)?;
        return Ok(ApproxReport {
            root_type_matches: root_matches(&built.tree, stat, &root)?,
            size: built.size,
            target,
            c_bound: built.c_bound,
            heavy_sons: Vec::new(),
            degenerate: built.degenerate,
            tree: built.tree,
        });
    }

    let cap = stat.cap();
    let heavy_types: BTreeSet<Arc<CapType>> =
        heavy.iter().map(|(b, _)| b.tuple.last().clone()).collect();
    let mut c_bound: u64 = 0;
    let mut degenerate = false;

    let root_ty = root.last();
    let residual_ty = Arc::new(CapType::from_children(
        root_ty.color,
        root_ty
            .children
            .iter()
            .filter(|(t, _)| !heavy_types.contains(t))
            .cloned(),
        cap,
    ));
    let mut mu: BTreeMap<EncodeTuple, BigRational> = BTreeMap::new();
    for (s, m) in &stat.mu {
        if s.len() > 1 && heavy_types.contains(&s.path[1]) {
            continue;
        }
        let mut path = s.path.clone();
        path[0] = residual_ty.clone();
        mu.insert(EncodeTuple::new(path), m.clone());
    }
    let a0 = mu.values().fold(BigRational::zero(), |acc, m| acc + m);
    let residual_tree = if a0.is_zero() {
        degenerate = true;
        realize_type(&residual_ty, stat.h)?
    } else {
        let mu = mu.into_iter().map(|(t, m)| (t, &m / &a0)).collect();
        let residual = TreeStatistic::with_derived_w(stat.h, stat.r, mu)?;
        let built = build_tree(&residual, ceil_scaled(&a0, target)?.max(1))?;
        c_bound = c_bound.saturating_add(built.c_bound.saturating_add(1));
        degenerate |= built.degenerate;
        built.tree
    };

    // The heavy branches share what the residual left of the target.
    let remaining = target.saturating_sub(residual_tree.len());
    let heavy_mass = BigRational::one() - &a0;
    let mut pieces: Vec<(RootedTree, usize)> = Vec::new();
    for (b, k) in &heavy {
        let sub = stat.subtree_mass(&b.tuple);
        let mut mu: BTreeMap<EncodeTuple, BigRational> = stat
            .mu
            .iter()
            .filter(|(s, _)| s.len() > 1 && s.path[..2] == b.tuple.path[..])
            .map(|(s, m)| (EncodeTuple::new(s.path[1..].to_vec()), rescale(m, &sub)))
            .collect();
        mu.entry(EncodeTuple::new(vec![b.tuple.last().clone()]))
            .or_insert_with(BigRational::zero);
        let branch = TreeStatistic::with_derived_w(stat.h, stat.r, mu)?;
        let share = rescale(&sub, &heavy_mass) / BigRational::from_integer(BigInt::from(*k));
        let sub_target = ceil_scaled(&share, remaining)?.max(1);
        let built = build_approx(&branch, p, eps / (3.0 * c), sub_target)?;
        c_bound = c_bound.saturating_add(built.c_bound.saturating_add(1).saturating_mul(*k as u64));
        degenerate |= built.degenerate;
        pieces.push((built.tree, *k));
    }

    let colors = colors_of(root_ty) as usize;
    let tree = glue(&residual_tree, &pieces, colors, stat.h)?;
    Ok(ApproxReport {
        root_type_matches: root_matches(&tree, stat, &root)?,
        size: tree.len(),
        target,
        c_bound,
        heavy_sons: heavy.into_iter().map(|(b, k)| (b.tuple, k)).collect(),
        degenerate,
        tree,
    })
}

fn root_matches(
    tree: &RootedTree,
    stat: &TreeStatistic,
    root: &EncodeTuple,
) -> Result<bool, TreeError> {
    let types = cap_types(tree, stat.cap())?;
    Ok(types[tree.root()] == *root.last())
}

/// Forest of the principal tree and copies of the pieces, turned into one
/// tree by the forest-to-tree scheme.
fn glue(
    principal: &RootedTree,
    pieces: &[(RootedTree, usize)],
    colors: usize,
    h: usize,
) -> Result<RootedTree, TreeError> {
    let coding = ColorCoding::Indexed(colors);
    let mut forest = principal.to_structure(coding)?;
    for (piece, k) in pieces {
        let s = piece.to_structure(coding)?;
        for _ in 0..*k {
            forest = forest.disjoint_union(&s)?;
        }
    }
    let roots = forest.tuples_named(ROOT)?;
    let mut tables: Vec<(String, Vec<Vec<usize>>)> = forest
        .signature()
        .relations()
        .iter()
        .map(|r| {
            (
                r.name.clone(),
                forest.tuples_named(&r.name).expect("own relation"),
            )
        })
        .collect();
    let root_pos = tables
        .iter()
        .position(|(n, _)| n == ROOT)
        .expect("root relation");
    let principal_root = principal.root();
    tables[root_pos].1 = roots
        .into_iter()
        .filter(|t| t[0] != principal_root)
        .collect();
    tables.push((PRINCIPAL.to_string(), vec![vec![principal_root]]));
    let sig = crate::structure::Signature::rooted_tree(colors, true);
    let lifted = Structure::new(sig, forest.size(), tables)?;
    let tree = i_f_to_y(colors).apply(&lifted)?;
    Ok(RootedTree::from_structure(&tree, coding, h)?)
}
