//! Basic interpretation schemes, formula translation and tree-depth.
//!
//! A basic scheme of exponent `k` maps a structure `A` over the source
//! signature to a structure on `A^k` over the target signature: a target
//! relation `R` of arity `r` holds on `(v1, .., vr)` iff `A` satisfies the
//! defining formula `theta_R` with `v_j` spread over the variables
//! `x{(j-1)k+1} .. x{jk}`. Elements of `A^k` are numbered lexicographically.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::eval::{EvalError, Evaluator};
use crate::folang::{Formula, ParseError, Var};
use crate::structure::{
    color_relation, ColorCoding, RootedTree, Signature, Structure, StructureError, ADJ, PRINCIPAL,
    ROOT,
};

/// Largest graph accepted by the exact tree-depth search.
pub const EXACT_TD_LIMIT: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InterpError {
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("exponent must be at least 1")]
    ZeroExponent,
    #[error("no definition for target relation `{0}`")]
    MissingDefinition(String),
    #[error("definition given for `{0}`, which is not a target relation")]
    UnknownDefinition(String),
    #[error(
        "definition of `{name}` has free variable x{var}, but only x1..x{allowed} are available"
    )]
    DefinitionRank {
        name: String,
        var: Var,
        allowed: usize,
    },
    #[error("structure signature does not match the scheme source signature")]
    SourceMismatch,
    #[error("formula translation is only available for exponent 1, scheme has exponent {0}")]
    UnsupportedExponent(usize),
    #[error("{0}")]
    OutsideClass(String),
    #[error("tree-depth needs a graph")]
    NotAGraph,
    #[error("exact tree-depth is limited to {limit} vertices, got {size}")]
    TooLarge { size: usize, limit: usize },
    #[error("a decomposition of height {needed} is needed but the bound is {bound}")]
    DepthExceeded { needed: usize, bound: usize },
    #[error("height bound must be at least 1")]
    ZeroHeight,
    #[error("the empty graph has no decomposition")]
    EmptyGraph,
}

/// A basic interpretation scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct BasicScheme {
    source: Signature,
    target: Signature,
    exponent: usize,
    defs: Vec<Formula>,
}

impl BasicScheme {
    /// `defs` maps every target relation to its defining formula over the
    /// source signature.
    pub fn new(
        source: Signature,
        target: Signature,
        exponent: usize,
        mut defs: BTreeMap<String, Formula>,
    ) -> Result<Self, InterpError> {
        if exponent == 0 {
            return Err(InterpError::ZeroExponent);
        }
        let mut ordered = Vec::with_capacity(target.len());
        for rel in target.relations() {
            let theta = defs
                .remove(&rel.name)
                .ok_or_else(|| InterpError::MissingDefinition(rel.name.clone()))?;
            theta.check_signature(&source)?;
            let allowed = exponent * rel.arity;
            if let Some(&var) = theta.free_vars().iter().find(|&&v| v as usize > allowed) {
                return Err(InterpError::DefinitionRank {
                    name: rel.name.clone(),
                    var,
                    allowed,
                });
            }
            ordered.push(theta);
        }
        if let Some(name) = defs.into_keys().next() {
            return Err(InterpError::UnknownDefinition(name));
        }
        Ok(Self {
            source,
            target,
            exponent,
            defs: ordered,
        })
    }

    pub fn source(&self) -> &Signature {
        &self.source
    }

    pub fn target(&self) -> &Signature {
        &self.target
    }

    pub fn exponent(&self) -> usize {
        self.exponent
    }

    /// Defining formula of a target relation.
    pub fn definition(&self, name: &str) -> Option<&Formula> {
        self.target.index_of(name).map(|i| &self.defs[i])
    }

    /// Target relation names paired with their definitions, in signature order.
    pub fn definitions(&self) -> impl Iterator<Item = (&str, &Formula)> {
        self.target
            .relations()
            .iter()
            .map(|r| r.name.as_str())
            .zip(&self.defs)
    }

    /// The scheme that keeps every relation of `sig` unchanged.
    pub fn identity(sig: &Signature) -> Self {
        let defs = sig
            .relations()
            .iter()
            .map(|r| Formula::atom(r.name.clone(), (1..=r.arity as Var).collect()))
            .collect();
        Self {
            source: sig.clone(),
            target: sig.clone(),
            exponent: 1,
            defs,
        }
    }

    /// The interpreted structure on `n^k` elements.
    pub fn apply(&self, a: &Structure) -> Result<Structure, InterpError> {
        if a.signature() != &self.source {
            return Err(InterpError::SourceMismatch);
        }
        let n = a.size();
        let k = self.exponent;
        let size = n
            .checked_pow(k as u32)
            .ok_or_else(|| InterpError::OutsideClass("interpreted domain too large".into()))?;
        let mut tables: Vec<(String, Vec<Vec<usize>>)> = Vec::new();
        for (rel, theta) in self.target.relations().iter().zip(&self.defs) {
            let ev = Evaluator::new(a, theta)?;
            let mut tuples = Vec::new();
            let mut values = vec![0usize; k * rel.arity];
            let mut target = vec![0usize; rel.arity];
            if size > 0 {
                loop {
                    if ev.holds(&values) {
                        for (j, slot) in target.iter_mut().enumerate() {
                            *slot = values[j * k..(j + 1) * k]
                                .iter()
                                .fold(0, |acc, &x| acc * n + x);
                        }
                        tuples.push(target.clone());
                    }
                    if !advance(&mut values, n) {
                        break;
                    }
                }
            }
            tables.push((rel.name.clone(), tuples));
        }
        Ok(Structure::new(self.target.clone(), size, tables)?)
    }

    /// The dual formula over the source signature: every target atom is
    /// replaced by its definition. Equality atoms are kept.
    pub fn translate(&self, phi: &Formula) -> Result<Formula, InterpError> {
        if self.exponent != 1 {
            return Err(InterpError::UnsupportedExponent(self.exponent));
        }
        phi.check_signature(&self.target)?;
        Ok(phi.map_atoms(&mut |rel, args| {
            let theta = self.definition(rel).expect("checked against target");
            let map: BTreeMap<Var, Var> = args
                .iter()
                .enumerate()
                .map(|(i, &v)| (i as Var + 1, v))
                .collect();
            theta.substitute(&map)
        }))
    }
}

/// Steps a tuple over `0..n` to its lexicographic successor.
fn advance(values: &mut [usize], n: usize) -> bool {
    for slot in values.iter_mut().rev() {
        *slot += 1;
        if *slot < n {
            return true;
        }
        *slot = 0;
    }
    false
}

fn colors_kept(colors: usize) -> impl Iterator<Item = (String, Formula)> {
    (1..=colors).map(|i| (color_relation(i), Formula::atom(color_relation(i), vec![1])))
}

fn unary(rel: &str, v: Var) -> Formula {
    Formula::atom(rel, vec![v])
}

/// Detaches the sons of the root: they become the roots of a forest and the
/// old root becomes an isolated principal root.
pub fn i_y_to_f(colors: usize) -> BasicScheme {
    let mut defs: BTreeMap<String, Formula> = colors_kept(colors).collect();
    defs.insert(
        ADJ.into(),
        Formula::And(vec![
            Formula::adj(1, 2),
            unary(ROOT, 1).not(),
            unary(ROOT, 2).not(),
        ]),
    );
    defs.insert(
        ROOT.into(),
        Formula::exists(2, Formula::And(vec![unary(ROOT, 2), Formula::adj(2, 1)])),
    );
    defs.insert(PRINCIPAL.into(), unary(ROOT, 1));
    BasicScheme::new(
        Signature::rooted_tree(colors, false),
        Signature::rooted_tree(colors, true),
        1,
        defs,
    )
    .expect("well-formed builtin scheme")
}

/// Makes every non-principal root a son of the principal root.
pub fn i_f_to_y(colors: usize) -> BasicScheme {
    let mut defs: BTreeMap<String, Formula> = colors_kept(colors).collect();
    defs.insert(
        ADJ.into(),
        Formula::Or(vec![
            Formula::adj(1, 2),
            Formula::And(vec![unary(ROOT, 1), unary(PRINCIPAL, 2)]),
            Formula::And(vec![unary(ROOT, 2), unary(PRINCIPAL, 1)]),
        ]),
    );
    defs.insert(ROOT.into(), unary(PRINCIPAL, 1));
    BasicScheme::new(
        Signature::rooted_tree(colors, true),
        Signature::rooted_tree(colors, false),
        1,
        defs,
    )
    .expect("well-formed builtin scheme")
}

/// Renames the root relation to the principal relation.
pub fn i_r_to_p(colors: usize) -> BasicScheme {
    let mut defs: BTreeMap<String, Formula> = colors_kept(colors).collect();
    defs.insert(ADJ.into(), Formula::adj(1, 2));
    defs.insert(ROOT.into(), Formula::False);
    defs.insert(PRINCIPAL.into(), unary(ROOT, 1));
    BasicScheme::new(
        Signature::rooted_tree(colors, false),
        Signature::rooted_tree(colors, true),
        1,
        defs,
    )
    .expect("well-formed builtin scheme")
}

/// Builds formulas with fresh bound variables above `x2`.
struct DepthFormulas {
    next: Var,
}

impl DepthFormulas {
    fn fresh(&mut self) -> Var {
        self.next += 1;
        self.next
    }

    /// `u` has depth `d` (the root has depth 1). Correct on rooted trees: a
    /// vertex with a neighbour at depth `d - 1` has depth `d` or `d - 2`.
    fn depth(&mut self, u: Var, d: usize) -> Formula {
        match d {
            0 => Formula::False,
            1 => unary(ROOT, u),
            _ => {
                let y = self.fresh();
                let step = Formula::exists(
                    y,
                    Formula::And(vec![Formula::adj(u, y), self.depth(y, d - 1)]),
                );
                if d == 2 {
                    step
                } else {
                    Formula::And(vec![step, self.depth(u, d - 2).not()])
                }
            }
        }
    }

    /// `u` is the ancestor of `v` exactly `m >= 1` levels up, with `v` at depth `d`.
    fn ancestor(&mut self, u: Var, v: Var, d: usize, m: usize) -> Formula {
        if m == 1 {
            return Formula::And(vec![Formula::adj(u, v), self.depth(u, d - 1)]);
        }
        let y = self.fresh();
        let parent = Formula::And(vec![Formula::adj(y, v), self.depth(y, d - 1)]);
        let rest = self.ancestor(u, y, d - 1, m - 1);
        Formula::exists(y, Formula::And(vec![parent, rest]))
    }

    /// `u` is the ancestor of `v` at height `i`, for trees of height at most `h`.
    fn ancestor_at(&mut self, u: Var, v: Var, i: usize, h: usize) -> Formula {
        let cases = (i + 1..=h)
            .map(|d| Formula::And(vec![self.depth(v, d), self.ancestor(u, v, d, d - i)]))
            .collect();
        Formula::or_all(cases)
    }
}

/// The closure scheme `I_t`: a tree with colors coded as bits of `C1..C{t-1}`
/// becomes the graph where `v` is adjacent to its ancestor at height `i`
/// whenever `C_i(v)` holds.
pub fn i_t(t: usize) -> BasicScheme {
    let bits = t.saturating_sub(1);
    let mut gen = DepthFormulas { next: 2 };
    let mut cases = Vec::new();
    for i in 1..=bits {
        let c = color_relation(i);
        cases.push(Formula::And(vec![
            unary(&c, 2),
            gen.ancestor_at(1, 2, i, t),
        ]));
        cases.push(Formula::And(vec![
            unary(&c, 1),
            gen.ancestor_at(2, 1, i, t),
        ]));
    }
    let defs = BTreeMap::from([(ADJ.to_string(), Formula::or_all(cases))]);
    BasicScheme::new(
        Signature::rooted_tree(bits, false),
        Signature::graph(),
        1,
        defs,
    )
    .expect("well-formed builtin scheme")
}

/// The built-in schemes by name, for `colors` tree colors and closure height `t`.
pub fn builtin_schemes(colors: usize, t: usize) -> BTreeMap<&'static str, BasicScheme> {
    BTreeMap::from([
        ("I_YtoF", i_y_to_f(colors)),
        ("I_FtoY", i_f_to_y(colors)),
        ("I_RtoP", i_r_to_p(colors)),
        ("I_t", i_t(t)),
    ])
}

/// Applies `I_YtoF` after checking that the input has a root vertex.
pub fn detach_root(a: &Structure) -> Result<Structure, InterpError> {
    let colors = a.signature().color_count();
    let scheme = i_y_to_f(colors);
    let roots = a
        .tuples_named(ROOT)
        .map_err(|_| InterpError::OutsideClass("no root relation".into()))?;
    if roots.len() != 1 {
        return Err(InterpError::OutsideClass(format!(
            "expected one root vertex, found {}",
            roots.len()
        )));
    }
    scheme.apply(a)
}

/// Applies `I_FtoY` after checking that the input has one principal root.
pub fn attach_forest(a: &Structure) -> Result<Structure, InterpError> {
    let colors = a.signature().color_count();
    let scheme = i_f_to_y(colors);
    let principal = a
        .tuples_named(PRINCIPAL)
        .map_err(|_| InterpError::OutsideClass("no principal relation".into()))?;
    if principal.len() != 1 {
        return Err(InterpError::OutsideClass(format!(
            "expected one principal root, found {}",
            principal.len()
        )));
    }
    scheme.apply(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdMode {
    /// Exact search over vertex subsets.
    Exact,
    /// Height of a depth-first search forest.
    Bound,
}

/// A tree-depth value with a certificate rooted forest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeDepth {
    pub depth: usize,
    /// `parent[v] == v` marks a root.
    pub parent: Vec<usize>,
}

/// Number of vertices on the longest root path of a forest.
pub fn forest_height(parent: &[usize]) -> usize {
    (0..parent.len())
        .map(|v| forest_ancestors(parent, v).len())
        .max()
        .unwrap_or(0)
}

/// Ancestors of `v` in a forest, from its root down to `v`.
pub fn forest_ancestors(parent: &[usize], v: usize) -> Vec<usize> {
    let mut path = vec![v];
    let mut u = v;
    while parent[u] != u {
        u = parent[u];
        path.push(u);
    }
    path.reverse();
    path
}

/// Whether every edge of `g` joins a vertex to one of its forest ancestors.
pub fn closure_contains(g: &Structure, parent: &[usize]) -> bool {
    if parent.len() != g.size() {
        return false;
    }
    g.edges().into_iter().all(|(u, v)| {
        forest_ancestors(parent, u).contains(&v) || forest_ancestors(parent, v).contains(&u)
    })
}

/// Tree-depth of a graph with a certificate forest of that height.
pub fn tree_depth(g: &Structure, mode: TdMode) -> Result<TreeDepth, InterpError> {
    if !g.is_graph() {
        return Err(InterpError::NotAGraph);
    }
    let n = g.size();
    let parent = match mode {
        TdMode::Bound => dfs_forest(g),
        TdMode::Exact => {
            if n > EXACT_TD_LIMIT {
                return Err(InterpError::TooLarge {
                    size: n,
                    limit: EXACT_TD_LIMIT,
                });
            }
            let adj: Vec<u32> = g
                .adjacency_lists()
                .iter()
                .map(|ns| ns.iter().fold(0u32, |m, &w| m | 1 << w))
                .collect();
            let mut search = TdSearch {
                adj,
                memo: HashMap::new(),
            };
            let mut parent: Vec<usize> = (0..n).collect();
            let full = if n == 0 { 0 } else { (1u32 << n) - 1 };
            search.td(full);
            search.build(full, None, &mut parent);
            parent
        }
    };
    Ok(TreeDepth {
        depth: forest_height(&parent),
        parent,
    })
}

fn dfs_forest(g: &Structure) -> Vec<usize> {
    let n = g.size();
    let adj = g.adjacency_lists();
    let mut parent = vec![usize::MAX; n];
    for r in 0..n {
        if parent[r] != usize::MAX {
            continue;
        }
        parent[r] = r;
        let mut stack = vec![(r, 0usize)];
        while let Some(top) = stack.last_mut() {
            let (u, i) = *top;
            if i < adj[u].len() {
                top.1 += 1;
                let w = adj[u][i];
                if parent[w] == usize::MAX {
                    parent[w] = u;
                    stack.push((w, 0));
                }
            } else {
                stack.pop();
            }
        }
    }
    parent
}

struct TdSearch {
    adj: Vec<u32>,
    /// Connected vertex set -> (tree-depth, best root).
    memo: HashMap<u32, (usize, usize)>,
}

impl TdSearch {
    fn components(&self, mask: u32) -> Vec<u32> {
        let mut rest = mask;
        let mut out = Vec::new();
        while rest != 0 {
            let start = rest.trailing_zeros() as usize;
            let mut comp = 1u32 << start;
            let mut frontier = comp;
            while frontier != 0 {
                let v = frontier.trailing_zeros() as usize;
                frontier &= frontier - 1;
                let new = self.adj[v] & mask & !comp;
                comp |= new;
                frontier |= new;
            }
            rest &= !comp;
            out.push(comp);
        }
        out
    }

    fn td(&mut self, mask: u32) -> usize {
        self.components(mask)
            .into_iter()
            .map(|c| self.td_connected(c).0)
            .max()
            .unwrap_or(0)
    }

    fn td_connected(&mut self, mask: u32) -> (usize, usize) {
        if let Some(&hit) = self.memo.get(&mask) {
            return hit;
        }
        let result = if mask.count_ones() == 1 {
            (1, mask.trailing_zeros() as usize)
        } else {
            let mut best = (usize::MAX, 0);
            let mut rest = mask;
            while rest != 0 {
                let v = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                let d = 1 + self.td(mask & !(1 << v));
                if d < best.0 {
                    best = (d, v);
                }
            }
            best
        };
        self.memo.insert(mask, result);
        result
    }

    /// Writes an optimal elimination forest of `mask` below `above`.
    fn build(&mut self, mask: u32, above: Option<usize>, parent: &mut [usize]) {
        for comp in self.components(mask) {
            let (_, root) = self.td_connected(comp);
            parent[root] = above.unwrap_or(root);
            self.build(comp & !(1 << root), Some(root), parent);
        }
    }
}

/// A colored rooted tree `Y` of height at most `h` with `I_h(Y) = g` on the
/// same labelled vertices. Bit `i - 1` of the color of `v` records adjacency
/// to the ancestor of `v` at height `i`. A disconnected graph is lifted by
/// attaching every component root below the root of the component holding
/// vertex 0, which costs one level of height.
pub fn td_decompose(g: &Structure, h: usize, mode: TdMode) -> Result<RootedTree, InterpError> {
    if h == 0 {
        return Err(InterpError::ZeroHeight);
    }
    if g.is_empty() {
        return Err(InterpError::EmptyGraph);
    }
    let mut parent = tree_depth(g, mode)?.parent;
    let roots: Vec<usize> = (0..parent.len()).filter(|&v| parent[v] == v).collect();
    let principal = parent[forest_ancestors(&parent, 0)[0]];
    for &r in &roots {
        parent[r] = principal;
    }
    let needed = forest_height(&parent);
    if needed > h {
        return Err(InterpError::DepthExceeded { needed, bound: h });
    }
    let colors = (0..g.size())
        .map(|v| {
            let path = forest_ancestors(&parent, v);
            path[..path.len() - 1]
                .iter()
                .enumerate()
                .filter(|(_, &a)| g.adjacent(a, v))
                .fold(0u32, |bits, (i, _)| bits | 1 << i)
        })
        .collect();
    Ok(RootedTree::new(parent, colors, h)?)
}

/// The graph `I_h(Y)` of a tree produced by [`td_decompose`].
pub fn closure_graph(y: &RootedTree, h: usize) -> Result<Structure, InterpError> {
    let s = y.to_structure(ColorCoding::Bits(h.saturating_sub(1)))?;
    i_t(h).apply(&s)
}
