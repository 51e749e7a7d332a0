//! Signatures, finite relational structures and colored rooted trees.
//!
//! Domains are always `0..n`. Graphs are structures whose signature holds the
//! binary relation `adj` (stored symmetric and irreflexive) plus unary
//! relations. Colored rooted trees additionally carry the unary root relation
//! `R`, optionally the principal-root relation `P`, and color relations
//! `C1..Cc`.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

/// Name of the graph adjacency relation.
pub const ADJ: &str = "adj";
/// Name of the root relation of a rooted tree.
pub const ROOT: &str = "R";
/// Name of the principal-root relation of a rooted forest.
pub const PRINCIPAL: &str = "P";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructureError {
    #[error("invalid relation name `{0}`")]
    InvalidName(String),
    #[error("duplicate relation `{0}`")]
    DuplicateRelation(String),
    #[error("relation `{name}` must have arity {expected}, got {found}")]
    ReservedArity {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("relation `{0}` must have positive arity")]
    ZeroArity(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("tuple {tuple:?} of `{name}` has length {}, expected {arity}", tuple.len())]
    TupleArity {
        name: String,
        tuple: Vec<usize>,
        arity: usize,
    },
    #[error("element {element} out of range for a domain of size {size}")]
    ElementOutOfRange { element: usize, size: usize },
    #[error("adjacency must be symmetric: ({0}, {1}) present without ({1}, {0})")]
    AsymmetricAdjacency(usize, usize),
    #[error("adjacency must be irreflexive: loop at {0}")]
    AdjacencyLoop(usize),
    #[error("signatures differ")]
    SignatureMismatch,
    #[error("tree must have exactly one root, found {0}")]
    RootCount(usize),
    #[error("parent links contain a cycle through vertex {0}")]
    ParentCycle(usize),
    #[error("tree height {height} exceeds bound {bound}")]
    HeightExceeded { height: usize, bound: usize },
    #[error("color array has length {found}, expected {expected}")]
    ColorLength { found: usize, expected: usize },
    #[error(
        "color {color} of vertex {vertex} is not representable with {available} color relations"
    )]
    ColorOutOfRange {
        vertex: usize,
        color: u32,
        available: usize,
    },
    #[error("structure is not a rooted tree: {0}")]
    NotATree(String),
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric())
}

fn color_relation_index(name: &str) -> Option<usize> {
    let digits = name.strip_prefix('C')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) || digits.starts_with('0') {
        return None;
    }
    digits.parse().ok()
}

/// Name of the `i`-th color relation (1-based).
pub fn color_relation(i: usize) -> String {
    format!("C{i}")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RelationSymbol {
    pub name: String,
    pub arity: usize,
}

impl RelationSymbol {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Self {
            name: name.into(),
            arity,
        }
    }
}

/// A finite relational signature.
///
/// Reserved names: `adj` is binary, `R`, `P` and `C1, C2, ...` are unary.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature {
    relations: Vec<RelationSymbol>,
}

impl Signature {
    pub fn new(relations: Vec<RelationSymbol>) -> Result<Self, StructureError> {
        let mut seen = BTreeSet::new();
        for rel in &relations {
            if !is_identifier(&rel.name) {
                return Err(StructureError::InvalidName(rel.name.clone()));
            }
            if !seen.insert(rel.name.as_str()) {
                return Err(StructureError::DuplicateRelation(rel.name.clone()));
            }
            if rel.arity == 0 {
                return Err(StructureError::ZeroArity(rel.name.clone()));
            }
            let expected = if rel.name == ADJ {
                Some(2)
            } else if rel.name == ROOT
                || rel.name == PRINCIPAL
                || color_relation_index(&rel.name).is_some()
            {
                Some(1)
            } else {
                None
            };
            if let Some(expected) = expected {
                if rel.arity != expected {
                    return Err(StructureError::ReservedArity {
                        name: rel.name.clone(),
                        expected,
                        found: rel.arity,
                    });
                }
            }
        }
        Ok(Self { relations })
    }

    /// Plain graphs: only `adj`.
    pub fn graph() -> Self {
        Self::colored_graph(0)
    }

    /// Graphs with color relations `C1..Cc`.
    pub fn colored_graph(colors: usize) -> Self {
        let mut relations = vec![RelationSymbol::new(ADJ, 2)];
        relations.extend((1..=colors).map(|i| RelationSymbol::new(color_relation(i), 1)));
        Self { relations }
    }

    /// Colored rooted trees (`adj`, `R`, `C1..Cc`), or rooted forests with a
    /// principal component when `principal` is set (adds `P`).
    pub fn rooted_tree(colors: usize, principal: bool) -> Self {
        let mut relations = vec![RelationSymbol::new(ADJ, 2), RelationSymbol::new(ROOT, 1)];
        if principal {
            relations.push(RelationSymbol::new(PRINCIPAL, 1));
        }
        relations.extend((1..=colors).map(|i| RelationSymbol::new(color_relation(i), 1)));
        Self { relations }
    }

    pub fn relations(&self) -> &[RelationSymbol] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.relations.iter().position(|r| r.name == name)
    }

    pub fn arity(&self, name: &str) -> Option<usize> {
        self.index_of(name).map(|i| self.relations[i].arity)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index_of(name).is_some()
    }

    /// Number of consecutive color relations `C1, C2, ...` present.
    pub fn color_count(&self) -> usize {
        (1..)
            .take_while(|&i| self.contains(&color_relation(i)))
            .count()
    }

    pub fn has_root(&self) -> bool {
        self.contains(ROOT)
    }

    pub fn has_principal(&self) -> bool {
        self.contains(PRINCIPAL)
    }

    pub fn with_relation(
        &self,
        name: impl Into<String>,
        arity: usize,
    ) -> Result<Self, StructureError> {
        let mut relations = self.relations.clone();
        relations.push(RelationSymbol::new(name, arity));
        Self::new(relations)
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .relations
            .iter()
            .map(|r| format!("{}/{}", r.name, r.arity))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Table {
    Unary(Vec<bool>),
    /// Row-major `n * n` incidence matrix.
    Binary(Vec<bool>),
    General(BTreeSet<Vec<usize>>),
}

impl Table {
    fn empty(arity: usize, n: usize) -> Self {
        match arity {
            1 => Table::Unary(vec![false; n]),
            2 => Table::Binary(vec![false; n * n]),
            _ => Table::General(BTreeSet::new()),
        }
    }

    fn insert(&mut self, n: usize, tuple: &[usize]) {
        match self {
            Table::Unary(bits) => bits[tuple[0]] = true,
            Table::Binary(bits) => bits[tuple[0] * n + tuple[1]] = true,
            Table::General(set) => {
                set.insert(tuple.to_vec());
            }
        }
    }

    fn contains(&self, n: usize, tuple: &[usize]) -> bool {
        match self {
            Table::Unary(bits) => bits[tuple[0]],
            Table::Binary(bits) => bits[tuple[0] * n + tuple[1]],
            Table::General(set) => set.contains(tuple),
        }
    }

    fn tuples(&self, n: usize) -> Vec<Vec<usize>> {
        match self {
            Table::Unary(bits) => (0..n).filter(|&v| bits[v]).map(|v| vec![v]).collect(),
            Table::Binary(bits) => (0..n * n)
                .filter(|&i| bits[i])
                .map(|i| vec![i / n, i % n])
                .collect(),
            Table::General(set) => set.iter().cloned().collect(),
        }
    }
}

/// A finite relational structure on the domain `0..size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Structure {
    signature: Signature,
    size: usize,
    tables: Vec<Table>,
}

impl Structure {
    /// Empty relations over the given domain size.
    pub fn empty(signature: Signature, size: usize) -> Self {
        let tables = signature
            .relations
            .iter()
            .map(|r| Table::empty(r.arity, size))
            .collect();
        Self {
            signature,
            size,
            tables,
        }
    }

    /// Builds a structure from named tuple lists. Relations of the signature
    /// missing from `tables` are empty.
    pub fn new<S: AsRef<str>>(
        signature: Signature,
        size: usize,
        tables: impl IntoIterator<Item = (S, Vec<Vec<usize>>)>,
    ) -> Result<Self, StructureError> {
        let mut s = Self::empty(signature, size);
        for (name, tuples) in tables {
            let name = name.as_ref();
            let idx = s
                .signature
                .index_of(name)
                .ok_or_else(|| StructureError::UnknownRelation(name.to_string()))?;
            let arity = s.signature.relations[idx].arity;
            for tuple in tuples {
                if tuple.len() != arity {
                    return Err(StructureError::TupleArity {
                        name: name.to_string(),
                        tuple,
                        arity,
                    });
                }
                if let Some(&element) = tuple.iter().find(|&&e| e >= size) {
                    return Err(StructureError::ElementOutOfRange { element, size });
                }
                s.tables[idx].insert(size, &tuple);
            }
        }
        s.check_adjacency()?;
        Ok(s)
    }

    fn check_adjacency(&self) -> Result<(), StructureError> {
        let Some(idx) = self.signature.index_of(ADJ) else {
            return Ok(());
        };
        let n = self.size;
        for u in 0..n {
            if self.tables[idx].contains(n, &[u, u]) {
                return Err(StructureError::AdjacencyLoop(u));
            }
            for v in 0..n {
                if self.tables[idx].contains(n, &[u, v]) && !self.tables[idx].contains(n, &[v, u]) {
                    return Err(StructureError::AsymmetricAdjacency(u, v));
                }
            }
        }
        Ok(())
    }

    /// Simple graph on `0..n`; edges are symmetrised.
    pub fn graph(n: usize, edges: &[(usize, usize)]) -> Result<Self, StructureError> {
        Self::colored_graph(n, edges, &[], 0)
    }

    /// Graph with one color per vertex (`colors[v] = k` puts `v` in `C{k+1}`).
    /// An empty `colors` slice means no color relations are populated.
    pub fn colored_graph(
        n: usize,
        edges: &[(usize, usize)],
        colors: &[u32],
        color_count: usize,
    ) -> Result<Self, StructureError> {
        let mut s = Self::empty(Signature::colored_graph(color_count), n);
        for &(u, v) in edges {
            for e in [u, v] {
                if e >= n {
                    return Err(StructureError::ElementOutOfRange {
                        element: e,
                        size: n,
                    });
                }
            }
            if u == v {
                return Err(StructureError::AdjacencyLoop(u));
            }
            s.tables[0].insert(n, &[u, v]);
            s.tables[0].insert(n, &[v, u]);
        }
        if !colors.is_empty() {
            if colors.len() != n {
                return Err(StructureError::ColorLength {
                    found: colors.len(),
                    expected: n,
                });
            }
            for (v, &c) in colors.iter().enumerate() {
                if c as usize >= color_count {
                    return Err(StructureError::ColorOutOfRange {
                        vertex: v,
                        color: c,
                        available: color_count,
                    });
                }
                s.tables[1 + c as usize].insert(n, &[v]);
            }
        }
        Ok(s)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    /// Membership test by relation index. The tuple length must match the arity.
    #[inline]
    pub fn holds(&self, relation: usize, tuple: &[usize]) -> bool {
        self.tables[relation].contains(self.size, tuple)
    }

    pub fn holds_named(&self, name: &str, tuple: &[usize]) -> Result<bool, StructureError> {
        let idx = self
            .signature
            .index_of(name)
            .ok_or_else(|| StructureError::UnknownRelation(name.to_string()))?;
        Ok(self.holds(idx, tuple))
    }

    /// Tuples of a relation in lexicographic order.
    pub fn tuples(&self, relation: usize) -> Vec<Vec<usize>> {
        self.tables[relation].tuples(self.size)
    }

    pub fn tuples_named(&self, name: &str) -> Result<Vec<Vec<usize>>, StructureError> {
        let idx = self
            .signature
            .index_of(name)
            .ok_or_else(|| StructureError::UnknownRelation(name.to_string()))?;
        Ok(self.tuples(idx))
    }

    pub fn is_graph(&self) -> bool {
        self.signature.contains(ADJ)
    }

    fn adj_index(&self) -> Option<usize> {
        self.signature.index_of(ADJ)
    }

    /// Adjacency lists of `adj` (empty lists when the signature has no `adj`).
    pub fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let n = self.size;
        let mut lists = vec![Vec::new(); n];
        if let Some(idx) = self.adj_index() {
            for (u, list) in lists.iter_mut().enumerate() {
                list.extend((0..n).filter(|&v| self.holds(idx, &[u, v])));
            }
        }
        lists
    }

    pub fn adjacent(&self, u: usize, v: usize) -> bool {
        self.adj_index().is_some_and(|idx| self.holds(idx, &[u, v]))
    }

    /// Undirected edges `(u, v)` with `u < v`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.size;
        let mut out = Vec::new();
        if let Some(idx) = self.adj_index() {
            for u in 0..n {
                for v in u + 1..n {
                    if self.holds(idx, &[u, v]) {
                        out.push((u, v));
                    }
                }
            }
        }
        out
    }

    /// Gaifman graph: two distinct elements are adjacent iff they co-occur in
    /// a tuple of some relation of arity at least two.
    pub fn gaifman_neighbors(&self) -> Vec<Vec<usize>> {
        let n = self.size;
        let mut sets = vec![BTreeSet::new(); n];
        for (idx, rel) in self.signature.relations.iter().enumerate() {
            if rel.arity < 2 {
                continue;
            }
            for tuple in self.tuples(idx) {
                for &a in &tuple {
                    for &b in &tuple {
                        if a != b {
                            sets[a].insert(b);
                        }
                    }
                }
            }
        }
        sets.into_iter().map(|s| s.into_iter().collect()).collect()
    }

    /// Connected components of the Gaifman graph, each sorted, ordered by
    /// smallest element.
    pub fn connected_components(&self) -> Vec<Vec<usize>> {
        let n = self.size;
        let neighbors = self.gaifman_neighbors();
        let mut seen = vec![false; n];
        let mut components = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut component = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &neighbors[u] {
                    if !seen[v] {
                        seen[v] = true;
                        component.push(v);
                        queue.push_back(v);
                    }
                }
            }
            component.sort_unstable();
            components.push(component);
        }
        components
    }

    /// Substructure induced on `vertices`; element `vertices[i]` becomes `i`.
    pub fn induced(&self, vertices: &[usize]) -> Structure {
        let mut position = vec![usize::MAX; self.size];
        for (i, &v) in vertices.iter().enumerate() {
            position[v] = i;
        }
        let m = vertices.len();
        let mut out = Structure::empty(self.signature.clone(), m);
        for (idx, rel) in self.signature.relations.iter().enumerate() {
            match &self.tables[idx] {
                Table::Unary(_) | Table::Binary(_) if rel.arity <= 2 => {
                    let mut tuple = vec![0; rel.arity];
                    let total = m.pow(rel.arity as u32);
                    for code in 0..total {
                        let mut c = code;
                        for slot in tuple.iter_mut().rev() {
                            *slot = c % m;
                            c /= m;
                        }
                        let original: Vec<usize> = tuple.iter().map(|&i| vertices[i]).collect();
                        if self.holds(idx, &original) {
                            out.tables[idx].insert(m, &tuple);
                        }
                    }
                }
                _ => {
                    for tuple in self.tuples(idx) {
                        if tuple.iter().all(|&e| position[e] != usize::MAX) {
                            let mapped: Vec<usize> = tuple.iter().map(|&e| position[e]).collect();
                            out.tables[idx].insert(m, &mapped);
                        }
                    }
                }
            }
        }
        out
    }

    /// Relabels elements: `perm[old] = new`. `perm` must be a permutation.
    pub fn relabel(&self, perm: &[usize]) -> Structure {
        let n = self.size;
        assert_eq!(perm.len(), n, "permutation length");
        let mut out = Structure::empty(self.signature.clone(), n);
        for idx in 0..self.tables.len() {
            for tuple in self.tuples(idx) {
                let mapped: Vec<usize> = tuple.iter().map(|&e| perm[e]).collect();
                out.tables[idx].insert(n, &mapped);
            }
        }
        out
    }

    /// Disjoint union; elements of `other` are shifted by `self.size()`.
    pub fn disjoint_union(&self, other: &Structure) -> Result<Structure, StructureError> {
        if self.signature != other.signature {
            return Err(StructureError::SignatureMismatch);
        }
        let n = self.size + other.size;
        let mut out = Structure::empty(self.signature.clone(), n);
        for idx in 0..self.tables.len() {
            for tuple in self.tuples(idx) {
                out.tables[idx].insert(n, &tuple);
            }
            for tuple in other.tuples(idx) {
                let shifted: Vec<usize> = tuple.iter().map(|&e| e + self.size).collect();
                out.tables[idx].insert(n, &shifted);
            }
        }
        Ok(out)
    }

    /// Adds a relation with the given tuples.
    pub fn with_relation(
        &self,
        name: &str,
        arity: usize,
        tuples: Vec<Vec<usize>>,
    ) -> Result<Structure, StructureError> {
        let signature = self.signature.with_relation(name, arity)?;
        let mut out = Structure {
            signature,
            size: self.size,
            tables: self.tables.clone(),
        };
        out.tables.push(Table::empty(arity, self.size));
        let idx = out.tables.len() - 1;
        for tuple in tuples {
            if tuple.len() != arity {
                return Err(StructureError::TupleArity {
                    name: name.to_string(),
                    tuple,
                    arity,
                });
            }
            if let Some(&element) = tuple.iter().find(|&&e| e >= self.size) {
                return Err(StructureError::ElementOutOfRange {
                    element,
                    size: self.size,
                });
            }
            out.tables[idx].insert(self.size, &tuple);
        }
        out.check_adjacency()?;
        Ok(out)
    }

    /// Adds the binary same-component relation of the Gaifman graph under
    /// `name`. This predicate is reachability, not a first-order definition.
    pub fn with_component_relation(&self, name: &str) -> Result<Structure, StructureError> {
        let mut tuples = Vec::new();
        for component in self.connected_components() {
            for &a in &component {
                for &b in &component {
                    tuples.push(vec![a, b]);
                }
            }
        }
        self.with_relation(name, 2, tuples)
    }
}

/// How tree colors are written as unary relations `C1, C2, ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorCoding {
    /// `c` relations; color `k` (with `k < c`) puts the vertex in `C{k+1}`.
    Indexed(usize),
    /// `b` relations; bit `i` of the color puts the vertex in `C{i+1}`.
    Bits(usize),
}

impl ColorCoding {
    pub fn relation_count(self) -> usize {
        match self {
            ColorCoding::Indexed(c) | ColorCoding::Bits(c) => c,
        }
    }
}

/// A colored rooted tree of height at most `height_bound`.
///
/// Heights count vertices: the root has height 1, so a single vertex tree
/// has height 1.
#[derive(Debug, Clone)]
pub struct RootedTree {
    parent: Vec<usize>,
    color: Vec<u32>,
    height_bound: usize,
    root: usize,
    children: Vec<Vec<usize>>,
    depth: Vec<usize>,
}

impl PartialEq for RootedTree {
    fn eq(&self, other: &Self) -> bool {
        self.parent == other.parent
            && self.color == other.color
            && self.height_bound == other.height_bound
    }
}

impl Eq for RootedTree {}

impl RootedTree {
    /// `parent[root] == root`; every other vertex points to its father.
    pub fn new(
        parent: Vec<usize>,
        color: Vec<u32>,
        height_bound: usize,
    ) -> Result<Self, StructureError> {
        let n = parent.len();
        if color.len() != n {
            return Err(StructureError::ColorLength {
                found: color.len(),
                expected: n,
            });
        }
        if let Some(&element) = parent.iter().find(|&&p| p >= n) {
            return Err(StructureError::ElementOutOfRange { element, size: n });
        }
        let roots: Vec<usize> = (0..n).filter(|&v| parent[v] == v).collect();
        if roots.len() != 1 {
            return Err(StructureError::RootCount(roots.len()));
        }
        let root = roots[0];
        let mut children = vec![Vec::new(); n];
        for v in 0..n {
            if v != root {
                children[parent[v]].push(v);
            }
        }
        let mut depth = vec![0usize; n];
        depth[root] = 1;
        let mut queue = VecDeque::from([root]);
        let mut reached = 1;
        while let Some(u) = queue.pop_front() {
            for &c in &children[u] {
                depth[c] = depth[u] + 1;
                reached += 1;
                queue.push_back(c);
            }
        }
        if reached != n {
            let v = (0..n).find(|&v| depth[v] == 0).unwrap_or(0);
            return Err(StructureError::ParentCycle(v));
        }
        let height = depth.iter().copied().max().unwrap_or(0);
        if height > height_bound {
            return Err(StructureError::HeightExceeded {
                height,
                bound: height_bound,
            });
        }
        Ok(Self {
            parent,
            color,
            height_bound,
            root,
            children,
            depth,
        })
    }

    pub fn single(color: u32, height_bound: usize) -> Result<Self, StructureError> {
        Self::new(vec![0], vec![color], height_bound)
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        (v != self.root).then(|| self.parent[v])
    }

    pub fn parents(&self) -> &[usize] {
        &self.parent
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn color(&self, v: usize) -> u32 {
        self.color[v]
    }

    pub fn colors(&self) -> &[u32] {
        &self.color
    }

    /// Number of vertices on the path from the root to `v`.
    pub fn depth(&self, v: usize) -> usize {
        self.depth[v]
    }

    pub fn height(&self) -> usize {
        self.depth.iter().copied().max().unwrap_or(0)
    }

    pub fn height_bound(&self) -> usize {
        self.height_bound
    }

    pub fn with_height_bound(&self, height_bound: usize) -> Result<Self, StructureError> {
        Self::new(self.parent.clone(), self.color.clone(), height_bound)
    }

    pub fn check_vertex(&self, v: usize) -> Result<(), StructureError> {
        if v >= self.len() {
            Err(StructureError::ElementOutOfRange {
                element: v,
                size: self.len(),
            })
        } else {
            Ok(())
        }
    }

    /// Ancestors of `v` from the root down to `v` itself.
    pub fn ancestors(&self, v: usize) -> Vec<usize> {
        let mut path = vec![v];
        let mut u = v;
        while u != self.root {
            u = self.parent[u];
            path.push(u);
        }
        path.reverse();
        path
    }

    /// Vertices in preorder (children visited in increasing index order).
    pub fn preorder_from(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            out.push(u);
            stack.extend(self.children[u].iter().rev());
        }
        out
    }

    /// Vertices ordered so that every child comes before its parent.
    pub fn postorder(&self) -> Vec<usize> {
        let mut order = self.preorder_from(self.root);
        order.reverse();
        order
    }

    /// Sizes of all subtrees.
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut size = vec![1usize; self.len()];
        for v in self.postorder() {
            if v != self.root {
                size[self.parent[v]] += size[v];
            }
        }
        size
    }

    /// The subtree rooted at `v`, relabelled in preorder (so `v` becomes 0).
    pub fn subtree(&self, v: usize) -> Result<RootedTree, StructureError> {
        self.check_vertex(v)?;
        let order = self.preorder_from(v);
        let mut position = vec![usize::MAX; self.len()];
        for (i, &u) in order.iter().enumerate() {
            position[u] = i;
        }
        let parent = order
            .iter()
            .map(|&u| if u == v { 0 } else { position[self.parent[u]] })
            .collect();
        let color = order.iter().map(|&u| self.color[u]).collect();
        RootedTree::new(parent, color, self.height_bound)
    }

    /// Encodes the tree as a structure over `adj`, `R` and color relations.
    pub fn to_structure(&self, coding: ColorCoding) -> Result<Structure, StructureError> {
        let n = self.len();
        let colors = coding.relation_count();
        let mut s = Structure::empty(Signature::rooted_tree(colors, false), n);
        for v in 0..n {
            if v != self.root {
                let p = self.parent[v];
                s.tables[0].insert(n, &[v, p]);
                s.tables[0].insert(n, &[p, v]);
            }
        }
        s.tables[1].insert(n, &[self.root]);
        for v in 0..n {
            let c = self.color[v];
            match coding {
                ColorCoding::Indexed(count) => {
                    if c as usize >= count {
                        return Err(StructureError::ColorOutOfRange {
                            vertex: v,
                            color: c,
                            available: count,
                        });
                    }
                    s.tables[2 + c as usize].insert(n, &[v]);
                }
                ColorCoding::Bits(bits) => {
                    if bits < 32 && c >> bits != 0 {
                        return Err(StructureError::ColorOutOfRange {
                            vertex: v,
                            color: c,
                            available: bits,
                        });
                    }
                    for i in 0..bits.min(32) {
                        if c >> i & 1 == 1 {
                            s.tables[2 + i].insert(n, &[v]);
                        }
                    }
                }
            }
        }
        Ok(s)
    }

    /// Reads a colored rooted tree back from a structure with `adj`, `R` and
    /// the color relations described by `coding`.
    pub fn from_structure(
        s: &Structure,
        coding: ColorCoding,
        height_bound: usize,
    ) -> Result<RootedTree, StructureError> {
        let root_idx = s
            .signature()
            .index_of(ROOT)
            .ok_or_else(|| StructureError::UnknownRelation(ROOT.to_string()))?;
        let n = s.size();
        let roots: Vec<usize> = (0..n).filter(|&v| s.holds(root_idx, &[v])).collect();
        if roots.len() != 1 {
            return Err(StructureError::RootCount(roots.len()));
        }
        let root = roots[0];
        let adjacency = s.adjacency_lists();
        let edge_count: usize = adjacency.iter().map(Vec::len).sum::<usize>() / 2;
        if edge_count + 1 != n {
            return Err(StructureError::NotATree(format!(
                "{n} vertices but {edge_count} edges"
            )));
        }
        let mut parent = vec![usize::MAX; n];
        parent[root] = root;
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in &adjacency[u] {
                if parent[v] == usize::MAX {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent.contains(&usize::MAX) {
            return Err(StructureError::NotATree("disconnected".to_string()));
        }
        let count = coding.relation_count();
        let indices: Vec<usize> = (1..=count)
            .map(|i| {
                s.signature()
                    .index_of(&color_relation(i))
                    .ok_or_else(|| StructureError::UnknownRelation(color_relation(i)))
            })
            .collect::<Result<_, _>>()?;
        let mut color = vec![0u32; n];
        for (v, c) in color.iter_mut().enumerate() {
            let members: Vec<usize> = (0..count).filter(|&i| s.holds(indices[i], &[v])).collect();
            *c = match coding {
                ColorCoding::Indexed(_) => match members.as_slice() {
                    [k] => *k as u32,
                    _ => {
                        return Err(StructureError::NotATree(format!(
                            "vertex {v} belongs to {} color relations",
                            members.len()
                        )))
                    }
                },
                ColorCoding::Bits(_) => members.iter().map(|&i| 1u32 << i).sum(),
            };
        }
        RootedTree::new(parent, color, height_bound)
    }
}
