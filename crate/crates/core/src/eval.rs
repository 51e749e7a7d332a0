//! Model checking, Stone pairings, homomorphism and induced densities.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::folang::{extension_sentence, Formula, Var};
use crate::structure::{Structure, ADJ};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("pairings are undefined on the empty structure")]
    EmptyStructure,
    #[error("free variable x{0} has no value")]
    UnassignedVariable(Var),
    #[error("element {element} out of range for a structure of size {size}")]
    ElementOutOfRange { element: usize, size: usize },
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{name}` has arity {expected} but is applied to {found} arguments")]
    ArityMismatch {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("arity {p} is smaller than the formula rank {rank}")]
    ArityTooSmall { p: usize, rank: usize },
    #[error("at least one sample is required")]
    NoSamples,
    #[error("confidence parameter must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("expected a graph (a structure with `adj`)")]
    NotAGraph,
    #[error("only formulas over `adj` and equality are supported here, found `{0}`")]
    UnsupportedRelation(String),
    #[error("formula must be quantifier-free")]
    NotQuantifierFree,
}

/// An exact Stone pairing value `count / size^arity`.
#[derive(Debug, Clone)]
pub struct StoneValue {
    pub count: BigUint,
    pub size: usize,
    pub arity: usize,
}

impl StoneValue {
    pub fn new(count: BigUint, size: usize, arity: usize) -> Self {
        Self { count, size, arity }
    }

    pub fn denominator(&self) -> BigUint {
        Pow::pow(BigUint::from(self.size), self.arity)
    }

    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.count.clone().into(), self.denominator().into())
    }

    pub fn to_f64(&self) -> f64 {
        self.to_rational().to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.count.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.count == self.denominator()
    }
}

impl PartialEq for StoneValue {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for StoneValue {}

impl PartialOrd for StoneValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for StoneValue {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.count * other.denominator()).cmp(&(&other.count * self.denominator()))
    }
}

impl fmt::Display for StoneValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_rational())
    }
}

/// Monte-Carlo estimate of a pairing with a Hoeffding confidence radius.
#[derive(Debug, Clone, PartialEq)]
pub struct PairingEstimate {
    pub estimate: f64,
    pub hits: u64,
    pub samples: u64,
    pub radius: f64,
    pub delta: f64,
    pub seed: u64,
}

/// Half-width of the two-sided Hoeffding interval at confidence `1 - delta`.
pub fn hoeffding_radius(samples: u64, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * samples as f64)).sqrt()
}

#[derive(Debug, Clone)]
enum Node {
    True,
    False,
    Atom {
        rel: usize,
        args: Vec<Var>,
    },
    Eq(Var, Var),
    Not(usize),
    And(Vec<usize>),
    Or(Vec<usize>),
    Quant {
        exists: bool,
        var: Var,
        body: usize,
        free: Vec<Var>,
    },
}

/// A formula compiled against a structure. Quantifier nodes are memoised on
/// the values of their free variables.
pub struct Evaluator<'a> {
    s: &'a Structure,
    nodes: Vec<Node>,
    root: usize,
    max_var: usize,
    memo: RefCell<HashMap<(usize, Vec<usize>), bool>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(s: &'a Structure, phi: &Formula) -> Result<Self, EvalError> {
        let mut ev = Evaluator {
            s,
            nodes: Vec::new(),
            root: 0,
            max_var: phi.all_vars().last().map_or(0, |&v| v as usize),
            memo: RefCell::new(HashMap::new()),
        };
        ev.root = ev.compile(&phi.desugar())?;
        Ok(ev)
    }

    fn push(&mut self, node: Node) -> usize {
        self.nodes.push(node);
        self.nodes.len() - 1
    }

    fn compile(&mut self, phi: &Formula) -> Result<usize, EvalError> {
        let node = match phi {
            Formula::True => Node::True,
            Formula::False => Node::False,
            Formula::Atom { rel, args } => {
                let idx = self
                    .s
                    .signature()
                    .index_of(rel)
                    .ok_or_else(|| EvalError::UnknownRelation(rel.clone()))?;
                let expected = self.s.signature().relations()[idx].arity;
                if expected != args.len() {
                    return Err(EvalError::ArityMismatch {
                        name: rel.clone(),
                        expected,
                        found: args.len(),
                    });
                }
                Node::Atom {
                    rel: idx,
                    args: args.clone(),
                }
            }
            Formula::Eq(a, b) => Node::Eq(*a, *b),
            Formula::Not(f) => Node::Not(self.compile(f)?),
            Formula::And(fs) => Node::And(
                fs.iter()
                    .map(|f| self.compile(f))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Or(fs) => Node::Or(
                fs.iter()
                    .map(|f| self.compile(f))
                    .collect::<Result<_, _>>()?,
            ),
            Formula::Exists(v, f) | Formula::Forall(v, f) => {
                let body = self.compile(f)?;
                Node::Quant {
                    exists: matches!(phi, Formula::Exists(..)),
                    var: *v,
                    body,
                    free: phi.free_vars().into_iter().collect(),
                }
            }
            Formula::Implies(..) | Formula::Iff(..) => unreachable!("desugared"),
        };
        Ok(self.push(node))
    }

    fn eval(&self, node: usize, env: &mut [usize]) -> bool {
        match &self.nodes[node] {
            Node::True => true,
            Node::False => false,
            Node::Atom { rel, args } => {
                let mut buf = [0usize; 8];
                if args.len() <= buf.len() {
                    for (slot, &v) in buf.iter_mut().zip(args) {
                        *slot = env[v as usize];
                    }
                    self.s.holds(*rel, &buf[..args.len()])
                } else {
                    let vals: Vec<usize> = args.iter().map(|&v| env[v as usize]).collect();
                    self.s.holds(*rel, &vals)
                }
            }
            Node::Eq(a, b) => env[*a as usize] == env[*b as usize],
            Node::Not(f) => !self.eval(*f, env),
            Node::And(fs) => fs.iter().all(|&f| self.eval(f, env)),
            Node::Or(fs) => fs.iter().any(|&f| self.eval(f, env)),
            Node::Quant {
                exists,
                var,
                body,
                free,
            } => {
                let key = (
                    node,
                    free.iter().map(|&v| env[v as usize]).collect::<Vec<_>>(),
                );
                if let Some(&hit) = self.memo.borrow().get(&key) {
                    return hit;
                }
                let saved = env[*var as usize];
                let mut result = !exists;
                for a in 0..self.s.size() {
                    env[*var as usize] = a;
                    if self.eval(*body, env) == *exists {
                        result = *exists;
                        break;
                    }
                }
                env[*var as usize] = saved;
                self.memo.borrow_mut().insert(key, result);
                result
            }
        }
    }

    /// Satisfaction under `values[i]` for `x{i+1}`. The caller guarantees
    /// that every free variable is covered.
    pub fn holds(&self, values: &[usize]) -> bool {
        let mut env = vec![0usize; (self.max_var + 1).max(values.len() + 1)];
        env[1..=values.len()].copy_from_slice(values);
        self.eval(self.root, &mut env)
    }
}

fn check_assignment(s: &Structure, phi: &Formula, values: &[usize]) -> Result<(), EvalError> {
    if let Some(&v) = phi.free_vars().iter().find(|&&v| v as usize > values.len()) {
        return Err(EvalError::UnassignedVariable(v));
    }
    if let Some(&element) = values.iter().find(|&&e| e >= s.size()) {
        return Err(EvalError::ElementOutOfRange {
            element,
            size: s.size(),
        });
    }
    Ok(())
}

/// `A |= phi(values)` where `values[i]` is assigned to `x{i+1}`.
pub fn satisfies(s: &Structure, phi: &Formula, values: &[usize]) -> Result<bool, EvalError> {
    check_assignment(s, phi, values)?;
    Ok(Evaluator::new(s, phi)?.holds(values))
}

fn check_pairing(s: &Structure, phi: &Formula, p: usize) -> Result<(), EvalError> {
    if s.is_empty() {
        return Err(EvalError::EmptyStructure);
    }
    let rank = phi.rank();
    if p < rank {
        return Err(EvalError::ArityTooSmall { p, rank });
    }
    Ok(())
}

/// Calls `visit` with every tuple of `0..n` of length `len` in
/// lexicographic order.
fn for_each_tuple(n: usize, len: usize, mut visit: impl FnMut(&[usize])) {
    let mut tuple = vec![0usize; len];
    loop {
        visit(&tuple);
        let mut i = len;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            tuple[i] += 1;
            if tuple[i] < n {
                break;
            }
            tuple[i] = 0;
        }
    }
}

/// The satisfying `p`-tuples in lexicographic order.
pub fn omega(s: &Structure, phi: &Formula, p: usize) -> Result<Vec<Vec<usize>>, EvalError> {
    check_pairing(s, phi, p)?;
    let ev = Evaluator::new(s, phi)?;
    let mut out = Vec::new();
    for_each_tuple(s.size(), p, |t| {
        if ev.holds(t) {
            out.push(t.to_vec());
        }
    });
    Ok(out)
}

/// Exact Stone pairing `|Omega_phi(A)| / |A|^p`.
///
/// Only the free variables are enumerated; the remaining coordinates of a
/// `p`-tuple contribute a factor `n` each.
pub fn stone_pairing(s: &Structure, phi: &Formula, p: usize) -> Result<StoneValue, EvalError> {
    check_pairing(s, phi, p)?;
    let ev = Evaluator::new(s, phi)?;
    let free: Vec<Var> = phi.free_vars().into_iter().collect();
    let n = s.size();
    let mut env = vec![0usize; p];
    let mut count: u128 = 0;
    for_each_tuple(n, free.len(), |t| {
        for (&v, &a) in free.iter().zip(t) {
            env[v as usize - 1] = a;
        }
        if ev.holds(&env) {
            count += 1;
        }
    });
    let padding = Pow::pow(BigUint::from(n), p - free.len());
    Ok(StoneValue::new(BigUint::from(count) * padding, n, p))
}

/// Monte-Carlo estimate of the pairing from `samples` uniform `p`-tuples.
///
/// Sample `i` is drawn from a ChaCha8 generator seeded with `seed` on
/// stream `i`, coordinates in order via `gen_range(0..n)`, so the estimate
/// depends only on `(seed, samples)`.
pub fn stone_pairing_sampled(
    s: &Structure,
    phi: &Formula,
    p: usize,
    samples: u64,
    delta: f64,
    seed: u64,
) -> Result<PairingEstimate, EvalError> {
    check_pairing(s, phi, p)?;
    if samples == 0 {
        return Err(EvalError::NoSamples);
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(EvalError::InvalidDelta(delta));
    }
    let ev = Evaluator::new(s, phi)?;
    let n = s.size();
    let mut tuple = vec![0usize; p];
    let mut hits = 0u64;
    for i in 0..samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i);
        for slot in tuple.iter_mut() {
            *slot = rng.gen_range(0..n);
        }
        if ev.holds(&tuple) {
            hits += 1;
        }
    }
    Ok(PairingEstimate {
        estimate: hits as f64 / samples as f64,
        hits,
        samples,
        radius: hoeffding_radius(samples, delta),
        delta,
        seed,
    })
}

fn require_graph(g: &Structure) -> Result<(), EvalError> {
    if g.is_graph() {
        Ok(())
    } else {
        Err(EvalError::NotAGraph)
    }
}

/// Number of adjacency-preserving maps `V(F) -> V(G)`.
pub fn hom_count(f: &Structure, g: &Structure) -> Result<BigUint, EvalError> {
    require_graph(f)?;
    require_graph(g)?;
    let f_adj = f.adjacency_lists();
    let g_adj = g.adjacency_lists();
    let mut total = BigUint::one();
    for component in f.connected_components() {
        // BFS order so that every vertex after the first has an earlier neighbour.
        let mut order = vec![component[0]];
        let mut placed = vec![false; f.size()];
        placed[component[0]] = true;
        let mut i = 0;
        while i < order.len() {
            for &w in &f_adj[order[i]] {
                if !placed[w] {
                    placed[w] = true;
                    order.push(w);
                }
            }
            i += 1;
        }
        let position: BTreeMap<usize, usize> =
            order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let earlier: Vec<Vec<usize>> = order
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                f_adj[v]
                    .iter()
                    .map(|w| position[w])
                    .filter(|&j| j < i)
                    .collect()
            })
            .collect();
        let mut image = vec![0usize; order.len()];
        let count = hom_extend(g, &g_adj, &earlier, &mut image, 0);
        total *= BigUint::from(count);
    }
    Ok(total)
}

fn hom_extend(
    g: &Structure,
    g_adj: &[Vec<usize>],
    earlier: &[Vec<usize>],
    image: &mut [usize],
    i: usize,
) -> u128 {
    if i == image.len() {
        return 1;
    }
    let candidates: Vec<usize> = match earlier[i].first() {
        None => (0..g.size()).collect(),
        Some(&j) => g_adj[image[j]].clone(),
    };
    let mut count = 0;
    for c in candidates {
        if earlier[i].iter().all(|&j| g.adjacent(image[j], c)) {
            image[i] = c;
            count += hom_extend(g, g_adj, earlier, image, i + 1);
        }
    }
    count
}

/// Homomorphism density `t(F, G) = hom(F, G) / |G|^|F|`.
pub fn hom_density(f: &Structure, g: &Structure) -> Result<StoneValue, EvalError> {
    if g.is_empty() {
        return Err(EvalError::EmptyStructure);
    }
    Ok(StoneValue::new(hom_count(f, g)?, g.size(), f.size()))
}

/// Number of injective tuples `(v_1..v_k)` such that `i -> v_i` is an
/// isomorphism from the labelled graph `F` onto `G[v_1..v_k]`.
pub fn induced_count(f: &Structure, g: &Structure) -> Result<BigUint, EvalError> {
    require_graph(f)?;
    require_graph(g)?;
    fn extend(f: &Structure, g: &Structure, image: &mut Vec<usize>) -> u128 {
        let i = image.len();
        if i == f.size() {
            return 1;
        }
        let mut count = 0;
        for c in 0..g.size() {
            if image.contains(&c) {
                continue;
            }
            if (0..i).all(|j| f.adjacent(j, i) == g.adjacent(image[j], c)) {
                image.push(c);
                count += extend(f, g, image);
                image.pop();
            }
        }
        count
    }
    Ok(BigUint::from(extend(f, g, &mut Vec::new())))
}

/// Induced density `dens(F, G)`: ordered injective induced copies of the
/// labelled graph `F` over `|G|^|F|`. Divide by `|Aut(F)|` for unordered
/// copies.
pub fn induced_density(f: &Structure, g: &Structure) -> Result<StoneValue, EvalError> {
    if g.is_empty() {
        return Err(EvalError::EmptyStructure);
    }
    Ok(StoneValue::new(induced_count(f, g)?, g.size(), f.size()))
}

/// Set partitions of `0..p` as block lists, blocks ordered by least element.
pub fn set_partitions(p: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(i: usize, p: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == p {
            out.push(blocks.clone());
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(i);
            rec(i + 1, p, blocks, out);
            blocks[b].pop();
        }
        blocks.push(vec![i]);
        rec(i + 1, p, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    rec(0, p, &mut Vec::new(), &mut out);
    out
}

/// All labelled graphs on `0..k`.
pub fn labelled_graphs(k: usize) -> Vec<Structure> {
    let pairs: Vec<(usize, usize)> = (0..k)
        .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
        .collect();
    (0u64..1 << pairs.len())
        .map(|mask| {
            let edges: Vec<(usize, usize)> = pairs
                .iter()
                .enumerate()
                .filter(|(b, _)| mask >> b & 1 == 1)
                .map(|(_, &e)| e)
                .collect();
            Structure::graph(k, &edges).expect("valid edges")
        })
        .collect()
}

/// Evaluates `<theta, G>` for a quantifier-free graph formula through the
/// expansion into equality patterns and induced densities:
///
/// `<theta, G> = sum_P |G|^(|P|-p) sum_{F |= theta_P} dens(F, G)`
///
/// where `P` ranges over set partitions of the `p` variables, `theta_P`
/// identifies the variables of each block, and `F` ranges over labelled
/// graphs on `|P|` vertices.
pub fn qf_partition_expansion(
    theta: &Formula,
    p: usize,
    g: &Structure,
) -> Result<BigRational, EvalError> {
    if !theta.is_quantifier_free() {
        return Err(EvalError::NotQuantifierFree);
    }
    if let Some((name, _)) = theta.relations().into_iter().find(|(r, _)| r != ADJ) {
        return Err(EvalError::UnsupportedRelation(name));
    }
    check_pairing(g, theta, p)?;
    require_graph(g)?;
    let n = BigRational::from_integer(g.size().into());
    let mut total = BigRational::zero();
    for partition in set_partitions(p) {
        let mut map = BTreeMap::new();
        for (b, block) in partition.iter().enumerate() {
            for &j in block {
                map.insert(j as Var + 1, b as Var + 1);
            }
        }
        let theta_p = theta.substitute(&map);
        let k = partition.len();
        let mut inner = BigRational::zero();
        for f in labelled_graphs(k) {
            let identity: Vec<usize> = (0..k).collect();
            if satisfies(&f, &theta_p, &identity)? {
                inner += induced_density(&f, g)?.to_rational();
            }
        }
        let scale = Pow::pow(&n, k as i32 - p as i32);
        total += inner * scale;
    }
    Ok(total)
}

/// Whether `G` satisfies the `k`-extension sentence.
pub fn has_extension_property(g: &Structure, k: usize) -> Result<bool, EvalError> {
    require_graph(g)?;
    satisfies(g, &extension_sentence(k), &[])
}
