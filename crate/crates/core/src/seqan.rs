//! Analysis of sequences of structures: pairing trajectories, component
//! spectra, clips, comb decompositions, ball statistics and mass transport
//! checks of tree statistics.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, Zero};
use thiserror::Error;

use crate::equiv::EncodeTuple;
use crate::eval::{stone_pairing, EvalError, StoneValue};
use crate::folang::{Formula, Var};
use crate::structure::{Structure, StructureError};
use crate::treelim::TreeStatistic;

/// Default name of the same-component relation.
pub const SAMECOMP: &str = "samecomp";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SeqError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error("the sequence is empty")]
    EmptySequence,
    #[error("structure {0} is empty")]
    EmptyStructure(usize),
    #[error("structure {0} has a different signature from structure 0")]
    SignatureMismatch(usize),
    #[error("k must be at least 1")]
    ZeroK,
    #[error("arity must be at least 1")]
    ZeroArity,
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("relation `{0}` must be binary")]
    NotBinary(String),
}

fn ratio(a: usize, b: usize) -> BigRational {
    BigRational::new(BigInt::from(a), BigInt::from(b))
}

/// Exact pairings of a list of formulas along a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Formulas with the arity used for their pairing.
    pub formulas: Vec<(Formula, usize)>,
    /// `values[n][j]` is the pairing of formula `j` with structure `n`.
    pub values: Vec<Vec<StoneValue>>,
}

pub fn trajectory(
    seq: &[Structure],
    formulas: &[(Formula, usize)],
) -> Result<Trajectory, SeqError> {
    let first = seq.first().ok_or(SeqError::EmptySequence)?;
    let mut values = Vec::with_capacity(seq.len());
    for (n, a) in seq.iter().enumerate() {
        if a.signature() != first.signature() {
            return Err(SeqError::SignatureMismatch(n));
        }
        if a.is_empty() {
            return Err(SeqError::EmptyStructure(n));
        }
        let row = formulas
            .iter()
            .map(|(phi, p)| stone_pairing(a, phi, *p))
            .collect::<Result<Vec<_>, _>>()?;
        values.push(row);
    }
    Ok(Trajectory {
        formulas: formulas.to_vec(),
        values,
    })
}

/// Non-increasing component masses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Spectrum {
    masses: Vec<BigRational>,
}

impl Spectrum {
    /// Checks that the masses lie in `(0, 1]`, are non-increasing and sum to at most 1.
    pub fn from_masses(masses: Vec<BigRational>) -> Result<Self, SeqError> {
        if let Some(m) = masses
            .iter()
            .find(|m| !m.is_positive() || **m > BigRational::one())
        {
            return Err(SeqError::InvalidSpectrum(format!(
                "mass {m} outside (0, 1]"
            )));
        }
        if masses.windows(2).any(|w| w[0] < w[1]) {
            return Err(SeqError::InvalidSpectrum(
                "masses must be non-increasing".into(),
            ));
        }
        let total = masses.iter().fold(BigRational::zero(), |acc, m| acc + m);
        if total > BigRational::one() {
            return Err(SeqError::InvalidSpectrum(format!(
                "total mass {total} exceeds 1"
            )));
        }
        Ok(Self { masses })
    }

    pub fn masses(&self) -> &[BigRational] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    /// The `i`-th mass (0-based), zero beyond the end.
    pub fn get(&self, i: usize) -> BigRational {
        self.masses
            .get(i)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }
}

/// Component sizes over `n`, in non-increasing order.
pub fn spectrum(a: &Structure) -> Result<Spectrum, SeqError> {
    if a.is_empty() {
        return Err(SeqError::EmptyStructure(0));
    }
    let n = a.size();
    let mut sizes: Vec<usize> = a.connected_components().iter().map(Vec::len).collect();
    sizes.sort_unstable_by(|x, y| y.cmp(x));
    Ok(Spectrum {
        masses: sizes.into_iter().map(|s| ratio(s, n)).collect(),
    })
}

/// `a` with the same-component relation `name`, added unless already present.
pub fn with_samecomp(a: &Structure, name: &str) -> Result<Structure, SeqError> {
    match a.signature().arity(name) {
        Some(2) => Ok(a.clone()),
        Some(_) => Err(SeqError::NotBinary(name.to_string())),
        None => Ok(a.with_component_relation(name)?),
    }
}

/// `samecomp(x1, x2) & .. & samecomp(xk, x{k+1})`.
pub fn samecomp_chain(k: usize, name: &str) -> Formula {
    Formula::and_all(
        (1..=k as Var)
            .map(|i| Formula::atom(name, vec![i, i + 1]))
            .collect(),
    )
}

/// Both sides of `sum_i mass_i^{k+1} = <chain_k, A>`.
pub fn spectrum_norm_check(
    a: &Structure,
    k: usize,
) -> Result<(BigRational, BigRational), SeqError> {
    if k == 0 {
        return Err(SeqError::ZeroK);
    }
    let sp = spectrum(a)?;
    let lhs = sp
        .masses()
        .iter()
        .fold(BigRational::zero(), |acc, m| acc + Pow::pow(m, k + 1));
    let b = with_samecomp(a, SAMECOMP)?;
    let rhs = stone_pairing(&b, &samecomp_chain(k, SAMECOMP), k + 1)?.to_rational();
    Ok((lhs, rhs))
}

/// For each `n`, the largest `M <= |limit|` such that for every later index
/// `n' >= n`: `sum_{i<M} |b_{n',i} - sp_i| <= sum_{i>=M} sp_i`.
pub fn clip(spectra: &[Spectrum], limit: &Spectrum) -> Result<Vec<usize>, SeqError> {
    if spectra.is_empty() {
        return Err(SeqError::EmptySequence);
    }
    let len = limit.len();
    let mut tail = vec![BigRational::zero(); len + 1];
    for i in (0..len).rev() {
        tail[i] = &tail[i + 1] + limit.get(i);
    }
    // Largest admissible M for each single index.
    let single: Vec<usize> = spectra
        .iter()
        .map(|b| {
            let mut best = 0;
            let mut err = BigRational::zero();
            for m in 1..=len {
                err += (b.get(m - 1) - limit.get(m - 1)).abs();
                if err <= tail[m] {
                    best = m;
                }
            }
            best
        })
        .collect();
    // The admissible sets are down-closed, so the suffix minimum is the clip.
    let mut out = vec![0; spectra.len()];
    let mut running = usize::MAX;
    for n in (0..spectra.len()).rev() {
        running = running.min(single[n]);
        out[n] = running;
    }
    Ok(out)
}

/// Renames every bound variable to a fresh index above `next`.
fn rename_bound(phi: &Formula, next: &mut Var) -> Formula {
    match phi {
        Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => phi.clone(),
        Formula::Not(f) => rename_bound(f, next).not(),
        Formula::And(fs) => Formula::And(fs.iter().map(|f| rename_bound(f, next)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|f| rename_bound(f, next)).collect()),
        Formula::Implies(a, b) => rename_bound(a, next).implies(rename_bound(b, next)),
        Formula::Iff(a, b) => rename_bound(a, next).iff(rename_bound(b, next)),
        Formula::Exists(v, f) | Formula::Forall(v, f) => {
            *next += 1;
            let fresh = *next;
            let body = rename_bound(&f.substitute(&BTreeMap::from([(*v, fresh)])), next);
            if matches!(phi, Formula::Exists(..)) {
                Formula::exists(fresh, body)
            } else {
                Formula::forall(fresh, body)
            }
        }
    }
}

fn relativize(phi: &Formula, anchor: Var, name: &str) -> Formula {
    match phi {
        Formula::True | Formula::False | Formula::Atom { .. } | Formula::Eq(..) => phi.clone(),
        Formula::Not(f) => relativize(f, anchor, name).not(),
        Formula::And(fs) => Formula::And(fs.iter().map(|f| relativize(f, anchor, name)).collect()),
        Formula::Or(fs) => Formula::Or(fs.iter().map(|f| relativize(f, anchor, name)).collect()),
        Formula::Implies(a, b) => relativize(a, anchor, name).implies(relativize(b, anchor, name)),
        Formula::Iff(a, b) => relativize(a, anchor, name).iff(relativize(b, anchor, name)),
        Formula::Exists(v, f) => Formula::exists(
            *v,
            Formula::And(vec![
                Formula::atom(name, vec![anchor, *v]),
                relativize(f, anchor, name),
            ]),
        ),
        Formula::Forall(v, f) => Formula::forall(
            *v,
            Formula::atom(name, vec![anchor, *v]).implies(relativize(f, anchor, name)),
        ),
    }
}

/// The component-guarded version of `phi` in arity `p`: the free variables
/// `x1..xp` are tied to one component and every quantifier ranges over the
/// component of `x1`.
pub fn component_guard(phi: &Formula, p: usize, name: &str) -> Formula {
    let mut next = phi.all_vars().into_iter().max().unwrap_or(0).max(p as Var);
    let body = relativize(&rename_bound(phi, &mut next), 1, name);
    Formula::and_all(vec![samecomp_chain(p.saturating_sub(1), name), body])
}

/// Both sides of `<psi, A> = sum_i (|A_i|/|A|)^p <psi, A_i>` for the
/// components `A_i` of `A`. The same-component relation is added if missing.
pub fn component_pairing_check(
    a: &Structure,
    psi: &Formula,
    p: usize,
    name: &str,
) -> Result<(BigRational, BigRational), SeqError> {
    if p == 0 {
        return Err(SeqError::ZeroArity);
    }
    let b = with_samecomp(a, name)?;
    let lhs = stone_pairing(&b, psi, p)?.to_rational();
    let n = b.size();
    let mut rhs = BigRational::zero();
    for component in b.connected_components() {
        let part = b.induced(&component);
        let weight = Pow::pow(ratio(component.len(), n), p);
        rhs += weight * stone_pairing(&part, psi, p)?.to_rational();
    }
    Ok((lhs, rhs))
}

/// Statistics used to match components across a sequence: pairings of
/// every relation (as an atom on distinct variables) and, for `d = 1..=r`,
/// the fraction of elements with at least `d` Gaifman neighbours.
pub fn component_statistics(b: &Structure, r: usize) -> Result<Vec<BigRational>, SeqError> {
    let mut out = Vec::new();
    for rel in b.signature().relations() {
        let atom = Formula::atom(rel.name.clone(), (1..=rel.arity as Var).collect());
        out.push(stone_pairing(b, &atom, rel.arity)?.to_rational());
    }
    let degrees: Vec<usize> = b.gaifman_neighbors().iter().map(Vec::len).collect();
    for d in 1..=r {
        let k = degrees.iter().filter(|&&x| x >= d).count();
        out.push(ratio(k, b.size()));
    }
    Ok(out)
}

fn l1(a: &[BigRational], b: &[BigRational]) -> BigRational {
    a.iter()
        .zip(b)
        .fold(BigRational::zero(), |acc, (x, y)| acc + (x - y).abs())
}

/// Matched component columns and residues of a sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CombDecomposition {
    /// `columns[i][n]` is the vertex set of the component of structure `n`
    /// matched to limit index `i`, if any.
    pub columns: Vec<Vec<Option<Vec<usize>>>>,
    /// Vertices of structure `n` outside every matched component.
    pub residues: Vec<Vec<usize>>,
    /// Clip values per structure.
    pub clip: Vec<usize>,
}

impl CombDecomposition {
    pub fn column_structure(&self, seq: &[Structure], i: usize, n: usize) -> Option<Structure> {
        self.columns
            .get(i)?
            .get(n)?
            .as_ref()
            .map(|vs| seq[n].induced(vs))
    }

    pub fn residue_structure(&self, seq: &[Structure], n: usize) -> Structure {
        seq[n].induced(&self.residues[n])
    }
}

/// Splits each structure into components matched to the limit indices and
/// a residue. Structure `n` contributes its `clip(n)` largest components
/// (ties by smallest element). Inside a group of equal limit masses the
/// components are assigned greedily to minimise the L1 distance of their
/// rank-`r` statistics to the previous entry of the column; the first
/// structure orders a group by its statistics.
pub fn comb_decompose(
    seq: &[Structure],
    r: usize,
    limit: &Spectrum,
) -> Result<CombDecomposition, SeqError> {
    if seq.is_empty() {
        return Err(SeqError::EmptySequence);
    }
    let spectra = seq
        .iter()
        .enumerate()
        .map(|(n, a)| spectrum(a).map_err(|_| SeqError::EmptyStructure(n)))
        .collect::<Result<Vec<_>, _>>()?;
    let clips = clip(&spectra, limit)?;
    let len = limit.len();
    let mut groups: Vec<(usize, usize)> = Vec::new();
    for i in 0..len {
        match groups.last_mut() {
            Some((start, end)) if limit.get(*start) == limit.get(i) => *end = i + 1,
            _ => groups.push((i, i + 1)),
        }
    }
    let mut columns: Vec<Vec<Option<Vec<usize>>>> = vec![vec![None; seq.len()]; len];
    let mut last_stats: Vec<Option<Vec<BigRational>>> = vec![None; len];
    let mut residues = Vec::with_capacity(seq.len());
    for (n, a) in seq.iter().enumerate() {
        let mut comps = a.connected_components();
        comps.sort_by_key(|c| std::cmp::Reverse(c.len()));
        let matched = clips[n].min(comps.len());
        let stats = comps[..matched]
            .iter()
            .map(|c| component_statistics(&a.induced(c), r))
            .collect::<Result<Vec<_>, _>>()?;
        for &(start, end) in &groups {
            let stop = end.min(matched);
            if start >= stop {
                continue;
            }
            let cols: Vec<usize> = (start..stop).collect();
            let mut free_cols: BTreeSet<usize> = cols.iter().copied().collect();
            let mut free_comps: BTreeSet<usize> = cols.iter().copied().collect();
            while !free_cols.is_empty() {
                let mut best: Option<(BigRational, usize, &Vec<BigRational>, usize)> = None;
                for &col in &free_cols {
                    for &c in &free_comps {
                        let cost = match &last_stats[col] {
                            Some(prev) => l1(prev, &stats[c]),
                            None => BigRational::zero(),
                        };
                        let key = (cost, col, &stats[c], c);
                        if best.as_ref().is_none_or(|b| key < *b) {
                            best = Some(key);
                        }
                    }
                }
                let (_, col, _, c) = best.expect("equal numbers of columns and components");
                free_cols.remove(&col);
                free_comps.remove(&c);
                columns[col][n] = Some(comps[c].clone());
                last_stats[col] = Some(stats[c].clone());
            }
        }
        let mut residue: Vec<usize> = comps[matched..].iter().flatten().copied().collect();
        residue.sort_unstable();
        residues.push(residue);
    }
    Ok(CombDecomposition {
        columns,
        residues,
        clip: clips,
    })
}

/// Canonical form of a rooted structure: the root is element 0 and the
/// tuples of every relation (by signature index) are listed in order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RootedCode {
    pub size: usize,
    pub tuples: Vec<(usize, Vec<usize>)>,
}

fn rerank<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let distinct: BTreeSet<K> = keys.iter().cloned().collect();
    let order: Vec<K> = distinct.into_iter().collect();
    keys.iter()
        .map(|k| order.binary_search(k).expect("present"))
        .collect()
}

struct Canonizer<'a> {
    s: &'a Structure,
    /// Tuples touching each element: (relation, tuple).
    incident: Vec<Vec<(usize, Vec<usize>)>>,
    all: Vec<(usize, Vec<usize>)>,
}

impl<'a> Canonizer<'a> {
    fn new(s: &'a Structure) -> Self {
        let mut incident = vec![Vec::new(); s.size()];
        let mut all = Vec::new();
        for rel in 0..s.signature().len() {
            for t in s.tuples(rel) {
                let mut seen = BTreeSet::new();
                for &e in &t {
                    if seen.insert(e) {
                        incident[e].push((rel, t.clone()));
                    }
                }
                all.push((rel, t));
            }
        }
        Self { s, incident, all }
    }

    fn refine(&self, mut colors: Vec<usize>) -> Vec<usize> {
        loop {
            let cells = colors.iter().collect::<BTreeSet<_>>().len();
            let keys: Vec<(usize, Vec<(usize, Vec<usize>, Vec<bool>)>)> = (0..self.s.size())
                .map(|v| {
                    let mut sig: Vec<(usize, Vec<usize>, Vec<bool>)> = self.incident[v]
                        .iter()
                        .map(|(rel, t)| {
                            (
                                *rel,
                                t.iter().map(|&e| colors[e]).collect(),
                                t.iter().map(|&e| e == v).collect(),
                            )
                        })
                        .collect();
                    sig.sort();
                    (colors[v], sig)
                })
                .collect();
            colors = rerank(&keys);
            if colors.iter().collect::<BTreeSet<_>>().len() == cells {
                return colors;
            }
        }
    }

    fn code(&self, colors: &[usize]) -> Vec<(usize, Vec<usize>)> {
        let mut code: Vec<(usize, Vec<usize>)> = self
            .all
            .iter()
            .map(|(rel, t)| (*rel, t.iter().map(|&e| colors[e]).collect()))
            .collect();
        code.sort();
        code
    }

    fn search(&self, colors: Vec<usize>, best: &mut Option<Vec<(usize, Vec<usize>)>>) {
        let colors = self.refine(colors);
        let n = self.s.size();
        let mut count = vec![0usize; n];
        for &c in &colors {
            count[c] += 1;
        }
        let Some(target) = (0..n).find(|&c| count[c] > 1) else {
            let code = self.code(&colors);
            if best.as_ref().is_none_or(|b| code < *b) {
                *best = Some(code);
            }
            return;
        };
        let cell: Vec<usize> = (0..n).filter(|&v| colors[v] == target).collect();
        let mut tried: Vec<usize> = Vec::new();
        for &v in &cell {
            if tried
                .iter()
                .any(|&u| self.swap_is_automorphism(&colors, u, v))
            {
                continue;
            }
            tried.push(v);
            let keys: Vec<(usize, bool)> = (0..n).map(|u| (colors[u], u != v)).collect();
            self.search(rerank(&keys), best);
        }
    }

    fn swap_is_automorphism(&self, colors: &[usize], u: usize, v: usize) -> bool {
        if colors[u] != colors[v] {
            return false;
        }
        let mut perm: Vec<usize> = (0..self.s.size()).collect();
        perm.swap(u, v);
        self.s.relabel(&perm) == *self.s
    }
}

/// Canonical code of `s` rooted at `root`, by colour refinement and
/// individualisation with exhaustive branching.
pub fn rooted_canonical_form(s: &Structure, root: usize) -> RootedCode {
    let canon = Canonizer::new(s);
    let initial: Vec<usize> = (0..s.size()).map(|v| usize::from(v != root)).collect();
    let mut best = None;
    canon.search(initial, &mut best);
    RootedCode {
        size: s.size(),
        tuples: best.unwrap_or_default(),
    }
}

/// Vertices within Gaifman distance `r` of `v`, in increasing order.
pub fn ball(s: &Structure, v: usize, r: usize) -> Vec<usize> {
    let neighbors = s.gaifman_neighbors();
    let mut dist = vec![usize::MAX; s.size()];
    dist[v] = 0;
    let mut frontier = vec![v];
    for d in 1..=r {
        let mut next = Vec::new();
        for &u in &frontier {
            for &w in &neighbors[u] {
                if dist[w] == usize::MAX {
                    dist[w] = d;
                    next.push(w);
                }
            }
        }
        frontier = next;
    }
    (0..s.size()).filter(|&u| dist[u] != usize::MAX).collect()
}

/// Frequencies of the isomorphism types of rooted `r`-balls.
pub fn ball_statistics(
    g: &Structure,
    r: usize,
) -> Result<BTreeMap<RootedCode, BigRational>, SeqError> {
    if g.is_empty() {
        return Err(SeqError::EmptyStructure(0));
    }
    let n = g.size();
    let mut counts: BTreeMap<RootedCode, usize> = BTreeMap::new();
    for v in 0..n {
        let vs = ball(g, v, r);
        let root = vs.binary_search(&v).expect("center in ball");
        let code = rooted_canonical_form(&g.induced(&vs), root);
        *counts.entry(code).or_insert(0) += 1;
    }
    Ok(counts.into_iter().map(|(c, k)| (c, ratio(k, n))).collect())
}

/// Which mass transport constraint a parent/child pair breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FmtpKind {
    /// `w' = 0` but the child tuple has mass.
    OrphanMass,
    /// `0 < mu(t)`, `w' < K` and `mu(t') != w' mu(t)`.
    CountMismatch,
    /// `0 < mu(t)`, `w' = K` and `mu(t') < K mu(t)`.
    SaturationDeficit,
    /// `mu(t) = 0`, `mu(t') > 0` and `0 < w' < K`.
    UnsaturatedFromNull,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FmtpViolation {
    pub kind: FmtpKind,
    pub parent: EncodeTuple,
    pub child: EncodeTuple,
    pub w: u32,
    pub mu_parent: BigRational,
    pub mu_child: BigRational,
}

/// Parent/child pairs of a statistic that break mass transport. Pairs are
/// the stored `w'` entries, every stored tuple with its parent, and every
/// child type of a positive-mass tuple.
pub fn fmtp_check(stat: &TreeStatistic) -> Vec<FmtpViolation> {
    let cap = stat.cap();
    let mut pairs: BTreeSet<(EncodeTuple, EncodeTuple)> = stat.weights().keys().cloned().collect();
    for (t, m) in stat.masses() {
        if let Some(p) = t.parent() {
            pairs.insert((p, t.clone()));
        }
        if m.is_positive() {
            for (ty, _) in &t.last().children {
                pairs.insert((t.clone(), t.child(ty.clone())));
            }
        }
    }
    let mut out = Vec::new();
    for (t, t2) in pairs {
        let w = stat.w_prime(&t, &t2);
        let (mt, mc) = (stat.mass(&t), stat.mass(&t2));
        let k = |x: u32| BigRational::from_integer(BigInt::from(x));
        let kind = if w == 0 && mc.is_positive() {
            Some(FmtpKind::OrphanMass)
        } else if mt.is_positive() && w < cap && mc != k(w) * &mt {
            Some(FmtpKind::CountMismatch)
        } else if mt.is_positive() && w >= cap && mc < k(cap) * &mt {
            Some(FmtpKind::SaturationDeficit)
        } else if mt.is_zero() && mc.is_positive() && w > 0 && w < cap {
            Some(FmtpKind::UnsaturatedFromNull)
        } else {
            None
        };
        if let Some(kind) = kind {
            out.push(FmtpViolation {
                kind,
                parent: t,
                child: t2,
                w,
                mu_parent: mt,
                mu_child: mc,
            });
        }
    }
    out
}
