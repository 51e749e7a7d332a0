//! JSON formats for structures, trees, tree statistics and schemes.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equiv::{CapType, EncodeTuple, TypeTable};
use crate::folang::{parse, ParseError};
use crate::interp::{BasicScheme, InterpError};
use crate::structure::{
    color_relation, RelationSymbol, RootedTree, Signature, Structure, StructureError,
};
use crate::treelim::{TreeError, TreeStatistic};

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Interp(#[from] InterpError),
    #[error("definition of `{name}`: {source}")]
    Definition { name: String, source: ParseError },
    #[error("invalid rational `{0}`")]
    Rational(String),
    #[error("type id {0} is undefined or refers forward")]
    TypeId(usize),
    #[error("tuple index {0} out of range")]
    TupleIndex(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationJson {
    pub name: String,
    pub arity: usize,
}

/// Relations listed explicitly, followed by `colors` relations `C1..Cc`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureJson {
    pub relations: Vec<RelationJson>,
    #[serde(default)]
    pub colors: usize,
}

impl SignatureJson {
    pub fn to_signature(&self) -> Result<Signature, StructureError> {
        let mut rels: Vec<RelationSymbol> = self
            .relations
            .iter()
            .map(|r| RelationSymbol::new(r.name.clone(), r.arity))
            .collect();
        rels.extend((1..=self.colors).map(|i| RelationSymbol::new(color_relation(i), 1)));
        Signature::new(rels)
    }

    pub fn from_signature(sig: &Signature) -> Self {
        Self {
            relations: sig
                .relations()
                .iter()
                .map(|r| RelationJson {
                    name: r.name.clone(),
                    arity: r.arity,
                })
                .collect(),
            colors: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureJson {
    pub signature: SignatureJson,
    pub size: usize,
    #[serde(default)]
    pub tables: BTreeMap<String, Vec<Vec<usize>>>,
}

pub fn structure_from_json(text: &str) -> Result<Structure, JsonError> {
    let j: StructureJson = serde_json::from_str(text)?;
    let sig = j.signature.to_signature()?;
    Ok(Structure::new(sig, j.size, j.tables)?)
}

pub fn structure_to_json(s: &Structure) -> StructureJson {
    StructureJson {
        signature: SignatureJson::from_signature(s.signature()),
        size: s.size(),
        tables: s
            .signature()
            .relations()
            .iter()
            .enumerate()
            .map(|(i, r)| (r.name.clone(), s.tuples(i)))
            .collect(),
    }
}

/// A colored rooted tree; the root is its own parent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeJson {
    pub n: usize,
    pub parent: Vec<usize>,
    pub color: Vec<u32>,
    pub h: usize,
}

pub fn tree_from_json(text: &str) -> Result<RootedTree, JsonError> {
    let j: TreeJson = serde_json::from_str(text)?;
    if j.parent.len() != j.n {
        return Err(StructureError::ColorLength {
            found: j.parent.len(),
            expected: j.n,
        }
        .into());
    }
    Ok(RootedTree::new(j.parent, j.color, j.h)?)
}

pub fn tree_to_json(t: &RootedTree) -> TreeJson {
    TreeJson {
        n: t.len(),
        parent: t.parents().to_vec(),
        color: t.colors().to_vec(),
        h: t.height_bound(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeJson {
    pub color: u32,
    /// `[type id, count]` pairs; ids refer to earlier entries.
    pub children: Vec<(usize, u32)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleJson {
    pub path: Vec<usize>,
    /// Exact mass as `"p/q"` or `"p"`.
    pub mass: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightJson {
    pub from: usize,
    pub to: usize,
    pub count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatisticJson {
    pub h: usize,
    pub r: usize,
    pub tuples: Vec<TupleJson>,
    pub types: Vec<TypeJson>,
    #[serde(default)]
    pub w: Vec<WeightJson>,
}

pub fn parse_rational(text: &str) -> Result<BigRational, JsonError> {
    let bad = || JsonError::Rational(text.to_string());
    let (p, q) = match text.trim().split_once('/') {
        Some((p, q)) => (p.trim(), q.trim()),
        None => (text.trim(), "1"),
    };
    let p: BigInt = p.parse().map_err(|_| bad())?;
    let q: BigInt = q.parse().map_err(|_| bad())?;
    if q == BigInt::from(0) {
        return Err(bad());
    }
    Ok(BigRational::new(p, q))
}

pub fn statistic_to_json(stat: &TreeStatistic) -> StatisticJson {
    let mut table = TypeTable::new();
    let mut index: BTreeMap<&EncodeTuple, usize> = BTreeMap::new();
    let tuples = stat
        .masses()
        .iter()
        .enumerate()
        .map(|(i, (t, m))| {
            index.insert(t, i);
            TupleJson {
                path: t.path.iter().map(|ty| table.intern(ty)).collect(),
                mass: m.to_string(),
            }
        })
        .collect();
    let types = table
        .types()
        .iter()
        .map(|ty| TypeJson {
            color: ty.color,
            children: ty
                .children
                .iter()
                .map(|(c, n)| (table.id(c).expect("interned"), *n))
                .collect(),
        })
        .collect();
    let w = stat
        .weights()
        .iter()
        .filter_map(|((a, b), &count)| {
            Some(WeightJson {
                from: *index.get(a)?,
                to: *index.get(b)?,
                count,
            })
        })
        .collect();
    StatisticJson {
        h: stat.height_bound(),
        r: stat.rank(),
        tuples,
        types,
        w,
    }
}

pub fn statistic_from_json(text: &str) -> Result<TreeStatistic, JsonError> {
    let j: StatisticJson = serde_json::from_str(text)?;
    let cap = (j.r + j.h) as u32;
    let mut types: Vec<Arc<CapType>> = Vec::with_capacity(j.types.len());
    for ty in &j.types {
        let mut children = Vec::with_capacity(ty.children.len());
        for &(id, n) in &ty.children {
            let c = types.get(id).ok_or(JsonError::TypeId(id))?;
            children.push((c.clone(), n));
        }
        types.push(Arc::new(CapType::from_children(ty.color, children, cap)));
    }
    let mut tuples = Vec::with_capacity(j.tuples.len());
    let mut mu = BTreeMap::new();
    for t in &j.tuples {
        let path = t
            .path
            .iter()
            .map(|&id| types.get(id).cloned().ok_or(JsonError::TypeId(id)))
            .collect::<Result<Vec<_>, _>>()?;
        let tuple = EncodeTuple::new(path);
        mu.insert(tuple.clone(), parse_rational(&t.mass)?);
        tuples.push(tuple);
    }
    let mut w = BTreeMap::new();
    for e in &j.w {
        let from = tuples.get(e.from).ok_or(JsonError::TupleIndex(e.from))?;
        let to = tuples.get(e.to).ok_or(JsonError::TupleIndex(e.to))?;
        w.insert((from.clone(), to.clone()), e.count);
    }
    Ok(TreeStatistic::new(j.h, j.r, mu, w)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemeJson {
    pub source: SignatureJson,
    pub target: SignatureJson,
    pub exponent: usize,
    pub defs: BTreeMap<String, String>,
}

pub fn scheme_from_json(text: &str) -> Result<BasicScheme, JsonError> {
    let j: SchemeJson = serde_json::from_str(text)?;
    let source = j.source.to_signature()?;
    let target = j.target.to_signature()?;
    let mut defs = BTreeMap::new();
    for (name, text) in &j.defs {
        let phi = parse(text, &source).map_err(|source| JsonError::Definition {
            name: name.clone(),
            source,
        })?;
        defs.insert(name.clone(), phi);
    }
    Ok(BasicScheme::new(source, target, j.exponent, defs)?)
}

pub fn scheme_to_json(s: &BasicScheme) -> SchemeJson {
    SchemeJson {
        source: SignatureJson::from_signature(s.source()),
        target: SignatureJson::from_signature(s.target()),
        exponent: s.exponent(),
        defs: s
            .definitions()
            .map(|(n, f)| (n.to_string(), f.to_string()))
            .collect(),
    }
}
