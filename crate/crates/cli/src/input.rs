//! Input files and the error classes that decide the exit code.

use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, Context};
use sha2::{Digest, Sha256};

use folim::interp::BasicScheme;
use folim::json::{scheme_from_json, statistic_from_json, structure_from_json, tree_from_json};
use folim::{RootedTree, Structure, TreeStatistic};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Usage,
    Input,
    Precondition,
}

impl Kind {
    pub fn exit_code(self) -> u8 {
        match self {
            Kind::Usage => 1,
            Kind::Input => 2,
            Kind::Precondition => 3,
        }
    }
}

#[derive(Debug)]
pub struct CliError {
    pub kind: Kind,
    pub error: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.error)
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Tags an error with the exit code class it belongs to.
pub trait Classify<T> {
    fn usage(self) -> CliResult<T>;
    fn input(self) -> CliResult<T>;
    fn pre(self) -> CliResult<T>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> CliResult<T> {
        self.map_err(|e| CliError {
            kind: Kind::Usage,
            error: e.into(),
        })
    }

    fn input(self) -> CliResult<T> {
        self.map_err(|e| CliError {
            kind: Kind::Input,
            error: e.into(),
        })
    }

    fn pre(self) -> CliResult<T> {
        self.map_err(|e| CliError {
            kind: Kind::Precondition,
            error: e.into(),
        })
    }
}

pub fn usage_error<T>(msg: impl fmt::Display) -> CliResult<T> {
    Err(anyhow!("{msg}")).usage()
}

/// Reads input files and keeps a digest of everything read, in order.
#[derive(Default)]
pub struct Inputs {
    hasher: Sha256,
}

impl Inputs {
    pub fn read(&mut self, path: &Path) -> CliResult<String> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))
            .input()?;
        self.hasher.update((text.len() as u64).to_le_bytes());
        self.hasher.update(text.as_bytes());
        Ok(text)
    }

    pub fn digest(self) -> String {
        hex::encode(self.hasher.finalize())
    }

    /// An edge list, or structure JSON when the name ends in `.json`.
    /// Colors apply to edge lists only.
    pub fn structure(&mut self, path: &Path, colors: Option<&Path>) -> CliResult<Structure> {
        let text = self.read(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            if colors.is_some() {
                return usage_error("--colors applies to edge lists, not structure JSON");
            }
            return structure_from_json(&text)
                .with_context(|| format!("in {}", path.display()))
                .input();
        }
        let (n, edges) = parse_edge_list(&text)
            .with_context(|| format!("in {}", path.display()))
            .input()?;
        let colors = match colors {
            Some(c) => {
                let text = self.read(c)?;
                parse_colors(&text, n)
                    .with_context(|| format!("in {}", c.display()))
                    .input()?
            }
            None => Vec::new(),
        };
        let count = colors.iter().max().map_or(0, |&c| c as usize + 1);
        Structure::colored_graph(n, &edges, &colors, count)
            .with_context(|| format!("in {}", path.display()))
            .input()
    }

    pub fn tree(&mut self, path: &Path) -> CliResult<RootedTree> {
        let text = self.read(path)?;
        tree_from_json(&text)
            .with_context(|| format!("in {}", path.display()))
            .input()
    }

    pub fn statistic(&mut self, path: &Path) -> CliResult<TreeStatistic> {
        let text = self.read(path)?;
        statistic_from_json(&text)
            .with_context(|| format!("in {}", path.display()))
            .input()
    }

    pub fn scheme(&mut self, path: &Path) -> CliResult<BasicScheme> {
        let text = self.read(path)?;
        scheme_from_json(&text)
            .with_context(|| format!("in {}", path.display()))
            .input()
    }
}

fn numbers(line: &str, lineno: usize) -> anyhow::Result<Vec<usize>> {
    line.split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| anyhow!("line {lineno}: `{t}` is not a non-negative integer"))
        })
        .collect()
}

/// `n m` on the first line, then `m` lines `u v` with 0-based endpoints.
/// Blank lines are skipped.
pub fn parse_edge_list(text: &str) -> anyhow::Result<(usize, Vec<(usize, usize)>)> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (lineno, header) = lines.next().ok_or_else(|| anyhow!("empty edge list"))?;
    let (n, m) = match numbers(header, lineno)?[..] {
        [n, m] => (n, m),
        _ => return Err(anyhow!("line {lineno}: header must be `n m`")),
    };
    let mut edges = Vec::with_capacity(m);
    for (lineno, line) in lines {
        match numbers(line, lineno)?[..] {
            [u, v] if u < n && v < n => edges.push((u, v)),
            [_, _] => return Err(anyhow!("line {lineno}: endpoint out of range 0..{n}")),
            _ => return Err(anyhow!("line {lineno}: expected `u v`")),
        }
    }
    if edges.len() != m {
        return Err(anyhow!("header announces {m} edges, found {}", edges.len()));
    }
    Ok((n, edges))
}

/// One color per line, `n` lines.
pub fn parse_colors(text: &str, n: usize) -> anyhow::Result<Vec<u32>> {
    let colors = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<u32>()
                .map_err(|_| anyhow!("line {}: `{}` is not a color", i + 1, l.trim()))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    if colors.len() != n {
        return Err(anyhow!("expected {n} colors, found {}", colors.len()));
    }
    Ok(colors)
}

/// Comma or whitespace separated vertex list.
pub fn parse_tuple(text: &str) -> anyhow::Result<Vec<usize>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().map_err(|_| anyhow!("`{t}` is not a vertex")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_lists() {
        assert_eq!(
            parse_edge_list("3 2\n0 1\n\n1 2\n").unwrap(),
            (3, vec![(0, 1), (1, 2)])
        );
        assert_eq!(parse_edge_list("1 0").unwrap(), (1, vec![]));
        assert!(parse_edge_list("").is_err());
        assert!(parse_edge_list("2 1\n0 2").is_err());
        assert!(parse_edge_list("2 2\n0 1").is_err());
        assert!(parse_edge_list("2 1\n0 x").is_err());
    }

    #[test]
    fn colors_and_tuples() {
        assert_eq!(parse_colors("0\n2\n1\n", 3).unwrap(), vec![0, 2, 1]);
        assert!(parse_colors("0\n", 2).is_err());
        assert_eq!(parse_tuple("0, 3 2").unwrap(), vec![0, 3, 2]);
        assert!(parse_tuple("a").is_err());
    }
}
