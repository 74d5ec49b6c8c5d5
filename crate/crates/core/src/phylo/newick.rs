//! Newick reader.
//!
//! Every edge below the root must carry a numeric length. Leaf names that are
//! exactly the integers `1..=n` are used as leaf numbers; any other set of
//! names is sorted lexically and numbered in that order, unless the caller
//! supplies a label table.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

use super::{Node, PhyloTree};

#[derive(Debug, Clone, PartialEq)]
pub enum NewickErrorKind {
    UnbalancedParentheses,
    MissingBranchLength,
    InvalidBranchLength(String),
    DuplicateLabel(String),
    UnknownLabel(String),
    EmptyLabel,
    SingleChild,
    Unexpected(char),
    UnexpectedEnd,
    MissingSemicolon,
    TrailingInput,
}

impl fmt::Display for NewickErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::UnbalancedParentheses => write!(f, "unbalanced parentheses"),
            Self::MissingBranchLength => write!(f, "missing branch length"),
            Self::InvalidBranchLength(s) => write!(f, "branch length {s:?} is not a non-negative number"),
            Self::DuplicateLabel(s) => write!(f, "duplicate leaf label {s:?}"),
            Self::UnknownLabel(s) => write!(f, "leaf label {s:?} is not in the label table"),
            Self::EmptyLabel => write!(f, "leaf without a label"),
            Self::SingleChild => write!(f, "internal node with a single child"),
            Self::Unexpected(c) => write!(f, "unexpected character {c:?}"),
            Self::UnexpectedEnd => write!(f, "unexpected end of input"),
            Self::MissingSemicolon => write!(f, "missing terminating ';'"),
            Self::TrailingInput => write!(f, "text after the terminating ';'"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("newick error at offset {offset}: {kind}")]
pub struct NewickError {
    pub kind: NewickErrorKind,
    /// Byte offset into the input.
    pub offset: usize,
}

struct Parser<'a> {
    text: &'a str,
    pos: usize,
    nodes: Vec<Node>,
    names: Vec<(String, usize, usize)>, // (name, node, offset)
}

impl<'a> Parser<'a> {
    fn err<T>(&self, kind: NewickErrorKind, offset: usize) -> Result<T, NewickError> {
        Err(NewickError { kind, offset })
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.text[self.pos..].chars().next()
    }

    fn label(&mut self) -> Result<String, NewickError> {
        self.skip_ws();
        if self.peek() == Some('\'') {
            let start = self.pos;
            self.pos += 1;
            let mut out = String::new();
            loop {
                match self.peek() {
                    None => return self.err(NewickErrorKind::UnexpectedEnd, start),
                    Some('\'') => {
                        self.pos += 1;
                        if self.peek() == Some('\'') {
                            out.push('\'');
                            self.pos += 1;
                        } else {
                            return Ok(out);
                        }
                    }
                    Some(c) => {
                        out.push(c);
                        self.pos += c.len_utf8();
                    }
                }
            }
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            if "(),:;'[]".contains(c) || c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
        Ok(self.text[start..self.pos].replace('_', " "))
    }

    /// Optional `:length`; returns `None` when absent.
    fn length(&mut self) -> Result<Option<f64>, NewickError> {
        self.skip_ws();
        if self.peek() != Some(':') {
            return Ok(None);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '+' {
                self.pos += 1;
            } else {
                break;
            }
        }
        let token = &self.text[start..self.pos];
        if token.is_empty() {
            return match self.peek() {
                None => self.err(NewickErrorKind::UnexpectedEnd, self.pos),
                Some(_) => self.err(NewickErrorKind::MissingBranchLength, start),
            };
        }
        match token.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(Some(v)),
            _ => self.err(NewickErrorKind::InvalidBranchLength(token.to_string()), start),
        }
    }

    fn subtree(&mut self, parent: Option<usize>) -> Result<usize, NewickError> {
        self.skip_ws();
        let id = self.nodes.len();
        self.nodes.push(Node {
            parent,
            children: Vec::new(),
            length: 0.0,
            leaf: None,
        });
        let open = self.pos;
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                loop {
                    let child = self.subtree(Some(id))?;
                    self.nodes[id].children.push(child);
                    self.skip_ws();
                    match self.peek() {
                        Some(',') => self.pos += 1,
                        Some(')') => {
                            self.pos += 1;
                            break;
                        }
                        Some(';') | None => return self.err(NewickErrorKind::UnbalancedParentheses, open),
                        Some(c) => return self.err(NewickErrorKind::Unexpected(c), self.pos),
                    }
                }
                if self.nodes[id].children.len() < 2 {
                    return self.err(NewickErrorKind::SingleChild, open);
                }
                // Internal labels (e.g. support values) are ignored.
                self.label()?;
            }
            Some(')') => return self.err(NewickErrorKind::UnbalancedParentheses, self.pos),
            None => return self.err(NewickErrorKind::UnexpectedEnd, self.pos),
            Some(_) => {
                let at = self.pos;
                let name = self.label()?;
                if name.is_empty() {
                    return match self.peek() {
                        Some(c) if c != ':' && c != ',' && c != ')' => {
                            self.err(NewickErrorKind::Unexpected(c), self.pos)
                        }
                        _ => self.err(NewickErrorKind::EmptyLabel, at),
                    };
                }
                self.names.push((name, id, at));
            }
        }
        let len_at = self.pos;
        match self.length()? {
            Some(v) => self.nodes[id].length = v,
            None if parent.is_some() => return self.err(NewickErrorKind::MissingBranchLength, len_at),
            None => {}
        }
        Ok(id)
    }
}

/// Offset of the first parenthesis without a partner, ignoring quoted text.
fn unbalanced_paren(text: &str) -> Option<usize> {
    let mut open = Vec::new();
    let mut quoted = false;
    for (at, c) in text.char_indices() {
        match c {
            '\'' => quoted = !quoted,
            '(' if !quoted => open.push(at),
            ')' if !quoted => {
                if open.pop().is_none() {
                    return Some(at);
                }
            }
            _ => {}
        }
    }
    open.first().copied()
}

fn parse_inner(text: &str, table: Option<&[String]>) -> Result<PhyloTree, NewickError> {
    if let Some(offset) = unbalanced_paren(text) {
        return Err(NewickError {
            kind: NewickErrorKind::UnbalancedParentheses,
            offset,
        });
    }
    let mut p = Parser {
        text,
        pos: 0,
        nodes: Vec::new(),
        names: Vec::new(),
    };
    let root = p.subtree(None)?;
    p.skip_ws();
    match p.peek() {
        Some(';') => p.pos += 1,
        Some(')') => return p.err(NewickErrorKind::UnbalancedParentheses, p.pos),
        Some(c) => return p.err(NewickErrorKind::Unexpected(c), p.pos),
        None => return p.err(NewickErrorKind::MissingSemicolon, p.pos),
    }
    p.skip_ws();
    if p.pos < text.len() {
        return p.err(NewickErrorKind::TrailingInput, p.pos);
    }
    p.nodes[root].length = 0.0;

    let mut first_seen: HashMap<&str, usize> = HashMap::new();
    for (name, _, at) in &p.names {
        if first_seen.insert(name.as_str(), *at).is_some() {
            return p.err(NewickErrorKind::DuplicateLabel(name.clone()), *at);
        }
    }

    let labels: Vec<String> = match table {
        Some(t) => t.to_vec(),
        None => {
            let n = p.names.len();
            let numeric: Option<Vec<usize>> =
                p.names.iter().map(|(s, _, _)| s.parse::<usize>().ok()).collect();
            match numeric {
                Some(nums) if {
                    let mut sorted = nums.clone();
                    sorted.sort_unstable();
                    sorted.iter().copied().eq(1..=n)
                } => (1..=n).map(|k| k.to_string()).collect(),
                _ => {
                    let mut sorted: Vec<String> = p.names.iter().map(|(s, _, _)| s.clone()).collect();
                    sorted.sort();
                    sorted
                }
            }
        }
    };
    let index: HashMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(k, s)| (s.as_str(), k + 1))
        .collect();
    for (name, node, at) in &p.names {
        match index.get(name.as_str()) {
            Some(&k) => p.nodes[*node].leaf = Some(k),
            None => return p.err(NewickErrorKind::UnknownLabel(name.clone()), *at),
        }
    }
    let n_names = p.names.len();
    if n_names != labels.len() {
        // A table with extra entries leaves some leaf numbers unused.
        return p.err(NewickErrorKind::UnknownLabel(format!(
            "table has {} labels but the tree has {n_names} leaves",
            labels.len()
        )), 0);
    }
    Ok(PhyloTree::from_nodes(p.nodes, root, labels).expect("parser builds valid trees"))
}

/// Parses one `;`-terminated Newick tree.
pub fn parse_newick(text: &str) -> Result<PhyloTree, NewickError> {
    parse_inner(text, None)
}

/// Parses with an explicit label table: `table[k]` becomes leaf `k + 1`.
pub fn parse_newick_with_labels(text: &str, table: &[String]) -> Result<PhyloTree, NewickError> {
    parse_inner(text, Some(table))
}
