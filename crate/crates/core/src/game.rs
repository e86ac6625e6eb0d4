//! Game primitives: the prisoner's dilemma payoff matrix, memory-one
//! strategies over the four per-round outcomes, and information classes
//! (set partitions of the outcomes) with their block-constrained strategies.
//!
//! Outcomes are indexed 0 = CC, 1 = CD, 2 = DC, 3 = DD, focal action first.
//! Class codes label each position with the smallest outcome index of its
//! block (1-based), so the reactive partition {CC,DC}/{CD,DD} reads "1212"
//! and the full-information class is "1234".

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

/// Number of per-round outcomes.
pub const N_OUTCOMES: usize = 4;

/// Outcome names in index order, focal action first.
pub const OUTCOME_NAMES: [&str; N_OUTCOMES] = ["CC", "CD", "DC", "DD"];

/// Index of the same outcome seen from the opposite seat (CD and DC swap).
pub const SEAT_SWAP: [usize; N_OUTCOMES] = [0, 2, 1, 3];

/// Prisoner's dilemma payoffs with the strict ordering T > R > P > S.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffMatrix {
    t: f64,
    r: f64,
    p: f64,
    s: f64,
}

impl PayoffMatrix {
    pub fn new(t: f64, r: f64, p: f64, s: f64) -> Result<Self> {
        let finite = t.is_finite() && r.is_finite() && p.is_finite() && s.is_finite();
        if !finite || !(t > r && r > p && p > s) {
            return Err(Error::PayoffOrdering { t, r, p, s });
        }
        Ok(Self { t, r, p, s })
    }

    /// The conventional (T, R, P, S) = (5, 3, 1, 0).
    pub fn standard() -> Self {
        Self {
            t: 5.0,
            r: 3.0,
            p: 1.0,
            s: 0.0,
        }
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Focal payoff per outcome: (R, S, T, P).
    pub fn focal_payoffs(&self) -> [f64; N_OUTCOMES] {
        [self.r, self.s, self.t, self.p]
    }

    /// Opponent payoff per outcome: (R, T, S, P).
    pub fn opponent_payoffs(&self) -> [f64; N_OUTCOMES] {
        [self.r, self.t, self.s, self.p]
    }
}

impl fmt::Display for PayoffMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(T,R,P,S)=({},{},{},{})", self.t, self.r, self.p, self.s)
    }
}

/// Cooperation probability after each previous outcome.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryOneStrategy {
    probs: [f64; N_OUTCOMES],
}

impl MemoryOneStrategy {
    pub fn new(probs: [f64; N_OUTCOMES]) -> Result<Self> {
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::ProbabilityRange { index, value });
            }
        }
        Ok(Self { probs })
    }

    /// The same cooperation probability after every outcome.
    pub fn constant(p: f64) -> Result<Self> {
        Self::new([p; N_OUTCOMES])
    }

    pub fn probs(&self) -> &[f64; N_OUTCOMES] {
        &self.probs
    }

    pub fn get(&self, outcome: usize) -> f64 {
        self.probs[outcome]
    }

    /// Every component moved into [eps, 1 - eps].
    pub fn clipped(&self, eps: f64) -> Self {
        let mut probs = self.probs;
        for v in &mut probs {
            *v = v.clamp(eps, 1.0 - eps);
        }
        Self { probs }
    }
}

/// A set partition of the four outcomes; strategies constrained to it react
/// identically to outcomes in the same block.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InformationClass {
    // Serialized as the bare code string; see the Serialize impl below.
    code: String,
    /// Blocks of 0-based outcome indices; blocks sorted by minimum member,
    /// members sorted ascending.
    blocks: Vec<Vec<usize>>,
}

/// Canonical code of a partition: position i carries 1 + the smallest
/// outcome index of the block containing i.
fn code_from_blocks(blocks: &[Vec<usize>]) -> String {
    let mut digits = [0usize; N_OUTCOMES];
    for members in blocks {
        let label = members[0] + 1;
        for &i in members {
            digits[i] = label;
        }
    }
    digits.iter().map(|d| d.to_string()).collect()
}

/// Groups positions of `code` by character and returns normalized blocks.
fn blocks_from_labels(code: &str) -> Result<Vec<Vec<usize>>> {
    let chars: Vec<char> = code.chars().collect();
    if chars.len() != N_OUTCOMES {
        return Err(Error::ClassCode {
            code: code.to_string(),
            reason: format!("expected {N_OUTCOMES} characters"),
        });
    }
    let mut blocks: Vec<(char, Vec<usize>)> = Vec::new();
    for (i, c) in chars.iter().enumerate() {
        match blocks.iter_mut().find(|(label, _)| label == c) {
            Some((_, members)) => members.push(i),
            None => blocks.push((*c, vec![i])),
        }
    }
    let mut blocks: Vec<Vec<usize>> = blocks.into_iter().map(|(_, m)| m).collect();
    blocks.sort_by_key(|m| m[0]);
    Ok(blocks)
}

/// Maps an arbitrary block labeling (any 4 characters) to the canonical code.
pub fn canonicalize_code(raw: &str) -> Result<String> {
    Ok(code_from_blocks(&blocks_from_labels(raw)?))
}

impl InformationClass {
    /// Parses a canonical code; rejects non-canonical labelings.
    pub fn from_code(code: &str) -> Result<Self> {
        let blocks = blocks_from_labels(code)?;
        let canonical = code_from_blocks(&blocks);
        if canonical != code {
            return Err(Error::ClassCode {
                code: code.to_string(),
                reason: format!("not canonical (canonical form is {canonical})"),
            });
        }
        Ok(Self {
            code: canonical,
            blocks,
        })
    }

    /// Builds the class from explicit blocks (any order); canonicalizes.
    pub fn from_partition(blocks: &[Vec<usize>]) -> Result<Self> {
        let mut seen = [false; N_OUTCOMES];
        for members in blocks {
            for &i in members {
                if i >= N_OUTCOMES {
                    return Err(Error::Partition(format!("outcome index {i} out of range")));
                }
                if seen[i] {
                    return Err(Error::Partition(format!("outcome index {i} repeated")));
                }
                seen[i] = true;
            }
        }
        if seen != [true; N_OUTCOMES] {
            return Err(Error::Partition("not all outcomes covered".to_string()));
        }
        let mut blocks: Vec<Vec<usize>> = blocks
            .iter()
            .filter(|m| !m.is_empty())
            .map(|m| {
                let mut m = m.clone();
                m.sort_unstable();
                m
            })
            .collect();
        blocks.sort_by_key(|m| m[0]);
        let code = code_from_blocks(&blocks);
        Ok(Self { code, blocks })
    }

    /// The unconstrained memory-one class "1234".
    pub fn full() -> Self {
        Self::from_code("1234").expect("canonical")
    }

    pub fn code(&self) -> &str {
        &self.code
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Index (into `blocks`) of the block containing `outcome`.
    pub fn block_of(&self, outcome: usize) -> usize {
        self.blocks
            .iter()
            .position(|m| m.contains(&outcome))
            .expect("partition covers all outcomes")
    }

    /// Block names as concatenated 1-based outcome digits, e.g. "13", "24".
    pub fn block_names(&self) -> Vec<String> {
        self.blocks
            .iter()
            .map(|m| m.iter().map(|i| (i + 1).to_string()).collect())
            .collect()
    }

    /// True when every block of `self` lies inside a block of `other`,
    /// i.e. `self` distinguishes at least as much as `other`.
    pub fn refines(&self, other: &InformationClass) -> bool {
        self.blocks.iter().all(|mine| {
            other
                .blocks
                .iter()
                .any(|theirs| mine.iter().all(|i| theirs.contains(i)))
        })
    }

    /// True when some block separates outcomes that differ in the opponent's
    /// action; false exactly for "1133" and "1111", which see only the
    /// focal player's own previous action.
    pub fn references_opponent(&self) -> bool {
        let same_block = |a: usize, b: usize| self.block_of(a) == self.block_of(b);
        !(same_block(0, 1) && same_block(2, 3))
    }
}

impl Serialize for InformationClass {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.code)
    }
}

impl fmt::Display for InformationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.code)
    }
}

/// All 15 information classes, sorted by code.
pub fn enumerate_information_classes() -> Vec<InformationClass> {
    fn assign(next: usize, blocks: &mut Vec<Vec<usize>>, out: &mut Vec<InformationClass>) {
        if next == N_OUTCOMES {
            out.push(InformationClass::from_partition(blocks).expect("valid partition"));
            return;
        }
        for b in 0..blocks.len() {
            blocks[b].push(next);
            assign(next + 1, blocks, out);
            blocks[b].pop();
        }
        blocks.push(vec![next]);
        assign(next + 1, blocks, out);
        blocks.pop();
    }
    let mut out = Vec::new();
    assign(0, &mut Vec::new(), &mut out);
    out.sort_by(|a, b| a.code.cmp(&b.code));
    out
}

/// One cooperation probability per block of an information class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStrategy {
    class: InformationClass,
    probs: Vec<f64>,
}

impl ClassStrategy {
    pub fn new(class: InformationClass, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != class.n_blocks() {
            return Err(Error::BlockCount {
                code: class.code().to_string(),
                expected: class.n_blocks(),
                got: probs.len(),
            });
        }
        for (index, &value) in probs.iter().enumerate() {
            if !value.is_finite() || !(0.0..=1.0).contains(&value) {
                return Err(Error::ProbabilityRange { index, value });
            }
        }
        Ok(Self { class, probs })
    }

    pub fn class(&self) -> &InformationClass {
        &self.class
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Assigns each outcome its block's probability.
    pub fn embed(&self) -> MemoryOneStrategy {
        let mut probs = [0.0; N_OUTCOMES];
        for (b, members) in self.class.blocks().iter().enumerate() {
            for &i in members {
                probs[i] = self.probs[b];
            }
        }
        MemoryOneStrategy { probs }
    }

    /// Reads block probabilities back out of a memory-one vector whose
    /// entries are constant on each block (first member wins).
    pub fn from_embedded(class: InformationClass, probs: &[f64; N_OUTCOMES]) -> Result<Self> {
        let values = class.blocks().iter().map(|m| probs[m[0]]).collect();
        Self::new(class, values)
    }

    /// Every block probability moved into [eps, 1 - eps].
    pub fn clipped(&self, eps: f64) -> Self {
        Self {
            class: self.class.clone(),
            probs: self
                .probs
                .iter()
                .map(|v| v.clamp(eps, 1.0 - eps))
                .collect(),
        }
    }
}
