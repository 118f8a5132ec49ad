//! Colored Boltzmann sampler at the singularity, with exact-size and
//! size-window rejection.
//!
//! A vertex generated at exponent `e` draws the cycle type of a random
//! permutation of its children, weighted by `A(ρ^{e·i})` per cycle of length
//! `i`. Each cycle of length `ℓ` triggers one subtree at exponent `e·ℓ` that is
//! attached `ℓ` times. Vertices generated at exponent 1 are blue.
//!
//! Rejection runs in two passes. The first pass only tracks sizes: a subtree
//! at exponent `e` reached through cycles of total multiplicity `m` adds `m`
//! vertices per generated vertex, and the pass stops as soon as the size is
//! certain to exceed the target. When the size hits the target, the generator
//! state saved before the attempt is replayed with the same draws in the same
//! order, this time building the tree.

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::analysis::SingularData;
use crate::cycle_index::PowerSumTable;
use crate::degree::DegreeSet;
use crate::enumerate::CountTable;
use crate::error::{PolyaError, Result};
use crate::rng::SampleRng;

/// Weight below which an exponent is treated as producing leaves only.
const NEGLIGIBLE_WEIGHT: f64 = 1e-300;
/// Relative mass of the cycle-order law left out when Ω has a tail.
const ORDER_MASS_CUTOFF: f64 = 1e-18;
const MAX_ORDER: usize = 512;

/// Cycle type of a permutation: `multiplicities[i - 1]` cycles of length `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleType {
    pub multiplicities: Vec<u32>,
}

impl CycleType {
    pub fn from_lengths(lengths: &[u32]) -> Self {
        let max = lengths.iter().copied().max().unwrap_or(0) as usize;
        let mut multiplicities = vec![0; max];
        for &l in lengths {
            multiplicities[l as usize - 1] += 1;
        }
        Self { multiplicities }
    }

    /// Total order `Σ i·m_i`.
    pub fn order(&self) -> usize {
        self.multiplicities
            .iter()
            .enumerate()
            .map(|(i, &m)| (i + 1) * m as usize)
            .sum()
    }
}

/// How the subtree built for a cycle of length `ℓ` is attached. `SingleCopy`
/// attaches it once and exists only to check that the uniformity audit
/// detects it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CopyRule {
    #[default]
    Identical,
    SingleCopy,
}

/// A sampled tree. `parent[v] < v` for every non-root vertex; the root is 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ColoredTree {
    parent: Vec<u32>,
    blue: Vec<bool>,
    #[serde(skip)]
    copies: Vec<CopyGroup>,
}

/// `count` consecutive isomorphic subtrees of `len` vertices starting at
/// `first_root`, all produced from one cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CopyGroup {
    pub first_root: u32,
    pub len: u32,
    pub count: u32,
}

pub const NO_PARENT: u32 = u32::MAX;

impl ColoredTree {
    pub fn single_vertex() -> Self {
        Self {
            parent: vec![NO_PARENT],
            blue: vec![true],
            copies: Vec::new(),
        }
    }

    /// Builds a tree from a parent array; parents must precede children.
    pub fn from_parts(parent: Vec<u32>, blue: Vec<bool>) -> Self {
        assert_eq!(parent.len(), blue.len());
        Self {
            parent,
            blue,
            copies: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        self.parent.len()
    }

    pub fn parents(&self) -> &[u32] {
        &self.parent
    }

    pub fn blue(&self) -> &[bool] {
        &self.blue
    }

    pub fn copy_groups(&self) -> &[CopyGroup] {
        &self.copies
    }

    pub fn parent_options(&self) -> Vec<Option<usize>> {
        self.parent
            .iter()
            .map(|&p| (p != NO_PARENT).then_some(p as usize))
            .collect()
    }

    pub fn outdegrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.size()];
        for &p in &self.parent[1..] {
            deg[p as usize] += 1;
        }
        deg
    }

    /// Children lists in index order.
    pub fn children(&self) -> Vec<Vec<u32>> {
        let mut ch = vec![Vec::new(); self.size()];
        for (v, &p) in self.parent.iter().enumerate().skip(1) {
            ch[p as usize].push(v as u32);
        }
        ch
    }

    /// Checks the structural invariants: parents precede children, blue
    /// vertices form a subtree containing the root, no blue child under a
    /// non-blue parent and every outdegree lies in Ω.
    pub fn check(&self, omega: &DegreeSet) -> std::result::Result<(), String> {
        if self.parent.first() != Some(&NO_PARENT) {
            return Err("vertex 0 is not the root".into());
        }
        if !self.blue[0] {
            return Err("root is not blue".into());
        }
        for (v, &p) in self.parent.iter().enumerate().skip(1) {
            if p as usize >= v {
                return Err(format!("vertex {v} has parent {p}"));
            }
            if self.blue[v] && !self.blue[p as usize] {
                return Err(format!("blue vertex {v} under non-blue parent {p}"));
            }
        }
        for (v, d) in self.outdegrees().into_iter().enumerate() {
            if !omega.contains(d as usize) {
                return Err(format!("vertex {v} has outdegree {d}"));
            }
        }
        Ok(())
    }

    /// Newick string with unlabeled leaves, e.g. `((),())` for a cherry.
    pub fn to_newick(&self) -> String {
        let children = self.children();
        let mut out = String::with_capacity(3 * self.size());
        // (vertex, next child position)
        let mut stack: Vec<(u32, usize)> = vec![(0, 0)];
        out.push('(');
        while let Some(top) = stack.last_mut() {
            let (v, pos) = *top;
            let ch = &children[v as usize];
            if pos < ch.len() {
                top.1 += 1;
                if pos > 0 {
                    out.push(',');
                }
                out.push('(');
                stack.push((ch[pos], 0));
            } else {
                out.push(')');
                stack.pop();
            }
        }
        out.push(';');
        out
    }
}

/// Cycle-type law at one exponent.
///
/// Every cycle type of order at most `flat_order` is an outcome of an alias
/// table driven by a single 64-bit draw. One extra outcome stands for all
/// larger orders; it draws the order from the remaining weights and then
/// peels cycles with `P(first length i | order k) = p_i·h_{k-i}/(k·h_k)`.
#[derive(Debug)]
struct ExponentTable {
    slots: Vec<AliasSlot>,
    outcomes: Vec<Outcome>,
    lengths: Vec<u32>,
    residual_orders: Vec<u32>,
    residual_cumulative: Vec<f64>,
    /// `p[i] = A(ρ^{e·i})`, index 0 unused.
    p: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
struct AliasSlot {
    threshold: u64,
    keep: u32,
    alias: u32,
}

const RESIDUAL: u32 = u32::MAX;

#[derive(Debug, Clone, Copy)]
struct Outcome {
    /// Number of cycles of length `>= 2`, or [`RESIDUAL`].
    long_count: u32,
    fixed: u32,
    /// All lengths, `lengths[start..end]`, long cycles first.
    start: u32,
    end: u32,
}

/// Residual mass of the cycle-order law targeted by the flat part.
const FLAT_RESIDUAL: f64 = 1e-4;
const FLAT_MAX_OUTCOMES: usize = 1024;

impl ExponentTable {
    /// Placeholder that always draws the empty cycle type.
    fn leaf_only() -> Self {
        Self::assemble(vec![Vec::new()], vec![1.0], 0.0, Vec::new(), Vec::new(), vec![0.0], vec![1.0])
    }

    fn build(omega: &DegreeSet, sing: &SingularData, e: u64) -> Result<Self> {
        let mut len = match omega.max_degree() {
            Some(m) => m.max(1),
            None => {
                // h_k decays roughly like ρ^{e·k}
                let geometric = (ORDER_MASS_CUTOFF.ln() / (e as f64 * sing.rho.ln())).ceil() as usize;
                (geometric + 8).max(omega.boundary() + 1)
            }
        };
        loop {
            len = len.min(MAX_ORDER);
            let table = sing.power_sums_at_exponent(e, len)?;
            let h: Vec<f64> = (0..=len).map(|k| table.h(k)).collect::<Result<_>>()?;
            let total: f64 = (0..=len).filter(|&k| omega.contains(k)).map(|k| h[k]).sum();
            let last = h[len - 1].max(h[len]);
            if omega.is_finite() || last <= ORDER_MASS_CUTOFF * total || len == MAX_ORDER {
                return Ok(Self::from_weights(omega, &table, h));
            }
            len *= 2;
        }
    }

    fn from_weights(omega: &DegreeSet, table: &PowerSumTable, h: Vec<f64>) -> Self {
        let mut p = Vec::with_capacity(table.len() + 1);
        p.push(0.0);
        p.extend_from_slice(table.values());
        let max_k = h.len() - 1;
        let admissible: Vec<usize> = (0..=max_k).filter(|&k| omega.contains(k) && h[k] > 0.0).collect();
        let total: f64 = admissible.iter().map(|&k| h[k]).sum();

        // largest flat order within the outcome budget, stopping once the
        // remaining mass is small
        let mut flat_order = 0;
        let mut outcomes = 0;
        let mut covered = 0.0;
        for k in 0..=max_k {
            let extra = if omega.contains(k) { partition_count(k) } else { 0 };
            if outcomes + extra > FLAT_MAX_OUTCOMES {
                break;
            }
            outcomes += extra;
            flat_order = k;
            if omega.contains(k) {
                covered += h[k];
            }
            if total - covered <= FLAT_RESIDUAL * total {
                break;
            }
        }

        let mut types = Vec::new();
        let mut weights = Vec::new();
        for &k in admissible.iter().filter(|&&k| k <= flat_order) {
            let of_order = partitions(k);
            let raw: Vec<f64> = of_order.iter().map(|t| type_weight(t, &p)).collect();
            // rescale so the types of order k carry exactly h_k
            let sum: f64 = raw.iter().sum();
            for (t, w) in of_order.into_iter().zip(raw) {
                weights.push(w * h[k] / sum / total);
                types.push(t);
            }
        }
        let residual_orders: Vec<u32> = admissible
            .iter()
            .filter(|&&k| k > flat_order)
            .map(|&k| k as u32)
            .collect();
        let mut acc = 0.0;
        let residual_cumulative: Vec<f64> = residual_orders
            .iter()
            .map(|&k| {
                acc += h[k as usize];
                acc
            })
            .collect();
        Self::assemble(types, weights, acc / total, residual_orders, residual_cumulative, p, h)
    }

    fn assemble(
        types: Vec<Vec<u32>>,
        mut weights: Vec<f64>,
        residual_weight: f64,
        residual_orders: Vec<u32>,
        residual_cumulative: Vec<f64>,
        p: Vec<f64>,
        h: Vec<f64>,
    ) -> Self {
        let mut outcomes = Vec::with_capacity(types.len() + 1);
        let mut lengths = Vec::new();
        for t in types {
            // partitions are nonincreasing, so fixed points come last
            let fixed = t.iter().filter(|&&l| l == 1).count();
            let long = &t[..t.len() - fixed];
            let start = lengths.len() as u32;
            lengths.extend_from_slice(&t);
            outcomes.push(Outcome {
                long_count: long.len() as u32,
                fixed: fixed as u32,
                start,
                end: lengths.len() as u32,
            });
        }
        outcomes.push(Outcome {
            long_count: RESIDUAL,
            fixed: 0,
            start: 0,
            end: 0,
        });
        weights.push(residual_weight);
        let (threshold, alias) = alias_table(&weights);
        let slots = threshold
            .into_iter()
            .zip(alias)
            .enumerate()
            .map(|(i, (threshold, alias))| AliasSlot {
                threshold,
                keep: i as u32,
                alias,
            })
            .collect();
        Self {
            slots,
            outcomes,
            lengths,
            residual_orders,
            residual_cumulative,
            p,
            h,
        }
    }

    #[inline(always)]
    fn pick(&self, rng: &mut SampleRng) -> &Outcome {
        let x = rng.next_u64() as u128 * self.slots.len() as u128;
        let slot = self.slots[(x >> 64) as usize];
        // branch-free select; the comparison is a coin flip for most slots
        let keep = ((x as u64) < slot.threshold) as u32;
        let mask = keep.wrapping_neg();
        let idx = (slot.keep & mask) | (slot.alias & !mask);
        &self.outcomes[idx as usize]
    }

    /// Cycle lengths of one draw; the slice borrows either the table or `buf`.
    #[inline]
    fn draw<'a>(&'a self, rng: &mut SampleRng, buf: &'a mut Vec<u32>) -> &'a [u32] {
        let o = self.pick(rng);
        if o.long_count != RESIDUAL {
            return &self.lengths[o.start as usize..o.end as usize];
        }
        self.draw_residual(rng, buf)
    }

    #[cold]
    fn draw_residual<'a>(&self, rng: &mut SampleRng, buf: &'a mut Vec<u32>) -> &'a [u32] {
        buf.clear();
        let k = self.draw_residual_order(rng);
        self.peel(k, rng, buf);
        buf
    }

    fn draw_residual_order(&self, rng: &mut SampleRng) -> usize {
        let total = *self.residual_cumulative.last().expect("residual outcome has mass");
        let u = rng.random::<f64>() * total;
        for (i, &c) in self.residual_cumulative.iter().enumerate() {
            if u < c {
                return self.residual_orders[i] as usize;
            }
        }
        *self.residual_orders.last().unwrap() as usize
    }

    fn peel(&self, k: usize, rng: &mut SampleRng, out: &mut Vec<u32>) {
        let mut rest = k;
        while rest > 0 {
            let target = rng.random::<f64>() * rest as f64 * self.h[rest];
            let mut acc = 0.0;
            let mut chosen = rest;
            for i in 1..=rest {
                acc += self.p[i] * self.h[rest - i];
                if target < acc {
                    chosen = i;
                    break;
                }
            }
            out.push(chosen as u32);
            rest -= chosen;
        }
    }
}

/// `Π_i p_i^{m_i} / (i^{m_i} m_i!)` for a cycle type given by its lengths.
fn type_weight(lengths: &[u32], p: &[f64]) -> f64 {
    let mut w = 1.0;
    let mut run = 0;
    for (j, &l) in lengths.iter().enumerate() {
        run = if j > 0 && lengths[j - 1] == l { run + 1 } else { 1 };
        w *= p[l as usize] / (l as f64 * run as f64);
    }
    w
}

/// Partitions of `k` as nonincreasing length lists.
fn partitions(k: usize) -> Vec<Vec<u32>> {
    fn rec(rest: u32, max: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rest == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=max.min(rest)).rev() {
            cur.push(part);
            rec(rest - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k as u32, k as u32, &mut Vec::new(), &mut out);
    out
}

fn partition_count(k: usize) -> usize {
    let mut ways = vec![0usize; k + 1];
    ways[0] = 1;
    for part in 1..=k {
        for s in part..=k {
            ways[s] = ways[s].saturating_add(ways[s - part]);
        }
    }
    ways[k]
}

/// Vose alias table with 64-bit thresholds: outcome `i` is kept when the
/// fractional part of `u·n` falls below `threshold[i]`.
fn alias_table(weights: &[f64]) -> (Vec<u64>, Vec<u32>) {
    let n = weights.len();
    let sum: f64 = weights.iter().sum();
    let mut scaled: Vec<f64> = weights.iter().map(|w| w * n as f64 / sum).collect();
    let mut alias: Vec<u32> = (0..n as u32).collect();
    let mut threshold = vec![u64::MAX; n];
    let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| scaled[i] < 1.0);
    while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
        threshold[s] = to_fraction(scaled[s]);
        alias[s] = l as u32;
        scaled[l] -= 1.0 - scaled[s];
        if scaled[l] < 1.0 {
            large.pop();
            small.push(l);
        }
    }
    // leftovers are 1 up to rounding
    for i in small.into_iter().chain(large) {
        threshold[i] = u64::MAX;
        alias[i] = i as u32;
    }
    (threshold, alias)
}

fn to_fraction(x: f64) -> u64 {
    if x <= 0.0 {
        0
    } else if x >= 1.0 {
        u64::MAX
    } else {
        (x * 18_446_744_073_709_551_616.0) as u64
    }
}
/// Result of an unconditioned run.
#[derive(Debug, Clone)]
pub enum BoltzmannOutcome {
    Tree(ColoredTree),
    /// The run was stopped once the size exceeded the budget.
    Aborted(usize),
}

#[derive(Debug, Clone)]
pub struct ExactSample {
    pub tree: ColoredTree,
    /// Attempts used, including the accepted one.
    pub attempts: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct SamplerBudget {
    pub max_size: usize,
    pub max_attempts: u64,
    pub rng_seed: u64,
}

enum Task {
    Build { exponent: u64, parent: u32, has_copy: bool },
    Copy { template: u32, times: u32 },
}

/// Shared, read-only sampler state for one degree set.
#[derive(Debug)]
pub struct Sampler {
    omega: DegreeSet,
    sing: SingularData,
    /// `tables[e]` for `1 <= e < tables.len()`; entry 0 is a placeholder.
    tables: Vec<ExponentTable>,
    admissible: Vec<bool>,
    copy_rule: CopyRule,
}

impl Sampler {
    pub fn new(omega: &DegreeSet, counts: &CountTable, sing: &SingularData) -> Result<Self> {
        Self::with_copy_rule(omega, counts, sing, CopyRule::Identical)
    }

    pub fn with_copy_rule(
        omega: &DegreeSet,
        counts: &CountTable,
        sing: &SingularData,
        copy_rule: CopyRule,
    ) -> Result<Self> {
        // exponents from `limit` on have A(ρ^e) below the negligible weight
        let limit = (NEGLIGIBLE_WEIGHT.ln() / sing.rho.ln()).ceil() as usize;
        let mut tables = Vec::with_capacity(limit);
        tables.push(ExponentTable::leaf_only());
        for e in 1..limit as u64 {
            tables.push(ExponentTable::build(omega, sing, e)?);
        }
        Ok(Self {
            omega: omega.clone(),
            sing: sing.clone(),
            tables,
            admissible: (0..=counts.order()).map(|n| counts.is_admissible(n)).collect(),
            copy_rule,
        })
    }

    pub fn omega(&self) -> &DegreeSet {
        &self.omega
    }

    pub fn singular_data(&self) -> &SingularData {
        &self.sing
    }

    /// Sizes beyond the count table are taken as admissible when they lie in
    /// the residue class `1 mod span`.
    pub fn is_admissible(&self, n: usize) -> bool {
        match self.admissible.get(n) {
            Some(&a) => a,
            None => n % self.omega.span() == 1 % self.omega.span(),
        }
    }

    /// Table for exponent `e`. Past the tables `A(ρ^e)` is negligible and a
    /// leaf-only table stands in, so every vertex consumes one draw.
    #[inline]
    fn table_for(&self, e: u64) -> &ExponentTable {
        self.tables.get(e as usize).unwrap_or(&self.tables[0])
    }

    /// Draws the cycle type of the children permutation at exponent `e`.
    pub fn sample_cycle_type(&self, e: u64, rng: &mut SampleRng) -> Result<CycleType> {
        if e == 0 {
            return Err(PolyaError::TableMissing(e));
        }
        let mut buf = Vec::new();
        Ok(CycleType::from_lengths(self.table_for(e).draw(rng, &mut buf)))
    }

    /// Size of one Boltzmann tree, or `Err(size so far)` once it must exceed
    /// `max_size`.
    ///
    /// Blue vertices all sit at exponent 1 with multiplicity 1, so pending
    /// blue vertices are just counted. Non-blue work is kept on a stack of
    /// `(exponent, multiplicity)` pairs and always drained first; the build
    /// pass follows the same order, so both consume the same draws.
    fn size_only(&self, max_size: usize, rng: &mut SampleRng, scratch: &mut Scratch) -> std::result::Result<usize, usize> {
        let Scratch { stack, buf } = scratch;
        stack.clear();
        let max = max_size as u64;
        let identical = self.copy_rule == CopyRule::Identical;
        let first = self.table_for(1);
        let mut blue = 1u64;
        let mut size = 0u64;
        // vertices owed by entries on the stack
        let mut owed = 0u64;
        loop {
            if let Some((e, mult)) = stack.pop() {
                owed -= mult as u64;
                size += mult as u64;
                for &l in self.table_for(e as u64).draw(rng, buf) {
                    // saturation only happens past any budget, which aborts below
                    let m = if identical { mult.saturating_mul(l) } else { mult };
                    owed += m as u64;
                    stack.push((e.saturating_mul(l), m));
                }
            } else if blue > 0 {
                blue -= 1;
                size += 1;
                let o = first.pick(rng);
                if o.long_count == 0 {
                    blue += o.fixed as u64;
                } else {
                    let lengths: &[u32] = if o.long_count == RESIDUAL {
                        first.draw_residual(rng, buf)
                    } else {
                        &first.lengths[o.start as usize..o.end as usize]
                    };
                    for &l in lengths {
                        if l == 1 {
                            blue += 1;
                        } else {
                            let m = if identical { l } else { 1 };
                            owed += m as u64;
                            stack.push((l, m));
                        }
                    }
                }
            } else {
                return Ok(size as usize);
            }
            if size + blue + owed > max {
                return Err(size.min(max + 1) as usize);
            }
        }
    }

    /// Replays a run from a saved generator state, building the tree.
    fn build(&self, rng: &mut SampleRng, expected: usize) -> ColoredTree {
        let mut parent: Vec<u32> = Vec::with_capacity(expected);
        let mut blue: Vec<bool> = Vec::with_capacity(expected);
        let mut copies = Vec::new();
        let identical = self.copy_rule == CopyRule::Identical;
        // parents of blue vertices still to be generated
        let mut blue_pending = vec![NO_PARENT];
        let mut stack: Vec<Task> = Vec::new();
        let mut buf = Vec::new();
        loop {
            if let Some(task) = stack.pop() {
                match task {
                    Task::Build {
                        exponent,
                        parent: p,
                        has_copy,
                    } => {
                        let v = parent.len() as u32;
                        parent.push(p);
                        blue.push(false);
                        if has_copy {
                            if let Some(Task::Copy { template, .. }) = stack.last_mut() {
                                *template = v;
                            }
                        }
                        for &l in self.table_for(exponent).draw(rng, &mut buf) {
                            push_build(&mut stack, exponent * l as u64, l, v, identical);
                        }
                    }
                    Task::Copy { template, times } => {
                        let start = template as usize;
                        let end = parent.len();
                        let len = end - start;
                        let root_parent = parent[start];
                        for _ in 0..times {
                            let base = parent.len();
                            parent.push(root_parent);
                            for i in start + 1..end {
                                let shifted = parent[i] as usize - start + base;
                                parent.push(shifted as u32);
                            }
                            blue.extend(std::iter::repeat_n(false, len));
                        }
                        copies.push(CopyGroup {
                            first_root: template,
                            len: len as u32,
                            count: times + 1,
                        });
                    }
                }
            } else if let Some(p) = blue_pending.pop() {
                let v = parent.len() as u32;
                parent.push(p);
                blue.push(true);
                for &l in self.table_for(1).draw(rng, &mut buf) {
                    if l == 1 {
                        blue_pending.push(v);
                    } else {
                        push_build(&mut stack, l as u64, l, v, identical);
                    }
                }
            } else {
                break;
            }
        }
        ColoredTree { parent, blue, copies }
    }

    /// One unconditioned Boltzmann tree, stopped once it exceeds `max_size`.
    pub fn sample_boltzmann(&self, max_size: usize, rng: &mut SampleRng) -> BoltzmannOutcome {
        let saved = rng.clone();
        match self.size_only(max_size, rng, &mut Scratch::default()) {
            Ok(size) => {
                let mut replay = saved;
                BoltzmannOutcome::Tree(self.build(&mut replay, size))
            }
            Err(size) => BoltzmannOutcome::Aborted(size),
        }
    }

    /// Size of an unconditioned run, capped at `max_size + 1`; cheaper than
    /// [`Self::sample_boltzmann`] when only the size law is needed.
    pub fn boltzmann_size(&self, max_size: usize, rng: &mut SampleRng, scratch: &mut Scratch) -> usize {
        self.size_only(max_size, rng, scratch)
            .unwrap_or(max_size + 1)
            .min(max_size + 1)
    }

    /// Uniform random tree of size `n` by rejection.
    pub fn sample_exact(&self, n: usize, max_attempts: u64, rng: &mut SampleRng) -> Result<ExactSample> {
        self.sample_range(n, n, max_attempts, rng)
    }

    /// Boltzmann tree conditioned on `|size - n| <= ε·n`. Within the window
    /// sizes keep their Boltzmann weights, so this is not uniform over sizes.
    pub fn sample_window(&self, n: usize, epsilon: f64, max_attempts: u64, rng: &mut SampleRng) -> Result<ExactSample> {
        let (lo, hi) = window_bounds(n, epsilon)?;
        self.sample_range(lo, hi, max_attempts, rng)
    }

    fn sample_range(&self, lo: usize, hi: usize, max_attempts: u64, rng: &mut SampleRng) -> Result<ExactSample> {
        if lo > hi || !(lo..=hi).any(|n| self.is_admissible(n)) {
            return Err(PolyaError::InadmissibleSize(lo));
        }
        let mut scratch = Scratch::default();
        for attempt in 1..=max_attempts {
            let saved = rng.clone();
            if let Ok(size) = self.size_only(hi, rng, &mut scratch) {
                if size >= lo {
                    let mut replay = saved;
                    let tree = self.build(&mut replay, size);
                    debug_assert_eq!(tree.size(), size);
                    return Ok(ExactSample { tree, attempts: attempt });
                }
            }
        }
        Err(PolyaError::AttemptsExhausted {
            attempts: max_attempts,
        })
    }
}

/// Reusable buffers for the size pass.
#[derive(Debug, Default)]
pub struct Scratch {
    stack: Vec<(u32, u32)>,
    buf: Vec<u32>,
}

/// Queues the subtree for a cycle of length `l` under `v`, plus its copies.
fn push_build(stack: &mut Vec<Task>, exponent: u64, l: u32, v: u32, identical: bool) {
    let copy = l > 1 && identical;
    if copy {
        stack.push(Task::Copy {
            template: NO_PARENT,
            times: l - 1,
        });
    }
    stack.push(Task::Build {
        exponent,
        parent: v,
        has_copy: copy,
    });
}

fn window_bounds(n: usize, epsilon: f64) -> Result<(usize, usize)> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(PolyaError::InvalidConfig(format!("window {epsilon} outside (0, 1)")));
    }
    let lo = (n as f64 * (1.0 - epsilon)).ceil() as usize;
    let hi = (n as f64 * (1.0 + epsilon)).floor() as usize;
    Ok((lo.max(1), hi))
}
