//! Information reconciliation and privacy amplification.
//!
//! Error correction is a Cascade-style protocol: block parities over
//! shuffled copies of the key, binary search inside mismatched blocks and
//! back-propagation of every corrected bit into the earlier passes. A few
//! random-subset confirmation rounds follow. Every parity Alice discloses
//! goes to the public log and is counted as leaked.
//!
//! Privacy amplification hashes the reconciled key with a seeded binary
//! Toeplitz matrix.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::bits::{hamming_distance, pack_words, to_hex};
use crate::error::{check_range, domain, Error, Result};
use crate::exec::Execution;
use crate::public_channel::{Message, PublicLog};
use crate::rng::SimRng;

/// Largest sifted error rate the error correction accepts.
pub const MAX_RECONCILABLE_ERROR: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeConfig {
    pub passes: u32,
    /// First-pass block size is `ceil(block_factor / e)`.
    pub block_factor: f64,
    pub confirm_rounds: u32,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        Self { passes: 4, block_factor: 0.73, confirm_rounds: 10 }
    }
}

impl CascadeConfig {
    pub fn initial_block(&self, estimated_error: f64, n: usize) -> usize {
        if estimated_error <= 0.0 {
            return n.max(1);
        }
        ((self.block_factor / estimated_error).ceil() as usize).clamp(1, n.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconciliationReport {
    pub n_sifted: usize,
    pub n_reconciled: usize,
    pub parity_bits_leaked: usize,
    /// Fraction of positions still differing after correction.
    pub residual_error: f64,
    pub passes: u32,
    pub corrected_bits: usize,
}

struct Pass {
    /// position in the shuffled order -> key index
    order: Vec<usize>,
    /// key index -> position
    position: Vec<usize>,
    block: usize,
    alice_parity: Vec<bool>,
    bob_parity: Vec<bool>,
}

impl Pass {
    fn block_range(&self, b: usize) -> (usize, usize) {
        let start = b * self.block;
        (start, (start + self.block).min(self.order.len()))
    }

    fn mismatched(&self, b: usize) -> bool {
        self.alice_parity[b] != self.bob_parity[b]
    }
}

struct Cascade<'a> {
    alice: &'a [bool],
    bob: Vec<bool>,
    passes: Vec<Pass>,
    log: &'a mut PublicLog,
    leaked: usize,
    corrected: usize,
}

impl Cascade<'_> {
    fn parity(key: &[bool], idx: impl Iterator<Item = usize>) -> bool {
        idx.fold(false, |acc, i| acc ^ key[i])
    }

    /// Alice reveals the parity of `[start, end)` in pass `p`.
    fn disclose(&mut self, p: usize, start: usize, end: usize) -> bool {
        let order = &self.passes[p].order;
        let value = Self::parity(self.alice, order[start..end].iter().copied());
        self.log.push(Message::Parity { pass: p as u32, start, end, value });
        self.leaked += 1;
        value
    }

    fn add_pass(&mut self, order: Vec<usize>, block: usize) {
        let n = order.len();
        let mut position = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            position[i] = pos;
        }
        let n_blocks = n.div_ceil(block);
        let bob_parity = (0..n_blocks)
            .map(|b| {
                let (s, e) = (b * block, ((b + 1) * block).min(n));
                Self::parity(&self.bob, order[s..e].iter().copied())
            })
            .collect();
        self.passes.push(Pass { order, position, block, alice_parity: vec![false; n_blocks], bob_parity });
        let p = self.passes.len() - 1;
        for b in 0..n_blocks {
            let (s, e) = self.passes[p].block_range(b);
            let v = self.disclose(p, s, e);
            self.passes[p].alice_parity[b] = v;
        }
    }

    /// Binary search for an error inside an odd-parity range of pass `p`.
    fn locate(&mut self, p: usize, mut start: usize, mut end: usize) -> usize {
        while end - start > 1 {
            let mid = start + (end - start) / 2;
            let alice = self.disclose(p, start, mid);
            let bob = Self::parity(&self.bob, self.passes[p].order[start..mid].iter().copied());
            if alice != bob {
                end = mid;
            } else {
                start = mid;
            }
        }
        self.passes[p].order[start]
    }

    /// Flips key bit `i` and queues every block whose parity now disagrees.
    fn flip(&mut self, i: usize, queue: &mut Vec<(usize, usize)>) {
        self.bob[i] = !self.bob[i];
        self.corrected += 1;
        for (p, pass) in self.passes.iter_mut().enumerate() {
            let b = pass.position[i] / pass.block;
            pass.bob_parity[b] = !pass.bob_parity[b];
            if pass.alice_parity[b] != pass.bob_parity[b] {
                queue.push((p, b));
            }
        }
    }

    fn drain(&mut self, mut queue: Vec<(usize, usize)>) {
        while let Some((p, b)) = pop_smallest_pass(&mut queue) {
            if !self.passes[p].mismatched(b) {
                continue;
            }
            let (s, e) = self.passes[p].block_range(b);
            let i = self.locate(p, s, e);
            self.flip(i, &mut queue);
        }
    }

    fn run_pass(&mut self, order: Vec<usize>, block: usize) {
        self.add_pass(order, block);
        let p = self.passes.len() - 1;
        let queue: Vec<(usize, usize)> =
            (0..self.passes[p].alice_parity.len()).filter(|&b| self.passes[p].mismatched(b)).map(|b| (p, b)).collect();
        self.drain(queue);
    }

    /// Random-subset parity check; bisects the subset on a mismatch.
    fn confirm(&mut self, round: u32, seed: u64) {
        let mut rng = SimRng::seed_from_u64(seed);
        let subset: Vec<usize> = (0..self.bob.len()).filter(|_| rng.random::<bool>()).collect();
        let alice = Self::parity(self.alice, subset.iter().copied());
        self.log.push(Message::SubsetParity { round, seed, value: alice });
        self.leaked += 1;
        if alice == Self::parity(&self.bob, subset.iter().copied()) {
            return;
        }
        let (mut s, mut e) = (0, subset.len());
        while e - s > 1 {
            let mid = s + (e - s) / 2;
            let a = Self::parity(self.alice, subset[s..mid].iter().copied());
            self.log.push(Message::SubsetParity { round, seed, value: a });
            self.leaked += 1;
            if a != Self::parity(&self.bob, subset[s..mid].iter().copied()) {
                e = mid;
            } else {
                s = mid;
            }
        }
        let mut queue = Vec::new();
        self.flip(subset[s], &mut queue);
        self.drain(queue);
    }
}

fn pop_smallest_pass(queue: &mut Vec<(usize, usize)>) -> Option<(usize, usize)> {
    let (at, _) = queue.iter().enumerate().min_by_key(|(_, &(p, _))| p)?;
    Some(queue.swap_remove(at))
}

/// Makes Bob's key equal to Alice's over the public channel.
///
/// Aborts when `estimated_error` exceeds [`MAX_RECONCILABLE_ERROR`]. The
/// returned pair is `(alice, bob)`; Alice's key is never modified.
pub fn error_correct<R: Rng + ?Sized>(
    alice: &[bool],
    bob: &[bool],
    estimated_error: f64,
    cfg: &CascadeConfig,
    log: &mut PublicLog,
    rng: &mut R,
) -> Result<(Vec<bool>, Vec<bool>, ReconciliationReport)> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch { alice: alice.len(), bob: bob.len() });
    }
    check_range("estimated_error", estimated_error, 0.0, 1.0)?;
    if estimated_error > MAX_RECONCILABLE_ERROR {
        return Err(Error::ReconciliationInfeasible { estimated: estimated_error, bound: MAX_RECONCILABLE_ERROR });
    }
    let n = alice.len();
    let mut c = Cascade { alice, bob: bob.to_vec(), passes: Vec::new(), log, leaked: 0, corrected: 0 };
    if n > 0 {
        let k1 = cfg.initial_block(estimated_error, n);
        for p in 0..cfg.passes {
            let mut order: Vec<usize> = (0..n).collect();
            if p > 0 {
                let seed: u64 = rng.random();
                c.log.push(Message::ShuffleSeed { pass: p, seed });
                order.shuffle(&mut SimRng::seed_from_u64(seed));
            }
            let block = k1.saturating_mul(1 << p.min(40)).min(n);
            c.run_pass(order, block);
        }
        for round in 0..cfg.confirm_rounds {
            let seed: u64 = rng.random();
            c.confirm(round, seed);
        }
    }
    let residual = if n == 0 { 0.0 } else { hamming_distance(alice, &c.bob) as f64 / n as f64 };
    let report = ReconciliationReport {
        n_sifted: n,
        n_reconciled: n,
        parity_bits_leaked: c.leaked,
        residual_error: residual,
        passes: cfg.passes,
        corrected_bits: c.corrected,
    };
    Ok((alice.to_vec(), c.bob, report))
}

/// `sum p^2` over a normalized distribution.
pub fn collision_probability(dist: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    let mut sq = 0.0;
    for &p in dist {
        check_range("p", p, 0.0, 1.0)?;
        total += p;
        sq += p * p;
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(domain("sum p", total));
    }
    Ok(sq)
}

/// Upper bound on Eve's Shannon information about the final key after
/// sacrificing `n_s` safety bits: `2^-n_s / ln 2`.
pub fn eve_information_bound(n_s: u32) -> f64 {
    (-(n_s as f64)).exp2() / std::f64::consts::LN_2
}

/// Length bookkeeping for privacy amplification.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplificationParams {
    /// Fraction of the reconciled key retained before the deductions.
    pub tau: f64,
    pub safety_bits_ns: usize,
    /// Parity bits disclosed during error correction.
    pub parity_leak: usize,
    pub n_rec: usize,
}

impl AmplificationParams {
    pub fn new(tau: f64, safety_bits_ns: usize, parity_leak: usize, n_rec: usize) -> Result<Self> {
        check_range("tau", tau, 0.0, 1.0)?;
        Ok(Self { tau, safety_bits_ns, parity_leak, n_rec })
    }

    /// `floor(tau * n_rec) - n_S - leak`; may be negative.
    pub fn final_length(&self) -> i64 {
        (self.tau * self.n_rec as f64).floor() as i64 - self.safety_bits_ns as i64 - self.parity_leak as i64
    }
}

/// Binary Toeplitz matrix `T[i][j] = s[i - j + n - 1]`, `m x n`, defined
/// by `n + m - 1` seed bits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToeplitzHash {
    input_len: usize,
    output_len: usize,
    seed_bits: Vec<bool>,
    /// packed seed with one spare zero word
    seed_words: Vec<u64>,
}

impl ToeplitzHash {
    pub fn from_seed_bits(input_len: usize, output_len: usize, seed_bits: Vec<bool>) -> Result<Self> {
        if input_len == 0 || output_len == 0 || seed_bits.len() != input_len + output_len - 1 {
            return Err(Error::Config(format!(
                "toeplitz seed must hold n + m - 1 bits (n={input_len}, m={output_len}, got {})",
                seed_bits.len()
            )));
        }
        let mut seed_words = pack_words(&seed_bits);
        seed_words.push(0);
        Ok(Self { input_len, output_len, seed_bits, seed_words })
    }

    pub fn random<R: Rng + ?Sized>(input_len: usize, output_len: usize, rng: &mut R) -> Result<Self> {
        let len = (input_len + output_len).saturating_sub(1);
        let seed_bits = (0..len).map(|_| rng.random::<bool>()).collect();
        Self::from_seed_bits(input_len, output_len, seed_bits)
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn output_len(&self) -> usize {
        self.output_len
    }

    pub fn seed_hex(&self) -> String {
        to_hex(&self.seed_bits)
    }

    fn window(&self, pos: usize) -> u64 {
        let (w, off) = (pos / 64, pos % 64);
        if off == 0 {
            self.seed_words[w]
        } else {
            (self.seed_words[w] >> off) | (self.seed_words[w + 1] << (64 - off))
        }
    }

    /// `y = T x` over GF(2).
    pub fn apply(&self, input: &[bool], exec: Execution) -> Result<Vec<bool>> {
        if input.len() != self.input_len {
            return Err(Error::LengthMismatch { alice: self.input_len, bob: input.len() });
        }
        // y_i = XOR_k s[i + k] x[n - 1 - k]
        let reversed: Vec<bool> = input.iter().rev().copied().collect();
        let x = pack_words(&reversed);
        const ROWS: usize = 256;
        let blocks = exec.map_indexed(self.output_len.div_ceil(ROWS), |blk| {
            let rows = blk * ROWS..((blk + 1) * ROWS).min(self.output_len);
            rows.map(|i| {
                let mut acc = 0u64;
                for (w, &xw) in x.iter().enumerate() {
                    acc ^= self.window(i + 64 * w) & xw;
                }
                acc.count_ones() & 1 == 1
            })
            .collect::<Vec<bool>>()
        });
        Ok(blocks.concat())
    }
}

/// Hashes a reconciled key down to `params.final_length()` bits.
pub fn privacy_amplify(key: &[bool], params: &AmplificationParams, hash: &ToeplitzHash, exec: Execution) -> Result<Vec<bool>> {
    let len = params.final_length();
    if len < 1 {
        return Err(Error::NoSecureKey { final_length: len });
    }
    if hash.output_len() != len as usize || hash.input_len() != key.len() {
        return Err(Error::Config("hash dimensions do not match the amplification plan".into()));
    }
    hash.apply(key, exec)
}
