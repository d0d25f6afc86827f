use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::ForgeError;
use crate::numrange::ConvexRegion;

/// Slack allowed when comparing accumulated weights against a block target.
const WEIGHT_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PartitionKind {
    /// `n ↦ n mod modulus`; `r0` is the selected class.
    Residue { modulus: usize, r0: usize },
    /// Consecutive blocks of weight at least `block_target`, dealt round-robin over a growing
    /// set of classes.
    GreedyBlocks { block_target: f64 },
    /// `n ↦ ν₂(n)`, the exponent of 2 in `n`.
    Dyadic,
}

/// A maximal run of indices sent to one class.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub m: usize,
    pub indices: Vec<usize>,
    pub weight: f64,
    /// False only for a trailing block cut off by the horizon.
    pub complete: bool,
}

/// Disjoint classes `A_m` over a finite index set, with `m(n)` lookup.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionScheme {
    pub kind: PartitionKind,
    assignment: BTreeMap<usize, usize>,
    pub blocks: Vec<Block>,
}

impl PartitionScheme {
    /// Residue classes mod `modulus` over `1..=horizon`, with `r0` recorded as the selected class.
    pub fn residue(modulus: usize, r0: usize, horizon: usize) -> Self {
        let modulus = modulus.max(1);
        Self {
            kind: PartitionKind::Residue { modulus, r0 },
            assignment: (1..=horizon).map(|n| (n, n % modulus)).collect(),
            blocks: Vec::new(),
        }
    }

    /// Greedy blocks over `(index, weight)` pairs in the given order.
    ///
    /// Block `b` goes to the next class of the current round; rounds run over `1..=M` and `M`
    /// grows by one after each full round, so every class receives infinitely many blocks in the
    /// limit and block `b` never goes to a class above `b`.
    pub fn greedy_blocks(items: impl IntoIterator<Item = (usize, f64)>, block_target: f64) -> Self {
        let mut blocks: Vec<Block> = Vec::new();
        let (mut round_size, mut cursor) = (1usize, 1usize);
        let mut current = Block {
            m: 1,
            indices: Vec::new(),
            weight: 0.0,
            complete: false,
        };
        for (n, w) in items {
            current.indices.push(n);
            current.weight += w;
            if current.weight >= block_target - WEIGHT_SLACK {
                current.complete = true;
                if cursor == round_size {
                    round_size += 1;
                    cursor = 1;
                } else {
                    cursor += 1;
                }
                let next = Block {
                    m: cursor,
                    indices: Vec::new(),
                    weight: 0.0,
                    complete: false,
                };
                blocks.push(std::mem::replace(&mut current, next));
            }
        }
        if !current.indices.is_empty() {
            blocks.push(current);
        }
        let assignment = blocks
            .iter()
            .flat_map(|b| b.indices.iter().map(move |&n| (n, b.m)))
            .collect();
        Self {
            kind: PartitionKind::GreedyBlocks { block_target },
            assignment,
            blocks,
        }
    }

    /// The dyadic partition of `1..=horizon`.
    pub fn dyadic(horizon: usize) -> Self {
        Self {
            kind: PartitionKind::Dyadic,
            assignment: (1..=horizon).map(|n| (n, dyadic_class(n))).collect(),
            blocks: Vec::new(),
        }
    }

    /// `m(n)`, if `n` lies in the partitioned set.
    pub fn m(&self, n: usize) -> Option<usize> {
        self.assignment.get(&n).copied()
    }

    /// The members of `A_m` in increasing order.
    pub fn members(&self, m: usize) -> Vec<usize> {
        self.assignment
            .iter()
            .filter(|(_, &c)| c == m)
            .map(|(&n, _)| n)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

/// The exponent of 2 in `n ≥ 1`, so `n = 2^m (2k − 1)`.
pub fn dyadic_class(n: usize) -> usize {
    n.trailing_zeros() as usize
}

/// Residue `r ∈ {0, …, K}` maximizing `Σ depth(λₙ)` over `n ≤ len, n ≡ r mod (K+1)`.
///
/// `lambdas[i]` is `λ_{i+1}`. Depth is the distance to the boundary for interior points and 0
/// otherwise. Ties go to the smallest `r`.
pub fn select_residue_class(lambdas: &[Complex64], region: &ConvexRegion, k: usize) -> usize {
    let modulus = k + 1;
    let mut sums = vec![0.0f64; modulus];
    for (i, &l) in lambdas.iter().enumerate() {
        sums[(i + 1) % modulus] += region.interior_depth(l);
    }
    let mut best = 0;
    for r in 1..modulus {
        if sums[r] > sums[best] {
            best = r;
        }
    }
    best
}

/// One block `n_{k−1}+1 ..= n_k` of the sparsification, indices inclusive.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoneBlock {
    pub k: usize,
    pub start: usize,
    pub end: usize,
    pub sum: f64,
}

/// Output of [`sparsify_weights`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sparsified {
    /// `a′ₙ` for every `n` in the prefix, `values[i] = a′_{i+1}`.
    pub values: Vec<f64>,
    pub blocks: Vec<LoneBlock>,
    /// The block still open when the prefix ran out; its `a′` values are already in `values`.
    pub remainder: Option<LoneBlock>,
}

impl Sparsified {
    /// `a′ₙ / aₙ`, constant on each block.
    pub fn ratio(&self, a: &[f64], n: usize) -> f64 {
        self.values[n - 1] / a[n - 1]
    }
}

/// Splits the prefix into blocks with `Σ aₙ ≥ k` and sets `a′ₙ = min{1, aₙ/k}` on block `k`.
pub fn sparsify_weights(a: &[f64]) -> Result<Sparsified, ForgeError> {
    if let Some((i, x)) = a.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x > 0.0)) {
        return Err(ForgeError::InvalidParameters(format!(
            "weights must be positive and finite, a_{} = {x}",
            i + 1
        )));
    }
    let mut values = Vec::with_capacity(a.len());
    let mut blocks = Vec::new();
    let (mut k, mut start, mut sum) = (1usize, 1usize, 0.0f64);
    for (i, &x) in a.iter().enumerate() {
        let n = i + 1;
        values.push((x / k as f64).min(1.0));
        sum += x;
        if sum >= k as f64 * (1.0 - WEIGHT_SLACK) {
            blocks.push(LoneBlock { k, start, end: n, sum });
            k += 1;
            start = n + 1;
            sum = 0.0;
        }
    }
    let remainder = (start <= a.len()).then_some(LoneBlock {
        k,
        start,
        end: a.len(),
        sum,
    });
    Ok(Sparsified {
        values,
        blocks,
        remainder,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparsify_constant_weights() {
        let s = sparsify_weights(&[1.0; 7]).unwrap();
        assert_eq!(
            s.blocks.iter().map(|b| (b.start, b.end)).collect::<Vec<_>>(),
            vec![(1, 1), (2, 3), (4, 6)]
        );
        assert_eq!(s.values[0], 1.0);
        assert_eq!(&s.values[1..3], &[0.5, 0.5]);
        assert!(s.values[3..6].iter().all(|&v| (v - 1.0 / 3.0).abs() < 1e-16));
        let rem = s.remainder.unwrap();
        assert_eq!((rem.k, rem.start, rem.end), (4, 7, 7));
    }

    #[test]
    fn sparsify_harmonic_weights() {
        let a: Vec<f64> = (1..=20).map(|n| 1.0 / n as f64).collect();
        let s = sparsify_weights(&a).unwrap();
        assert_eq!((s.blocks[0].start, s.blocks[0].end), (1, 1));
        assert_eq!(s.values[0], 1.0);
        // 1/2 + … + 1/11 is the first tail sum reaching 2
        assert_eq!((s.blocks[1].start, s.blocks[1].end), (2, 11));
    }

    #[test]
    fn sparsify_rejects_nonpositive() {
        assert!(sparsify_weights(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn residue_selection() {
        let disk = ConvexRegion::disk(Complex64::new(0.0, 0.0), 1.0);
        let zeros = vec![Complex64::new(0.0, 0.0); 9];
        assert_eq!(select_residue_class(&zeros, &disk, 2), 0);
        // interior only at even n
        let alt: Vec<Complex64> = (1..=10)
            .map(|n| Complex64::new(if n % 2 == 0 { 0.0 } else { 2.0 }, 0.0))
            .collect();
        assert_eq!(select_residue_class(&alt, &disk, 1), 0);
        let h: Vec<Complex64> = (1..=10).map(|n| Complex64::new(1.0 - 1.0 / n as f64, 0.0)).collect();
        assert_eq!(select_residue_class(&h, &disk, 0), 0);
    }

    #[test]
    fn greedy_round_robin() {
        let p = PartitionScheme::greedy_blocks((1..=12).map(|n| (n, 1.0)), 1.0);
        let ms: Vec<usize> = (1..=12).map(|n| p.m(n).unwrap()).collect();
        assert_eq!(ms, vec![1, 1, 2, 1, 2, 3, 1, 2, 3, 4, 1, 2]);
        assert!((1..=12).all(|n| p.m(n).unwrap() <= n));
        assert_eq!(p.members(2), vec![3, 5, 8, 12]);
    }

    #[test]
    fn greedy_blocks_reach_target() {
        let items: Vec<(usize, f64)> = (1..=40).map(|n| (n, 0.3)).collect();
        let p = PartitionScheme::greedy_blocks(items, 1.0);
        for b in p.blocks.iter().filter(|b| b.complete) {
            assert!(b.weight >= 1.0 - 1e-12);
            assert_eq!(b.indices.len(), 4);
        }
        assert_eq!(p.len(), 40);
    }

    #[test]
    fn dyadic_valuation() {
        assert_eq!(dyadic_class(1), 0);
        assert_eq!(dyadic_class(12), 2);
        let p = PartitionScheme::dyadic(16);
        assert_eq!(p.members(3), vec![8]);
        assert_eq!(p.m(16), Some(4));
    }
}
