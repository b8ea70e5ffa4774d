//! Frequency-based Huffman tree for the hierarchical softmax.

use crate::error::{Error, Result};

/// Root-to-leaf paths of every word through the `V - 1` internal nodes.
///
/// `sign` is `+1` when the path continues into the left child of a node and
/// `-1` for the right child.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HuffmanCode {
    offsets: Vec<usize>,
    nodes: Vec<u32>,
    signs: Vec<i8>,
}

/// Borrowed path of a single word.
#[derive(Clone, Copy, Debug)]
pub struct Path<'a> {
    pub nodes: &'a [u32],
    pub signs: &'a [i8],
}

impl Path<'_> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, i8)> + '_ {
        self.nodes.iter().copied().zip(self.signs.iter().copied())
    }
}

#[derive(Clone, Copy)]
struct Item {
    weight: u64,
    /// Leaves are created first (0..V), internal nodes follow (V..2V-1).
    created: usize,
}

impl HuffmanCode {
    /// Build the code with the two-queue construction. Nodes are ordered by
    /// `(weight, creation order)`; of two merged nodes the earlier-created one
    /// becomes the left child.
    pub fn build(freqs: &[u64]) -> Result<Self> {
        let v = freqs.len();
        if v < 2 {
            return Err(Error::VocabularyTooSmall(v));
        }
        if let Some(w) = freqs.iter().position(|&f| f == 0) {
            return Err(Error::ZeroFrequency(w));
        }

        let mut leaves: Vec<Item> = freqs
            .iter()
            .enumerate()
            .map(|(created, &weight)| Item { weight, created })
            .collect();
        leaves.sort_by_key(|it| (it.weight, it.created));

        // children[j] = (left, right) creation indices of internal node j
        let mut children: Vec<(usize, usize)> = Vec::with_capacity(v - 1);
        let mut internal: Vec<Item> = Vec::with_capacity(v - 1);
        let (mut li, mut ii) = (0usize, 0usize);

        let pop = |internal: &Vec<Item>, li: &mut usize, ii: &mut usize| -> Item {
            let take_leaf = match (leaves.get(*li), internal.get(*ii)) {
                (Some(l), Some(n)) => (l.weight, l.created) <= (n.weight, n.created),
                (Some(_), None) => true,
                (None, _) => false,
            };
            if take_leaf {
                *li += 1;
                leaves[*li - 1]
            } else {
                *ii += 1;
                internal[*ii - 1]
            }
        };

        for j in 0..v - 1 {
            let a = pop(&internal, &mut li, &mut ii);
            let b = pop(&internal, &mut li, &mut ii);
            let (left, right) = if a.created < b.created { (a, b) } else { (b, a) };
            children.push((left.created, right.created));
            internal.push(Item {
                weight: a.weight + b.weight,
                created: v + j,
            });
        }

        // Walk down from the root (internal node v - 2), recording paths.
        let mut paths: Vec<(Vec<u32>, Vec<i8>)> = vec![(Vec::new(), Vec::new()); v];
        let mut stack: Vec<(usize, Vec<u32>, Vec<i8>)> = vec![(v - 2, Vec::new(), Vec::new())];
        while let Some((node, nodes, signs)) = stack.pop() {
            let (l, r) = children[node];
            for (child, sign) in [(l, 1i8), (r, -1i8)] {
                let mut n = nodes.clone();
                let mut s = signs.clone();
                n.push(node as u32);
                s.push(sign);
                if child < v {
                    paths[child] = (n, s);
                } else {
                    stack.push((child - v, n, s));
                }
            }
        }

        let mut code = HuffmanCode {
            offsets: Vec::with_capacity(v + 1),
            nodes: Vec::new(),
            signs: Vec::new(),
        };
        code.offsets.push(0);
        for (n, s) in paths {
            code.nodes.extend(n);
            code.signs.extend(s);
            code.offsets.push(code.nodes.len());
        }
        Ok(code)
    }

    /// Reassemble a code from per-word `(nodes, signs)` paths, validating
    /// shape only (lengths and node-id range).
    pub fn from_paths(paths: Vec<(Vec<u32>, Vec<i8>)>) -> Result<Self> {
        let v = paths.len();
        let mut code = HuffmanCode {
            offsets: vec![0],
            nodes: Vec::new(),
            signs: Vec::new(),
        };
        for (w, (n, s)) in paths.into_iter().enumerate() {
            if n.len() != s.len() || (v >= 2 && n.is_empty()) {
                return Err(Error::CorruptModel(format!("bad code path for word {w}")));
            }
            if n.iter().any(|&id| id as usize + 1 >= v.max(1)) || s.iter().any(|&x| x != 1 && x != -1) {
                return Err(Error::CorruptModel(format!("bad code entries for word {w}")));
            }
            code.nodes.extend(n);
            code.signs.extend(s);
            code.offsets.push(code.nodes.len());
        }
        Ok(code)
    }

    /// Number of leaves (words).
    pub fn num_words(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of internal nodes, `V - 1`.
    pub fn num_nodes(&self) -> usize {
        self.num_words().saturating_sub(1)
    }

    #[inline]
    pub fn path(&self, word: u32) -> Path<'_> {
        let w = word as usize;
        let range = self.offsets[w]..self.offsets[w + 1];
        Path {
            nodes: &self.nodes[range.clone()],
            signs: &self.signs[range],
        }
    }

    pub fn max_len(&self) -> usize {
        self.offsets.windows(2).map(|o| o[1] - o[0]).max().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lengths(code: &HuffmanCode) -> Vec<usize> {
        (0..code.num_words() as u32).map(|w| code.path(w).len()).collect()
    }

    fn kraft_is_one(code: &HuffmanCode) -> bool {
        // Exact in integer arithmetic: Σ 2^(max - len) == 2^max
        let max = code.max_len();
        let total: u128 = lengths(code).iter().map(|&l| 1u128 << (max - l)).sum();
        total == 1u128 << max
    }

    fn prefix_free(code: &HuffmanCode) -> bool {
        let v = code.num_words() as u32;
        for a in 0..v {
            for b in 0..v {
                if a == b {
                    continue;
                }
                let (pa, pb) = (code.path(a), code.path(b));
                if pa.len() <= pb.len() && pa.signs == &pb.signs[..pa.len()] && pa.nodes == &pb.nodes[..pa.len()] {
                    return false;
                }
            }
        }
        true
    }

    /// Minimal Σ f·len over every length assignment satisfying Kraft's
    /// inequality (exactly the set of lengths realizable by prefix codes).
    fn brute_force_optimal_cost(freqs: &[u64]) -> u64 {
        let v = freqs.len();
        let max_len = v - 1;
        let mut best = u64::MAX;
        let mut lens = vec![1usize; v];
        loop {
            let kraft: u128 = lens.iter().map(|&l| 1u128 << (max_len - l)).sum();
            if kraft <= 1u128 << max_len {
                let cost = freqs.iter().zip(&lens).map(|(&f, &l)| f * l as u64).sum();
                best = best.min(cost);
            }
            let mut i = 0;
            loop {
                if i == v {
                    return best;
                }
                lens[i] += 1;
                if lens[i] <= max_len {
                    break;
                }
                lens[i] = 1;
                i += 1;
            }
        }
    }

    #[test]
    fn two_words_share_the_root() {
        let code = HuffmanCode::build(&[7, 3]).unwrap();
        assert_eq!(code.num_nodes(), 1);
        for w in 0..2 {
            assert_eq!(code.path(w).nodes, &[0]);
        }
        assert_ne!(code.path(0).signs, code.path(1).signs);
    }

    #[test]
    fn three_words_frequent_is_shortest() {
        let code = HuffmanCode::build(&[4, 1, 1]).unwrap();
        assert_eq!(lengths(&code), vec![1, 2, 2]);
        assert_eq!(brute_force_optimal_cost(&[4, 1, 1]), 4 + 2 + 2);
    }

    #[test]
    fn rejects_degenerate_input() {
        assert!(matches!(HuffmanCode::build(&[5]), Err(Error::VocabularyTooSmall(1))));
        assert!(matches!(HuffmanCode::build(&[]), Err(Error::VocabularyTooSmall(0))));
        assert!(matches!(HuffmanCode::build(&[5, 0, 1]), Err(Error::ZeroFrequency(1))));
    }

    #[test]
    fn node_ids_are_dense() {
        let code = HuffmanCode::build(&[10, 9, 8, 5, 3, 3, 1]).unwrap();
        let mut seen = vec![false; code.num_nodes()];
        for w in 0..code.num_words() as u32 {
            for (n, _) in code.path(w).iter() {
                seen[n as usize] = true;
            }
            // every path starts at the root
            assert_eq!(code.path(w).nodes[0] as usize, code.num_nodes() - 1);
        }
        assert!(seen.iter().all(|&s| s));
    }

    proptest! {
        #[test]
        fn optimal_for_small_vocabularies(freqs in proptest::collection::vec(1u64..40, 2..=6)) {
            let code = HuffmanCode::build(&freqs).unwrap();
            let cost: u64 = freqs.iter().zip(lengths(&code)).map(|(&f, l)| f * l as u64).sum();
            prop_assert_eq!(cost, brute_force_optimal_cost(&freqs));
        }

        #[test]
        fn structural_invariants(freqs in proptest::collection::vec(1u64..1000, 2..80)) {
            let code = HuffmanCode::build(&freqs).unwrap();
            prop_assert_eq!(code.num_nodes(), freqs.len() - 1);
            prop_assert!(kraft_is_one(&code));
            prop_assert!(prefix_free(&code));
            for w in 0..freqs.len() as u32 {
                let p = code.path(w);
                prop_assert!(!p.is_empty());
                prop_assert_eq!(p.nodes.len(), p.signs.len());
                prop_assert!(p.nodes.iter().all(|&n| (n as usize) < freqs.len() - 1));
            }
            prop_assert_eq!(HuffmanCode::build(&freqs).unwrap(), code);
        }
    }
}
