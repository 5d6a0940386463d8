//! Cascade morphology encoding: depth-first traversal to a binary code, and
//! its run-length form.
//!
//! The traversal starts at the root and visits outgoing edges in increasing
//! `(timestamp, dst)` order, skipping already-visited nodes, which yields a
//! unique spanning tree. Each tree edge emits `1` going down and `0` coming
//! back up, so a cascade with `n` nodes encodes to `2(n-1)` bits forming a
//! Dyck path.

use std::fmt;
use std::str::FromStr;

use crate::cascade::{CascadeEdge, CascadeGraph};
use crate::error::{Error, Result};

/// A balanced binary traversal code (Dyck path over `{1, 0}`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryCode {
    bits: Vec<bool>,
}

impl BinaryCode {
    /// Validates the Dyck invariants: every prefix sum of `I(bit)` (with
    /// `I(1) = +1`, `I(0) = -1`) is nonnegative and the total is zero.
    pub fn from_bits(bits: Vec<bool>) -> Result<Self> {
        let mut height: i64 = 0;
        for &b in &bits {
            height += if b { 1 } else { -1 };
            if height < 0 {
                return Err(Error::UnbalancedTraversal);
            }
        }
        if height != 0 {
            return Err(Error::UnbalancedTraversal);
        }
        Ok(Self { bits })
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }
}

impl fmt::Display for BinaryCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BinaryCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '1' => Ok(true),
                '0' => Ok(false),
                _ => Err(Error::Data(format!("invalid code character {c:?}"))),
            })
            .collect::<Result<Vec<bool>>>()?;
        Self::from_bits(bits)
    }
}

/// Run-length form of a [`BinaryCode`]: lengths of maximal runs, starting
/// with a 1-run. This is the symbol sequence the Markov model operates on.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct RunLengthSequence {
    runs: Vec<u32>,
}

impl RunLengthSequence {
    pub fn new(runs: Vec<u32>) -> Result<Self> {
        if let Some(&z) = runs.iter().find(|&&r| r == 0) {
            return Err(Error::MalformedRun(z as i64));
        }
        Ok(Self { runs })
    }

    pub fn runs(&self) -> &[u32] {
        &self.runs
    }

    pub fn len(&self) -> usize {
        self.runs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.runs.is_empty()
    }
}

impl fmt::Display for RunLengthSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for r in &self.runs {
            if !first {
                f.write_str(",")?;
            }
            write!(f, "{r}")?;
            first = false;
        }
        Ok(())
    }
}

/// Encodes the unique spanning-tree traversal of a cascade.
///
/// Non-tree edges (to already-visited nodes) are skipped, so the code length
/// is `2(node_count - 1)`. A root-only cascade encodes to the empty code.
pub fn dfs_encode(c: &CascadeGraph) -> Result<BinaryCode> {
    let mut visited: std::collections::HashSet<&str> = std::collections::HashSet::new();
    visited.insert(c.root());
    let mut bits: Vec<bool> = Vec::with_capacity(2 * c.node_count().saturating_sub(1));
    // Stack of (children in visit order, next index).
    let mut stack: Vec<(Vec<&CascadeEdge>, usize)> = vec![(c.out_edges(c.root()), 0)];
    while let Some((children, idx)) = stack.last_mut() {
        let mut advanced = false;
        while *idx < children.len() {
            let edge = children[*idx];
            *idx += 1;
            if visited.insert(&edge.dst) {
                bits.push(true);
                let next = c.out_edges(&edge.dst);
                stack.push((next, 0));
                advanced = true;
                break;
            }
        }
        if !advanced {
            stack.pop();
            if !stack.is_empty() {
                bits.push(false);
            }
        }
    }
    if visited.len() != c.node_count() {
        let missing = c
            .nodes()
            .iter()
            .find(|n| !visited.contains(n.as_str()))
            .cloned()
            .unwrap_or_default();
        return Err(Error::UnreachableNode(missing));
    }
    BinaryCode::from_bits(bits)
}

/// Replaces each maximal run with its length.
pub fn rle_encode(code: &BinaryCode) -> RunLengthSequence {
    let mut runs: Vec<u32> = Vec::new();
    let mut iter = code.bits().iter();
    let Some(&first) = iter.next() else {
        return RunLengthSequence::default();
    };
    let mut cur = first;
    let mut len = 1u32;
    for &b in iter {
        if b == cur {
            len += 1;
        } else {
            runs.push(len);
            cur = b;
            len = 1;
        }
    }
    runs.push(len);
    RunLengthSequence { runs }
}

/// Expands run lengths back into the binary code; inverse of [`rle_encode`]
/// under the starts-with-1 convention.
pub fn rle_decode(seq: &RunLengthSequence) -> Result<BinaryCode> {
    let mut bits = Vec::new();
    let mut value = true;
    for &r in seq.runs() {
        if r == 0 {
            return Err(Error::MalformedRun(0));
        }
        bits.extend(std::iter::repeat(value).take(r as usize));
        value = !value;
    }
    BinaryCode::from_bits(bits)
}

/// Rebuilds the spanning-tree shape of a code with anonymous nodes and
/// synthetic increasing timestamps, such that `dfs_encode(decode_tree(b)) == b`.
pub fn decode_tree(code: &BinaryCode) -> CascadeGraph {
    let width = (code.len() / 2 + 1).to_string().len();
    let name = |i: usize| format!("n{i:0w$}", w = width);
    let mut nodes = vec![name(0)];
    let mut edges = Vec::new();
    let mut stack: Vec<usize> = vec![0];
    for &b in code.bits() {
        if b {
            let id = nodes.len();
            nodes.push(name(id));
            edges.push(CascadeEdge {
                ts: id as i64,
                src: name(*stack.last().expect("valid code keeps root on stack")),
                dst: name(id),
            });
            stack.push(id);
        } else {
            stack.pop();
        }
    }
    CascadeGraph::from_parts(name(0), nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::toy_cascade;
    use proptest::prelude::*;

    fn code(s: &str) -> BinaryCode {
        s.parse().unwrap()
    }

    #[test]
    fn trivial_codes() {
        let c = toy_cascade();
        let single = c.truncate(1);
        assert_eq!(dfs_encode(&single).unwrap().to_string(), "10");

        // Chain A->B->C and star A->{B,C,D} via decode fixtures.
        assert_eq!(dfs_encode(&decode_tree(&code("1100"))).unwrap().to_string(), "1100");
        assert_eq!(
            dfs_encode(&decode_tree(&code("101010"))).unwrap().to_string(),
            "101010"
        );
    }

    #[test]
    fn toy_cascade_code() {
        // DFS with (timestamp, dst) child order on the toy cascade.
        let c = toy_cascade();
        let b = dfs_encode(&c).unwrap();
        assert_eq!(b.to_string(), "11100100");
        assert_eq!(b.len(), 2 * (c.node_count() - 1));
        assert_eq!(rle_encode(&b).runs(), &[3, 2, 1, 2]);
    }

    #[test]
    fn root_only_is_empty_code() {
        let c = toy_cascade().truncate(0);
        let b = dfs_encode(&c).unwrap();
        assert!(b.is_empty());
        assert!(rle_encode(&b).is_empty());
    }

    #[test]
    fn rle_known_example() {
        assert_eq!(rle_encode(&code("11011000")).runs(), &[2, 1, 2, 3]);
        assert_eq!(rle_encode(&code("10")).runs(), &[1, 1]);
        assert_eq!(rle_encode(&code("101010")).runs(), &[1, 1, 1, 1, 1, 1]);
        assert_eq!(
            rle_decode(&RunLengthSequence::new(vec![2, 1, 2, 3]).unwrap()).unwrap(),
            code("11011000")
        );
        assert_eq!(
            rle_decode(&RunLengthSequence::new(vec![1, 1]).unwrap()).unwrap(),
            code("10")
        );
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!("0011".parse::<BinaryCode>(), Err(Error::UnbalancedTraversal)));
        assert!(matches!("110".parse::<BinaryCode>(), Err(Error::UnbalancedTraversal)));
        assert!(matches!("1010x".parse::<BinaryCode>(), Err(Error::Data(_))));
        assert!(matches!(
            RunLengthSequence::new(vec![2, 0]),
            Err(Error::MalformedRun(0))
        ));
    }

    #[test]
    fn skips_non_tree_edges() {
        // The toy cascade has 5 edges but only 4 tree edges.
        let c = toy_cascade();
        assert_eq!(c.edge_count(), 5);
        assert_eq!(dfs_encode(&c).unwrap().len(), 8);
    }

    prop_compose! {
        /// Random Dyck path with up to 60 edges.
        fn arb_code()(steps in prop::collection::vec(any::<bool>(), 0..120)) -> BinaryCode {
            let mut height = 0usize;
            let mut bits = Vec::new();
            for up in steps {
                if up || height == 0 {
                    bits.push(true);
                    height += 1;
                } else {
                    bits.push(false);
                    height -= 1;
                }
            }
            while height > 0 {
                bits.push(false);
                height -= 1;
            }
            BinaryCode::from_bits(bits).unwrap()
        }
    }

    proptest! {
        #[test]
        fn rle_round_trip(b in arb_code()) {
            prop_assert_eq!(rle_decode(&rle_encode(&b)).unwrap(), b);
        }

        #[test]
        fn tree_round_trip(b in arb_code()) {
            let tree = decode_tree(&b);
            prop_assert_eq!(tree.node_count(), b.len() / 2 + 1);
            prop_assert_eq!(dfs_encode(&tree).unwrap(), b);
        }
    }
}
