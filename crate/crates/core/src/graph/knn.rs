use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::geometry::Vec2;

/// Candidate ordered by squared distance, then index.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Candidate {
    dist_sq: f64,
    index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

enum Node {
    Leaf(Vec<usize>),
    Split {
        axis: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

/// Static 2-d tree over point positions.
pub struct KdTree<'a> {
    points: &'a [Vec2],
    root: Node,
}

const LEAF_SIZE: usize = 8;

fn coord(p: Vec2, axis: usize) -> f64 {
    if axis == 0 {
        p.x
    } else {
        p.y
    }
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [Vec2]) -> Self {
        let indices: Vec<usize> = (0..points.len()).collect();
        let root = Self::build(points, indices, 0);
        Self { points, root }
    }

    fn build(points: &[Vec2], mut indices: Vec<usize>, depth: usize) -> Node {
        if indices.len() <= LEAF_SIZE {
            return Node::Leaf(indices);
        }
        let axis = depth % 2;
        indices.sort_by(|&a, &b| coord(points[a], axis).total_cmp(&coord(points[b], axis)));
        let mid = indices.len() / 2;
        let value = coord(points[indices[mid]], axis);
        let right = indices.split_off(mid);
        Node::Split {
            axis,
            value,
            left: Box::new(Self::build(points, indices, depth + 1)),
            right: Box::new(Self::build(points, right, depth + 1)),
        }
    }

    /// The `k` nearest points to `points[query]`, excluding itself, closest first.
    pub fn nearest(&self, query: usize, k: usize) -> Vec<usize> {
        if k == 0 {
            return Vec::new();
        }
        let mut heap = BinaryHeap::with_capacity(k + 1);
        self.search(&self.root, query, k, &mut heap);
        let mut found = heap.into_vec();
        found.sort();
        found.into_iter().map(|c| c.index).collect()
    }

    fn search(&self, node: &Node, query: usize, k: usize, heap: &mut BinaryHeap<Candidate>) {
        let q = self.points[query];
        match node {
            Node::Leaf(indices) => {
                for &i in indices {
                    if i == query {
                        continue;
                    }
                    let c = Candidate {
                        dist_sq: (self.points[i] - q).norm_sq(),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().expect("heap is full") {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let delta = coord(q, *axis) - value;
                let (near, far) = if delta < 0.0 { (left, right) } else { (right, left) };
                self.search(near, query, k, heap);
                // equal distances must still be visited for the index tie-break
                let full = heap.len() == k;
                if !full || delta * delta <= heap.peek().expect("non-empty").dist_sq {
                    self.search(far, query, k, heap);
                }
            }
        }
    }
}
