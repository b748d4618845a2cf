//! Small static kd-tree over fixed-dimension points.
//!
//! Built once from a point set, queried for the single nearest neighbor.
//! Sized for class tables of a few hundred to a few thousand entries.

#[derive(Debug, Clone)]
enum Node {
    Leaf {
        indices: Vec<usize>,
    },
    Split {
        axis: usize,
        value: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone)]
pub struct KdTree<const D: usize> {
    points: Vec<[f64; D]>,
    root: Option<Node>,
}

const LEAF_SIZE: usize = 8;

fn dist_sq<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

impl<const D: usize> KdTree<D> {
    pub fn build(points: &[[f64; D]]) -> Self {
        let points = points.to_vec();
        let mut indices: Vec<usize> = (0..points.len()).collect();
        let root = if points.is_empty() {
            None
        } else {
            Some(Self::build_node(&points, &mut indices, 0))
        };
        KdTree { points, root }
    }

    fn build_node(points: &[[f64; D]], indices: &mut [usize], depth: usize) -> Node {
        if indices.len() <= LEAF_SIZE {
            return Node::Leaf {
                indices: indices.to_vec(),
            };
        }
        // Split on the axis with the largest spread at this node.
        let mut axis = depth % D;
        let mut best_spread = -1.0;
        for a in 0..D {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in indices.iter() {
                lo = lo.min(points[i][a]);
                hi = hi.max(points[i][a]);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                axis = a;
            }
        }
        let mid = indices.len() / 2;
        indices.sort_by(|&i, &j| points[i][axis].total_cmp(&points[j][axis]).then(i.cmp(&j)));
        let value = points[indices[mid]][axis];
        let (left_idx, right_idx) = indices.split_at_mut(mid);
        let left = Box::new(Self::build_node(points, left_idx, depth + 1));
        let right = Box::new(Self::build_node(points, right_idx, depth + 1));
        Node::Split {
            axis,
            value,
            left,
            right,
        }
    }

    /// Index and squared distance of the nearest point, or None if empty.
    pub fn nearest(&self, query: &[f64; D]) -> Option<(usize, f64)> {
        let root = self.root.as_ref()?;
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(root, query, &mut best);
        Some(best)
    }

    fn search(&self, node: &Node, query: &[f64; D], best: &mut (usize, f64)) {
        match node {
            Node::Leaf { indices } => {
                for &i in indices {
                    let d = dist_sq(&self.points[i], query);
                    // Tie-break toward the lower index so results are
                    // independent of traversal order.
                    if d < best.1 || (d == best.1 && i < best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = query[*axis] - value;
                let (near, far) = if diff < 0.0 {
                    (left, right)
                } else {
                    (right, left)
                };
                self.search(near, query, best);
                if diff * diff <= best.1 {
                    self.search(far, query, best);
                }
            }
        }
    }
}
