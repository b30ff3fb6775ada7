use rayon::prelude::*;

use super::GbtParams;

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Rows with `value < threshold` go left; NA follows `default_left`.
    Split {
        feature: usize,
        threshold: f64,
        default_left: bool,
        left: usize,
        right: usize,
        gain: f64,
    },
    Leaf {
        weight: f64,
    },
}

/// Flat binary tree; the root is node 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_weight<F: Fn(usize) -> Option<f64>>(&self, value: F) -> f64 {
        let mut k = 0;
        loop {
            match &self.nodes[k] {
                Node::Leaf { weight } => return *weight,
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                    ..
                } => {
                    let go_left = match value(*feature) {
                        Some(v) => v < *threshold,
                        None => *default_left,
                    };
                    k = if go_left { *left } else { *right };
                }
            }
        }
    }

    /// Number of split levels on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, k: usize) -> usize {
            match &t.nodes[k] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
            }
        }
        walk(self, 0)
    }
}

/// Row indices with a value, sorted ascending by value, per feature.
pub(crate) fn presort(columns: &[Vec<Option<f64>>]) -> Vec<Vec<usize>> {
    columns
        .iter()
        .map(|col| {
            let mut idx: Vec<usize> = (0..col.len()).filter(|&i| col[i].is_some()).collect();
            idx.sort_by(|&a, &b| col[a].unwrap().total_cmp(&col[b].unwrap()).then(a.cmp(&b)));
            idx
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    default_left: bool,
    gain: f64,
}

pub(crate) struct Builder<'a> {
    pub columns: &'a [Vec<Option<f64>>],
    pub sorted: &'a [Vec<usize>],
    pub grad: &'a [f64],
    pub hess: &'a [f64],
    /// Features available to this tree, ascending.
    pub features: &'a [usize],
    pub params: &'a GbtParams,
}

impl Builder<'_> {
    pub fn build(&self) -> Tree {
        let n = self.grad.len();
        let mut in_node = vec![false; n];
        let rows: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::new();
        self.grow(&rows, &mut in_node, 0, &mut nodes);
        Tree { nodes }
    }

    fn score(&self, g: f64, h: f64) -> f64 {
        g * g / (h + self.params.l2_reg)
    }

    fn grow(&self, rows: &[usize], in_node: &mut [bool], depth: usize, nodes: &mut Vec<Node>) -> usize {
        let g: f64 = rows.iter().map(|&i| self.grad[i]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i]).sum();
        let id = nodes.len();
        nodes.push(Node::Leaf {
            weight: -g / (h + self.params.l2_reg) * self.params.learning_rate,
        });
        if depth >= self.params.max_depth || rows.len() < 2 {
            return id;
        }

        // Only this node's rows are flagged while its split is searched.
        for &i in rows {
            in_node[i] = true;
        }
        let in_node_ro: &[bool] = in_node;
        let candidates: Vec<Option<Candidate>> = self
            .features
            .par_iter()
            .map(|&j| self.best_split_for(j, in_node_ro, rows.len(), g, h))
            .collect();
        // Fixed reduction order: strictly better gain wins, so ties keep the
        // lowest feature index.
        let mut best: Option<Candidate> = None;
        for c in candidates.into_iter().flatten() {
            if best.map_or(true, |b| c.gain > b.gain) {
                best = Some(c);
            }
        }
        let Some(best) = best else {
            for &i in rows {
                in_node[i] = false;
            }
            return id;
        };

        let col = &self.columns[best.feature];
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| match col[i] {
                Some(v) => v < best.threshold,
                None => best.default_left,
            });
        for &i in rows {
            in_node[i] = false;
        }
        let left = self.grow(&left_rows, in_node, depth + 1, nodes);
        let right = self.grow(&right_rows, in_node, depth + 1, nodes);
        nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            default_left: best.default_left,
            left,
            right,
            gain: best.gain,
        };
        id
    }

    /// Exact greedy search over one feature, trying NA rows on both sides.
    fn best_split_for(
        &self,
        j: usize,
        in_node: &[bool],
        n_rows: usize,
        g: f64,
        h: f64,
    ) -> Option<Candidate> {
        let col = &self.columns[j];
        let obs: Vec<usize> = self.sorted[j].iter().copied().filter(|&i| in_node[i]).collect();
        if obs.len() < 2 {
            return None;
        }
        let g_obs: f64 = obs.iter().map(|&i| self.grad[i]).sum();
        let h_obs: f64 = obs.iter().map(|&i| self.hess[i]).sum();
        let has_na = obs.len() < n_rows;
        let (g_na, h_na) = if has_na { (g - g_obs, h - h_obs) } else { (0.0, 0.0) };
        let parent = self.score(g, h);
        let mcw = self.params.min_child_weight;

        let mut best: Option<Candidate> = None;
        let (mut gl, mut hl) = (0.0, 0.0);
        for k in 0..obs.len() - 1 {
            let i = obs[k];
            gl += self.grad[i];
            hl += self.hess[i];
            let v = col[i].unwrap();
            let next = col[obs[k + 1]].unwrap();
            if next == v {
                continue;
            }
            let (gr, hr) = (g_obs - gl, h_obs - hl);
            let mut threshold = v + (next - v) * 0.5;
            if threshold <= v {
                threshold = next;
            }
            // NA to the right first; NA to the left only when strictly better.
            let options = [(gl, hl, gr + g_na, hr + h_na, false), (gl + g_na, hl + h_na, gr, hr, true)];
            for (a_g, a_h, b_g, b_h, default_left) in options {
                if default_left && !has_na {
                    continue;
                }
                if a_h < mcw || b_h < mcw {
                    continue;
                }
                let gain = 0.5 * (self.score(a_g, a_h) + self.score(b_g, b_h) - parent);
                if gain > 0.0 && best.map_or(true, |b| gain > b.gain) {
                    best = Some(Candidate {
                        feature: j,
                        threshold,
                        default_left,
                        gain,
                    });
                }
            }
        }
        best
    }
}
