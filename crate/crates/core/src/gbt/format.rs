//! Line-oriented text format for tree ensembles.
//!
//! ```text
//! failfoundry-gbt 1
//! base_score <p>
//! params <n_trees> <max_depth> <learning_rate> <colsample_bytree> <min_child_weight> <l2_reg> <seed>
//! features <n>
//! feature <index> <name>
//! trees <count>
//! tree <index> <n_nodes>
//! <id> split <feature> <threshold> <left|right> <left_id> <right_id> - <gain>
//! <id> leaf - - - - - <weight> -
//! ```
//!
//! Floats use the shortest exponent form that parses back to the same bits.

use super::{GbtParams, Node, Tree, TreeEnsemble};
use crate::error::{Error, Result};

const MAGIC: &str = "failfoundry-gbt 1";

pub fn write_model(m: &TreeEnsemble) -> String {
    let p = &m.params;
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("base_score {:e}\n", m.base_score));
    out.push_str(&format!(
        "params {} {} {:e} {:e} {:e} {:e} {}\n",
        p.n_trees, p.max_depth, p.learning_rate, p.colsample_bytree, p.min_child_weight, p.l2_reg, p.seed
    ));
    out.push_str(&format!("features {}\n", m.feature_names.len()));
    for (j, name) in m.feature_names.iter().enumerate() {
        out.push_str(&format!("feature {j} {name}\n"));
    }
    out.push_str(&format!("trees {}\n", m.trees.len()));
    for (t, tree) in m.trees.iter().enumerate() {
        out.push_str(&format!("tree {t} {}\n", tree.nodes.len()));
        for (k, node) in tree.nodes.iter().enumerate() {
            match node {
                Node::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                    gain,
                } => out.push_str(&format!(
                    "{k} split {feature} {threshold:e} {} {left} {right} - {gain:e}\n",
                    if *default_left { "left" } else { "right" }
                )),
                Node::Leaf { weight } => out.push_str(&format!("{k} leaf - - - - - {weight:e} -\n")),
            }
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: u64,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i as u64 + 1;
                Ok(l)
            }
            None => Err(self.err("unexpected end of model file")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            line: self.line,
            message: msg.into(),
        }
    }

    /// Next line split on whitespace after checking its leading keyword.
    fn keyed(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let l = self.next()?;
        let mut parts = l.split_whitespace();
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected `{key}`")));
        }
        Ok(parts.collect())
    }

    fn num<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.parse().map_err(|_| self.err(format!("invalid number `{s}`")))
    }
}

pub fn read_model(text: &str) -> Result<TreeEnsemble> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if lines.next()?.trim() != MAGIC {
        return Err(lines.err("not a failfoundry gbt model"));
    }
    let base = lines.keyed("base_score")?;
    let base_score: f64 = lines.num(base.first().copied().unwrap_or(""))?;
    let p = lines.keyed("params")?;
    if p.len() != 7 {
        return Err(lines.err("params line needs 7 fields"));
    }
    let params = GbtParams {
        n_trees: lines.num(p[0])?,
        max_depth: lines.num(p[1])?,
        learning_rate: lines.num(p[2])?,
        colsample_bytree: lines.num(p[3])?,
        min_child_weight: lines.num(p[4])?,
        l2_reg: lines.num(p[5])?,
        seed: lines.num(p[6])?,
    };
    let nf_field = lines.keyed("features")?.first().copied().unwrap_or("");
    let nf: usize = lines.num(nf_field)?;
    let mut feature_names = Vec::with_capacity(nf);
    for j in 0..nf {
        let l = lines.next()?;
        let rest = l
            .strip_prefix("feature ")
            .ok_or_else(|| lines.err("expected `feature`"))?;
        let (idx, name) = rest
            .split_once(' ')
            .ok_or_else(|| lines.err("feature line needs an index and a name"))?;
        if lines.num::<usize>(idx)? != j {
            return Err(lines.err("features out of order"));
        }
        feature_names.push(name.to_string());
    }
    let nt_field = lines.keyed("trees")?.first().copied().unwrap_or("");
    let nt: usize = lines.num(nt_field)?;
    let mut trees = Vec::with_capacity(nt);
    for t in 0..nt {
        let h = lines.keyed("tree")?;
        if h.len() != 2 || lines.num::<usize>(h[0])? != t {
            return Err(lines.err("bad tree header"));
        }
        let n_nodes: usize = lines.num(h[1])?;
        let mut nodes = Vec::with_capacity(n_nodes);
        for k in 0..n_nodes {
            let f: Vec<&str> = lines.next()?.split_whitespace().collect();
            if f.len() != 9 || lines.num::<usize>(f[0])? != k {
                return Err(lines.err("node line needs 9 fields in id order"));
            }
            let node = match f[1] {
                "split" => {
                    let feature: usize = lines.num(f[2])?;
                    let (left, right): (usize, usize) = (lines.num(f[5])?, lines.num(f[6])?);
                    if feature >= nf || left >= n_nodes || right >= n_nodes || left <= k || right <= k {
                        return Err(lines.err("split references an invalid feature or child"));
                    }
                    Node::Split {
                        feature,
                        threshold: lines.num(f[3])?,
                        default_left: match f[4] {
                            "left" => true,
                            "right" => false,
                            _ => return Err(lines.err("default direction must be left or right")),
                        },
                        left,
                        right,
                        gain: lines.num(f[8])?,
                    }
                }
                "leaf" => Node::Leaf {
                    weight: lines.num(f[7])?,
                },
                other => return Err(lines.err(format!("unknown node kind `{other}`"))),
            };
            nodes.push(node);
        }
        if nodes.is_empty() {
            return Err(lines.err("tree without nodes"));
        }
        trees.push(Tree { nodes });
    }
    Ok(TreeEnsemble {
        trees,
        base_score,
        params,
        feature_names,
    })
}
