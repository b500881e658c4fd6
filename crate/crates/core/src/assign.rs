//! Rectangular linear assignment and the cost functions used to build it.
//!
//! The solver is the shortest-augmenting-path form of Jonker-Volgenant for
//! rectangular matrices: rows are added one at a time, each with a
//! Dijkstra-like search over reduced costs, and the dual potentials are
//! updated after every augmentation. Wide and tall matrices are both handled
//! without padding; the shorter side is always fully matched.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::textio::normalize;

/// Dense, row-major matrix of non-negative finite costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl CostMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::InvalidCost(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidCost(format!("entry {bad} is negative or not finite")));
        }
        Ok(CostMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidCost("ragged rows".into()));
        }
        CostMatrix::new(rows.len(), cols, rows.concat())
    }

    /// Builds the matrix by evaluating `f(i, j)` on every cell.
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CostMatrix::new(rows, cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn transpose(&self) -> CostMatrix {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        CostMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assignment {
    /// `(row, col)` pairs sorted by row.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_rows: Vec<usize>,
    pub unmatched_cols: Vec<usize>,
    pub total_cost: f64,
}

impl Assignment {
    fn empty(rows: usize, cols: usize) -> Self {
        Assignment {
            pairs: Vec::new(),
            unmatched_rows: (0..rows).collect(),
            unmatched_cols: (0..cols).collect(),
            total_cost: 0.0,
        }
    }

    /// Column matched to `row`, if any.
    pub fn col_for_row(&self, row: usize) -> Option<usize> {
        self.pairs
            .binary_search_by_key(&row, |&(r, _)| r)
            .ok()
            .map(|k| self.pairs[k].1)
    }
}

const UNASSIGNED: usize = usize::MAX;

/// Minimum-cost matching of size `min(rows, cols)`.
///
/// Rows are inserted in increasing index order. When several columns tie on
/// the shortest reduced path, a free column wins over an assigned one and
/// then the lowest column index wins, so the result is reproducible.
pub fn solve_lap_jv(cost: &CostMatrix) -> Assignment {
    if cost.rows == 0 || cost.cols == 0 {
        return Assignment::empty(cost.rows, cost.cols);
    }
    if cost.rows > cost.cols {
        let t = solve_lap_jv(&cost.transpose());
        let mut pairs: Vec<(usize, usize)> = t.pairs.iter().map(|&(c, r)| (r, c)).collect();
        pairs.sort_unstable();
        let total_cost = pairs.iter().map(|&(r, c)| cost.get(r, c)).sum();
        return Assignment {
            pairs,
            unmatched_rows: t.unmatched_cols,
            unmatched_cols: t.unmatched_rows,
            total_cost,
        };
    }

    let (nr, nc) = (cost.rows, cost.cols);
    let mut u = vec![0.0f64; nr];
    let mut v = vec![0.0f64; nc];
    let mut col4row = vec![UNASSIGNED; nr];
    let mut row4col = vec![UNASSIGNED; nc];
    let mut path = vec![UNASSIGNED; nc];
    let mut shortest = vec![f64::INFINITY; nc];
    let mut visited_rows = vec![false; nr];
    let mut visited_cols = vec![false; nc];
    let mut remaining: Vec<usize> = Vec::with_capacity(nc);

    for cur_row in 0..nr {
        shortest.fill(f64::INFINITY);
        visited_rows.fill(false);
        visited_cols.fill(false);
        remaining.clear();
        remaining.extend(0..nc);

        let mut min_val = 0.0f64;
        let mut i = cur_row;
        let sink = loop {
            visited_rows[i] = true;
            let mut best: Option<usize> = None;
            for (k, &j) in remaining.iter().enumerate() {
                let reduced = min_val + cost.get(i, j) - u[i] - v[j];
                if reduced < shortest[j] {
                    path[j] = i;
                    shortest[j] = reduced;
                }
                let better = match best {
                    None => true,
                    Some(b) => {
                        let jb = remaining[b];
                        // free columns first, then the lower index
                        let key = |c: usize| (row4col[c] != UNASSIGNED, c);
                        shortest[j] < shortest[jb] || (shortest[j] == shortest[jb] && key(j) < key(jb))
                    }
                };
                if better {
                    best = Some(k);
                }
            }
            // Costs are finite, so some column is always reachable.
            let k = best.expect("non-empty remaining columns");
            let j = remaining.swap_remove(k);
            min_val = shortest[j];
            visited_cols[j] = true;
            if row4col[j] == UNASSIGNED {
                break j;
            }
            i = row4col[j];
        };

        u[cur_row] += min_val;
        for r in 0..nr {
            if visited_rows[r] && r != cur_row {
                u[r] += min_val - shortest[col4row[r]];
            }
        }
        for c in 0..nc {
            if visited_cols[c] {
                v[c] -= min_val - shortest[c];
            }
        }

        let mut j = sink;
        loop {
            let r = path[j];
            row4col[j] = r;
            std::mem::swap(&mut col4row[r], &mut j);
            if r == cur_row {
                break;
            }
        }
    }

    let pairs: Vec<(usize, usize)> = col4row.iter().enumerate().map(|(r, &c)| (r, c)).collect();
    let total_cost = pairs.iter().map(|&(r, c)| cost.get(r, c)).sum();
    Assignment {
        pairs,
        unmatched_rows: Vec::new(),
        unmatched_cols: (0..nc).filter(|&c| row4col[c] == UNASSIGNED).collect(),
        total_cost,
    }
}

/// Levenshtein distance over Unicode scalar values with unit costs.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let prefix = a.iter().zip(&b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);
    let (pattern, text) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    if pattern.is_empty() {
        return text.len();
    }
    bit_parallel_distance(pattern, text)
}

/// Block-wise bit-vector Levenshtein (Myers, with Hyyrö's multi-word
/// carries). Column `j` of the DP is kept as vertical +1/-1 delta masks.
fn bit_parallel_distance(pattern: &[char], text: &[char]) -> usize {
    let m = pattern.len();
    let words = m.div_ceil(64);
    let mut alphabet: Vec<char> = pattern.to_vec();
    alphabet.sort_unstable();
    alphabet.dedup();
    let mut peq = vec![0u64; alphabet.len() * words];
    for (i, ch) in pattern.iter().enumerate() {
        let k = alphabet.binary_search(ch).unwrap();
        peq[k * words + i / 64] |= 1 << (i % 64);
    }
    let last = 1u64 << ((m - 1) % 64);
    let mut vp = vec![!0u64; words];
    let mut vn = vec![0u64; words];
    let mut dist = m;
    for ch in text {
        let row = alphabet
            .binary_search(ch)
            .ok()
            .map(|k| &peq[k * words..(k + 1) * words]);
        let (mut hp_carry, mut hn_carry) = (1u64, 0u64);
        for w in 0..words {
            let eq = row.map_or(0, |r| r[w]);
            let x = eq | hn_carry;
            let d0 = (((x & vp[w]).wrapping_add(vp[w])) ^ vp[w]) | x | vn[w];
            let mut hp = vn[w] | !(d0 | vp[w]);
            let mut hn = d0 & vp[w];
            let (hp_in, hn_in) = (hp_carry, hn_carry);
            if w + 1 < words {
                hp_carry = hp >> 63;
                hn_carry = hn >> 63;
            } else {
                dist += usize::from(hp & last != 0);
                dist -= usize::from(hn & last != 0);
            }
            hp = (hp << 1) | hp_in;
            hn = (hn << 1) | hn_in;
            vp[w] = hn | !(d0 | hp);
            vn[w] = hp & d0;
        }
    }
    dist
}

/// Aligns segments by the edit distance of their normalized text.
pub fn match_by_edit_distance<G: AsRef<str>, P: AsRef<str>>(gt: &[G], pred: &[P]) -> Assignment {
    let gt: Vec<String> = gt.iter().map(|s| normalize(s.as_ref())).collect();
    let pred: Vec<String> = pred.iter().map(|s| normalize(s.as_ref())).collect();
    let cost = CostMatrix::from_fn(gt.len(), pred.len(), |i, j| edit_distance(&gt[i], &pred[j]) as f64)
        .expect("edit distances are finite and non-negative");
    solve_lap_jv(&cost)
}

/// Aligns points by Euclidean distance.
pub fn match_by_euclidean(gt: &[[f64; 2]], pred: &[[f64; 2]]) -> Result<Assignment> {
    let cost = CostMatrix::from_fn(gt.len(), pred.len(), |i, j| {
        (gt[i][0] - pred[j][0]).hypot(gt[i][1] - pred[j][1])
    })?;
    Ok(solve_lap_jv(&cost))
}
