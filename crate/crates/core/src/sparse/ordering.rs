use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::CsrMatrix;

fn merge_without(a: &[usize], b: &[usize], skip_a: usize, skip_b: usize, out: &mut Vec<usize>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let x = a.get(i).copied().unwrap_or(usize::MAX);
        let y = b.get(j).copied().unwrap_or(usize::MAX);
        let v = if x <= y {
            i += 1;
            if x == y {
                j += 1;
            }
            x
        } else {
            j += 1;
            y
        };
        if v != skip_a && v != skip_b {
            out.push(v);
        }
    }
}

/// Minimum degree ordering of the symmetrized pattern of `a`. Ties are broken
/// by the smaller index so the ordering is deterministic.
pub fn minimum_degree(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let t = a.transpose();
    let mut adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut v: Vec<usize> = a.row(i).0.iter().chain(t.row(i).0).copied().filter(|&j| j != i).collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    let mut eliminated = vec![false; n];
    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..n).map(|i| Reverse((adj[i].len(), i))).collect();
    let mut order = Vec::with_capacity(n);
    let mut buf = Vec::new();
    while let Some(Reverse((deg, p))) = heap.pop() {
        if eliminated[p] || deg != adj[p].len() {
            continue;
        }
        eliminated[p] = true;
        order.push(p);
        let nbrs = std::mem::take(&mut adj[p]);
        for &v in &nbrs {
            merge_without(&adj[v], &nbrs, p, v, &mut buf);
            std::mem::swap(&mut adj[v], &mut buf);
            heap.push(Reverse((adj[v].len(), v)));
        }
    }
    order
}
