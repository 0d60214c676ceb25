use super::ScoreMatrix;

/// Greedy clustering of positions `0..d.len()` into `ceil(n / vec_size)`
/// sub-groups of at most `vec_size` elements.
///
/// The least related pair seeds the first two sub-groups, each further seed
/// is the element least related to the seeds so far. Remaining elements join,
/// one at a time, the non-full sub-group they are most attached to.
pub fn split_by_clustering(d: &ScoreMatrix, vec_size: usize) -> Vec<Vec<usize>> {
    let n = d.len();
    let v = n.div_ceil(vec_size).max(1);
    if n < 2 || v == 1 {
        return vec![(0..n).collect()];
    }
    let mut rest: Vec<usize> = (0..n).collect();

    let mut pair = (0, 1);
    let mut low = f64::INFINITY;
    for i in 0..n {
        for j in i + 1..n {
            if d.get(i, j) < low {
                low = d.get(i, j);
                pair = (i, j);
            }
        }
    }
    let mut subgroups: Vec<Vec<usize>> = vec![vec![pair.0], vec![pair.1]];
    rest.retain(|&x| x != pair.0 && x != pair.1);

    while subgroups.len() < v {
        let mut worst = 0;
        let mut worst_score = f64::INFINITY;
        for (k, &e) in rest.iter().enumerate() {
            let s: f64 = subgroups.iter().map(|g| d.get(g[0], e)).sum();
            if s < worst_score {
                worst_score = s;
                worst = k;
            }
        }
        subgroups.push(vec![rest.remove(worst)]);
    }

    while !rest.is_empty() {
        let mut best = (0, 0);
        let mut best_score = f64::NEG_INFINITY;
        for (gi, g) in subgroups.iter().enumerate() {
            if g.len() >= vec_size {
                continue;
            }
            for (k, &e) in rest.iter().enumerate() {
                let s: f64 = g.iter().map(|&x| d.get(x, e)).sum();
                if s > best_score {
                    best_score = s;
                    best = (gi, k);
                }
            }
        }
        let e = rest.remove(best.1);
        subgroups[best.0].push(e);
    }
    subgroups
}
