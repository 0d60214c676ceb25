use super::ScoreMatrix;

/// Pair `(i, j)`, `i < j`, with the lowest score; first pair wins ties.
fn find_min_score(p: &[usize], d: &ScoreMatrix) -> (usize, usize) {
    let mut best = (p[0], p[1]);
    let mut best_score = f64::INFINITY;
    for (a, &i) in p.iter().enumerate() {
        for &j in &p[a + 1..] {
            let s = d.get(i, j);
            if s < best_score {
                best_score = s;
                best = (i, j);
            }
        }
    }
    best
}

/// Element of `p` with the highest accumulated score towards either side,
/// with both accumulated scores. First element wins ties.
fn find_highest_score(p: &[usize], sub1: &[usize], sub2: &[usize], d: &ScoreMatrix) -> (usize, f64, f64) {
    let mut best = (0, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut best_score = f64::NEG_INFINITY;
    for (k, &n) in p.iter().enumerate() {
        let s1: f64 = sub1.iter().map(|&x| d.get(n, x)).sum();
        let s2: f64 = sub2.iter().map(|&x| d.get(n, x)).sum();
        if s1.max(s2) > best_score {
            best_score = s1.max(s2);
            best = (k, s1, s2);
        }
    }
    best
}

/// Recursive bisection of positions `0..d.len()` into
/// `ceil(n / vec_size)` parts of at most `vec_size` elements.
///
/// Each bisection seeds both halves with the least related pair, then moves
/// the element most attached to either half. Half sizes are counted in
/// whole vectors: the first half takes `ceil(v/2)` vectors and the second
/// `floor(v/2)`, each half missing at most the spare lanes of `p`.
pub fn split_by_partitioning(d: &ScoreMatrix, vec_size: usize) -> Vec<Vec<usize>> {
    let n = d.len();
    let target = n.div_ceil(vec_size).max(1);
    let mut wip: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut done = Vec::new();
    while done.len() != target {
        let Some(mut p) = wip.pop() else { break };
        if p.len() <= vec_size {
            done.push(p);
            continue;
        }
        let vecs = p.len().div_ceil(vec_size);
        let margin = vecs * vec_size - p.len();
        let max1 = vecs.div_ceil(2) * vec_size;
        let max2 = (vecs / 2) * vec_size;
        let min1 = max1 - margin;
        let min2 = max2 - margin;

        let (i, j) = find_min_score(&p, d);
        let mut sub1 = vec![i];
        let mut sub2 = vec![j];
        p.retain(|&x| x != i && x != j);
        while !p.is_empty() {
            let need1 = min1.saturating_sub(sub1.len());
            let need2 = min2.saturating_sub(sub2.len());
            if sub1.len() == max1 || need2 == p.len() {
                sub2.push(p.pop().unwrap());
            } else if sub2.len() == max2 || need1 == p.len() {
                sub1.push(p.pop().unwrap());
            } else {
                let (k, s1, s2) = find_highest_score(&p, &sub1, &sub2, d);
                let e = p.remove(k);
                if s1 >= s2 {
                    sub1.push(e);
                } else {
                    sub2.push(e);
                }
            }
        }
        wip.push(sub1);
        wip.push(sub2);
    }
    done
}
