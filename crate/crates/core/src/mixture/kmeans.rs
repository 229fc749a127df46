//! Angular k-means on the `(cos, sin)` embedding, where Euclidean distance is
//! the chord distance on the torus.

use rand::Rng;

fn embed(x: &[f64]) -> Vec<f64> {
    x.iter().flat_map(|a| [a.cos(), a.sin()]).collect()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.iter().enumerate() {
        let v = dist2(p, c);
        if v < best.1 {
            best = (k, v);
        }
    }
    best
}

/// Cluster labels from k-means++ seeding followed by Lloyd iterations.
pub(crate) fn angular_kmeans<R: Rng>(data: &[impl AsRef<[f64]>], k: usize, rng: &mut R) -> Vec<usize> {
    let pts: Vec<Vec<f64>> = data.iter().map(|x| embed(x.as_ref())).collect();
    let n = pts.len();
    let mut centers = vec![pts[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = pts.iter().map(|p| dist2(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.gen::<f64>() * total;
            let mut i = 0;
            while i + 1 < n && u >= d2[i] {
                u -= d2[i];
                i += 1;
            }
            i
        } else {
            rng.gen_range(0..n)
        };
        centers.push(pts[pick].clone());
        for (p, v) in pts.iter().zip(d2.iter_mut()) {
            *v = v.min(dist2(p, centers.last().unwrap()));
        }
    }

    let mut labels = vec![usize::MAX; n];
    for _ in 0..100 {
        let mut changed = false;
        for (p, l) in pts.iter().zip(labels.iter_mut()) {
            let (k, _) = nearest(p, &centers);
            if *l != k {
                *l = k;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let dim = pts[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &l) in pts.iter().zip(&labels) {
            counts[l] += 1;
            for (s, v) in sums[l].iter_mut().zip(p) {
                *s += v;
            }
        }
        for j in 0..k {
            // an emptied cluster keeps its previous center
            if counts[j] > 0 {
                centers[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn separates_clusters_across_the_seam() {
        // one cluster straddles +-pi, the other sits at the origin
        let mut data = vec![];
        for i in 0..50 {
            let e = (i as f64 / 50.0 - 0.5) * 0.4;
            data.push(vec![std::f64::consts::PI - 0.1 + e, -std::f64::consts::PI + 0.05 - e]);
            data.push(vec![e, -e]);
        }
        let labels = angular_kmeans(&data, 2, &mut ChaCha8Rng::seed_from_u64(1));
        for i in 0..50 {
            assert_eq!(labels[2 * i], labels[0]);
            assert_eq!(labels[2 * i + 1], labels[1]);
        }
        assert_ne!(labels[0], labels[1]);
    }
}
