//! Reference bootstrap standard errors for the median, shared with the
//! acceptance suite.

/// Exact ("ideal") bootstrap standard error of the median for distinct
/// values, by enumerating the joint law of the two middle order statistics
/// of a size-n resample.
pub fn ideal_bootstrap_median_se(data: &[f64]) -> f64 {
    let mut v = data.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    assert!(n.is_multiple_of(2) && v.windows(2).all(|w| w[0] < w[1]));
    let k = n / 2; // median = (X(k) + X(k+1)) / 2, 1-based
    let nf = n as f64;
    let ln_fact: Vec<f64> = (0..=n)
        .scan(0.0, |acc, i| {
            if i > 0 {
                *acc += (i as f64).ln();
            }
            Some(*acc)
        })
        .collect();
    let choose = |a: usize, b: usize| (ln_fact[a] - ln_fact[b] - ln_fact[a - b]).exp();
    let pow = |p: f64, e: usize| p.powi(e as i32);

    let mut m1 = 0.0;
    let mut m2 = 0.0;
    let mut total = 0.0;
    for a in 1..=n {
        // X(k) = v[a], X(k+1) = v[b] with b > a: exactly k draws ≤ a, at
        // least one equal to a, the other n-k all > a with minimum b.
        for b in a + 1..=n {
            let p = choose(n, k)
                * (pow(a as f64 / nf, k) - pow((a - 1) as f64 / nf, k))
                * (pow((n - b + 1) as f64 / nf, n - k) - pow((n - b) as f64 / nf, n - k));
            let med = (v[a - 1] + v[b - 1]) / 2.0;
            m1 += p * med;
            m2 += p * med * med;
            total += p;
        }
        // X(k) = X(k+1) = v[a]: fewer than k draws below a, at least k+1 at or below.
        let (pl, pa) = ((a - 1) as f64 / nf, 1.0 / nf);
        let mut p = 0.0;
        for below in 0..k {
            for at in (k + 1 - below)..=(n - below) {
                let above = n - below - at;
                let coef =
                    (ln_fact[n] - ln_fact[below] - ln_fact[at] - ln_fact[above]).exp();
                p += coef * pow(pl, below) * pow(pa, at) * pow(1.0 - pl - pa, above);
            }
        }
        m1 += p * v[a - 1];
        m2 += p * v[a - 1] * v[a - 1];
        total += p;
    }
    assert!((total - 1.0).abs() < 1e-9, "probabilities sum to {total}");
    (m2 - m1 * m1).sqrt()
}

/// Plain Monte-Carlo bootstrap with an unrelated generator.
pub fn chacha_bootstrap_median_se(data: &[f64], b: usize, seed: u64) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = data.len();
    let meds: Vec<f64> = (0..b)
        .map(|_| {
            let mut r: Vec<f64> = (0..n).map(|_| data[rng.random_range(0..n)]).collect();
            r.sort_by(f64::total_cmp);
            (r[n / 2 - 1] + r[n / 2]) / 2.0
        })
        .collect();
    let m = meds.iter().sum::<f64>() / b as f64;
    (meds.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (b - 1) as f64).sqrt()
}
