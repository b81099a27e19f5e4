//! Solvers against exhaustive enumeration, chi-squared against quadrature.

use hilo_fusion_core::assignment::{auction_assign, chi2_cdf, chi2_ppf, hungarian_assign, CostMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All injective row->column maps, as (total cost) values sorted ascending.
fn enumerate_costs(c: &CostMatrix) -> Vec<f64> {
    fn rec(c: &CostMatrix, row: usize, used: &mut Vec<bool>, acc: f64, out: &mut Vec<f64>) {
        if row == c.rows() {
            out.push(acc);
            return;
        }
        for col in 0..c.cols() {
            if !used[col] {
                used[col] = true;
                rec(c, row + 1, used, acc + c.get(row, col), out);
                used[col] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(c, 0, &mut vec![false; c.cols()], 0.0, &mut out);
    out.sort_by(f64::total_cmp);
    out
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize, integer: bool) -> CostMatrix {
    let data = (0..rows * cols)
        .map(|_| {
            if integer {
                rng.gen_range(0..20) as f64
            } else {
                rng.gen_range(0.0..50.0)
            }
        })
        .collect();
    CostMatrix::new(rows, cols, data).unwrap()
}

#[test]
fn hungarian_small_examples() {
    let c = CostMatrix::from_rows(&[[4.0, 1.0], [2.0, 3.0]]).unwrap();
    assert_eq!(enumerate_costs(&c)[0], 3.0);
    assert_eq!(hungarian_assign(&c).unwrap().total_cost(&c), 3.0);
}

#[test]
fn hungarian_random_6x6_matches_720_permutations() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let c = random_matrix(&mut rng, 6, 6, false);
        let all = enumerate_costs(&c);
        assert_eq!(all.len(), 720);
        let h = hungarian_assign(&c).unwrap().total_cost(&c);
        assert!((h - all[0]).abs() < 1e-9);
    }
}

#[test]
fn auction_random_5x5_within_bound() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let c = random_matrix(&mut rng, 5, 5, true);
        let opt = enumerate_costs(&c)[0];
        let a = auction_assign(&c, 0.1).unwrap().total_cost(&c);
        assert!(a <= opt + 0.5 + 1e-9, "auction {a} vs optimum {opt}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn hungarian_is_optimal(seed in any::<u64>(), rows in 1usize..=7, extra in 0usize..=3) {
        let cols = (rows + extra).min(7);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_matrix(&mut rng, rows, cols, seed % 2 == 0);
        let opt = enumerate_costs(&c)[0];
        let h = hungarian_assign(&c).unwrap();
        let mut seen = vec![false; cols];
        for &col in h.cols() {
            prop_assert!(!seen[col]);
            seen[col] = true;
        }
        prop_assert!((h.total_cost(&c) - opt).abs() < 1e-9);
    }

    #[test]
    fn auction_square_bound_and_exactness(seed in any::<u64>(), n in 1usize..=7) {
        let eps = 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_matrix(&mut rng, n, n, seed % 3 == 0);
        let all = enumerate_costs(&c);
        let opt = all[0];
        let a = auction_assign(&c, eps).unwrap();
        prop_assert!(a.total_cost(&c) <= opt + n as f64 * eps + 1e-9);
        // tied optima give a zero gap, so this only fires on a unique optimum
        let gap = all.get(1).map_or(f64::INFINITY, |v| v - opt);
        if gap > n as f64 * eps {
            let h = hungarian_assign(&c).unwrap();
            prop_assert_eq!(a.cols(), h.cols());
        }
    }

    #[test]
    fn auction_rectangular_bound(seed in any::<u64>(), rows in 1usize..=5, extra in 1usize..=2) {
        let cols = rows + extra;
        let eps = 0.05;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_matrix(&mut rng, rows, cols, false);
        let opt = enumerate_costs(&c)[0];
        let a = auction_assign(&c, eps).unwrap();
        // dummy rows square the problem, so the slack bound counts columns
        prop_assert!(a.total_cost(&c) <= opt + cols as f64 * eps + 1e-9);
    }
}

// ---- chi-squared oracle: adaptive Simpson on the density, then bisection ----

fn gamma_half_integer(twice: u32) -> f64 {
    // Gamma(twice / 2) for twice >= 1 via the exact recurrences
    if twice.is_multiple_of(2) {
        (1..twice / 2).map(|k| k as f64).product()
    } else {
        let n = twice / 2;
        let mut g = std::f64::consts::PI.sqrt();
        for k in 0..n {
            g *= k as f64 + 0.5;
        }
        g
    }
}

fn chi2_pdf(t: f64, df: u32) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let k = df as f64 / 2.0;
    t.powf(k - 1.0) * (-t / 2.0).exp() / (2f64.powf(k) * gamma_half_integer(df))
}

#[allow(clippy::too_many_arguments)]
fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

fn oracle_cdf(x: f64, df: u32) -> f64 {
    let f = |t: f64| chi2_pdf(t, df);
    let (fa, fm, fb) = (f(0.0), f(x / 2.0), f(x));
    let whole = x / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&f, 0.0, x, fa, fm, fb, whole, 1e-13, 50)
}

fn oracle_ppf(p: f64, df: u32) -> f64 {
    let (mut lo, mut hi) = (0.0, 100.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if oracle_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn chi2_df4_matches_quadrature() {
    let oracle = oracle_ppf(0.95, 4);
    // frozen from the oracle
    assert!((oracle - 9.4877).abs() < 1e-4);
    assert!((chi2_ppf(0.95, 4).unwrap() - oracle).abs() < 1e-6 * oracle);
}

#[test]
fn chi2_cdf_matches_quadrature_grid() {
    for df in 1..=8u32 {
        for &x in &[0.5, 1.0, 2.5, 6.0, 11.0] {
            // df = 1 has an integrable singularity at 0; start slightly off it
            let oracle = if df == 1 {
                let f = |t: f64| chi2_pdf(t, 1);
                let (a, b) = (1e-12, x);
                let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
                let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
                simpson(&f, a, b, fa, fm, fb, whole, 1e-12, 60)
                    + 2.0 * (1e-12f64 / 2.0).sqrt() / std::f64::consts::PI.sqrt()
            } else {
                oracle_cdf(x, df)
            };
            assert!((chi2_cdf(x, df) - oracle).abs() < 1e-7, "df={df} x={x}");
        }
    }
}

proptest! {
    #[test]
    fn chi2_ppf_monotone(p1 in 0.01f64..0.98, dp in 0.001f64..0.01, df in 1u32..20) {
        let p2 = p1 + dp;
        prop_assert!(chi2_ppf(p2, df).unwrap() > chi2_ppf(p1, df).unwrap());
        prop_assert!(chi2_ppf(p1, df + 1).unwrap() > chi2_ppf(p1, df).unwrap());
        let x = chi2_ppf(p1, df).unwrap();
        prop_assert!((chi2_cdf(x, df) - p1).abs() < 1e-6);
    }
}
