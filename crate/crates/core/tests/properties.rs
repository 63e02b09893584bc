use cksvar_core::cksvar::LagBlocks;
use cksvar_core::limitdist::{
    build_w0star, draw_rng, draw_w0_path, lambda_limit_draw, limit_draw, order_statistic,
    simulate_limit, GridPath, LimitSimConfig,
};
use cksvar_core::lrv::{estimate_w0_from_series, Kernel, LagRule};
use cksvar_core::pencil::Mat;
use cksvar_core::ranktest::{build_moments, build_zstar, demean, lambda_stat, Variant};
use cksvar_core::simulate::{mc_design, occupation, retained, simulate_path, DesignKind, SimOptions};
use cksvar_core::{CksvarParams, RngState, SeriesMatrix};
use proptest::prelude::*;

fn retained_path(design: DesignKind, n: usize, seed: u64) -> SeriesMatrix {
    let (params, _) = mc_design(design);
    (0..)
        .map(|a| {
            simulate_path(&params, n, &SimOptions::default(), &mut RngState::derived(seed, &[a]))
                .unwrap()
                .series
        })
        .find(|z| retained(&occupation(&z.y()), 0.15))
        .unwrap()
}

#[test]
fn simulated_parts_reconstruct_y() {
    let z = retained_path(DesignKind::Nonlinear, 1000, 1);
    let s = build_zstar(&z);
    for t in 0..z.n() {
        assert_eq!(s.get(t, 0) + s.get(t, 1), z.get(t, 0));
        assert_eq!(s.get(t, 0) * s.get(t, 1), 0.0);
    }
}

#[test]
fn innovation_scaling_is_exact() {
    let (params, _) = mc_design(DesignKind::Linear);
    let sigma = Mat::from_rows(&[[1.0, 0.3], [0.3, 2.0]]);
    let base = params.with_sigma_u(sigma.clone()).unwrap();
    let scaled = params.with_sigma_u(sigma.scale(4.0)).unwrap();
    let a = simulate_path(&base, 200, &SimOptions::default(), &mut RngState::new(3)).unwrap();
    let b = simulate_path(&scaled, 200, &SimOptions::default(), &mut RngState::new(3)).unwrap();
    for (x, y) in a.innovations.values().iter().zip(b.innovations.values()) {
        assert_eq!(2.0 * x, *y);
    }
}

/// Roots of `det(λB − A)` for 2 × 2 matrices by the quadratic formula.
fn quadratic_roots(a: &Mat, b: &Mat) -> [f64; 2] {
    // det(λB − A) = c2 λ² + c1 λ + c0.
    let c2 = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)];
    let c1 = -(a[(0, 0)] * b[(1, 1)] + b[(0, 0)] * a[(1, 1)] - a[(0, 1)] * b[(1, 0)] - b[(0, 1)] * a[(1, 0)]);
    let c0 = a[(0, 0)] * a[(1, 1)] - a[(0, 1)] * a[(1, 0)];
    let disc = (c1 * c1 - 4.0 * c2 * c0).max(0.0).sqrt();
    let mut r = [(-c1 - disc) / (2.0 * c2), (-c1 + disc) / (2.0 * c2)];
    r.sort_by(f64::total_cmp);
    r
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Roots of `det(λB − A)` for 3 × 3 matrices by bisection on sign changes.
fn cubic_roots(a: &Mat, b: &Mat) -> Vec<f64> {
    let f = |l: f64| {
        let mut m = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] = l * b[(i, j)] - a[(i, j)];
            }
        }
        det3(&m)
    };
    let hi = 1e6;
    let steps = 2_000_000;
    let mut roots = Vec::new();
    let mut prev = (0.0, f(0.0));
    for k in 1..=steps {
        // Geometric grid resolves both small and large roots.
        let x = 1e-8 * (hi / 1e-8f64).powf(k as f64 / steps as f64);
        let fx = f(x);
        if prev.1 == 0.0 || prev.1.signum() != fx.signum() {
            let (mut lo, mut up) = (prev.0, x);
            for _ in 0..200 {
                let mid = 0.5 * (lo + up);
                if f(mid).signum() == f(lo).signum() {
                    lo = mid;
                } else {
                    up = mid;
                }
            }
            roots.push(0.5 * (lo + up));
        }
        prev = (x, fx);
    }
    roots
}

fn tiny_dataset() -> SeriesMatrix {
    SeriesMatrix::from_rows(&[
        [0.5, 1.0],
        [-0.3, 1.4],
        [1.2, 0.7],
        [-1.1, 2.1],
        [0.4, 1.9],
        [-0.8, 0.2],
    ])
    .unwrap()
}

#[test]
fn tiny_sb_matches_characteristic_polynomial() {
    let z = tiny_dataset();
    let pair = build_moments(&demean(&z)).unwrap();
    let roots = quadratic_roots(&pair.a, &pair.b);
    let s1 = lambda_stat(&z, 1, Variant::Sb).unwrap().lambda;
    let s2 = lambda_stat(&z, 2, Variant::Sb).unwrap().lambda;
    assert!((s1 - roots[0]).abs() <= 1e-9 * roots[0]);
    assert!((s2 - roots[0] - roots[1]).abs() <= 1e-9 * s2);
}

#[test]
fn tiny_mb_matches_characteristic_polynomial() {
    let z = tiny_dataset();
    let pair = build_moments(&demean(&build_zstar(&z))).unwrap();
    let roots = cubic_roots(&pair.a, &pair.b);
    assert_eq!(roots.len(), 3, "{roots:?}");
    let s1 = lambda_stat(&z, 1, Variant::Mb).unwrap();
    for (x, r) in s1.eigenvalues.iter().zip(&roots) {
        assert!((x - r).abs() <= 1e-8 * r, "{x} vs {r}");
    }
    assert!((s1.lambda - roots[0] - roots[1]).abs() <= 1e-8 * s1.lambda);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn statistic_congruence_invariant(seed in 0u64..1000, entries in prop::array::uniform9(-2.0f64..2.0)) {
        let m = Mat::from_rows(&[
            [entries[0] + 3.0, entries[1], entries[2]],
            [entries[3], entries[4] + 3.0, entries[5]],
            [entries[6], entries[7], entries[8] + 3.0],
        ]);
        prop_assume!(m.det().unwrap().abs() > 1.0);
        let z = retained_path(DesignKind::Nonlinear, 300, seed);
        let zs = build_zstar(&z);
        let mz = zs.map_rows(3, zs.roles().to_vec(), |s, d| {
            for i in 0..3 {
                d[i] = (0..3).map(|j| m[(i, j)] * s[j]).sum();
            }
        }).unwrap();
        let base = lambda_stat(&z, 1, Variant::Mb).unwrap().lambda;
        let moved = cksvar_core::ranktest::pencil_stat(&mz, 2).unwrap();
        prop_assert!((base - moved).abs() <= 1e-8 * base);
    }

    #[test]
    fn coherent_scalar_models_never_paradox(a in 0.1f64..5.0, b in 0.1f64..5.0, rhs in -10.0f64..10.0) {
        let params = CksvarParams::new(
            LagBlocks {
                phi_plus: Mat::col_vector(&[a]),
                phi_minus: Mat::col_vector(&[b]),
                phi_x: Mat::zeros(1, 0),
            },
            vec![],
            Mat::zeros(1, 1),
            Mat::identity(1),
            0.0,
        ).unwrap();
        let y = cksvar_core::simulate::solve_step(&params, &Mat::col_vector(&[rhs])).unwrap()[(0, 0)];
        prop_assert_eq!(y >= 0.0, rhs >= 0.0);
    }
}

#[test]
fn limit_first_coordinate_variance() {
    let mut s = 0.0;
    let mut s2 = 0.0;
    let n = 100_000;
    for i in 0..n {
        let path = draw_w0_path(1, 100, 0.0, &mut draw_rng(17, i));
        let v = path.point(100)[0];
        s += v;
        s2 += v * v;
    }
    let mean = s / n as f64;
    let var = s2 / n as f64 - mean * mean;
    assert!((var - 1.0).abs() < 0.02, "variance {var}");
}

#[test]
fn star_parts_multiply_to_zero() {
    let star = build_w0star(&draw_w0_path(2, 500, 0.3, &mut RngState::new(5)));
    for i in 0..=500 {
        let p = star.point(i);
        assert_eq!(p[0] * p[1], 0.0);
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs()
}

#[test]
fn sb_median_reproducible_across_seeds() {
    let med = |seed| {
        let s = simulate_limit(Variant::Sb, 1, 500, 100_000, seed, 0.0).unwrap();
        assert_eq!(s.singular, 0);
        order_statistic(&s.accepted(0.0), 0.5)
    };
    let (a, b) = (med(1), med(2));
    assert!(a > 0.0 && a.is_finite());
    assert!(rel(a, b) < 0.02, "{a} vs {b}");
}

#[test]
fn mb_limit_reproducible_across_seeds() {
    let summary = |seed| {
        let s = simulate_limit(Variant::Mb, 1, 500, 100_000, seed, 0.0).unwrap();
        let acc = s.accepted(0.0);
        let mean = acc.iter().sum::<f64>() / acc.len() as f64;
        let cond = s.accepted(0.15);
        (
            mean,
            order_statistic(&acc, 0.1),
            order_statistic(&cond, 0.1),
            cond.len() as f64 / s.total as f64,
        )
    };
    let (m1, q1, c1, p1) = summary(11);
    let (m2, q2, c2, p2) = summary(12);
    eprintln!("mean {m1} / {m2}; 90% {q1} / {q2}; conditional {c1} / {c2}; acceptance {p1} / {p2}");
    assert!(rel(m1, m2) < 0.02, "mean {m1} vs {m2}");
    assert!(rel(q1, q2) < 0.02, "quantile {q1} vs {q2}");
    assert!((p1 - p2).abs() < 0.01, "acceptance {p1} vs {p2}");
    // Conditioning on the occupation minimum moves the critical value.
    assert!(rel(q1, c1) > 0.05);
}

/// Two-sample Kolmogorov–Smirnov statistic.
fn ks(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        d = d.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    d
}

#[test]
fn unsplit_coordinates_are_exchangeable() {
    let n = 10_000;
    let grid = 300;
    let mut plain = Vec::with_capacity(n);
    let mut swapped = Vec::with_capacity(n);
    for i in 0..n {
        let draw = limit_draw(Variant::Mb, 3, grid, 0.0, &mut draw_rng(21, i));
        if let Ok(d) = draw {
            plain.push(d.lambda_value);
        }
        let star = build_w0star(&draw_w0_path(3, grid, 0.0, &mut draw_rng(22, i)));
        let mut values = star.values.clone();
        for row in values.chunks_exact_mut(4) {
            row.swap(2, 3);
        }
        let permuted = GridPath { values, ..star };
        if let Ok(d) = lambda_limit_draw(&permuted, 0.0) {
            swapped.push(d.lambda_value);
        }
    }
    let (na, nb) = (plain.len() as f64, swapped.len() as f64);
    let d = ks(plain, swapped);
    let critical = 1.628 * ((na + nb) / (na * nb)).sqrt();
    assert!(d < critical, "KS {d} vs {critical}");
}

#[test]
fn design_paths_have_zero_w0() {
    let z = retained_path(DesignKind::Nonlinear, 500, 3);
    let mut y = vec![0.0];
    y.extend(z.y());
    let w0 = estimate_w0_from_series(&y, LagRule::Auto, Kernel::Bartlett).unwrap();
    assert_eq!(w0.value, 0.0);
}

#[test]
fn config_defaults_are_valid() {
    assert!(LimitSimConfig::new(Variant::Mb, 1).validate().is_ok());
}
