//! Convex hull facets checked against an LP membership test and against
//! brute-force enumeration of supporting hyperplanes.

use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wcm_core::hull::{affine_dimension, convex_hull, Facet, PointCloud, COPLANAR_TOL};
use wcm_core::lp::{solve, LinearProgram, LpSolution, Sense};
use wcm_core::{build_generating_matrices, modified_generators, Contact, ContactConfiguration, Vec3};

mod common;

/// `∃λ ≥ 0, Σλ = 1, Σλ·p = q`.
fn lp_contains(points: &[Vec<f64>], q: &[f64]) -> bool {
    let n = points.len();
    let mut program = LinearProgram::minimize(vec![0.0; n]).nonnegative();
    program.add_constraint(vec![1.0; n], Sense::Eq, 1.0);
    for k in 0..q.len() {
        program.add_constraint(points.iter().map(|p| p[k]).collect(), Sense::Eq, q[k]);
    }
    matches!(solve(&program).unwrap(), LpSolution::Optimal { .. })
}

fn cloud(points: &[Vec<f64>]) -> PointCloud {
    PointCloud::from_points(points[0].len(), points.iter()).unwrap()
}

fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect()
}

/// Every hyperplane through `d` of the points that has all points on one
/// side, as unit inward normals, deduplicated.
fn brute_force_facets(points: &[Vec<f64>]) -> Vec<Facet> {
    let d = points[0].len();
    let n = points.len();
    let mut found: Vec<Facet> = Vec::new();
    let mut idx: Vec<usize> = (0..d).collect();
    loop {
        // d − 1 difference rows plus a zero row so the SVD returns all of V.
        let mut m = DMatrix::<f64>::zeros(d, d);
        for (r, &i) in idx.iter().enumerate().skip(1) {
            for k in 0..d {
                m[(r - 1, k)] = points[i][k] - points[idx[0]][k];
            }
        }
        let svd = m.clone().svd(false, true);
        let vt = svd.v_t.unwrap();
        let sv = &svd.singular_values;
        let smallest = (0..d).min_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap();
        let second = (0..d).filter(|&k| k != smallest).map(|k| sv[k]).fold(f64::INFINITY, f64::min);
        if second > 1e-8 {
            let normal: Vec<f64> = vt.row(smallest).iter().copied().collect();
            let offset: f64 = normal.iter().zip(&points[idx[0]]).map(|(a, b)| a * b).sum();
            let slacks: Vec<f64> = points.iter().map(|p| normal.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() - offset).collect();
            let lo = slacks.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = slacks.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let facet = if lo >= -1e-9 {
                Some(Facet { normal, offset })
            } else if hi <= 1e-9 {
                Some(Facet { normal: normal.iter().map(|c| -c).collect(), offset: -offset })
            } else {
                None
            };
            if let Some(f) = facet {
                if !found.iter().any(|g| same_facet(g, &f, 1e-7)) {
                    found.push(f);
                }
            }
        }
        // next combination
        let mut k = d;
        loop {
            if k == 0 {
                return found;
            }
            k -= 1;
            if idx[k] < n - d + k {
                idx[k] += 1;
                for j in k + 1..d {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn same_facet(a: &Facet, b: &Facet, tol: f64) -> bool {
    a.normal.iter().zip(&b.normal).all(|(x, y)| (x - y).abs() <= tol) && (a.offset - b.offset).abs() <= tol
}

fn same_facet_sets(a: &[Facet], b: &[Facet], tol: f64) -> bool {
    a.len() == b.len() && a.iter().all(|f| b.iter().any(|g| same_facet(f, g, tol)))
}

#[test]
fn facets_match_brute_force_in_3d_and_4d() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..30 {
        let d = 3 + trial % 2;
        let points = random_points(&mut rng, 9 + trial % 4, d);
        let hull = convex_hull(&cloud(&points)).unwrap();
        assert_eq!(hull.affine_dim, d);
        let brute = brute_force_facets(&points);
        assert!(same_facet_sets(&hull.facets, &brute, 1e-7), "trial {trial}: {} vs {}", hull.facets.len(), brute.len());
    }
}

#[test]
fn cube_with_interior_points_matches_brute_force() {
    let mut points: Vec<Vec<f64>> = Vec::new();
    for i in 0..8 {
        points.push((0..3).map(|k| if i >> k & 1 == 1 { 1.0 } else { -1.0 }).collect());
    }
    points.push(vec![0.1, 0.2, -0.3]);
    points.push(vec![1.0, 0.0, 0.0]);
    let hull = convex_hull(&cloud(&points)).unwrap();
    assert_eq!(hull.facets.len(), 6);
    assert!(same_facet_sets(&hull.facets, &brute_force_facets(&points), 1e-9));
}

#[test]
fn membership_agrees_with_lp_in_5d() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let points = random_points(&mut rng, 30, 5);
    let hull = convex_hull(&cloud(&points)).unwrap();
    let mut inside = 0;
    let mut outside = 0;
    for i in 0..1000 {
        let q: Vec<f64> = if i % 2 == 0 {
            let w: Vec<f64> = (0..points.len()).map(|_| rng.random_range(0.0..1.0f64).powi(4)).collect();
            let s: f64 = w.iter().sum();
            (0..5).map(|k| points.iter().zip(&w).map(|(p, a)| p[k] * a / s).sum()).collect()
        } else {
            let base = &points[rng.random_range(0..points.len())];
            base.iter().map(|c| c + rng.random_range(-0.3..0.3)).collect()
        };
        let margin = hull.margin(&q);
        if margin.abs() < 1e-9 {
            continue;
        }
        assert_eq!(margin > 0.0, lp_contains(&points, &q), "query {i}");
        if margin > 0.0 { inside += 1 } else { outside += 1 }
    }
    assert!(inside > 300 && outside > 100, "{inside} {outside}");
}

#[test]
fn degenerate_membership_agrees_with_lp() {
    // Points on a 3-dimensional affine subspace of R^5.
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let base: Vec<Vec<f64>> = random_points(&mut rng, 3, 5);
    let origin = [0.3, -0.2, 0.1, 0.5, 0.0];
    let points: Vec<Vec<f64>> = (0..20)
        .map(|_| {
            let c: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            (0..5).map(|k| origin[k] + (0..3).map(|j| c[j] * base[j][k]).sum::<f64>()).collect()
        })
        .collect();
    let hull = convex_hull(&cloud(&points)).unwrap();
    assert_eq!(hull.affine_dim, 3);
    assert_eq!(hull.equalities.len(), 2);
    for i in 0..400 {
        let a = &points[rng.random_range(0..points.len())];
        let b = &points[rng.random_range(0..points.len())];
        let t = rng.random_range(-0.5..1.5);
        let mut q: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect();
        if i % 3 == 0 {
            q[i % 5] += rng.random_range(-0.01..0.01);
        }
        let margin = hull.margin(&q);
        if margin.abs() < 1e-9 {
            continue;
        }
        assert_eq!(margin > 0.0, lp_contains(&points, &q), "query {i}");
    }
}

#[test]
fn jittered_lattice_membership_agrees_with_lp() {
    // Many coplanar and nearly coplanar points: the hardest input for the
    // incremental construction.
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for (d, jitter) in [(3, 1e-9), (4, 1e-8), (5, 1e-10), (5, 1e-7)] {
        let mut points: Vec<Vec<f64>> = Vec::new();
        for code in 0..3usize.pow(d as u32) {
            let base: Vec<f64> = (0..d).map(|k| (code / 3usize.pow(k as u32) % 3) as f64 - 1.0).collect();
            points.push(base.iter().map(|c| c + jitter * rng.random_range(-1.0..1.0)).collect());
            if code % 4 == 0 {
                points.push(base.iter().map(|c| c + jitter * rng.random_range(-1.0..1.0)).collect());
            }
        }
        let hull = convex_hull(&cloud(&points)).unwrap();
        assert_eq!(hull.affine_dim, d);
        for p in &points {
            assert!(hull.contains(p, 1e-9));
        }
        for i in 0..300 {
            let q: Vec<f64> = (0..d).map(|_| rng.random_range(-1.3..1.3)).collect();
            let margin = hull.margin(&q);
            if margin.abs() < 1e-6 {
                continue;
            }
            assert_eq!(margin > 0.0, lp_contains(&points, &q), "d {d} jitter {jitter} query {i}");
        }
    }
}

#[test]
fn facets_are_reproduced_from_their_incident_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let points = random_points(&mut rng, 14, 4);
    let hull = convex_hull(&cloud(&points)).unwrap();
    for f in &hull.facets {
        let incident: Vec<Vec<f64>> = points.iter().filter(|p| f.slack(p).abs() <= 1e-9).cloned().collect();
        assert!(incident.len() >= 4);
        let sub = convex_hull(&cloud(&incident)).unwrap();
        assert_eq!(sub.affine_dim, 3);
        let eq = &sub.equalities[0];
        let flipped = Facet { normal: eq.normal.iter().map(|c| -c).collect(), offset: -eq.offset };
        assert!(same_facet(eq, f, 1e-8) || same_facet(&flipped, f, 1e-8));
    }
}

#[test]
fn sixteen_generic_generator_points_span_five_dimensions() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let contacts = (0..4)
        .map(|_| {
            let p = Vec3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(0.0..0.3));
            let n = Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), 1.0);
            Contact::with_normal(p, n, common::cone(0.8)).unwrap()
        })
        .collect();
    let config = ContactConfiguration::new(contacts).unwrap();
    let gen = build_generating_matrices(&config, &Vec3::new(0.0, 0.0, 0.9));
    let modified = modified_generators(&gen, &Vec3::z()).unwrap();
    let pc = modified.projected_points();
    assert_eq!(pc.len(), 16);
    assert_eq!(affine_dimension(&pc, COPLANAR_TOL).dim, 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn permuted_input_gives_the_same_facets(seed in any::<u64>(), d in 2usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = random_points(&mut rng, d + 6, d);
        let mut shuffled = points.clone();
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, rng.random_range(0..=i));
        }
        let a = convex_hull(&cloud(&points)).unwrap();
        let b = convex_hull(&cloud(&shuffled)).unwrap();
        prop_assert!(same_facet_sets(&a.facets, &b.facets, 1e-9));
    }

    #[test]
    fn every_input_point_is_inside(seed in any::<u64>(), d in 1usize..=6, n in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let points = random_points(&mut rng, n, d);
        let hull = convex_hull(&cloud(&points)).unwrap();
        for f in hull.facets.iter().chain(&hull.equalities) {
            let norm: f64 = f.normal.iter().map(|c| c * c).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-12);
        }
        for p in &points {
            prop_assert!(hull.contains(p, 1e-9));
        }
        prop_assert!(hull.affine_dim <= d.min(n.saturating_sub(1)));
    }
}
