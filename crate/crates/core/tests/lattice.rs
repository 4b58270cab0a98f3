use std::collections::BTreeSet;

use pcnn::lattice::{ElevatedPoint, SimplexLocation};
use pcnn::rng::Rng;
use pcnn::{elevate, locate, neighbor_offsets, LatticeKey, LatticeMap};
use proptest::prelude::*;

fn random_feature(rng: &mut Rng, d: usize, range: f64) -> Vec<f64> {
    (0..d).map(|_| rng.uniform_in(-range, range)).collect()
}

fn reconstruct(loc: &SimplexLocation) -> Vec<f64> {
    let n = loc.vertices[0].dim();
    let mut out = vec![0.0; n];
    for (v, b) in loc.vertices.iter().zip(&loc.barycentric) {
        for (o, x) in out.iter_mut().zip(v.embedded()) {
            *o += b * x;
        }
    }
    out
}

#[test]
fn simplex_properties_hold_for_random_points() {
    let mut rng = Rng::new(42);
    for d in [1, 2, 3, 5] {
        for _ in 0..10_000 {
            let f = random_feature(&mut rng, d, 20.0);
            let p = elevate(&f).unwrap();
            let loc = locate(&p).unwrap();
            assert_eq!(loc.vertices.len(), d + 1);
            let sum: f64 = loc.barycentric.iter().sum();
            assert!(loc.barycentric.iter().all(|&b| b >= -1e-12), "{f:?}");
            assert!((sum - 1.0).abs() < 1e-12, "{f:?}: sum {sum}");
            for (a, b) in reconstruct(&loc).iter().zip(p.coords()) {
                assert!((a - b).abs() < 1e-9, "{f:?}");
            }
            for (k, v) in loc.vertices.iter().enumerate() {
                assert_eq!(v.remainder(), k);
            }
        }
    }
}

/// Barycentric weights by solving the `(d+1) x (d+1)` system
/// `sum_k b_k v_k[i] = p[i]` for `i < d` plus `sum_k b_k = 1` directly.
fn solve_barycentric(vertices: &[Vec<f64>], p: &[f64]) -> Vec<f64> {
    let n = vertices.len();
    let mut a = vec![vec![0.0; n + 1]; n];
    for i in 0..n {
        for k in 0..n {
            a[i][k] = if i + 1 < n { vertices[k][i] } else { 1.0 };
        }
        a[i][n] = if i + 1 < n { p[i] } else { 1.0 };
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for row in 0..n {
            if row != col {
                let f = a[row][col] / a[col][col];
                for j in col..=n {
                    a[row][j] -= f * a[col][j];
                }
            }
        }
    }
    (0..n).map(|i| a[i][n] / a[i][i]).collect()
}

#[test]
fn barycentric_weights_match_linear_solve() {
    let mut rng = Rng::new(7);
    for d in 1..=4 {
        for _ in 0..500 {
            let p = elevate(&random_feature(&mut rng, d, 5.0)).unwrap();
            let loc = locate(&p).unwrap();
            let verts: Vec<Vec<f64>> = loc.vertices.iter().map(|v| v.embedded()).collect();
            let solved = solve_barycentric(&verts, p.coords());
            for (a, b) in solved.iter().zip(&loc.barycentric) {
                assert!(
                    (a - b).abs() < 1e-9,
                    "d={d}: {solved:?} vs {:?}",
                    loc.barycentric
                );
            }
        }
    }
}

/// Every `sum_i c_i ((d+1) e_i - 1)` with `c` in `{0..s}^(d+1)`, deduplicated.
fn brute_force_offsets(d: usize, s: usize) -> BTreeSet<Vec<i32>> {
    let n = d + 1;
    let mut out = BTreeSet::new();
    let mut c = vec![0usize; n];
    loop {
        let total: i32 = c.iter().map(|&x| x as i32).sum();
        out.insert(c.iter().map(|&x| (n as i32) * x as i32 - total).collect());
        let mut i = 0;
        while i < n && c[i] == s {
            c[i] = 0;
            i += 1;
        }
        if i == n {
            return out;
        }
        c[i] += 1;
    }
}

#[test]
fn offset_tables_match_brute_force() {
    for d in 1..=5 {
        for s in 0..=3 {
            let table = neighbor_offsets(d, s).unwrap();
            let expected = brute_force_offsets(d, s);
            let got: BTreeSet<Vec<i32>> = table.iter().map(<[i32]>::to_vec).collect();
            assert_eq!(got.len(), table.len(), "duplicates for d={d} s={s}");
            assert_eq!(got, expected, "d={d} s={s}");
            assert_eq!(table.len(), (s + 1).pow(d as u32 + 1) - s.pow(d as u32 + 1));
        }
    }
    assert_eq!(neighbor_offsets(3, 2).unwrap().len(), 65);
}

#[test]
fn offsets_are_closed_under_negation() {
    for d in 1..=5 {
        for s in 0..=3 {
            let table = neighbor_offsets(d, s).unwrap();
            for n in 0..table.len() {
                let m = table.negated(n);
                assert_eq!(table.negated(m), n);
                let neg: Vec<i32> = table.offset(n).iter().map(|x| -x).collect();
                assert_eq!(table.offset(m), neg.as_slice());
            }
            assert!(table.offset(table.zero_index()).iter().all(|&x| x == 0));
        }
    }
}

fn random_remainder_zero(rng: &mut Rng, d: usize) -> Vec<i32> {
    let n = d + 1;
    let mut t: Vec<i32> = (0..d).map(|_| rng.below(9) as i32 - 4).collect();
    t.push(-t.iter().sum::<i32>());
    t.iter().map(|x| x * n as i32).collect()
}

#[test]
fn locate_is_translation_covariant() {
    let mut rng = Rng::new(3);
    for d in 1..=5 {
        for _ in 0..500 {
            let p = elevate(&random_feature(&mut rng, d, 3.0)).unwrap();
            let t = random_remainder_zero(&mut rng, d);
            let moved: Vec<f64> = p
                .coords()
                .iter()
                .zip(&t)
                .map(|(x, &t)| x + t as f64)
                .collect();
            let a = locate(&p).unwrap();
            let b = locate(&ElevatedPoint::new(moved).unwrap()).unwrap();
            for (va, vb) in a.vertices.iter().zip(&b.vertices) {
                let shifted: Vec<i32> = va.coords().iter().zip(&t).map(|(x, t)| x + t).collect();
                assert_eq!(vb.coords(), shifted.as_slice());
            }
            for (x, y) in a.barycentric.iter().zip(&b.barycentric) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }
}

fn random_key(rng: &mut Rng, d: usize) -> LatticeKey {
    let n = d + 1;
    let k = rng.below(n) as i32;
    let mut coords = random_remainder_zero(rng, d);
    // A remainder-k point: add k everywhere, then fix the sum on k coordinates.
    for (i, c) in coords.iter_mut().enumerate() {
        *c += if i < n - k as usize { k } else { k - n as i32 };
    }
    LatticeKey::new(coords).unwrap()
}

#[test]
fn lattice_map_round_trips_many_keys() {
    let mut rng = Rng::new(11);
    let d = 4;
    let keys: Vec<LatticeKey> = (0..100_000).map(|_| random_key(&mut rng, d)).collect();
    let mut map = LatticeMap::new(d);
    let indices: Vec<usize> = keys.iter().map(|k| map.insert(k)).collect();
    for (k, &i) in keys.iter().zip(&indices) {
        assert_eq!(map.lookup(k), Some(i));
        assert_eq!(&map.key(i), k);
    }
    let distinct: BTreeSet<Vec<i32>> = keys.iter().map(|k| k.coords().to_vec()).collect();
    assert_eq!(map.len(), distinct.len());
    let mut absent = 0;
    while absent < 1000 {
        let k = random_key(&mut rng, d);
        if !distinct.contains(k.coords()) {
            assert_eq!(map.lookup(&k), None);
            absent += 1;
        }
    }
}

proptest! {
    #[test]
    fn located_simplex_contains_the_point(
        f in prop::collection::vec(-1e3f64..1e3, 1..7)
    ) {
        let p = elevate(&f).unwrap();
        let loc = locate(&p).unwrap();
        let sum: f64 = loc.barycentric.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(loc.barycentric.iter().all(|&b| b >= -1e-12));
        for (a, b) in reconstruct(&loc).iter().zip(p.coords()) {
            prop_assert!((a - b).abs() < 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn elevation_is_invertible(f in prop::collection::vec(-50f64..50.0, 1..7)) {
        let p = elevate(&f).unwrap();
        let back = pcnn::lattice::feature_from_elevated(p.coords());
        for (a, b) in back.iter().zip(&f) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert!(p.coords().iter().sum::<f64>().abs() < 1e-9);
    }
}
