//! Property checks and brute-force oracles shared by the invariant and acceptance suites.
//!
//! Every `suite_*` function runs one property for [`CASES`] random cases and returns the
//! first counterexample as an error string.

#![allow(dead_code)]

use std::collections::{BTreeSet, VecDeque};

use maskiso::classify::{self, Task};
use maskiso::dataset::{self, AnnotationTable, FaceId, FaceRecord, FaceVector, Labels, Subset};
use maskiso::eigenface;
use maskiso::image::{self, GrayImage};
use maskiso::manifold;
use maskiso::netmetrics;
use maskiso::patching::{self, PatchBand, PatchParams, RegionFeatures};
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

pub const CASES: u32 = 128;

pub fn run<S: Strategy>(
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    run_n(CASES, strategy, test)
}

pub fn run_n<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

// ---------------------------------------------------------------- generators

pub fn gray_image(max_rows: usize, max_cols: usize) -> impl Strategy<Value = GrayImage> {
    (1..=max_rows, 1..=max_cols).prop_flat_map(|(r, c)| {
        prop::collection::vec(any::<u8>(), r * c)
            .prop_map(move |px| GrayImage::new(r, c, px).expect("dimensions match"))
    })
}

/// Connected undirected graph: a random spanning tree plus random extra edges.
pub fn connected_graph(min_n: usize, max_n: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    (min_n..=max_n)
        .prop_flat_map(|n| {
            let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|i| (0..i).boxed()).collect();
            (Just(n), parents, prop::collection::vec(any::<bool>(), n * n))
        })
        .prop_map(|(n, parents, extra)| {
            let mut edges = BTreeSet::new();
            for (i, p) in parents.into_iter().enumerate() {
                edges.insert((p, i + 1));
            }
            for u in 0..n {
                for v in u + 1..n {
                    if extra[u * n + v] && extra[v * n + u] {
                        edges.insert((u, v));
                    }
                }
            }
            adjacency(n, &edges)
        })
}

/// Undirected graph, possibly disconnected, with at least two nodes.
pub fn any_graph(max_n: usize) -> impl Strategy<Value = Vec<Vec<usize>>> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec(prop::bool::weighted(0.35), n * (n - 1) / 2).prop_map(move |bits| {
            let mut edges = BTreeSet::new();
            let mut it = bits.into_iter();
            for u in 0..n {
                for v in u + 1..n {
                    if it.next().unwrap_or(false) {
                        edges.insert((u, v));
                    }
                }
            }
            adjacency(n, &edges)
        })
    })
}

pub fn adjacency(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    for list in &mut adj {
        list.sort_unstable();
    }
    adj
}

pub fn points(min_n: usize, max_n: usize, dim: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-100.0..100.0f64, dim), min_n..=max_n)
}

pub fn planar(min_n: usize, max_n: usize) -> impl Strategy<Value = Vec<[f64; 2]>> {
    prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64).prop_map(|(x, y)| [x, y]), min_n..=max_n)
}

pub fn face_vectors(max_n: usize, max_q: usize) -> impl Strategy<Value = Vec<FaceVector>> {
    (2..=max_n, 1..=max_q).prop_flat_map(|(n, q)| {
        prop::collection::vec(prop::collection::vec(0.0..255.0f64, q), n).prop_map(|cols| {
            cols.into_iter()
                .enumerate()
                .map(|(i, values)| FaceVector {
                    face_id: FaceId::from_index(i),
                    values,
                })
                .collect()
        })
    })
}

pub fn labels_for(n: usize) -> impl Strategy<Value = AnnotationTable> {
    prop::collection::vec(0..=1u8, n).prop_map(|bits| {
        AnnotationTable::from_labels(bits.into_iter().enumerate().map(|(i, b)| {
            (
                FaceId::from_index(i),
                Labels {
                    glasses: b,
                    smile: 1 - b,
                },
            )
        }))
    })
}

fn region_features() -> impl Strategy<Value = RegionFeatures> {
    (1..400usize, 0.0..90.0f64, 0.0..90.0f64, 1.0..20.0f64, 1.0..12.0f64, -89.9..90.0f64).prop_map(
        |(area, r, c, psi, ratio, theta)| RegionFeatures {
            region_id: 0,
            area,
            centroid: (r, c),
            rho: psi * ratio,
            psi,
            theta,
        },
    )
}

// ---------------------------------------------------------------- oracles

/// Betweenness by enumerating every shortest path between every unordered pair.
pub fn brute_betweenness(adj: &[Vec<usize>]) -> Vec<f64> {
    let n = adj.len();
    let mut b = vec![0.0; n];
    for s in 0..n {
        let dist = bfs(adj, s);
        for t in s + 1..n {
            if dist[t] == usize::MAX {
                continue;
            }
            let mut paths = Vec::new();
            let mut path = vec![s];
            enumerate_paths(adj, &dist, t, &mut path, &mut paths);
            let mut through = vec![0usize; n];
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    through[v] += 1;
                }
            }
            for v in 0..n {
                b[v] += through[v] as f64 / paths.len() as f64;
            }
        }
    }
    b
}

fn bfs(adj: &[Vec<usize>], s: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(u) = q.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                q.push_back(v);
            }
        }
    }
    dist
}

fn enumerate_paths(
    adj: &[Vec<usize>],
    dist: &[usize],
    t: usize,
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    let u = *path.last().unwrap();
    if u == t {
        out.push(path.clone());
        return;
    }
    for &v in &adj[u] {
        if dist[v] == dist[u] + 1 && dist[v] <= dist[t] {
            path.push(v);
            enumerate_paths(adj, dist, t, path, out);
            path.pop();
        }
    }
}

/// Fewest edges separating `s` from `t`, over every vertex bipartition.
pub fn brute_min_cut(adj: &[Vec<usize>], s: usize, t: usize) -> usize {
    let n = adj.len();
    let others: Vec<usize> = (0..n).filter(|&v| v != s && v != t).collect();
    let mut best = usize::MAX;
    for mask in 0u32..(1 << others.len()) {
        let mut side = vec![false; n];
        side[s] = true;
        for (bit, &v) in others.iter().enumerate() {
            side[v] = mask >> bit & 1 == 1;
        }
        let crossing = (0..n)
            .flat_map(|u| adj[u].iter().map(move |&v| (u, v)))
            .filter(|&(u, v)| u < v && side[u] != side[v])
            .count();
        best = best.min(crossing);
    }
    best
}

/// Eigenvalues of the explicit `q x q` covariance `A A^T`, descending.
pub fn covariance_spectrum(columns: &[Vec<f64>]) -> Vec<f64> {
    let q = columns[0].len();
    let a = DMatrix::from_fn(q, columns.len(), |i, j| columns[j][i]);
    let cov = &a * a.transpose();
    let mut values: Vec<f64> = cov.symmetric_eigen().eigenvalues.iter().copied().collect();
    values.sort_by(|x, y| y.total_cmp(x));
    values
}

/// Probability that a random positive outscores a random negative, ties counting half.
pub fn mann_whitney_auc(scores: &[f64], truth: &[u8]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if truth[i] == 1 && truth[j] == 0 {
                pairs += 1.0;
                if si > sj {
                    wins += 1.0;
                } else if si == sj {
                    wins += 0.5;
                }
            }
        }
    }
    wins / pairs
}

pub fn pairwise(points: &[[f64; 2]]) -> Vec<f64> {
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt();
        }
    }
    d
}

fn nonzero(values: &[f64], scale: f64) -> Vec<f64> {
    values.iter().copied().filter(|v| *v > 1e-9 * scale).collect()
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300)
}

// ---------------------------------------------------------------- dataset / image

pub fn suite_pgm_round_trip() -> Result<(), String> {
    run((gray_image(24, 24), any::<bool>()), |(img, comment)| {
        let bytes = if comment {
            image::encode_pgm_with_comment(&img, Some("written by a test"))
        } else {
            image::encode_pgm(&img)
        };
        let back = image::decode_pgm(&bytes).map_err(|e| TestCaseError::fail(e.to_string()))?;
        prop_assert_eq!(&back, &img);
        prop_assert_eq!(image::encode_pgm(&back), image::encode_pgm(&img));
        Ok(())
    })
}

pub fn suite_resize_idempotent() -> Result<(), String> {
    run((gray_image(20, 20), 1..30usize, 1..30usize), |(img, r, c)| {
        let once = image::resize(&img, r, c).unwrap();
        let twice = image::resize(&once, r, c).unwrap();
        prop_assert_eq!(twice, once);
        Ok(())
    })
}

pub fn suite_flatten_bijection() -> Result<(), String> {
    run(gray_image(20, 20), |img| {
        let v = image::flatten(&img);
        prop_assert_eq!(v.len(), img.rows() * img.cols());
        let back = image::unflatten(&v, img.rows(), img.cols()).unwrap();
        prop_assert_eq!(back, img);
        Ok(())
    })
}

pub fn suite_corpus_order_is_stable() -> Result<(), String> {
    let layout = (
        prop::collection::btree_set(1..15u32, 1..5),
        prop::collection::btree_set(1..=10u32, 1..4),
    );
    run(layout, |(subjects, indices)| {
        let dir = tempfile::tempdir().unwrap();
        let mut written = Vec::new();
        for &s in &subjects {
            for &j in &indices {
                let img = GrayImage::filled(3, 2, (s * 10 + j) as u8).unwrap();
                let path = dataset::image_path(dir.path(), s, j);
                std::fs::create_dir_all(path.parent().unwrap()).unwrap();
                image::write_pgm(&img, &path).unwrap();
                written.push((s, j));
            }
        }
        let subset = Subset::Indices(indices.iter().copied().collect());
        let a = dataset::load_corpus(dir.path(), &subset).unwrap();
        let b = dataset::load_corpus(dir.path(), &subset).unwrap();
        prop_assert_eq!(&a, &b);
        let order: Vec<(u32, u32)> = a.iter().map(|r| (r.subject_id, r.image_index)).collect();
        prop_assert_eq!(order, written);
        for (i, rec) in a.iter().enumerate() {
            prop_assert_eq!(rec.face_id, FaceId::from_index(i));
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- patching

pub fn suite_patch_idempotent_and_energy() -> Result<(), String> {
    let input = gray_image(30, 12).prop_flat_map(|img| {
        let rows = img.rows();
        (Just(img), 0..rows, 0..20usize, any::<bool>())
    });
    run(input, |(img, center, half, lift)| {
        // lifted images have no zero pixels, so any zeroed row loses energy
        let img = if lift {
            GrayImage::from_fn(img.rows(), img.cols(), |r, c| img.get(r, c).max(1)).unwrap()
        } else {
            img
        };
        let band = PatchBand::new(center, half, img.rows());
        let once = patching::apply_patch(&img, &band);
        prop_assert_eq!(&patching::apply_patch(&once, &band), &once);
        prop_assert!(once.energy() <= img.energy());
        let covers_all = band.row_lo == 0 && band.row_hi + 1 == img.rows();
        if lift {
            prop_assert_eq!(once.energy() == img.energy(), covers_all);
        } else if covers_all {
            prop_assert_eq!(once.energy(), img.energy());
        }
        Ok(())
    })
}

fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

pub fn suite_moments_translation() -> Result<(), String> {
    let input = (
        prop::collection::btree_set((0..12usize, 0..12usize), 2..40),
        0..50usize,
        0..50usize,
    );
    run(input, |(set, dr, dc)| {
        let pixels: Vec<(usize, usize)> = set.into_iter().collect();
        let moved: Vec<(usize, usize)> = pixels.iter().map(|&(r, c)| (r + dr, c + dc)).collect();
        let a = patching::region_moments(0, &pixels);
        let b = patching::region_moments(0, &moved);
        prop_assert!((b.centroid.0 - a.centroid.0 - dr as f64).abs() < 1e-9);
        prop_assert!((b.centroid.1 - a.centroid.1 - dc as f64).abs() < 1e-9);
        prop_assert!(rel_close(a.rho, b.rho, 1e-9));
        prop_assert!(rel_close(a.psi, b.psi, 1e-9));
        // orientation is only defined when the two axes differ
        if a.rho - a.psi > 1e-6 * a.rho {
            prop_assert!(angle_gap(a.theta, b.theta) < 1e-6, "{} vs {}", a.theta, b.theta);
        }
        Ok(())
    })
}

fn rectangle(h: usize, w: usize) -> Vec<(usize, usize)> {
    (0..h).flat_map(|r| (0..w).map(move |c| (r + 3, c + 5))).collect()
}

pub fn suite_moments_scale() -> Result<(), String> {
    run((1..8usize, 1..15usize, 2..5usize), |(h, w, s)| {
        let a = patching::region_moments(0, &rectangle(h, w));
        let b = patching::region_moments(0, &rectangle(h * s, w * s));
        let s = s as f64;
        prop_assert!((b.rho / a.rho - s).abs() <= 0.05 * s);
        prop_assert!((b.psi / a.psi - s).abs() <= 0.05 * s);
        prop_assert!(rel_close(a.ratio(), b.ratio(), 1e-9));
        let p = PatchParams::default();
        // a ratio sitting exactly on a threshold is decided by rounding
        let on_edge = [p.eye_ratio_lo, p.eye_ratio_hi, p.mouth_ratio]
            .iter()
            .any(|t| (a.ratio() - t).abs() < 1e-9);
        prop_assume!(!on_edge);
        let single = |f: RegionFeatures| {
            (
                patching::select_eye_region(&[f], &p).is_ok(),
                patching::select_mouth_region(&[f], &p).is_ok(),
            )
        };
        prop_assert_eq!(single(a), single(b));
        Ok(())
    })
}

pub fn suite_selection_membership() -> Result<(), String> {
    run(prop::collection::vec(region_features(), 0..12), |mut regions| {
        for (i, r) in regions.iter_mut().enumerate() {
            r.region_id = i;
        }
        let p = PatchParams::default();
        if let Ok(eye) = patching::select_eye_region(&regions, &p) {
            prop_assert!(regions.contains(&eye));
            prop_assert!(eye.ratio() > p.eye_ratio_lo && eye.ratio() < p.eye_ratio_hi);
            for r in regions.iter().filter(|r| r.ratio() > p.eye_ratio_lo && r.ratio() < p.eye_ratio_hi) {
                prop_assert!(eye.theta.abs() <= r.theta.abs());
            }
        } else {
            prop_assert!(!regions.iter().any(|r| r.ratio() > p.eye_ratio_lo && r.ratio() < p.eye_ratio_hi));
        }
        if let Ok(mouth) = patching::select_mouth_region(&regions, &p) {
            prop_assert!(regions.contains(&mouth));
            prop_assert!(mouth.ratio() > p.mouth_ratio);
        } else {
            prop_assert!(!regions.iter().any(|r| r.ratio() > p.mouth_ratio));
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- eigenface

fn fitted(vectors: &[FaceVector]) -> eigenface::EigenfaceModel {
    eigenface::fit(vectors).expect("random corpora decompose")
}

pub fn suite_gram_psd() -> Result<(), String> {
    run(face_vectors(8, 16), |vectors| {
        let m = fitted(&vectors);
        let trace = m.signature.trace();
        let raw = m.signature.entries.clone().symmetric_eigen().eigenvalues;
        for v in raw.iter() {
            prop_assert!(*v >= -1e-8 * trace.max(1.0), "{v} with trace {trace}");
        }
        for v in &m.system.eigenvalues {
            prop_assert!(*v >= 0.0);
        }
        Ok(())
    })
}

/// Nonzero Gram eigenvalues against the explicit covariance, `cases` corpora with n <= 6, q <= 12.
pub fn gram_spectrum_equivalence(cases: u32) -> Result<(), String> {
    run_n(cases, face_vectors(6, 12), |vectors| {
        let m = fitted(&vectors);
        let trace = m.signature.trace();
        let ours = nonzero(&m.system.eigenvalues, trace);
        let oracle = nonzero(&covariance_spectrum(&m.faces.columns), trace);
        prop_assert_eq!(ours.len(), oracle.len(), "{:?} vs {:?}", ours, oracle);
        for (a, b) in ours.iter().zip(&oracle) {
            prop_assert!(rel_close(*a, *b, 1e-6), "{a} vs {b}");
        }
        Ok(())
    })
}

pub fn suite_gram_spectrum() -> Result<(), String> {
    gram_spectrum_equivalence(CASES)
}

pub fn suite_energy_residual_orthogonality() -> Result<(), String> {
    run(face_vectors(8, 16), |vectors| {
        let m = fitted(&vectors);
        let sys = &m.system;
        let energy: f64 = m.faces.columns.iter().flatten().map(|x| x * x).sum();
        let total: f64 = sys.eigenvalues.iter().sum();
        prop_assert!(rel_close(total, energy, 1e-6) || energy < 1e-12, "{total} vs {energy}");
        let norm = m.signature.entries.norm();
        for i in 0..sys.retained() {
            let r = eigenface::eigen_residual(&m.signature, sys, i);
            prop_assert!(r <= 1e-7 * norm.max(1e-300), "residual {r} vs norm {norm}");
        }
        for i in 0..sys.retained() {
            for j in i + 1..sys.retained() {
                let dot: f64 = sys.eigenfaces[i].iter().zip(&sys.eigenfaces[j]).map(|(a, b)| a * b).sum();
                prop_assert!(dot.abs() <= 1e-6, "u{i}.u{j} = {dot}");
            }
        }
        Ok(())
    })
}

// ---------------------------------------------------------------- manifold

pub fn suite_graph_symmetry() -> Result<(), String> {
    run((points(3, 25, 3), 1..6usize), |(pts, k)| {
        let k = k.min(pts.len() - 1);
        let g = manifold::knn_graph(&pts, k).unwrap();
        let n = g.n();
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(g.has_edge(i, j), g.has_edge(j, i));
            }
        }
        let geo = manifold::geodesics(&g);
        for i in 0..n {
            for j in 0..n {
                prop_assert_eq!(geo.distances[i * n + j].to_bits(), geo.distances[j * n + i].to_bits());
            }
        }
        Ok(())
    })
}

pub fn suite_geodesic_dominates_direct() -> Result<(), String> {
    run((points(3, 25, 4), 1..6usize), |(pts, k)| {
        let k = k.min(pts.len() - 1);
        let g = manifold::knn_graph(&pts, k).unwrap();
        let geo = manifold::geodesics(&g);
        let n = g.n();
        for i in 0..n {
            for j in 0..n {
                let d = geo.distances[i * n + j];
                prop_assert!(d.is_finite());
                prop_assert!(d >= g.distance(i, j) - 1e-9, "({i},{j}): {d} < {}", g.distance(i, j));
            }
        }
        Ok(())
    })
}

pub fn suite_knn_monotone() -> Result<(), String> {
    run((points(3, 25, 3), 1..8usize), |(pts, k)| {
        let k = k.min(pts.len() - 2).max(1);
        prop_assume!(k + 1 < pts.len());
        let small = manifold::knn_graph(&pts, k).unwrap();
        let big = manifold::knn_graph(&pts, k + 1).unwrap();
        for (u, v) in small.edges() {
            prop_assert!(big.has_edge(u, v), "edge ({u},{v}) lost at k={}", k + 1);
        }
        Ok(())
    })
}

fn sorted_pairwise(coords: &[[f64; 2]]) -> Vec<f64> {
    let n = coords.len();
    let d = pairwise(coords);
    let mut out: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| d[i * n + j]).collect();
    out.sort_by(f64::total_cmp);
    out
}

pub fn suite_mds_permutation_invariance() -> Result<(), String> {
    let input = planar(3, 15).prop_flat_map(|pts| {
        let n = pts.len();
        (Just(pts), Just((0..n).collect::<Vec<usize>>()).prop_shuffle())
    });
    run(input, |(pts, perm)| {
        let n = pts.len();
        let d = pairwise(&pts);
        let dp: Vec<f64> = (0..n * n).map(|x| d[perm[x / n] * n + perm[x % n]]).collect();
        let (a, b) = match (manifold::mds_embed(&d, n), manifold::mds_embed(&dp, n)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(_), Err(_)) => return Ok(()),
            (a, b) => return Err(TestCaseError::fail(format!("{a:?} vs {b:?}"))),
        };
        let scale = d.iter().copied().fold(0.0, f64::max).max(1.0);
        for (x, y) in sorted_pairwise(&a).iter().zip(sorted_pairwise(&b)) {
            prop_assert!((x - y).abs() <= 1e-9 * scale, "{x} vs {y}");
        }
        Ok(())
    })
}

/// Classical MDS recovers planar configurations; `cases` sets of up to 20 points.
pub fn mds_exact_recovery(cases: u32) -> Result<(), String> {
    run_n(cases, planar(3, 20), |pts| {
        let n = pts.len();
        let d = pairwise(&pts);
        let coords = manifold::mds_embed(&d, n);
        // collinear sets have a single positive eigenvalue and are rejected
        let Ok(coords) = coords else {
            return Ok(());
        };
        let e = pairwise(&coords);
        let scale = d.iter().copied().fold(0.0, f64::max);
        for i in 0..n * n {
            prop_assert!((d[i] - e[i]).abs() <= 1e-6 * scale.max(d[i]), "{} vs {}", d[i], e[i]);
        }
        Ok(())
    })
}

pub fn suite_mds_exact_recovery() -> Result<(), String> {
    mds_exact_recovery(CASES)
}

// ---------------------------------------------------------------- classify

fn planar_with_labels() -> impl Strategy<Value = (Vec<[f64; 2]>, AnnotationTable)> {
    planar(3, 30).prop_flat_map(|pts| {
        let n = pts.len();
        (Just(pts), labels_for(n))
    })
}

pub fn suite_partition_and_extremality() -> Result<(), String> {
    run(planar_with_labels(), |(pts, ann)| {
        let r = classify::classify(pts.as_slice(), &ann, Task::Glasses, 5).unwrap();
        let n = pts.len();
        prop_assert_eq!(r.confusion.total(), n - 2);
        prop_assert_eq!(r.per_face.len(), n - 2);
        prop_assert!(!r.per_face.contains_key(&r.seeds.z1) && !r.per_face.contains_key(&r.seeds.z2));
        let d = pairwise(&pts);
        for v in &d {
            prop_assert!(*v <= r.seeds.separation);
        }
        Ok(())
    })
}

pub fn suite_label_flip() -> Result<(), String> {
    run(planar_with_labels(), |(pts, ann)| {
        let a = classify::classify(pts.as_slice(), &ann, Task::Glasses, 5).unwrap();
        let b = classify::classify(pts.as_slice(), &ann.inverted(), Task::Glasses, 5).unwrap();
        prop_assert_eq!((a.confusion.tp, a.confusion.fp), (b.confusion.tn, b.confusion.fn_));
        prop_assert_eq!((a.confusion.tn, a.confusion.fn_), (b.confusion.tp, b.confusion.fp));
        let same = |x: f64, y: f64| (x.is_nan() && y.is_nan()) || (x - y).abs() < 1e-12;
        prop_assert!(same(a.metrics.sen, b.metrics.spec));
        prop_assert!(same(a.metrics.spec, b.metrics.sen));
        prop_assert!(same(a.metrics.acc, b.metrics.acc));
        Ok(())
    })
}

fn near_ties(pts: &[[f64; 2]], tol: f64) -> bool {
    let d = pairwise(pts);
    let n = pts.len();
    let mut upper: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| d[i * n + j]).collect();
    upper.sort_by(|a, b| b.total_cmp(a));
    upper.len() > 1 && upper[0] - upper[1] < tol
}

pub fn suite_isometry_invariance() -> Result<(), String> {
    let input = (planar_with_labels(), 0.0..std::f64::consts::TAU, -50.0..50.0f64, -50.0..50.0f64, any::<bool>());
    run(input, |((pts, ann), angle, tx, ty, mirror)| {
        prop_assume!(!near_ties(&pts, 1e-6));
        let (s, c) = angle.sin_cos();
        let moved: Vec<[f64; 2]> = pts
            .iter()
            .map(|&[x, y]| {
                let y = if mirror { -y } else { y };
                [c * x - s * y + tx, s * x + c * y + ty]
            })
            .collect();
        let a = classify::classify(pts.as_slice(), &ann, Task::Glasses, 5).unwrap();
        prop_assume!(a.per_face.values().all(|f| f.score.abs() > 1e-6));
        let b = classify::classify(moved.as_slice(), &ann, Task::Glasses, 5).unwrap();
        prop_assert_eq!((a.seeds.z1, a.seeds.z2), (b.seeds.z1, b.seeds.z2));
        prop_assert_eq!(a.confusion, b.confusion);
        for (id, f) in &a.per_face {
            prop_assert_eq!(f.assigned, b.per_face[id].assigned);
        }
        let same = |x: f64, y: f64| (x.is_nan() && y.is_nan()) || (x - y).abs() < 1e-9;
        prop_assert!(same(a.metrics.auc, b.metrics.auc));
        Ok(())
    })
}

pub fn suite_auc_bounds_and_oracle() -> Result<(), String> {
    let input = (2..40usize).prop_flat_map(|n| {
        (
            prop::collection::vec(prop_oneof![-5i32..5, Just(0)].prop_map(f64::from), n),
            prop::collection::vec(0..=1u8, n),
            any::<f64>().prop_filter("finite", |x| x.is_finite()),
        )
    });
    run(input, |(scores, truth, constant)| {
        let auc = classify::roc_auc(&scores, &truth);
        let pos = truth.iter().filter(|&&t| t == 1).count();
        if pos == 0 || pos == truth.len() {
            prop_assert!(auc.is_nan());
            return Ok(());
        }
        prop_assert!((0.0..=1.0).contains(&auc));
        prop_assert!((auc - mann_whitney_auc(&scores, &truth)).abs() < 1e-12);
        let flat = vec![constant; scores.len()];
        prop_assert_eq!(classify::roc_auc(&flat, &truth), 0.5);
        Ok(())
    })
}

// ---------------------------------------------------------------- netmetrics

/// Brandes against path enumeration on `cases` connected graphs with at most 7 nodes.
pub fn brandes_matches_enumeration(cases: u32) -> Result<(), String> {
    run_n(cases, connected_graph(2, 7), |adj| {
        let fast = netmetrics::betweenness(&adj);
        let slow = brute_betweenness(&adj);
        for (a, b) in fast.iter().zip(&slow) {
            prop_assert!((a - b).abs() <= 1e-9, "{fast:?} vs {slow:?}");
        }
        Ok(())
    })
}

pub fn suite_brandes() -> Result<(), String> {
    brandes_matches_enumeration(CASES)
}

/// Max flow against brute-force min cut on `cases` unit-capacity graphs with at most 10 nodes.
pub fn max_flow_matches_min_cut(cases: u32) -> Result<(), String> {
    let input = any_graph(10).prop_flat_map(|adj| {
        let n = adj.len();
        (Just(adj), 0..n, 1..n)
    });
    run_n(cases, input, |(adj, s, off)| {
        let t = (s + off) % adj.len();
        let mf = netmetrics::max_flow_min_cut(&adj, s, t).unwrap();
        prop_assert_eq!(mf.value, brute_min_cut(&adj, s, t));
        prop_assert_eq!(mf.cut.len(), mf.value);
        Ok(())
    })
}

pub fn suite_max_flow() -> Result<(), String> {
    max_flow_matches_min_cut(CASES)
}

pub fn suite_eigencentrality_permutation() -> Result<(), String> {
    let input = connected_graph(2, 12).prop_flat_map(|adj| {
        let n = adj.len();
        (Just(adj), Just((0..n).collect::<Vec<usize>>()).prop_shuffle())
    });
    run(input, |(adj, perm)| {
        let n = adj.len();
        let mut permuted = vec![Vec::new(); n];
        for u in 0..n {
            for &v in &adj[u] {
                permuted[perm[u]].push(perm[v]);
            }
        }
        for list in &mut permuted {
            list.sort_unstable();
        }
        let a = netmetrics::eigencentrality(&adj).scores;
        let b = netmetrics::eigencentrality(&permuted).scores;
        for u in 0..n {
            prop_assert!((a[u] - b[perm[u]]).abs() <= 1e-9, "{a:?} vs {b:?} under {perm:?}");
        }
        Ok(())
    })
}

pub fn suite_flow_rounds() -> Result<(), String> {
    let input = (connected_graph(3, 12), 1..5usize).prop_flat_map(|(adj, rounds)| {
        let n = adj.len();
        (Just(adj), 0..n, 1..n, Just(rounds))
    });
    run(input, |(adj, s, off, rounds)| {
        let t = (s + off) % adj.len();
        let r = netmetrics::repetitive_flow_analysis(&adj, FaceId::from_index(s), FaceId::from_index(t), rounds)
            .unwrap();
        prop_assert!(r.rounds.len() <= rounds);
        let mut values: Vec<usize> = r.rounds.iter().map(|x| x.max_flow_value).collect();
        values.push(r.residual_flow);
        for w in values.windows(2) {
            prop_assert!(w[1] < w[0], "flow did not drop: {values:?}");
        }
        if r.rounds.len() < rounds {
            prop_assert_eq!(r.residual_flow, 0);
        }
        for round in &r.rounds {
            prop_assert!(round.max_flow_value > 0);
            prop_assert!(round.flow_fraction > 0.0 && round.flow_fraction <= 1.0);
        }
        Ok(())
    })
}

/// Every invariant suite by name.
pub fn invariant_suites() -> Vec<(&'static str, fn() -> Result<(), String>)> {
    vec![
        ("pgm round trip", suite_pgm_round_trip),
        ("resize idempotence", suite_resize_idempotent),
        ("flatten bijection", suite_flatten_bijection),
        ("corpus order stability", suite_corpus_order_is_stable),
        ("patch idempotence and energy", suite_patch_idempotent_and_energy),
        ("moment translation invariance", suite_moments_translation),
        ("moment scale consistency", suite_moments_scale),
        ("selection membership", suite_selection_membership),
        ("gram positive semidefinite", suite_gram_psd),
        ("gram/covariance spectrum", suite_gram_spectrum),
        ("energy, residual, orthogonality", suite_energy_residual_orthogonality),
        ("graph and geodesic symmetry", suite_graph_symmetry),
        ("geodesic dominates direct", suite_geodesic_dominates_direct),
        ("k-NN monotone in k", suite_knn_monotone),
        ("MDS permutation invariance", suite_mds_permutation_invariance),
        ("MDS exact recovery", suite_mds_exact_recovery),
        ("partition and seed extremality", suite_partition_and_extremality),
        ("label-flip symmetry", suite_label_flip),
        ("isometry invariance", suite_isometry_invariance),
        ("AUC bounds and rank oracle", suite_auc_bounds_and_oracle),
        ("Brandes vs enumeration", suite_brandes),
        ("max flow vs min cut", suite_max_flow),
        ("eigencentrality permutation", suite_eigencentrality_permutation),
        ("flow rounds monotone", suite_flow_rounds),
    ]
}

/// Synthetic corpus written to `root` in ORL layout.
pub fn write_synthetic(root: &std::path::Path, spec: &maskiso::synth::SynthSpec) -> Vec<FaceRecord> {
    let (records, table) = maskiso::synth::generate(spec).unwrap();
    maskiso::synth::write_corpus(root, &records, &table).unwrap();
    records
}
