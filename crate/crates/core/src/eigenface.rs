//! Eigenfaces through the small Gram matrix.
//!
//! With `A = [phi_1 .. phi_n]` the centered faces as columns, the `n x n` matrix
//! `L = A^T A` shares its nonzero spectrum with the `q x q` covariance `A A^T`, and
//! `A v` maps each eigenvector of `L` to an eigenface. The rows of `L` double as the
//! per-face signatures fed to the manifold stage.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::dataset::{FaceId, FaceVector};
use crate::error::{Error, Result};
use crate::image::{self, GrayImage};
use crate::linalg;

/// Jacobi stopping rule relative to `||L||_F`.
pub const JACOBI_TOLERANCE: f64 = 1e-10;
/// Eigenpairs with `lambda <= RETENTION_FLOOR * trace(L)` produce no eigenface.
pub const RETENTION_FLOOR: f64 = 1e-12;

pub fn mean_face(vectors: &[FaceVector]) -> Result<Vec<f64>> {
    let first = vectors.first().ok_or(Error::EmptyCorpus)?;
    let q = first.values.len();
    if vectors.iter().any(|v| v.values.len() != q) {
        return Err(Error::Param("face vectors differ in length".into()));
    }
    let n = vectors.len() as f64;
    let mut mean = vec![0.0; q];
    for v in vectors {
        for (m, x) in mean.iter_mut().zip(&v.values) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// Centered faces `phi_i = x_i - mean`, stored face-major.
#[derive(Clone, Debug)]
pub struct FaceMatrix {
    pub face_ids: Vec<FaceId>,
    pub columns: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

impl FaceMatrix {
    pub fn n(&self) -> usize {
        self.columns.len()
    }

    pub fn q(&self) -> usize {
        self.mean.len()
    }
}

pub fn center(vectors: &[FaceVector], mean: &[f64]) -> Result<FaceMatrix> {
    if vectors.iter().any(|v| v.values.len() != mean.len()) {
        return Err(Error::Param("face vector and mean lengths differ".into()));
    }
    Ok(FaceMatrix {
        face_ids: vectors.iter().map(|v| v.face_id).collect(),
        columns: vectors
            .iter()
            .map(|v| v.values.iter().zip(mean).map(|(x, m)| x - m).collect())
            .collect(),
        mean: mean.to_vec(),
    })
}

/// The `n x n` Gram matrix of centered faces.
#[derive(Clone, Debug)]
pub struct SignatureMatrix {
    pub face_ids: Vec<FaceId>,
    pub entries: DMatrix<f64>,
}

impl SignatureMatrix {
    pub fn n(&self) -> usize {
        self.face_ids.len()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `L[l][m] = phi_l . phi_m`, computed on the upper triangle and mirrored.
pub fn gram(a: &FaceMatrix) -> Result<SignatureMatrix> {
    let n = a.n();
    if n < 2 {
        return Err(Error::Param(format!("gram matrix needs at least 2 faces, got {n}")));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|l| (l..n).map(move |m| (l, m))).collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(l, m)| dot(&a.columns[l], &a.columns[m]))
        .collect();
    let mut entries = DMatrix::zeros(n, n);
    for (&(l, m), v) in pairs.iter().zip(values) {
        entries[(l, m)] = v;
        entries[(m, l)] = v;
    }
    Ok(SignatureMatrix {
        face_ids: a.face_ids.clone(),
        entries,
    })
}

#[derive(Clone, Debug)]
pub struct EigenSystem {
    /// Descending, clamped at zero.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors of `L`, one per column.
    pub eigenvectors: DMatrix<f64>,
    /// Unit-norm eigenfaces `A v_i` for eigenvalues above the retention floor.
    pub eigenfaces: Vec<Vec<f64>>,
}

impl EigenSystem {
    pub fn retained(&self) -> usize {
        self.eigenfaces.len()
    }
}

pub fn eigendecompose(l: &SignatureMatrix, a: &FaceMatrix) -> Result<EigenSystem> {
    let n = l.n();
    if a.n() != n {
        return Err(Error::Param("signature matrix and face matrix sizes differ".into()));
    }
    let eig = linalg::symmetric_eigen(&l.entries, JACOBI_TOLERANCE)?;
    let trace = l.trace();
    let eigenvalues: Vec<f64> = eig
        .values
        .iter()
        .map(|&v| if v < 0.0 && v >= -1e-8 * trace.abs() { 0.0 } else { v })
        .collect();

    let floor = RETENTION_FLOOR * trace;
    let retained: Vec<usize> = (0..n).filter(|&i| eigenvalues[i] > floor).collect();
    let eigenfaces = retained
        .par_iter()
        .map(|&i| {
            let v = eig.vectors.column(i);
            let mut u = vec![0.0; a.q()];
            for (j, phi) in a.columns.iter().enumerate() {
                let w = v[j];
                for (uk, pk) in u.iter_mut().zip(phi) {
                    *uk += w * pk;
                }
            }
            let norm = dot(&u, &u).sqrt();
            u.iter_mut().for_each(|x| *x /= norm);
            u
        })
        .collect();
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors: eig.vectors,
        eigenfaces,
    })
}

/// Row `i` of `L` is the signature of face `i`.
pub fn signatures(l: &SignatureMatrix) -> Vec<(FaceId, Vec<f64>)> {
    l.face_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, l.entries.row(i).iter().copied().collect()))
        .collect()
}

/// Projection of each centered face onto the retained eigenfaces.
pub fn projections(sys: &EigenSystem, a: &FaceMatrix) -> Vec<Vec<f64>> {
    a.columns
        .iter()
        .map(|phi| sys.eigenfaces.iter().map(|u| dot(u, phi)).collect())
        .collect()
}

/// Mean face followed by the first `count` eigenfaces, each min-max scaled to `[0, 255]`.
pub fn render_eigenfaces(
    sys: &EigenSystem,
    mean: &[f64],
    rows: usize,
    cols: usize,
    count: usize,
) -> Result<Vec<GrayImage>> {
    if count > sys.retained() {
        return Err(Error::Range {
            requested: count,
            available: sys.retained(),
        });
    }
    std::iter::once(mean)
        .chain(sys.eigenfaces.iter().take(count).map(Vec::as_slice))
        .map(|v| image::normalize_to_image(v, rows, cols))
        .collect()
}

/// Everything the eigenface stage produces for one corpus.
#[derive(Clone, Debug)]
pub struct EigenfaceModel {
    pub faces: FaceMatrix,
    pub signature: SignatureMatrix,
    pub system: EigenSystem,
}

pub fn fit(vectors: &[FaceVector]) -> Result<EigenfaceModel> {
    let mean = mean_face(vectors)?;
    let faces = center(vectors, &mean)?;
    let signature = gram(&faces)?;
    let system = eigendecompose(&signature, &faces)?;
    Ok(EigenfaceModel {
        faces,
        signature,
        system,
    })
}

pub fn eigen_residual(l: &SignatureMatrix, sys: &EigenSystem, i: usize) -> f64 {
    let v: DVector<f64> = sys.eigenvectors.column(i).clone_owned();
    (&l.entries * &v - &v * sys.eigenvalues[i]).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(i: usize, values: &[f64]) -> FaceVector {
        FaceVector {
            face_id: FaceId::from_index(i),
            values: values.to_vec(),
        }
    }

    #[test]
    fn mean_examples() {
        let v = [fv(0, &[3.0, 1.0]), fv(1, &[3.0, 1.0])];
        assert_eq!(mean_face(&v).unwrap(), vec![3.0, 1.0]);
        let v = [fv(0, &[0.0, 0.0]), fv(1, &[2.0, 4.0])];
        assert_eq!(mean_face(&v).unwrap(), vec![1.0, 2.0]);
        assert!(matches!(mean_face(&[]), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn center_examples() {
        let v = [fv(0, &[0.0, 0.0]), fv(1, &[2.0, 4.0])];
        let a = center(&v, &mean_face(&v).unwrap()).unwrap();
        assert_eq!(a.columns, vec![vec![-1.0, -2.0], vec![1.0, 2.0]]);
        let same = [fv(0, &[5.0, 6.0]), fv(1, &[5.0, 6.0])];
        let a = center(&same, &mean_face(&same).unwrap()).unwrap();
        assert!(a.columns.iter().flatten().all(|&x| x == 0.0));
    }

    fn matrix_of(cols: &[&[f64]]) -> FaceMatrix {
        FaceMatrix {
            face_ids: (0..cols.len()).map(FaceId::from_index).collect(),
            columns: cols.iter().map(|c| c.to_vec()).collect(),
            mean: vec![0.0; cols[0].len()],
        }
    }

    #[test]
    fn gram_two_by_two() {
        // phi_1 = (1,2), phi_2 = (2,4): L = [[5,10],[10,20]],
        // characteristic polynomial x^2 - 25x + 0 -> eigenvalues 25 and 0
        let a = matrix_of(&[&[1.0, 2.0], &[2.0, 4.0]]);
        let l = gram(&a).unwrap();
        assert_eq!(l.entries, DMatrix::from_row_slice(2, 2, &[5.0, 10.0, 10.0, 20.0]));
        let sys = eigendecompose(&l, &a).unwrap();
        assert!((sys.eigenvalues[0] - 25.0).abs() < 1e-12);
        assert_eq!(sys.eigenvalues[1], 0.0);
        let s5 = 5f64.sqrt();
        assert!((sys.eigenvectors[(0, 0)] - 1.0 / s5).abs() < 1e-12);
        assert!((sys.eigenvectors[(1, 0)] - 2.0 / s5).abs() < 1e-12);
        assert_eq!(sys.retained(), 1);
        let sig = signatures(&l);
        assert_eq!(sig[0].1, vec![5.0, 10.0]);
        assert_eq!(sig[1].1, vec![10.0, 20.0]);
    }

    #[test]
    fn gram_of_orthonormal_is_identity() {
        let a = matrix_of(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0]]);
        let l = gram(&a).unwrap();
        assert_eq!(l.entries, DMatrix::identity(3, 3));
        let sys = eigendecompose(&l, &a).unwrap();
        assert_eq!(sys.eigenvalues, vec![1.0; 3]);
    }

    #[test]
    fn gram_needs_two_faces() {
        let a = matrix_of(&[&[1.0, 0.0]]);
        assert!(matches!(gram(&a), Err(Error::Param(_))));
    }

    #[test]
    fn trace_identity() {
        let a = matrix_of(&[&[1.0, -2.0, 0.5], &[3.0, 0.0, 1.0], &[-4.0, 2.0, -1.5]]);
        let l = gram(&a).unwrap();
        let energy: f64 = a.columns.iter().flatten().map(|x| x * x).sum();
        assert!((l.trace() - energy).abs() < 1e-12);
    }

    #[test]
    fn identical_corpus_has_zero_signatures() {
        let v = [fv(0, &[1.0, 2.0, 3.0]), fv(1, &[1.0, 2.0, 3.0]), fv(2, &[1.0, 2.0, 3.0])];
        let model = fit(&v).unwrap();
        assert!(signatures(&model.signature).iter().all(|(_, s)| s.iter().all(|&x| x == 0.0)));
        assert_eq!(model.system.retained(), 0);
    }

    #[test]
    fn render_counts_and_range_error() {
        let v: Vec<FaceVector> = (0..4)
            .map(|i| fv(i, &(0..6).map(|k| ((i * 7 + k * k) % 11) as f64).collect::<Vec<_>>()))
            .collect();
        let model = fit(&v).unwrap();
        let retained = model.system.retained();
        let imgs = render_eigenfaces(&model.system, &model.faces.mean, 2, 3, retained).unwrap();
        assert_eq!(imgs.len(), retained + 1);
        let mean_img = image::normalize_to_image(&model.faces.mean, 2, 3).unwrap();
        assert_eq!(imgs[0], mean_img);
        assert!(matches!(
            render_eigenfaces(&model.system, &model.faces.mean, 2, 3, retained + 1),
            Err(Error::Range { .. })
        ));
    }

    #[test]
    fn constant_eigenface_renders_mid_gray() {
        let sys = EigenSystem {
            eigenvalues: vec![1.0],
            eigenvectors: DMatrix::identity(1, 1),
            eigenfaces: vec![vec![0.5; 4]],
        };
        let imgs = render_eigenfaces(&sys, &[1.0, 2.0, 3.0, 4.0], 2, 2, 1).unwrap();
        assert!(imgs[1].pixels().iter().all(|&p| p == 128));
    }
}
