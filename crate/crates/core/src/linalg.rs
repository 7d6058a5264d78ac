//! Closed-form ridge least squares and the label sensitivities built on it.
//!
//! With `A = XᵀX + λI`, the fitted model is `θ = A⁻¹Xᵀy`. Everything the
//! certifiers need is linear in `y`:
//!
//! * the influence matrix `C = A⁻¹Xᵀ` (m×n) maps labels to coefficients,
//! * the influence vector `Z = xᵀC` (length n) maps labels to the prediction at `x`.
//!
//! `A` is factored once as `L D Lᵀ` (no square roots, so exact scalars work too)
//! and the factor is reused for `θ` and for every column of `C`.

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::error::{check_len, Error, Result};
use crate::scalar::Scalar;

/// Feature matrix, labels and optional metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset<T> {
    x: Array2<T>,
    y: Array1<T>,
    feature_names: Vec<String>,
    group_labels: Option<Vec<String>>,
}

impl<T: Scalar> Dataset<T> {
    pub fn new(
        x: Array2<T>,
        y: Array1<T>,
        feature_names: Vec<String>,
        group_labels: Option<Vec<String>>,
    ) -> Result<Self> {
        let (n, m) = x.dim();
        if n == 0 || m == 0 {
            return Err(Error::InvalidDataset(format!("empty design matrix {n}x{m}")));
        }
        check_len("labels", n, y.len())?;
        check_len("feature names", m, feature_names.len())?;
        if let Some(groups) = &group_labels {
            check_len("group labels", n, groups.len())?;
        }
        if let Some((idx, _)) = x.iter().enumerate().find(|(_, v)| !v.is_finite_value()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite feature at row {}, column {}",
                idx / m,
                idx % m
            )));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite_value()) {
            return Err(Error::InvalidDataset(format!("non-finite label at row {i}")));
        }
        Ok(Self {
            x,
            y,
            feature_names,
            group_labels,
        })
    }

    /// Dataset with generated feature names `x0, x1, ...` and no groups.
    pub fn from_arrays(x: Array2<T>, y: Array1<T>) -> Result<Self> {
        let names = (0..x.ncols()).map(|j| format!("x{j}")).collect();
        Self::new(x, y, names, None)
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn m(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &Array2<T> {
        &self.x
    }

    pub fn y(&self) -> &Array1<T> {
        &self.y
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, T> {
        self.x.row(i)
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn group_labels(&self) -> Option<&[String]> {
        self.group_labels.as_deref()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|f| f == name)
    }

    /// Same features, different labels.
    pub fn with_labels(&self, y: Array1<T>) -> Result<Self> {
        Self::new(
            self.x.clone(),
            y,
            self.feature_names.clone(),
            self.group_labels.clone(),
        )
    }

    pub fn with_groups(mut self, groups: Vec<String>) -> Result<Self> {
        check_len("group labels", self.n(), groups.len())?;
        self.group_labels = Some(groups);
        Ok(self)
    }

    /// Appends an all-ones column named `bias`.
    pub fn with_bias_column(&self) -> Self {
        let ones = Array2::from_elem((self.n(), 1), T::one());
        let x = ndarray::concatenate(Axis(1), &[self.x.view(), ones.view()])
            .expect("row counts agree");
        let mut names = self.feature_names.clone();
        names.push("bias".to_string());
        Self {
            x,
            y: self.y.clone(),
            feature_names: names,
            group_labels: self.group_labels.clone(),
        }
    }

    /// Rows in the given order; indices may repeat.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            x: self.x.select(Axis(0), rows),
            y: self.y.select(Axis(0), rows),
            feature_names: self.feature_names.clone(),
            group_labels: self
                .group_labels
                .as_ref()
                .map(|g| rows.iter().map(|&i| g[i].clone()).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCoefficients<T> {
    pub theta: Array1<T>,
    pub lambda: T,
}

/// `C = (XᵀX + λI)⁻¹Xᵀ`, so that `C·y == θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceMatrix<T> {
    pub c: Array2<T>,
    pub lambda: T,
}

impl<T: Scalar> InfluenceMatrix<T> {
    pub fn m(&self) -> usize {
        self.c.nrows()
    }

    pub fn n(&self) -> usize {
        self.c.ncols()
    }

    /// Coefficients obtained by fitting on labels `y`.
    pub fn coefficients(&self, y: &[T]) -> Result<ModelCoefficients<T>> {
        check_len("labels", self.n(), y.len())?;
        let theta = self.c.dot(&ArrayView1::from(y));
        Ok(ModelCoefficients {
            theta,
            lambda: self.lambda,
        })
    }
}

/// `Z = xᵀC`: how the prediction at one test point responds to each label.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceVector<T> {
    pub z: Array1<T>,
}

impl<T: Scalar> InfluenceVector<T> {
    pub fn new(z: Array1<T>) -> Self {
        Self { z }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        self.z.as_slice().expect("influence vector is contiguous")
    }

    /// `Z·y`, the prediction of the model fitted on `y`.
    pub fn apply(&self, y: &[T]) -> Result<T> {
        check_len("labels", self.len(), y.len())?;
        Ok(self.z.dot(&ArrayView1::from(y)))
    }
}

impl<T: Scalar> From<Vec<T>> for InfluenceVector<T> {
    fn from(z: Vec<T>) -> Self {
        Self { z: Array1::from(z) }
    }
}

/// `L D Lᵀ` factorization of `XᵀX + λI`.
#[derive(Debug, Clone)]
pub struct RidgeFactor<T> {
    lower: Array2<T>,
    diag: Array1<T>,
    lambda: T,
}

impl<T: Scalar> RidgeFactor<T> {
    pub fn new(dataset: &Dataset<T>, lambda: T) -> Result<Self> {
        if lambda < T::zero() || !lambda.is_finite_value() {
            return Err(Error::NegativeLambda(lambda.to_string()));
        }
        let x = dataset.x();
        let mut gram = x.t().dot(x);
        for j in 0..gram.nrows() {
            gram[[j, j]] = gram[[j, j]] + lambda;
        }
        Self::factor(gram, lambda)
    }

    fn factor(a: Array2<T>, lambda: T) -> Result<Self> {
        let m = a.nrows();
        let max_diag = a.diag().iter().fold(T::zero(), |acc, &v| acc.max_of(v.abs()));
        let threshold = T::pivot_ratio() * max_diag;
        let mut lower = Array2::<T>::zeros((m, m));
        let mut diag = Array1::<T>::zeros(m);
        for j in 0..m {
            let mut d = a[[j, j]];
            for k in 0..j {
                d = d - lower[[j, k]] * lower[[j, k]] * diag[k];
            }
            if d <= threshold || !d.is_finite_value() {
                return Err(Error::SingularMatrix { pivot_index: j });
            }
            diag[j] = d;
            lower[[j, j]] = T::one();
            for i in (j + 1)..m {
                let mut s = a[[i, j]];
                for k in 0..j {
                    s = s - lower[[i, k]] * lower[[j, k]] * diag[k];
                }
                lower[[i, j]] = s / d;
            }
        }
        Ok(Self {
            lower,
            diag,
            lambda,
        })
    }

    pub fn lambda(&self) -> T {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Solves `(XᵀX + λI) v = b`.
    pub fn solve(&self, b: ArrayView1<'_, T>) -> Result<Array1<T>> {
        let m = self.dim();
        check_len("right-hand side", m, b.len())?;
        let mut v = b.to_owned();
        for i in 0..m {
            let mut s = v[i];
            for k in 0..i {
                s = s - self.lower[[i, k]] * v[k];
            }
            v[i] = s;
        }
        for i in 0..m {
            v[i] = v[i] / self.diag[i];
        }
        for i in (0..m).rev() {
            let mut s = v[i];
            for k in (i + 1)..m {
                s = s - self.lower[[k, i]] * v[k];
            }
            v[i] = s;
        }
        Ok(v)
    }

    pub fn coefficients(&self, dataset: &Dataset<T>) -> Result<ModelCoefficients<T>> {
        check_len("features", self.dim(), dataset.m())?;
        let xty = dataset.x().t().dot(dataset.y());
        Ok(ModelCoefficients {
            theta: self.solve(xty.view())?,
            lambda: self.lambda,
        })
    }

    pub fn influence_matrix(&self, dataset: &Dataset<T>) -> Result<InfluenceMatrix<T>> {
        check_len("features", self.dim(), dataset.m())?;
        let mut c = Array2::<T>::zeros((dataset.m(), dataset.n()));
        for (i, row) in dataset.x().outer_iter().enumerate() {
            let col = self.solve(row)?;
            c.column_mut(i).assign(&col);
        }
        Ok(InfluenceMatrix {
            c,
            lambda: self.lambda,
        })
    }
}

pub fn solve_ridge<T: Scalar>(dataset: &Dataset<T>, lambda: T) -> Result<ModelCoefficients<T>> {
    RidgeFactor::new(dataset, lambda)?.coefficients(dataset)
}

pub fn influence_matrix<T: Scalar>(dataset: &Dataset<T>, lambda: T) -> Result<InfluenceMatrix<T>> {
    RidgeFactor::new(dataset, lambda)?.influence_matrix(dataset)
}

pub fn influence_vector<T: Scalar>(x: &[T], c: &InfluenceMatrix<T>) -> Result<InfluenceVector<T>> {
    check_len("test point", c.m(), x.len())?;
    Ok(InfluenceVector {
        z: ArrayView1::from(x).dot(&c.c),
    })
}

pub fn predict<T: Scalar>(theta: &ModelCoefficients<T>, x: &[T]) -> Result<T> {
    check_len("test point", theta.theta.len(), x.len())?;
    Ok(theta.theta.dot(&ArrayView1::from(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use num_rational::Rational64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn identity2() -> Dataset<f64> {
        Dataset::from_arrays(array![[1.0, 0.0], [0.0, 1.0]], array![3.0, 4.0]).unwrap()
    }

    fn random_dataset(rng: &mut ChaCha8Rng, n: usize, m: usize) -> Dataset<f64> {
        let x = Array2::from_shape_fn((n, m), |_| rng.random_range(-2.0..2.0));
        let y = Array1::from_shape_fn(n, |_| rng.random_range(-5.0..5.0));
        Dataset::from_arrays(x, y).unwrap()
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    /// Dense gradient descent on ‖y − Xθ‖² + λ‖θ‖².
    fn gradient_descent(ds: &Dataset<f64>, lambda: f64) -> Array1<f64> {
        let x = ds.x();
        let y = ds.y();
        let gram = x.t().dot(x);
        // step 1/L with L bounded by the Frobenius norm of 2(XᵀX + λI)
        let lip = 2.0 * (gram.iter().map(|v| v * v).sum::<f64>().sqrt() + lambda);
        let step = 1.0 / lip;
        let mut theta = Array1::<f64>::zeros(ds.m());
        for _ in 0..200_000 {
            let resid = x.dot(&theta) - y;
            let grad = 2.0 * x.t().dot(&resid) + 2.0 * lambda * &theta;
            if grad.iter().map(|g| g * g).sum::<f64>().sqrt() < 1e-12 {
                break;
            }
            theta = theta - step * grad;
        }
        theta
    }

    #[test]
    fn identity_design_recovers_labels() {
        let theta = solve_ridge(&identity2(), 0.0).unwrap();
        assert_eq!(theta.theta, array![3.0, 4.0]);
        let theta = solve_ridge(&identity2(), 1.0).unwrap();
        assert_eq!(theta.theta, array![1.5, 2.0]);
    }

    #[test]
    fn identity_influence_matrix() {
        let c = influence_matrix(&identity2(), 0.0).unwrap();
        assert_eq!(c.c, array![[1.0, 0.0], [0.0, 1.0]]);
        let c = influence_matrix(&identity2(), 1.0).unwrap();
        assert_eq!(c.c, array![[0.5, 0.0], [0.0, 0.5]]);
    }

    #[test]
    fn influence_vector_examples() {
        let c = InfluenceMatrix {
            c: array![[1.0, 0.0], [0.0, 1.0]],
            lambda: 0.0,
        };
        assert_eq!(influence_vector(&[1.0, 0.0], &c).unwrap().z, array![1.0, 0.0]);
        let c = InfluenceMatrix {
            c: array![[0.5, 0.0], [0.0, 0.5]],
            lambda: 1.0,
        };
        assert_eq!(influence_vector(&[1.0, 1.0], &c).unwrap().z, array![0.5, 0.5]);
        assert!(matches!(
            influence_vector(&[1.0], &c),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn predict_examples() {
        let zero = ModelCoefficients {
            theta: array![0.0, 0.0, 0.0],
            lambda: 0.0,
        };
        assert_eq!(predict(&zero, &[1.0, -7.0, 3.5]).unwrap(), 0.0);
        let one = ModelCoefficients {
            theta: array![1.0],
            lambda: 0.0,
        };
        assert_eq!(predict(&one, &[2.25]).unwrap(), 2.25);
        assert!(predict(&one, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn square_exact_solve_interpolates() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ds = random_dataset(&mut rng, 4, 4);
        let theta = solve_ridge(&ds, 0.0).unwrap();
        for i in 0..4 {
            let p = predict(&theta, ds.row(i).as_slice().unwrap()).unwrap();
            assert!(rel_close(p, ds.y()[i], 1e-9), "{p} vs {}", ds.y()[i]);
        }
    }

    #[test]
    fn matches_gradient_descent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &lambda in &[0.0, 0.5, 4.0] {
            let ds = random_dataset(&mut rng, 20, 3);
            let closed = solve_ridge(&ds, lambda).unwrap();
            let iterative = gradient_descent(&ds, lambda);
            for (a, b) in closed.theta.iter().zip(iterative.iter()) {
                assert!((a - b).abs() < 1e-6, "λ={lambda}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn influence_matrix_reproduces_fits() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ds = random_dataset(&mut rng, 10, 3);
        let c = influence_matrix(&ds, 0.25).unwrap();
        assert_eq!(c.c.dim(), (3, 10));
        for _ in 0..5 {
            let y = Array1::from_shape_fn(10, |_| rng.random_range(-3.0..3.0));
            let ds_y = ds.with_labels(y.clone()).unwrap();
            let theta = solve_ridge(&ds_y, 0.25).unwrap();
            let via_c = c.coefficients(y.as_slice().unwrap()).unwrap();
            for (a, b) in via_c.theta.iter().zip(theta.theta.iter()) {
                assert!(rel_close(*a, *b, 1e-9));
            }
        }
    }

    #[test]
    fn influence_vector_matches_prediction() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ds = random_dataset(&mut rng, 15, 4);
        let c = influence_matrix(&ds, 0.0).unwrap();
        let theta = solve_ridge(&ds, 0.0).unwrap();
        let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..1.0)).collect();
        let z = influence_vector(&x, &c).unwrap();
        let via_z = z.apply(ds.y().as_slice().unwrap()).unwrap();
        assert!(rel_close(via_z, predict(&theta, &x).unwrap(), 1e-9));
    }

    #[test]
    fn rank_deficient_without_ridge_is_singular() {
        let x = array![[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]];
        let ds = Dataset::from_arrays(x, array![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(solve_ridge(&ds, 0.0), Err(Error::SingularMatrix { .. })));
        assert!(solve_ridge(&ds, 1e-3).is_ok());
        assert!(matches!(solve_ridge(&ds, -1.0), Err(Error::NegativeLambda(_))));
    }

    #[test]
    fn exact_rational_solve() {
        let r = Rational64::from_integer;
        let x = array![[r(1), r(1)], [r(1), r(2)], [r(1), r(3)]];
        let ds = Dataset::from_arrays(x, array![r(1), r(2), r(2)]).unwrap();
        let theta = solve_ridge(&ds, r(0)).unwrap();
        // normal equations: [[3,6],[6,14]] θ = [5, 11] → θ = (2/3, 1/2)
        assert_eq!(theta.theta, array![Rational64::new(2, 3), Rational64::new(1, 2)]);
        let x_sing = array![[r(1), r(2)], [r(2), r(4)]];
        let ds = Dataset::from_arrays(x_sing, array![r(1), r(1)]).unwrap();
        assert!(matches!(solve_ridge(&ds, r(0)), Err(Error::SingularMatrix { .. })));
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::from_arrays(Array2::<f64>::zeros((0, 2)), array![]).is_err());
        assert!(Dataset::from_arrays(array![[1.0]], array![1.0, 2.0]).is_err());
        assert!(Dataset::from_arrays(array![[f64::NAN]], array![1.0]).is_err());
        let ds = Dataset::from_arrays(array![[1.0], [2.0]], array![1.0, 2.0]).unwrap();
        assert!(ds.clone().with_groups(vec!["a".into()]).is_err());
        let b = ds.with_bias_column();
        assert_eq!(b.m(), 2);
        assert_eq!(b.feature_names()[1], "bias");
        assert_eq!(b.x().column(1).to_vec(), vec![1.0, 1.0]);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn linear_in_each_label(seed in any::<u64>(), idx in 0usize..8, d in -3.0f64..3.0, lambda in 0.0f64..2.0) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let ds = random_dataset(&mut rng, 8, 3);
                let c = influence_matrix(&ds, lambda + 1e-3).unwrap();
                let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let z = influence_vector(&x, &c).unwrap();
                let y = ds.y().to_vec();
                let mut y2 = y.clone();
                y2[idx] += d;
                let diff = z.apply(&y2).unwrap() - z.apply(&y).unwrap();
                prop_assert!(rel_close(diff, z.z[idx] * d, 1e-9));

                let theta = solve_ridge(&ds, lambda + 1e-3).unwrap();
                let p = predict(&theta, &x).unwrap();
                prop_assert!((z.apply(&y).unwrap() - p).abs() <= 1e-9 * (1.0 + p.abs()));
                let via_c = c.coefficients(&y).unwrap();
                for (a, b) in via_c.theta.iter().zip(theta.theta.iter()) {
                    prop_assert!(rel_close(*a, *b, 1e-9));
                }
            }
        }
    }
}
