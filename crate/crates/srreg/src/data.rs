//! Regression instances: the problem container, the four synthetic benchmark
//! generators, and deterministic train/validation/test splitting.
//!
//! Everything is a pure function of the spec and the seed. The RNG stream
//! order is part of the contract (see each generator's doc comment), so a
//! given `(spec, seed)` pair reproduces bitwise-identical datasets.

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::{DenseVec, Mat};
use crate::rng::SplitMix64;
use crate::scalar::Scalar;

/// One regression instance: design matrix `X` (m×n) and response `b` (m).
#[derive(Clone, Debug)]
pub struct ProblemData<T> {
    pub x: DesignMatrix<T>,
    pub b: DenseVec<T>,
    pub feature_names: Option<Vec<String>>,
}

impl<T: Scalar> ProblemData<T> {
    pub fn new(x: DesignMatrix<T>, b: Vec<T>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::DimMismatch("empty design matrix".into()));
        }
        if b.len() != x.nrows() {
            return Err(Error::DimMismatch(format!(
                "response length {} != {} rows",
                b.len(),
                x.nrows()
            )));
        }
        Ok(Self {
            x,
            b: DenseVec::new(b)?,
            feature_names: None,
        })
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    pub fn select_rows(&self, idx: &[usize]) -> ProblemData<T> {
        ProblemData {
            x: self.x.select_rows(idx),
            b: DenseVec::new(idx.iter().map(|&i| self.b[i]).collect()).expect("finite subset"),
            feature_names: self.feature_names.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// Synthetic benchmark examples
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleId {
    One,
    Two,
    Three,
    Four,
}

impl ExampleId {
    pub fn from_index(i: usize) -> Result<Self> {
        match i {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            3 => Ok(Self::Three),
            4 => Ok(Self::Four),
            _ => Err(Error::InvalidParam(format!("example must be 1..=4, got {i}"))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Self::One => 1,
            Self::Two => 2,
            Self::Three => 3,
            Self::Four => 4,
        }
    }

    /// Number of predictors at full benchmark scale.
    pub fn default_n(self) -> usize {
        match self {
            Self::One | Self::Two => 800,
            Self::Three => 400,
            Self::Four => 4000,
        }
    }

    /// Noise level ς.
    pub fn varsigma(self) -> f64 {
        match self {
            Self::One | Self::Two => 3.0,
            Self::Three | Self::Four => 15.0,
        }
    }

    /// AR(1) correlation for the row covariance Σ_ij = ρ^|i−j| (examples 1-3).
    pub fn ar1_rho(self) -> f64 {
        match self {
            Self::Three => 0.8,
            _ => 0.5,
        }
    }

    /// The coefficient vector, scaled down to `n` predictors if requested.
    /// Examples 1-3 repeat a fixed block; example 4 puts 3s on the first
    /// 3/8 of the coordinates (1500 of 4000 at full scale).
    pub fn beta_star(self, n: usize) -> Vec<f64> {
        match self {
            Self::One => {
                let block = [3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0];
                (0..n).map(|i| block[i % block.len()]).collect()
            }
            Self::Two | Self::Three => (0..n).map(|i| [0.0, 1.0][i % 2]).collect(),
            Self::Four => {
                let informative = (3 * n).div_ceil(8);
                (0..n).map(|i| if i < informative { 3.0 } else { 0.0 }).collect()
            }
        }
    }
}

/// Full description of a synthetic benchmark draw.
#[derive(Clone, Debug)]
pub struct SyntheticSpec {
    pub example: ExampleId,
    pub m_train: usize,
    pub m_val: usize,
    pub m_test: usize,
    /// Optional smaller predictor count for desk-scale runs; `None` keeps
    /// the example's full size.
    pub n_override: Option<usize>,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(example: ExampleId, seed: u64) -> Self {
        Self {
            example,
            m_train: 8000,
            m_val: 2000,
            m_test: 2000,
            n_override: None,
            seed,
        }
    }

    pub fn n(&self) -> usize {
        self.n_override.unwrap_or_else(|| self.example.default_n())
    }
}

/// Ground truth attached to a synthetic draw: the coefficient vector, its
/// support, and the realized training noise ς·ε.
#[derive(Clone, Debug)]
pub struct SyntheticTruth<T> {
    pub beta_star: Vec<T>,
    pub support: Vec<usize>,
    pub noise: Vec<T>,
}

#[derive(Clone, Debug)]
pub struct SyntheticBundle<T> {
    pub train: ProblemData<T>,
    pub val: ProblemData<T>,
    pub test: ProblemData<T>,
    pub truth: SyntheticTruth<T>,
}

/// AR(1) design: each row is drawn by the recursion
/// `x₁ = z₁`, `x_j = ρ x_{j−1} + sqrt(1−ρ²) z_j`, which reproduces
/// `Σ_ij = ρ^|i−j|` exactly in distribution at O(mn) cost.
///
/// Stream contract: rows in order, n standard normal draws per row.
pub fn ar1_design<T: Scalar>(rng: &mut SplitMix64, m: usize, n: usize, rho: f64) -> Mat<T> {
    let s = (1.0 - rho * rho).sqrt();
    let mut data = Vec::with_capacity(m * n);
    for _ in 0..m {
        let mut prev = rng.next_gaussian();
        data.push(T::real(prev));
        for _ in 1..n {
            let z = rng.next_gaussian();
            prev = rho * prev + s * z;
            data.push(T::real(prev));
        }
    }
    Mat::from_vec_unchecked(m, n, data)
}

/// Latent-factor design: the first `informative` predictors split into
/// `blocks` contiguous groups, each sharing one N(0, I_m) factor plus
/// per-predictor N(0, feat_sd² I_m) noise; the remaining predictors are
/// independent white noise.
///
/// Stream contract: the `blocks` factors first (m draws each), then the
/// informative columns in order (m draws each), then the tail columns
/// (m draws each).
pub fn factor_design<T: Scalar>(
    rng: &mut SplitMix64,
    m: usize,
    n: usize,
    informative: usize,
    blocks: usize,
    feat_sd: f64,
) -> Mat<T> {
    assert!(informative <= n && blocks > 0);
    let factors: Vec<Vec<f64>> = (0..blocks)
        .map(|_| (0..m).map(|_| rng.next_gaussian()).collect())
        .collect();
    let block_len = informative.div_ceil(blocks);
    let mut mat = Mat::zeros(m, n);
    for j in 0..informative {
        let f = &factors[(j / block_len).min(blocks - 1)];
        for i in 0..m {
            let v = f[i] + feat_sd * rng.next_gaussian();
            mat.set(i, j, T::real(v));
        }
    }
    for j in informative..n {
        for i in 0..m {
            mat.set(i, j, T::real(rng.next_gaussian()));
        }
    }
    mat
}

/// Draws `b = Xβ* + ς·ε` with ε ~ N(0, I); returns `(b, ς·ε)`.
///
/// Stream contract: m draws, after the design matrix.
pub fn respond<T: Scalar>(
    rng: &mut SplitMix64,
    x: &Mat<T>,
    beta_star: &[f64],
    varsigma: f64,
) -> (Vec<T>, Vec<T>) {
    let beta_t: Vec<T> = beta_star.iter().map(|&v| T::real(v)).collect();
    let mean = x.matvec(&beta_t);
    let noise: Vec<T> = (0..x.rows())
        .map(|_| T::real(varsigma * rng.next_gaussian()))
        .collect();
    let b = mean.iter().zip(&noise).map(|(&mu, &e)| mu + e).collect();
    (b, noise)
}

fn gen_one_set<T: Scalar>(
    rng: &mut SplitMix64,
    example: ExampleId,
    m: usize,
    n: usize,
    beta_star: &[f64],
) -> (ProblemData<T>, Vec<T>) {
    let x = match example {
        ExampleId::Four => {
            let informative = (3 * n).div_ceil(8);
            factor_design(rng, m, n, informative, 3, 0.1)
        }
        _ => ar1_design(rng, m, n, example.ar1_rho()),
    };
    let (b, noise) = respond(rng, &x, beta_star, example.varsigma());
    let data = ProblemData::new(DesignMatrix::Dense(x), b).expect("finite synthetic data");
    (data, noise)
}

/// Generates the train/validation/test triple of one benchmark example from
/// a single seeded stream (train first, then validation, then test).
pub fn gen_synthetic<T: Scalar>(spec: &SyntheticSpec) -> Result<SyntheticBundle<T>> {
    for (name, m) in [
        ("m_train", spec.m_train),
        ("m_val", spec.m_val),
        ("m_test", spec.m_test),
    ] {
        if m == 0 {
            return Err(Error::InvalidParam(format!("{name} must be positive")));
        }
    }
    let n = spec.n();
    let beta_star = spec.example.beta_star(n);
    let mut rng = SplitMix64::new(spec.seed);
    let (train, noise) = gen_one_set::<T>(&mut rng, spec.example, spec.m_train, n, &beta_star);
    let (val, _) = gen_one_set::<T>(&mut rng, spec.example, spec.m_val, n, &beta_star);
    let (test, _) = gen_one_set::<T>(&mut rng, spec.example, spec.m_test, n, &beta_star);
    let support = beta_star
        .iter()
        .enumerate()
        .filter_map(|(i, &v)| (v != 0.0).then_some(i))
        .collect();
    Ok(SyntheticBundle {
        train,
        val,
        test,
        truth: SyntheticTruth {
            beta_star: beta_star.iter().map(|&v| T::real(v)).collect(),
            support,
            noise,
        },
    })
}

/// Rescales every column of `X` to unit Euclidean norm (zero columns are
/// left alone); returns the scaled problem and the applied factors, so
/// coefficients can be mapped back via `β_j · scale_j`.
pub fn unit_norm_columns<T: Scalar>(data: &ProblemData<T>) -> (ProblemData<T>, Vec<T>) {
    let scales: Vec<T> = data
        .x
        .col_sq_norms()
        .iter()
        .map(|&s| if s > T::zero() { s.sqrt().recip() } else { T::one() })
        .collect();
    let scaled = ProblemData {
        x: data.x.scale_cols(&scales),
        b: data.b.clone(),
        feature_names: data.feature_names.clone(),
    };
    (scaled, scales)
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

/// Disjoint, exhaustive holdout split with the stated fractions (which must
/// sum to 1). Deterministic in the seed.
pub fn split_holdout<T: Scalar>(
    data: &ProblemData<T>,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(ProblemData<T>, ProblemData<T>, ProblemData<T>)> {
    let (f0, f1, f2) = fractions;
    if f0 < 0.0 || f1 < 0.0 || f2 < 0.0 || (f0 + f1 + f2 - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParam(format!(
            "fractions must be nonnegative and sum to 1, got ({f0}, {f1}, {f2})"
        )));
    }
    let m = data.nrows();
    let n_train = (f0 * m as f64).round() as usize;
    let n_val = (f1 * m as f64).round() as usize;
    if n_train + n_val > m {
        return Err(Error::InvalidParam("split fractions overflow the sample".into()));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    SplitMix64::new(seed).shuffle(&mut idx);
    let (tr, rest) = idx.split_at(n_train);
    let (va, te) = rest.split_at(n_val);
    Ok((
        data.select_rows(tr),
        data.select_rows(va),
        data.select_rows(te),
    ))
}

/// k disjoint, exhaustive fold index sets (each sorted), deterministic in
/// the seed.
pub fn kfold(m: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k > m {
        return Err(Error::InvalidParam(format!("k must be in 1..={m}, got {k}")));
    }
    let mut idx: Vec<usize> = (0..m).collect();
    SplitMix64::new(seed).shuffle(&mut idx);
    let base = m / k;
    let extra = m % k;
    let mut folds = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold: Vec<usize> = idx[at..at + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        at += len;
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example_parameters_match_protocol() {
        assert_eq!(ExampleId::One.default_n(), 800);
        assert_eq!(ExampleId::Three.default_n(), 400);
        assert_eq!(ExampleId::Four.default_n(), 4000);
        let b1 = ExampleId::One.beta_star(800);
        assert_eq!(b1[0], 3.0);
        assert_eq!(b1[1], 1.5);
        assert_eq!(b1[4], 2.0);
        assert_eq!(b1.iter().filter(|&&v| v != 0.0).count(), 300);
        let b4 = ExampleId::Four.beta_star(4000);
        assert_eq!(b4.iter().filter(|&&v| v != 0.0).count(), 1500);
        assert_eq!(ExampleId::Two.beta_star(800).iter().sum::<f64>(), 400.0);
    }

    #[test]
    fn same_seed_is_bitwise_identical() {
        let spec = SyntheticSpec {
            m_train: 40,
            m_val: 10,
            m_test: 10,
            n_override: Some(16),
            ..SyntheticSpec::new(ExampleId::One, 99)
        };
        let a: SyntheticBundle<f64> = gen_synthetic(&spec).unwrap();
        let b: SyntheticBundle<f64> = gen_synthetic(&spec).unwrap();
        assert_eq!(a.train.b.as_slice(), b.train.b.as_slice());
        assert_eq!(a.test.b.as_slice(), b.test.b.as_slice());
        let (xa, xb) = (a.train.x.to_dense(), b.train.x.to_dense());
        assert_eq!(xa.data(), xb.data());
    }

    #[test]
    fn zero_noise_reproduces_the_mean() {
        let mut rng = SplitMix64::new(5);
        let x: Mat<f64> = ar1_design(&mut rng, 12, 6, 0.5);
        let beta = [1.0, 0.0, -2.0, 0.0, 0.5, 0.0];
        let (b, noise) = respond(&mut rng, &x, &beta, 0.0);
        assert!(noise.iter().all(|&e| e == 0.0));
        assert_eq!(b, x.matvec(&beta.to_vec()));
    }

    /// Sample covariance of AR(1) rows against the closed form ρ^|i−j|.
    #[test]
    fn ar1_covariance_matches_closed_form() {
        let mut rng = SplitMix64::new(123);
        let (m, n, rho) = (100_000, 5, 0.5);
        let x: Mat<f64> = ar1_design(&mut rng, m, n, rho);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for r in 0..m {
                    s += x.get(r, i) * x.get(r, j);
                }
                let c = s / m as f64;
                let expected = rho.powi((i as i32 - j as i32).abs());
                assert!(
                    (c - expected).abs() <= 0.02,
                    "cov({i},{j}) = {c}, expected {expected}"
                );
            }
        }
    }

    #[test]
    fn ar1_marginals_are_standard_normal() {
        let mut rng = SplitMix64::new(7);
        let (m, n) = (4000, 8);
        let x: Mat<f64> = ar1_design(&mut rng, m, n, 0.8);
        for j in 0..n {
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for i in 0..m {
                s1 += x.get(i, j);
                s2 += x.get(i, j) * x.get(i, j);
            }
            let mean = s1 / m as f64;
            let var = s2 / m as f64 - mean * mean;
            assert!(mean.abs() <= 5.0 / (m as f64).sqrt());
            assert!((var - 1.0).abs() <= 0.1);
        }
    }

    #[test]
    fn factor_design_block_structure() {
        let mut rng = SplitMix64::new(11);
        let (m, n, informative) = (2000, 64, 24);
        let x: Mat<f64> = factor_design(&mut rng, m, n, informative, 3, 0.1);
        let col = |j: usize| -> Vec<f64> { (0..m).map(|i| x.get(i, j)).collect() };
        let corr = |a: &[f64], b: &[f64]| {
            let ma = a.iter().sum::<f64>() / m as f64;
            let mb = b.iter().sum::<f64>() / m as f64;
            let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
            for i in 0..m {
                sab += (a[i] - ma) * (b[i] - mb);
                saa += (a[i] - ma) * (a[i] - ma);
                sbb += (b[i] - mb) * (b[i] - mb);
            }
            sab / (saa.sqrt() * sbb.sqrt())
        };
        // within-block correlation ≥ 0.9 (block length 8)
        assert!(corr(&col(0), &col(5)) >= 0.9);
        assert!(corr(&col(8), &col(14)) >= 0.9);
        assert!(corr(&col(16), &col(23)) >= 0.9);
        // block feature vs white-noise tail ≤ 0.1
        assert!(corr(&col(2), &col(40)).abs() <= 0.1);
        assert!(corr(&col(20), &col(60)).abs() <= 0.1);
    }

    #[test]
    fn holdout_sizes_and_partition() {
        let mut rng = SplitMix64::new(2);
        let x: Mat<f64> = ar1_design(&mut rng, 100, 4, 0.5);
        let (b, _) = respond(&mut rng, &x, &[1.0, 0.0, 0.0, 0.0], 1.0);
        let data = ProblemData::new(DesignMatrix::Dense(x), b).unwrap();
        let (tr, va, te) = split_holdout(&data, (0.8, 0.1, 0.1), 5).unwrap();
        assert_eq!((tr.nrows(), va.nrows(), te.nrows()), (80, 10, 10));
        assert!(split_holdout(&data, (0.8, 0.3, -0.1), 5).is_err());
    }

    #[test]
    fn kfold_partitions_are_disjoint_and_exhaustive() {
        // m = 10, k = 10 gives singleton folds
        let folds = kfold(10, 10, 3).unwrap();
        assert!(folds.iter().all(|f| f.len() == 1));

        let mut rng = SplitMix64::new(0);
        for _ in 0..20 {
            let m = 5 + rng.next_below(200);
            let k = 2 + rng.next_below(9.min(m - 1));
            let folds = kfold(m, k, rng.next_u64()).unwrap();
            let mut seen = vec![false; m];
            for f in &folds {
                for &i in f {
                    assert!(!seen[i], "index {i} in two folds");
                    seen[i] = true;
                }
            }
            assert!(seen.iter().all(|&s| s), "folds not exhaustive");
        }
        assert!(kfold(5, 6, 0).is_err());
        assert!(kfold(5, 0, 0).is_err());
    }
}
