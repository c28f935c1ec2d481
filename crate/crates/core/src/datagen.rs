//! Synthetic observations for two scenario families: i.i.d. Gaussian
//! regressors, and the cognitive-radio power-spectrum model in which every
//! node's regressor is a Gaussian-atom basis scaled by per-source path gains.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, Uniform};

use crate::model::{Dimensions, ModelError, Observation, Scenario};

/// Range of the uniform distribution the ground-truth coefficients are drawn from.
pub const TRUTH_RANGE: (f64, f64) = (0.5, 1.5);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DatagenError {
    #[error("regressor standard deviation must be positive and finite, got {0}")]
    RegressorStddev(f64),
    #[error("{0} must be at least 1")]
    ZeroCount(&'static str),
    #[error("frequency band must satisfy f_min < f_max, got [{f_min}, {f_max}]")]
    Band { f_min: f64, f_max: f64 },
    #[error("basis width must be positive and finite, got {0}")]
    BasisWidth(f64),
    #[error("L must exceed (Q+1)J={required}, got L={n_channels}")]
    TooFewChannels { n_channels: usize, required: usize },
    #[error("gain jitter must lie in [0, 1], got {0}")]
    GainJitter(f64),
    #[error("gain pattern must have {expected_rows} rows of {expected_cols} nonnegative gains")]
    GainPattern {
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error(
        "spectrum scenario requires m_global = Q*J = {m_global}, m_local = J = {m_local}, \
         l_obs = L = {l_obs}"
    )]
    SpectrumDims {
        m_global: usize,
        m_local: usize,
        l_obs: usize,
    },
}

/// How regressors are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum RegressorSpec {
    /// Every regressor entry is i.i.d. `N(0, stddev^2)`, fresh each iteration.
    Gaussian {
        stddev: f64,
    },
    Spectrum(SpectrumSpec),
}

impl RegressorSpec {
    pub fn validate(&self) -> Result<(), DatagenError> {
        match self {
            RegressorSpec::Gaussian { stddev } => {
                if stddev.is_finite() && *stddev > 0.0 {
                    Ok(())
                } else {
                    Err(DatagenError::RegressorStddev(*stddev))
                }
            }
            RegressorSpec::Spectrum(spec) => spec.validate(),
        }
    }

    pub(crate) fn check_dimensions(&self, dims: &Dimensions) -> Result<(), DatagenError> {
        self.validate()?;
        if let RegressorSpec::Spectrum(spec) = self {
            let expected = spec.dimensions(dims.n_nodes);
            if (dims.m_global, dims.m_local, dims.l_obs)
                != (expected.m_global, expected.m_local, expected.l_obs)
            {
                return Err(DatagenError::SpectrumDims {
                    m_global: expected.m_global,
                    m_local: expected.m_local,
                    l_obs: expected.l_obs,
                });
            }
            spec.check_gains(dims.n_nodes)?;
        }
        Ok(())
    }
}

/// Basis-expansion model of the received power spectral density.
///
/// Node `k` observes `n_channels` PSD samples. Its regressor is
/// `[B g_{k,1} | ... | B g_{k,Q} | B g_{k,LI}]` where `B` is the `L x J`
/// Gaussian-atom basis and each `g` is a scalar path gain from one primary
/// user (or the node's own interference source) to the node.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumSpec {
    /// Number of primary users, `Q`.
    pub q_primary: usize,
    /// Basis functions per source, `J`.
    pub j_basis: usize,
    /// Frequency samples per observation, `L`.
    pub n_channels: usize,
    pub f_min: f64,
    pub f_max: f64,
    /// Standard deviation of each Gaussian atom, in Hz.
    pub basis_width: f64,
    /// Per-node base gains, one row of `Q + 1` entries per node (primary
    /// users first, local interferer last). `None` means every gain is 1.
    pub gains: Option<Vec<Vec<f64>>>,
    /// Per-iteration fading: each gain is multiplied by
    /// `(1 - jitter) + jitter * E` with `E ~ Exp(1)`. 0 keeps gains fixed,
    /// 1 gives Rayleigh-faded power.
    pub gain_jitter: f64,
}

impl SpectrumSpec {
    /// Spec with the default atom width `(f_max - f_min) / J`, unit gains and
    /// no fading.
    pub fn new(
        q_primary: usize,
        j_basis: usize,
        n_channels: usize,
        f_min: f64,
        f_max: f64,
    ) -> Self {
        Self {
            q_primary,
            j_basis,
            n_channels,
            f_min,
            f_max,
            basis_width: (f_max - f_min) / j_basis.max(1) as f64,
            gains: None,
            gain_jitter: 0.0,
        }
    }

    pub fn sources(&self) -> usize {
        self.q_primary + 1
    }

    pub fn dimensions(&self, n_nodes: usize) -> Dimensions {
        Dimensions {
            n_nodes,
            m_global: self.q_primary * self.j_basis,
            m_local: self.j_basis,
            l_obs: self.n_channels,
        }
    }

    pub fn validate(&self) -> Result<(), DatagenError> {
        if self.q_primary == 0 {
            return Err(DatagenError::ZeroCount("Q"));
        }
        if self.j_basis == 0 {
            return Err(DatagenError::ZeroCount("J"));
        }
        if !(self.f_min.is_finite() && self.f_max.is_finite() && self.f_min < self.f_max) {
            return Err(DatagenError::Band {
                f_min: self.f_min,
                f_max: self.f_max,
            });
        }
        if !(self.basis_width.is_finite() && self.basis_width > 0.0) {
            return Err(DatagenError::BasisWidth(self.basis_width));
        }
        let required = self.sources() * self.j_basis;
        if self.n_channels <= required {
            return Err(DatagenError::TooFewChannels {
                n_channels: self.n_channels,
                required,
            });
        }
        if !(0.0..=1.0).contains(&self.gain_jitter) {
            return Err(DatagenError::GainJitter(self.gain_jitter));
        }
        Ok(())
    }

    fn check_gains(&self, n_nodes: usize) -> Result<(), DatagenError> {
        let Some(rows) = &self.gains else {
            return Ok(());
        };
        let ok = rows.len() == n_nodes
            && rows
                .iter()
                .all(|r| r.len() == self.sources() && r.iter().all(|g| g.is_finite() && *g >= 0.0));
        if ok {
            Ok(())
        } else {
            Err(DatagenError::GainPattern {
                expected_rows: n_nodes,
                expected_cols: self.sources(),
            })
        }
    }

    /// Base (mean) gain from source `source` to node `k`.
    pub fn base_gain(&self, k: usize, source: usize) -> f64 {
        self.gains.as_ref().map_or(1.0, |rows| rows[k][source])
    }

    /// `n` equally spaced points on `[f_min, f_max]`; a single point sits at
    /// the band centre.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![0.5 * (self.f_min + self.f_max)];
        }
        let step = (self.f_max - self.f_min) / (n - 1) as f64;
        (0..n).map(|i| self.f_min + step * i as f64).collect()
    }

    pub fn channel_frequencies(&self) -> Vec<f64> {
        self.grid(self.n_channels)
    }

    pub fn basis_centers(&self) -> Vec<f64> {
        self.grid(self.j_basis)
    }
}

/// `L x J` matrix with entry `(m, j) = exp(-(f_m - c_j)^2 / (2 w^2))`.
pub fn gaussian_basis_matrix(spec: &SpectrumSpec) -> Result<DMatrix<f64>, DatagenError> {
    spec.validate()?;
    let freqs = spec.channel_frequencies();
    let centers = spec.basis_centers();
    let two_var = 2.0 * spec.basis_width * spec.basis_width;
    Ok(DMatrix::from_fn(freqs.len(), centers.len(), |m, j| {
        let df = freqs[m] - centers[j];
        (-(df * df) / two_var).exp()
    }))
}

/// Draws the ground truth for a scenario. Every coefficient is uniform on
/// [`TRUTH_RANGE`]; the global block is shared, local blocks are i.i.d. per
/// node.
pub fn make_scenario<R: Rng + ?Sized>(
    spec: RegressorSpec,
    dims: Dimensions,
    noise_stddev: Vec<f64>,
    rng: &mut R,
) -> Result<Scenario, ModelError> {
    spec.check_dimensions(&dims)?;
    let coeff = Uniform::new_inclusive(TRUTH_RANGE.0, TRUTH_RANGE.1);
    let w_global = DVector::from_fn(dims.m_global, |_, _| coeff.sample(rng));
    let xi_local = (0..dims.n_nodes)
        .map(|_| DVector::from_fn(dims.m_local, |_, _| coeff.sample(rng)))
        .collect();
    Scenario::new(dims, w_global, xi_local, noise_stddev, spec)
}

/// Draws node `k`'s observation for one time instant:
/// `d = U_global w + U_local xi_k + v` with white noise `v`.
///
/// Draw order is fixed: regressor randomness first (entries column-major,
/// or the `Q + 1` gains), then `L` noise samples.
pub fn sample_observation<R: Rng + ?Sized>(
    scenario: &Scenario,
    k: usize,
    rng: &mut R,
) -> Observation {
    let dims = &scenario.dims;
    let (u_global, u_local) = match &scenario.regressor_spec {
        RegressorSpec::Gaussian { stddev } => {
            let mut entry = || stddev * rng.sample::<f64, _>(StandardNormal);
            let ug = DMatrix::from_fn(dims.l_obs, dims.m_global, |_, _| entry());
            let ul = DMatrix::from_fn(dims.l_obs, dims.m_local, |_, _| entry());
            (ug, ul)
        }
        RegressorSpec::Spectrum(spec) => {
            let basis = scenario
                .basis()
                .expect("spectrum scenarios carry their basis matrix");
            let gains: Vec<f64> = (0..spec.sources())
                .map(|q| {
                    let base = spec.base_gain(k, q);
                    if spec.gain_jitter > 0.0 {
                        let e: f64 = rng.sample(Exp1);
                        base * ((1.0 - spec.gain_jitter) + spec.gain_jitter * e)
                    } else {
                        base
                    }
                })
                .collect();
            let j = spec.j_basis;
            let mut ug = DMatrix::zeros(dims.l_obs, dims.m_global);
            for (q, g) in gains[..spec.q_primary].iter().enumerate() {
                ug.columns_mut(q * j, j).copy_from(&(basis * *g));
            }
            let ul = basis * gains[spec.q_primary];
            (ug, ul)
        }
    };
    let sigma = scenario.noise_stddev[k];
    let mut d = &u_global * &scenario.w_global + &u_local * &scenario.xi_local[k];
    for v in d.iter_mut() {
        *v += sigma * rng.sample::<f64, _>(StandardNormal);
    }
    Observation {
        node: k,
        u_global,
        u_local,
        d,
    }
}

/// Second-order moment `E{U_k^T U_k}` of node `k`'s full regressor
/// `[U_global | U_local]`, computed in closed form.
pub fn regressor_covariance(scenario: &Scenario, k: usize) -> DMatrix<f64> {
    let dims = &scenario.dims;
    let m = dims.node_params();
    match &scenario.regressor_spec {
        RegressorSpec::Gaussian { stddev } => {
            DMatrix::identity(m, m) * (dims.l_obs as f64 * stddev * stddev)
        }
        RegressorSpec::Spectrum(spec) => {
            let basis = scenario.basis().expect("spectrum basis");
            let gram = basis.transpose() * basis;
            let j = spec.j_basis;
            // E{g_a g_b} = base_a base_b (1 + jitter^2 [a == b]) since Var(Exp(1)) = 1.
            let mut r = DMatrix::zeros(m, m);
            for a in 0..spec.sources() {
                for b in 0..spec.sources() {
                    let mut moment = spec.base_gain(k, a) * spec.base_gain(k, b);
                    if a == b {
                        moment *= 1.0 + spec.gain_jitter * spec.gain_jitter;
                    }
                    r.view_mut((a * j, b * j), (j, j))
                        .copy_from(&(&gram * moment));
                }
            }
            r
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn fig_spec() -> SpectrumSpec {
        SpectrumSpec::new(2, 16, 80, 30e6, 45e6)
    }

    #[test]
    fn basis_peaks_at_centers_and_stays_in_unit_interval() {
        let mut spec = SpectrumSpec::new(1, 4, 13, 0.0, 12.0);
        spec.basis_width = 2.0;
        let b = gaussian_basis_matrix(&spec).unwrap();
        // channels 0,1,...,12; centers 0,4,8,12
        for (j, m) in [0usize, 4, 8, 12].into_iter().enumerate() {
            assert_eq!(b[(m, j)], 1.0);
        }
        assert!(b.iter().all(|&v| v > 0.0 && v <= 1.0));
    }

    #[test]
    fn basis_matches_pointwise_evaluation() {
        let spec = fig_spec();
        let b = gaussian_basis_matrix(&spec).unwrap();
        let width = 15e6 / 16.0;
        let mut max_diff: f64 = 0.0;
        for m in 0..80 {
            let f = 30e6 + 15e6 * m as f64 / 79.0;
            for j in 0..16 {
                let c = 30e6 + 15e6 * j as f64 / 15.0;
                let direct = (-0.5 * ((f - c) / width).powi(2)).exp();
                max_diff = max_diff.max((direct - b[(m, j)]).abs());
            }
        }
        assert!(max_diff < 1e-12, "{max_diff}");

        // Away from the band edges the atoms tile the band evenly.
        let sums: Vec<f64> = (20..60).map(|m| b.row(m).sum()).collect();
        let (lo, hi) = sums
            .iter()
            .fold((f64::MAX, f64::MIN), |(lo, hi), s| (lo.min(*s), hi.max(*s)));
        assert!((hi - lo) / hi < 0.01, "interior row sums {lo}..{hi}");
    }

    #[test]
    fn basis_rejects_bad_width() {
        let mut spec = fig_spec();
        spec.basis_width = 0.0;
        assert_eq!(
            gaussian_basis_matrix(&spec),
            Err(DatagenError::BasisWidth(0.0))
        );
    }

    #[test]
    fn channel_count_must_exceed_parameter_count() {
        let mut spec = fig_spec();
        spec.n_channels = 48;
        assert_eq!(
            spec.validate(),
            Err(DatagenError::TooFewChannels {
                n_channels: 48,
                required: 48
            })
        );
        spec.n_channels = 49;
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn spectrum_dimensions_follow_sources_and_atoms() {
        let spec = fig_spec();
        let dims = spec.dimensions(10);
        assert_eq!(
            (dims.m_global, dims.m_local, dims.augmented_len()),
            (32, 16, 32 + 160)
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let wrong = Dimensions::new(10, 16, 16, 80).unwrap();
        assert!(make_scenario(
            RegressorSpec::Spectrum(spec),
            wrong,
            vec![0.0; 10],
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn scenario_is_deterministic_and_locals_differ() {
        let dims = Dimensions::new(4, 3, 2, 5).unwrap();
        let spec = RegressorSpec::Gaussian { stddev: 1.0 };
        let a = make_scenario(
            spec.clone(),
            dims,
            vec![0.1; 4],
            &mut ChaCha8Rng::seed_from_u64(9),
        )
        .unwrap();
        let b = make_scenario(spec, dims, vec![0.1; 4], &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.w_global, b.w_global);
        assert_eq!(a.xi_local, b.xi_local);
        for i in 0..4 {
            for j in i + 1..4 {
                assert_ne!(a.xi_local[i], a.xi_local[j]);
            }
        }
        assert!(a
            .w_global
            .iter()
            .chain(a.xi_local.iter().flat_map(|x| x.iter()))
            .all(|v| (0.5..=1.5).contains(v)));
    }

    #[test]
    fn noiseless_observation_without_local_part_is_exact() {
        let dims = Dimensions::new(2, 3, 2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec = RegressorSpec::Gaussian { stddev: 1.0 };
        let mut s = make_scenario(spec, dims, vec![0.0; 2], &mut rng).unwrap();
        s.xi_local = vec![DVector::zeros(2); 2];
        let obs = sample_observation(&s, 1, &mut rng);
        assert_eq!(obs.d, &obs.u_global * &s.w_global);
    }

    #[test]
    fn observation_is_deterministic_in_rng_state() {
        let spec = RegressorSpec::Spectrum(SpectrumSpec {
            gain_jitter: 0.5,
            ..fig_spec()
        });
        let dims = fig_spec().dimensions(3);
        let s = make_scenario(spec, dims, vec![0.2; 3], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let a = sample_observation(&s, 2, &mut ChaCha8Rng::seed_from_u64(5));
        let b = sample_observation(&s, 2, &mut ChaCha8Rng::seed_from_u64(5));
        assert_eq!(a, b);
    }

    #[test]
    fn spectrum_regressor_is_gain_scaled_basis() {
        let spec = SpectrumSpec {
            gains: Some(vec![vec![1.0, 2.0, 0.5], vec![3.0, 1.0, 1.0]]),
            ..fig_spec()
        };
        let dims = spec.dimensions(2);
        let s = make_scenario(
            RegressorSpec::Spectrum(spec),
            dims,
            vec![0.0; 2],
            &mut ChaCha8Rng::seed_from_u64(2),
        )
        .unwrap();
        let b = s.basis().unwrap().clone();
        let obs = sample_observation(&s, 0, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(obs.u_global.columns(0, 16).into_owned(), b.clone());
        assert_eq!(obs.u_global.columns(16, 16).into_owned(), &b * 2.0);
        assert_eq!(obs.u_local, &b * 0.5);
        // Without fading the regressor is constant over time.
        let again = sample_observation(&s, 0, &mut ChaCha8Rng::seed_from_u64(77));
        assert_eq!(obs.u_global, again.u_global);
    }

    #[test]
    fn noise_covariance_matches_variance() {
        // Zero regressors isolate the noise: d = v.
        let dims = Dimensions::new(1, 1, 1, 3).unwrap();
        let spec = RegressorSpec::Gaussian { stddev: 1.0 };
        let mut s =
            make_scenario(spec, dims, vec![0.3], &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        s.w_global.fill(0.0);
        s.xi_local[0].fill(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mut cov = DMatrix::<f64>::zeros(3, 3);
        for _ in 0..n {
            let v = sample_observation(&s, 0, &mut rng).d;
            cov += &v * v.transpose();
        }
        cov /= n as f64;
        let var = 0.09;
        for i in 0..3 {
            assert!(
                (cov[(i, i)] - var).abs() / var < 0.02,
                "diag {}",
                cov[(i, i)]
            );
            for j in 0..3 {
                if i != j {
                    assert!(cov[(i, j)].abs() < 0.02 * var, "off-diag {}", cov[(i, j)]);
                }
            }
        }
    }

    #[test]
    fn cross_moment_matches_covariance_times_truth() {
        // E{U^T d} = R_U col{w, xi_k}: consistency with the normal-equation right-hand side.
        let dims = Dimensions::new(2, 2, 1, 3).unwrap();
        let spec = RegressorSpec::Gaussian { stddev: 0.7 };
        let s = make_scenario(
            spec,
            dims,
            vec![0.5, 0.5],
            &mut ChaCha8Rng::seed_from_u64(8),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let n = 100_000;
        let mut acc = DVector::<f64>::zeros(3);
        let mut resid = DVector::<f64>::zeros(3);
        let truth = s.node_truth(1);
        for _ in 0..n {
            let obs = sample_observation(&s, 1, &mut rng);
            let u = obs.regressor();
            acc += u.transpose() * &obs.d;
            resid += &obs.d - &u * &truth;
        }
        acc /= n as f64;
        resid /= n as f64;
        let expected = regressor_covariance(&s, 1) * &truth;
        assert!((acc - &expected).amax() < 0.02 * expected.amax());
        // Unbiased noise: mean residual within 3 sigma / sqrt(n).
        let bound = 3.0 * 0.5 / (n as f64).sqrt();
        assert!(resid.amax() < bound, "{} vs {bound}", resid.amax());
    }

    #[test]
    fn spectrum_covariance_matches_empirical_moment() {
        let spec = SpectrumSpec {
            gain_jitter: 1.0,
            gains: Some(vec![vec![1.0, 0.5, 2.0]]),
            ..SpectrumSpec::new(2, 2, 8, 0.0, 1.0)
        };
        let dims = spec.dimensions(1);
        let s = make_scenario(
            RegressorSpec::Spectrum(spec),
            dims,
            vec![0.0],
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000;
        let mut acc = DMatrix::<f64>::zeros(6, 6);
        for _ in 0..n {
            let u = sample_observation(&s, 0, &mut rng).regressor();
            acc += u.transpose() * u;
        }
        acc /= n as f64;
        let r = regressor_covariance(&s, 0);
        assert!((acc - &r).amax() < 0.03 * r.amax());
    }
}
