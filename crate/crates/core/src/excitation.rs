//! Multivariate Gaussian load synthesis from a parametric spectral model.
//!
//! Realizations are generated with the spectral-representation method: a sum
//! of cosines on a fixed frequency grid with i.i.d. uniform random phases,
//! one phase per (channel, frequency) pair. Cross-channel correlation comes
//! from an exponential coherence matrix factored per frequency, so each
//! channel is a phase-mixed combination of independent sources.
//!
//! The frequency grid uses `n_freq` midpoints up to the Nyquist frequency of
//! the load resolution: `f_l = (l + 1/2) * df` with `df = 1 / (2 * dt *
//! n_freq)`. On that grid the per-time-point ensemble variance of channel `c`
//! equals `sum_l S_c(f_l) * df` exactly, which the tests exploit.
//!
//! Phases are laid out channel-major: `theta[m * n_freq + l]` is the phase of
//! source `m` at frequency `l`. Seeds replay across runs because phase
//! sampling reads exactly `n_channels * n_freq` uniforms from a per-sample
//! stream.

use std::cell::RefCell;
use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-sided power spectral density of a single load channel:
/// `S(f) = intensity / (1 + (f / corner_hz)^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelPsd {
    /// Reference intensity (spectral level at f = 0), in force^2 / Hz.
    pub intensity: f64,
    /// Corner frequency of the low-pass roll-off, Hz.
    pub corner_hz: f64,
}

impl ChannelPsd {
    pub fn value(&self, f_hz: f64) -> f64 {
        let r = f_hz / self.corner_hz;
        self.intensity / (1.0 + r * r)
    }
}

/// Deterministic amplitude envelope: linear ramp up, unity plateau, linear
/// ramp down, then a zero tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSpec {
    pub ramp_up_s: f64,
    pub ramp_down_s: f64,
    pub tail_zero_s: f64,
}

impl EnvelopeSpec {
    pub fn total(&self) -> f64 {
        self.ramp_up_s + self.ramp_down_s + self.tail_zero_s
    }

    /// Envelope value at time `t` within a record of length `duration`.
    pub fn value(&self, t: f64, duration: f64) -> f64 {
        let tail_start = duration - self.tail_zero_s;
        let down_start = tail_start - self.ramp_down_s;
        if t >= tail_start {
            0.0
        } else if t >= down_start {
            (tail_start - t) / self.ramp_down_s
        } else if t < self.ramp_up_s {
            t / self.ramp_up_s
        } else {
            1.0
        }
    }
}

/// Parametric spectral model of the multivariate stochastic load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralLoadModel {
    pub n_channels: usize,
    /// Load resolution, seconds.
    pub dt: f64,
    /// Record length, seconds.
    pub duration: f64,
    /// Per-channel PSD parameters; length `n_channels`.
    pub psd: Vec<ChannelPsd>,
    /// Exponential cross-channel coherence: corr(j, k) = exp(-decay * |j - k|).
    pub coherence_decay: f64,
    /// Number of frequency components up to Nyquist.
    pub n_freq: usize,
    pub envelope: EnvelopeSpec,
}

impl SpectralLoadModel {
    pub fn validate(&self) -> Result<()> {
        if self.n_channels == 0 || self.psd.len() != self.n_channels {
            return Err(Error::Config(format!(
                "psd must list one entry per channel (have {}, expected {})",
                self.psd.len(),
                self.n_channels
            )));
        }
        if self.n_freq < 1 {
            return Err(Error::Config("n_freq must be >= 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Config("dt must be positive".into()));
        }
        if self.duration < self.envelope.total() {
            return Err(Error::Config(
                "duration shorter than ramp_up + ramp_down + tail_zero".into(),
            ));
        }
        if self.coherence_decay < 0.0 {
            return Err(Error::Config("coherence_decay must be >= 0".into()));
        }
        for (i, p) in self.psd.iter().enumerate() {
            if !(p.intensity >= 0.0) || !(p.corner_hz > 0.0) {
                return Err(Error::Config(format!(
                    "channel {i}: intensity must be >= 0 and corner_hz > 0"
                )));
            }
        }
        Ok(())
    }

    /// Number of time steps in a realization.
    pub fn t_n(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    /// Dimension of the uncertain phase vector.
    pub fn n_theta(&self) -> usize {
        self.n_channels * self.n_freq
    }

    /// Frequency grid spacing, Hz.
    pub fn delta_f(&self) -> f64 {
        1.0 / (2.0 * self.dt * self.n_freq as f64)
    }

    /// Midpoint frequency of component `l`, Hz.
    pub fn freq(&self, l: usize) -> f64 {
        (l as f64 + 0.5) * self.delta_f()
    }

    /// Discrete spectral mass `sum_l S_c(f_l) * df`: the exact per-time-point
    /// ensemble variance of channel `c` before the envelope is applied.
    pub fn target_variance(&self, channel: usize) -> f64 {
        let df = self.delta_f();
        (0..self.n_freq)
            .map(|l| self.psd[channel].value(self.freq(l)) * df)
            .sum()
    }
}

/// The uncertain parameter vector: i.i.d. uniform phases in [0, 2pi).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector {
    pub values: Vec<f64>,
}

impl PhaseVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// A discretized multivariate load realization.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationRealization {
    /// `n_channels x t_n` force samples.
    pub samples: DMatrix<f64>,
    pub dt: f64,
}

impl ExcitationRealization {
    pub fn n_channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn t_n(&self) -> usize {
        self.samples.ncols()
    }

    /// Linear interpolation of channel `c` at time `t` (clamped to the grid).
    pub fn interp(&self, c: usize, t: f64) -> f64 {
        let n = self.t_n();
        let x = t / self.dt;
        if x <= 0.0 {
            return self.samples[(c, 0)];
        }
        let i = x.floor() as usize;
        if i + 1 >= n {
            return self.samples[(c, n - 1)];
        }
        let w = x - i as f64;
        self.samples[(c, i)] * (1.0 - w) + self.samples[(c, i + 1)] * w
    }
}

/// Draw the phase vector for one sample from its dedicated stream.
///
/// Reads exactly `n_channels * n_freq` uniforms, so the mapping from
/// `(seed, sample index)` to phases is independent of execution order.
pub fn sample_phases<R: Rng>(rng: &mut R, model: &SpectralLoadModel) -> PhaseVector {
    let values = (0..model.n_theta()).map(|_| rng.gen::<f64>() * TAU).collect();
    PhaseVector { values }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Precomputed synthesis operator for a spectral load model.
///
/// Holds the per-frequency coherence factors so repeated synthesis only pays
/// for coefficient assembly and one inverse FFT per channel.
pub struct Synthesizer {
    model: SpectralLoadModel,
    /// `factors[l]` is the lower-triangular factor of the unit-intensity
    /// cross-spectral matrix at frequency `l`, scaled by `sqrt(2 df)`.
    factors: Vec<DMatrix<f64>>,
    /// Per-channel `sqrt(intensity)`, factored out of the Cholesky so that
    /// intensity scaling acts as a single multiplier on the realization.
    sqrt_intensity: Vec<f64>,
    fft_len: usize,
}

impl Synthesizer {
    pub fn new(model: &SpectralLoadModel) -> Result<Self> {
        model.validate()?;
        let n = model.n_channels;
        let df = model.delta_f();
        let mut factors = Vec::with_capacity(model.n_freq);
        for l in 0..model.n_freq {
            let f = model.freq(l);
            let mut s = DMatrix::zeros(n, n);
            for j in 0..n {
                let shape_j = 1.0 / (1.0 + (f / model.psd[j].corner_hz).powi(2));
                for k in 0..n {
                    let shape_k = 1.0 / (1.0 + (f / model.psd[k].corner_hz).powi(2));
                    let coh = (-model.coherence_decay * (j as f64 - k as f64).abs()).exp();
                    s[(j, k)] = (shape_j * shape_k).sqrt() * coh;
                }
            }
            let mut l_fac = psd_cholesky(&s);
            l_fac *= (2.0 * df).sqrt();
            factors.push(l_fac);
        }
        let sqrt_intensity = model.psd.iter().map(|p| p.intensity.sqrt()).collect();
        Ok(Self {
            model: model.clone(),
            factors,
            sqrt_intensity,
            fft_len: 2 * model.n_freq,
        })
    }

    pub fn model(&self) -> &SpectralLoadModel {
        &self.model
    }

    /// Realize the load for one phase vector; envelope applied last.
    pub fn synthesize(&self, theta: &PhaseVector) -> Result<ExcitationRealization> {
        if theta.len() != self.model.n_theta() {
            return Err(Error::DimensionMismatch(format!(
                "phase vector has {} entries, model needs {}",
                theta.len(),
                self.model.n_theta()
            )));
        }
        let t_n = self.model.t_n();
        let n = self.model.n_channels;
        let mut samples = DMatrix::zeros(n, t_n);
        for j in 0..n {
            let g = self.channel_sum(theta, |l, m| self.factors[l][(j, m)], j + 1);
            let scale = self.sqrt_intensity[j];
            for (i, v) in time_series(&g, t_n, self.fft_len).enumerate() {
                samples[(j, i)] = scale * v;
            }
        }
        apply_envelope_matrix(&mut samples, &self.model.envelope, self.model.dt, self.model.duration);
        Ok(ExcitationRealization {
            samples,
            dt: self.model.dt,
        })
    }

    /// Realize scalar linear functionals `w^T F(t)` of the (pre-envelope unit
    /// envelope aside) load without forming all channels.
    ///
    /// Each requested weight vector costs one inverse FFT regardless of the
    /// channel count, which keeps stratification-variable evaluation cheap.
    pub fn synthesize_functionals(
        &self,
        theta: &PhaseVector,
        weights: &[Vec<f64>],
    ) -> Result<Vec<Vec<f64>>> {
        if theta.len() != self.model.n_theta() {
            return Err(Error::DimensionMismatch(format!(
                "phase vector has {} entries, model needs {}",
                theta.len(),
                self.model.n_theta()
            )));
        }
        let n = self.model.n_channels;
        let t_n = self.model.t_n();
        let mut out = Vec::with_capacity(weights.len());
        for w in weights {
            if w.len() != n {
                return Err(Error::DimensionMismatch(format!(
                    "functional weight has {} entries, model has {} channels",
                    w.len(),
                    n
                )));
            }
            // Coefficient of source m at frequency l: sum_j w_j sqrt(I_j) L[l][j][m].
            let g = self.channel_sum(
                theta,
                |l, m| {
                    (0..n)
                        .map(|j| w[j] * self.sqrt_intensity[j] * self.factors[l][(j, m)])
                        .sum::<f64>()
                },
                n,
            );
            let mut series: Vec<f64> = time_series(&g, t_n, self.fft_len).collect();
            for (i, v) in series.iter_mut().enumerate() {
                *v *= self.model.envelope.value(i as f64 * self.model.dt, self.model.duration);
            }
            out.push(series);
        }
        Ok(out)
    }

    /// Assemble complex spectral coefficients summed over sources and run the
    /// inverse FFT. `coeff(l, m)` supplies the real amplitude of source `m`
    /// at frequency `l`; `m_max` bounds the source range.
    fn channel_sum<F: Fn(usize, usize) -> f64>(
        &self,
        theta: &PhaseVector,
        coeff: F,
        m_max: usize,
    ) -> Vec<Complex<f64>> {
        let n_freq = self.model.n_freq;
        let mut buf = vec![Complex::new(0.0, 0.0); self.fft_len];
        for l in 0..n_freq {
            let mut acc = Complex::new(0.0, 0.0);
            for m in 0..m_max {
                let a = coeff(l, m);
                if a != 0.0 {
                    let phi = theta.values[m * n_freq + l];
                    acc += Complex::new(a * phi.cos(), a * phi.sin());
                }
            }
            buf[l] = acc;
        }
        PLANNER.with(|p| {
            let fft = p.borrow_mut().plan_fft_inverse(self.fft_len);
            fft.process(&mut buf);
        });
        buf
    }
}

/// Expand the (unnormalized) inverse-FFT output into the time series
/// `F(t_i) = Re[exp(i pi i / N) g[i mod N]]`, exact for the midpoint grid.
fn time_series(g: &[Complex<f64>], t_n: usize, n_fft: usize) -> impl Iterator<Item = f64> + '_ {
    (0..t_n).map(move |i| {
        let rot = Complex::from_polar(1.0, PI * i as f64 / n_fft as f64);
        (rot * g[i % n_fft]).re
    })
}

/// Cholesky factorization tolerant of positive-semidefinite input
/// (fully coherent channels make the coherence matrix rank deficient).
fn psd_cholesky(s: &DMatrix<f64>) -> DMatrix<f64> {
    let n = s.nrows();
    let mut l = DMatrix::zeros(n, n);
    let scale = (0..n).map(|i| s[(i, i)]).fold(0.0f64, f64::max);
    for j in 0..n {
        let mut d = s[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 1e-14 * scale {
            // Semidefinite direction: no independent source for this channel.
            continue;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..n {
            let mut v = s[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    l
}

/// Apply the envelope to every channel of a realization in place.
fn apply_envelope_matrix(samples: &mut DMatrix<f64>, env: &EnvelopeSpec, dt: f64, duration: f64) {
    for i in 0..samples.ncols() {
        let e = env.value(i as f64 * dt, duration);
        if e != 1.0 {
            for c in 0..samples.nrows() {
                samples[(c, i)] *= e;
            }
        }
    }
}

/// Apply an envelope to a scalar series.
pub fn apply_envelope(series: &[f64], env: &EnvelopeSpec, dt: f64) -> Result<Vec<f64>> {
    let duration = series.len() as f64 * dt;
    if env.total() > duration + 1e-12 {
        return Err(Error::Config(format!(
            "envelope spans {:.3} s but the series covers only {:.3} s",
            env.total(),
            duration
        )));
    }
    Ok(series
        .iter()
        .enumerate()
        .map(|(i, v)| v * env.value(i as f64 * dt, duration))
        .collect())
}

/// Convenience wrapper building a throwaway [`Synthesizer`].
pub fn synthesize(model: &SpectralLoadModel, theta: &PhaseVector) -> Result<ExcitationRealization> {
    Synthesizer::new(model)?.synthesize(theta)
}
