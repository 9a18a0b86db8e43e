//! Daubechies discrete wavelet transform with symmetric (half-point)
//! boundary extension.
//!
//! Compression keeps only the approximation coefficients of the deepest
//! level (`tau_n ~ t_n / 2^level`); reconstruction inverts the filter bank
//! with the detail coefficients zeroed. Keeping all coefficients makes the
//! round trip exact, which the tests pin at 1e-10.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Daubechies scaling filters (reconstruction low-pass), sum = sqrt(2).
fn scaling_filter(order: usize) -> Result<&'static [f64]> {
    const DB1: [f64; 2] = [std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2];
    const DB2: [f64; 4] = [
        0.48296291314469025,
        0.8365163037378079,
        0.22414386804185735,
        -0.12940952255092145,
    ];
    const DB3: [f64; 6] = [
        0.3326705529509569,
        0.8068915093133388,
        0.4598775021193313,
        -0.13501102001039084,
        -0.08544127388224149,
        0.035226291882100656,
    ];
    const DB4: [f64; 8] = [
        0.23037781330885523,
        0.7148465705525415,
        0.6308807679295904,
        -0.02798376941698385,
        -0.18703481171888114,
        0.030841381835986965,
        0.032883011666982945,
        -0.010597401784997278,
    ];
    match order {
        1 => Ok(&DB1),
        2 => Ok(&DB2),
        3 => Ok(&DB3),
        4 => Ok(&DB4),
        other => Err(Error::Config(format!(
            "unsupported Daubechies order {other} (1..=4 available)"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveletConfig {
    /// Daubechies order (db4 by default; the filter has `2 * db_order` taps).
    pub db_order: usize,
    /// Decomposition depth.
    pub level: usize,
    /// Length of sequences this config compresses.
    pub original_len: usize,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self {
            db_order: 4,
            level: 4,
            original_len: 0,
        }
    }
}

impl WaveletConfig {
    pub fn filter_len(&self) -> usize {
        2 * self.db_order
    }

    /// Per-level coefficient lengths `n_{j+1} = floor((n_j + L - 1) / 2)`,
    /// starting from `original_len`; entry 0 is the original length.
    pub fn ladder(&self) -> Vec<usize> {
        let l = self.filter_len();
        let mut lengths = Vec::with_capacity(self.level + 1);
        lengths.push(self.original_len);
        let mut n = self.original_len;
        for _ in 0..self.level {
            n = (n + l - 1) / 2;
            lengths.push(n);
        }
        lengths
    }

    /// Approximation length at the deepest level.
    pub fn compressed_len(&self) -> usize {
        *self.ladder().last().unwrap()
    }

    pub fn validate(&self) -> Result<()> {
        scaling_filter(self.db_order)?;
        if self.level == 0 {
            return Err(Error::Config("wavelet level must be >= 1".into()));
        }
        let l = self.filter_len();
        for (lvl, &n) in self.ladder().iter().enumerate().take(self.level) {
            if n < l {
                return Err(Error::Config(format!(
                    "sequence too short: level {lvl} holds {n} samples, filter needs {l}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Filters {
    h: &'static [f64],
}

impl Filters {
    fn new(order: usize) -> Result<Self> {
        Ok(Self {
            h: scaling_filter(order)?,
        })
    }

    fn len(&self) -> usize {
        self.h.len()
    }

    #[inline]
    fn rec_lo(&self, k: usize) -> f64 {
        self.h[k]
    }

    #[inline]
    fn dec_lo(&self, k: usize) -> f64 {
        self.h[self.len() - 1 - k]
    }

    /// Quadrature mirror: `rec_hi[k] = (-1)^k h[L-1-k]`.
    #[inline]
    fn rec_hi(&self, k: usize) -> f64 {
        let l = self.len();
        let v = self.h[l - 1 - k];
        if k % 2 == 0 {
            v
        } else {
            -v
        }
    }

    #[inline]
    fn dec_hi(&self, k: usize) -> f64 {
        self.rec_hi(self.len() - 1 - k)
    }
}

/// Half-point symmetric extension lookup.
#[inline]
fn sym_ext(x: &[f64], idx: isize) -> f64 {
    let n = x.len() as isize;
    let mut k = idx;
    // Fold until inside [0, n); terminates for |idx| within one period.
    loop {
        if k < 0 {
            k = -k - 1;
        } else if k >= n {
            k = 2 * n - k - 1;
        } else {
            return x[k as usize];
        }
    }
}

/// One analysis level: returns (approximation, detail).
fn dwt_step(x: &[f64], f: Filters) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let l = f.len();
    let out_len = (n + l - 1) / 2;
    let mut approx = vec![0.0; out_len];
    let mut detail = vec![0.0; out_len];
    for i in 0..out_len {
        let base = 2 * i as isize + 1;
        let mut a = 0.0;
        let mut d = 0.0;
        for t in 0..l {
            let xv = sym_ext(x, base - t as isize);
            a += f.dec_lo(t) * xv;
            d += f.dec_hi(t) * xv;
        }
        approx[i] = a;
        detail[i] = d;
    }
    (approx, detail)
}

/// One synthesis level, cropped to `out_len` samples.
fn idwt_step(approx: &[f64], detail: &[f64], f: Filters, out_len: usize) -> Vec<f64> {
    let p = approx.len();
    let l = f.len();
    let full = 2 * p + l - 2;
    debug_assert!(out_len + l - 2 <= full);
    let mut out = vec![0.0; out_len];
    for (k, slot) in out.iter_mut().enumerate() {
        let shift = k + l - 2;
        // Coefficients i with filter index shift - 2i in [0, L-1].
        let i_lo = (shift + 1).saturating_sub(l).div_ceil(2);
        let i_hi = (shift / 2).min(p - 1);
        let mut acc = 0.0;
        for i in i_lo..=i_hi {
            let t = shift - 2 * i;
            acc += approx[i] * f.rec_lo(t) + detail[i] * f.rec_hi(t);
        }
        *slot = acc;
    }
    out
}

/// Full decomposition: deepest-level approximation plus per-level details
/// (index 0 = first / finest level).
pub fn wavelet_decompose(seq: &[f64], config: &WaveletConfig) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    config.validate()?;
    if seq.len() != config.original_len {
        return Err(Error::DimensionMismatch(format!(
            "sequence length {} does not match config original_len {}",
            seq.len(),
            config.original_len
        )));
    }
    let f = Filters::new(config.db_order)?;
    let mut approx = seq.to_vec();
    let mut details = Vec::with_capacity(config.level);
    for _ in 0..config.level {
        let (a, d) = dwt_step(&approx, f);
        approx = a;
        details.push(d);
    }
    Ok((approx, details))
}

/// Keep only the deepest approximation coefficients.
pub fn wavelet_compress(seq: &[f64], config: &WaveletConfig) -> Result<Vec<f64>> {
    Ok(wavelet_decompose(seq, config)?.0)
}

/// Invert the filter bank with all detail coefficients zeroed.
pub fn wavelet_reconstruct(coefficients: &[f64], config: &WaveletConfig) -> Result<Vec<f64>> {
    config.validate()?;
    if coefficients.len() != config.compressed_len() {
        return Err(Error::DimensionMismatch(format!(
            "got {} coefficients, config compresses to {}",
            coefficients.len(),
            config.compressed_len()
        )));
    }
    let f = Filters::new(config.db_order)?;
    let ladder = config.ladder();
    let mut approx = coefficients.to_vec();
    for lvl in (0..config.level).rev() {
        let zeros = vec![0.0; approx.len()];
        approx = idwt_step(&approx, &zeros, f, ladder[lvl]);
    }
    Ok(approx)
}

/// Exact inverse from a full coefficient set.
pub fn wavelet_reconstruct_full(
    approx: &[f64],
    details: &[Vec<f64>],
    config: &WaveletConfig,
) -> Result<Vec<f64>> {
    config.validate()?;
    if details.len() != config.level {
        return Err(Error::DimensionMismatch("detail level count".into()));
    }
    let f = Filters::new(config.db_order)?;
    let ladder = config.ladder();
    let mut out = approx.to_vec();
    for lvl in (0..config.level).rev() {
        out = idwt_step(&out, &details[lvl], f, ladder[lvl]);
    }
    Ok(out)
}
