use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{Envelope, ScalarFunction};
use crate::error::{Error, Result};
use crate::C64;

/// `∫ |ĝ(ξ)| dξ` with `ĝ(ξ) = ∫ g(x) e^{−ixξ} dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourierL1 {
    pub value: f64,
    /// Change between the last two refinement levels.
    pub error: f64,
    pub converged: bool,
    pub samples: usize,
}

const BASE_SAMPLES: usize = 256;
const BASE_PAD: usize = 8;
const MAX_LEVEL: u32 = 6;
const REL_TOL: f64 = 1e-5;

/// Riemann sum of `|ĝ|` over the frequencies of an `m`-sample trapezoid grid
/// zero-padded by `pad`.
fn level_estimate(g: &ScalarFunction, lo: f64, hi: f64, m: usize, pad: usize) -> Result<f64> {
    let dx = (hi - lo) / m as f64;
    let p = pad * (m + 1);
    let mut buf = vec![C64::new(0.0, 0.0); p];
    for (j, slot) in buf.iter_mut().take(m + 1).enumerate() {
        let w = if j == 0 || j == m { 0.5 } else { 1.0 };
        *slot = g.value(lo + j as f64 * dx)? * w;
    }
    FftPlanner::new().plan_fft_forward(p).process(&mut buf);
    // ĝ_k = dx·F_k on a frequency grid of spacing 2π/(p·dx)
    Ok(2.0 * std::f64::consts::PI / p as f64 * buf.iter().map(|z| z.norm()).sum::<f64>())
}

/// Fourier `L¹` norm by FFT quadrature over the effective window, refining
/// sample density and frequency resolution together until successive levels
/// agree.
pub fn fourier_l1(g: &ScalarFunction) -> Result<FourierL1> {
    let (lo, hi) = match g.effective_window() {
        Some(w) => w,
        None => {
            return Err(match g.envelope() {
                Some(Envelope::Power { power }) if power > 1.0 => Error::capability(format!(
                    "{}: Fourier L¹ needs compact support or rapid decay",
                    g.name()
                )),
                _ => Error::domain(format!("{} is not integrable on ℝ", g.name())),
            })
        }
    };
    if hi <= lo {
        return Ok(FourierL1 {
            value: 0.0,
            error: 0.0,
            converged: true,
            samples: 0,
        });
    }
    let mut prev = level_estimate(g, lo, hi, BASE_SAMPLES, BASE_PAD)?;
    let mut out = FourierL1 {
        value: prev,
        error: f64::INFINITY,
        converged: false,
        samples: BASE_SAMPLES,
    };
    for level in 1..=MAX_LEVEL {
        let m = BASE_SAMPLES << level;
        let cur = level_estimate(g, lo, hi, m, BASE_PAD << level)?;
        out = FourierL1 {
            value: cur,
            error: (cur - prev).abs(),
            converged: false,
            samples: m,
        };
        if out.error <= REL_TOL * cur || cur < 1e-300 {
            out.converged = true;
            break;
        }
        prev = cur;
    }
    Ok(out)
}
