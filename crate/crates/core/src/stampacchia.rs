//! Stampacchia's decay lemma on sampled data.
//!
//! If a nonnegative nonincreasing φ on `[k0, ∞)` satisfies
//! `φ(h) ≤ c (h − k)^{−α} φ(k)^δ` for all `h > k ≥ k0` with `δ > 1`, then
//! `φ(k0 + d_gap) = 0` for an explicit gap `d_gap`.

use crate::analysis::exponents;
use crate::error::{invalid, Result};

/// Relative slack applied to the hypothesis check.
pub const HYPOTHESIS_SLACK: f64 = 1e-9;

/// Which power of two enters the gap formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GapVariant {
    /// `d^α = c φ0^{δ−1} 2^{δ(δ−1)}`.
    Quadratic,
    /// `d^α = c φ0^{δ−1} 2^{αδ/(δ−1)}`, the form carried by the standard proof.
    #[default]
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StampacchiaParams {
    pub c: f64,
    pub alpha: f64,
    pub delta: f64,
    pub k0: f64,
    /// φ(k0).
    pub phi0: f64,
    pub variant: GapVariant,
}

impl StampacchiaParams {
    pub fn validate(&self) -> Result<()> {
        // c = 0 is admitted: it is what the composite constant collapses to
        // when the two coefficients coincide.
        if !(self.c >= 0.0) || !self.c.is_finite() {
            return Err(invalid(format!("c must be finite and nonnegative, got {}", self.c)));
        }
        if !(self.alpha > 0.0) {
            return Err(invalid(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.delta > 1.0) {
            return Err(invalid(format!("delta must exceed 1, got {}", self.delta)));
        }
        if !(self.k0 >= 0.0) {
            return Err(invalid(format!("k0 must be nonnegative, got {}", self.k0)));
        }
        if !(self.phi0 >= 0.0) {
            return Err(invalid(format!("phi0 must be nonnegative, got {}", self.phi0)));
        }
        Ok(())
    }
}

/// Nonincreasing samples of φ on an increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiSamples {
    ks: Vec<f64>,
    values: Vec<f64>,
}

impl PhiSamples {
    pub fn new(ks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ks.len() != values.len() {
            return Err(invalid(format!("{} levels but {} values", ks.len(), values.len())));
        }
        if ks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("levels must be strictly increasing"));
        }
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(invalid("phi values must be finite and nonnegative"));
        }
        if values.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            return Err(invalid("phi values must be nonincreasing"));
        }
        Ok(PhiSamples { ks, values })
    }

    /// Samples `phi` at `ks`.
    pub fn from_fn(ks: Vec<f64>, phi: impl Fn(f64) -> f64) -> Result<Self> {
        let values = ks.iter().map(|&k| phi(k)).collect();
        Self::new(ks, values)
    }

    pub fn ks(&self) -> &[f64] {
        &self.ks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.ks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ks.is_empty()
    }

    /// Appends a level above the current range.
    pub fn push(&mut self, k: f64, value: f64) -> Result<()> {
        if let Some(&last) = self.ks.last() {
            if !(k > last) {
                return Err(invalid("appended level must exceed the last one"));
            }
        }
        if let Some(&last) = self.values.last() {
            if value > last + 1e-12 {
                return Err(invalid("phi values must be nonincreasing"));
            }
        }
        self.ks.push(k);
        self.values.push(value);
        Ok(())
    }
}

/// The vanishing gap `d_gap` of the lemma.
pub fn stampacchia_gap(params: &StampacchiaParams) -> Result<f64> {
    params.validate()?;
    let StampacchiaParams { c, alpha, delta, phi0, variant, .. } = *params;
    let two_power = match variant {
        GapVariant::Quadratic => delta * (delta - 1.0),
        GapVariant::Classical => alpha * delta / (delta - 1.0),
    };
    let rhs = c * phi0.powf(delta - 1.0) * 2f64.powf(two_power);
    Ok(rhs.powf(1.0 / alpha))
}

/// Smallest `c` with `φ(h) ≤ c (h − k)^{−α} φ(k)^δ` on every sampled pair.
pub fn fit_minimal_c(samples: &PhiSamples, alpha: f64, delta: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(invalid("fitting c needs at least two samples"));
    }
    if !(alpha > 0.0) || !(delta > 1.0) {
        return Err(invalid(format!("need alpha > 0 and delta > 1, got alpha={alpha}, delta={delta}")));
    }
    let (ks, phi) = (&samples.ks, &samples.values);
    let mut c = 0.0f64;
    for i in 0..ks.len() {
        if phi[i] <= 0.0 {
            continue;
        }
        let denom = phi[i].powf(delta);
        for j in i + 1..ks.len() {
            if phi[j] > 0.0 {
                c = c.max(phi[j] * (ks[j] - ks[i]).powf(alpha) / denom);
            }
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayReport {
    pub hypothesis_ok: bool,
    pub predicted_gap: f64,
    /// Smallest sampled level with φ = 0.
    pub vanish_point: Option<f64>,
    pub conclusion_ok: bool,
}

/// Checks the hypothesis on every sampled pair at or above `k0` and whether φ
/// has vanished by `k0 + d_gap`. The samples must start at or below `k0` and
/// either reach `k0 + d_gap` or end on a zero value (φ is nonincreasing and
/// nonnegative, so it stays zero from there on).
///
/// The lemma gives φ(k0 + γ·d_gap) = 0 for every γ > 1; the check uses the
/// limit γ → 1, i.e. the level `k0 + d_gap` itself.
pub fn verify_decay(samples: &PhiSamples, params: &StampacchiaParams) -> Result<DecayReport> {
    let gap = stampacchia_gap(params)?;
    let (ks, phi) = (&samples.ks, &samples.values);
    let end = params.k0 + gap;
    match ks.last() {
        Some(&last) if ks[0] <= params.k0 && (last >= end || phi[phi.len() - 1] == 0.0) => {}
        _ => {
            return Err(invalid(format!(
                "samples must cover [{}, {end}], got [{:?}, {:?}]",
                params.k0,
                ks.first(),
                ks.last()
            )))
        }
    }
    let (alpha, delta, c) = (params.alpha, params.delta, params.c);
    let mut hypothesis_ok = true;
    'pairs: for i in 0..ks.len() {
        if ks[i] < params.k0 {
            continue;
        }
        let scale = phi[i].powf(delta) * (1.0 + HYPOTHESIS_SLACK);
        for j in i + 1..ks.len() {
            if phi[j] > c * (ks[j] - ks[i]).powf(-alpha) * scale {
                hypothesis_ok = false;
                break 'pairs;
            }
        }
    }
    let vanish_point = ks
        .iter()
        .zip(phi)
        .find(|(&k, &v)| k >= params.k0 && v == 0.0)
        .map(|(&k, _)| k);
    let conclusion_ok = vanish_point.is_some_and(|k| k <= end);
    Ok(DecayReport { hypothesis_ok, predicted_gap: gap, vanish_point, conclusion_ok })
}

/// Lemma parameters produced by the stability argument in dimension `d`:
/// `α = s`, `δ = s − 1`, `k0 = 0`, with `c` the supplied composite constant.
pub fn theorem_constants(d: usize, c2: f64) -> Result<StampacchiaParams> {
    let e = exponents(d)?;
    let params = StampacchiaParams {
        c: c2,
        alpha: e.s,
        delta: e.s - 1.0,
        k0: 0.0,
        phi0: 0.0,
        variant: GapVariant::Classical,
    };
    params.validate()?;
    Ok(params)
}
