/// Right-continuous, nonincreasing step function on `[0, ∞)`.
///
/// `values[i]` holds on `[breaks[i], breaks[i+1])`; past the last break the
/// function is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    /// Decreasing rearrangement of `(value, mass)` pairs against Lebesgue
    /// measure on the half-line. Zero values are dropped.
    pub fn decreasing_rearrangement(mut pairs: Vec<(f64, f64)>) -> Self {
        pairs.retain(|&(s, _)| s > 0.0);
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut breaks = Vec::with_capacity(pairs.len() + 1);
        let mut values: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut t = 0.0;
        for (s, w) in pairs {
            match values.last() {
                Some(&last) if last == s => {}
                _ => {
                    breaks.push(t);
                    values.push(s);
                }
            }
            t += w;
        }
        breaks.push(t);
        if values.is_empty() {
            breaks.clear();
        }
        StepFunction { breaks, values }
    }

    /// `μ_t`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        // first break strictly greater than t
        let idx = self.breaks.partition_point(|&b| b <= t);
        if idx == 0 || idx >= self.breaks.len() {
            0.0
        } else {
            self.values[idx - 1]
        }
    }

    /// `∫_0^∞ μ_t dt`.
    pub fn integral(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * (self.breaks[i + 1] - self.breaks[i]))
            .sum()
    }

    /// Total mass carrying a nonzero value.
    pub fn support_end(&self) -> f64 {
        self.breaks.last().copied().unwrap_or(0.0)
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}
