//! Lagged autocorrelation with the `T / (T - k)` normalization.
//!
//! With `S = Σ s_t`, `A = Σ_{t>k} s_t`, `B = Σ_{t≤T-k} s_t`,
//! `P = Σ_{t>k} s_t·s_{t-k}` and `Q = Σ s_t²`, the value is
//!
//! ```text
//! ρ = X / ((T - k)·Y),   X = T²·P − T·S·(A + B) + (T − k)·S²,   Y = T·Q − S²
//! ```
//!
//! Both `X` and `(T - k)·Y` are accumulated exactly (in `i128` for integral
//! counts, otherwise as floating-point expansions) and rounded once before the
//! final division, so an exactly periodic series yields exactly `1.0`.

use super::MetricsError;
use crate::exact::Expansion;

const MAX_INT_MAGNITUDE: f64 = 2_147_483_648.0;
const MAX_INT_LEN: usize = 1 << 17;

/// Autocorrelation of `series` at `lag`.
pub fn acf(series: &[f64], lag: usize) -> Result<f64, MetricsError> {
    let t = series.len();
    if lag == 0 {
        return Err(MetricsError::ZeroLag);
    }
    if lag >= t {
        return Err(MetricsError::LagTooLarge { lag, len: t });
    }
    if let Some(i) = series.iter().position(|v| !v.is_finite()) {
        return Err(MetricsError::NonFinite { index: i });
    }
    let integral =
        t <= MAX_INT_LEN && series.iter().all(|&v| v.fract() == 0.0 && v.abs() <= MAX_INT_MAGNITUDE);
    let (x, d) = if integral { terms_i128(series, lag) } else { terms_exact(series, lag) };
    if d == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    Ok(x / d)
}

/// Autocorrelation, or `None` when the series has zero variance.
pub fn acf_or_none(series: &[f64], lag: usize) -> Result<Option<f64>, MetricsError> {
    match acf(series, lag) {
        Ok(v) => Ok(Some(v)),
        Err(MetricsError::ZeroVariance) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Number of intervals in one day, i.e. the daily lag.
pub fn daily_lag(interval_minutes: u32) -> Result<usize, MetricsError> {
    if interval_minutes == 0 || 1440 % interval_minutes != 0 {
        return Err(MetricsError::IntervalNotDivisor(interval_minutes));
    }
    Ok((1440 / interval_minutes) as usize)
}

/// Autocorrelation at a one-day lag.
pub fn acf_daily(series: &[f64], interval_minutes: u32) -> Result<f64, MetricsError> {
    acf(series, daily_lag(interval_minutes)?)
}

/// Returns `(X, (T - k)·Y)` rounded once each.
fn terms_i128(s: &[f64], k: usize) -> (f64, f64) {
    let t = s.len();
    let v: Vec<i128> = s.iter().map(|&x| x as i128).collect();
    let total: i128 = v.iter().sum();
    let a: i128 = v[k..].iter().sum();
    let b: i128 = v[..t - k].iter().sum();
    let p: i128 = v[k..].iter().zip(&v[..t - k]).map(|(x, y)| x * y).sum();
    let q: i128 = v.iter().map(|x| x * x).sum();
    let (ti, tk) = (t as i128, (t - k) as i128);
    let x = ti * ti * p - ti * total * (a + b) + tk * total * total;
    let y = ti * q - total * total;
    (x as f64, (tk * y) as f64)
}

fn terms_exact(s: &[f64], k: usize) -> (f64, f64) {
    let t = s.len();
    let mut total = Expansion::new();
    let mut q = Expansion::new();
    for &x in s {
        total.add(x);
        q.add_product(x, x);
    }
    let mut ab = Expansion::new();
    let mut p = Expansion::new();
    for i in k..t {
        ab.add(s[i]);
        ab.add(s[i - k]);
        p.add_product(s[i], s[i - k]);
    }
    let (tf, tkf) = (t as f64, (t - k) as f64);
    let s2 = total.product(&total);
    let mut x = p.scaled(tf * tf);
    x.add_expansion(&total.product(&ab).scaled(-tf));
    x.add_expansion(&s2.scaled(tkf));
    let mut y = q.scaled(tf);
    y.add_expansion(&s2.negated());
    (x.value(), y.scaled(tkf).value())
}
