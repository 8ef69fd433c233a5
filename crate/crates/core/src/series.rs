use crate::error::{Error, Result};

/// Minimum number of samples a series must hold.
pub const MIN_SAMPLES: usize = 5;

/// Relative spacing deviation below which a series counts as equispaced.
pub const EQUISPACED_TOL: f64 = 1e-9;

/// A sampled measurement record `y_i = g(t_i) + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    sigma: Option<f64>,
    delta: f64,
    equispaced: bool,
}

impl TimeSeries {
    /// Builds a validated series. Times must be strictly increasing and finite.
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidSeries(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        let n = times.len();
        if n < MIN_SAMPLES {
            return Err(Error::TooShort {
                found: n,
                required: MIN_SAMPLES,
            });
        }
        if let Some(i) = times.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite time at index {i}")));
        }
        if let Some(i) = values.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite value at index {i}")));
        }
        for (i, w) in times.windows(2).enumerate() {
            if w[1] == w[0] {
                return Err(Error::DuplicateTime {
                    time: w[1],
                    row: i + 1,
                });
            }
            if w[1] < w[0] {
                return Err(Error::InvalidSeries(format!(
                    "times not increasing at index {}",
                    i + 1
                )));
            }
        }
        let delta = (times[n - 1] - times[0]) / (n - 1) as f64;
        let equispaced = times
            .windows(2)
            .all(|w| ((w[1] - w[0]) - delta).abs() <= EQUISPACED_TOL * delta);
        Ok(TimeSeries {
            times,
            values,
            sigma: None,
            delta,
            equispaced,
        })
    }

    /// Attaches a known noise standard deviation.
    pub fn with_sigma(mut self, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::Domain(format!("noise sigma must be >= 0, got {sigma}")));
        }
        self.sigma = Some(sigma);
        Ok(self)
    }

    /// Same geometry with new values (length must match).
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.times.len() {
            return Err(Error::InvalidSeries(format!(
                "{} values for {} times",
                values.len(),
                self.times.len()
            )));
        }
        if let Some(i) = values.iter().position(|y| !y.is_finite()) {
            return Err(Error::InvalidSeries(format!("non-finite value at index {i}")));
        }
        Ok(TimeSeries {
            values,
            ..self.clone()
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }

    /// Mean sample spacing `(t_N - t_1) / (N - 1)`.
    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn is_equispaced(&self) -> bool {
        self.equispaced
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    /// Length of the observation interval `t_N - t_1`.
    pub fn span(&self) -> f64 {
        self.end() - self.start()
    }
}
