use std::collections::VecDeque;

/// Running mean/variance of trip times to one destination plus a window
/// of recent observations.
#[derive(Debug, Clone, PartialEq)]
pub struct TripModel {
    mu: f64,
    sigma2: f64,
    eta: f64,
    window: VecDeque<f64>,
    capacity: usize,
    samples: u64,
}

impl TripModel {
    pub fn new(eta: f64, capacity: usize) -> Self {
        Self {
            mu: 0.0,
            sigma2: 0.0,
            eta,
            window: VecDeque::with_capacity(capacity),
            capacity: capacity.max(1),
            samples: 0,
        }
    }

    /// Model with a given state, as if it had already seen `window`.
    pub fn with_state(mu: f64, sigma2: f64, eta: f64, window: &[f64], capacity: usize) -> Self {
        let mut m = Self::new(eta, capacity);
        m.mu = mu;
        m.sigma2 = sigma2;
        for &w in window.iter().rev().take(m.capacity).rev() {
            m.window.push_back(w);
        }
        m.samples = window.len().max(1) as u64;
        m
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    pub fn window(&self) -> impl Iterator<Item = f64> + '_ {
        self.window.iter().copied()
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn w_best(&self) -> Option<f64> {
        self.window.iter().copied().reduce(f64::min)
    }

    /// Fold in one observed trip time. The first sample seeds the mean.
    pub fn update(&mut self, t: f64) {
        if self.samples == 0 {
            self.mu = t;
            self.sigma2 = 0.0;
        } else {
            let mu_old = self.mu;
            self.mu = mu_old + self.eta * (t - mu_old);
            self.sigma2 += self.eta * ((t - mu_old).powi(2) - self.sigma2);
            self.sigma2 = self.sigma2.max(0.0);
        }
        self.samples += 1;
        if self.window.len() == self.capacity {
            self.window.pop_front();
        }
        self.window.push_back(t);
    }

    /// `(I_inf, I_sup)` for the given confidence level.
    pub fn confidence_bounds(&self, confidence: f64) -> Option<(f64, f64)> {
        let best = self.w_best()?;
        let z = z_factor(confidence);
        let sup = self.mu + z * self.sigma() / (self.window.len() as f64).sqrt();
        Some((best, sup))
    }
}

/// `1 / sqrt(1 - confidence)`.
pub fn z_factor(confidence: f64) -> f64 {
    1.0 / (1.0 - confidence).sqrt()
}
