use serde::{Deserialize, Serialize};

/// Raw accumulators of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub generated: u64,
    pub delivered: u64,
    pub latency_sum: f64,
    pub latencies: Vec<f64>,
    /// Sum over nodes of `initial - residual`, in Joules.
    pub energy_total: f64,
    /// Sum of the per-category ledger counters, in Joules.
    pub energy_by_category: f64,
    pub delivered_bits: u64,
    pub per_node_residual: Vec<f64>,
}

/// The four reported metrics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    /// Mean end-to-end delay in seconds; absent when nothing was delivered.
    pub latency_s: Option<f64>,
    pub success_rate_pct: f64,
    pub energy_j: f64,
    pub efficiency_kbit_per_j: f64,
}

impl RunMetrics {
    pub fn record_delivery(&mut self, latency: f64, bits: u64) {
        self.delivered += 1;
        self.latency_sum += latency;
        self.latencies.push(latency);
        self.delivered_bits += bits;
    }

    pub fn summary(&self) -> MetricSummary {
        summarize(self.generated, self.delivered, self.latency_sum, self.energy_total, self.delivered_bits)
    }
}

pub fn summarize(generated: u64, delivered: u64, latency_sum: f64, energy: f64, delivered_bits: u64) -> MetricSummary {
    let latency_s = (delivered > 0).then(|| latency_sum / delivered as f64);
    let success_rate_pct = if generated == 0 {
        0.0
    } else {
        100.0 * delivered as f64 / generated as f64
    };
    let efficiency_kbit_per_j = if delivered == 0 || !(energy > 0.0) {
        0.0
    } else {
        (delivered_bits as f64 / 1000.0) / energy
    };
    MetricSummary {
        latency_s,
        success_rate_pct,
        energy_j: energy,
        efficiency_kbit_per_j,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ninety_of_hundred() {
        let s = summarize(100, 90, 9.0, 1.0, 90 * 400);
        assert_eq!(s.success_rate_pct, 90.0);
        assert!((s.latency_s.unwrap() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn nothing_delivered() {
        let s = summarize(10, 0, 0.0, 3.0, 0);
        assert_eq!(s.success_rate_pct, 0.0);
        assert_eq!(s.efficiency_kbit_per_j, 0.0);
        assert_eq!(s.latency_s, None);
    }

    #[test]
    fn efficiency_hand_value() {
        // 400 events of 400 bits over 20 J
        let s = summarize(400, 400, 1.0, 20.0, 400 * 400);
        assert!((s.efficiency_kbit_per_j - 8.0).abs() < 1e-12);
    }

    #[test]
    fn record_delivery_accumulates() {
        let mut m = RunMetrics {
            generated: 2,
            energy_total: 1.0,
            ..RunMetrics::default()
        };
        m.record_delivery(0.5, 400);
        m.record_delivery(1.5, 400);
        let s = m.summary();
        assert_eq!(s.latency_s, Some(1.0));
        assert_eq!(s.success_rate_pct, 100.0);
        assert!((s.efficiency_kbit_per_j - 0.8).abs() < 1e-12);
    }
}
