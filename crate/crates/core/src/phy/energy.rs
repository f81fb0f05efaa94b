//! Per-node energy accounting.

use super::PhyError;
use crate::NodeId;

/// Linear cost model: Joules per transmitted/received bit, plus idle drain.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyModel {
    pub tx_per_bit: f64,
    pub rx_per_bit: f64,
    pub idle_per_second: f64,
}

impl Default for EnergyModel {
    fn default() -> Self {
        Self {
            tx_per_bit: 1.0e-6,
            rx_per_bit: 0.5e-6,
            idle_per_second: 0.0,
        }
    }
}

impl EnergyModel {
    pub fn tx_cost(&self, bits: u32) -> f64 {
        self.tx_per_bit * f64::from(bits)
    }

    pub fn rx_cost(&self, bits: u32) -> f64 {
        self.rx_per_bit * f64::from(bits)
    }

    pub fn validate(&self) -> Result<(), PhyError> {
        if !(self.tx_per_bit >= 0.0) || !(self.rx_per_bit >= 0.0) || !(self.idle_per_second >= 0.0) {
            return Err(PhyError::Invalid("energy costs must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargeKind {
    Tx,
    Rx,
    Idle,
}

/// Result of a single debit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Charge {
    /// Joules actually removed from the battery.
    pub debited: f64,
    /// The debit exhausted the battery.
    pub died: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeEnergy {
    pub initial: f64,
    pub residual: f64,
    pub spent_tx: f64,
    pub spent_rx: f64,
    pub spent_idle: f64,
    /// Mains-powered nodes (the sink) are never debited.
    pub mains: bool,
}

impl NodeEnergy {
    pub fn spent(&self) -> f64 {
        self.spent_tx + self.spent_rx + self.spent_idle
    }

    pub fn is_alive(&self) -> bool {
        self.mains || self.residual > 0.0
    }
}

#[derive(Debug, Clone)]
pub struct EnergyLedger {
    nodes: Vec<NodeEnergy>,
}

impl EnergyLedger {
    pub fn new(node_count: usize, budget: f64) -> Self {
        let node = NodeEnergy {
            initial: budget,
            residual: budget,
            spent_tx: 0.0,
            spent_rx: 0.0,
            spent_idle: 0.0,
            mains: false,
        };
        Self {
            nodes: vec![node; node_count],
        }
    }

    pub fn set_mains(&mut self, node: NodeId, mains: bool) {
        self.nodes[node.index()].mains = mains;
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, node: NodeId) -> &NodeEnergy {
        &self.nodes[node.index()]
    }

    pub fn nodes(&self) -> &[NodeEnergy] {
        &self.nodes
    }

    pub fn residual(&self, node: NodeId) -> f64 {
        self.nodes[node.index()].residual
    }

    pub fn initial(&self, node: NodeId) -> f64 {
        self.nodes[node.index()].initial
    }

    pub fn is_alive(&self, node: NodeId) -> bool {
        self.nodes[node.index()].is_alive()
    }

    /// Debit `amount` Joules, flooring the battery at zero. The category
    /// counter grows by the amount actually debited.
    pub fn charge(&mut self, node: NodeId, kind: ChargeKind, amount: f64) -> Result<Charge, PhyError> {
        if !(amount >= 0.0) {
            return Err(PhyError::NegativeCharge(amount));
        }
        let e = &mut self.nodes[node.index()];
        if e.mains || e.residual <= 0.0 {
            return Ok(Charge {
                debited: 0.0,
                died: false,
            });
        }
        let debited = amount.min(e.residual);
        e.residual = if amount >= e.residual { 0.0 } else { e.residual - amount };
        match kind {
            ChargeKind::Tx => e.spent_tx += debited,
            ChargeKind::Rx => e.spent_rx += debited,
            ChargeKind::Idle => e.spent_idle += debited,
        }
        Ok(Charge {
            debited,
            died: e.residual <= 0.0,
        })
    }

    /// Sum over nodes of `initial - residual`.
    pub fn total_drawn(&self) -> f64 {
        self.nodes.iter().map(|e| e.initial - e.residual).sum()
    }

    /// Sum over nodes of the tx/rx/idle category counters.
    pub fn total_spent(&self) -> f64 {
        self.nodes.iter().map(NodeEnergy::spent).sum()
    }

    /// Relative disagreement between the two energy totals.
    pub fn conservation_error(&self) -> f64 {
        let drawn = self.total_drawn();
        let spent = self.total_spent();
        let scale = drawn.abs().max(spent.abs()).max(f64::MIN_POSITIVE);
        (drawn - spent).abs() / scale
    }

    pub fn alive_count(&self) -> usize {
        self.nodes.iter().filter(|e| e.is_alive()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(i: usize) -> NodeId {
        NodeId::new(i)
    }

    #[test]
    fn simple_debit() {
        let mut l = EnergyLedger::new(1, 30.0);
        let c = l.charge(n(0), ChargeKind::Tx, 0.001).unwrap();
        assert!(!c.died);
        assert!((l.residual(n(0)) - 29.999).abs() < 1e-12);
        assert_eq!(l.node(n(0)).spent_tx, 0.001);
    }

    #[test]
    fn zero_charge_is_noop() {
        let mut l = EnergyLedger::new(1, 30.0);
        l.charge(n(0), ChargeKind::Rx, 0.0).unwrap();
        assert_eq!(l.residual(n(0)), 30.0);
    }

    #[test]
    fn floors_at_zero_and_kills() {
        let mut l = EnergyLedger::new(1, 0.0003);
        let c = l.charge(n(0), ChargeKind::Tx, 0.001).unwrap();
        assert!(c.died);
        assert_eq!(c.debited, 0.0003);
        assert_eq!(l.residual(n(0)), 0.0);
        assert!(!l.is_alive(n(0)));
        // A dead node is never debited again.
        let again = l.charge(n(0), ChargeKind::Rx, 1.0).unwrap();
        assert_eq!(again.debited, 0.0);
        assert_eq!(l.conservation_error(), 0.0);
    }

    #[test]
    fn mains_nodes_are_exempt() {
        let mut l = EnergyLedger::new(2, 1.0);
        l.set_mains(n(1), true);
        l.charge(n(1), ChargeKind::Rx, 5.0).unwrap();
        assert_eq!(l.residual(n(1)), 1.0);
        assert!(l.is_alive(n(1)));
    }

    #[test]
    fn negative_charge_rejected() {
        let mut l = EnergyLedger::new(1, 1.0);
        assert!(l.charge(n(0), ChargeKind::Idle, -1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn conservation_holds(charges in proptest::collection::vec((0usize..4, 0u8..3, 0.0f64..0.5), 0..300)) {
            let mut l = EnergyLedger::new(4, 5.0);
            for (node, kind, amount) in charges {
                let kind = match kind { 0 => ChargeKind::Tx, 1 => ChargeKind::Rx, _ => ChargeKind::Idle };
                let before = l.residual(n(node));
                l.charge(n(node), kind, amount).unwrap();
                proptest::prop_assert!(l.residual(n(node)) <= before);
                proptest::prop_assert!(l.residual(n(node)) >= 0.0);
            }
            proptest::prop_assert!(l.conservation_error() <= 1e-9);
        }
    }
}
