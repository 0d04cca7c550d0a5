//! Backpressure next-hop selection: per link the flow with the largest
//! positive backlog differential, then the neighbor maximizing
//! `c_ij [Q_i^s - Q_j^s]^+`.

use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborState<'a> {
    pub id: usize,
    /// Neighbor backlog per flow, as last exchanged.
    pub backlogs: &'a [u64],
    /// Link rate `c_ij` in Mb/s.
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BpChoice {
    pub flow: usize,
    pub next_hop: usize,
    pub utility: f64,
}

/// Ties go to the earliest neighbor in `neighbors`, then to the lowest
/// flow index. Returns `None` when no link has positive utility.
pub fn backpressure_select(own: &[u64], neighbors: &[NeighborState<'_>]) -> Option<BpChoice> {
    let mut best: Option<BpChoice> = None;
    for n in neighbors {
        let mut flow = 0;
        let mut diff = 0u64;
        for (s, (&qi, &qj)) in own.iter().zip(n.backlogs).enumerate() {
            let d = qi.saturating_sub(qj);
            if d > diff {
                diff = d;
                flow = s;
            }
        }
        let utility = n.rate * diff as f64;
        if utility > best.map_or(0.0, |b| b.utility) {
            best = Some(BpChoice {
                flow,
                next_hop: n.id,
                utility,
            });
        }
    }
    best
}
