use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

pub type PeerId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Topology {
    Complete,
    Ring,
    /// Ring backbone plus random chords until every peer has `degree` links.
    Random { degree: usize },
}

/// Links between the isolated peers and everyone else are down for rounds in
/// `[from_round, until_round)`. Messages wait until the link is back.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub from_round: u64,
    pub until_round: u64,
    pub isolated: Vec<PeerId>,
}

impl Partition {
    pub fn cuts(&self, a: PeerId, b: PeerId, round: u64) -> bool {
        round >= self.from_round
            && round < self.until_round
            && (self.isolated.contains(&a) != self.isolated.contains(&b))
    }
}

pub fn build(topology: Topology, peers: usize, seed: u64) -> Vec<BTreeSet<PeerId>> {
    let mut adj = alloc::vec![BTreeSet::new(); peers];
    let link = |adj: &mut Vec<BTreeSet<PeerId>>, a: PeerId, b: PeerId| {
        if a != b {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    };
    match topology {
        Topology::Complete => {
            for a in 0..peers {
                for b in a + 1..peers {
                    link(&mut adj, a, b);
                }
            }
        }
        Topology::Ring => {
            for a in 0..peers {
                link(&mut adj, a, (a + 1) % peers);
            }
        }
        Topology::Random { degree } => {
            for a in 0..peers {
                link(&mut adj, a, (a + 1) % peers);
            }
            let target = degree.min(peers.saturating_sub(1));
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            for a in 0..peers {
                while adj[a].len() < target {
                    let b = (rng.next_u64() % peers as u64) as usize;
                    link(&mut adj, a, b);
                }
            }
        }
    }
    adj
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ring_and_complete_degrees() {
        assert!(build(Topology::Ring, 8, 0).iter().all(|n| n.len() == 2));
        assert!(build(Topology::Complete, 5, 0).iter().all(|n| n.len() == 4));
        assert!(build(Topology::Complete, 1, 0)[0].is_empty());
    }

    #[test]
    fn random_is_seeded_and_symmetric() {
        let a = build(Topology::Random { degree: 3 }, 10, 7);
        assert_eq!(a, build(Topology::Random { degree: 3 }, 10, 7));
        for (p, ns) in a.iter().enumerate() {
            assert!(ns.len() >= 3);
            for &q in ns {
                assert!(a[q].contains(&p));
            }
        }
    }

    #[test]
    fn partition_window() {
        let p = Partition { from_round: 2, until_round: 4, isolated: alloc::vec![0] };
        assert!(!p.cuts(0, 1, 1));
        assert!(p.cuts(0, 1, 2));
        assert!(p.cuts(1, 0, 3));
        assert!(!p.cuts(1, 2, 3));
        assert!(!p.cuts(0, 1, 4));
    }
}
