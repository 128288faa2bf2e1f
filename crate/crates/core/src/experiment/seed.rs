use sha2::{Digest, Sha256};

use super::plan::Configuration;
use crate::stage::InfoRegime;

fn digest_u64(parts: &[&[u8]]) -> u64 {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p);
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 output has 32 bytes"))
}

/// Seed of the demand path for one replication. Every configuration and
/// regime of the same replication faces the same demand.
pub fn demand_seed(master: u64, replication: u32) -> u64 {
    digest_u64(&[b"beerlab/demand", &master.to_le_bytes(), &replication.to_le_bytes()])
}

/// Seed identifying one cell of the design.
pub fn derive_seed(master: u64, configuration: Configuration, regime: InfoRegime, replication: u32) -> u64 {
    digest_u64(&[
        b"beerlab/cell",
        &master.to_le_bytes(),
        configuration.name().as_bytes(),
        regime.as_str().as_bytes(),
        &replication.to_le_bytes(),
    ])
}
