//! Counter-based random streams.
//!
//! A stream is identified by `(master_seed, sample_index, tag)`. Its key is
//! `SHA-256("plantsynth-stream-v1" || master_seed as u64 LE || sample_index
//! as u64 LE || tag as UTF-8)`, used as the 32-byte seed of a ChaCha8
//! generator. No stream depends on any other, so samples can be produced in
//! any order on any number of workers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const DOMAIN: &[u8] = b"plantsynth-stream-v1";

#[derive(Clone, Debug)]
pub struct RngStream {
    id: StreamId,
    inner: ChaCha8Rng,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub master_seed: u64,
    pub sample_index: u64,
    pub tag: String,
}

impl StreamId {
    pub fn key(&self) -> [u8; 32] {
        let mut h = Sha256::new();
        h.update(DOMAIN);
        h.update(self.master_seed.to_le_bytes());
        h.update(self.sample_index.to_le_bytes());
        h.update(self.tag.as_bytes());
        h.finalize().into()
    }
}

pub fn derive_stream(master_seed: u64, sample_index: u64, tag: &str) -> RngStream {
    let id = StreamId { master_seed, sample_index, tag: tag.to_owned() };
    let inner = ChaCha8Rng::from_seed(id.key());
    RngStream { id, inner }
}

impl RngStream {
    pub fn id(&self) -> &StreamId {
        &self.id
    }

    /// Child stream of the same sample under `tag` appended to this one's.
    pub fn substream(&self, tag: &str) -> RngStream {
        derive_stream(self.id.master_seed, self.id.sample_index, &format!("{}/{tag}", self.id.tag))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
