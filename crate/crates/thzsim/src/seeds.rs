//! Counter-based child seeds.
//!
//! A child seed is the SplitMix64 finalizer folded over the master seed, a
//! stream tag and the indices of the draw. Streams keep unrelated draws (node
//! positions, demand endpoints, user moves) independent of each other.

pub const TOPOLOGY: u64 = 0x746f_706f;
pub const DEMANDS: u64 = 0x6465_6d64;
pub const MOVES: u64 = 0x6d6f_7665;
pub const DYNAMIC_TOPOLOGY: u64 = 0x6479_6e74;
pub const DYNAMIC_DEMANDS: u64 = 0x6479_6e64;

fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(master: u64, stream: u64, indices: &[u64]) -> u64 {
    indices.iter().fold(mix(master ^ mix(stream)), |acc, &i| mix(acc ^ mix(i)))
}
