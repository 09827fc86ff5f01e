//! Seeded random streams.
//!
//! Every run owns one master stream; trainers split a fresh child stream off it
//! at the start of each round so a round's draws never depend on how many draws
//! an earlier round consumed.

use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

pub type SimRng = Xoshiro256PlusPlus;

pub fn seeded(seed: u64) -> SimRng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub fn child(master: &mut SimRng) -> SimRng {
    Xoshiro256PlusPlus::from_rng(master)
}
