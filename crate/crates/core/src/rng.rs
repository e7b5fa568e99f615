//! Random draws used by the engine, behind a small trait so a run can be
//! driven either by a seeded generator or by a fixed script of draws.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Normal};

pub trait RandomSource {
    /// Uniform in `[0, 1)`.
    fn uniform(&mut self) -> f64;
    /// Uniform index in `0..n`; `n > 0`.
    fn below(&mut self, n: usize) -> usize;
    fn normal(&mut self, mean: f64, sd: f64) -> f64;
    fn cauchy(&mut self, location: f64, scale: f64) -> f64;
}

impl<R: RandomSource + ?Sized> RandomSource for &mut R {
    fn uniform(&mut self) -> f64 {
        (**self).uniform()
    }
    fn below(&mut self, n: usize) -> usize {
        (**self).below(n)
    }
    fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        (**self).normal(mean, sd)
    }
    fn cauchy(&mut self, location: f64, scale: f64) -> f64 {
        (**self).cauchy(location, scale)
    }
}

/// ChaCha8-backed source; the stream is fixed by the 64-bit seed.
#[derive(Debug, Clone)]
pub struct SeededSource {
    rng: ChaCha8Rng,
}

impl SeededSource {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl RandomSource for SeededSource {
    fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        self.rng.random_range(0..n)
    }

    fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        Normal::new(mean, sd).expect("finite normal parameters").sample(&mut self.rng)
    }

    fn cauchy(&mut self, location: f64, scale: f64) -> f64 {
        Cauchy::new(location, scale).expect("finite cauchy parameters").sample(&mut self.rng)
    }
}

/// One pre-recorded draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Draw {
    Uniform(f64),
    Below(usize),
    /// The sampled value, not a standard-normal deviate.
    Normal(f64),
    Cauchy(f64),
}

/// Replays a fixed list of draws and panics when the engine asks for a
/// different kind of draw than the script provides, or runs past its end.
#[derive(Debug, Clone, Default)]
pub struct ScriptedSource {
    script: VecDeque<Draw>,
    consumed: usize,
}

impl ScriptedSource {
    pub fn new(script: impl IntoIterator<Item = Draw>) -> Self {
        Self { script: script.into_iter().collect(), consumed: 0 }
    }

    pub fn remaining(&self) -> usize {
        self.script.len()
    }

    pub fn consumed(&self) -> usize {
        self.consumed
    }

    fn next(&mut self, wanted: &str) -> Draw {
        self.consumed += 1;
        self.script
            .pop_front()
            .unwrap_or_else(|| panic!("script exhausted at draw #{} ({wanted})", self.consumed))
    }
}

impl RandomSource for ScriptedSource {
    fn uniform(&mut self) -> f64 {
        match self.next("uniform") {
            Draw::Uniform(u) => u,
            other => panic!("draw #{}: expected Uniform, script has {other:?}", self.consumed),
        }
    }

    fn below(&mut self, n: usize) -> usize {
        match self.next("below") {
            Draw::Below(k) => {
                assert!(k < n, "draw #{}: scripted index {k} not below {n}", self.consumed);
                k
            }
            other => panic!("draw #{}: expected Below({n}), script has {other:?}", self.consumed),
        }
    }

    fn normal(&mut self, _mean: f64, _sd: f64) -> f64 {
        match self.next("normal") {
            Draw::Normal(v) => v,
            other => panic!("draw #{}: expected Normal, script has {other:?}", self.consumed),
        }
    }

    fn cauchy(&mut self, _location: f64, _scale: f64) -> f64 {
        match self.next("cauchy") {
            Draw::Cauchy(v) => v,
            other => panic!("draw #{}: expected Cauchy, script has {other:?}", self.consumed),
        }
    }
}
