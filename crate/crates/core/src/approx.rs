//! Additive approximation of Shapley values by permutation sampling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::eval::{CompiledCq, Instance};
use crate::model::{Database, Disjuncts, Fact};
use crate::rational::Rational;

/// Sample count and seeding for one estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingPlan {
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
    pub samples: u64,
    pub workers: usize,
}

/// Hoeffding bound for variables in [-1, 1]: Pr[|mean − μ| > ε] ≤ 2·exp(−mε²/2).
pub fn sample_bound(epsilon: f64, delta: f64) -> u64 {
    (2.0 * (2.0 / delta).ln() / (epsilon * epsilon)).ceil() as u64
}

impl SamplingPlan {
    pub fn new(epsilon: f64, delta: f64, seed: u64) -> Result<Self> {
        let open = |x: f64| x > 0.0 && x < 1.0;
        if !open(epsilon) || !open(delta) {
            return Err(Error::BadPlan(format!("epsilon and delta must lie in (0,1), got {epsilon} and {delta}")));
        }
        Ok(SamplingPlan { epsilon, delta, seed, samples: sample_bound(epsilon, delta), workers: 1 })
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }

    /// Override the derived count, e.g. for budget experiments; the guarantee no longer applies.
    pub fn with_samples(mut self, samples: u64) -> Self {
        self.samples = samples.max(1);
        self
    }

    fn worker_samples(&self, w: usize) -> u64 {
        let workers = self.workers as u64;
        self.samples / workers + u64::from((w as u64) < self.samples % workers)
    }
}

/// Independent stream seed for worker `w`.
fn substream(seed: u64, w: usize) -> u64 {
    let mut z = seed ^ (w as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Reusable state for drawing marginal contributions of one fact.
pub struct Sampler {
    inst: Instance,
    query: Vec<CompiledCq>,
    target: usize,
    order: Vec<usize>,
}

impl Sampler {
    pub fn new<Q: Disjuncts + ?Sized>(db: &Database, q: &Q, f: &Fact) -> Result<Self> {
        if !db.is_endogenous(f) {
            return Err(Error::FactNotEndogenous(f.clone()));
        }
        let inst = Instance::from_db(db);
        let target = inst.id(f).expect("fact in instance");
        let order = inst.endogenous_ids();
        let query = inst.compile_all(q);
        Ok(Sampler { inst, query, target, order })
    }

    /// q(Dx ∪ σ_f ∪ {f}) − q(Dx ∪ σ_f) for a uniform random permutation σ.
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> i8 {
        self.order.shuffle(rng);
        let mut world = self.inst.exogenous_world();
        for &i in self.order.iter().take_while(|&&i| i != self.target) {
            world[i] = true;
        }
        let before = self.inst.satisfies(&self.query, &world);
        world[self.target] = true;
        let after = self.inst.satisfies(&self.query, &world);
        after as i8 - before as i8
    }
}

pub fn sample_contribution<Q: Disjuncts + ?Sized, R: Rng + ?Sized>(db: &Database, q: &Q, f: &Fact, rng: &mut R) -> Result<i8> {
    Ok(Sampler::new(db, q, f)?.draw(rng))
}

/// Mean of `plan.samples` contributions as an exact rational.
pub fn shapley_additive_fpras<Q: Disjuncts + Sync + ?Sized>(
    db: &Database,
    q: &Q,
    f: &Fact,
    plan: &SamplingPlan,
) -> Result<(Rational, SamplingPlan)> {
    Sampler::new(db, q, f)?;
    let worker = |w: usize| -> i64 {
        let mut sampler = Sampler::new(db, q, f).expect("checked above");
        let mut rng = ChaCha8Rng::seed_from_u64(substream(plan.seed, w));
        (0..plan.worker_samples(w)).map(|_| sampler.draw(&mut rng) as i64).sum()
    };
    // A single worker stays on the calling thread, which also keeps wasm targets working.
    let sum: i64 = if plan.workers == 1 {
        worker(0)
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = (0..plan.workers).map(|w| s.spawn(move || worker(w))).collect();
            handles.into_iter().map(|h| h.join().expect("sampling worker")).sum()
        })
    };
    Ok((Rational::new(sum, plan.samples), plan.clone()))
}
