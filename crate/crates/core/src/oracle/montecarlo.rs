use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::OracleError;
use crate::bncompiler::{compile_bn, BayesNet, CompileOptions};
use crate::loopmodel::{Dist, Expr, LoopProgram};
use crate::symcore::{rational::to_f64, Rational};

#[derive(Clone, Debug)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    /// Samples per chunk; chunk `i` uses stream `i` of the seeded generator.
    pub chunk: u64,
    /// Loop iterations simulated per sample.
    pub iterations: u64,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            samples: 100_000,
            seed: 0,
            chunk: 1 << 14,
            iterations: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Standard error of the mean.
    pub se: f64,
}

enum Num {
    C(f64),
    V(usize),
    Add(Box<Num>, Box<Num>),
    Sub(Box<Num>, Box<Num>),
    Mul(Box<Num>, Box<Num>),
    Div(Box<Num>, Box<Num>),
    Neg(Box<Num>),
    Pow(Box<Num>, u32),
    Bern(Box<Num>),
    Gauss(Box<Num>, Box<Num>),
    Unif(Box<Num>, Box<Num>),
}

struct Sim {
    inits: Vec<Num>,
    updates: Vec<Vec<(f64, Num)>>,
    targets: Vec<Vec<(usize, u32)>>,
}

fn compile_num(e: &Expr, vars: &[&str], params: &HashMap<String, f64>) -> Result<Num, OracleError> {
    let b = |x: &Expr| compile_num(x, vars, params).map(Box::new);
    Ok(match e {
        Expr::Num(q) => Num::C(to_f64(q)),
        Expr::Sym(s) => match vars.iter().position(|v| v == s) {
            Some(i) => Num::V(i),
            None => Num::C(*params.get(s).ok_or_else(|| OracleError::Unknown(s.clone()))?),
        },
        Expr::Add(x, y) => Num::Add(b(x)?, b(y)?),
        Expr::Sub(x, y) => Num::Sub(b(x)?, b(y)?),
        Expr::Mul(x, y) => Num::Mul(b(x)?, b(y)?),
        Expr::Div(x, y) => Num::Div(b(x)?, b(y)?),
        Expr::Neg(x) => Num::Neg(b(x)?),
        Expr::Pow(x, k) => Num::Pow(b(x)?, *k),
        Expr::Dist(d) => match &**d {
            Dist::Bernoulli(p) => Num::Bern(b(p)?),
            Dist::Gaussian { mean, variance } => Num::Gauss(b(mean)?, b(variance)?),
            Dist::Uniform { lo, hi } => Num::Unif(b(lo)?, b(hi)?),
            Dist::Moments(_) => {
                return Err(OracleError::Unsupported(
                    "a distribution given only by its moments cannot be sampled".into(),
                ))
            }
        },
    })
}

fn eval(n: &Num, s: &[f64], rng: &mut ChaCha8Rng) -> f64 {
    match n {
        Num::C(c) => *c,
        Num::V(i) => s[*i],
        Num::Add(a, b) => eval(a, s, rng) + eval(b, s, rng),
        Num::Sub(a, b) => eval(a, s, rng) - eval(b, s, rng),
        Num::Mul(a, b) => eval(a, s, rng) * eval(b, s, rng),
        Num::Div(a, b) => eval(a, s, rng) / eval(b, s, rng),
        Num::Neg(a) => -eval(a, s, rng),
        Num::Pow(a, k) => eval(a, s, rng).powi(*k as i32),
        Num::Bern(p) => {
            let p = eval(p, s, rng);
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        }
        Num::Gauss(m, v) => {
            let m = eval(m, s, rng);
            let v = eval(v, s, rng);
            let z: f64 = rng.sample(StandardNormal);
            m + v.max(0.0).sqrt() * z
        }
        Num::Unif(lo, hi) => {
            let lo = eval(lo, s, rng);
            let hi = eval(hi, s, rng);
            lo + (hi - lo) * rng.random::<f64>()
        }
    }
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Default)]
struct Welford {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Welford) -> Welford {
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Welford {
            n,
            mean: self.mean + d * o.n / n,
            m2: self.m2 + o.m2 + d * d * self.n * o.n / n,
        }
    }
}

impl Sim {
    fn run_chunk(&self, seed: u64, stream: u64, count: u64, iterations: u64) -> Vec<Welford> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        let mut acc = vec![Welford::default(); self.targets.len()];
        let mut state = vec![0.0; self.updates.len()];
        for _ in 0..count {
            let zeros = vec![0.0; state.len()];
            for (i, init) in self.inits.iter().enumerate() {
                state[i] = eval(init, &zeros, &mut rng);
            }
            for _ in 0..iterations {
                for (i, branches) in self.updates.iter().enumerate() {
                    let chosen = if branches.len() == 1 {
                        &branches[0].1
                    } else {
                        let u: f64 = rng.random();
                        let mut cum = 0.0;
                        let mut pick = &branches[branches.len() - 1].1;
                        for (p, e) in branches {
                            cum += p;
                            if u < cum {
                                pick = e;
                                break;
                            }
                        }
                        pick
                    };
                    state[i] = eval(chosen, &state, &mut rng);
                }
            }
            for (t, w) in self.targets.iter().zip(acc.iter_mut()) {
                let x: f64 = t.iter().map(|(i, e)| state[*i].powi(*e as i32)).product();
                w.push(x);
            }
        }
        acc
    }
}

/// Sample means of monomials over the program variables after
/// `cfg.iterations` loop iterations. Results depend only on the seed, the
/// sample count and the chunk size, not on the number of worker threads.
pub fn mc_estimate(
    p: &LoopProgram,
    params: &HashMap<String, Rational>,
    targets: &[Vec<(&str, u32)>],
    cfg: &McConfig,
) -> Result<Vec<Estimate>, OracleError> {
    let vars = p.variables();
    let fparams: HashMap<String, f64> = params.iter().map(|(k, v)| (k.clone(), to_f64(v))).collect();
    let mut inits = Vec::new();
    for v in &vars {
        inits.push(compile_num(&p.init_of(v), &[], &fparams)?);
    }
    let mut updates = Vec::new();
    for u in &p.updates {
        let mut branches = Vec::new();
        for (e, pr) in u.choice.branches() {
            let pr = compile_num(&pr, &[], &fparams)?;
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            branches.push((eval(&pr, &[], &mut rng), compile_num(&e, &vars, &fparams)?));
        }
        updates.push(branches);
    }
    let mut tgt = Vec::new();
    for t in targets {
        let mut mono = Vec::new();
        for (v, e) in t {
            let i = vars
                .iter()
                .position(|x| x == v)
                .ok_or_else(|| OracleError::Unknown(v.to_string()))?;
            mono.push((i, *e));
        }
        tgt.push(mono);
    }
    let sim = Sim {
        inits,
        updates,
        targets: tgt,
    };
    let chunk = cfg.chunk.max(1);
    let chunks = cfg.samples.div_ceil(chunk);
    let parts: Vec<Vec<Welford>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let count = chunk.min(cfg.samples - c * chunk);
            sim.run_chunk(cfg.seed, c, count, cfg.iterations)
        })
        .collect();
    let mut total = vec![Welford::default(); targets.len()];
    for part in parts {
        for (t, w) in total.iter_mut().zip(part) {
            *t = t.merge(w);
        }
    }
    Ok(total
        .into_iter()
        .map(|w| Estimate {
            mean: w.mean,
            se: if w.n > 1.0 { (w.m2 / (w.n - 1.0) / w.n).sqrt() } else { f64::INFINITY },
        })
        .collect())
}

/// Monte Carlo moments of network nodes from one pass of the encoding.
pub fn mc_estimate_bn(
    bn: &BayesNet,
    params: &HashMap<String, Rational>,
    targets: &[Vec<(&str, u32)>],
    cfg: &McConfig,
) -> Result<Vec<Estimate>, OracleError> {
    let c = compile_bn(bn, &CompileOptions::default()).map_err(|e| OracleError::Unsupported(e.to_string()))?;
    mc_estimate(&c.program, params, targets, &McConfig { iterations: 1, ..cfg.clone() })
}
