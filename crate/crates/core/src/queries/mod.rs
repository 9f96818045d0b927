//! Network analyses on top of moment closed forms: joint and conditional
//! moments, distributions from moments, expected sample counts, prediction,
//! long-run limits and forward filtering.

pub mod filter;
pub mod json;

use std::collections::{BTreeSet, HashMap};

use num_traits::Zero;

use crate::bncompiler::{
    compile_bn, compile_dynbn, compile_sampling_monitor, event_expr, BayesNet, BnError, CompileOptions, Network,
};
use crate::loopmodel::{Expr, LoopProgram, ParamDecl};
use crate::momentengine::{Engine, EngineConfig, EngineError};
use crate::symcore::{Interval, Limit, RationalFunction, Sequence, SymError};

pub use filter::{forward_filter, transition_model};
pub use json::{run_query, samples_json, RenderOptions};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QueryError {
    #[error(transparent)]
    Network(#[from] BnError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Symbolic(#[from] SymError),
    #[error("the evidence {0} has probability zero")]
    ZeroEvidence(String),
    #[error("node `{0}` is continuous; only discrete nodes can be conditioned on or counted")]
    ContinuousEvidence(String),
    #[error("the moments are inconsistent with any distribution: solving gives [{}]", .0.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", "))]
    InconsistentMoments(Vec<RationalFunction>),
    #[error("this query needs a {0} network")]
    WrongKind(&'static str),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Value {
    Scalar(RationalFunction),
    Sequence(Sequence),
    Limit(Limit),
    Vector(Vec<RationalFunction>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    pub value: Value,
    /// Conditions under which a symbolic answer holds, e.g. non-resonance or
    /// nonzero denominators.
    pub assumptions: BTreeSet<String>,
}

impl QueryResult {
    pub fn scalar(&self) -> Option<&RationalFunction> {
        match &self.value {
            Value::Scalar(v) => Some(v),
            _ => None,
        }
    }

    pub fn sequence(&self) -> Option<&Sequence> {
        match &self.value {
            Value::Sequence(s) => Some(s),
            _ => None,
        }
    }
}

/// Node values for an event such as `A = 1 and J = 1`.
pub type Event = Vec<(String, u32)>;

pub fn describe_event(e: &[(String, u32)]) -> String {
    e.iter()
        .map(|(n, v)| format!("{n}={v}"))
        .collect::<Vec<_>>()
        .join(" & ")
}

#[derive(Clone, Debug, Default)]
pub struct QueryOptions {
    pub compile: CompileOptions,
    pub engine: EngineConfig,
}

#[derive(Clone, Debug)]
pub enum Horizon {
    Symbolic,
    At(u64),
    Limit,
}

/// What a conditional query asks about the target.
#[derive(Clone, Debug)]
pub enum Target {
    /// `E[prod node^exp]`.
    Moment(Vec<(String, u32)>),
    /// Probability of an event.
    Event(Event),
}

pub fn param_domains(params: &[ParamDecl]) -> HashMap<String, Interval> {
    params
        .iter()
        .filter_map(|p| {
            p.domain
                .as_ref()
                .map(|(lo, hi)| (p.name.clone(), Interval::new(lo.clone(), hi.clone())))
        })
        .collect()
}

/// A compiled network with its moment engine.
pub struct Analysis {
    network: Network,
    program: LoopProgram,
    engine: Engine,
    opts: QueryOptions,
    extra: BTreeSet<String>,
}

impl Analysis {
    pub fn new(network: &Network, opts: QueryOptions) -> Result<Analysis, QueryError> {
        let compiled = match network {
            Network::Static(b) => compile_bn(b, &opts.compile)?,
            Network::Dynamic(d) => compile_dynbn(d, &opts.compile)?,
        };
        let engine = Engine::new(&compiled.program, opts.engine.clone())?;
        Ok(Analysis {
            network: network.clone(),
            program: compiled.program,
            engine,
            opts,
            extra: BTreeSet::new(),
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn net(&self) -> &BayesNet {
        self.network.net()
    }

    pub fn program(&self) -> &LoopProgram {
        &self.program
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self.network, Network::Dynamic(_))
    }

    fn assumptions(&self) -> BTreeSet<String> {
        let mut a = self.engine.assumptions().clone();
        a.extend(self.extra.iter().cloned());
        a
    }

    fn result(&self, value: Value) -> QueryResult {
        QueryResult {
            value,
            assumptions: self.assumptions(),
        }
    }

    fn check_nodes(&self, names: impl IntoIterator<Item = impl AsRef<str>>) -> Result<(), QueryError> {
        for n in names {
            if self.net().node(n.as_ref()).is_none() {
                return Err(BnError::UnknownNode(n.as_ref().to_string()).into());
            }
        }
        Ok(())
    }

    /// `E[e](n)` for a polynomial expression over nodes and draws.
    pub fn expectation(&mut self, e: &Expr) -> Result<Sequence, QueryError> {
        let (linear, constant) = self.engine.expectation_normal_form(&self.program, e)?;
        let s = self.engine.moment_of_poly(&linear)?;
        Ok(s.add(&Sequence::constant(constant)))
    }

    /// `E[prod node^exp](n)`.
    pub fn moment_sequence(&mut self, mono: &[(String, u32)]) -> Result<Sequence, QueryError> {
        self.check_nodes(mono.iter().map(|(n, _)| n))?;
        let powers: Vec<(&str, u32)> = mono.iter().map(|(n, e)| (n.as_str(), *e)).collect();
        Ok(self.engine.moment(&powers)?)
    }

    fn at_time(&self, s: &Sequence, at: Option<u64>) -> Result<Value, QueryError> {
        Ok(match (self.is_dynamic(), at) {
            (false, _) => Value::Scalar(s.value(1)),
            (true, Some(n)) => Value::Scalar(s.value(n)),
            (true, None) => Value::Sequence(s.clone()),
        })
    }

    /// `E[(prod node^exp)^k]`: a number for static networks, a sequence in
    /// the time index for temporal ones unless `at` fixes the slice.
    pub fn joint_moment(&mut self, mono: &[(String, u32)], k: u32, at: Option<u64>) -> Result<QueryResult, QueryError> {
        self.extra.clear();
        let powered: Vec<(String, u32)> = mono.iter().map(|(n, e)| (n.clone(), e * k)).collect();
        let s = self.moment_sequence(&powered)?;
        let v = self.at_time(&s, at)?;
        Ok(self.result(v))
    }

    fn time_of(&self, at: Option<u64>) -> Result<u64, QueryError> {
        match (self.is_dynamic(), at) {
            (false, _) => Ok(1),
            (true, Some(n)) => Ok(n),
            (true, None) => Err(QueryError::Invalid(
                "conditional queries on a temporal network need a time slice (`at`)".into(),
            )),
        }
    }

    fn event(&self, ev: &[(String, u32)]) -> Result<Expr, QueryError> {
        for (n, _) in ev {
            match self.net().node(n) {
                None => return Err(BnError::UnknownNode(n.clone()).into()),
                Some(node) if !node.is_discrete() => return Err(QueryError::ContinuousEvidence(n.clone())),
                _ => {}
            }
        }
        Ok(event_expr(self.net(), ev)?)
    }

    /// Probability of an event at slice `n`.
    pub fn event_probability(&mut self, ev: &[(String, u32)], n: u64) -> Result<RationalFunction, QueryError> {
        let e = self.event(ev)?;
        Ok(self.expectation(&e)?.value(n))
    }

    /// Checks that the evidence can have positive probability; a symbolic
    /// denominator is recorded as an assumption instead.
    fn nonzero_evidence(&mut self, ev: &[(String, u32)], p: &RationalFunction, n: u64) -> Result<(), QueryError> {
        if p.is_zero() {
            for c in ev {
                if self.event_probability(std::slice::from_ref(c), n)?.is_zero() {
                    return Err(QueryError::ZeroEvidence(describe_event(std::slice::from_ref(c))));
                }
            }
            return Err(QueryError::ZeroEvidence(describe_event(ev)));
        }
        if p.as_constant().is_none() {
            self.extra.insert(format!("{p} != 0"));
        }
        Ok(())
    }

    /// `E[target * [evidence]] / E[[evidence]]`.
    pub fn conditional(
        &mut self,
        target: &Target,
        evidence: &[(String, u32)],
        at: Option<u64>,
    ) -> Result<QueryResult, QueryError> {
        self.extra.clear();
        let n = self.time_of(at)?;
        let ev = self.event(evidence)?;
        let t = match target {
            Target::Moment(mono) => {
                self.check_nodes(mono.iter().map(|(n, _)| n))?;
                Expr::product(mono.iter().map(|(v, e)| Expr::pow(Expr::sym(v), *e)))
            }
            Target::Event(e) => self.event(e)?,
        };
        let den = self.expectation(&ev)?.value(n);
        self.nonzero_evidence(evidence, &den, n)?;
        let num = self.expectation(&Expr::mul(t, ev))?.value(n);
        let v = num.checked_div(&den)?;
        Ok(self.result(Value::Scalar(v)))
    }

    /// Probabilities of the values `0..m` of a discrete node, recovered from
    /// its first `m - 1` moments.
    pub fn distribution(&mut self, node: &str, at: Option<u64>) -> Result<QueryResult, QueryError> {
        self.extra.clear();
        let n = self.time_of(at)?;
        let m = self
            .net()
            .node(node)
            .ok_or_else(|| BnError::UnknownNode(node.to_string()))?
            .support
            .ok_or_else(|| QueryError::ContinuousEvidence(node.to_string()))?;
        let mut moments = Vec::new();
        for k in 1..m {
            moments.push(self.moment_sequence(&[(node.to_string(), k)])?.value(n));
        }
        let probs = distribution_from_moments(&moments, m)?;
        Ok(self.result(Value::Vector(probs)))
    }

    /// Closed form, value at a slice, or long-run limit of a moment.
    pub fn predict(&mut self, mono: &[(String, u32)], k: u32, horizon: &Horizon) -> Result<QueryResult, QueryError> {
        self.extra.clear();
        if !self.is_dynamic() {
            return Err(QueryError::WrongKind("temporal"));
        }
        let powered: Vec<(String, u32)> = mono.iter().map(|(n, e)| (n.clone(), e * k)).collect();
        let s = self.moment_sequence(&powered)?;
        let value = match horizon {
            Horizon::Symbolic => Value::Sequence(s),
            Horizon::At(n) => Value::Scalar(s.value(*n)),
            Horizon::Limit => {
                let lim = s.limit(&param_domains(&self.net().params));
                if let Limit::ConditionalOn { assumptions, .. } = &lim {
                    self.extra.extend(assumptions.iter().cloned());
                }
                Value::Limit(lim)
            }
        };
        Ok(self.result(value))
    }

    /// Expected sample counts for rejection sampling with the given evidence.
    pub fn expected_samples(
        &mut self,
        evidence: &[(String, u32)],
        samples: Option<&RationalFunction>,
        with_monitor: bool,
    ) -> Result<SamplesReport, QueryError> {
        self.extra.clear();
        let Network::Static(bn) = self.network.clone() else {
            return Err(QueryError::WrongKind("static"));
        };
        let p = self.event_probability(evidence, 1)?;
        self.nonzero_evidence(evidence, &p, 1)?;
        let until_first = p.recip()?;
        let positives = samples.map(|n| &p * n);
        let monitor = if with_monitor {
            Some(monitor_limit(&bn, evidence, &self.opts)?)
        } else {
            None
        };
        Ok(SamplesReport {
            probability: p,
            until_first,
            positives,
            monitor,
            assumptions: self.assumptions(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct SamplesReport {
    /// Probability of the evidence in one sample.
    pub probability: RationalFunction,
    /// Expected samples up to and including the first accepted one.
    pub until_first: RationalFunction,
    /// Expected accepted samples among the requested number.
    pub positives: Option<RationalFunction>,
    /// Limit of the monitor loop's expected count.
    pub monitor: Option<Limit>,
    pub assumptions: BTreeSet<String>,
}

impl SamplesReport {
    /// Whether the monitor loop reproduces the closed form exactly.
    pub fn routes_agree(&self) -> Option<bool> {
        self.monitor.as_ref().map(|m| match m {
            Limit::Converges(v) | Limit::ConditionalOn { limit: v, .. } => *v == self.until_first,
            Limit::Diverges => false,
        })
    }
}

/// `lim E[count]` of the rejection-sampling monitor loop.
pub fn monitor_limit(bn: &BayesNet, evidence: &[(String, u32)], opts: &QueryOptions) -> Result<Limit, QueryError> {
    let m = compile_sampling_monitor(bn, evidence, &opts.compile)?;
    let mut e = Engine::new(&m.compiled.program, opts.engine.clone())?;
    let s = e.moment(&[(m.count.as_str(), 1)])?;
    Ok(s.limit(&param_domains(&bn.params)))
}

/// Solves `sum_i i^k p_i = moments[k-1]` for `k = 1..m-1` together with
/// `sum_i p_i = 1`.
pub fn distribution_from_moments(moments: &[RationalFunction], m: u32) -> Result<Vec<RationalFunction>, QueryError> {
    if m < 1 || moments.len() + 1 != m as usize {
        return Err(QueryError::Invalid(format!(
            "a support of size {m} needs {} moments, got {}",
            m.saturating_sub(1),
            moments.len()
        )));
    }
    let m = m as usize;
    // Augmented Vandermonde system, row k: sum_i i^k p_i = rhs_k.
    let mut a: Vec<Vec<RationalFunction>> = (0..m)
        .map(|k| {
            let mut row: Vec<RationalFunction> = (0..m)
                .map(|i| RationalFunction::from_i64((i as i64).pow(k as u32)))
                .collect();
            row.push(if k == 0 { RationalFunction::one() } else { moments[k - 1].clone() });
            row
        })
        .collect();
    for col in 0..m {
        let piv = (col..m).find(|&r| !a[r][col].is_zero()).expect("Vandermonde matrices are regular");
        a.swap(col, piv);
        let inv = a[col][col].recip()?;
        for j in col..=m {
            a[col][j] = &a[col][j] * &inv;
        }
        for r in 0..m {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in col..=m {
                    let t = &f * &a[col][j];
                    a[r][j] = &a[r][j] - &t;
                }
            }
        }
    }
    let probs: Vec<RationalFunction> = a.into_iter().map(|row| row[m].clone()).collect();
    if probs
        .iter()
        .any(|p| p.as_constant().is_some_and(|q| q < crate::symcore::Rational::zero()))
    {
        return Err(QueryError::InconsistentMoments(probs));
    }
    Ok(probs)
}
