//! Query documents and JSON reports. See `docs/queries.md`.

use std::collections::HashMap;

use serde_json::{json, Map, Value as Json};

use super::{filter::forward_filter, Analysis, Event, Horizon, QueryError, QueryResult, Target, Value};
use crate::bncompiler::Network;
use crate::symcore::{render_decimal, Limit, Rational, RationalFunction, Sequence};

#[derive(Clone, Debug)]
pub struct RenderOptions {
    pub precision: usize,
    /// Parameter values substituted into symbolic answers before rendering.
    pub bindings: HashMap<String, Rational>,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            precision: 6,
            bindings: HashMap::new(),
        }
    }
}

fn bad(msg: impl Into<String>) -> QueryError {
    QueryError::Invalid(msg.into())
}

impl RenderOptions {
    fn env(&self) -> HashMap<String, RationalFunction> {
        self.bindings
            .iter()
            .map(|(k, v)| (k.clone(), RationalFunction::constant(v.clone())))
            .collect()
    }

    pub fn bind(&self, v: &RationalFunction) -> Result<RationalFunction, QueryError> {
        Ok(v.substitute(&self.env())?)
    }

    pub fn number(&self, v: &RationalFunction) -> Result<Json, QueryError> {
        let v = self.bind(v)?;
        let decimal = v.as_constant().map(|q| render_decimal(&q, self.precision));
        Ok(json!({ "exact": v.to_string(), "decimal": decimal }))
    }

    fn sequence(&self, s: &Sequence) -> Result<Json, QueryError> {
        Ok(json!({ "exact": s.substitute(&self.env())?.to_string(), "decimal": null }))
    }

    fn limit(&self, l: &Limit) -> Result<Json, QueryError> {
        Ok(match l {
            Limit::Converges(v) | Limit::ConditionalOn { limit: v, .. } => self.number(v)?,
            Limit::Diverges => json!({ "exact": "diverges", "decimal": null }),
        })
    }

    pub fn result(&self, kind: &str, r: &QueryResult) -> Result<Json, QueryError> {
        let mut body = match &r.value {
            Value::Scalar(v) => self.number(v)?,
            Value::Sequence(s) => self.sequence(s)?,
            Value::Limit(l) => self.limit(l)?,
            Value::Vector(ps) => {
                let items = ps.iter().map(|p| self.number(p)).collect::<Result<Vec<_>, _>>()?;
                json!({
                    "exact": items.iter().map(|i| i["exact"].clone()).collect::<Vec<_>>(),
                    "decimal": items.iter().map(|i| i["decimal"].clone()).collect::<Vec<_>>(),
                })
            }
        };
        let obj = body.as_object_mut().unwrap();
        obj.insert("query".into(), json!(kind));
        obj.insert("assumptions".into(), json!(r.assumptions.iter().collect::<Vec<_>>()));
        Ok(body)
    }
}

fn value_text(v: &Json) -> Option<String> {
    match v {
        Json::Number(n) => Some(n.to_string()),
        Json::String(s) => Some(s.clone()),
        _ => None,
    }
}

/// `{"node": value, ...}` with values given as numbers or state names.
pub fn parse_event(net: &Network, v: &Json) -> Result<Event, QueryError> {
    let obj = v.as_object().ok_or_else(|| bad("an event must be an object of node values"))?;
    let mut out = Vec::new();
    for (name, val) in obj {
        let text = value_text(val).ok_or_else(|| bad(format!("value of `{name}` must be a number or state name")))?;
        out.push((name.clone(), net.net().state_index(name, &text)?));
    }
    Ok(out)
}

fn get_u64(spec: &Map<String, Json>, key: &str) -> Result<Option<u64>, QueryError> {
    match spec.get(key) {
        None | Some(Json::Null) => Ok(None),
        Some(v) => v
            .as_u64()
            .map(Some)
            .ok_or_else(|| bad(format!("`{key}` must be a nonnegative integer"))),
    }
}

fn monomial(spec: &Map<String, Json>) -> Result<Vec<(String, u32)>, QueryError> {
    if let Some(m) = spec.get("monomial") {
        let obj = m.as_object().ok_or_else(|| bad("`monomial` must map node names to exponents"))?;
        return obj
            .iter()
            .map(|(k, v)| {
                v.as_u64()
                    .map(|e| (k.clone(), e as u32))
                    .ok_or_else(|| bad(format!("exponent of `{k}` must be a nonnegative integer")))
            })
            .collect();
    }
    match spec.get("target") {
        Some(Json::String(s)) => Ok(vec![(s.clone(), 1)]),
        _ => Err(bad("give `target` (a node name) or `monomial`")),
    }
}

/// Runs one query document against an analysis and renders the report.
pub fn run_query(a: &mut Analysis, spec: &Json, opts: &RenderOptions) -> Result<Json, QueryError> {
    let spec = spec.as_object().ok_or_else(|| bad("a query must be a JSON object"))?;
    let kind = spec
        .get("query")
        .and_then(Json::as_str)
        .ok_or_else(|| bad("missing `query` kind"))?;
    let k = get_u64(spec, "k")?.unwrap_or(1) as u32;
    let at = get_u64(spec, "at")?;
    let net = a.network().clone();
    match kind {
        "moment" => {
            let r = a.joint_moment(&monomial(spec)?, k, at)?;
            opts.result(kind, &r)
        }
        "conditional" => {
            let target = match spec.get("target") {
                Some(Json::String(s)) => Target::Moment(vec![(s.clone(), k)]),
                Some(v @ Json::Object(_)) => Target::Event(parse_event(&net, v)?),
                _ => Target::Moment(monomial(spec)?.into_iter().map(|(n, e)| (n, e * k)).collect()),
            };
            let evidence = parse_event(&net, spec.get("evidence").unwrap_or(&json!({})))?;
            let r = a.conditional(&target, &evidence, at)?;
            opts.result(kind, &r)
        }
        "distribution" => {
            let node = spec
                .get("target")
                .and_then(Json::as_str)
                .ok_or_else(|| bad("`target` must name a discrete node"))?;
            let r = a.distribution(node, at)?;
            opts.result(kind, &r)
        }
        "predict" => {
            let horizon = if spec.get("limit").and_then(Json::as_bool).unwrap_or(false) {
                Horizon::Limit
            } else if let Some(n) = at {
                Horizon::At(n)
            } else {
                Horizon::Symbolic
            };
            let r = a.predict(&monomial(spec)?, k, &horizon)?;
            let mut out = opts.result(kind, &r)?;
            if let Value::Limit(l) = &r.value {
                out["converges"] = json!(!matches!(l, Limit::Diverges));
            }
            Ok(out)
        }
        "samples" => {
            let evidence = parse_event(&net, spec.get("evidence").ok_or_else(|| bad("missing `evidence`"))?)?;
            let n = match spec.get("n") {
                None | Some(Json::Null) => None,
                Some(v) => {
                    let t = value_text(v).ok_or_else(|| bad("`n` must be a number"))?;
                    Some(RationalFunction::constant(
                        crate::symcore::parse_rational(&t).map_err(|e| bad(e.to_string()))?,
                    ))
                }
            };
            let monitor = spec.get("monitor").and_then(Json::as_bool).unwrap_or(true);
            let rep = a.expected_samples(&evidence, n.as_ref(), monitor)?;
            samples_json(&rep, opts)
        }
        "filter" => {
            let Network::Dynamic(d) = &net else {
                return Err(QueryError::WrongKind("temporal"));
            };
            let state = spec
                .get("state")
                .and_then(Json::as_str)
                .ok_or_else(|| bad("`state` must name the hidden node"))?;
            let obs_node = spec
                .get("observation")
                .and_then(Json::as_str)
                .ok_or_else(|| bad("`observation` must name the observed node"))?;
            let seq = spec
                .get("obs")
                .and_then(Json::as_array)
                .ok_or_else(|| bad("`obs` must be a list of observed values (null for none)"))?;
            let mut obs = Vec::new();
            for v in seq {
                obs.push(match v {
                    Json::Null => None,
                    other => {
                        let t = value_text(other).ok_or_else(|| bad("observations must be numbers, names or null"))?;
                        Some(net.net().state_index(obs_node, &t)?)
                    }
                });
            }
            let prior = match a.distribution(state, Some(0))?.value {
                Value::Vector(v) => v,
                _ => unreachable!(),
            };
            let beliefs = forward_filter(d, state, obs_node, &prior, &obs)?;
            let rendered = beliefs
                .iter()
                .map(|b| b.iter().map(|p| opts.number(p)).collect::<Result<Vec<_>, _>>())
                .collect::<Result<Vec<_>, _>>()?;
            Ok(json!({
                "query": "filter",
                "prior": prior.iter().map(|p| opts.number(p)).collect::<Result<Vec<_>, _>>()?,
                "posteriors": rendered,
                "assumptions": Vec::<String>::new(),
            }))
        }
        other => Err(bad(format!(
            "unknown query kind `{other}`; expected moment, conditional, distribution, predict, samples or filter"
        ))),
    }
}

pub fn samples_json(rep: &super::SamplesReport, opts: &RenderOptions) -> Result<Json, QueryError> {
    let mut out = opts.number(&rep.until_first)?;
    let obj = out.as_object_mut().unwrap();
    obj.insert("query".into(), json!("samples"));
    obj.insert("probability".into(), opts.number(&rep.probability)?);
    obj.insert(
        "positives".into(),
        match &rep.positives {
            Some(p) => opts.number(p)?,
            None => Json::Null,
        },
    );
    obj.insert(
        "monitor".into(),
        match &rep.monitor {
            Some(l) => opts.limit(l)?,
            None => Json::Null,
        },
    );
    obj.insert("routes_agree".into(), json!(rep.routes_agree()));
    obj.insert("assumptions".into(), json!(rep.assumptions.iter().collect::<Vec<_>>()));
    Ok(out)
}
