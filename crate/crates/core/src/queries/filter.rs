//! Exact forward filtering for a hidden state with one observed child.


use super::QueryError;
use crate::bncompiler::{DynBayesNet, LocalModel, Node};
use crate::symcore::RationalFunction;

type Matrix = Vec<Vec<RationalFunction>>;

fn table(n: &Node, parent: &str) -> Result<Matrix, QueryError> {
    let (LocalModel::Cpt { parents, rows }, Some(_)) = (&n.model, n.support) else {
        return Err(QueryError::Invalid(format!("`{}` needs a conditional probability table", n.name)));
    };
    if parents.len() != 1 || parents[0] != parent {
        return Err(QueryError::Invalid(format!(
            "`{}` must have exactly the parent `{parent}` for filtering",
            n.name
        )));
    }
    let mut out: Matrix = vec![Vec::new(); rows.len()];
    for r in rows {
        let probs = r
            .probs
            .iter()
            .map(|p| p.to_ratfun().map_err(|e| QueryError::Invalid(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        out[r.given[0] as usize] = probs;
    }
    Ok(out)
}

/// `(transition[prev][next], sensor[state][observation])` for a state node
/// that depends only on its own previous value and an observation node that
/// depends only on the state.
pub fn transition_model(d: &DynBayesNet, state: &str, observation: &str) -> Result<(Matrix, Matrix), QueryError> {
    let s = d
        .slice
        .node(state)
        .ok_or_else(|| crate::bncompiler::BnError::UnknownNode(state.to_string()))?;
    let o = d
        .slice
        .node(observation)
        .ok_or_else(|| crate::bncompiler::BnError::UnknownNode(observation.to_string()))?;
    if !d.inter_edges.get(state).is_some_and(|v| v.iter().any(|p| p == state)) {
        return Err(QueryError::Invalid(format!("`{state}` does not depend on its previous value")));
    }
    Ok((table(s, state)?, table(o, state)?))
}

/// Beliefs over the state after each step. A step with an observation
/// predicts and then conditions; a step without one only predicts.
pub fn forward_filter(
    d: &DynBayesNet,
    state: &str,
    observation: &str,
    prior: &[RationalFunction],
    observations: &[Option<u32>],
) -> Result<Vec<Vec<RationalFunction>>, QueryError> {
    let (trans, sensor) = transition_model(d, state, observation)?;
    let m = trans.len();
    if prior.len() != m {
        return Err(QueryError::Invalid(format!("prior has {} entries for {m} states", prior.len())));
    }
    let mut belief = prior.to_vec();
    let mut out = Vec::new();
    for (t, obs) in observations.iter().enumerate() {
        let mut next = vec![RationalFunction::zero(); m];
        for (prev, b) in belief.iter().enumerate() {
            for (x, slot) in next.iter_mut().enumerate() {
                *slot = &*slot + &(b * &trans[prev][x]);
            }
        }
        if let Some(e) = obs {
            let k = sensor[0].len() as u32;
            if *e >= k {
                return Err(QueryError::Invalid(format!("observation {e} outside the {k} values of `{observation}`")));
            }
            for (x, slot) in next.iter_mut().enumerate() {
                *slot = &*slot * &sensor[x][*e as usize];
            }
            let total = next.iter().fold(RationalFunction::zero(), |a, b| &a + b);
            if total.is_zero() {
                return Err(QueryError::ZeroEvidence(format!("{observation}={e} at step {}", t + 1)));
            }
            for slot in next.iter_mut() {
                *slot = slot.checked_div(&total)?;
            }
        }
        belief = next;
        out.push(belief.clone());
    }
    Ok(out)
}
