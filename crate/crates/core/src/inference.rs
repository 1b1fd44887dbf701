//! Attribute closure, keys and implication over functional dependencies.
//!
//! Multivalued dependencies play no part here: keys are determined by the
//! functional dependencies alone.

use crate::error::Error;
use crate::model::{AttributeSet, FunctionalDependency, RelationSchema};

/// Default cap on the number of attributes for the exponential key search.
pub const DEFAULT_KEY_SEARCH_CAP: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Justification {
    Reflexivity,
    /// Index into the dependency list the closure was computed over.
    Fd(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClosureStep {
    pub added: AttributeSet,
    pub justification: Justification,
}

/// The derivation of a closure. The first step is always the seed itself,
/// justified by reflexivity; every later step adds at least one attribute.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ClosureTrace {
    pub steps: Vec<ClosureStep>,
}

impl ClosureTrace {
    pub fn render(&self, schema: &RelationSchema, fds: &[FunctionalDependency]) -> Vec<String> {
        let mut acc = AttributeSet::empty();
        self.steps
            .iter()
            .enumerate()
            .map(|(i, step)| {
                acc = acc.union(step.added);
                let why = match step.justification {
                    Justification::Reflexivity => "reflexivity".to_string(),
                    Justification::Fd(f) => schema.render_fd(&fds[f]),
                };
                format!("step {}: {{{}}} due to {why}", i + 1, schema.render_set(acc))
            })
            .collect()
    }
}

/// Least fixpoint of "if lhs ⊆ current then add rhs", starting from `seed`.
pub fn closure(seed: AttributeSet, fds: &[FunctionalDependency]) -> AttributeSet {
    let mut current = seed;
    loop {
        let before = current;
        for fd in fds {
            if fd.lhs().is_subset(current) {
                current = current.union(fd.rhs());
            }
        }
        if current == before {
            return current;
        }
    }
}

/// Closure with its derivation. Dependencies are applied in list order
/// within each pass; passes repeat until nothing changes.
pub fn attribute_closure(seed: AttributeSet, fds: &[FunctionalDependency]) -> (AttributeSet, ClosureTrace) {
    let mut trace = ClosureTrace {
        steps: vec![ClosureStep {
            added: seed,
            justification: Justification::Reflexivity,
        }],
    };
    let mut current = seed;
    let mut changed = true;
    while changed {
        changed = false;
        for (i, fd) in fds.iter().enumerate() {
            if !fd.lhs().is_subset(current) {
                continue;
            }
            let added = fd.rhs().difference(current);
            if !added.is_empty() {
                current = current.union(added);
                trace.steps.push(ClosureStep {
                    added,
                    justification: Justification::Fd(i),
                });
                changed = true;
            }
        }
    }
    (current, trace)
}

pub fn is_superkey(attrs: AttributeSet, schema: &RelationSchema) -> bool {
    closure(attrs, schema.fds()) == schema.all()
}

/// Attributes that occur on no right side; every key contains them.
pub fn mandatory_attributes(schema: &RelationSchema) -> AttributeSet {
    let determined = schema
        .fds()
        .iter()
        .fold(AttributeSet::empty(), |acc, fd| acc.union(fd.rhs()));
    schema.all().difference(determined)
}

pub fn candidate_keys(schema: &RelationSchema) -> Result<Vec<AttributeSet>, Error> {
    candidate_keys_capped(schema, DEFAULT_KEY_SEARCH_CAP)
}

/// All minimal superkeys in canonical order.
///
/// The search starts from the mandatory attributes and adds the remaining
/// ones level by level in ordinal order, skipping supersets of keys already
/// found. Because every key contains the mandatory core, a superkey met at
/// level `k` has no superkey proper subset.
pub fn candidate_keys_capped(schema: &RelationSchema, cap: usize) -> Result<Vec<AttributeSet>, Error> {
    if schema.arity() > cap {
        return Err(Error::AttributeCapExceeded {
            count: schema.arity(),
            cap,
        });
    }
    let all = schema.all();
    let core = mandatory_attributes(schema);
    if closure(core, schema.fds()) == all {
        return Ok(vec![core]);
    }
    let optional: Vec<usize> = all.difference(core).iter().collect();
    let mut keys: Vec<AttributeSet> = Vec::new();
    for size in 1..=optional.len() {
        let mut level = Vec::new();
        for_each_combination(optional.len(), size, |picked| {
            let candidate = picked
                .iter()
                .fold(core, |acc, &i| acc.with(optional[i]));
            if keys.iter().any(|k| k.is_subset(candidate)) {
                return;
            }
            if closure(candidate, schema.fds()) == all {
                level.push(candidate);
            }
        });
        keys.extend(level);
    }
    keys.sort();
    Ok(keys)
}

/// Visit the `k`-subsets of `0..n` in lexicographic order.
fn for_each_combination(n: usize, k: usize, mut visit: impl FnMut(&[usize])) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        visit(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// The declared key when it is a candidate key, else the first candidate key.
pub fn primary_key(schema: &RelationSchema) -> Result<AttributeSet, Error> {
    let keys = candidate_keys(schema)?;
    primary_key_among(schema, &keys)
}

pub(crate) fn primary_key_among(schema: &RelationSchema, keys: &[AttributeSet]) -> Result<AttributeSet, Error> {
    match schema.declared_key() {
        Some(declared) if keys.contains(&declared) => Ok(declared),
        Some(declared) => Err(Error::DeclaredKeyNotCandidate {
            key: schema.render_set(declared),
        }),
        None => keys.first().copied().ok_or(Error::NoKey),
    }
}

pub fn implies(fds: &[FunctionalDependency], candidate: &FunctionalDependency) -> bool {
    candidate.rhs().is_subset(closure(candidate.lhs(), fds))
}

/// Drop right-side attributes that follow transitively from the rest.
///
/// Dependencies are visited in list order and their attributes in ordinal
/// order; each removal is tested against the current, already reduced set,
/// so the closure of every attribute set is unchanged. A dependency whose
/// right side empties out is dropped.
pub fn transitive_right_reduce(fds: &[FunctionalDependency]) -> Vec<FunctionalDependency> {
    let mut working: Vec<Option<FunctionalDependency>> = fds.iter().copied().map(Some).collect();
    for i in 0..working.len() {
        let Some(fd) = working[i] else { continue };
        for a in fd.rhs() {
            let Some(current) = working[i] else { break };
            let reduced_rhs = current.rhs().without(a);
            let others: Vec<FunctionalDependency> = working
                .iter()
                .enumerate()
                .filter_map(|(j, f)| if j == i { None } else { *f })
                .chain(current.with_rhs(reduced_rhs).ok())
                .collect();
            if closure(current.lhs(), &others).contains(a) {
                working[i] = current.with_rhs(reduced_rhs).ok();
            }
        }
    }
    working.into_iter().flatten().collect()
}

/// Remove dependencies whose left side is a candidate key other than the
/// primary key.
pub fn suppress_alternative_key_fds(
    fds: &[FunctionalDependency],
    schema: &RelationSchema,
) -> Result<Vec<FunctionalDependency>, Error> {
    let keys = candidate_keys(schema)?;
    let pk = primary_key_among(schema, &keys)?;
    Ok(fds
        .iter()
        .filter(|fd| fd.lhs() == pk || !keys.contains(&fd.lhs()))
        .copied()
        .collect())
}

/// First candidate key of the projection of the schema's dependencies onto
/// `attrs`: the smallest subset of `attrs` whose closure covers `attrs`.
pub fn projected_key(attrs: AttributeSet, fds: &[FunctionalDependency]) -> AttributeSet {
    let members: Vec<usize> = attrs.iter().collect();
    for size in 1..=members.len() {
        let mut found = None;
        for_each_combination(members.len(), size, |picked| {
            if found.is_some() {
                return;
            }
            let candidate: AttributeSet = picked.iter().map(|&i| members[i]).collect();
            if attrs.is_subset(closure(candidate, fds)) {
                found = Some(candidate);
            }
        });
        if let Some(key) = found {
            return key;
        }
    }
    attrs
}
