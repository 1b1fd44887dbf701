#![allow(dead_code)]

use normkit::dsl::parse_schema;
use normkit::RelationSchema;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn fixture(name: &str) -> RelationSchema {
    let path = format!("{}/../../schemas/{name}", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse_schema(&text).unwrap_or_else(|e| panic!("{path}: {e}"))
}

/// Schema source with `attrs` attributes named `A`, `B`, ... and up to
/// `max_fds` functional dependencies with one- or two-attribute sides.
pub fn random_source(rng: &mut impl Rng, max_attrs: usize, max_fds: usize, max_mvds: usize) -> String {
    let n = rng.gen_range(2..=max_attrs);
    let names: Vec<String> = (0..n).map(|i| ((b'A' + i as u8) as char).to_string()).collect();
    let mut text = format!("schema R\nattributes {}\n", names.join(", "));
    let side = |rng: &mut dyn rand::RngCore, pool: &[String], max: usize| -> Vec<String> {
        let k = rng.gen_range(1..=max.min(pool.len()));
        let mut picked: Vec<String> = pool.choose_multiple(rng, k).cloned().collect();
        picked.sort();
        picked
    };
    let dependency = |rng: &mut dyn rand::RngCore, arrow: &str| -> String {
        let lhs = side(rng, &names[..], 2.min(names.len() - 1));
        let rest: Vec<String> = names.iter().filter(|a| !lhs.contains(a)).cloned().collect();
        let rhs = side(rng, &rest, 2);
        format!("{arrow} {} {} {}\n", lhs.join(", "), if arrow == "fd" { "->" } else { "->>" }, rhs.join(", "))
    };
    for _ in 0..rng.gen_range(1..=max_fds) {
        text.push_str(&dependency(rng, "fd"));
    }
    for _ in 0..rng.gen_range(0..=max_mvds) {
        text.push_str(&dependency(rng, "mvd"));
    }
    text
}

/// `count` schemas drawn from `seed`; identical duplicates are kept.
pub fn corpus(seed: u64, count: usize, max_attrs: usize, max_fds: usize, max_mvds: usize) -> Vec<RelationSchema> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| parse_schema(&random_source(&mut rng, max_attrs, max_fds, max_mvds)).expect("generated schemas parse"))
        .collect()
}

/// Like [`random_source`] but every right side is replaced by the closure
/// of its left side minus the left side; dependencies whose closure adds
/// nothing are dropped.
pub fn right_closed(schema: &RelationSchema) -> RelationSchema {
    use normkit::inference::closure;
    use normkit::FunctionalDependency;
    let mut fds: Vec<FunctionalDependency> = Vec::new();
    for fd in schema.fds() {
        let rhs = closure(fd.lhs(), schema.fds()).difference(fd.lhs());
        if !fds.iter().any(|f| f.lhs() == fd.lhs()) {
            fds.push(FunctionalDependency::new(fd.lhs(), rhs, fds.len()).expect("closure adds the declared rhs"));
        }
    }
    schema.with_dependencies(fds, Vec::new(), None).expect("same attributes")
}
