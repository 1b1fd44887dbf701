//! Independent checks on decompositions.
//!
//! The brute-force key oracle here deliberately recomputes closures with
//! its own naive routine instead of calling into [`crate::inference`].

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::inference::closure;
use crate::model::{AttributeSet, Decomposition, FunctionalDependency, RelationSchema};

/// Rows the chase may hold before giving up.
pub const CHASE_ROW_CAP: usize = 4096;
/// Widest schema the brute-force key oracle accepts.
pub const BRUTE_FORCE_CAP: usize = 16;

/// Symbolic relation used by the chase. Symbol `0` is the distinguished
/// symbol of its column; every other symbol is a fresh subscripted one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tableau {
    pub width: usize,
    pub rows: Vec<Vec<u32>>,
}

impl Tableau {
    /// One row per table, distinguished exactly on the table's attributes.
    pub fn for_decomposition(width: usize, d: &Decomposition) -> Self {
        let rows = d
            .tables
            .iter()
            .enumerate()
            .map(|(r, t)| {
                (0..width)
                    .map(|a| if t.attributes.contains(a) { 0 } else { (r * width + a + 1) as u32 })
                    .collect()
            })
            .collect();
        Tableau { width, rows }
    }

    pub fn has_distinguished_row(&self) -> bool {
        self.rows.iter().any(|r| r.iter().all(|&s| s == 0))
    }

    fn project(row: &[u32], attrs: AttributeSet) -> Vec<u32> {
        attrs.iter().map(|a| row[a]).collect()
    }

    /// Equate right-side symbols of rows agreeing on the left side.
    fn apply_fd(&mut self, lhs: AttributeSet, rhs: AttributeSet) -> bool {
        let mut changed = false;
        let mut groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();
        for (i, row) in self.rows.iter().enumerate() {
            groups.entry(Self::project(row, lhs)).or_default().push(i);
        }
        let mut groups: Vec<Vec<usize>> = groups.into_values().filter(|g| g.len() > 1).collect();
        groups.sort();
        for group in groups {
            for a in rhs {
                let keep = group.iter().map(|&i| self.rows[i][a]).min().expect("nonempty group");
                let drop: HashSet<u32> = group
                    .iter()
                    .map(|&i| self.rows[i][a])
                    .filter(|&s| s != keep)
                    .collect();
                if drop.is_empty() {
                    continue;
                }
                changed = true;
                for row in &mut self.rows {
                    if drop.contains(&row[a]) {
                        row[a] = keep;
                    }
                }
            }
        }
        if changed {
            self.dedup();
        }
        changed
    }

    /// Add the row swapping the `rhs` part between rows agreeing on `lhs`.
    fn apply_mvd(&mut self, lhs: AttributeSet, rhs: AttributeSet, cap: usize) -> Result<bool, Error> {
        let rhs = rhs.difference(lhs);
        let present: HashSet<Vec<u32>> = self.rows.iter().cloned().collect();
        let mut added: Vec<Vec<u32>> = Vec::new();
        let mut seen = present.clone();
        for i in 0..self.rows.len() {
            for k in 0..self.rows.len() {
                if i == k || Self::project(&self.rows[i], lhs) != Self::project(&self.rows[k], lhs) {
                    continue;
                }
                let row: Vec<u32> = (0..self.width)
                    .map(|a| {
                        if lhs.contains(a) || rhs.contains(a) {
                            self.rows[i][a]
                        } else {
                            self.rows[k][a]
                        }
                    })
                    .collect();
                if seen.insert(row.clone()) {
                    added.push(row);
                    if self.rows.len() + added.len() > cap {
                        return Err(Error::ChaseRowCap { cap });
                    }
                }
            }
        }
        let changed = !added.is_empty();
        self.rows.extend(added);
        Ok(changed)
    }

    fn dedup(&mut self) {
        let mut seen = HashSet::new();
        self.rows.retain(|r| seen.insert(r.clone()));
    }

    /// Chase to fixpoint: dependencies in declaration order (functional
    /// first, then multivalued), repeated until nothing changes.
    pub fn chase(&mut self, schema: &RelationSchema, cap: usize) -> Result<(), Error> {
        loop {
            let mut changed = false;
            for fd in schema.fds() {
                changed |= self.apply_fd(fd.lhs(), fd.rhs());
            }
            for mvd in schema.mvds() {
                changed |= self.apply_mvd(mvd.lhs(), mvd.rhs(), cap)?;
            }
            if !changed || self.has_distinguished_row() {
                return Ok(());
            }
        }
    }
}

fn check_coverage(schema: &RelationSchema, d: &Decomposition) -> Result<(), Error> {
    let missing = schema.all().difference(d.covered());
    if missing.is_empty() {
        Ok(())
    } else {
        Err(Error::Coverage {
            missing: schema.render_set(missing),
        })
    }
}

/// Chase test for a lossless join.
pub fn is_lossless(schema: &RelationSchema, d: &Decomposition) -> Result<bool, Error> {
    check_coverage(schema, d)?;
    let mut tableau = Tableau::for_decomposition(schema.arity(), d);
    if tableau.has_distinguished_row() {
        return Ok(true);
    }
    tableau.chase(schema, CHASE_ROW_CAP)?;
    Ok(tableau.has_distinguished_row())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preservation {
    pub preserved: bool,
    pub lost: Vec<FunctionalDependency>,
}

/// Whether every original functional dependency can be enforced from the
/// projections onto the tables.
pub fn preserves_dependencies(schema: &RelationSchema, d: &Decomposition) -> Result<Preservation, Error> {
    check_coverage(schema, d)?;
    let lost: Vec<FunctionalDependency> = schema
        .fds()
        .iter()
        .filter(|fd| {
            let mut z = fd.lhs();
            loop {
                let before = z;
                for t in &d.tables {
                    z = z.union(closure(z.intersection(t.attributes), schema.fds()).intersection(t.attributes));
                }
                if z == before {
                    break;
                }
            }
            !fd.rhs().is_subset(z)
        })
        .copied()
        .collect();
    Ok(Preservation {
        preserved: lost.is_empty(),
        lost,
    })
}

fn naive_closure(seed: &[bool], fds: &[FunctionalDependency]) -> Vec<bool> {
    let mut have = seed.to_vec();
    let mut changed = true;
    while changed {
        changed = false;
        for fd in fds {
            if fd.lhs().iter().all(|a| have[a]) {
                for a in fd.rhs().iter() {
                    if !have[a] {
                        have[a] = true;
                        changed = true;
                    }
                }
            }
        }
    }
    have
}

/// Every subset, smallest first; the minimal superkeys.
pub fn brute_force_candidate_keys(schema: &RelationSchema) -> Result<Vec<AttributeSet>, Error> {
    let n = schema.arity();
    if n > BRUTE_FORCE_CAP {
        return Err(Error::AttributeCapExceeded {
            count: n,
            cap: BRUTE_FORCE_CAP,
        });
    }
    let superkey = |mask: u64| {
        let seed: Vec<bool> = (0..n).map(|a| mask & (1 << a) != 0).collect();
        naive_closure(&seed, schema.fds()).iter().all(|&b| b)
    };
    let mut masks: Vec<u64> = (0..1u64 << n).collect();
    masks.sort_by_key(|&m| {
        let members: Vec<usize> = (0..n).filter(|a| m & (1 << a) != 0).collect();
        (members.len(), members)
    });
    Ok(masks
        .into_iter()
        .filter(|&m| superkey(m) && (0..n).all(|a| m & (1 << a) == 0 || !superkey(m & !(1 << a))))
        .map(AttributeSet::from_bits)
        .collect())
}

/// Outcome of [`instance_join_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JoinCheck {
    pub trials: usize,
    /// Index of the first trial whose join differed from the instance.
    pub first_failure: Option<usize>,
}

impl JoinCheck {
    pub fn passed(&self) -> bool {
        self.first_failure.is_none()
    }
}

type Row = Vec<u8>;

/// A random instance satisfying every dependency of the schema.
///
/// Violations are repaired by merging: both conflicting values become the
/// smaller one. The sum of all values strictly decreases with every repair,
/// so the loop terminates.
pub fn random_instance(schema: &RelationSchema, rng: &mut impl Rng) -> Vec<Row> {
    let n = schema.arity();
    let rows = rng.gen_range(2..=8);
    let domain = rng.gen_range(2..=3u8);
    let mut instance: Vec<Row> = (0..rows).map(|_| (0..n).map(|_| rng.gen_range(0..domain)).collect()).collect();
    let agree = |a: &Row, b: &Row, set: AttributeSet| set.iter().all(|x| a[x] == b[x]);
    loop {
        let mut changed = false;
        for fd in schema.fds() {
            for i in 0..instance.len() {
                for k in i + 1..instance.len() {
                    if !agree(&instance[i], &instance[k], fd.lhs()) {
                        continue;
                    }
                    for a in fd.rhs() {
                        let v = instance[i][a].min(instance[k][a]);
                        if instance[i][a] != v || instance[k][a] != v {
                            instance[i][a] = v;
                            instance[k][a] = v;
                            changed = true;
                        }
                    }
                }
            }
        }
        for mvd in schema.mvds() {
            let rhs = mvd.rhs();
            for i in 0..instance.len() {
                for k in 0..instance.len() {
                    if i == k || !agree(&instance[i], &instance[k], mvd.lhs()) {
                        continue;
                    }
                    let swapped: Row = (0..n)
                        .map(|a| if rhs.contains(a) { instance[i][a] } else { instance[k][a] })
                        .collect();
                    if instance.contains(&swapped) {
                        continue;
                    }
                    for a in rhs {
                        let v = instance[i][a].min(instance[k][a]);
                        instance[i][a] = v;
                        instance[k][a] = v;
                    }
                    changed = true;
                }
            }
        }
        let mut seen = HashSet::new();
        instance.retain(|r| seen.insert(r.clone()));
        if !changed {
            return instance;
        }
    }
}

type Partial = Vec<Option<u8>>;

fn natural_join(schema_width: usize, instance: &[Row], d: &Decomposition) -> HashSet<Row> {
    let projections: Vec<(AttributeSet, HashSet<Partial>)> = d
        .tables
        .iter()
        .map(|t| {
            let tuples = instance
                .iter()
                .map(|r| (0..schema_width).map(|a| t.attributes.contains(a).then_some(r[a])).collect())
                .collect();
            (t.attributes, tuples)
        })
        .collect();
    let mut remaining: Vec<usize> = (0..projections.len()).collect();
    let mut covered = AttributeSet::empty();
    let mut result: Vec<Partial> = vec![vec![None; schema_width]];
    while !remaining.is_empty() {
        // Join next the table sharing the most attributes with what is covered.
        let pick = remaining
            .iter()
            .enumerate()
            .max_by_key(|(pos, &i)| (projections[i].0.intersection(covered).len(), std::cmp::Reverse(*pos)))
            .map(|(pos, _)| pos)
            .expect("remaining is nonempty");
        let (attrs, tuples) = &projections[remaining.remove(pick)];
        let shared = attrs.intersection(covered);
        let mut next = Vec::new();
        for r in &result {
            for t in tuples {
                if shared.iter().all(|a| r[a] == t[a]) {
                    let mut merged = r.clone();
                    for a in *attrs {
                        merged[a] = t[a];
                    }
                    next.push(merged);
                }
            }
        }
        let mut seen = HashSet::new();
        next.retain(|r| seen.insert(r.clone()));
        result = next;
        covered = covered.union(*attrs);
    }
    result
        .into_iter()
        .map(|r| r.into_iter().map(|v| v.expect("all attributes covered")).collect())
        .collect()
}

/// Sample legal instances, project them onto the tables and join the
/// projections back; the check passes when every join reproduces its
/// instance exactly.
pub fn instance_join_check(schema: &RelationSchema, d: &Decomposition, seed: u64, trials: usize) -> Result<JoinCheck, Error> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".to_string()));
    }
    check_coverage(schema, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let instance = random_instance(schema, &mut rng);
        let joined = natural_join(schema.arity(), &instance, d);
        let original: HashSet<Row> = instance.into_iter().collect();
        if joined != original {
            return Ok(JoinCheck {
                trials,
                first_failure: Some(trial),
            });
        }
    }
    Ok(JoinCheck {
        trials,
        first_failure: None,
    })
}
