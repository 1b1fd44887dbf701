//! Serialized shapes of the `--json` outputs and of decomposition files.

use normkit::model::{DecomposedTable, ForeignKey, Provenance};
use normkit::{AttributeSet, Decomposition, Error, RelationSchema};
use serde::{Deserialize, Serialize};

#[derive(Serialize)]
pub struct Dependency {
    pub text: String,
    pub lhs: Vec<String>,
    pub rhs: Vec<String>,
    pub label: &'static str,
}

#[derive(Serialize)]
pub struct Analysis {
    pub schema: String,
    pub attributes: Vec<String>,
    pub primary_key: Vec<String>,
    pub candidate_keys: Vec<Vec<String>>,
    pub key_closure: Vec<String>,
    pub fds: Vec<Dependency>,
    pub mvds: Vec<Dependency>,
    pub normal_form: String,
    pub warnings: Vec<String>,
}

#[derive(Serialize, Deserialize)]
pub struct ForeignKeyJson {
    pub attributes: Vec<String>,
    pub references: String,
}

#[derive(Serialize, Deserialize)]
pub struct TableJson {
    pub name: String,
    pub attributes: Vec<String>,
    pub primary_key: Vec<String>,
    #[serde(default)]
    pub foreign_keys: Vec<ForeignKeyJson>,
    #[serde(default, skip_deserializing)]
    pub provenance: String,
}

#[derive(Serialize, Deserialize)]
pub struct DecompositionJson {
    pub schema: String,
    #[serde(default)]
    pub method: String,
    pub tables: Vec<TableJson>,
    #[serde(default)]
    pub log: Vec<String>,
}

fn names(schema: &RelationSchema, set: AttributeSet) -> Vec<String> {
    schema.names(set).into_iter().map(String::from).collect()
}

impl DecompositionJson {
    pub fn from_decomposition(schema: &RelationSchema, method: &str, d: &Decomposition) -> Self {
        DecompositionJson {
            schema: schema.name().to_string(),
            method: method.to_string(),
            tables: d
                .tables
                .iter()
                .map(|t| TableJson {
                    name: t.name.clone(),
                    attributes: names(schema, t.attributes),
                    primary_key: names(schema, t.pk),
                    foreign_keys: t
                        .fks
                        .iter()
                        .map(|fk| ForeignKeyJson {
                            attributes: names(schema, fk.attributes),
                            references: fk.references.clone(),
                        })
                        .collect(),
                    provenance: t.provenance.to_string(),
                })
                .collect(),
            log: d.log.iter().map(|s| s.render(schema)).collect(),
        }
    }

    /// Resolve names against the schema. Tables come back with
    /// [`Provenance::Given`] and an empty log.
    pub fn into_decomposition(self, schema: &RelationSchema) -> Result<Decomposition, Error> {
        let mut tables = Vec::with_capacity(self.tables.len());
        for t in self.tables {
            let mut table = DecomposedTable::new(
                t.name,
                schema.set_of(&t.attributes)?,
                schema.set_of(&t.primary_key)?,
                Provenance::Given,
            );
            for fk in t.foreign_keys {
                table.fks.push(ForeignKey {
                    attributes: schema.set_of(&fk.attributes)?,
                    references: fk.references,
                });
            }
            tables.push(table);
        }
        Ok(Decomposition { tables, log: Vec::new() })
    }
}

#[derive(Serialize)]
pub struct InstanceCheck {
    pub seed: u64,
    pub trials: usize,
    pub passed: bool,
    pub first_failure: Option<usize>,
}

#[derive(Serialize)]
pub struct Verification {
    pub schema: String,
    pub lossless: bool,
    pub preserves_dependencies: bool,
    pub lost_dependencies: Vec<String>,
    pub instance_check: InstanceCheck,
}

#[derive(Serialize)]
pub struct Report {
    pub count: usize,
    pub mean: f64,
    pub stddev: f64,
    pub histogram: Vec<usize>,
}
