use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use normkit::classify::classify_schema;
use normkit::cookbook::cookbook_normalize;
use normkit::diagram::{build_diagram, emit_dot, takeout_normalize};
use normkit::gift::export_gift;
use normkit::inference::{attribute_closure, candidate_keys};
use normkit::quiz::{
    generate_quiz, grade_with, parse_quiz_file, render_quiz, score_summary, ExactMatch, GradeReport, PartialCredit,
    ScoringPolicy, Submission,
};
use normkit::verify::{instance_join_check, is_lossless, preserves_dependencies};
use normkit::{Decomposition, RelationSchema};

use crate::json::{self, DecompositionJson};
use crate::{load_schema, print_warnings, read, write, Failure, Method};

fn to_json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialize");
    s.push('\n');
    s
}

fn names(schema: &RelationSchema, set: normkit::AttributeSet) -> Vec<String> {
    schema.names(set).into_iter().map(String::from).collect()
}

pub fn analyze(file: &Path, as_json: bool) -> Result<String, Failure> {
    let (schema, warnings) = load_schema(file)?;
    let fail = |e| Failure::from_error(file, e);
    let classification = classify_schema(&schema).map_err(fail)?;
    let keys = candidate_keys(&schema).map_err(fail)?;
    let pk = classification.primary_key;
    let (_, trace) = attribute_closure(pk, schema.fds());
    let trace = trace.render(&schema, schema.fds());

    if as_json {
        let fds = schema
            .fds()
            .iter()
            .zip(&classification.fd_labels)
            .map(|(fd, l)| json::Dependency {
                text: schema.render_fd(fd),
                lhs: names(&schema, fd.lhs()),
                rhs: names(&schema, fd.rhs()),
                label: l.token(),
            })
            .collect();
        let mvds = schema
            .mvds()
            .iter()
            .zip(&classification.mvd_labels)
            .map(|(m, l)| json::Dependency {
                text: schema.render_mvd(m),
                lhs: names(&schema, m.lhs()),
                rhs: names(&schema, m.rhs()),
                label: l.token(),
            })
            .collect();
        return Ok(to_json(&json::Analysis {
            schema: schema.name().to_string(),
            attributes: schema.attribute_names(),
            primary_key: names(&schema, pk),
            candidate_keys: keys.iter().map(|k| names(&schema, *k)).collect(),
            key_closure: trace,
            fds,
            mvds,
            normal_form: classification.normal_form.to_string(),
            warnings: warnings.iter().map(|w| w.message.clone()).collect(),
        }));
    }

    print_warnings(file, &warnings);
    let mut out = String::new();
    writeln!(out, "schema: {} ({})", schema.name(), schema.render_set(schema.all())).unwrap();
    writeln!(out, "primary key: {{{}}}", schema.render_set(pk)).unwrap();
    let keys: Vec<String> = keys.iter().map(|k| format!("{{{}}}", schema.render_set(*k))).collect();
    writeln!(out, "candidate keys: {}", keys.join(" ")).unwrap();
    writeln!(out, "closure of the primary key:").unwrap();
    for line in &trace {
        writeln!(out, "  {line}").unwrap();
    }
    writeln!(out, "dependencies:").unwrap();
    for (fd, label) in schema.fds().iter().zip(&classification.fd_labels) {
        writeln!(out, "  {}  violates: {label}", schema.render_fd(fd)).unwrap();
    }
    for (m, label) in schema.mvds().iter().zip(&classification.mvd_labels) {
        writeln!(out, "  {}  violates: {label}", schema.render_mvd(m)).unwrap();
    }
    writeln!(out, "normal form: {}", classification.normal_form).unwrap();
    Ok(out)
}

fn method_name(method: Method) -> &'static str {
    match method {
        Method::Diagram => "diagram",
        Method::Cookbook => "cookbook",
    }
}

fn normalize(file: &Path, schema: &RelationSchema, method: Method) -> Result<Decomposition, Failure> {
    let result = match method {
        Method::Diagram => takeout_normalize(schema).map(|(d, _)| d),
        Method::Cookbook => cookbook_normalize(schema),
    };
    result.map_err(|e| Failure::from_error(file, e))
}

pub fn decompose(file: &Path, method: Method, as_json: bool) -> Result<String, Failure> {
    let (schema, warnings) = load_schema(file)?;
    print_warnings(file, &warnings);
    let d = normalize(file, &schema, method)?;
    if as_json {
        return Ok(to_json(&DecompositionJson::from_decomposition(&schema, method_name(method), &d)));
    }
    let mut out = String::new();
    for t in &d.tables {
        writeln!(out, "{}  [{}]", d.render_table(&schema, t), t.provenance).unwrap();
    }
    if !d.log.is_empty() {
        writeln!(out, "\nsteps:").unwrap();
        for step in &d.log {
            writeln!(out, "  {}", step.render(&schema)).unwrap();
        }
    }
    Ok(out)
}

pub fn diagram(file: &Path, output: Option<&Path>) -> Result<String, Failure> {
    let (schema, warnings) = load_schema(file)?;
    print_warnings(file, &warnings);
    let diagram = build_diagram(&schema).map_err(|e| Failure::from_error(file, e))?;
    let dot = emit_dot(&diagram);
    match output {
        Some(path) => {
            write(path, &dot)?;
            Ok(String::new())
        }
        None => Ok(dot),
    }
}

pub fn verify(
    file: &Path,
    decomposition: Option<&Path>,
    method: Method,
    seed: u64,
    trials: usize,
    as_json: bool,
) -> Result<String, Failure> {
    let (schema, warnings) = load_schema(file)?;
    print_warnings(file, &warnings);
    let d = match decomposition {
        Some(path) => {
            let text = read(path)?;
            let parsed: DecompositionJson = serde_json::from_str(&text).map_err(|e| {
                Failure::Parse(format!(
                    "{}:{}:{}: error[json]: {e}",
                    path.display(),
                    e.line(),
                    e.column()
                ))
            })?;
            let d = parsed
                .into_decomposition(&schema)
                .map_err(|e| Failure::Parse(format!("{}: error: {e}", path.display())))?;
            d.validate(&schema).map_err(|e| Failure::from_error(path, e))?;
            d
        }
        None => normalize(file, &schema, method)?,
    };
    let fail = |e| Failure::from_error(file, e);
    let lossless = is_lossless(&schema, &d).map_err(fail)?;
    let preservation = preserves_dependencies(&schema, &d).map_err(fail)?;
    let check = instance_join_check(&schema, &d, seed, trials).map_err(fail)?;
    let lost: Vec<String> = preservation.lost.iter().map(|fd| schema.render_fd(fd)).collect();

    let out = if as_json {
        to_json(&json::Verification {
            schema: schema.name().to_string(),
            lossless,
            preserves_dependencies: preservation.preserved,
            lost_dependencies: lost.clone(),
            instance_check: json::InstanceCheck {
                seed,
                trials: check.trials,
                passed: check.passed(),
                first_failure: check.first_failure,
            },
        })
    } else {
        let mut out = String::new();
        writeln!(out, "lossless join: {}", if lossless { "yes" } else { "no" }).unwrap();
        writeln!(out, "dependencies preserved: {}", if preservation.preserved { "yes" } else { "no" }).unwrap();
        for fd in &lost {
            writeln!(out, "  lost: {fd}").unwrap();
        }
        match check.first_failure {
            None => writeln!(out, "instance check: passed {} trials (seed {seed})", check.trials).unwrap(),
            Some(i) => writeln!(out, "instance check: failed at trial {} of {} (seed {seed})", i + 1, check.trials).unwrap(),
        }
        out
    };
    if lossless && preservation.preserved && check.passed() {
        Ok(out)
    } else {
        // The report still goes to stdout so the details are not lost.
        print!("{out}");
        Err(Failure::Verification(format!("{}: verification failed", file.display())))
    }
}

pub fn quiz_gen(file: &Path, seed: u64, dir: &Path) -> Result<String, Failure> {
    let (schema, warnings) = load_schema(file)?;
    print_warnings(file, &warnings);
    let quiz = generate_quiz(&schema, seed).map_err(|e| Failure::from_error(file, e))?;
    fs::create_dir_all(dir).map_err(|e| Failure::Parse(format!("{}: error[io]: {e}", dir.display())))?;
    let files: [(PathBuf, String); 3] = [
        (dir.join("quiz.txt"), render_quiz(&quiz, &schema)),
        (dir.join("quiz.gift"), export_gift(&quiz)),
        (dir.join("key.txt"), quiz.key_submission().render()),
    ];
    let mut out = String::new();
    for (path, text) in &files {
        write(path, text)?;
        writeln!(out, "wrote {}", path.display()).unwrap();
    }
    Ok(out)
}

pub fn quiz_grade(quiz_file: &Path, answers: &Path, partial: bool, reveal: bool) -> Result<String, Failure> {
    let (quiz, _) = parse_quiz_file(&read(quiz_file)?).map_err(|e| Failure::from_error(quiz_file, e))?;
    let sub = Submission::parse(&read(answers)?).map_err(|e| Failure::from_error(answers, e))?;
    let policy: &dyn ScoringPolicy = if partial { &PartialCredit } else { &ExactMatch };
    let report = grade_with(&quiz, &sub, policy, reveal).map_err(|e| Failure::from_error(answers, e))?;
    Ok(report.render())
}

pub fn report(files: &[PathBuf], as_json: bool) -> Result<String, Failure> {
    let mut totals = Vec::with_capacity(files.len());
    for path in files {
        let total = GradeReport::parse_total(&read(path)?).map_err(|e| Failure::from_error(path, e))?;
        totals.push(total);
    }
    let summary = score_summary(&totals).map_err(|e| Failure::Usage(e.to_string()))?;
    if as_json {
        return Ok(to_json(&json::Report {
            count: summary.count,
            mean: summary.mean,
            stddev: summary.stddev,
            histogram: summary.histogram.to_vec(),
        }));
    }
    Ok(summary.to_string())
}
