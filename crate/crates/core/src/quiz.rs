//! The seven-step normalization question series: generation, grading,
//! text rendering and score statistics.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classify::{classify_schema, ViolationLabel};
use crate::diagram::takeout_normalize;
use crate::dsl::{parse_schema, render_schema};
use crate::error::Error;
use crate::inference::{candidate_keys, implies, mandatory_attributes};
use crate::model::{AttributeSet, FunctionalDependency, RelationSchema};

pub const STEPS: usize = 7;
const MAX_Q1_DISTRACTORS: usize = 3;
const MAX_Q7_DISTRACTORS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuestionKind {
    /// Any subset of the options.
    Multiple,
    /// Exactly one option.
    Single,
    /// Every row gets one of the choices.
    Matching,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuizOption {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnswerKey {
    Set(BTreeSet<String>),
    Single(String),
    /// Row id to choice id.
    Mapping(BTreeMap<String, String>),
}

impl AnswerKey {
    /// The key in submission syntax, without the `Q<k>:` prefix.
    pub fn render(&self) -> String {
        match self {
            AnswerKey::Set(ids) => ids.iter().cloned().collect::<Vec<_>>().join(","),
            AnswerKey::Single(id) => id.clone(),
            AnswerKey::Mapping(rows) => rows
                .iter()
                .map(|(r, c)| format!("{r}={c}"))
                .collect::<Vec<_>>()
                .join(", "),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Question {
    pub step: usize,
    pub kind: QuestionKind,
    pub stem: String,
    /// Options, or rows for matching questions.
    pub options: Vec<QuizOption>,
    /// Right-hand choices of a matching question; empty otherwise.
    pub choices: Vec<QuizOption>,
    pub key: AnswerKey,
}

impl Question {
    pub fn has_option(&self, id: &str) -> bool {
        self.options.iter().any(|o| o.id == id)
    }

    pub fn has_choice(&self, id: &str) -> bool {
        self.choices.iter().any(|o| o.id == id)
    }

    pub fn topic(&self) -> &'static str {
        topic(self.step)
    }
}

fn topic(step: usize) -> &'static str {
    match step {
        1 => "recognizing the dependencies",
        2 => "determining the primary key",
        3 => "violated normal forms",
        4 => "normal form of the table",
        5 => "decomposing the table",
        6 => "primary keys of the decomposed tables",
        7 => "foreign keys of the decomposed tables",
        _ => "unknown step",
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Quiz {
    pub schema_name: String,
    pub seed: u64,
    pub questions: Vec<Question>,
}

impl Quiz {
    pub fn question(&self, step: usize) -> Option<&Question> {
        self.questions.iter().find(|q| q.step == step)
    }

    /// The answer key as a submission that grades full marks.
    pub fn key_submission(&self) -> Submission {
        Submission {
            reference: Some(QuizRef {
                schema_name: self.schema_name.clone(),
                seed: self.seed,
            }),
            responses: self
                .questions
                .iter()
                .map(|q| {
                    let items = match &q.key {
                        AnswerKey::Set(ids) => ids.iter().cloned().collect(),
                        AnswerKey::Single(id) => vec![id.clone()],
                        AnswerKey::Mapping(rows) => rows.iter().map(|(r, c)| format!("{r}={c}")).collect(),
                    };
                    (q.step, items)
                })
                .collect(),
        }
    }
}

fn option_id(index: usize) -> String {
    let mut n = index;
    let mut id = Vec::new();
    loop {
        id.push(b'a' + (n % 26) as u8);
        if n < 26 {
            break;
        }
        n = n / 26 - 1;
    }
    id.reverse();
    String::from_utf8(id).expect("ascii letters")
}

/// Shuffle `(text, correct)` entries and assign ids in the new order.
fn lettered(entries: Vec<(String, bool)>, rng: &mut ChaCha8Rng, shuffle: bool) -> (Vec<QuizOption>, BTreeSet<String>) {
    let mut entries = entries;
    if shuffle {
        entries.shuffle(rng);
    }
    let mut key = BTreeSet::new();
    let options = entries
        .into_iter()
        .enumerate()
        .map(|(i, (text, correct))| {
            let id = option_id(i);
            if correct {
                key.insert(id.clone());
            }
            QuizOption { id, text }
        })
        .collect();
    (options, key)
}

fn heading(schema: &RelationSchema, attrs: AttributeSet, name: &str) -> String {
    format!("{name} ({})", schema.render_set(attrs))
}

fn fd_text(schema: &RelationSchema, lhs: AttributeSet, rhs: AttributeSet) -> String {
    format!("{} -> {}", schema.render_set(lhs), schema.render_set(rhs))
}

/// False dependencies in the styles of hand-written distractors: a merged
/// determinant of two true dependencies, a true dependency with one extra
/// attribute on the right, and a reversed dependency.
fn dependency_distractors(schema: &RelationSchema) -> Vec<(AttributeSet, AttributeSet)> {
    let fds = schema.fds();
    let all = schema.all();
    let mut out: Vec<(AttributeSet, AttributeSet)> = Vec::new();
    let mut push = |lhs: AttributeSet, rhs: AttributeSet| {
        if lhs.is_empty() || rhs.is_empty() || !lhs.is_disjoint(rhs) || out.contains(&(lhs, rhs)) {
            return;
        }
        let candidate = FunctionalDependency::new(lhs, rhs, usize::MAX).expect("nonempty, disjoint sides");
        if !implies(fds, &candidate) {
            out.push((lhs, rhs));
        }
    };
    for (i, f) in fds.iter().enumerate() {
        for g in &fds[i + 1..] {
            let lhs = f.lhs().union(g.lhs());
            let undetermined = all.difference(crate::inference::closure(lhs, fds));
            push(lhs, undetermined);
        }
    }
    for f in fds {
        let undetermined = all.difference(crate::inference::closure(f.lhs(), fds));
        if let Some(extra) = undetermined.first() {
            push(f.lhs(), f.rhs().with(extra));
        }
    }
    for f in fds {
        push(f.rhs(), f.lhs());
    }
    out
}

/// Build the question series for `schema`. All randomness comes from `seed`.
pub fn generate_quiz(schema: &RelationSchema, seed: u64) -> Result<Quiz, Error> {
    if schema.fds().is_empty() {
        return Err(Error::QuizUnsupported(
            "the schema declares no functional dependencies".to_string(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classification = classify_schema(schema)?;
    let pk = classification.primary_key;
    let keys = candidate_keys(schema)?;
    let (decomposition, _) = takeout_normalize(schema)?;
    let table = heading(schema, schema.all(), schema.name());
    let mut questions = Vec::with_capacity(STEPS);

    // 1: which dependencies exist
    let mut entries: Vec<(String, bool)> = schema
        .fds()
        .iter()
        .map(|fd| (schema.render_fd(fd), true))
        .chain(schema.mvds().iter().map(|m| (schema.render_mvd(m), true)))
        .collect();
    let mut seen = BTreeSet::new();
    entries.retain(|(text, _)| seen.insert(text.clone()));
    let mut distractors = dependency_distractors(schema);
    distractors.shuffle(&mut rng);
    distractors.truncate(MAX_Q1_DISTRACTORS);
    entries.extend(distractors.into_iter().map(|(l, r)| (fd_text(schema, l, r), false)));
    let (options, key) = lettered(entries, &mut rng, true);
    let what = if schema.mvds().is_empty() {
        "functional dependencies"
    } else {
        "functional and multivalued dependencies"
    };
    questions.push(Question {
        step: 1,
        kind: QuestionKind::Multiple,
        stem: format!("Which {what} do exist in the following table? {table}"),
        options,
        choices: Vec::new(),
        key: AnswerKey::Set(key),
    });

    // 2: primary key
    let mut sets: Vec<AttributeSet> = vec![pk];
    let candidates = schema
        .fds()
        .iter()
        .map(|fd| fd.lhs())
        .chain(mandatory_attributes(schema).iter().map(AttributeSet::singleton))
        .chain(std::iter::once(schema.all()));
    for set in candidates {
        if !keys.contains(&set) && !sets.contains(&set) {
            sets.push(set);
        }
    }
    let entries = sets.iter().map(|&s| (schema.render_set(s), s == pk)).collect();
    let (options, key) = lettered(entries, &mut rng, true);
    questions.push(Question {
        step: 2,
        kind: QuestionKind::Single,
        stem: format!(
            "What is the primary key in the following table beside the functional dependencies selected in the previous question? {table}"
        ),
        options,
        choices: Vec::new(),
        key: AnswerKey::Single(key.into_iter().next().expect("the primary key is an option")),
    });

    // 3: violated normal form per dependency
    let mut rows: Vec<QuizOption> = Vec::new();
    let mut mapping = BTreeMap::new();
    for (fd, label) in schema.fds().iter().zip(&classification.fd_labels) {
        let text = schema.render_fd(fd);
        if rows.iter().any(|r| r.text == text) {
            continue;
        }
        let id = option_id(rows.len());
        mapping.insert(id.clone(), label.token().to_string());
        rows.push(QuizOption { id, text });
    }
    let choices: Vec<QuizOption> = [ViolationLabel::None, ViolationLabel::Nf2, ViolationLabel::Nf3, ViolationLabel::Bcnf]
        .into_iter()
        .map(|l| QuizOption {
            id: l.token().to_string(),
            text: l.to_string(),
        })
        .collect();
    questions.push(Question {
        step: 3,
        kind: QuestionKind::Matching,
        stem: format!("Which normal form is violated by the functional dependencies existing in the following table? {table}"),
        options: rows,
        choices,
        key: AnswerKey::Mapping(mapping),
    });

    // 4: normal form of the table
    let forms = ["non first NF", "1st NF", "2nd NF", "3rd NF", "BCNF", "4th NF"];
    let actual = classification.normal_form.to_string();
    let entries = forms.iter().map(|f| (f.to_string(), *f == actual)).collect();
    let (options, key) = lettered(entries, &mut rng, false);
    questions.push(Question {
        step: 4,
        kind: QuestionKind::Single,
        stem: format!(
            "In which normal form is the following table beside the primary key determined in the second question and the functional dependencies selected in the first question? {table}"
        ),
        options,
        choices: Vec::new(),
        key: AnswerKey::Single(key.into_iter().next().expect("every normal form is listed")),
    });

    // 5: decomposed tables, with distractors missing one foreign-key column
    let mut entries: Vec<(String, bool)> = Vec::new();
    let mut seen: BTreeSet<(String, AttributeSet)> = BTreeSet::new();
    for t in &decomposition.tables {
        seen.insert((t.name.clone(), t.attributes));
        entries.push((heading(schema, t.attributes, &t.name), true));
    }
    for t in &decomposition.tables {
        for a in t.fk_attributes() {
            let attrs = t.attributes.without(a);
            if seen.insert((t.name.clone(), attrs)) {
                entries.push((heading(schema, attrs, &t.name), false));
            }
        }
    }
    let (options, key) = lettered(entries, &mut rng, true);
    questions.push(Question {
        step: 5,
        kind: QuestionKind::Multiple,
        stem: format!("Onto which tables can you decompose the following table? {table}"),
        options,
        choices: Vec::new(),
        key: AnswerKey::Set(key),
    });

    // 6: primary key of every decomposed table
    let rows: Vec<QuizOption> = decomposition
        .tables
        .iter()
        .enumerate()
        .map(|(i, t)| QuizOption {
            id: option_id(i),
            text: t.name.clone(),
        })
        .collect();
    let mut pk_texts: Vec<String> = Vec::new();
    for t in &decomposition.tables {
        let text = schema.render_set(t.pk);
        if !pk_texts.contains(&text) {
            pk_texts.push(text);
        }
    }
    pk_texts.shuffle(&mut rng);
    let choices: Vec<QuizOption> = pk_texts
        .iter()
        .enumerate()
        .map(|(i, text)| QuizOption {
            id: (i + 1).to_string(),
            text: text.clone(),
        })
        .collect();
    let mapping = decomposition
        .tables
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let text = schema.render_set(t.pk);
            let choice = choices.iter().find(|c| c.text == text).expect("every pk is a choice");
            (option_id(i), choice.id.clone())
        })
        .collect();
    questions.push(Question {
        step: 6,
        kind: QuestionKind::Matching,
        stem: "After decomposition what will be the primary keys in the tables?".to_string(),
        options: rows,
        choices,
        key: AnswerKey::Mapping(mapping),
    });

    // 7: foreign-key columns
    let fk_attrs = decomposition
        .tables
        .iter()
        .fold(AttributeSet::empty(), |acc, t| acc.union(t.fk_attributes()));
    let mut others: Vec<usize> = schema.all().difference(fk_attrs).iter().collect();
    others.shuffle(&mut rng);
    others.truncate(MAX_Q7_DISTRACTORS);
    let mut entries: Vec<(String, bool)> = fk_attrs
        .iter()
        .map(|a| (schema.attribute_name(a).to_string(), true))
        .chain(others.into_iter().map(|a| (schema.attribute_name(a).to_string(), false)))
        .collect();
    if fk_attrs.is_empty() {
        entries.push(("none".to_string(), true));
    }
    let (options, key) = lettered(entries, &mut rng, true);
    questions.push(Question {
        step: 7,
        kind: QuestionKind::Multiple,
        stem: "After decomposition which columns do also appear as foreign key in the tables?".to_string(),
        options,
        choices: Vec::new(),
        key: AnswerKey::Set(key),
    });

    Ok(Quiz {
        schema_name: schema.name().to_string(),
        seed,
        questions,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuizRef {
    pub schema_name: String,
    pub seed: u64,
}

/// Raw answers: per step, the selected ids, or `row=choice` pairs for
/// matching questions.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Submission {
    pub reference: Option<QuizRef>,
    pub responses: BTreeMap<usize, Vec<String>>,
}

impl Submission {
    /// Parse `Q<k>: a,b` lines (and `Q3: a=2NF, b=3NF` for matching).
    /// Optional `quiz:` and `seed:` lines name the quiz; blank lines and
    /// `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self, Error> {
        let mut sub = Submission::default();
        let mut name = None;
        let mut seed = None;
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || Error::InvalidArgument(format!("line {}: expected `Q<k>: <ids>`, found `{line}`", n + 1));
            let (head, rest) = line.split_once(':').ok_or_else(bad)?;
            let head = head.trim();
            let rest = rest.trim();
            if head == "quiz" {
                name = Some(rest.to_string());
            } else if head == "seed" {
                seed = Some(rest.parse::<u64>().map_err(|_| bad())?);
            } else {
                let step: usize = head
                    .strip_prefix('Q')
                    .and_then(|k| k.parse().ok())
                    .ok_or_else(bad)?;
                let items = rest
                    .split(',')
                    .map(|s| s.split_whitespace().collect::<String>())
                    .filter(|s| !s.is_empty())
                    .collect();
                if sub.responses.insert(step, items).is_some() {
                    return Err(Error::InvalidArgument(format!("line {}: Q{step} answered twice", n + 1)));
                }
            }
        }
        sub.reference = match (name, seed) {
            (Some(schema_name), Some(seed)) => Some(QuizRef { schema_name, seed }),
            (None, None) => None,
            _ => return Err(Error::InvalidArgument("`quiz:` and `seed:` must be given together".to_string())),
        };
        Ok(sub)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        if let Some(r) = &self.reference {
            out.push_str(&format!("quiz: {}\nseed: {}\n", r.schema_name, r.seed));
        }
        for (step, items) in &self.responses {
            out.push_str(&format!("Q{step}: {}\n", items.join(", ")));
        }
        out
    }
}

/// How one answered question is scored. The default is exact match.
pub trait ScoringPolicy {
    fn score(&self, question: &Question, response: &Response) -> f64;
}

/// A validated answer to one question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Response {
    Unanswered,
    Set(BTreeSet<String>),
    Mapping(BTreeMap<String, String>),
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ExactMatch;

impl ScoringPolicy for ExactMatch {
    fn score(&self, question: &Question, response: &Response) -> f64 {
        let correct = match (&question.key, response) {
            (AnswerKey::Set(key), Response::Set(sel)) => key == sel,
            (AnswerKey::Single(key), Response::Set(sel)) => sel.len() == 1 && sel.contains(key),
            (AnswerKey::Mapping(key), Response::Mapping(sel)) => key == sel,
            _ => false,
        };
        if correct {
            1.0
        } else {
            0.0
        }
    }
}

/// Fractional credit: overlap of selected and correct options, or the
/// share of correctly matched rows.
#[derive(Debug, Clone, Copy, Default)]
pub struct PartialCredit;

impl ScoringPolicy for PartialCredit {
    fn score(&self, question: &Question, response: &Response) -> f64 {
        match (&question.key, response) {
            (AnswerKey::Set(key), Response::Set(sel)) => {
                let union = key.union(sel).count();
                key.intersection(sel).count() as f64 / union as f64
            }
            (AnswerKey::Mapping(key), Response::Mapping(sel)) => {
                key.iter().filter(|(r, c)| sel.get(*r) == Some(c)).count() as f64 / key.len() as f64
            }
            _ => ExactMatch.score(question, response),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradeReport {
    pub reference: QuizRef,
    pub scores: Vec<f64>,
    pub feedback: Vec<String>,
    pub total: f64,
}

impl GradeReport {
    pub fn max(&self) -> usize {
        self.scores.len()
    }

    /// Stable line-based text: `quiz:`, `seed:`, one `Q<k>:` line per
    /// question and a final `total: x/7`.
    pub fn render(&self) -> String {
        let mut out = format!("quiz: {}\nseed: {}\n", self.reference.schema_name, self.reference.seed);
        for (i, (score, feedback)) in self.scores.iter().zip(&self.feedback).enumerate() {
            out.push_str(&format!("Q{}: {score} {feedback}\n", i + 1));
        }
        out.push_str(&format!("total: {}/{}\n", self.total, self.max()));
        out
    }

    /// Read back the total of a rendered report.
    pub fn parse_total(text: &str) -> Result<f64, Error> {
        text.lines()
            .filter_map(|l| l.trim().strip_prefix("total:"))
            .next_back()
            .and_then(|t| t.trim().split('/').next()?.trim().parse().ok())
            .ok_or_else(|| Error::InvalidArgument("grade report has no `total: x/y` line".to_string()))
    }
}

fn validate(quiz: &Quiz, sub: &Submission) -> Result<BTreeMap<usize, Response>, Error> {
    if let Some(r) = &sub.reference {
        if r.schema_name != quiz.schema_name || r.seed != quiz.seed {
            return Err(Error::QuizMismatch(format!(
                "submission answers quiz `{}` seed {}, this is `{}` seed {}",
                r.schema_name, r.seed, quiz.schema_name, quiz.seed
            )));
        }
    }
    let mut out = BTreeMap::new();
    for (&step, items) in &sub.responses {
        let question = quiz
            .question(step)
            .ok_or_else(|| Error::QuizMismatch(format!("the quiz has no question Q{step}")))?;
        let unknown = |id: &str| Error::UnknownOption {
            question: step,
            id: id.to_string(),
        };
        let response = if items.is_empty() {
            Response::Unanswered
        } else if question.kind == QuestionKind::Matching {
            let mut rows = BTreeMap::new();
            for item in items {
                let (row, choice) = item.split_once('=').ok_or_else(|| unknown(item))?;
                if !question.has_option(row) {
                    return Err(unknown(row));
                }
                if !question.has_choice(choice) {
                    return Err(unknown(choice));
                }
                rows.insert(row.to_string(), choice.to_string());
            }
            Response::Mapping(rows)
        } else {
            let mut ids = BTreeSet::new();
            for item in items {
                if !question.has_option(item) {
                    return Err(unknown(item));
                }
                ids.insert(item.clone());
            }
            Response::Set(ids)
        };
        out.insert(step, response);
    }
    Ok(out)
}

pub fn grade_submission(quiz: &Quiz, sub: &Submission) -> Result<GradeReport, Error> {
    grade_with(quiz, sub, &ExactMatch, false)
}

/// Grade under `policy`. With `reveal`, feedback on a wrong answer also
/// states the expected answer.
pub fn grade_with(quiz: &Quiz, sub: &Submission, policy: &dyn ScoringPolicy, reveal: bool) -> Result<GradeReport, Error> {
    let responses = validate(quiz, sub)?;
    let mut scores = Vec::with_capacity(quiz.questions.len());
    let mut feedback = Vec::with_capacity(quiz.questions.len());
    for q in &quiz.questions {
        let response = responses.get(&q.step).unwrap_or(&Response::Unanswered);
        let score = match response {
            Response::Unanswered => 0.0,
            r => policy.score(q, r),
        };
        let mut text = if score >= 1.0 {
            format!("correct ({})", q.topic())
        } else if *response == Response::Unanswered {
            format!("unanswered; review {}", q.topic())
        } else {
            format!("incorrect; review {}", q.topic())
        };
        if reveal && score < 1.0 {
            text.push_str(&format!("; expected {}", q.key.render()));
        }
        scores.push(score);
        feedback.push(text);
    }
    Ok(GradeReport {
        reference: QuizRef {
            schema_name: quiz.schema_name.clone(),
            seed: quiz.seed,
        },
        total: scores.iter().sum(),
        scores,
        feedback,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSummary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; zero for a single report.
    pub stddev: f64,
    /// Count of totals per whole score 0 through 7.
    pub histogram: [usize; STEPS + 1],
}

impl fmt::Display for ScoreSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "reports: {}", self.count)?;
        writeln!(f, "mean: {:.4}", self.mean)?;
        writeln!(f, "stddev: {:.4}", self.stddev)?;
        for (score, n) in self.histogram.iter().enumerate() {
            writeln!(f, "{score}: {n}")?;
        }
        Ok(())
    }
}

pub fn score_summary(totals: &[f64]) -> Result<ScoreSummary, Error> {
    if totals.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = totals.len() as f64;
    let mean = totals.iter().sum::<f64>() / n;
    let stddev = if totals.len() > 1 {
        (totals.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    let mut histogram = [0; STEPS + 1];
    for t in totals {
        histogram[(t.floor().max(0.0) as usize).min(STEPS)] += 1;
    }
    Ok(ScoreSummary {
        count: totals.len(),
        mean,
        stddev,
        histogram,
    })
}

pub fn score_report(reports: &[GradeReport]) -> Result<ScoreSummary, Error> {
    score_summary(&reports.iter().map(|r| r.total).collect::<Vec<_>>())
}

/// Plain-text quiz. The schema and seed are embedded at the end so the
/// quiz can be regenerated for grading.
pub fn render_quiz(quiz: &Quiz, schema: &RelationSchema) -> String {
    let mut out = format!("quiz: {}\nseed: {}\n", quiz.schema_name, quiz.seed);
    for q in &quiz.questions {
        let kind = match q.kind {
            QuestionKind::Multiple => "select all that apply",
            QuestionKind::Single => "select one",
            QuestionKind::Matching => "match every row",
        };
        out.push_str(&format!("\nQ{} ({kind}). {}\n", q.step, q.stem));
        for o in &q.options {
            out.push_str(&format!("  {}) {}\n", o.id, o.text));
        }
        for c in &q.choices {
            out.push_str(&format!("  [{}] {}\n", c.id, c.text));
        }
    }
    out.push_str("\nschema:\n");
    for line in render_schema(schema).lines() {
        out.push_str(&format!("| {line}\n"));
    }
    out
}

/// Regenerate the quiz described by a rendered quiz file, checking that
/// the file was not altered.
pub fn parse_quiz_file(text: &str) -> Result<(Quiz, RelationSchema), Error> {
    let seed = text
        .lines()
        .find_map(|l| l.strip_prefix("seed:"))
        .and_then(|s| s.trim().parse::<u64>().ok())
        .ok_or_else(|| Error::QuizMismatch("quiz file has no `seed:` line".to_string()))?;
    let source: String = text
        .lines()
        .skip_while(|l| *l != "schema:")
        .skip(1)
        .filter_map(|l| l.strip_prefix("| ").or_else(|| (l == "|").then_some("")))
        .map(|l| format!("{l}\n"))
        .collect();
    if source.is_empty() {
        return Err(Error::QuizMismatch("quiz file embeds no schema".to_string()));
    }
    let schema = parse_schema(&source)?;
    let quiz = generate_quiz(&schema, seed)?;
    if render_quiz(&quiz, &schema) != text {
        return Err(Error::QuizMismatch(
            "quiz file differs from the quiz its schema and seed generate".to_string(),
        ));
    }
    Ok((quiz, schema))
}

#[cfg(test)]
mod tests {
    use super::*;

    const RENT: &str = "\
schema Rent_a_car
attributes RegisteredNumber, CarType, ManufacturerID, ManufacturerName, RenterID, RenterName, RenterAddress, Date, Time
fd RenterID -> RenterName, RenterAddress
fd RegisteredNumber -> CarType, ManufacturerID, ManufacturerName
fd ManufacturerID -> ManufacturerName
fd RegisteredNumber, Date -> Time, RenterID, RenterName, RenterAddress
";

    fn key_texts(q: &Question) -> BTreeSet<String> {
        match &q.key {
            AnswerKey::Set(ids) => q.options.iter().filter(|o| ids.contains(&o.id)).map(|o| o.text.clone()).collect(),
            AnswerKey::Single(id) => q.options.iter().filter(|o| &o.id == id).map(|o| o.text.clone()).collect(),
            AnswerKey::Mapping(_) => BTreeSet::new(),
        }
    }

    #[test]
    fn option_ids() {
        assert_eq!(option_id(0), "a");
        assert_eq!(option_id(25), "z");
        assert_eq!(option_id(26), "aa");
        assert_eq!(option_id(27), "ab");
    }

    #[test]
    fn rent_a_car_keys() {
        let s = parse_schema(RENT).unwrap();
        let quiz = generate_quiz(&s, 42).unwrap();
        assert_eq!(quiz.questions.len(), 7);
        let q1: BTreeSet<String> = s.fds().iter().map(|fd| s.render_fd(fd)).collect();
        assert_eq!(key_texts(quiz.question(1).unwrap()), q1);
        assert_eq!(key_texts(quiz.question(2).unwrap()), BTreeSet::from(["RegisteredNumber, Date".to_string()]));
        assert_eq!(key_texts(quiz.question(4).unwrap()), BTreeSet::from(["1st NF".to_string()]));
        assert_eq!(
            key_texts(quiz.question(7).unwrap()),
            BTreeSet::from(["RegisteredNumber".to_string(), "RenterID".to_string(), "ManufacturerID".to_string()])
        );
        assert_eq!(key_texts(quiz.question(5).unwrap()).len(), 4);
    }

    #[test]
    fn key_grades_full_and_empty_grades_zero() {
        let s = parse_schema(RENT).unwrap();
        let quiz = generate_quiz(&s, 3).unwrap();
        assert_eq!(grade_submission(&quiz, &quiz.key_submission()).unwrap().total, 7.0);
        assert_eq!(grade_submission(&quiz, &Submission::default()).unwrap().total, 0.0);
    }

    #[test]
    fn one_wrong_row_costs_one_point() {
        let s = parse_schema(RENT).unwrap();
        let quiz = generate_quiz(&s, 5).unwrap();
        let mut sub = quiz.key_submission();
        let row = &mut sub.responses.get_mut(&3).unwrap()[0];
        *row = if row.ends_with("=BCNF") { "a=none".into() } else { "a=BCNF".into() };
        assert_eq!(grade_submission(&quiz, &sub).unwrap().total, 6.0);
    }

    #[test]
    fn submission_text_round_trips() {
        let s = parse_schema(RENT).unwrap();
        let quiz = generate_quiz(&s, 9).unwrap();
        let sub = quiz.key_submission();
        assert_eq!(Submission::parse(&sub.render()).unwrap(), sub);
    }

    #[test]
    fn unknown_option_and_mismatch() {
        let s = parse_schema(RENT).unwrap();
        let quiz = generate_quiz(&s, 1).unwrap();
        let sub = Submission::parse("Q1: zz\n").unwrap();
        assert!(matches!(grade_submission(&quiz, &sub), Err(Error::UnknownOption { question: 1, .. })));
        let sub = Submission::parse("quiz: Rent_a_car\nseed: 2\nQ1: a\n").unwrap();
        assert!(matches!(grade_submission(&quiz, &sub), Err(Error::QuizMismatch(_))));
        let sub = Submission::parse("Q9: a\n").unwrap();
        assert!(matches!(grade_submission(&quiz, &sub), Err(Error::QuizMismatch(_))));
    }

    #[test]
    fn degenerate_schema() {
        let s = parse_schema("schema S\nattributes A, B\nfd A -> B\n").unwrap();
        let quiz = generate_quiz(&s, 0).unwrap();
        assert_eq!(quiz.questions.len(), 7);
        assert_eq!(quiz.question(3).unwrap().options.len(), 1);
        assert_eq!(grade_submission(&quiz, &quiz.key_submission()).unwrap().total, 7.0);
    }

    #[test]
    fn no_dependencies_is_unsupported() {
        let s = parse_schema("schema S\nattributes A, B\n").unwrap();
        assert!(matches!(generate_quiz(&s, 0), Err(Error::QuizUnsupported(_))));
    }

    #[test]
    fn statistics() {
        let s = score_summary(&[7.0, 7.0]).unwrap();
        assert_eq!((s.mean, s.stddev), (7.0, 0.0));
        assert_eq!(s.histogram[7], 2);
        let s = score_summary(&[4.0, 6.0]).unwrap();
        assert_eq!(s.mean, 5.0);
        assert!((s.stddev - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(score_summary(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn quiz_file_round_trips_and_detects_edits() {
        let s = parse_schema(RENT).unwrap();
        let quiz = generate_quiz(&s, 42).unwrap();
        let text = render_quiz(&quiz, &s);
        let (again, _) = parse_quiz_file(&text).unwrap();
        assert_eq!(again, quiz);
        let edited = text.replacen("seed: 42", "seed: 43", 1);
        assert!(matches!(parse_quiz_file(&edited), Err(Error::QuizMismatch(_))));
    }

    #[test]
    fn partial_credit_hook() {
        let s = parse_schema(RENT).unwrap();
        let quiz = generate_quiz(&s, 42).unwrap();
        let mut sub = quiz.key_submission();
        sub.responses.get_mut(&7).unwrap().pop();
        let exact = grade_submission(&quiz, &sub).unwrap();
        let partial = grade_with(&quiz, &sub, &PartialCredit, true).unwrap();
        assert_eq!(exact.total, 6.0);
        assert!(partial.total > 6.0 && partial.total < 7.0);
        assert!(partial.feedback[6].contains("expected"));
        assert!(!exact.feedback[6].contains("expected"));
    }

    #[test]
    fn report_total_parses() {
        let s = parse_schema(RENT).unwrap();
        let quiz = generate_quiz(&s, 0).unwrap();
        let report = grade_submission(&quiz, &quiz.key_submission()).unwrap();
        assert!(report.render().ends_with("total: 7/7\n"));
        assert_eq!(GradeReport::parse_total(&report.render()).unwrap(), 7.0);
    }
}
