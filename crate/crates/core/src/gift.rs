//! Moodle GIFT export and a structural reader for the same subset.
//!
//! Dependency arrows inside answer texts are written as `→` and `↠` so
//! that ` -> ` only ever separates the two sides of a matching pair.

use crate::quiz::{AnswerKey, Question, QuestionKind, Quiz};

const SPECIAL: &[char] = &['~', '=', '#', '{', '}', ':'];

pub fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        if c == '\\' || SPECIAL.contains(&c) {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

fn arrows(text: &str) -> String {
    text.replace("->>", "↠").replace("->", "→")
}

/// Split 100 into `n` integer weights differing by at most one.
fn weights(n: usize) -> Vec<i32> {
    let base = 100 / n as i32;
    let extra = 100 % n as i32;
    (0..n as i32).map(|i| base + i32::from(i < extra)).collect()
}

fn answers(q: &Question) -> Vec<String> {
    match &q.key {
        AnswerKey::Mapping(rows) => q
            .options
            .iter()
            .map(|row| {
                let choice = rows
                    .get(&row.id)
                    .and_then(|c| q.choices.iter().find(|o| &o.id == c))
                    .map(|o| o.text.as_str())
                    .unwrap_or("");
                format!("={} -> {}", escape(&arrows(&row.text)), escape(choice))
            })
            .collect(),
        key => {
            let correct = |id: &String| match key {
                AnswerKey::Set(ids) => ids.contains(id),
                AnswerKey::Single(k) => k == id,
                AnswerKey::Mapping(_) => false,
            };
            let n_right = q.options.iter().filter(|o| correct(&o.id)).count();
            let n_wrong = q.options.len() - n_right;
            let weighted = q.kind == QuestionKind::Multiple && n_right > 1;
            let mut right_w = weights(n_right.max(1)).into_iter();
            let mut wrong_w = weights(n_wrong.max(1)).into_iter();
            q.options
                .iter()
                .map(|o| {
                    let text = escape(&arrows(&o.text));
                    match (correct(&o.id), weighted) {
                        (true, true) => format!("=%{}%{text}", right_w.next().unwrap_or(0)),
                        (false, true) => format!("~%-{}%{text}", wrong_w.next().unwrap_or(0)),
                        (true, false) => format!("={text}"),
                        (false, false) => format!("~{text}"),
                    }
                })
                .collect()
        }
    }
}

pub fn export_gift(quiz: &Quiz) -> String {
    quiz.questions
        .iter()
        .map(|q| {
            let title = escape(&format!("{} Q{}", quiz.schema_name, q.step));
            let stem = escape(&q.stem);
            let body = answers(q);
            if body.len() == 1 {
                format!("::{title}::{stem} {{{}}}\n", body[0])
            } else {
                let lines: String = body.iter().map(|a| format!("  {a}\n")).collect();
                format!("::{title}::{stem} {{\n{lines}}}\n")
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq)]
pub struct GiftAnswer {
    pub correct: bool,
    pub weight: Option<f64>,
    pub text: String,
    /// Right side of a matching pair.
    pub matched: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GiftQuestion {
    pub title: Option<String>,
    pub stem: String,
    pub answers: Vec<GiftAnswer>,
}

impl GiftQuestion {
    pub fn is_matching(&self) -> bool {
        !self.answers.is_empty() && self.answers.iter().all(|a| a.matched.is_some())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("GIFT line {line}: {message}")]
pub struct GiftError {
    pub line: usize,
    pub message: String,
}

/// Characters with an escape flag, so later passes can tell `\=` from `=`.
fn lex(text: &str) -> Vec<(char, bool, usize)> {
    let mut out = Vec::new();
    let mut line = 1;
    let mut chars = text.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            if let Some(next) = chars.next() {
                out.push((next, true, line));
                if next == '\n' {
                    line += 1;
                }
            }
            continue;
        }
        out.push((c, false, line));
        if c == '\n' {
            line += 1;
        }
    }
    out
}

fn text_of(chars: &[(char, bool, usize)]) -> String {
    chars.iter().map(|c| c.0).collect::<String>().trim().to_string()
}

fn parse_answer(chars: &[(char, bool, usize)], line: usize) -> Result<GiftAnswer, GiftError> {
    let err = |message: &str| GiftError {
        line,
        message: message.to_string(),
    };
    let (marker, rest) = chars.split_first().ok_or_else(|| err("empty answer"))?;
    let correct = marker.0 == '=';
    let mut rest = rest;
    let mut weight = None;
    if rest.first().map(|c| (c.0, c.1)) == Some(('%', false)) {
        let end = rest[1..]
            .iter()
            .position(|c| c.0 == '%' && !c.1)
            .ok_or_else(|| err("unterminated weight"))?;
        let w: String = rest[1..=end].iter().map(|c| c.0).collect();
        weight = Some(w.parse::<f64>().map_err(|_| err("weight is not a number"))?);
        rest = &rest[end + 2..];
    }
    if let Some(c) = rest.iter().find(|c| !c.1 && SPECIAL.contains(&c.0)) {
        return Err(err(&format!("unescaped `{}` in answer", c.0)));
    }
    let text = text_of(rest);
    let (text, matched) = match text.rsplit_once(" -> ") {
        Some((l, r)) => (l.trim().to_string(), Some(r.trim().to_string())),
        None => (text, None),
    };
    if text.is_empty() {
        return Err(err("empty answer text"));
    }
    Ok(GiftAnswer {
        correct,
        weight,
        text,
        matched,
    })
}

fn parse_question(chars: &[(char, bool, usize)]) -> Result<GiftQuestion, GiftError> {
    let line = chars.first().map(|c| c.2).unwrap_or(1);
    let err = |line: usize, message: &str| GiftError {
        line,
        message: message.to_string(),
    };
    let mut rest = chars;
    let mut title = None;
    if rest.len() >= 2 && rest[..2].iter().all(|c| c.0 == ':' && !c.1) {
        let end = rest[2..]
            .windows(2)
            .position(|w| w.iter().all(|c| c.0 == ':' && !c.1))
            .ok_or_else(|| err(line, "unterminated title"))?;
        title = Some(text_of(&rest[2..2 + end]));
        rest = &rest[end + 4..];
    }
    let open = rest
        .iter()
        .position(|c| c.0 == '{' && !c.1)
        .ok_or_else(|| err(line, "question has no answer block"))?;
    let close = rest
        .iter()
        .rposition(|c| c.0 == '}' && !c.1)
        .ok_or_else(|| err(line, "unterminated answer block"))?;
    if close < open {
        return Err(err(line, "unterminated answer block"));
    }
    let trailing = text_of(&rest[close + 1..]);
    if !trailing.is_empty() {
        return Err(err(rest[close].2, "text after the answer block"));
    }
    let stem_chars = &rest[..open];
    if let Some(c) = stem_chars.iter().find(|c| !c.1 && SPECIAL.contains(&c.0)) {
        return Err(err(c.2, &format!("unescaped `{}` in stem", c.0)));
    }
    let body = &rest[open + 1..close];
    if let Some(c) = body.iter().find(|c| !c.1 && (c.0 == '{' || c.0 == '}')) {
        return Err(err(c.2, "nested brace"));
    }
    let starts: Vec<usize> = (0..body.len())
        .filter(|&i| !body[i].1 && (body[i].0 == '=' || body[i].0 == '~'))
        .collect();
    if starts.is_empty() {
        return Err(err(line, "answer block has no answers"));
    }
    if !text_of(&body[..starts[0]]).is_empty() {
        return Err(err(body[0].2, "text before the first answer"));
    }
    let mut answers = Vec::new();
    for (i, &s) in starts.iter().enumerate() {
        let end = starts.get(i + 1).copied().unwrap_or(body.len());
        answers.push(parse_answer(&body[s..end], body[s].2)?);
    }
    let q = GiftQuestion {
        title,
        stem: text_of(stem_chars),
        answers,
    };
    check_weights(&q, line)?;
    Ok(q)
}

fn check_weights(q: &GiftQuestion, line: usize) -> Result<(), GiftError> {
    if q.is_matching() {
        if q.answers.iter().any(|a| !a.correct || a.weight.is_some()) {
            return Err(GiftError {
                line,
                message: "matching pairs must be `=left -> right`".to_string(),
            });
        }
        return Ok(());
    }
    if q.answers.iter().any(|a| a.matched.is_some()) {
        return Err(GiftError {
            line,
            message: "matching pair inside a choice question".to_string(),
        });
    }
    if q.answers.iter().any(|a| a.weight.is_some()) {
        let positive: f64 = q.answers.iter().filter_map(|a| a.weight).filter(|w| *w > 0.0).sum();
        if (positive - 100.0).abs() > 1e-6 {
            return Err(GiftError {
                line,
                message: format!("positive weights sum to {positive}, not 100"),
            });
        }
    } else if !q.answers.iter().any(|a| a.correct) {
        return Err(GiftError {
            line,
            message: "no correct answer".to_string(),
        });
    }
    Ok(())
}

/// Questions separated by blank lines, each `::title::stem { answers }`.
pub fn parse_gift(text: &str) -> Result<Vec<GiftQuestion>, GiftError> {
    let chars = lex(text);
    let mut questions = Vec::new();
    let mut start = 0;
    let mut depth = 0usize;
    let mut i = 0;
    while i <= chars.len() {
        let at_end = i == chars.len();
        let blank = !at_end
            && depth == 0
            && chars[i].0 == '\n'
            && !chars[i].1
            && chars[i + 1..].iter().take_while(|c| c.0 != '\n').all(|c| c.0.is_whitespace())
            && chars[i + 1..].iter().any(|c| c.0 == '\n');
        if at_end || blank {
            let block = &chars[start..i];
            if block.iter().any(|c| !c.0.is_whitespace()) {
                let first = block.iter().position(|c| !c.0.is_whitespace()).unwrap_or(0);
                questions.push(parse_question(&block[first..])?);
            }
            if at_end {
                break;
            }
            start = i + 1;
        } else if !chars[i].1 && chars[i].0 == '{' {
            depth += 1;
        } else if !chars[i].1 && chars[i].0 == '}' {
            depth = depth.checked_sub(1).ok_or_else(|| GiftError {
                line: chars[i].2,
                message: "unbalanced `}`".to_string(),
            })?;
        }
        i += 1;
    }
    if depth != 0 {
        return Err(GiftError {
            line: chars.last().map(|c| c.2).unwrap_or(1),
            message: "unbalanced `{`".to_string(),
        });
    }
    Ok(questions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse_schema;
    use crate::quiz::{generate_quiz, QuizOption};
    use std::collections::BTreeSet;

    #[test]
    fn escaping() {
        assert_eq!(escape("a = b"), "a \\= b");
        assert_eq!(escape("{x}:~#"), "\\{x\\}\\:\\~\\#");
    }

    #[test]
    fn degenerate_question_shape() {
        let quiz = Quiz {
            schema_name: "S".into(),
            seed: 0,
            questions: vec![Question {
                step: 1,
                kind: QuestionKind::Single,
                stem: "stem".into(),
                options: vec![QuizOption {
                    id: "a".into(),
                    text: "opt".into(),
                }],
                choices: vec![],
                key: AnswerKey::Single("a".into()),
            }],
        };
        assert_eq!(export_gift(&quiz), "::S Q1::stem {=opt}\n");
    }

    #[test]
    fn weights_sum_to_one_hundred() {
        for n in 1..10 {
            assert_eq!(weights(n).iter().sum::<i32>(), 100);
        }
        assert_eq!(weights(3), vec![34, 33, 33]);
    }

    #[test]
    fn export_reparses() {
        let s = parse_schema(
            "schema T\nattributes A, B, C, D\nfd A -> B\nfd B -> C\nfd A, D -> C\nmvd A ->> D\n",
        )
        .unwrap();
        for seed in 0..20 {
            let quiz = generate_quiz(&s, seed).unwrap();
            let gift = export_gift(&quiz);
            let parsed = parse_gift(&gift).unwrap();
            assert_eq!(parsed.len(), 7);
            assert!(parsed[2].is_matching() && parsed[5].is_matching());
            assert_eq!(parsed[2].answers.len(), 3);
            for (q, p) in quiz.questions.iter().zip(&parsed) {
                if !p.is_matching() {
                    assert_eq!(p.answers.len(), q.options.len());
                }
            }
        }
    }

    #[test]
    fn checker_rejects_malformed_input() {
        assert!(parse_gift("::T::stem {=a ~b").is_err());
        assert!(parse_gift("::T::a = b {=a}").is_err());
        assert!(parse_gift("::T::stem {~%50%a ~%-100%b}").is_err());
        assert!(parse_gift("::T::stem {~a ~b}").is_err());
        assert!(parse_gift("::T::stem {=a}\n\n::U::stem {=b\n~c}\n").is_ok());
    }

    #[test]
    fn escaped_stem_survives() {
        let parsed = parse_gift("::T::x \\= y {=a}").unwrap();
        assert_eq!(parsed[0].stem, "x = y");
        let ids: BTreeSet<_> = parsed[0].answers.iter().map(|a| a.text.clone()).collect();
        assert_eq!(ids, BTreeSet::from(["a".to_string()]));
    }
}
