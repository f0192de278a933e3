//! Line-oriented text formats for instances, event streams and results.
//!
//! Instance documents look like
//!
//! ```text
//! lbdd 1
//! 2 3 overload_allowed
//! center 0 cap 1 penalty constant 10
//! center 1 cap 1 penalty linear 5 2
//! demand 0 costs 1 5
//! demand 1 costs 2 4
//! demand 2 costs 6 3
//! ```
//!
//! Penalties are `constant v`, `linear base step`, `table v1 v2 ...` or
//! `infinite`. Blank lines and `#` comments are ignored everywhere.

use std::fmt::Write as _;

use thiserror::Error;

use crate::allotment::Allotment;
use crate::dynamic::{CapacityDelta, ShiftDirection};
use crate::instance::{
    validate_instance, CenterId, CenterPenalty, DemandId, ExtCost, InstanceError, Mode,
    PenaltySpec, ProblemInstance, RawCenter, RawInstance, RawPenalty,
};

pub const FORMAT_HEADER: &str = "lbdd 1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid instance: {0}")]
    Invalid(#[from] InstanceError),
}

fn parse_err(line: usize, message: impl Into<String>) -> IoError {
    IoError::Parse {
        line,
        message: message.into(),
    }
}

/// Non-empty lines with comments stripped, paired with 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = body.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

fn number<T: std::str::FromStr>(line: usize, token: &str, what: &str) -> Result<T, IoError> {
    token
        .parse()
        .map_err(|_| parse_err(line, format!("expected {what}, found `{token}`")))
}

fn expect_word(line: usize, tokens: &[&str], at: usize, word: &str) -> Result<(), IoError> {
    match tokens.get(at) {
        Some(t) if *t == word => Ok(()),
        Some(t) => Err(parse_err(line, format!("expected `{word}`, found `{t}`"))),
        None => Err(parse_err(line, format!("expected `{word}`"))),
    }
}

fn parse_mode(line: usize, token: &str) -> Result<Mode, IoError> {
    match token {
        "overload_allowed" => Ok(Mode::OverloadAllowed),
        "hard_capacity" => Ok(Mode::HardCapacity),
        other => Err(parse_err(line, format!("unknown mode `{other}`"))),
    }
}

fn parse_penalty(line: usize, tokens: &[&str]) -> Result<RawPenalty, IoError> {
    let values = |from: usize| -> Result<Vec<i64>, IoError> {
        tokens[from..]
            .iter()
            .map(|t| number(line, t, "a penalty value"))
            .collect()
    };
    let arity = |want: usize| {
        if tokens.len() == want + 1 {
            Ok(())
        } else {
            Err(parse_err(
                line,
                format!("penalty `{}` takes {want} value(s)", tokens[0]),
            ))
        }
    };
    match tokens.first() {
        Some(&"constant") => {
            arity(1)?;
            Ok(RawPenalty::Spec(PenaltySpec::Constant(values(1)?[0])))
        }
        Some(&"linear") => {
            arity(2)?;
            let v = values(1)?;
            Ok(RawPenalty::Spec(PenaltySpec::Linear {
                base: v[0],
                step: v[1],
            }))
        }
        Some(&"table") => {
            if tokens.len() < 2 {
                return Err(parse_err(line, "penalty table needs at least one value"));
            }
            Ok(RawPenalty::Spec(PenaltySpec::Table(values(1)?)))
        }
        Some(&"infinite") => {
            arity(0)?;
            Ok(RawPenalty::Infinite)
        }
        Some(other) => Err(parse_err(line, format!("unknown penalty kind `{other}`"))),
        None => Err(parse_err(line, "missing penalty kind")),
    }
}

pub fn parse_instance(text: &str) -> Result<ProblemInstance, IoError> {
    let mut lines = content_lines(text);
    let last_line = text.lines().count().max(1);

    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "empty document"))?;
    if header.join(" ") != FORMAT_HEADER {
        return Err(parse_err(
            line,
            format!("expected header `{FORMAT_HEADER}`"),
        ));
    }
    let (line, dims) = lines
        .next()
        .ok_or_else(|| parse_err(last_line, "missing `k n mode` line"))?;
    if dims.len() != 3 {
        return Err(parse_err(line, "expected `k n mode`"));
    }
    let k: usize = number(line, dims[0], "a center count")?;
    let n: usize = number(line, dims[1], "a demand count")?;
    let mode = parse_mode(line, dims[2])?;

    let mut centers = Vec::with_capacity(k);
    for _ in 0..k {
        let (line, t) = lines
            .next()
            .ok_or_else(|| parse_err(last_line, format!("expected {k} center lines")))?;
        expect_word(line, &t, 0, "center")?;
        if t.len() < 6 {
            return Err(parse_err(
                line,
                "expected `center <id> cap <c> penalty <kind> ...`",
            ));
        }
        expect_word(line, &t, 2, "cap")?;
        expect_word(line, &t, 4, "penalty")?;
        centers.push(RawCenter {
            id: number(line, t[1], "a center id")?,
            capacity: number(line, t[3], "a capacity")?,
            penalty: parse_penalty(line, &t[5..])?,
        });
    }

    let mut rows: Vec<Option<Vec<i64>>> = vec![None; n];
    for _ in 0..n {
        let (line, t) = lines
            .next()
            .ok_or_else(|| parse_err(last_line, format!("expected {n} demand lines")))?;
        expect_word(line, &t, 0, "demand")?;
        expect_word(line, &t, 2, "costs")?;
        let id: usize = number(line, t[1], "a demand id")?;
        if id >= n {
            return Err(parse_err(
                line,
                format!("demand {id} is out of range for {n} demands"),
            ));
        }
        if rows[id].is_some() {
            return Err(parse_err(
                line,
                format!("demand {id} appears more than once"),
            ));
        }
        let costs: Vec<i64> = t[3..]
            .iter()
            .map(|c| number(line, c, "an integer cost"))
            .collect::<Result<_, _>>()?;
        if costs.len() != k {
            return Err(parse_err(
                line,
                format!("demand {id} has {} costs, expected {k}", costs.len()),
            ));
        }
        if let Some(c) = costs.iter().position(|&c| c < 1) {
            return Err(parse_err(
                line,
                format!("demand {id} has a non-positive cost at center {c}"),
            ));
        }
        rows[id] = Some(costs);
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, "unexpected content after the last demand"));
    }

    let instance = validate_instance(RawInstance {
        centers,
        costs: rows.into_iter().map(|r| r.expect("all ids seen")).collect(),
        mode,
    })?;
    Ok(instance)
}

/// Renders an instance in the text format.
///
/// # Panics
///
/// On centers with a free overload penalty or a nonzero shift; neither has
/// a text form.
pub fn render_instance(instance: &ProblemInstance) -> String {
    let mut out = String::new();
    writeln!(out, "{FORMAT_HEADER}").unwrap();
    writeln!(
        out,
        "{} {} {}",
        instance.center_count(),
        instance.demand_count(),
        instance.mode.as_str()
    )
    .unwrap();
    for c in &instance.centers {
        assert_eq!(c.shift, 0, "shifted penalties have no text form");
        let penalty = match &c.penalty {
            CenterPenalty::Schedule(PenaltySpec::Constant(v)) => format!("constant {v}"),
            CenterPenalty::Schedule(PenaltySpec::Linear { base, step }) => {
                format!("linear {base} {step}")
            }
            CenterPenalty::Schedule(PenaltySpec::Table(values)) => {
                let v: Vec<String> = values.iter().map(i64::to_string).collect();
                format!("table {}", v.join(" "))
            }
            CenterPenalty::Infinite => "infinite".to_string(),
            CenterPenalty::Zero => panic!("free overload centers have no text form"),
        };
        writeln!(out, "center {} cap {} penalty {penalty}", c.id, c.capacity).unwrap();
    }
    for d in 0..instance.demand_count() {
        let costs: Vec<String> = instance.cost.row(d).iter().map(i64::to_string).collect();
        writeln!(out, "demand {d} costs {}", costs.join(" ")).unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Insert(Vec<i64>),
    Remove(DemandId),
    Capacity(CenterId, CapacityDelta),
    Shift(CenterId, ShiftDirection),
}

/// Parses an event stream, returning each event with its line number.
pub fn parse_events(text: &str) -> Result<Vec<(usize, Event)>, IoError> {
    content_lines(text)
        .map(|(line, t)| {
            let event = match (t[0], t.len()) {
                ("insert", len) if len >= 2 => Event::Insert(
                    t[1..]
                        .iter()
                        .map(|c| number(line, c, "an integer cost"))
                        .collect::<Result<_, _>>()?,
                ),
                ("remove", 2) => Event::Remove(number(line, t[1], "a demand id")?),
                ("cap", 3) => {
                    let delta = match t[2] {
                        "+1" => CapacityDelta::Increase,
                        "-1" => CapacityDelta::Decrease,
                        other => {
                            return Err(parse_err(
                                line,
                                format!("expected +1 or -1, found `{other}`"),
                            ))
                        }
                    };
                    Event::Capacity(number(line, t[1], "a center id")?, delta)
                }
                ("shift", 3) => {
                    let direction = match t[2] {
                        "left" => ShiftDirection::Left,
                        "right" => ShiftDirection::Right,
                        other => {
                            return Err(parse_err(
                                line,
                                format!("expected left or right, found `{other}`"),
                            ))
                        }
                    };
                    Event::Shift(number(line, t[1], "a center id")?, direction)
                }
                (word, _) => return Err(parse_err(line, format!("malformed event `{word}`"))),
            };
            Ok((line, event))
        })
        .collect()
}

pub fn render_event(event: &Event) -> String {
    match event {
        Event::Insert(row) => {
            let costs: Vec<String> = row.iter().map(i64::to_string).collect();
            format!("insert {}", costs.join(" "))
        }
        Event::Remove(d) => format!("remove {d}"),
        Event::Capacity(c, CapacityDelta::Increase) => format!("cap {c} +1"),
        Event::Capacity(c, CapacityDelta::Decrease) => format!("cap {c} -1"),
        Event::Shift(c, ShiftDirection::Left) => format!("shift {c} left"),
        Event::Shift(c, ShiftDirection::Right) => format!("shift {c} right"),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Optimal,
    NotOptimal,
    Unchecked,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Optimal => "OPTIMAL",
            Verdict::NotOptimal => "NOT_OPTIMAL",
            Verdict::Unchecked => "unchecked",
        }
    }
}

/// Result document: objective, verdict, per-center load, then one
/// `demand center` line per demand (`-` when unassigned).
pub fn render_result(
    instance: &ProblemInstance,
    assignment: &[Option<CenterId>],
    objective: ExtCost,
    verdict: Verdict,
) -> String {
    let mut occupancy = vec![0usize; instance.center_count()];
    for c in assignment.iter().flatten() {
        occupancy[*c] += 1;
    }
    let mut out = String::new();
    writeln!(out, "objective {objective}").unwrap();
    writeln!(out, "verdict {}", verdict.as_str()).unwrap();
    let unassigned = assignment.iter().filter(|a| a.is_none()).count();
    if unassigned > 0 {
        writeln!(out, "unassigned {unassigned}").unwrap();
    }
    for (j, center) in instance.centers.iter().enumerate() {
        writeln!(
            out,
            "center {j} occupancy {} penalty {}",
            occupancy[j],
            center.total_penalty(occupancy[j])
        )
        .unwrap();
    }
    for (d, c) in assignment.iter().enumerate() {
        match c {
            Some(c) => writeln!(out, "{d} {c}").unwrap(),
            None => writeln!(out, "{d} -").unwrap(),
        }
    }
    out
}

const RESULT_KEYWORDS: [&str; 4] = ["objective", "verdict", "unassigned", "center"];

/// Reads the `demand center` lines of a result document into an allotment
/// over `centers` centers and `demands` demands. Summary lines are skipped.
pub fn parse_allotment(text: &str, centers: usize, demands: usize) -> Result<Allotment, IoError> {
    let mut allotment = Allotment::new(centers, demands);
    let mut seen = vec![false; demands];
    for (line, t) in content_lines(text) {
        if RESULT_KEYWORDS.contains(&t[0]) {
            continue;
        }
        if t.len() != 2 {
            return Err(parse_err(line, "expected `<demand> <center>`"));
        }
        let d: usize = number(line, t[0], "a demand id")?;
        if d >= demands {
            return Err(parse_err(
                line,
                format!("demand {d} is out of range for {demands} demands"),
            ));
        }
        if std::mem::replace(&mut seen[d], true) {
            return Err(parse_err(
                line,
                format!("demand {d} appears more than once"),
            ));
        }
        if t[1] == "-" {
            continue;
        }
        let c: usize = number(line, t[1], "a center id")?;
        if c >= centers {
            return Err(parse_err(
                line,
                format!("center {c} is out of range for {centers} centers"),
            ));
        }
        allotment.assign(d, c);
    }
    Ok(allotment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::i1;
    use proptest::prelude::*;

    const I1_TEXT: &str = "lbdd 1
# two centers, three demands
2 3 overload_allowed
center 0 cap 1 penalty constant 10
center 1 cap 1 penalty constant 10

demand 0 costs 1 5
demand 1 costs 2 4   # second
demand 2 costs 6 3
";

    #[test]
    fn parses_i1() {
        assert_eq!(parse_instance(I1_TEXT).unwrap(), i1());
        assert_eq!(parse_instance(&render_instance(&i1())).unwrap(), i1());
    }

    #[test]
    fn reports_line_numbers() {
        let bad = I1_TEXT.replace("demand 2 costs 6 3", "demand 2 costs 6");
        let err = parse_instance(&bad).unwrap_err();
        assert_eq!(
            err,
            IoError::Parse {
                line: 9,
                message: "demand 2 has 1 costs, expected 2".into()
            }
        );
        let bad = I1_TEXT.replace("constant 10\ncenter 1", "constant x\ncenter 1");
        assert!(matches!(
            parse_instance(&bad),
            Err(IoError::Parse { line: 4, .. })
        ));
        let bad = I1_TEXT.replace("lbdd 1", "lbdd 2");
        assert!(matches!(
            parse_instance(&bad),
            Err(IoError::Parse { line: 1, .. })
        ));
        let bad = I1_TEXT.replace("demand 2 costs 6 3\n", "");
        assert!(matches!(parse_instance(&bad), Err(IoError::Parse { .. })));
        let bad = I1_TEXT.replace("6 3", "0 3");
        assert!(matches!(
            parse_instance(&bad),
            Err(IoError::Parse { line: 9, .. })
        ));
    }

    #[test]
    fn validation_errors_pass_through() {
        let bad = I1_TEXT.replace(
            "center 1 cap 1 penalty constant 10",
            "center 1 cap 1 penalty infinite",
        );
        assert_eq!(
            parse_instance(&bad),
            Err(IoError::Invalid(
                InstanceError::InfiniteWithoutHardCapacity { center: 1 }
            ))
        );
        let bad = I1_TEXT.replace("center 1 cap", "center 0 cap");
        assert_eq!(
            parse_instance(&bad),
            Err(IoError::Invalid(InstanceError::DuplicateId { id: 0 }))
        );
    }

    #[test]
    fn hard_mode_ignores_penalty_kind() {
        let text = I1_TEXT.replace("overload_allowed", "hard_capacity");
        let inst = parse_instance(&text).unwrap();
        assert!(inst
            .centers
            .iter()
            .all(|c| c.penalty == CenterPenalty::Infinite));
        assert_eq!(parse_instance(&render_instance(&inst)).unwrap(), inst);
    }

    #[test]
    fn events_round_trip() {
        let text = "insert 1 5\n\nremove 0\ncap 1 -1\ncap 0 +1\nshift 1 left\nshift 0 right # c\n";
        let events = parse_events(text).unwrap();
        assert_eq!(events[0], (1, Event::Insert(vec![1, 5])));
        assert_eq!(events[2], (4, Event::Capacity(1, CapacityDelta::Decrease)));
        let again: String = events.iter().map(|(_, e)| render_event(e) + "\n").collect();
        let reparsed: Vec<Event> = parse_events(&again)
            .unwrap()
            .into_iter()
            .map(|(_, e)| e)
            .collect();
        let original: Vec<Event> = events.into_iter().map(|(_, e)| e).collect();
        assert_eq!(reparsed, original);
        assert!(matches!(
            parse_events("cap 0 +2"),
            Err(IoError::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_events("\nteleport 3"),
            Err(IoError::Parse { line: 2, .. })
        ));
        assert!(parse_events("").unwrap().is_empty());
    }

    #[test]
    fn result_document_round_trip() {
        let inst = i1();
        let assignment = vec![Some(0), Some(0), Some(1)];
        let doc = render_result(&inst, &assignment, ExtCost::Finite(16), Verdict::Optimal);
        assert!(doc.starts_with("objective 16\nverdict OPTIMAL\n"));
        assert!(doc.contains("center 0 occupancy 2 penalty 10\n"));
        let a = parse_allotment(&doc, 2, 3).unwrap();
        assert_eq!(a, Allotment::from_assignment(2, &[0, 0, 1]));

        let partial = render_result(
            &inst,
            &[Some(0), None, Some(1)],
            ExtCost::Finite(4),
            Verdict::Unchecked,
        );
        assert!(partial.contains("unassigned 1\n"));
        assert_eq!(parse_allotment(&partial, 2, 3).unwrap().center_of(1), None);
        assert!(parse_allotment("0 0\n0 1\n", 2, 3).is_err());
        assert!(parse_allotment("0 7\n", 2, 3).is_err());
    }

    fn penalty() -> impl Strategy<Value = PenaltySpec> {
        prop_oneof![
            (1i64..50).prop_map(PenaltySpec::Constant),
            (1i64..50, 0i64..10).prop_map(|(base, step)| PenaltySpec::Linear { base, step }),
            prop::collection::vec(1i64..20, 1..5).prop_map(|mut v| {
                for i in 1..v.len() {
                    v[i] += v[i - 1];
                }
                PenaltySpec::Table(v)
            }),
        ]
    }

    proptest! {
        #[test]
        fn instance_round_trip(
            centers in prop::collection::vec((0usize..6, penalty()), 1..5),
            n in 0usize..12,
            seed in any::<u64>(),
            hard in any::<bool>(),
        ) {
            let k = centers.len();
            let rows: Vec<Vec<i64>> = (0..n)
                .map(|d| (0..k).map(|c| 1 + ((seed >> ((d + c) % 48)) % 97) as i64).collect())
                .collect();
            let inst = if hard {
                let caps: Vec<usize> = centers.iter().map(|c| c.0).collect();
                ProblemInstance::with_hard_capacities(&caps, &rows).unwrap()
            } else {
                ProblemInstance::with_schedules(&centers, &rows).unwrap()
            };
            prop_assert_eq!(parse_instance(&render_instance(&inst)).unwrap(), inst);
        }
    }
}
