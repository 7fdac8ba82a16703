use num_traits::{One, Signed};
use serde_json::Value;

use super::{Instance, ScenarioSet};
use crate::error::{Error, Result};
use crate::rational::{format_rat, from_f64, parse_rat, to_f64, Rat};

#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions {
    /// Round Euclidean distances to the nearest integer (TSPLIB `nint`).
    pub round_euclidean: bool,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(msg.into())
}

fn number(v: &Value, what: &str) -> Result<Rat> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => return Err(malformed(format!("{what}: expected a number"))),
    };
    parse_rat(&text).ok_or_else(|| malformed(format!("{what}: bad number {text:?}")))
}

fn array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| malformed(format!("{what}: expected an array")))
}

fn count(v: Option<&Value>, what: &str) -> Result<usize> {
    v.and_then(Value::as_u64)
        .map(|x| x as usize)
        .ok_or_else(|| malformed(format!("missing or invalid {what:?}")))
}

fn euclidean(a: (f64, f64), b: (f64, f64), round: bool) -> Rat {
    let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    if round {
        Rat::from_integer((d.round() as i64).into())
    } else {
        from_f64(d)
    }
}

pub fn parse_instance(text: &str, opts: ParseOptions) -> Result<Instance> {
    let doc: Value = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    let obj = doc
        .as_object()
        .ok_or_else(|| malformed("expected an object"))?;
    let n = count(obj.get("n"), "n")?;
    let fleet = count(obj.get("fleet"), "fleet")?;
    let capacity = number(
        obj.get("capacity")
            .ok_or_else(|| malformed("missing \"capacity\""))?,
        "capacity",
    )?;
    if !capacity.is_positive() {
        return Err(Error::NonPositiveCapacity);
    }

    let cost: Vec<Vec<Rat>> = match (obj.get("costs"), obj.get("coords")) {
        (Some(c), None) => array(c, "costs")?
            .iter()
            .map(|row| {
                array(row, "costs")?
                    .iter()
                    .map(|v| number(v, "costs"))
                    .collect()
            })
            .collect::<Result<_>>()?,
        (None, Some(c)) => {
            let pts = array(c, "coords")?
                .iter()
                .map(|p| {
                    let p = array(p, "coords")?;
                    if p.len() != 2 {
                        return Err(malformed("coords: expected [x, y]"));
                    }
                    Ok((
                        to_f64(&number(&p[0], "coords")?),
                        to_f64(&number(&p[1], "coords")?),
                    ))
                })
                .collect::<Result<Vec<_>>>()?;
            if pts.len() != n + 1 {
                return Err(malformed(format!("expected {} coordinates", n + 1)));
            }
            pts.iter()
                .map(|&a| {
                    pts.iter()
                        .map(|&b| euclidean(a, b, opts.round_euclidean))
                        .collect()
                })
                .collect()
        }
        _ => {
            return Err(malformed(
                "exactly one of \"costs\" or \"coords\" is required",
            ))
        }
    };

    let sc = obj
        .get("scenarios")
        .and_then(Value::as_object)
        .ok_or_else(|| malformed("missing \"scenarios\""))?;
    let probs = array(
        sc.get("probs")
            .ok_or_else(|| malformed("missing \"probs\""))?,
        "probs",
    )?
    .iter()
    .map(|v| number(v, "probs"))
    .collect::<Result<Vec<_>>>()?;
    let demands = array(
        sc.get("demands")
            .ok_or_else(|| malformed("missing \"demands\""))?,
        "demands",
    )?
    .iter()
    .map(|row| {
        let row = array(row, "demands")?;
        if row.len() != n {
            return Err(malformed(format!("each demand vector needs {n} entries")));
        }
        row.iter().map(|v| number(v, "demands")).collect()
    })
    .collect::<Result<Vec<Vec<Rat>>>>()?;

    let total: Rat = probs.iter().sum();
    if (to_f64(&total) - 1.0).abs() > 1e-9 {
        return Err(Error::ProbabilitySum(format_rat(&total)));
    }
    // within tolerance: normalize exactly
    let probs = if total.is_one() {
        probs
    } else {
        probs.into_iter().map(|p| p / &total).collect()
    };
    let scenarios = ScenarioSet::new(probs, demands)?;
    if scenarios.n_customers() != n {
        return Err(malformed("demand vector length differs from n"));
    }
    let mut inst = Instance::new(cost, capacity, fleet, scenarios)?;
    if let Some(off) = obj.get("objective_offset") {
        inst.objective_offset = number(off, "objective_offset")?;
    }
    Ok(inst)
}

fn row(values: impl IntoIterator<Item = String>) -> String {
    format!("[{}]", values.into_iter().collect::<Vec<_>>().join(", "))
}

fn num(r: &Rat) -> String {
    let s = format_rat(r);
    if s.contains('/') {
        format!("\"{s}\"")
    } else {
        s
    }
}

/// Canonical, byte-stable document.
pub fn write_instance(inst: &Instance) -> String {
    let n = inst.n();
    let s = inst.scenarios();
    let mut out = String::from("{\n");
    out += &format!("  \"n\": {n},\n");
    out += &format!("  \"capacity\": {},\n", num(inst.capacity()));
    out += &format!("  \"fleet\": {},\n", inst.fleet());
    if !num_traits::Zero::is_zero(inst.objective_offset()) {
        out += &format!(
            "  \"objective_offset\": {},\n",
            num(inst.objective_offset())
        );
    }
    let costs: Vec<String> = inst
        .cost_matrix()
        .iter()
        .map(|r| format!("    {}", row(r.iter().map(num))))
        .collect();
    out += &format!("  \"costs\": [\n{}\n  ],\n", costs.join(",\n"));
    out += "  \"scenarios\": {\n";
    out += &format!("    \"probs\": {},\n", row(s.probs().iter().map(num)));
    let demands: Vec<String> = (0..s.len())
        .map(|xi| format!("      {}", row((1..=n).map(|v| num(s.demand(xi, v))))))
        .collect();
    out += &format!("    \"demands\": [\n{}\n    ]\n", demands.join(",\n"));
    out += "  }\n}\n";
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    const MINIMAL: &str = r#"{"n": 1, "capacity": 10, "fleet": 1,
        "costs": [[0, 3], [3, 0]],
        "scenarios": {"probs": [1], "demands": [[4]]}}"#;

    #[test]
    fn minimal_document() {
        let inst = parse_instance(MINIMAL, ParseOptions::default()).unwrap();
        assert_eq!(inst.n(), 1);
        assert_eq!(inst.scenarios().len(), 1);
        assert_eq!(*inst.cost(0, 1), int(3));
    }

    #[test]
    fn probability_violation() {
        let doc = r#"{"n": 1, "capacity": 10, "fleet": 1, "costs": [[0, 3], [3, 0]],
            "scenarios": {"probs": [0.5, 0.4], "demands": [[4], [5]]}}"#;
        let err = parse_instance(doc, ParseOptions::default()).unwrap_err();
        assert_eq!(err.to_string(), "probabilities sum to 0.9");
    }

    #[test]
    fn decimal_probabilities_are_exact() {
        let doc = r#"{"n": 1, "capacity": 10, "fleet": 1, "costs": [[0, 3], [3, 0]],
            "scenarios": {"probs": [0.1, 0.2, 0.7], "demands": [[4], [5], [1]]}}"#;
        let inst = parse_instance(doc, ParseOptions::default()).unwrap();
        assert_eq!(*inst.scenarios().prob(0), ratio(1, 10));
        assert_eq!(*inst.mean_demand(1), ratio(4 + 10 + 7, 10));
    }

    #[test]
    fn coordinates_to_distances() {
        // 3-4-5 triangle: depot (0,0), customers (3,0) and (3,4)
        let doc = r#"{"n": 2, "capacity": 10, "fleet": 1, "coords": [[0,0],[3,0],[3,4]],
            "scenarios": {"probs": [1], "demands": [[1, 1]]}}"#;
        let inst = parse_instance(
            doc,
            ParseOptions {
                round_euclidean: true,
            },
        )
        .unwrap();
        assert_eq!(*inst.cost(0, 1), int(3));
        assert_eq!(*inst.cost(1, 2), int(4));
        assert_eq!(*inst.cost(0, 2), int(5));
        let doc = r#"{"n": 2, "capacity": 10, "fleet": 1, "coords": [[0,0],[1,1],[2,0]],
            "scenarios": {"probs": [1], "demands": [[1, 1]]}}"#;
        let raw = parse_instance(doc, ParseOptions::default()).unwrap();
        let rounded = parse_instance(
            doc,
            ParseOptions {
                round_euclidean: true,
            },
        )
        .unwrap();
        assert_eq!(*raw.cost(0, 1), from_f64(2f64.sqrt()));
        assert_eq!(*rounded.cost(0, 1), int(1));
        assert_eq!(*rounded.cost(0, 2), int(2));
    }

    #[test]
    fn rejects_bad_documents() {
        let opts = ParseOptions::default();
        assert!(parse_instance("[]", opts).is_err());
        assert!(parse_instance(&MINIMAL.replace("10", "0"), opts).is_err());
        assert!(parse_instance(&MINIMAL.replace("[[4]]", "[[0]]"), opts).is_err());
        assert!(parse_instance(&MINIMAL.replace("[[4]]", "[[4, 5]]"), opts).is_err());
    }

    #[test]
    fn writer_round_trips_byte_stable() {
        let doc = r#"{"n": 2, "capacity": 7.5, "fleet": 1, "costs": [[0,1,2],[1,0,"1/3"],[2,"1/3",0]],
            "scenarios": {"probs": ["1/3", "2/3"], "demands": [[1, 2.25], [3, 0]]}}"#;
        let inst = parse_instance(doc, ParseOptions::default()).unwrap();
        let text = write_instance(&inst);
        let again = parse_instance(&text, ParseOptions::default()).unwrap();
        assert_eq!(write_instance(&again), text);
        assert_eq!(*again.cost(1, 2), ratio(1, 3));
    }
}
