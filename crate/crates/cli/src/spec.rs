//! JSON wire formats: measure specs, transform specs, field specs and law
//! specs. Rationals travel as "p/q" strings; all output keys are sorted by
//! serde_json's map ordering so golden files are byte-stable.

use cmono::limits::LimitLaw;
use cmono::measures::{AtomicMeasure, MomentSeq, NamedLaw};
use cmono::pair_convolutions::{Transform, VParams};
use cmono::ring::{fmt_q, parse_q, Q};
use cmono::semigroups::PickField;
use serde_json::{json, Value};

#[derive(Debug)]
pub struct SpecError(pub String);

impl std::fmt::Display for SpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, SpecError> {
    Err(SpecError(msg.into()))
}

pub fn parse_json(text: &str) -> Result<Value, SpecError> {
    serde_json::from_str(text).map_err(|e| SpecError(format!("invalid JSON: {e}")))
}

/// Inline JSON or a path to a JSON file.
pub fn parse_json_arg(arg: &str) -> Result<Value, SpecError> {
    let trimmed = arg.trim();
    if trimmed.starts_with('{') || trimmed.starts_with('[') {
        parse_json(trimmed)
    } else {
        let text = std::fs::read_to_string(trimmed)
            .map_err(|e| SpecError(format!("cannot read {trimmed}: {e}")))?;
        parse_json(&text)
    }
}

pub fn q_field(v: &Value, key: &str) -> Result<Q, SpecError> {
    let field = v
        .get(key)
        .ok_or_else(|| SpecError(format!("missing field '{key}'")))?;
    q_value(field).map_err(|e| SpecError(format!("field '{key}': {}", e.0)))
}

pub fn q_value(v: &Value) -> Result<Q, SpecError> {
    match v {
        Value::String(s) => parse_q(s).ok_or_else(|| SpecError(format!("bad rational '{s}'"))),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Q::from_integer(i.into()))
            } else {
                err(format!("rational expected, got float {n}; use \"p/q\""))
            }
        }
        other => err(format!("rational expected, got {other}")),
    }
}

/// A distribution: atomic (exact atoms) or moments of a named law.
pub enum MeasureSpec {
    Atomic(AtomicMeasure),
    Named(NamedLaw),
}

impl MeasureSpec {
    pub fn moments(&self, order: usize) -> Result<MomentSeq, SpecError> {
        match self {
            MeasureSpec::Atomic(mu) => Ok(mu.moments(order)),
            MeasureSpec::Named(law) => law.moments(order).map_err(|e| SpecError(e.to_string())),
        }
    }

    pub fn atomic(&self) -> Option<&AtomicMeasure> {
        match self {
            MeasureSpec::Atomic(mu) => Some(mu),
            MeasureSpec::Named(_) => None,
        }
    }
}

pub fn parse_measure(v: &Value) -> Result<MeasureSpec, SpecError> {
    let ty = v
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| SpecError("measure spec needs a \"type\"".into()))?;
    match ty {
        "atomic" => {
            let atoms = v
                .get("atoms")
                .and_then(Value::as_array)
                .ok_or_else(|| SpecError("atomic spec needs \"atoms\": [[x, w], ...]".into()))?;
            let mut parsed = Vec::with_capacity(atoms.len());
            for pair in atoms {
                let arr = pair
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| SpecError("each atom must be [location, weight]".into()))?;
                parsed.push((q_value(&arr[0])?, q_value(&arr[1])?));
            }
            AtomicMeasure::new(parsed)
                .map(MeasureSpec::Atomic)
                .map_err(|e| SpecError(e.to_string()))
        }
        "arcsine" => {
            let var = q_field(v, "var")?;
            NamedLaw::arcsine(var)
                .map(MeasureSpec::Named)
                .map_err(|e| SpecError(e.to_string()))
        }
        "kesten" => {
            let law = if v.get("alpha2").is_some() {
                NamedLaw::kesten(q_field(v, "alpha2")?, q_field(v, "beta2")?)
            } else {
                NamedLaw::kesten_sigma_r(q_field(v, "sigma2")?, q_field(v, "r")?)
            };
            law.map(MeasureSpec::Named).map_err(|e| SpecError(e.to_string()))
        }
        "poisson" => NamedLaw::monotone_poisson(q_field(v, "rho")?)
            .map(MeasureSpec::Named)
            .map_err(|e| SpecError(e.to_string())),
        "cauchy" => Ok(MeasureSpec::Named(NamedLaw::Cauchy {
            b: q_field(v, "b")?,
        })),
        other => err(format!("unknown measure type '{other}'")),
    }
}

/// A pair spec {"type": "pair", "first": ..., "second": ...} or a plain
/// measure (second component defaults to the same measure -- the monotone
/// embedding).
pub fn parse_pair(v: &Value, order: usize) -> Result<(MomentSeq, MomentSeq), SpecError> {
    if v.get("type").and_then(Value::as_str) == Some("pair") {
        let first = parse_measure(
            v.get("first")
                .ok_or_else(|| SpecError("pair spec needs \"first\"".into()))?,
        )?;
        let second = parse_measure(
            v.get("second")
                .ok_or_else(|| SpecError("pair spec needs \"second\"".into()))?,
        )?;
        Ok((first.moments(order)?, second.moments(order)?))
    } else {
        let m = parse_measure(v)?.moments(order)?;
        Ok((m.clone(), m))
    }
}

pub fn parse_transform(v: &Value) -> Result<Transform, SpecError> {
    let ty = v
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| SpecError("transform spec needs a \"type\"".into()))?;
    match ty {
        "identity" => Ok(Transform::Identity),
        "delta0" => Ok(Transform::ToDelta0),
        "ut" => Ok(Transform::Ut(q_field(v, "t")?)),
        "v" => Ok(Transform::Vtua(VParams::new(
            q_field(v, "t")?,
            q_field(v, "u")?,
            q_field(v, "a")?,
        ))),
        "fermi" => Ok(Transform::Fu(q_field(v, "u")?)),
        "xi" => {
            let t = q_field(v, "t")?;
            let xi = v.get("xi").and_then(Value::as_str).unwrap_or("arcsine");
            let xi_cumulants = match xi {
                "arcsine" => vec![Q::from_integer(0.into()), Q::from_integer(1.into())],
                "poisson" => {
                    let rho = q_field(v, "rho")?;
                    vec![rho; 16]
                }
                other => return err(format!("unknown xi semigroup '{other}'")),
            };
            Ok(Transform::XiT { xi_cumulants, t })
        }
        other => err(format!("unknown transform type '{other}'")),
    }
}

pub fn parse_field(v: &Value) -> Result<PickField, SpecError> {
    if let Some(ty) = v.get("type").and_then(Value::as_str) {
        return match ty {
            "arcsine" => Ok(PickField::arcsine(q_field(v, "beta2")?)),
            "poisson" => Ok(PickField::poisson(q_field(v, "rho")?)),
            "drift" => Ok(PickField::drift(q_field(v, "a")?)),
            "zero" => Ok(PickField::zero()),
            other => err(format!("unknown field type '{other}'")),
        };
    }
    let gamma = q_field(v, "gamma")?;
    let tau_val = v
        .get("tau")
        .and_then(Value::as_array)
        .ok_or_else(|| SpecError("field spec needs \"gamma\" and \"tau\"".into()))?;
    let mut tau = Vec::with_capacity(tau_val.len());
    for pair in tau_val {
        let arr = pair
            .as_array()
            .filter(|a| a.len() == 2)
            .ok_or_else(|| SpecError("each tau atom must be [x, w]".into()))?;
        tau.push((q_value(&arr[0])?, q_value(&arr[1])?));
    }
    Ok(PickField::new(gamma, tau))
}

pub fn parse_law(v: &Value) -> Result<LimitLaw, SpecError> {
    let ty = v
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| SpecError("law spec needs a \"type\"".into()))?;
    match ty {
        "arcsine" => {
            let var = q_field(v, "var")?;
            Ok(LimitLaw::KestenClt {
                alpha2: var.clone(),
                beta2: var,
            })
        }
        "kesten" => Ok(LimitLaw::KestenClt {
            alpha2: q_field(v, "alpha2")?,
            beta2: q_field(v, "beta2")?,
        }),
        "clt_t" => Ok(LimitLaw::DeformedCltT { t: q_field(v, "t")? }),
        "clt_0a" => Ok(LimitLaw::DeformedClt0a { a: q_field(v, "a")? }),
        "poisson_ua" => Ok(LimitLaw::DeformedPoissonUa {
            u: q_field(v, "u")?,
            a: q_field(v, "a")?,
            lambda: q_field(v, "lambda")?,
        }),
        "xi_clt" => Ok(LimitLaw::XiArcsineClt { t: q_field(v, "t")? }),
        "xi_poisson" => Ok(LimitLaw::XiArcsinePoisson {
            t: q_field(v, "t")?,
            lambda: q_field(v, "lambda")?,
        }),
        "cmono_poisson" => Ok(LimitLaw::CMonotonePoisson {
            lambda: q_field(v, "lambda")?,
            rho: q_field(v, "rho")?,
        }),
        other => err(format!("unknown law type '{other}'")),
    }
}

pub fn law_name(v: &Value) -> String {
    serde_json::to_string(v).unwrap_or_else(|_| "law".into())
}

// output helpers

pub fn q_array(values: &[Q]) -> Value {
    Value::Array(values.iter().map(|x| Value::String(fmt_q(x))).collect())
}

pub fn atomic_json(mu: &AtomicMeasure) -> Value {
    json!({
        "type": "atomic",
        "atoms": mu
            .atoms()
            .iter()
            .map(|(x, w)| vec![fmt_q(x), fmt_q(w)])
            .collect::<Vec<_>>(),
    })
}

pub fn moments_json(m: &MomentSeq) -> Value {
    json!({ "moments": q_array(m.values()) })
}
