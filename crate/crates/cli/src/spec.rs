//! `--function` argument: an expression in `s`, or
//! `family:<name>:k=v,k=v` for the built-in families.

use std::collections::BTreeMap;

use detconvex::{family_f_a, neo_hooke_volumetric, BuiltinFamily, Error, ScalarFunction};

pub struct FunctionSpec {
    pub source: String,
    pub function: ScalarFunction,
    pub notes: Vec<String>,
}

#[derive(Debug)]
pub enum SpecError {
    /// Malformed family spec.
    Family(String),
    /// Expression did not parse; carries the source for the caret line.
    Expr { source: String, error: Error },
}

impl std::fmt::Display for SpecError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Family(msg) => write!(f, "{msg}"),
            Self::Expr { source, error } => {
                write!(f, "{error}")?;
                let offset = match error {
                    Error::Syntax { offset, .. } | Error::UnknownIdentifier { offset, .. } => {
                        Some(*offset)
                    }
                    _ => None,
                };
                if let Some(offset) = offset {
                    let col = source[..offset.min(source.len())].chars().count();
                    write!(f, "\n  {source}\n  {}^", " ".repeat(col))?;
                }
                Ok(())
            }
        }
    }
}

fn parse_params(text: &str) -> Result<BTreeMap<String, f64>, SpecError> {
    let mut out = BTreeMap::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| SpecError::Family(format!("expected key=value, got `{part}`")))?;
        let value: f64 = v
            .trim()
            .parse()
            .map_err(|_| SpecError::Family(format!("`{}` is not a number", v.trim())))?;
        if out.insert(k.trim().to_string(), value).is_some() {
            return Err(SpecError::Family(format!(
                "parameter `{}` given twice",
                k.trim()
            )));
        }
    }
    Ok(out)
}

struct Params {
    family: &'static str,
    map: BTreeMap<String, f64>,
}

impl Params {
    fn take(&mut self, key: &str, default: Option<f64>) -> Result<f64, SpecError> {
        match (self.map.remove(key), default) {
            (Some(v), _) => Ok(v),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(SpecError::Family(format!(
                "family `{}` needs parameter `{key}`",
                self.family
            ))),
        }
    }

    fn finish(self) -> Result<(), SpecError> {
        match self.map.keys().next() {
            Some(k) => Err(SpecError::Family(format!(
                "family `{}` has no parameter `{k}`",
                self.family
            ))),
            None => Ok(()),
        }
    }
}

fn family_error(e: Error) -> SpecError {
    SpecError::Family(e.to_string())
}

pub fn parse_function(source: &str, n: usize) -> Result<FunctionSpec, SpecError> {
    let Some(rest) = source.strip_prefix("family:") else {
        let function = ScalarFunction::parse(source).map_err(|error| SpecError::Expr {
            source: source.to_string(),
            error,
        })?;
        return Ok(FunctionSpec {
            source: source.to_string(),
            function,
            notes: Vec::new(),
        });
    };
    let (name, params) = rest.split_once(':').unwrap_or((rest, ""));
    let map = parse_params(params)?;
    let mut notes = Vec::new();
    let family = match name {
        "fa" => {
            let mut p = Params { family: "fa", map };
            let (a, c, d) = (
                p.take("a", None)?,
                p.take("c", Some(-1.0))?,
                p.take("d", Some(0.0))?,
            );
            p.finish()?;
            family_f_a(a, c, d, n).map_err(family_error)?
        }
        "power" => {
            let mut p = Params {
                family: "power",
                map,
            };
            let (c, pw, d) = (
                p.take("c", None)?,
                p.take("p", None)?,
                p.take("d", Some(0.0))?,
            );
            p.finish()?;
            let f = BuiltinFamily::PowerLaw { c, p: pw, d };
            f.validate().map_err(family_error)?;
            f
        }
        "log" => {
            let mut p = Params { family: "log", map };
            let (c, d) = (p.take("c", Some(-1.0))?, p.take("d", Some(0.0))?);
            p.finish()?;
            let f = BuiltinFamily::LogFamily { c, d };
            f.validate().map_err(family_error)?;
            f
        }
        "neohooke" => {
            let mut p = Params {
                family: "neohooke",
                map,
            };
            let mu = p.take("mu", Some(1.0))?;
            p.finish()?;
            notes.push(format!(
                "Neo-Hooke: certifying the volumetric part f(s) = -{mu} ln s; the remaining term {mu}<C - I, I> is linear in C, so the full energy is convex whenever this part is"
            ));
            neo_hooke_volumetric(mu).map_err(family_error)?
        }
        other => {
            return Err(SpecError::Family(format!(
                "unknown family `{other}` (expected fa, power, log or neohooke)"
            )))
        }
    };
    Ok(FunctionSpec {
        source: source.to_string(),
        function: family.into(),
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expressions_pass_through() {
        let s = parse_function("-ln(s)", 3).unwrap();
        assert_eq!(s.function.eval(1.0f64).unwrap(), 0.0);
        assert!(s.notes.is_empty());
    }

    #[test]
    fn families() {
        let f = parse_function("family:fa:a=0.5,c=-1,d=0", 3)
            .unwrap()
            .function;
        assert!((f.eval(4.0f64).unwrap() - (4f64.powf(-1.0 / 6.0))).abs() < 1e-15);
        let f = parse_function("family:power:c=2,p=3", 3).unwrap().function;
        assert_eq!(f.eval(2.0f64).unwrap(), 16.0);
        let f = parse_function("family:log", 3).unwrap().function;
        assert_eq!(f.eval(1.0f64).unwrap(), 0.0);
        let s = parse_function("family:neohooke:mu=2", 3).unwrap();
        assert_eq!(s.notes.len(), 1);
        assert!((s.function.eval(std::f64::consts::E).unwrap() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn family_errors() {
        for bad in [
            "family:fa",
            "family:fa:a=1,q=2",
            "family:fa:a=x",
            "family:fa:a=1,a=2",
            "family:cubic:c=1",
            "family:neohooke:mu=-1",
            "family:power:c=1",
        ] {
            assert!(
                matches!(parse_function(bad, 3), Err(SpecError::Family(_))),
                "{bad}"
            );
        }
    }

    #[test]
    fn parse_error_shows_caret() {
        let err = parse_function("ln(s) + foo", 3).err().unwrap();
        let text = err.to_string();
        assert!(text.ends_with("\n  ln(s) + foo\n          ^"), "{text}");
    }
}
