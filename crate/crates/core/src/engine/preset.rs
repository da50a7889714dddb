use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// The relaxation triple of the generalized step
/// `x' = a * P_C^b(P_D^c x) + (1 - a) * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Relaxations {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Relaxations {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite()
    }
}

pub const DEFAULT_BETA: f64 = 0.75;

/// Named algorithms expressed as relaxation triples.
///
/// | preset       | (a, b, c)                         |
/// |--------------|-----------------------------------|
/// | `dc`         | (1, 1, 1)                         |
/// | `ar` / `dr`  | (1/2, 2, 2)                       |
/// | `sf`         | (1, 2, 1)                         |
/// | `raar:β`     | (1/2, 2β, 2)                      |
/// | `rrr:β`      | (β/2, 2, 2)                       |
/// | `tlambda:λ`  | (1/(1+λ), 1+λ, 1+λ)               |
///
/// AR and DR coincide in this family; `dr` is kept as an alias.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Preset {
    Dc,
    Ar,
    Dr,
    Sf,
    Raar(f64),
    Rrr(f64),
    TLambda(f64),
    Custom(Relaxations),
}

impl Preset {
    pub const NAMES: [&'static str; 8] =
        ["dc", "ar", "dr", "sf", "raar", "rrr", "tlambda", "custom"];

    /// Builds a named preset. `raar`, `rrr` and `tlambda` require a
    /// parameter in `(0, 1]`; the others reject one.
    pub fn named(name: &str, parameter: Option<f64>) -> Result<Self> {
        let need = |p: Option<f64>| -> Result<f64> {
            let v =
                p.ok_or_else(|| Error::invalid(format!("preset {name} requires a parameter")))?;
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::invalid(format!(
                    "preset {name} parameter {v} outside (0, 1]"
                )));
            }
            Ok(v)
        };
        let none = |p: Option<f64>, preset: Preset| -> Result<Preset> {
            match p {
                Some(v) => Err(Error::invalid(format!(
                    "preset {name} takes no parameter (got {v})"
                ))),
                None => Ok(preset),
            }
        };
        match name {
            "dc" => none(parameter, Preset::Dc),
            "ar" => none(parameter, Preset::Ar),
            "dr" => none(parameter, Preset::Dr),
            "sf" => none(parameter, Preset::Sf),
            "raar" => Ok(Preset::Raar(need(parameter)?)),
            "rrr" => Ok(Preset::Rrr(need(parameter)?)),
            "tlambda" => Ok(Preset::TLambda(need(parameter)?)),
            "custom" => Err(Error::invalid(
                "custom preset needs explicit a, b, c relaxations",
            )),
            other => Err(Error::invalid(format!(
                "unknown preset {other:?} (valid: {})",
                Preset::NAMES.join(", ")
            ))),
        }
    }

    /// Like [`Preset::named`] but fills in [`DEFAULT_BETA`] for parameterized
    /// presets given without one.
    pub fn named_or_default(name: &str, parameter: Option<f64>) -> Result<Self> {
        let parameter = match (name, parameter) {
            ("raar" | "rrr" | "tlambda", None) => Some(DEFAULT_BETA),
            _ => parameter,
        };
        Preset::named(name, parameter)
    }

    pub fn relaxations(&self) -> Relaxations {
        match *self {
            Preset::Dc => Relaxations::new(1.0, 1.0, 1.0),
            Preset::Ar | Preset::Dr => Relaxations::new(0.5, 2.0, 2.0),
            Preset::Sf => Relaxations::new(1.0, 2.0, 1.0),
            Preset::Raar(beta) => Relaxations::new(0.5, 2.0 * beta, 2.0),
            Preset::Rrr(beta) => Relaxations::new(beta / 2.0, 2.0, 2.0),
            Preset::TLambda(lambda) => {
                Relaxations::new(1.0 / (1.0 + lambda), 1.0 + lambda, 1.0 + lambda)
            }
            Preset::Custom(r) => r,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Dc => "dc",
            Preset::Ar => "ar",
            Preset::Dr => "dr",
            Preset::Sf => "sf",
            Preset::Raar(_) => "raar",
            Preset::Rrr(_) => "rrr",
            Preset::TLambda(_) => "tlambda",
            Preset::Custom(_) => "custom",
        }
    }

    pub fn parameter(&self) -> Option<f64> {
        match *self {
            Preset::Raar(v) | Preset::Rrr(v) | Preset::TLambda(v) => Some(v),
            _ => None,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Preset::Custom(r) => write!(f, "custom:{}/{}/{}", r.a, r.b, r.c),
            p => match p.parameter() {
                Some(v) => write!(f, "{}:{}", p.name(), v),
                None => f.write_str(p.name()),
            },
        }
    }
}

/// Parses `name` or `name:param`, defaulting missing parameters.
impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => {
                let v: f64 = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("bad preset parameter in {s:?}")))?;
                (n.trim(), Some(v))
            }
            None => (s.trim(), None),
        };
        Preset::named_or_default(&name.to_ascii_lowercase(), param)
    }
}

/// The `(a, b, c)` triple for a preset name.
pub fn preset_params(name: &str, parameter: Option<f64>) -> Result<Relaxations> {
    Preset::named(name, parameter).map(|p| p.relaxations())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table() {
        assert_eq!(
            preset_params("dc", None).unwrap(),
            Relaxations::new(1.0, 1.0, 1.0)
        );
        assert_eq!(
            preset_params("ar", None).unwrap(),
            Relaxations::new(0.5, 2.0, 2.0)
        );
        assert_eq!(
            preset_params("dr", None).unwrap(),
            preset_params("ar", None).unwrap()
        );
        assert_eq!(
            preset_params("sf", None).unwrap(),
            Relaxations::new(1.0, 2.0, 1.0)
        );
        assert_eq!(
            preset_params("raar", Some(0.75)).unwrap(),
            Relaxations::new(0.5, 1.5, 2.0)
        );
        assert_eq!(
            preset_params("rrr", Some(0.5)).unwrap(),
            Relaxations::new(0.25, 2.0, 2.0)
        );
        assert_eq!(
            preset_params("tlambda", Some(1.0)).unwrap(),
            Relaxations::new(0.5, 2.0, 2.0)
        );
    }

    #[test]
    fn errors() {
        assert!(preset_params("raar", None).is_err());
        assert!(preset_params("rrr", Some(0.0)).is_err());
        assert!(preset_params("tlambda", Some(1.5)).is_err());
        assert!(preset_params("dc", Some(0.5)).is_err());
        assert!(preset_params("custom", None).is_err());
        let err = preset_params("hio", None).unwrap_err().to_string();
        assert!(err.contains("raar") && err.contains("tlambda"), "{err}");
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("raar:0.75".parse::<Preset>().unwrap(), Preset::Raar(0.75));
        assert_eq!(
            "raar".parse::<Preset>().unwrap(),
            Preset::Raar(DEFAULT_BETA)
        );
        assert_eq!("DC".parse::<Preset>().unwrap(), Preset::Dc);
        assert!("raar:x".parse::<Preset>().is_err());
        assert_eq!(Preset::TLambda(0.5).to_string(), "tlambda:0.5");
        assert_eq!(Preset::Sf.to_string(), "sf");
        for s in ["dc", "ar", "sf", "raar:0.75", "rrr:0.5", "tlambda:0.75"] {
            assert_eq!(s.parse::<Preset>().unwrap().to_string(), s);
        }
    }
}
