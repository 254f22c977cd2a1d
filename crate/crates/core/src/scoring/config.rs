use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{ComponentScores, ScoringError, Vital, VitalSigns, COMPONENT_MAX, NUM_COMPONENTS};

/// Comparison used by [`Term::Threshold`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    fn holds(self, x: f64, bound: f64) -> bool {
        match self {
            Cmp::Lt => x < bound,
            Cmp::Le => x <= bound,
            Cmp::Gt => x > bound,
            Cmp::Ge => x >= bound,
        }
    }
}

/// Expression tree for one piece of a component formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Term {
    Const {
        value: f64,
    },
    /// `Σₖ coeffs[k] · varᵏ` (ascending powers).
    Poly {
        var: Vital,
        coeffs: Vec<f64>,
    },
    /// `scale · bool(var > 0)`.
    Gate {
        var: Vital,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `score` when `var <cmp> value`, else 0.
    Threshold {
        var: Vital,
        cmp: Cmp,
        value: f64,
        score: f64,
    },
    Max {
        of: Vec<Term>,
    },
    Min {
        of: Vec<Term>,
    },
    Sum {
        of: Vec<Term>,
    },
}

fn one() -> f64 {
    1.0
}

impl Term {
    pub fn constant(value: f64) -> Term {
        Term::Const { value }
    }

    pub fn poly(var: Vital, coeffs: &[f64]) -> Term {
        Term::Poly {
            var,
            coeffs: coeffs.to_vec(),
        }
    }

    pub fn gate(var: Vital, scale: f64) -> Term {
        Term::Gate { var, scale }
    }

    pub fn threshold(var: Vital, cmp: Cmp, value: f64, score: f64) -> Term {
        Term::Threshold {
            var,
            cmp,
            value,
            score,
        }
    }

    pub fn max(of: impl Into<Vec<Term>>) -> Term {
        Term::Max { of: of.into() }
    }

    pub fn min(of: impl Into<Vec<Term>>) -> Term {
        Term::Min { of: of.into() }
    }

    pub fn sum(of: impl Into<Vec<Term>>) -> Term {
        Term::Sum { of: of.into() }
    }

    pub fn eval(&self, v: &VitalSigns) -> f64 {
        match self {
            Term::Const { value } => *value,
            Term::Poly { var, coeffs } => {
                let x = v.get(*var);
                // Horner, highest power first.
                coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }
            Term::Gate { var, scale } => {
                if v.get(*var) > 0.0 {
                    *scale
                } else {
                    0.0
                }
            }
            Term::Threshold {
                var,
                cmp,
                value,
                score,
            } => {
                if cmp.holds(v.get(*var), *value) {
                    *score
                } else {
                    0.0
                }
            }
            Term::Max { of } => of
                .iter()
                .map(|t| t.eval(v))
                .fold(f64::NEG_INFINITY, f64::max),
            Term::Min { of } => of.iter().map(|t| t.eval(v)).fold(f64::INFINITY, f64::min),
            Term::Sum { of } => of.iter().fold(0.0, |acc, t| acc + t.eval(v)),
        }
    }

    fn visit_vars(&self, out: &mut Vec<Vital>) {
        match self {
            Term::Const { .. } => {}
            Term::Poly { var, .. } | Term::Gate { var, .. } | Term::Threshold { var, .. } => {
                out.push(*var)
            }
            Term::Max { of } | Term::Min { of } | Term::Sum { of } => {
                for t in of {
                    t.visit_vars(out);
                }
            }
        }
    }

    fn validate(&self) -> Result<(), String> {
        let finite = |x: f64, what: &str| {
            if x.is_finite() {
                Ok(())
            } else {
                Err(format!("non-finite {what}"))
            }
        };
        match self {
            Term::Const { value } => finite(*value, "constant"),
            Term::Poly { coeffs, .. } => {
                if coeffs.is_empty() {
                    return Err("polynomial without coefficients".into());
                }
                coeffs.iter().try_for_each(|c| finite(*c, "coefficient"))
            }
            Term::Gate { scale, .. } => finite(*scale, "gate scale"),
            Term::Threshold { value, score, .. } => {
                finite(*value, "threshold")?;
                finite(*score, "threshold score")
            }
            Term::Max { of } | Term::Min { of } | Term::Sum { of } => {
                if of.is_empty() {
                    return Err("empty max/min/sum".into());
                }
                of.iter().try_for_each(Term::validate)
            }
        }
    }
}

/// One organ component: the sum of its terms, clamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub reads: Vec<Vital>,
    pub terms: Vec<Term>,
    /// `[lo, hi]`, required; must lie inside `[0, 4]`.
    pub clamp: Option<[f64; 2]>,
}

impl Component {
    pub fn new(name: &str, reads: &[Vital], terms: Vec<Term>) -> Self {
        Component {
            name: name.into(),
            reads: reads.to_vec(),
            terms,
            clamp: Some([0.0, COMPONENT_MAX]),
        }
    }

    /// Evaluate without validating the vitals.
    pub fn eval(&self, v: &VitalSigns) -> f64 {
        let raw = self.terms.iter().fold(0.0, |acc, t| acc + t.eval(v));
        let [lo, hi] = self.clamp.unwrap_or([0.0, COMPONENT_MAX]);
        // Outer [0, 4] clamp applies even if a config slipped past validation.
        raw.max(lo).min(hi).clamp(0.0, COMPONENT_MAX)
    }

    fn validate(&self) -> Result<(), String> {
        let [lo, hi] = self
            .clamp
            .ok_or_else(|| format!("component `{}` has no clamp", self.name))?;
        if !(0.0 <= lo && lo <= hi && hi <= COMPONENT_MAX) {
            return Err(format!(
                "component `{}` clamp [{lo}, {hi}] outside [0, 4]",
                self.name
            ));
        }
        if self.terms.is_empty() {
            return Err(format!("component `{}` has no terms", self.name));
        }
        for t in &self.terms {
            t.validate()
                .map_err(|e| format!("component `{}`: {e}", self.name))?;
        }
        let mut used = Vec::new();
        for t in &self.terms {
            t.visit_vars(&mut used);
        }
        if let Some(v) = used.iter().find(|v| !self.reads.contains(v)) {
            return Err(format!(
                "component `{}` uses `{v}` which is not listed in `reads`",
                self.name
            ));
        }
        Ok(())
    }
}

/// A six-component score definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreConfig {
    pub name: String,
    pub components: Vec<Component>,
}

impl ScoreConfig {
    pub fn validate(&self) -> Result<(), ScoringError> {
        if self.components.len() != NUM_COMPONENTS {
            return Err(ScoringError::InvalidConfig(format!(
                "expected {NUM_COMPONENTS} components, found {}",
                self.components.len()
            )));
        }
        for c in &self.components {
            c.validate().map_err(ScoringError::InvalidConfig)?;
        }
        Ok(())
    }

    /// All six clamped components for `vitals`.
    pub fn components(&self, vitals: &VitalSigns) -> Result<ComponentScores, ScoringError> {
        vitals.validate()?;
        let mut out = [0.0; NUM_COMPONENTS];
        for (slot, c) in out.iter_mut().zip(&self.components) {
            *slot = c.eval(vitals);
        }
        Ok(ComponentScores(out))
    }

    /// Looks up a built-in configuration by name.
    pub fn builtin(name: &str) -> Option<ScoreConfig> {
        match name {
            "sofa-discrete" => Some(Self::sofa_discrete()),
            "cxsofa-paper" => Some(Self::cxsofa_paper()),
            _ => None,
        }
    }

    pub const BUILTIN_NAMES: [&'static str; 2] = ["sofa-discrete", "cxsofa-paper"];
}
