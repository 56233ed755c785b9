//! Symbolic spatiotemporal mode labels.
//!
//! A label names a normalized superposition Σ c·|X_l⟩⊗|T_m⟩ without binding
//! it to grids, waists, or widths; [`crate::modes::assemble_field`] turns a
//! label into a discrete field. The sorter's catalog is l ∈ {−2…2} ×
//! m ∈ {0…2}; wider indices are accepted but flagged as non-catalog.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which beam a label is intended for. Purely descriptive metadata — the
/// physics treats pump and signal positionally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Pump,
    #[default]
    Signal,
}

/// One term of a label: complex coefficient on |X_l⟩⊗|T_m⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelTerm {
    pub l: i32,
    pub m: u32,
    pub coeff_re: f64,
    pub coeff_im: f64,
}

impl LabelTerm {
    pub fn coeff(&self) -> Complex64 {
        Complex64::new(self.coeff_re, self.coeff_im)
    }
}

/// A normalized superposition of catalog modes.
///
/// Invariants enforced at construction: Σ|c|² = 1 (renormalized), global
/// phase fixed so the first nonzero coefficient is real-positive, no
/// duplicate (l, m) pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModeLabelJson", into = "ModeLabelJson")]
pub struct ModeLabel {
    terms: Vec<LabelTerm>,
    role: Role,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModeLabelJson {
    terms: Vec<LabelTerm>,
    #[serde(default)]
    role: Role,
}

impl TryFrom<ModeLabelJson> for ModeLabel {
    type Error = Error;
    fn try_from(j: ModeLabelJson) -> Result<Self> {
        ModeLabel::new(j.terms, j.role)
    }
}

impl From<ModeLabel> for ModeLabelJson {
    fn from(l: ModeLabel) -> Self {
        ModeLabelJson {
            terms: l.terms,
            role: l.role,
        }
    }
}

impl ModeLabel {
    pub fn new(terms: Vec<LabelTerm>, role: Role) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::config("mode label needs at least one term"));
        }
        for (i, a) in terms.iter().enumerate() {
            for b in terms.iter().skip(i + 1) {
                if a.l == b.l && a.m == b.m {
                    return Err(Error::config(format!(
                        "duplicate term (l={}, m={}) in mode label",
                        a.l, a.m
                    )));
                }
            }
        }
        let norm2: f64 = terms.iter().map(|t| t.coeff().norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::config("mode label coefficients must not all vanish"));
        }
        // normalize and fix the global phase: first nonzero coefficient
        // real-positive, so label comparisons are deterministic
        let first = terms
            .iter()
            .map(|t| t.coeff())
            .find(|c| c.norm() > 0.0)
            .expect("norm2 > 0 implies a nonzero coeff");
        let rot = Complex64::from_polar(1.0 / norm2.sqrt(), -first.arg());
        let terms = terms
            .into_iter()
            .map(|t| {
                let c = t.coeff() * rot;
                LabelTerm {
                    l: t.l,
                    m: t.m,
                    coeff_re: c.re,
                    coeff_im: c.im,
                }
            })
            .collect();
        Ok(Self { terms, role })
    }

    /// Single basis mode |X_l⟩⊗|T_m⟩.
    pub fn single(l: i32, m: u32) -> Self {
        Self::new(
            vec![LabelTerm {
                l,
                m,
                coeff_re: 1.0,
                coeff_im: 0.0,
            }],
            Role::default(),
        )
        .expect("single-term label is valid")
    }

    /// Superposition from (l, m, coefficient) triples.
    pub fn superposition(terms: &[(i32, u32, Complex64)]) -> Result<Self> {
        Self::new(
            terms
                .iter()
                .map(|&(l, m, c)| LabelTerm {
                    l,
                    m,
                    coeff_re: c.re,
                    coeff_im: c.im,
                })
                .collect(),
            Role::default(),
        )
    }

    pub fn with_role(mut self, role: Role) -> Self {
        self.role = role;
        self
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn terms(&self) -> &[LabelTerm] {
        &self.terms
    }

    /// True when every index is inside the sorter's catalog
    /// (l ∈ [−2, 2], m ∈ [0, 2]).
    pub fn is_catalog(&self) -> bool {
        self.terms
            .iter()
            .all(|t| (-2..=2).contains(&t.l) && t.m <= 2)
    }

    /// The common OAM index when all terms share one (the field then
    /// factorizes into a single spatial profile times a composite envelope).
    pub fn common_l(&self) -> Option<i32> {
        let l0 = self.terms[0].l;
        self.terms.iter().all(|t| t.l == l0).then_some(l0)
    }

    /// Largest HG order present (drives temporal-grid guards).
    pub fn max_m(&self) -> u32 {
        self.terms.iter().map(|t| t.m).max().unwrap_or(0)
    }

    /// Compact display like `X+1·T0` or `(X0·T0 + X0·T1)/√2`-style sums.
    pub fn describe(&self) -> String {
        let term_str = |t: &LabelTerm| {
            let c = t.coeff();
            if (c.re - 1.0).abs() < 1e-12 && c.im.abs() < 1e-12 && self.terms.len() == 1 {
                format!("X{:+}·T{}", t.l, t.m)
            } else {
                format!("({:.3}{:+.3}i)·X{:+}·T{}", c.re, c.im, t.l, t.m)
            }
        };
        self.terms.iter().map(term_str).collect::<Vec<_>>().join(" + ")
    }
}
