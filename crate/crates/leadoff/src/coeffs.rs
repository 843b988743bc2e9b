//! Coefficient file (JSON).
//!
//! ```json
//! {
//!   "covariate_convention": "centered",
//!   "covariate_means": { "sprint_speed": 27.0, "arm_strength": 82.0 },
//!   "po_attempt": { "intercept": -6.0, "fixed": { "lead": 0.35, ... },
//!                   "re_sd": { "pitcher": 0.5 }, "re": { "pitcher": { "p1": 0.2 } } },
//!   "po_success": { ... }, "sb_attempt": { ... }, "sb_success": { ... }
//! }
//! ```
//! Unknown keys anywhere are rejected.

use std::collections::BTreeMap;
use std::path::Path;

use leadoff_core::models::{
    CovariateConvention, CovariateMeans, FixedTerm, LogisticModel, ModelKind, ModelSet, Role,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convention {
    Centered,
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Means {
    pub sprint_speed: f64,
    pub arm_strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub intercept: f64,
    pub fixed: BTreeMap<String, f64>,
    #[serde(default)]
    pub re_sd: BTreeMap<String, f64>,
    #[serde(default)]
    pub re: BTreeMap<String, BTreeMap<String, f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientFile {
    pub covariate_convention: Convention,
    pub covariate_means: Means,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub zero_disengagement_effects: bool,
    pub po_attempt: ModelBlock,
    pub po_success: ModelBlock,
    pub sb_attempt: ModelBlock,
    pub sb_success: ModelBlock,
}

fn role(name: &str, block: &str) -> Result<Role> {
    Role::from_name(name).ok_or_else(|| Error::Core(leadoff_core::Error::Input(format!("{block}: unknown role {name}"))))
}

impl ModelBlock {
    fn to_model(&self, kind: ModelKind) -> Result<LogisticModel> {
        let key = kind.key();
        let input = |msg: String| Error::Core(leadoff_core::Error::Input(msg));
        let fixed = self
            .fixed
            .iter()
            .map(|(k, v)| FixedTerm::from_name(k).map(|t| (t, *v)).ok_or_else(|| input(format!("{key}: unknown fixed term {k}"))))
            .collect::<Result<_>>()?;
        let re_sd = self.re_sd.iter().map(|(k, v)| Ok((role(k, key)?, *v))).collect::<Result<_>>()?;
        let re = self.re.iter().map(|(k, v)| Ok((role(k, key)?, v.clone()))).collect::<Result<_>>()?;
        Ok(LogisticModel::new(kind, self.intercept, fixed, re_sd, re)?)
    }

    fn from_model(m: &LogisticModel) -> Self {
        ModelBlock {
            intercept: m.intercept(),
            fixed: m.fixed().iter().map(|(t, v)| (t.name().to_string(), *v)).collect(),
            re_sd: m.random_effect_sds().iter().map(|(r, v)| (r.name().to_string(), *v)).collect(),
            re: m.random_effects().iter().map(|(r, v)| (r.name().to_string(), v.clone())).collect(),
        }
    }
}

impl CoefficientFile {
    pub fn to_model_set(&self) -> Result<ModelSet> {
        let mut set = ModelSet::new(
            self.po_attempt.to_model(ModelKind::PickoffAttempt)?,
            self.po_success.to_model(ModelKind::PickoffSuccess)?,
            self.sb_attempt.to_model(ModelKind::StealAttempt)?,
            self.sb_success.to_model(ModelKind::StealSuccess)?,
            CovariateMeans {
                sprint_speed: self.covariate_means.sprint_speed,
                arm_strength: self.covariate_means.arm_strength,
            },
            match self.covariate_convention {
                Convention::Centered => CovariateConvention::Centered,
                Convention::Raw => CovariateConvention::Raw,
            },
        )?;
        set.zero_disengagement_effects = self.zero_disengagement_effects;
        Ok(set)
    }

    pub fn from_model_set(set: &ModelSet) -> Self {
        let block = |k: ModelKind| ModelBlock::from_model(set.model(k));
        CoefficientFile {
            covariate_convention: match set.convention {
                CovariateConvention::Centered => Convention::Centered,
                CovariateConvention::Raw => Convention::Raw,
            },
            covariate_means: Means {
                sprint_speed: set.covariate_means.sprint_speed,
                arm_strength: set.covariate_means.arm_strength,
            },
            zero_disengagement_effects: set.zero_disengagement_effects,
            po_attempt: block(ModelKind::PickoffAttempt),
            po_success: block(ModelKind::PickoffSuccess),
            sb_attempt: block(ModelKind::StealAttempt),
            sb_success: block(ModelKind::StealSuccess),
        }
    }
}

pub fn parse_coefficients(text: &str, path: &Path) -> Result<ModelSet> {
    let file: CoefficientFile = serde_json::from_str(text)
        .map_err(|e| Error::parse(path, Some(e.line() as u64), e.to_string()))?;
    file.to_model_set()
}

pub fn load_coefficients(path: &Path) -> Result<ModelSet> {
    let text = std::fs::read_to_string(path).map_err(Error::io(path))?;
    parse_coefficients(&text, path)
}
