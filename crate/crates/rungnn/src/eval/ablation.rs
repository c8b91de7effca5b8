//! Model variants for component ablations.

use serde::{Deserialize, Serialize};

use crate::model::{MessageKind, ModelConfig};

/// Which component to knock out. The message variants swap the gated
/// fusion for a plain elementwise combine (query-independent); `NoBuffer`
/// drops the buffer passes while keeping the exploration depth. The gated
/// state update is retained in every variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AblationVariant {
    #[default]
    FullQrfgu,
    MessageAddition,
    MessageMultiplication,
    NoBuffer,
}

impl AblationVariant {
    pub const ALL: [AblationVariant; 4] = [
        AblationVariant::FullQrfgu,
        AblationVariant::MessageAddition,
        AblationVariant::MessageMultiplication,
        AblationVariant::NoBuffer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AblationVariant::FullQrfgu => "full",
            AblationVariant::MessageAddition => "addition",
            AblationVariant::MessageMultiplication => "multiplication",
            AblationVariant::NoBuffer => "no-buffer",
        }
    }
}

impl std::str::FromStr for AblationVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" | "full-qrfgu" => Ok(AblationVariant::FullQrfgu),
            "addition" | "message-addition" => Ok(AblationVariant::MessageAddition),
            "multiplication" | "message-multiplication" => {
                Ok(AblationVariant::MessageMultiplication)
            }
            "no-buffer" | "nobuffer" => Ok(AblationVariant::NoBuffer),
            other => Err(format!("unknown ablation variant '{other}'")),
        }
    }
}

impl std::fmt::Display for AblationVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Derive the variant's model config from a base config.
pub fn apply_variant(base: &ModelConfig, variant: AblationVariant) -> ModelConfig {
    let mut config = base.clone();
    match variant {
        AblationVariant::FullQrfgu => {}
        AblationVariant::MessageAddition => config.message = MessageKind::Addition,
        AblationVariant::MessageMultiplication => config.message = MessageKind::Multiplication,
        AblationVariant::NoBuffer => config.encoder.m = 0,
    }
    config
}
