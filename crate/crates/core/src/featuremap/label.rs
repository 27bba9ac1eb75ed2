use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// The seven emotion classes, ordered by ordinal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmotionLabel {
    Anger,
    Boredom,
    Disgust,
    Fear,
    Happiness,
    Neutral,
    Sadness,
}

impl EmotionLabel {
    pub const COUNT: usize = 7;

    pub const ALL: [EmotionLabel; 7] = [
        EmotionLabel::Anger,
        EmotionLabel::Boredom,
        EmotionLabel::Disgust,
        EmotionLabel::Fear,
        EmotionLabel::Happiness,
        EmotionLabel::Neutral,
        EmotionLabel::Sadness,
    ];

    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            EmotionLabel::Anger => "anger",
            EmotionLabel::Boredom => "boredom",
            EmotionLabel::Disgust => "disgust",
            EmotionLabel::Fear => "fear",
            EmotionLabel::Happiness => "happiness",
            EmotionLabel::Neutral => "neutral",
            EmotionLabel::Sadness => "sadness",
        }
    }

    /// Capitalized name used in report tables.
    pub fn title(self) -> &'static str {
        match self {
            EmotionLabel::Anger => "Anger",
            EmotionLabel::Boredom => "Boredom",
            EmotionLabel::Disgust => "Disgust",
            EmotionLabel::Fear => "Fear",
            EmotionLabel::Happiness => "Happiness",
            EmotionLabel::Neutral => "Neutral",
            EmotionLabel::Sadness => "Sadness",
        }
    }

    /// German single-letter emotion code used in EMO-DB file names.
    pub fn from_emodb_code(c: char) -> Option<Self> {
        Some(match c {
            'W' => EmotionLabel::Anger,
            'L' => EmotionLabel::Boredom,
            'E' => EmotionLabel::Disgust,
            'A' => EmotionLabel::Fear,
            'F' => EmotionLabel::Happiness,
            'T' => EmotionLabel::Sadness,
            'N' => EmotionLabel::Neutral,
            _ => return None,
        })
    }
}

impl fmt::Display for EmotionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown emotion label {0:?}")]
pub struct UnknownLabel(pub String);

impl FromStr for EmotionLabel {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        Self::ALL
            .into_iter()
            .find(|l| l.name() == lower)
            .ok_or_else(|| UnknownLabel(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinals_and_names() {
        for (i, l) in EmotionLabel::ALL.iter().enumerate() {
            assert_eq!(l.ordinal(), i);
            assert_eq!(EmotionLabel::from_ordinal(i), Some(*l));
            assert_eq!(l.name().parse::<EmotionLabel>().unwrap(), *l);
        }
        assert_eq!(EmotionLabel::from_ordinal(7), None);
        assert_eq!("  Fear ".parse::<EmotionLabel>().unwrap(), EmotionLabel::Fear);
        assert!("joy".parse::<EmotionLabel>().is_err());
    }

    #[test]
    fn emodb_codes() {
        assert_eq!(EmotionLabel::from_emodb_code('W'), Some(EmotionLabel::Anger));
        assert_eq!(EmotionLabel::from_emodb_code('N'), Some(EmotionLabel::Neutral));
        assert_eq!(EmotionLabel::from_emodb_code('x'), None);
    }
}
