//! Colors in linear RGB with sRGB hex encoding for export.

use serde::{Serialize, Serializer};

use crate::extraction::EntityType;

/// A color in linear-light RGB, each channel in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rgb {
    pub r: f64,
    pub g: f64,
    pub b: f64,
}

fn srgb_to_linear(c: f64) -> f64 {
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_srgb(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        c * 12.92
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

impl Rgb {
    pub const fn new(r: f64, g: f64, b: f64) -> Self {
        Rgb { r, g, b }
    }

    /// Parses `#rrggbb` (sRGB encoded).
    pub fn from_hex(hex: &str) -> Option<Self> {
        let hex = hex.strip_prefix('#').unwrap_or(hex);
        if hex.len() != 6 {
            return None;
        }
        let channel = |i: usize| {
            u8::from_str_radix(&hex[i..i + 2], 16)
                .ok()
                .map(|v| srgb_to_linear(f64::from(v) / 255.0))
        };
        Some(Rgb::new(channel(0)?, channel(2)?, channel(4)?))
    }

    pub fn to_hex(self) -> String {
        let enc = |c: f64| (linear_to_srgb(c.clamp(0.0, 1.0)) * 255.0).round() as u8;
        format!("#{:02x}{:02x}{:02x}", enc(self.r), enc(self.g), enc(self.b))
    }

    /// Weighted average; weights need not be normalized. Returns `None`
    /// when the weights sum to zero.
    pub fn mix<I>(parts: I) -> Option<Rgb>
    where
        I: IntoIterator<Item = (Rgb, f64)>,
    {
        let (mut r, mut g, mut b, mut w) = (0.0, 0.0, 0.0, 0.0);
        for (c, weight) in parts {
            r += c.r * weight;
            g += c.g * weight;
            b += c.b * weight;
            w += weight;
        }
        (w > 0.0).then(|| Rgb::new(r / w, g / w, b / w))
    }
}

impl Serialize for Rgb {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

const TYPE_HEX: [&str; 9] = [
    "#d62728", // dis
    "#ff7f0e", // sym
    "#2ca02c", // dru
    "#8c564b", // equ
    "#1f77b4", // pro
    "#e377c2", // bod
    "#17becf", // ite
    "#bcbd22", // mic
    "#9467bd", // dep
];

/// Categorical palette used for topics and constellations.
pub const CATEGORICAL: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7",
    "#9c755f", "#bab0ac",
];

pub const NEUTRAL_GRAY: &str = "#9e9e9e";

pub fn type_color(t: EntityType) -> Rgb {
    Rgb::from_hex(TYPE_HEX[t.code()]).expect("palette literal")
}

pub fn neutral_gray() -> Rgb {
    Rgb::from_hex(NEUTRAL_GRAY).expect("palette literal")
}

pub fn categorical(index: usize) -> Rgb {
    Rgb::from_hex(CATEGORICAL[index % CATEGORICAL.len()]).expect("palette literal")
}
