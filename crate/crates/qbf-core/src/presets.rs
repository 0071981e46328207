//! Molecule presets with measured Ising couplings.
//!
//! Each preset carries the two scalar couplings in Hz; the solver works
//! in units rescaled by `J12`, so a preset contributes its ratio
//! `K = J23/J12` and lets reports convert durations back to seconds.

use serde::Serialize;
use thiserror::Error;

/// Unknown preset name.
#[derive(Debug, Clone, Error)]
#[error("unknown preset {name:?}; available: {available}")]
pub struct UnknownPreset {
    /// The requested name.
    pub name: String,
    /// Comma-separated known names.
    pub available: String,
}

/// A molecule with measured chain couplings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preset {
    /// Lowercase hyphenated molecule name.
    pub name: &'static str,
    /// Coupling between qubits 1 and 2, in Hz.
    pub j12_hz: f64,
    /// Coupling between qubits 2 and 3, in Hz.
    pub j23_hz: f64,
}

impl Preset {
    /// Coupling ratio `K = J23/J12`.
    pub fn k(&self) -> f64 {
        self.j23_hz / self.j12_hz
    }
}

const PRESETS: [Preset; 5] = [
    Preset {
        name: "ethanamide",
        j12_hz: 88.05,
        j23_hz: 88.05,
    },
    Preset {
        name: "trifluoroaniline",
        j12_hz: 20.0,
        j23_hz: 20.0,
    },
    Preset {
        name: "chloro-nitro-benzene",
        j12_hz: 8.0,
        j23_hz: 7.0,
    },
    Preset {
        name: "chloroethenylphosphonic-acid",
        j12_hz: 9.1,
        j23_hz: 11.3,
    },
    Preset {
        name: "alanine",
        j12_hz: 54.0,
        j23_hz: 35.0,
    },
];

/// All shipped presets.
pub fn list() -> &'static [Preset] {
    &PRESETS
}

/// Looks a preset up by its exact name.
///
/// # Errors
///
/// [`UnknownPreset`] listing the available names.
pub fn find(name: &str) -> Result<&'static Preset, UnknownPreset> {
    PRESETS
        .iter()
        .find(|preset| preset.name == name)
        .ok_or_else(|| UnknownPreset {
            name: name.to_owned(),
            available: PRESETS
                .iter()
                .map(|preset| preset.name)
                .collect::<Vec<_>>()
                .join(", "),
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturbative::fidelity_ceiling;
    use approx::assert_abs_diff_eq;

    #[test]
    fn couplings_are_positive_and_names_unique() {
        for preset in list() {
            assert!(preset.j12_hz > 0.0);
            assert!(preset.j23_hz > 0.0);
        }
        let mut names: Vec<_> = list().iter().map(|p| p.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), list().len());
    }

    #[test]
    fn ratios_match_the_measured_couplings() {
        assert_abs_diff_eq!(find("ethanamide").unwrap().k(), 1.0);
        assert_abs_diff_eq!(find("trifluoroaniline").unwrap().k(), 1.0);
        assert_abs_diff_eq!(find("chloro-nitro-benzene").unwrap().k(), 7.0 / 8.0);
        assert_abs_diff_eq!(
            find("chloroethenylphosphonic-acid").unwrap().k(),
            11.3 / 9.1
        );
        assert_abs_diff_eq!(find("alanine").unwrap().k(), 35.0 / 54.0);
    }

    #[test]
    fn detuned_molecules_sit_at_the_documented_ceilings() {
        let benzene = find("chloro-nitro-benzene").unwrap();
        assert!((fidelity_ceiling(benzene.k() - 1.0) - 0.9946).abs() < 5e-4);
        let alanine = find("alanine").unwrap();
        assert!((fidelity_ceiling(alanine.k() - 1.0) - 0.9575).abs() < 5e-4);
    }

    #[test]
    fn unknown_names_report_the_catalog() {
        let err = find("benzene").unwrap_err();
        assert!(err.available.contains("ethanamide"));
        assert!(err.available.contains("alanine"));
    }
}
