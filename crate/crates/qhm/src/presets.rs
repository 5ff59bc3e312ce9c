//! Built-in scenarios, one per figure-style dataset.

use std::path::Path;

use crate::scenario::{parse_scenario, Scenario, ScenarioError};

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub text: &'static str,
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "universal-sweep",
        description: "separated two-level machine, engine/refrigerator sweep over Omega",
        text: include_str!("../presets/universal-sweep.toml"),
    },
    Preset {
        name: "multilevel-boost",
        description: "N-level enhancement for three dipole alignments, N = 2..11",
        text: include_str!("../presets/multilevel-boost.toml"),
    },
    Preset {
        name: "piston-states",
        description: "work capacity of Fock, coherent, thermal, squeezed and displaced-thermal pistons under damping",
        text: include_str!("../presets/piston-states.toml"),
    },
    Preset {
        name: "cooler-detuning",
        description: "dressed-state cooler heat current over the laser detuning",
        text: include_str!("../presets/cooler-detuning.toml"),
    },
    Preset {
        name: "nsm-work",
        description: "first-cycle work from a T = 0 Lorentzian bath over Omega*t_c in [3, 100]",
        text: include_str!("../presets/nsm-work.toml"),
    },
    Preset {
        name: "cooling-speed",
        description: "cold-bath temperature for gamma = 0 (finite-time zero) and gamma = 1",
        text: include_str!("../presets/cooling-speed.toml"),
    },
];

pub fn find(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

impl Preset {
    pub fn scenario(&self) -> Result<Scenario, ScenarioError> {
        parse_scenario(self.text, Path::new("."))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalogue_round_trips() {
        assert!(PRESETS.len() >= 6);
        for p in PRESETS {
            let s = p.scenario().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert!(p.text.starts_with('#'), "{} has no header comment", p.name);
            assert!(p.text.contains("Units:"), "{} documents no units", p.name);
            assert!(!s.frequency_unit.is_empty());
        }
    }

    #[test]
    fn lookup() {
        assert_eq!(find("cooling-speed").unwrap().name, "cooling-speed");
        assert!(find("nope").is_none());
    }
}
