//! A fixed reference collection of twenty small models with known
//! compatibility verdicts — ten compatible, ten not — spanning every way a
//! model can pass or fail: commuting interaction factors, remainder-mediated
//! violations that only appear after one, two, or three nested commutators,
//! direct observer-observer couplings that already break the structural
//! form, and three-observer configurations. Used as regression anchors for
//! the deciders and as calibration targets for the randomized screener.

use crate::model::{Model, Partition};

/// One reference model plus its known verdict.
#[derive(Debug, Clone)]
pub struct ZooEntry {
    /// Stable identifier: `C1`..`C10` are compatible, `I1`..`I10` are not.
    pub id: &'static str,
    /// The expected verdict of the exact deciders.
    pub compatible: bool,
    /// What makes this entry interesting.
    pub description: &'static str,
    pub model: Model,
}

fn entry(
    id: &'static str,
    compatible: bool,
    description: &'static str,
    hamiltonian: &str,
    n_sites: usize,
    blocks: &[(&str, &[usize])],
) -> ZooEntry {
    let partition = Partition::new(
        n_sites,
        blocks
            .iter()
            .map(|(name, sites)| (name.to_string(), sites.iter().copied().collect()))
            .collect(),
    )
    .expect("reference partitions are valid");
    let mut model =
        Model::from_text(hamiltonian, partition).expect("reference models are valid");
    model.name = Some(id.to_string());
    model.description = Some(description.to_string());
    ZooEntry { id, compatible, description, model }
}

/// All twenty reference models, `C1`..`C10` then `I1`..`I10`.
pub fn models() -> Vec<ZooEntry> {
    let ab1: &[(&str, &[usize])] = &[("A", &[1]), ("B", &[2])];
    let abc: &[(&str, &[usize])] = &[("A", &[1]), ("B", &[2]), ("C", &[3])];
    vec![
        entry(
            "C1",
            true,
            "both observers couple to one remainder qubit through the same Z factor",
            "Z1 Z3 + X2 Z3",
            3,
            ab1,
        ),
        entry(
            "C2",
            true,
            "uncoupled local fields only; no interaction at all",
            "X1 + 0.5*Z2",
            2,
            ab1,
        ),
        entry(
            "C3",
            true,
            "each observer couples to its own remainder qubit; the remainder term commutes with both factors",
            "Z1 Z3 + X2 Z4 + 0.8*Z3 Z4",
            4,
            ab1,
        ),
        entry(
            "C4",
            true,
            "shared Z factor plus local transverse fields on the observers",
            "Z1 Z3 + Z2 Z3 + 0.7*X1 + 0.9*X2",
            3,
            ab1,
        ),
        entry(
            "C5",
            true,
            "three observers star-coupled through one remainder qubit with a commuting remainder chain",
            "Z1 Z4 + X2 Z4 + Y3 Z4 + 0.6*Z4 Z5",
            5,
            abc,
        ),
        entry(
            "C6",
            true,
            "XX chain between the coupling sites; compatibility only follows from the full closure analysis",
            "Z1 Z3 + X2 Z5 + 0.9*X3 X4 + 0.9*X4 X5",
            5,
            ab1,
        ),
        entry(
            "C7",
            true,
            "mixed XX/ZZ remainder chain whose middle site shields the observers from each other",
            "Z1 Z3 + X2 Z5 + 0.8*X3 X4 + 0.8*Z4 Z5",
            5,
            ab1,
        ),
        entry(
            "C8",
            true,
            "all-Z couplings and remainder terms plus a local field; everything in the hierarchy commutes",
            "Z1 Z3 + Z2 Z4 + 0.5*Z3 Z4 + 0.7*Z3 + 0.4*X1",
            4,
            ab1,
        ),
        entry(
            "C9",
            true,
            "a two-site observer block with two interaction terms of its own",
            "Z1 Z4 + 0.6*Z2 Z4 + X3 Z5 + 0.5*Z4 Z5 + 0.3*X1",
            5,
            &[("A", &[1, 2]), ("B", &[3])],
        ),
        entry(
            "C10",
            true,
            "local observer fields and a purely internal remainder; no observer-remainder coupling",
            "X1 + Y2 + 0.8*Z3 Z4 + 0.5*X3",
            4,
            ab1,
        ),
        entry(
            "I1",
            false,
            "interaction factors X and Z on the same remainder qubit fail the bare commutator",
            "Z1 X3 + X2 Z3",
            3,
            ab1,
        ),
        entry(
            "I2",
            false,
            "bare factors commute; one remainder XX term generates a violation at one nesting",
            "Z1 Z3 + X2 Z4 + X3 X4",
            4,
            ab1,
        ),
        entry(
            "I3",
            false,
            "direct observer-observer coupling; fails the structural form before any commutators",
            "Z1 Z2 + 0.8*Z1 Z3",
            3,
            ab1,
        ),
        entry(
            "I4",
            false,
            "Z and X factors clash on the shared remainder qubit",
            "Z1 Z3 + X2 X3",
            3,
            ab1,
        ),
        entry(
            "I5",
            false,
            "remainder terms cancel the first nesting; the violation appears only at two nestings",
            "Z1 X3 + X2 Z4 + X3 X4 + Z3",
            4,
            ab1,
        ),
        entry(
            "I6",
            false,
            "Y-flavoured clash on the shared remainder qubit",
            "Z1 Y3 + Y2 Z3",
            3,
            ab1,
        ),
        entry(
            "I7",
            false,
            "mixes a direct observer-observer term into an otherwise compatible model",
            "Z1 X2 + Z1 Z3 + X2 Z3",
            3,
            ab1,
        ),
        entry(
            "I8",
            false,
            "one observer carries two interaction terms whose remainder factors clash",
            "Z1 Z3 + X2 Z3 + Y2 X3",
            3,
            ab1,
        ),
        entry(
            "I9",
            false,
            "three observers; two of their remainder factors anticommute on the shared qubit",
            "Z1 Z4 + X2 X4 + Y3 Z5 + 0.6*Z4 Z5",
            5,
            abc,
        ),
        entry(
            "I10",
            false,
            "longer remainder chain delays the violation to three nestings",
            "Z1 Z3 + X2 Z5 + X3 X4 + X4 X5 + Z4",
            5,
            ab1,
        ),
    ]
}

/// The ten entries with `compatible == true`.
pub fn compatible_models() -> Vec<ZooEntry> {
    models().into_iter().filter(|e| e.compatible).collect()
}

/// The ten entries with `compatible == false`.
pub fn incompatible_models() -> Vec<ZooEntry> {
    models().into_iter().filter(|e| !e.compatible).collect()
}

/// Look an entry up by its identifier (`"C1"`, `"I10"`, ...).
pub fn by_id(id: &str) -> Option<ZooEntry> {
    models().into_iter().find(|e| e.id == id)
}
