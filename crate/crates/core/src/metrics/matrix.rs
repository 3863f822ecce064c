use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::FailureMode;
use crate::perturbation::{Axis, InitialState, Variation};

/// Row and column order of every matrix.
pub fn matrix_cell_order() -> [InitialState; 3] {
    [InitialState::OnTable, InitialState::InContainer, InitialState::Absent]
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MatrixCell {
    pub tally: BTreeMap<FailureMode, u32>,
    pub modal: Option<FailureMode>,
}

impl MatrixCell {
    fn add(&mut self, m: FailureMode) {
        *self.tally.entry(m).or_insert(0) += 1;
        let best = self.tally.iter().map(|(_, n)| *n).max().unwrap_or(0);
        self.modal = self.tally.iter().find(|(_, n)| **n == best).map(|(m, _)| *m);
    }

    pub fn total(&self) -> u32 {
        self.tally.values().sum()
    }
}

/// A 3×3 grid of failure-mode tallies keyed by the initial state of two
/// instances. `cells[row][col]` follows `matrix_cell_order`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticMatrix {
    pub name: String,
    pub policy_id: String,
    pub row_instance: String,
    pub col_instance: String,
    pub cells: Vec<Vec<MatrixCell>>,
}

impl DiagnosticMatrix {
    pub fn cell(&self, row: InitialState, col: InitialState) -> &MatrixCell {
        let i = |s| matrix_cell_order().iter().position(|x| *x == s).expect("three states");
        &self.cells[i(row)][i(col)]
    }
}

/// Initial states the variation's latest state intervention gives `row`
/// and `col`; instances it does not mention stay on the table.
pub fn intervention_cell(v: &Variation, row: &str, col: &str) -> Option<(InitialState, InitialState)> {
    let spec = v.perturbation.iter().rev().find(|p| p.axis == Axis::StateIntervention)?;
    let per: BTreeMap<String, InitialState> =
        serde_json::from_value(spec.params.get("per_instance")?.clone()).ok()?;
    let get = |n: &str| per.get(n).copied().unwrap_or(InitialState::OnTable);
    Some((get(row), get(col)))
}

pub fn build_matrix(
    name: &str,
    policy_id: &str,
    row_instance: &str,
    col_instance: &str,
    labelled: &[(InitialState, InitialState, FailureMode)],
) -> DiagnosticMatrix {
    let order = matrix_cell_order();
    let mut cells = alloc::vec![alloc::vec![MatrixCell::default(); 3]; 3];
    for (r, c, m) in labelled {
        let ri = order.iter().position(|x| x == r).expect("three states");
        let ci = order.iter().position(|x| x == c).expect("three states");
        cells[ri][ci].add(*m);
    }
    DiagnosticMatrix {
        name: name.into(),
        policy_id: policy_id.into(),
        row_instance: row_instance.into(),
        col_instance: col_instance.into(),
        cells,
    }
}
