//! 3-CNF formulas and the network gadget that reduces 3-SAT to load
//! feasibility.

use std::fmt;

use super::{Cell, CellKind, CellId, NetworkInstance, UeId, UserEquipment};
use crate::{Error, Result};

/// A literal over variables numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Self { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Self { var, negated: true }
    }

    pub fn eval(&self, assignment: &[bool]) -> bool {
        assignment[self.var - 1] != self.negated
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: usize,
    pub clauses: Vec<[Literal; 3]>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<[Literal; 3]>) -> Result<Self> {
        let f = Self { num_vars, clauses };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_vars == 0 {
            return Err(Error::Dimacs("formula has no variables".into()));
        }
        for (k, clause) in self.clauses.iter().enumerate() {
            if clause.iter().any(|l| l.var == 0 || l.var > self.num_vars) {
                return Err(Error::Dimacs(format!("clause {k} uses an unknown variable")));
            }
            if clause[0] == clause[1] || clause[0] == clause[2] || clause[1] == clause[2] {
                return Err(Error::Dimacs(format!("clause {k} repeats a literal")));
            }
        }
        Ok(())
    }

    /// Parses DIMACS CNF. Every clause must have exactly three literals.
    pub fn from_dimacs(text: &str) -> Result<Self> {
        let mut num_vars = None;
        let mut declared_clauses = None;
        let mut lits: Vec<i64> = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('p') {
                let parts: Vec<&str> = rest.split_whitespace().collect();
                if parts.len() != 3 || parts[0] != "cnf" {
                    return Err(Error::Dimacs(format!("bad problem line `{line}`")));
                }
                let parse = |s: &str| {
                    s.parse::<usize>()
                        .map_err(|_| Error::Dimacs(format!("bad problem line `{line}`")))
                };
                num_vars = Some(parse(parts[1])?);
                declared_clauses = Some(parse(parts[2])?);
                continue;
            }
            for tok in line.split_whitespace() {
                let v: i64 = tok
                    .parse()
                    .map_err(|_| Error::Dimacs(format!("bad literal `{tok}`")))?;
                lits.push(v);
            }
        }
        let num_vars = num_vars.ok_or_else(|| Error::Dimacs("missing problem line".into()))?;
        let mut clauses = Vec::new();
        for chunk in lits.split(|&v| v == 0) {
            if chunk.is_empty() {
                continue;
            }
            if chunk.len() != 3 {
                return Err(Error::Dimacs(format!(
                    "clause {} has {} literals, expected 3",
                    clauses.len(),
                    chunk.len()
                )));
            }
            let lit = |v: i64| Literal {
                var: v.unsigned_abs() as usize,
                negated: v < 0,
            };
            clauses.push([lit(chunk[0]), lit(chunk[1]), lit(chunk[2])]);
        }
        if let Some(declared) = declared_clauses {
            if declared != clauses.len() {
                return Err(Error::Dimacs(format!(
                    "header declares {declared} clauses, found {}",
                    clauses.len()
                )));
            }
        }
        Self::new(num_vars, clauses)
    }

    pub fn is_satisfied_by(&self, assignment: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.eval(assignment)))
    }

    /// A satisfying assignment found by enumerating the truth table.
    pub fn solve_by_truth_table(&self) -> Option<Vec<bool>> {
        (0u64..1 << self.num_vars)
            .map(|bits| (0..self.num_vars).map(|b| bits >> b & 1 == 1).collect::<Vec<_>>())
            .find(|a| self.is_satisfied_by(a))
    }
}

impl fmt::Display for CnfFormula {
    /// DIMACS rendering.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "p cnf {} {}", self.num_vars, self.clauses.len())?;
        for c in &self.clauses {
            for l in c {
                let v = l.var as i64;
                write!(f, "{} ", if l.negated { -v } else { v })?;
            }
            writeln!(f, "0")?;
        }
        Ok(())
    }
}

/// Cell and UE numbering of the reduction gadget.
///
/// Cells: `c_0`, then `c_1..c_n`, then the literal pairs `a_i, a'_i`, then
/// one home cell per clause. UEs: `u_0`, the variable UEs, the clause UEs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GadgetLayout {
    pub num_vars: usize,
    pub num_clauses: usize,
}

impl GadgetLayout {
    pub fn anchor_cell(&self) -> CellId {
        0
    }

    pub fn anchor_ue(&self) -> UeId {
        0
    }

    pub fn variable_home(&self, var: usize) -> CellId {
        var
    }

    /// Cell `a_i` (for the positive literal) or `a'_i` (for the negation).
    pub fn literal_cell(&self, lit: Literal) -> CellId {
        self.num_vars + 2 * lit.var - 1 + usize::from(lit.negated)
    }

    pub fn variable_ue(&self, var: usize) -> UeId {
        var
    }

    /// Clause index from 0.
    pub fn clause_home(&self, clause: usize) -> CellId {
        3 * self.num_vars + 1 + clause
    }

    pub fn clause_ue(&self, clause: usize) -> UeId {
        self.num_vars + 1 + clause
    }

    pub fn n_cells(&self) -> usize {
        3 * self.num_vars + self.num_clauses + 1
    }

    pub fn n_ues(&self) -> usize {
        self.num_vars + self.num_clauses + 1
    }
}

/// Builds the network whose demands can all be met (every fixed-point load
/// at most 1) exactly when `formula` is satisfiable.
pub fn build_sat_reduction(formula: &CnfFormula) -> Result<NetworkInstance> {
    formula.validate()?;
    let n = formula.num_vars;
    let layout = GadgetLayout {
        num_vars: n,
        num_clauses: formula.clauses.len(),
    };
    let (nc, nu) = (layout.n_cells(), layout.n_ues());
    let mut gain = vec![vec![0.0; nu]; nc];
    let mut candidates: Vec<Vec<CellId>> = vec![Vec::new(); nu];

    let u0 = layout.anchor_ue();
    gain[layout.anchor_cell()][u0] = (n + 1) as f64;
    candidates[u0] = vec![layout.anchor_cell()];
    for var in 1..=n {
        let u = layout.variable_ue(var);
        let home = layout.variable_home(var);
        let (a, a_neg) = (
            layout.literal_cell(Literal::pos(var)),
            layout.literal_cell(Literal::neg(var)),
        );
        gain[home][u] = 0.5;
        gain[a][u] = 0.5;
        gain[a_neg][u] = 0.5;
        gain[a][u0] = 1.0;
        gain[a_neg][u0] = 1.0;
        candidates[u] = vec![home, a, a_neg];
    }
    for (k, clause) in formula.clauses.iter().enumerate() {
        let u = layout.clause_ue(k);
        let home = layout.clause_home(k);
        gain[home][u] = 3.0;
        candidates[u] = vec![home];
        for &lit in clause {
            let c = layout.literal_cell(lit);
            gain[c][u] = 1.0;
            candidates[u].push(c);
        }
    }

    let cells = (0..nc)
        .map(|i| Cell {
            id: i,
            kind: CellKind::Macro,
            position: [0.0, 0.0],
            power_per_ru: 1.0,
        })
        .collect();
    let ues = candidates
        .into_iter()
        .enumerate()
        .map(|(j, cands)| UserEquipment {
            id: j,
            position: [0.0, 0.0],
            demand: 1.0,
            home_cell: cands[0],
            candidates: cands,
        })
        .collect();
    NetworkInstance::new(cells, ues, gain, 1.0, 1, 1.0)
}
