use serde::{Deserialize, Serialize};

use crate::approx::SegmentTable;
use crate::netmodel::{CellId, NetworkInstance, UeId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    SumLoad,
    MaxLoad,
}

impl Objective {
    /// Objective value of a load vector.
    pub fn of(&self, load: &[f64]) -> f64 {
        match self {
            Objective::SumLoad => load.iter().sum(),
            Objective::MaxLoad => load.iter().copied().fold(0.0, f64::max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarRole {
    Load { cell: CellId },
    Interference { ue: UeId, option: usize },
    Choice { ue: UeId, option: usize },
    Epigraph,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub role: VarRole,
    pub lower: f64,
    /// `+inf` for unbounded.
    pub upper: f64,
    pub binary: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(&self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowRole {
    /// `x_i - sum (s w + mu k) = 0`.
    LoadDefinition { cell: CellId },
    /// `w - sum p g x - T k >= -T`.
    InterferenceLink { ue: UeId, option: usize },
    /// `w - T k >= W_lo - T`.
    InterferenceFloor { ue: UeId, option: usize },
    /// `sum k = 1`.
    Selection { ue: UeId },
    /// `t - x_i >= 0`.
    Epigraph { cell: CellId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    /// `(variable index, coefficient)`, no zero coefficients.
    pub terms: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub role: RowRole,
}

impl Constraint {
    pub fn coefficient(&self, var: usize) -> f64 {
        self.terms
            .iter()
            .find(|(v, _)| *v == var)
            .map_or(0.0, |&(_, c)| c)
    }
}

/// Linearized association model. Variables are laid out as all `x`, then
/// `w` and `k` per (UE, option), then `t` for the max-load objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MilpModel {
    pub objective: Objective,
    pub n_cells: usize,
    /// Cells of every option of every UE, in canonical option order.
    pub options: Vec<Vec<Vec<CellId>>>,
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
    /// Minimized linear objective.
    pub cost: Vec<(usize, f64)>,
    pub lb_constraints: bool,
    /// Index of the first `w` variable of each UE.
    pub(crate) ue_offset: Vec<usize>,
}

impl MilpModel {
    pub fn n_ues(&self) -> usize {
        self.options.len()
    }

    pub fn n_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.binary).count()
    }

    pub fn load_var(&self, cell: CellId) -> usize {
        cell
    }

    pub fn interference_var(&self, ue: UeId, option: usize) -> usize {
        self.ue_offset[ue] + 2 * option
    }

    pub fn choice_var(&self, ue: UeId, option: usize) -> usize {
        self.ue_offset[ue] + 2 * option + 1
    }

    pub fn epigraph_var(&self) -> Option<usize> {
        match self.objective {
            Objective::MaxLoad => Some(self.variables.len() - 1),
            Objective::SumLoad => None,
        }
    }

    /// Assembles a model from its parts, recomputing the variable layout.
    pub(crate) fn assemble(
        objective: Objective,
        n_cells: usize,
        options: Vec<Vec<Vec<CellId>>>,
        variables: Vec<Variable>,
        constraints: Vec<Constraint>,
        cost: Vec<(usize, f64)>,
        lb_constraints: bool,
    ) -> Self {
        let mut ue_offset = Vec::with_capacity(options.len());
        let mut next = n_cells;
        for opts in &options {
            ue_offset.push(next);
            next += 2 * opts.len();
        }
        Self {
            objective,
            n_cells,
            options,
            variables,
            constraints,
            cost,
            lb_constraints,
            ue_offset,
        }
    }
}

fn var(name: String, role: VarRole, lower: f64, upper: f64, binary: bool) -> Variable {
    Variable {
        name,
        role,
        lower,
        upper,
        binary,
    }
}

fn push_term(terms: &mut Vec<(usize, f64)>, v: usize, c: f64) {
    if c != 0.0 {
        terms.push((v, c));
    }
}

/// Builds the linearized model from a segment table covering every
/// (UE, option).
pub fn build_milp(
    net: &NetworkInstance,
    segments: &SegmentTable,
    objective: Objective,
    lb_constraints: bool,
) -> Result<MilpModel> {
    let n = net.n_cells();
    let options: Vec<Vec<Vec<CellId>>> = (0..net.n_ues()).map(|j| net.options(j)).collect();
    if segments.per_ue.len() != options.len() {
        return Err(Error::MissingSegment {
            ue: segments.per_ue.len().min(options.len()),
            option: 0,
        });
    }
    for (j, opts) in options.iter().enumerate() {
        for (l, cells) in opts.iter().enumerate() {
            if segments.get(j, l)?.cells != *cells {
                return Err(Error::MissingSegment { ue: j, option: l });
            }
        }
        if segments.per_ue[j].len() != opts.len() {
            return Err(Error::MissingSegment {
                ue: j,
                option: opts.len(),
            });
        }
    }

    let mut variables: Vec<Variable> = (0..n)
        .map(|i| var(format!("x_{i}"), VarRole::Load { cell: i }, 0.0, 1.0, false))
        .collect();
    for (j, opts) in options.iter().enumerate() {
        for l in 0..opts.len() {
            variables.push(var(
                format!("w_{j}_{l}"),
                VarRole::Interference { ue: j, option: l },
                0.0,
                f64::INFINITY,
                false,
            ));
            variables.push(var(
                format!("k_{j}_{l}"),
                VarRole::Choice { ue: j, option: l },
                0.0,
                1.0,
                true,
            ));
        }
    }
    if objective == Objective::MaxLoad {
        variables.push(var("t".into(), VarRole::Epigraph, 0.0, 1.0, false));
    }
    let proto = MilpModel::assemble(
        objective,
        n,
        options,
        Vec::new(),
        Vec::new(),
        Vec::new(),
        lb_constraints,
    );

    let mut constraints = Vec::new();
    for i in 0..n {
        let mut terms = vec![(i, 1.0)];
        for (j, opts) in proto.options.iter().enumerate() {
            for (l, cells) in opts.iter().enumerate() {
                if cells.binary_search(&i).is_ok() {
                    let seg = &segments.per_ue[j][l].segment;
                    push_term(&mut terms, proto.interference_var(j, l), -seg.slope);
                    push_term(&mut terms, proto.choice_var(j, l), -seg.intercept);
                }
            }
        }
        constraints.push(Constraint {
            terms,
            sense: Sense::Eq,
            rhs: 0.0,
            role: RowRole::LoadDefinition { cell: i },
        });
    }
    for (j, opts) in proto.options.iter().enumerate() {
        for (l, cells) in opts.iter().enumerate() {
            let cap = segments.per_ue[j][l].segment.cap;
            let mut terms = vec![(proto.interference_var(j, l), 1.0)];
            for (i, &r) in net.rx_at_ue(j).iter().enumerate() {
                if cells.binary_search(&i).is_err() {
                    push_term(&mut terms, i, -r);
                }
            }
            push_term(&mut terms, proto.choice_var(j, l), -cap);
            constraints.push(Constraint {
                terms,
                sense: Sense::Ge,
                rhs: -cap,
                role: RowRole::InterferenceLink { ue: j, option: l },
            });
        }
    }
    if lb_constraints {
        for (j, opts) in proto.options.iter().enumerate() {
            for l in 0..opts.len() {
                let seg = &segments.per_ue[j][l].segment;
                let mut terms = vec![(proto.interference_var(j, l), 1.0)];
                push_term(&mut terms, proto.choice_var(j, l), -seg.cap);
                constraints.push(Constraint {
                    terms,
                    sense: Sense::Ge,
                    rhs: seg.w_lo - seg.cap,
                    role: RowRole::InterferenceFloor { ue: j, option: l },
                });
            }
        }
    }
    for (j, opts) in proto.options.iter().enumerate() {
        constraints.push(Constraint {
            terms: (0..opts.len()).map(|l| (proto.choice_var(j, l), 1.0)).collect(),
            sense: Sense::Eq,
            rhs: 1.0,
            role: RowRole::Selection { ue: j },
        });
    }
    let cost = match objective {
        Objective::SumLoad => (0..n).map(|i| (i, 1.0)).collect(),
        Objective::MaxLoad => {
            let t = variables.len() - 1;
            for i in 0..n {
                constraints.push(Constraint {
                    terms: vec![(t, 1.0), (i, -1.0)],
                    sense: Sense::Ge,
                    rhs: 0.0,
                    role: RowRole::Epigraph { cell: i },
                });
            }
            vec![(t, 1.0)]
        }
    };
    Ok(MilpModel::assemble(
        objective,
        n,
        proto.options,
        variables,
        constraints,
        cost,
        lb_constraints,
    ))
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::approx::{LinearizationMode, SegmentTable};
    use crate::netmodel::tests::two_by_two;

    pub(crate) fn small_model(objective: Objective, lb: bool) -> (NetworkInstance, MilpModel) {
        let net = two_by_two([[1.0, 0.2], [0.3, 0.8]], 0.3);
        let net = net
            .with_candidates(vec![vec![0, 1], vec![1]])
            .unwrap();
        let seg = SegmentTable::build(&net, None, LinearizationMode::Secant).unwrap();
        let m = build_milp(&net, &seg, objective, lb).unwrap();
        (net, m)
    }

    fn count(m: &MilpModel) -> (usize, usize, usize, usize, usize) {
        let mut c = (0, 0, 0, 0, 0);
        for r in &m.constraints {
            match r.role {
                RowRole::LoadDefinition { .. } => c.0 += 1,
                RowRole::InterferenceLink { .. } => c.1 += 1,
                RowRole::InterferenceFloor { .. } => c.2 += 1,
                RowRole::Selection { .. } => c.3 += 1,
                RowRole::Epigraph { .. } => c.4 += 1,
            }
        }
        c
    }

    fn one_ue_two_options(objective: Objective, lb: bool) -> MilpModel {
        let net = two_by_two([[1.0, 0.2], [0.3, 0.8]], 0.3);
        let net = net.with_candidates(vec![vec![0, 1], vec![1]]).unwrap();
        let cells = net.cells().to_vec();
        let ue = net.ues()[0].clone();
        let single = NetworkInstance::new(
            cells,
            vec![ue],
            vec![vec![1.0], vec![0.3]],
            net.noise_power(),
            net.num_ru(),
            net.ru_bandwidth(),
        )
        .unwrap();
        let seg = SegmentTable::build(&single, None, LinearizationMode::Secant).unwrap();
        build_milp(&single, &seg, objective, lb).unwrap()
    }

    #[test]
    fn structural_counts() {
        let m = one_ue_two_options(Objective::SumLoad, false);
        assert_eq!(m.variables.len(), 6);
        assert_eq!(m.n_binaries(), 2);
        assert_eq!(m.constraints.len(), 5);
        assert_eq!(count(&m), (2, 2, 0, 1, 0));

        let m = one_ue_two_options(Objective::MaxLoad, false);
        assert_eq!(m.variables.len(), 7);
        assert_eq!(m.constraints.len(), 7);
        assert_eq!(count(&m), (2, 2, 0, 1, 2));

        let m = one_ue_two_options(Objective::SumLoad, true);
        assert_eq!(m.variables.len(), 6);
        assert_eq!(m.constraints.len(), 7);
        assert_eq!(count(&m), (2, 2, 2, 1, 0));
    }

    #[test]
    fn every_option_contains_home() {
        let (net, m) = small_model(Objective::SumLoad, true);
        for (j, opts) in m.options.iter().enumerate() {
            for o in opts {
                assert!(o.contains(&net.ues()[j].home_cell));
            }
        }
        let sel: Vec<_> = m
            .constraints
            .iter()
            .filter(|r| matches!(r.role, RowRole::Selection { .. }))
            .collect();
        assert_eq!(sel.len(), net.n_ues());
    }

    #[test]
    fn variable_layout() {
        let (_, m) = small_model(Objective::MaxLoad, false);
        assert_eq!(m.variables[m.interference_var(0, 1)].name, "w_0_1");
        assert_eq!(m.variables[m.choice_var(1, 0)].name, "k_1_0");
        assert_eq!(m.variables[m.epigraph_var().unwrap()].name, "t");
    }

    #[test]
    fn missing_segment_rejected() {
        let (net, _) = small_model(Objective::SumLoad, false);
        let mut seg = SegmentTable::build(&net, None, LinearizationMode::Secant).unwrap();
        seg.per_ue[0].pop();
        assert!(matches!(
            build_milp(&net, &seg, Objective::SumLoad, false),
            Err(Error::MissingSegment { ue: 0, option: 1 })
        ));
    }
}
