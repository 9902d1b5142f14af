//! Constrained quadratic models over binary variables.
//!
//! A [`CqmModel`] holds a quadratic objective, labelled linear/quadratic
//! constraints and a set of fixed variables. Quadratic terms are stored with
//! the smaller index first; a diagonal term `x_i·x_i` collapses to the linear
//! term `x_i` since the variables are binary.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::{self, Write as _};

use thiserror::Error;

/// Slack allowed when comparing a constraint's left-hand side against its
/// right-hand side.
pub const FEASIBILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CqmError {
    #[error("assignment has {found} variables, model has {expected}")]
    LengthMismatch { found: usize, expected: usize },
    #[error("variable {var} out of range for a model with {len} variables")]
    VariableOutOfRange { var: usize, len: usize },
    #[error("duplicate constraint label `{0}`")]
    DuplicateLabel(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Le,
    Eq,
    Ge,
}

impl Sense {
    fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Eq => "==",
            Sense::Ge => ">=",
        }
    }
}

/// Linear plus quadratic terms over binary variables with a constant offset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QuadraticExpr {
    pub offset: f64,
    pub linear: BTreeMap<usize, f64>,
    pub quadratic: BTreeMap<(usize, usize), f64>,
}

impl QuadraticExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_linear(&mut self, var: usize, coeff: f64) {
        *self.linear.entry(var).or_insert(0.0) += coeff;
    }

    pub fn add_quadratic(&mut self, a: usize, b: usize, coeff: f64) {
        if a == b {
            self.add_linear(a, coeff);
        } else {
            let key = if a < b { (a, b) } else { (b, a) };
            *self.quadratic.entry(key).or_insert(0.0) += coeff;
        }
    }

    pub fn evaluate(&self, a: &[u8]) -> f64 {
        let mut total = self.offset;
        for (&v, &c) in &self.linear {
            if a[v] != 0 {
                total += c;
            }
        }
        for (&(u, v), &c) in &self.quadratic {
            if a[u] != 0 && a[v] != 0 {
                total += c;
            }
        }
        total
    }

    fn max_var(&self) -> Option<usize> {
        let l = self.linear.keys().next_back().copied();
        let q = self.quadratic.keys().map(|&(_, b)| b).max();
        l.max(q)
    }

    fn max_abs_coefficient(&self) -> f64 {
        self.linear
            .values()
            .chain(self.quadratic.values())
            .fold(0.0, |m, c| f64::max(m, c.abs()))
    }

    /// Substitutes fixed values; constants fold into the offset.
    fn substitute(&self, fixed: &BTreeMap<usize, u8>) -> Self {
        let mut out = Self {
            offset: self.offset,
            ..Self::default()
        };
        for (&v, &c) in &self.linear {
            match fixed.get(&v) {
                Some(&1) => out.offset += c,
                Some(_) => {}
                None => out.add_linear(v, c),
            }
        }
        for (&(u, v), &c) in &self.quadratic {
            match (fixed.get(&u).copied(), fixed.get(&v).copied()) {
                (Some(0), _) | (_, Some(0)) => {}
                (Some(_), Some(_)) => out.offset += c,
                (Some(_), None) => out.add_linear(v, c),
                (None, Some(_)) => out.add_linear(u, c),
                (None, None) => out.add_quadratic(u, v, c),
            }
        }
        out
    }

    fn dump_terms(&self, out: &mut String) {
        for (v, c) in &self.linear {
            let _ = writeln!(out, "  {c:+} x{v}");
        }
        for ((u, v), c) in &self.quadratic {
            let _ = writeln!(out, "  {c:+} x{u}*x{v}");
        }
        if self.offset != 0.0 {
            let _ = writeln!(out, "  {:+}", self.offset);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub label: String,
    pub lhs: QuadraticExpr,
    pub sense: Sense,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(label: impl Into<String>, lhs: QuadraticExpr, sense: Sense, rhs: f64) -> Self {
        Self {
            label: label.into(),
            lhs,
            sense,
            rhs,
        }
    }

    /// Amount by which `lhs` misses `rhs` in the constraint's sense; zero when
    /// satisfied within [`FEASIBILITY_TOLERANCE`].
    pub fn violation(&self, lhs: f64) -> f64 {
        let raw = match self.sense {
            Sense::Le => f64::max(0.0, lhs - self.rhs),
            Sense::Eq => (lhs - self.rhs).abs(),
            Sense::Ge => f64::max(0.0, self.rhs - lhs),
        };
        if raw <= FEASIBILITY_TOLERANCE {
            0.0
        } else {
            raw
        }
    }
}

/// Binary assignment, one byte per variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(pub Vec<u8>);

impl Assignment {
    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn set(&mut self, var: usize, value: bool) {
        self.0[var] = value as u8;
    }

    pub fn get(&self, var: usize) -> bool {
        self.0[var] != 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CqmModel {
    num_vars: usize,
    objective: QuadraticExpr,
    constraints: Vec<Constraint>,
    fixed: BTreeMap<usize, u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintStatus {
    pub label: String,
    pub lhs: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub constraints: Vec<ConstraintStatus>,
    /// Fixed variables whose assigned value disagrees with the fix.
    pub fixed_violations: Vec<usize>,
}

impl FeasibilityReport {
    pub fn all_satisfied(&self) -> bool {
        self.fixed_violations.is_empty() && self.constraints.iter().all(|c| c.satisfied)
    }

    pub fn violated(&self) -> impl Iterator<Item = &ConstraintStatus> {
        self.constraints.iter().filter(|c| !c.satisfied)
    }

    pub fn status(&self, label: &str) -> Option<&ConstraintStatus> {
        self.constraints.iter().find(|c| c.label == label)
    }
}

impl CqmModel {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: QuadraticExpr::new(),
            constraints: Vec::new(),
            fixed: BTreeMap::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn objective(&self) -> &QuadraticExpr {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn fixed(&self) -> &BTreeMap<usize, u8> {
        &self.fixed
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    fn check_var(&self, var: usize) -> Result<(), CqmError> {
        if var < self.num_vars {
            Ok(())
        } else {
            Err(CqmError::VariableOutOfRange {
                var,
                len: self.num_vars,
            })
        }
    }

    pub fn add_linear(&mut self, var: usize, coeff: f64) -> Result<(), CqmError> {
        self.check_var(var)?;
        self.objective.add_linear(var, coeff);
        Ok(())
    }

    pub fn add_quadratic(&mut self, a: usize, b: usize, coeff: f64) -> Result<(), CqmError> {
        self.check_var(a)?;
        self.check_var(b)?;
        self.objective.add_quadratic(a, b, coeff);
        Ok(())
    }

    pub fn set_objective(&mut self, objective: QuadraticExpr) -> Result<(), CqmError> {
        if let Some(v) = objective.max_var() {
            self.check_var(v)?;
        }
        self.objective = objective;
        Ok(())
    }

    pub fn add_constraint(&mut self, constraint: Constraint) -> Result<(), CqmError> {
        if self.constraints.iter().any(|c| c.label == constraint.label) {
            return Err(CqmError::DuplicateLabel(constraint.label));
        }
        if let Some(v) = constraint.lhs.max_var() {
            self.check_var(v)?;
        }
        self.constraints.push(constraint);
        Ok(())
    }

    pub fn fix(&mut self, var: usize, value: bool) -> Result<(), CqmError> {
        self.check_var(var)?;
        self.fixed.insert(var, value as u8);
        Ok(())
    }

    fn check_len(&self, a: &Assignment) -> Result<(), CqmError> {
        if a.len() == self.num_vars {
            Ok(())
        } else {
            Err(CqmError::LengthMismatch {
                found: a.len(),
                expected: self.num_vars,
            })
        }
    }

    pub fn evaluate_objective(&self, a: &Assignment) -> Result<f64, CqmError> {
        self.check_len(a)?;
        Ok(self.objective.evaluate(&a.0))
    }

    pub fn check_feasibility(&self, a: &Assignment) -> Result<FeasibilityReport, CqmError> {
        self.check_len(a)?;
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let lhs = c.lhs.evaluate(&a.0);
                ConstraintStatus {
                    label: c.label.clone(),
                    lhs,
                    satisfied: c.violation(lhs) == 0.0,
                }
            })
            .collect();
        let fixed_violations = self
            .fixed
            .iter()
            .filter(|&(&v, &val)| a.0[v] != val)
            .map(|(&v, _)| v)
            .collect();
        Ok(FeasibilityReport {
            constraints,
            fixed_violations,
        })
    }

    /// Objective plus `penalty_weight` times the sum of squared constraint
    /// violations. A fixed variable set to the wrong value counts as a unit
    /// equality violation.
    pub fn penalized_energy(&self, a: &Assignment, penalty_weight: f64) -> Result<f64, CqmError> {
        let objective = self.evaluate_objective(a)?;
        let mut penalty = 0.0;
        for c in &self.constraints {
            let v = c.violation(c.lhs.evaluate(&a.0));
            penalty += v * v;
        }
        for (&v, &val) in &self.fixed {
            if a.0[v] != val {
                penalty += 1.0;
            }
        }
        Ok(objective + penalty_weight * penalty)
    }

    /// `10 × max |objective coefficient| × variable count`.
    pub fn default_penalty_weight(&self) -> f64 {
        let max = self.objective.max_abs_coefficient();
        let max = if max > 0.0 { max } else { 1.0 };
        10.0 * max * self.num_vars.max(1) as f64
    }

    /// Returns an equivalent model in which fixed variables no longer appear
    /// in the objective or constraints. Evaluations agree with `self` on every
    /// assignment consistent with the fixes.
    pub fn reduce(&self) -> Self {
        let objective = self.objective.substitute(&self.fixed);
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let mut lhs = c.lhs.substitute(&self.fixed);
                let rhs = c.rhs - lhs.offset;
                lhs.offset = 0.0;
                Constraint {
                    label: c.label.clone(),
                    lhs,
                    sense: c.sense,
                    rhs,
                }
            })
            .collect();
        Self {
            num_vars: self.num_vars,
            objective,
            constraints,
            fixed: self.fixed.clone(),
        }
    }

    /// Plain-text dump, one line per term or constraint header. For inspection
    /// only.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "variables {}", self.num_vars);
        for (v, val) in &self.fixed {
            let _ = writeln!(out, "fix x{v} = {val}");
        }
        let _ = writeln!(out, "minimize");
        self.objective.dump_terms(&mut out);
        for c in &self.constraints {
            let _ = writeln!(out, "constraint {} {} {}", c.label, c.sense.symbol(), c.rhs);
            c.lhs.dump_terms(&mut out);
        }
        out
    }
}

impl fmt::Display for CqmModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sum_le_one() -> CqmModel {
        let mut m = CqmModel::new(2);
        let mut lhs = QuadraticExpr::new();
        lhs.add_linear(0, 1.0);
        lhs.add_linear(1, 1.0);
        m.add_constraint(Constraint::new("pair", lhs, Sense::Le, 1.0)).unwrap();
        m
    }

    #[test]
    fn empty_objective_is_zero() {
        let m = CqmModel::new(3);
        assert_eq!(m.evaluate_objective(&Assignment(vec![1, 0, 1])).unwrap(), 0.0);
    }

    #[test]
    fn linear_plus_quadratic() {
        let mut m = CqmModel::new(2);
        m.add_linear(0, 3.0).unwrap();
        m.add_quadratic(0, 1, 2.0).unwrap();
        assert_eq!(m.evaluate_objective(&Assignment(vec![1, 1])).unwrap(), 5.0);
        assert_eq!(m.evaluate_objective(&Assignment(vec![1, 0])).unwrap(), 3.0);
    }

    #[test]
    fn diagonal_quadratic_folds_to_linear() {
        let mut m = CqmModel::new(2);
        m.add_quadratic(1, 1, 4.0).unwrap();
        assert!(m.objective().quadratic.is_empty());
        assert_eq!(m.objective().linear[&1], 4.0);
    }

    #[test]
    fn length_mismatch() {
        let m = CqmModel::new(2);
        assert_eq!(
            m.evaluate_objective(&Assignment(vec![0])),
            Err(CqmError::LengthMismatch { found: 1, expected: 2 })
        );
        assert!(m.check_feasibility(&Assignment(vec![0; 3])).is_err());
        assert!(m.penalized_energy(&Assignment(vec![]), 1.0).is_err());
    }

    #[test]
    fn out_of_range_and_duplicate_label() {
        let mut m = sum_le_one();
        assert!(matches!(m.add_linear(2, 1.0), Err(CqmError::VariableOutOfRange { .. })));
        let err = m.add_constraint(Constraint::new("pair", QuadraticExpr::new(), Sense::Eq, 0.0));
        assert_eq!(err, Err(CqmError::DuplicateLabel("pair".into())));
    }

    #[test]
    fn le_constraint_feasibility() {
        let m = sum_le_one();
        let ok = m.check_feasibility(&Assignment(vec![1, 0])).unwrap();
        assert!(ok.all_satisfied());
        let bad = m.check_feasibility(&Assignment(vec![1, 1])).unwrap();
        assert!(!bad.all_satisfied());
        assert_eq!(bad.status("pair").unwrap().lhs, 2.0);
    }

    #[test]
    fn one_hot_equality() {
        let mut m = CqmModel::new(4);
        let mut lhs = QuadraticExpr::new();
        for v in 0..4 {
            lhs.add_linear(v, 1.0);
        }
        m.add_constraint(Constraint::new("one-hot", lhs, Sense::Eq, 1.0)).unwrap();
        assert!(m.check_feasibility(&Assignment(vec![0, 0, 1, 0])).unwrap().all_satisfied());
        assert!(!m.check_feasibility(&Assignment(vec![0, 1, 1, 0])).unwrap().all_satisfied());
    }

    #[test]
    fn penalty_of_equality_violated_by_two() {
        let mut m = CqmModel::new(3);
        let mut lhs = QuadraticExpr::new();
        for v in 0..3 {
            lhs.add_linear(v, 1.0);
        }
        m.add_constraint(Constraint::new("eq", lhs, Sense::Eq, 1.0)).unwrap();
        assert_eq!(m.penalized_energy(&Assignment(vec![1, 1, 1]), 10.0).unwrap(), 40.0);
    }

    #[test]
    fn fixed_variable_mismatch_is_reported_and_penalized() {
        let mut m = CqmModel::new(2);
        m.fix(0, true).unwrap();
        let r = m.check_feasibility(&Assignment(vec![0, 0])).unwrap();
        assert_eq!(r.fixed_violations, vec![0]);
        assert_eq!(m.penalized_energy(&Assignment(vec![0, 0]), 3.0).unwrap(), 3.0);
    }

    #[test]
    fn dump_lists_terms_and_constraints() {
        let mut m = sum_le_one();
        m.add_quadratic(0, 1, -2.5).unwrap();
        m.fix(0, true).unwrap();
        let text = m.dump();
        assert!(text.contains("variables 2"));
        assert!(text.contains("fix x0 = 1"));
        assert!(text.contains("-2.5 x0*x1"));
        assert!(text.contains("constraint pair <= 1"));
    }

    fn arb_model() -> impl Strategy<Value = (CqmModel, Vec<u8>)> {
        (1usize..=6).prop_flat_map(|n| {
            let lin = proptest::collection::vec((0..n, -5i32..=5), 0..8);
            let quad = proptest::collection::vec((0..n, 0..n, -5i32..=5), 0..10);
            let cons = proptest::collection::vec(
                (
                    proptest::collection::vec((0..n, -3i32..=3), 0..4),
                    proptest::collection::vec((0..n, 0..n, -3i32..=3), 0..3),
                    0u8..3,
                    -3i32..=3,
                ),
                0..4,
            );
            let fixed = proptest::collection::vec((0..n, any::<bool>()), 0..3);
            let a = proptest::collection::vec(0u8..=1, n);
            (Just(n), lin, quad, cons, fixed, a).prop_map(|(n, lin, quad, cons, fixed, a)| {
                let mut m = CqmModel::new(n);
                for (v, c) in lin {
                    m.add_linear(v, c as f64).unwrap();
                }
                for (u, v, c) in quad {
                    m.add_quadratic(u, v, c as f64).unwrap();
                }
                for (k, (l, q, s, rhs)) in cons.into_iter().enumerate() {
                    let mut e = QuadraticExpr::new();
                    for (v, c) in l {
                        e.add_linear(v, c as f64);
                    }
                    for (u, v, c) in q {
                        e.add_quadratic(u, v, c as f64);
                    }
                    let sense = [Sense::Le, Sense::Eq, Sense::Ge][s as usize];
                    m.add_constraint(Constraint::new(alloc::format!("c{k}"), e, sense, rhs as f64))
                        .unwrap();
                }
                for (v, b) in fixed {
                    m.fix(v, b).unwrap();
                }
                (m, a)
            })
        })
    }

    // Term-by-term oracle: expands every product explicitly rather than going
    // through `QuadraticExpr::evaluate`.
    fn naive_expr(e: &QuadraticExpr, a: &[u8]) -> f64 {
        let mut s = e.offset;
        for (v, c) in &e.linear {
            s += c * a[*v] as f64;
        }
        for ((u, v), c) in &e.quadratic {
            s += c * (a[*u] as f64) * (a[*v] as f64);
        }
        s
    }

    proptest! {
        #[test]
        fn objective_matches_naive_sum((m, a) in arb_model()) {
            let got = m.evaluate_objective(&Assignment(a.clone())).unwrap();
            prop_assert_eq!(got, naive_expr(m.objective(), &a));
        }

        #[test]
        fn penalized_energy_matches_formula((m, a) in arb_model(), w in 0.5f64..20.0) {
            let asg = Assignment(a.clone());
            let mut pen = 0.0;
            for c in m.constraints() {
                let lhs = naive_expr(&c.lhs, &a);
                let v = match c.sense {
                    Sense::Le => (lhs - c.rhs).max(0.0),
                    Sense::Eq => (lhs - c.rhs).abs(),
                    Sense::Ge => (c.rhs - lhs).max(0.0),
                };
                pen += v * v;
            }
            for (v, val) in m.fixed() {
                if a[*v] != *val { pen += 1.0; }
            }
            let expected = naive_expr(m.objective(), &a) + w * pen;
            prop_assert!((m.penalized_energy(&asg, w).unwrap() - expected).abs() < 1e-9);
            if m.check_feasibility(&asg).unwrap().all_satisfied() {
                prop_assert_eq!(m.penalized_energy(&asg, w).unwrap(), m.evaluate_objective(&asg).unwrap());
            }
        }

        #[test]
        fn reduction_preserves_evaluations((m, mut a) in arb_model()) {
            for (v, val) in m.fixed() { a[*v] = *val; }
            let r = m.reduce();
            let asg = Assignment(a);
            prop_assert_eq!(r.evaluate_objective(&asg).unwrap(), m.evaluate_objective(&asg).unwrap());
            let fr = r.check_feasibility(&asg).unwrap();
            let fm = m.check_feasibility(&asg).unwrap();
            for (x, y) in fr.constraints.iter().zip(&fm.constraints) {
                prop_assert_eq!(x.satisfied, y.satisfied);
            }
            for c in r.constraints() {
                for v in c.lhs.linear.keys() { prop_assert!(!m.fixed().contains_key(v)); }
                for (u, v) in c.lhs.quadratic.keys() {
                    prop_assert!(!m.fixed().contains_key(u) && !m.fixed().contains_key(v));
                }
            }
        }
    }
}
