use super::BenchError;
use crate::lpcore::{Relation, Sense};
use crate::model::ModelSource;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    pub id: usize,
    /// MW.
    pub demand: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    /// Per MW.
    pub cost: f64,
    pub pmax: f64,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub from: usize,
    pub to: usize,
    /// Susceptance in MW per radian: flow is `b·(θ_from − θ_to)`.
    pub b: f64,
    /// Thermal limit, MW.
    pub limit: f64,
    #[serde(default = "yes")]
    pub switchable: bool,
}

/// A DC network.
///
/// ```json
/// {"buses": [{"id": 1, "demand": 0}, {"id": 2, "demand": 50}],
///  "generators": [{"bus": 1, "cost": 10, "pmax": 100}],
///  "lines": [{"from": 1, "to": 2, "b": 500, "limit": 80, "switchable": true}],
///  "slack": 1, "theta_bounds": [-0.5, 0.5]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCase {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub lines: Vec<Line>,
    pub slack: usize,
    /// Radians; `[-π/2, π/2]` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta_bounds: Option<[f64; 2]>,
}

impl NetworkCase {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let case: Self = serde_json::from_str(text).map_err(|e| BenchError::Parse(e.to_string()))?;
        case.validate()?;
        Ok(case)
    }

    pub fn theta(&self) -> (f64, f64) {
        let [lo, hi] = self.theta_bounds.unwrap_or([-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2]);
        (lo, hi)
    }

    fn index(&self) -> BTreeMap<usize, usize> {
        self.buses.iter().enumerate().map(|(k, b)| (b.id, k)).collect()
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidCase(m));
        let idx = self.index();
        if idx.len() != self.buses.len() {
            return bad("duplicate bus id".into());
        }
        if !idx.contains_key(&self.slack) {
            return bad(format!("slack bus {} does not exist", self.slack));
        }
        for (k, l) in self.lines.iter().enumerate() {
            if !idx.contains_key(&l.from) || !idx.contains_key(&l.to) || l.from == l.to {
                return bad(format!("line {k} has invalid endpoints {}-{}", l.from, l.to));
            }
            if !(l.limit > 0.0) || !(l.b.is_finite() && l.b != 0.0) {
                return bad(format!("line {k} needs a positive limit and nonzero susceptance"));
            }
        }
        for (k, g) in self.generators.iter().enumerate() {
            if !idx.contains_key(&g.bus) || !(g.pmax > 0.0) || !g.cost.is_finite() {
                return bad(format!("generator {k} is invalid"));
            }
        }
        if self.buses.iter().any(|b| !b.demand.is_finite()) {
            return bad("non-finite demand".into());
        }
        let (lo, hi) = self.theta();
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return bad("theta bounds must be finite with min < max".into());
        }
        let lines: Vec<usize> = (0..self.lines.len()).collect();
        if !self.connected(&lines) {
            return bad("network is not connected with every line in service".into());
        }
        Ok(())
    }

    /// Whether the lines in `on` connect every bus.
    pub fn connected(&self, on: &[usize]) -> bool {
        let idx = self.index();
        let mut seen = BTreeSet::from([0usize]);
        let mut stack = vec![0usize];
        while let Some(u) = stack.pop() {
            for &k in on {
                let l = &self.lines[k];
                let (a, b) = (idx[&l.from], idx[&l.to]);
                for (x, y) in [(a, b), (b, a)] {
                    if x == u && seen.insert(y) {
                        stack.push(y);
                    }
                }
            }
        }
        seen.len() == self.buses.len()
    }
}

/// Column indices of an OTS source, for reading solutions back.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtsColumns {
    pub generation: Vec<usize>,
    pub flow: Vec<usize>,
    pub theta: Vec<usize>,
    /// `x_l` per line; `None` for lines that cannot be switched.
    pub status: Vec<Option<usize>>,
}

/// Big-M of the angle-flow rows of line `l`: `|B|·(θ_max − θ_min)`.
pub fn big_m(case: &NetworkCase, l: usize) -> f64 {
    let (lo, hi) = case.theta();
    case.lines[l].b.abs() * (hi - lo)
}

/// DC dispatch with line switching, minimizing generation cost with at most
/// `e` switchable lines out of service.
///
/// Balance rows use `p_l` directly; the flow limit `|p_l| ≤ P̄_l·x_l`
/// already forces `p_l = 0` on open lines.
pub fn build_ots(case: &NetworkCase, e: usize) -> Result<(ModelSource, OtsColumns), BenchError> {
    case.validate()?;
    let switchable: Vec<usize> = (0..case.lines.len()).filter(|&l| case.lines[l].switchable).collect();
    if e > case.lines.len() {
        return Err(BenchError::InvalidCase(format!("E = {e} exceeds the {} lines", case.lines.len())));
    }
    screen_budget(case, &switchable, e);
    let idx = case.index();
    let (th_lo, th_hi) = case.theta();
    let mut src = ModelSource::new(Sense::Min);
    let generation: Vec<usize> = case
        .generators
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let v = src.add_continuous(format!("g{k}@{}", g.bus), 0.0, g.pmax);
            src.set_objective(v, g.cost);
            v
        })
        .collect();
    let flow: Vec<usize> = case
        .lines
        .iter()
        .enumerate()
        .map(|(k, l)| src.add_continuous(format!("p{k}:{}-{}", l.from, l.to), -l.limit, l.limit))
        .collect();
    let theta: Vec<usize> = case
        .buses
        .iter()
        .map(|b| {
            let (lo, hi) = if b.id == case.slack { (0.0, 0.0) } else { (th_lo, th_hi) };
            src.add_continuous(format!("theta{}", b.id), lo, hi)
        })
        .collect();
    let status: Vec<Option<usize>> = case
        .lines
        .iter()
        .enumerate()
        .map(|(k, l)| l.switchable.then(|| src.add_binary(format!("x{k}:{}-{}", l.from, l.to))))
        .collect();

    for (bi, bus) in case.buses.iter().enumerate() {
        let mut terms = vec![];
        for (k, g) in case.generators.iter().enumerate() {
            if idx[&g.bus] == bi {
                terms.push((generation[k], 1.0));
            }
        }
        for (k, l) in case.lines.iter().enumerate() {
            if idx[&l.to] == bi {
                terms.push((flow[k], 1.0));
            }
            if idx[&l.from] == bi {
                terms.push((flow[k], -1.0));
            }
        }
        src.add_row(format!("balance{}", bus.id), terms, Relation::Eq, bus.demand);
    }
    for (k, l) in case.lines.iter().enumerate() {
        let (f, t) = (theta[idx[&l.from]], theta[idx[&l.to]]);
        let angle = |sign: f64| vec![(flow[k], sign), (f, -sign * l.b), (t, sign * l.b)];
        match status[k] {
            None => src.add_row(format!("ohm{k}"), angle(1.0), Relation::Eq, 0.0),
            Some(x) => {
                let m = big_m(case, k);
                let mut up = angle(1.0);
                up.push((x, m));
                src.add_row(format!("ohm{k}+"), up, Relation::Le, m);
                let mut down = angle(-1.0);
                down.push((x, m));
                src.add_row(format!("ohm{k}-"), down, Relation::Le, m);
                src.add_row(format!("limit{k}+"), vec![(flow[k], 1.0), (x, -l.limit)], Relation::Le, 0.0);
                src.add_row(format!("limit{k}-"), vec![(flow[k], -1.0), (x, -l.limit)], Relation::Le, 0.0);
            }
        }
    }
    if !switchable.is_empty() {
        let terms = switchable.iter().map(|&k| (status[k].expect("switchable"), -1.0)).collect();
        src.add_row("budget", terms, Relation::Le, e as f64 - switchable.len() as f64);
    }
    Ok((src, OtsColumns { generation, flow, theta, status }))
}

/// Warns when the budget lets a demand bus lose every line.
fn screen_budget(case: &NetworkCase, switchable: &[usize], e: usize) {
    for b in case.buses.iter().filter(|b| b.demand > 0.0) {
        let has_gen = case.generators.iter().any(|g| g.bus == b.id);
        let lines: Vec<&Line> = case.lines.iter().filter(|l| l.from == b.id || l.to == b.id).collect();
        let fixed = lines.iter().any(|l| !l.switchable);
        if !has_gen && !fixed && lines.len() <= e {
            log::warn!(
                "E = {e} allows bus {} to be islanded ({} of {} lines switchable); feasibility cuts will exclude it",
                b.id,
                lines.len(),
                switchable.len()
            );
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{brute_force_source, MilpOutcome};

    fn two_bus(switchable: bool) -> NetworkCase {
        NetworkCase {
            description: None,
            buses: vec![Bus { id: 1, demand: 0.0 }, Bus { id: 2, demand: 50.0 }],
            generators: vec![Generator { bus: 1, cost: 10.0, pmax: 100.0 }, Generator { bus: 2, cost: 30.0, pmax: 100.0 }],
            lines: vec![Line { from: 1, to: 2, b: 500.0, limit: 30.0, switchable }],
            slack: 1,
            theta_bounds: None,
        }
    }

    #[test]
    fn single_line_dispatch() {
        // 30 MW over the line at cost 10, 20 MW local at cost 30.
        let (src, _) = build_ots(&two_bus(true), 0).unwrap();
        let MilpOutcome::Optimal { objective, .. } = brute_force_source(&src, 4).unwrap() else { panic!() };
        assert!((objective - 900.0).abs() < 1e-6);
        let (fixed, cols) = build_ots(&two_bus(false), 0).unwrap();
        assert_eq!(cols.status, vec![None]);
        let MilpOutcome::Optimal { objective, .. } = brute_force_source(&fixed, 4).unwrap() else { panic!() };
        assert!((objective - 900.0).abs() < 1e-6);
    }

    #[test]
    fn budget_allows_switching_off() {
        let (src, _) = build_ots(&two_bus(true), 1).unwrap();
        let MilpOutcome::Optimal { objective, .. } = brute_force_source(&src, 4).unwrap() else { panic!() };
        assert!((objective - 900.0).abs() < 1e-6);
        assert!(build_ots(&two_bus(true), 2).is_err());
    }

    #[test]
    fn validation() {
        let mut c = two_bus(true);
        c.slack = 9;
        assert!(c.validate().is_err());
        let mut c = two_bus(true);
        c.lines.clear();
        assert!(c.validate().is_err());
        assert_eq!(big_m(&two_bus(true), 0), 500.0 * std::f64::consts::PI);
    }
}
