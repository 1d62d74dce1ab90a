use super::BenchError;
use crate::lpcore::{Relation, Sense};
use crate::model::ModelSource;
use serde::{Deserialize, Serialize};

/// Propagated pre-activation magnitudes beyond this make big-M meaningless.
pub const BOUND_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    #[serde(rename = "W")]
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

/// A ReLU network mapping demands to non-slack generator set-points.
///
/// Every layer but the last is followed by a ReLU; the last one is linear and
/// yields one output per non-slack generator. Generators are indexed
/// `0..outputs + 1`; `slack_index` is the slack generator's position and the
/// outputs fill the other positions in order. The slack output balances
/// total demand, `Σ (M_d p_d) − Σ outputs`.
///
/// ```json
/// {"layers": [{"W": [[1.0, -1.0]], "b": [0.0]}, {"W": [[2.0]], "b": [0.5]}],
///  "input_lb": [0, 0], "input_ub": [1, 1],
///  "gen_limits": [[0, 3], [0, 2]], "map_d": [[1, 0], [0, 1]], "slack_index": 1}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuralNetSpec {
    pub layers: Vec<Layer>,
    pub input_lb: Vec<f64>,
    pub input_ub: Vec<f64>,
    pub gen_limits: Vec<[f64; 2]>,
    pub map_d: Vec<Vec<f64>>,
    pub slack_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    /// Maximize `p_g − p̄_g`.
    Upper,
    /// Maximize `p̲_g − p_g`.
    Lower,
}

impl std::str::FromStr for BoundSide {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "upper" => Ok(Self::Upper),
            "lower" => Ok(Self::Lower),
            _ => Err(format!("side must be upper or lower, got {s}")),
        }
    }
}

pub type Interval = (f64, f64);

impl NeuralNetSpec {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        let nn: Self = serde_json::from_str(text).map_err(|e| BenchError::Parse(e.to_string()))?;
        nn.validate()?;
        Ok(nn)
    }

    pub fn inputs(&self) -> usize {
        self.input_lb.len()
    }

    pub fn outputs(&self) -> usize {
        self.layers.last().map_or(0, |l| l.b.len())
    }

    pub fn hidden_neurons(&self) -> usize {
        self.layers[..self.layers.len().saturating_sub(1)].iter().map(|l| l.b.len()).sum()
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::InvalidNetwork(m));
        if self.layers.is_empty() {
            return bad("no layers".into());
        }
        if self.input_ub.len() != self.inputs() {
            return bad("input bound lengths differ".into());
        }
        let mut width = self.inputs();
        for (k, l) in self.layers.iter().enumerate() {
            if l.w.len() != l.b.len() || l.w.iter().any(|row| row.len() != width) {
                return bad(format!("layer {k} does not chain: expected {width} columns"));
            }
            if l.w.iter().flatten().chain(&l.b).any(|v| !v.is_finite()) {
                return bad(format!("layer {k} has non-finite weights"));
            }
            width = l.b.len();
        }
        for (lo, hi) in self.input_lb.iter().zip(&self.input_ub) {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return bad("input box must be finite with lb ≤ ub".into());
            }
        }
        if self.gen_limits.len() != self.outputs() + 1 || self.slack_index > self.outputs() {
            return bad(format!("need {} generator limits and a slack index within them", self.outputs() + 1));
        }
        if self.gen_limits.iter().any(|[lo, hi]| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
            return bad("generator limits must be finite with lb ≤ ub".into());
        }
        if self.map_d.iter().any(|row| row.len() != self.inputs()) {
            return bad("map_d rows must have one entry per input".into());
        }
        Ok(())
    }

    /// Coefficient of each input in total mapped demand.
    fn demand_weights(&self) -> Vec<f64> {
        (0..self.inputs()).map(|d| self.map_d.iter().map(|row| row[d]).sum()).collect()
    }

    /// Network outputs at `p_d`.
    pub fn forward(&self, p_d: &[f64]) -> Vec<f64> {
        let mut a = p_d.to_vec();
        for (k, l) in self.layers.iter().enumerate() {
            let last = k + 1 == self.layers.len();
            a = l
                .w
                .iter()
                .zip(&l.b)
                .map(|(row, b)| {
                    let v = b + row.iter().zip(&a).map(|(w, x)| w * x).sum::<f64>();
                    if last {
                        v
                    } else {
                        v.max(0.0)
                    }
                })
                .collect();
        }
        a
    }

    /// Every generator's set-point at `p_d`, slack included.
    pub fn dispatch(&self, p_d: &[f64]) -> Vec<f64> {
        let out = self.forward(p_d);
        let demand: f64 = self.demand_weights().iter().zip(p_d).map(|(w, x)| w * x).sum();
        let slack = demand - out.iter().sum::<f64>();
        let mut gens = out;
        gens.insert(self.slack_index, slack);
        gens
    }

    /// Largest violation of `target`'s limit on `side` at `p_d`.
    pub fn violation(&self, p_d: &[f64], target: usize, side: BoundSide) -> f64 {
        let p = self.dispatch(p_d)[target];
        let [lo, hi] = self.gen_limits[target];
        match side {
            BoundSide::Upper => p - hi,
            BoundSide::Lower => lo - p,
        }
    }
}

fn affine_interval(row: &[f64], bias: f64, input: &[Interval]) -> Interval {
    let mut lo = bias;
    let mut hi = bias;
    for (w, &(l, u)) in row.iter().zip(input) {
        if *w >= 0.0 {
            lo += w * l;
            hi += w * u;
        } else {
            lo += w * u;
            hi += w * l;
        }
    }
    (lo, hi)
}

/// Interval bounds on every layer's pre-activations, output layer included.
pub fn propagate_bounds(nn: &NeuralNetSpec) -> Vec<Vec<Interval>> {
    let mut input: Vec<Interval> = nn.input_lb.iter().copied().zip(nn.input_ub.iter().copied()).collect();
    let mut out = vec![];
    for layer in &nn.layers {
        let pre: Vec<Interval> = layer.w.iter().zip(&layer.b).map(|(row, b)| affine_interval(row, *b, &input)).collect();
        input = pre.iter().map(|&(l, u)| (l.max(0.0), u.max(0.0))).collect();
        out.push(pre);
    }
    out
}

/// Column indices of a verification source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnColumns {
    pub inputs: Vec<usize>,
    /// Per hidden layer: pre-activation, activation, indicator.
    pub pre: Vec<Vec<usize>>,
    pub post: Vec<Vec<usize>>,
    pub active: Vec<Vec<usize>>,
    /// Set-point per generator, slack included.
    pub generators: Vec<usize>,
}

/// Worst-case violation of one generator limit over the input box, with one
/// binary per hidden ReLU encoded by per-neuron big-M constants
/// `M⁺ = max(0, ub)`, `M⁻ = max(0, −lb)`.
pub fn build_nn_verification(
    nn: &NeuralNetSpec,
    target_gen: usize,
    side: BoundSide,
) -> Result<(ModelSource, NnColumns), BenchError> {
    nn.validate()?;
    if target_gen >= nn.gen_limits.len() {
        return Err(BenchError::UnknownGenerator(target_gen));
    }
    let bounds = propagate_bounds(nn);
    for (k, layer) in bounds.iter().enumerate() {
        for (j, &(l, u)) in layer.iter().enumerate() {
            if l.abs().max(u.abs()) > BOUND_LIMIT {
                return Err(BenchError::BoundBlowup { layer: k, neuron: j, bound: l.abs().max(u.abs()) });
            }
        }
    }
    let mut src = ModelSource::new(Sense::Max);
    let inputs: Vec<usize> = (0..nn.inputs())
        .map(|d| src.add_continuous(format!("pd{d}"), nn.input_lb[d], nn.input_ub[d]))
        .collect();
    let mut prev = inputs.clone();
    let (mut pre, mut post, mut active) = (vec![], vec![], vec![]);
    let hidden = nn.layers.len() - 1;
    for (k, layer) in nn.layers[..hidden].iter().enumerate() {
        let (mut zh, mut z, mut delta) = (vec![], vec![], vec![]);
        for (j, (row, b)) in layer.w.iter().zip(&layer.b).enumerate() {
            let (l, u) = bounds[k][j];
            let (mp, mm) = (u.max(0.0), (-l).max(0.0));
            let vh = src.add_continuous(format!("zhat{k}_{j}"), l, u);
            let v = src.add_continuous(format!("z{k}_{j}"), 0.0, mp);
            let d = src.add_binary(format!("a{k}_{j}"));
            let mut def: Vec<(usize, f64)> = vec![(vh, 1.0)];
            def.extend(prev.iter().zip(row).filter(|(_, w)| **w != 0.0).map(|(&c, &w)| (c, -w)));
            src.add_row(format!("affine{k}_{j}"), def, Relation::Eq, *b);
            src.add_row(format!("relu{k}_{j}:above"), vec![(v, 1.0), (vh, -1.0)], Relation::Ge, 0.0);
            src.add_row(format!("relu{k}_{j}:on"), vec![(v, 1.0), (d, -mp)], Relation::Le, 0.0);
            src.add_row(format!("relu{k}_{j}:off"), vec![(v, 1.0), (vh, -1.0), (d, mm)], Relation::Le, mm);
            if mp == 0.0 && mm == 0.0 {
                // Constant-zero neuron: keep its indicator in the model.
                src.add_row(format!("relu{k}_{j}:fixed"), vec![(d, 1.0)], Relation::Le, 1.0);
            }
            zh.push(vh);
            z.push(v);
            delta.push(d);
        }
        prev = z.clone();
        pre.push(zh);
        post.push(z);
        active.push(delta);
    }
    let out_layer = &nn.layers[hidden];
    let out_bounds = &bounds[hidden];
    let mut outputs = vec![];
    for (j, (row, b)) in out_layer.w.iter().zip(&out_layer.b).enumerate() {
        let (l, u) = out_bounds[j];
        let v = src.add_continuous(format!("pg_out{j}"), l, u);
        let mut def: Vec<(usize, f64)> = vec![(v, 1.0)];
        def.extend(prev.iter().zip(row).filter(|(_, w)| **w != 0.0).map(|(&c, &w)| (c, -w)));
        src.add_row(format!("output{j}"), def, Relation::Eq, *b);
        outputs.push(v);
    }
    let weights = nn.demand_weights();
    let demand_range = affine_interval(&weights, 0.0, &nn.input_lb.iter().copied().zip(nn.input_ub.iter().copied()).collect::<Vec<_>>());
    let out_sum = out_bounds.iter().fold((0.0, 0.0), |a, &(l, u)| (a.0 + l, a.1 + u));
    let slack = src.add_continuous("pg_slack", demand_range.0 - out_sum.1, demand_range.1 - out_sum.0);
    let mut balance: Vec<(usize, f64)> = vec![(slack, 1.0)];
    balance.extend(outputs.iter().map(|&v| (v, 1.0)));
    balance.extend(inputs.iter().zip(&weights).filter(|(_, w)| **w != 0.0).map(|(&c, &w)| (c, -w)));
    src.add_row("slack_balance", balance, Relation::Eq, 0.0);
    let mut generators = outputs;
    generators.insert(nn.slack_index, slack);
    let [lo, hi] = nn.gen_limits[target_gen];
    match side {
        BoundSide::Upper => {
            src.set_objective(generators[target_gen], 1.0);
            src.objective_constant = -hi;
        }
        BoundSide::Lower => {
            src.set_objective(generators[target_gen], -1.0);
            src.objective_constant = lo;
        }
    }
    Ok((src, NnColumns { inputs, pre, post, active, generators }))
}
