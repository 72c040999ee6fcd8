//! Grammar-directed random seed programs.
//!
//! A seed declares its global variables up front, then mixes assignments,
//! gate statements and control blocks. Every `while` is guarded by a counter
//! that is set right before the loop and decremented as the last statement of
//! its body, so the seed itself always terminates.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::MAX_QUBITS;
use crate::gate::GateKind;
use crate::lang::{lower, parse, render, BinOp, Expr, Program, Stmt, DEFAULT_FUEL};
use crate::rng::{stream, tag};

pub const MAX_ATTEMPTS: usize = 64;
const VAR_NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedParams {
    pub qubit_count: usize,
    pub min_lines: usize,
    pub max_lines: usize,
    pub min_vars: usize,
    pub max_vars: usize,
    pub max_depth: usize,
    pub palette: Vec<GateKind>,
    /// Chance that a statement slot opens an `if` or `while` block.
    pub control_probability: f64,
    pub rng_seed: u64,
}

impl Default for SeedParams {
    fn default() -> Self {
        SeedParams {
            qubit_count: 5,
            min_lines: 35,
            max_lines: 56,
            min_vars: 2,
            max_vars: 4,
            max_depth: 2,
            palette: GateKind::ALL.to_vec(),
            control_probability: 0.15,
            rng_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeedGenError {
    #[error("invalid seed parameters: {0}")]
    InvalidParams(String),
    #[error("no acceptable seed after {attempts} attempts")]
    GenerationRetryExhausted { attempts: usize },
}

impl SeedParams {
    pub fn validate(&self) -> Result<(), SeedGenError> {
        let bad = |m: String| Err(SeedGenError::InvalidParams(m));
        if !(10..=120).contains(&self.min_lines) || !(10..=120).contains(&self.max_lines) || self.min_lines > self.max_lines {
            return bad(format!("line range {}..={} must lie within 10..=120", self.min_lines, self.max_lines));
        }
        if self.qubit_count == 0 || self.qubit_count > MAX_QUBITS {
            return bad(format!("qubit_count {} outside 1..={MAX_QUBITS}", self.qubit_count));
        }
        if self.min_vars < 2 || self.max_vars > VAR_NAMES.len() || self.min_vars > self.max_vars {
            return bad(format!("variable range {}..={} must lie within 2..=6", self.min_vars, self.max_vars));
        }
        if self.max_depth == 0 || self.max_depth > 4 {
            return bad(format!("max_depth {} outside 1..=4", self.max_depth));
        }
        if !(0.0..=1.0).contains(&self.control_probability) {
            return bad(format!("control_probability {} outside [0, 1]", self.control_probability));
        }
        if !self.palette.iter().any(|g| g.arity() <= self.qubit_count) {
            return bad("no palette gate fits the register".into());
        }
        Ok(())
    }
}

struct Gen<'a> {
    params: &'a SeedParams,
    rng: ChaCha8Rng,
    gates: Vec<GateKind>,
    globals: Vec<&'static str>,
    /// Reserved for the first `if` block, if any.
    local: Option<&'static str>,
    local_used: bool,
    classical: usize,
    gate_stmts: usize,
    controls: usize,
}

impl Gen<'_> {
    fn lit(&mut self) -> Expr {
        Expr::Lit(self.rng.gen_range(0..=4))
    }

    fn operand(&mut self, vars: &[&str]) -> Expr {
        if self.rng.gen_bool(0.7) {
            Expr::var(vars.choose(&mut self.rng).unwrap())
        } else {
            self.lit()
        }
    }

    fn arith(&mut self, vars: &[&str]) -> Expr {
        let l = Expr::var(vars.choose(&mut self.rng).unwrap());
        match self.rng.gen_range(0..4) {
            0 => self.lit(),
            1 => l,
            _ => {
                let op = *[BinOp::Add, BinOp::Sub, BinOp::Mul].choose(&mut self.rng).unwrap();
                let r = self.operand(vars);
                Expr::bin(op, l, r)
            }
        }
    }

    fn cond(&mut self, vars: &[&str]) -> Expr {
        let l = Expr::var(vars.choose(&mut self.rng).unwrap());
        if self.rng.gen_bool(0.25) {
            return l;
        }
        let op = *[BinOp::Lt, BinOp::Le, BinOp::Eq, BinOp::Ne].choose(&mut self.rng).unwrap();
        let r = self.operand(vars);
        Expr::bin(op, l, r)
    }

    fn gate(&mut self) -> Stmt {
        let g = *self.gates.choose(&mut self.rng).unwrap();
        let mut qs: Vec<usize> = (0..self.params.qubit_count).collect();
        qs.shuffle(&mut self.rng);
        qs.truncate(g.arity());
        let angle = g.is_parameterized().then(|| (self.rng.gen_range(-3.2..3.2f64) * 1000.0).round() / 1000.0);
        self.gate_stmts += 1;
        Stmt::gate(g, angle, &qs)
    }

    fn assign(&mut self, vars: &[&str], frozen: &[&str]) -> Stmt {
        let targets: Vec<&str> = vars.iter().copied().filter(|v| !frozen.contains(v)).collect();
        let target = targets.choose(&mut self.rng).copied().unwrap_or(vars[0]);
        let e = self.arith(vars);
        self.classical += 1;
        Stmt::assign(target, e)
    }

    fn simple(&mut self, vars: &[&str], frozen: &[&str]) -> Stmt {
        // steer towards equal classical and gate counts
        let (c, g) = (self.classical as f64, self.gate_stmts as f64);
        let p = (0.5 + 0.4 * (g - c) / (g + c + 2.0)).clamp(0.1, 0.9);
        if self.rng.gen_bool(p) && !vars.iter().all(|v| frozen.contains(v)) {
            self.assign(vars, frozen)
        } else {
            self.gate()
        }
    }

    /// Statements filling exactly `lines` rendered lines.
    fn block(&mut self, depth: usize, mut lines: usize, vars: &[&'static str], frozen: &[&'static str]) -> Vec<Stmt> {
        let mut out = Vec::new();
        while lines > 0 {
            let can_nest = depth < self.params.max_depth && lines >= 4;
            if can_nest && self.rng.gen_bool(self.params.control_probability) {
                let counters: Vec<&'static str> = self.globals.iter().copied().filter(|v| !frozen.contains(v)).collect();
                if lines >= 5 && !counters.is_empty() && self.rng.gen_bool(0.5) {
                    // init + header + body + decrement + close
                    let body_lines = self.rng.gen_range(1..=(lines - 4).min(8));
                    let k = *counters.choose(&mut self.rng).unwrap();
                    out.push(Stmt::assign(k, Expr::Lit(self.rng.gen_range(1..=3))));
                    let mut inner_frozen = frozen.to_vec();
                    inner_frozen.push(k);
                    let mut body = self.block(depth + 1, body_lines, vars, &inner_frozen);
                    body.push(Stmt::assign(k, Expr::bin(BinOp::Sub, Expr::var(k), Expr::Lit(1))));
                    let cond = if self.rng.gen_bool(0.5) { Expr::var(k) } else { Expr::bin(BinOp::Lt, Expr::Lit(0), Expr::var(k)) };
                    out.push(Stmt::While { cond, body });
                    self.classical += 3;
                    self.controls += 1;
                    lines -= body_lines + 4;
                } else {
                    let body_lines = self.rng.gen_range(1..=(lines - 2).min(8));
                    let cond = self.cond(vars);
                    let mut inner_vars = vars.to_vec();
                    let mut body = Vec::new();
                    let mut used = 0;
                    if let (Some(l), false, true) = (self.local, self.local_used, body_lines >= 2) {
                        self.local_used = true;
                        inner_vars.push(l);
                        body.push(Stmt::assign(l, self.lit()));
                        self.classical += 1;
                        used = 1;
                    }
                    body.extend(self.block(depth + 1, body_lines - used, &inner_vars, frozen));
                    out.push(Stmt::If { cond, body });
                    self.classical += 1;
                    self.controls += 1;
                    lines -= body_lines + 2;
                }
            } else {
                let s = self.simple(vars, frozen);
                out.push(s);
                lines -= 1;
            }
        }
        out
    }
}

fn attempt(params: &SeedParams, attempt_no: usize) -> Option<Program> {
    let rng = stream(params.rng_seed, &[tag("seedgen"), attempt_no as u64]);
    let gates: Vec<GateKind> = params.palette.iter().copied().filter(|g| g.arity() <= params.qubit_count).collect();
    let mut g = Gen {
        params,
        rng,
        gates,
        globals: Vec::new(),
        local: None,
        local_used: false,
        classical: 0,
        gate_stmts: 0,
        controls: 0,
    };
    let nv = g.rng.gen_range(params.min_vars..=params.max_vars);
    let n_local = usize::from(nv >= 3 && g.rng.gen_bool(0.5));
    g.globals = VAR_NAMES[..nv - n_local].to_vec();
    g.local = (n_local == 1).then_some(VAR_NAMES[nv - 1]);
    let target = g.rng.gen_range(params.min_lines..=params.max_lines);
    let mut body: Vec<Stmt> = Vec::new();
    for &v in &g.globals.clone() {
        body.push(Stmt::assign(v, g.lit()));
        g.classical += 1;
    }
    let remaining = target.checked_sub(1 + body.len())?;
    let globals = g.globals.clone();
    body.extend(g.block(0, remaining, &globals, &[]));
    let p = Program::new(params.qubit_count, body);

    let (c, q) = (g.classical as f64, g.gate_stmts as f64);
    let balanced = q > 0.0 && (c - q).abs() <= 0.3 * q;
    let text = render(&p);
    let lines = text.lines().count();
    let ok = g.controls > 0
        && balanced
        && (params.min_lines..=params.max_lines).contains(&lines)
        && p.validate().is_ok()
        && lower(&p, DEFAULT_FUEL).is_ok()
        && parse(&text).map(|mut back| {
            back.name = p.name.clone();
            back == p
        }) == Ok(true);
    ok.then_some(p)
}

/// Generate one seed; identical params always give the same program.
pub fn generate_seed(params: &SeedParams) -> Result<Program, SeedGenError> {
    params.validate()?;
    (0..MAX_ATTEMPTS)
        .find_map(|i| attempt(params, i))
        .ok_or(SeedGenError::GenerationRetryExhausted { attempts: MAX_ATTEMPTS })
}

/// Count classical statements (assignments and control headers) and gate
/// statements.
pub fn statement_balance(p: &Program) -> (usize, usize) {
    fn walk(b: &[Stmt], acc: &mut (usize, usize)) {
        for s in b {
            match s {
                Stmt::Assign { .. } => acc.0 += 1,
                Stmt::Gate(_) => acc.1 += 1,
                Stmt::If { body, .. } | Stmt::While { body, .. } => {
                    acc.0 += 1;
                    walk(body, acc);
                }
            }
        }
    }
    let mut acc = (0, 0);
    walk(&p.body, &mut acc);
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn has_control(b: &[Stmt]) -> bool {
        b.iter().any(|s| matches!(s, Stmt::If { .. } | Stmt::While { .. }))
    }

    fn max_depth(b: &[Stmt]) -> usize {
        b.iter().map(|s| s.block().map_or(0, |inner| 1 + max_depth(inner))).max().unwrap_or(0)
    }

    #[test]
    fn default_seed_42() {
        let params = SeedParams { rng_seed: 42, ..SeedParams::default() };
        let p = generate_seed(&params).unwrap();
        assert_eq!(p.qubit_count, 5);
        let lines = render(&p).lines().count();
        assert!((35..=56).contains(&lines), "{lines}");
        assert!(has_control(&p.body));
        assert_eq!(generate_seed(&params).unwrap(), p);
    }

    #[test]
    fn many_seeds_meet_constraints() {
        for s in 0..200 {
            let params = SeedParams { rng_seed: s, ..SeedParams::default() };
            let p = generate_seed(&params).unwrap();
            let (c, g) = statement_balance(&p);
            // the while counter updates are classical statements too
            assert!((c as f64 - g as f64).abs() <= 0.3 * g as f64, "seed {s}: {c} vs {g}");
            assert!(has_control(&p.body));
            assert!(max_depth(&p.body) <= 2);
            lower(&p, DEFAULT_FUEL).unwrap();
            let tree = crate::lang::analyze_scopes(&p);
            let vars = tree.all_vars();
            assert!((2..=4).contains(&vars.len()), "seed {s}: {vars:?}");
        }
    }

    #[test]
    fn invalid_params() {
        let p = SeedParams { min_lines: 5, ..SeedParams::default() };
        assert!(matches!(generate_seed(&p), Err(SeedGenError::InvalidParams(_))));
        let p = SeedParams { qubit_count: 13, ..SeedParams::default() };
        assert!(generate_seed(&p).is_err());
        let p = SeedParams { palette: vec![GateKind::Ccx], qubit_count: 2, ..SeedParams::default() };
        assert!(generate_seed(&p).is_err());
    }

    #[test]
    fn no_control_exhausts_retries() {
        let p = SeedParams { control_probability: 0.0, ..SeedParams::default() };
        assert_eq!(generate_seed(&p), Err(SeedGenError::GenerationRetryExhausted { attempts: MAX_ATTEMPTS }));
    }
}
