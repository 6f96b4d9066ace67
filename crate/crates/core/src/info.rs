//! Dense joint PMFs over named finite alphabets, the factorized input law,
//! discrete memoryless state-dependent channels, and conditional mutual
//! information in bits.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::markov::DelayedStateJoint;
use crate::{Error, Result};

const SLICE_TOL: f64 = 1e-10;

/// Canonical variable names of the assembled seven-variable joint.
pub mod names {
    pub const U: &str = "U";
    pub const X1: &str = "X1";
    pub const X2: &str = "X2";
    pub const S: &str = "S";
    /// Delayed state seen by encoder 1.
    pub const S1: &str = "S1";
    /// Delayed state seen by encoder 2.
    pub const S2: &str = "S2";
    pub const Y: &str = "Y";
    pub const ALL: [&str; 7] = [U, X1, X2, S, S1, S2, Y];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub size: usize,
}

impl Variable {
    pub fn new(name: &str, size: usize) -> Self {
        Variable { name: name.to_string(), size }
    }
}

/// A probability table indexed by a tuple of variables; the last variable
/// varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    vars: Vec<Variable>,
    strides: Vec<usize>,
    table: Vec<f64>,
}

fn strides_for(vars: &[Variable]) -> Vec<usize> {
    let mut strides = vec![1; vars.len()];
    for i in (0..vars.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * vars[i + 1].size;
    }
    strides
}

impl JointPmf {
    pub fn new(vars: Vec<Variable>, table: Vec<f64>) -> Result<Self> {
        let cells: usize = vars.iter().map(|v| v.size).product();
        if vars.iter().any(|v| v.size == 0) {
            return Err(Error::arg("joint PMF variable with empty alphabet"));
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].iter().any(|w| w.name == v.name) {
                return Err(Error::arg(format!("duplicate variable {}", v.name)));
            }
        }
        if table.len() != cells {
            return Err(Error::arg(format!("joint PMF table has {} cells, alphabets imply {cells}", table.len())));
        }
        if table.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::arg("joint PMF has a negative or non-finite entry"));
        }
        let total: f64 = table.iter().sum();
        if libm::fabs(total - 1.0) > SLICE_TOL {
            return Err(Error::arg(format!("joint PMF sums to {total}, not 1")));
        }
        let strides = strides_for(&vars);
        Ok(JointPmf { vars, strides, table })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn position(&self, name: &str) -> Result<usize> {
        self.vars.iter().position(|v| v.name == name).ok_or_else(|| Error::arg(format!("joint has no variable named {name}")))
    }

    /// Probability of a full index tuple (in variable order).
    pub fn prob(&self, index: &[usize]) -> f64 {
        let flat: usize = index.iter().zip(&self.strides).map(|(i, s)| i * s).sum();
        self.table[flat]
    }

    /// Marginal over the named variables, in the order given.
    pub fn marginal(&self, keep: &[&str]) -> Result<JointPmf> {
        let pos = keep.iter().map(|n| self.position(n)).collect::<Result<Vec<_>>>()?;
        let vars: Vec<Variable> = pos.iter().map(|&p| self.vars[p].clone()).collect();
        let table = self.project(&pos);
        let strides = strides_for(&vars);
        Ok(JointPmf { vars, strides, table })
    }

    /// Sums the table onto the sub-tuple at positions `pos` (row-major in
    /// that order).
    fn project(&self, pos: &[usize]) -> Vec<f64> {
        let sizes: Vec<usize> = pos.iter().map(|&p| self.vars[p].size).collect();
        let mut out_strides = vec![1usize; pos.len()];
        for i in (0..pos.len().saturating_sub(1)).rev() {
            out_strides[i] = out_strides[i + 1] * sizes[i + 1];
        }
        // stride contributed by each source variable to the output index
        let mut contrib = vec![0usize; self.vars.len()];
        for (o, &p) in pos.iter().enumerate() {
            contrib[p] = out_strides[o];
        }
        let mut out = vec![0.0; sizes.iter().product()];
        let mut idx = vec![0usize; self.vars.len()];
        let mut out_flat = 0usize;
        for &p in &self.table {
            out[out_flat] += p;
            // odometer increment, last variable fastest
            for v in (0..self.vars.len()).rev() {
                idx[v] += 1;
                out_flat += contrib[v];
                if idx[v] < self.vars[v].size {
                    break;
                }
                out_flat -= contrib[v] * idx[v];
                idx[v] = 0;
            }
        }
        out
    }

    /// `I(A; B | C)` in bits. Cells with zero joint mass contribute zero and
    /// results in `[-1e-12, 0)` are clamped to zero.
    pub fn conditional_mutual_information(&self, a: &[&str], b: &[&str], c: &[&str]) -> Result<f64> {
        let pa = a.iter().map(|n| self.position(n)).collect::<Result<Vec<_>>>()?;
        let pb = b.iter().map(|n| self.position(n)).collect::<Result<Vec<_>>>()?;
        let pc = c.iter().map(|n| self.position(n)).collect::<Result<Vec<_>>>()?;
        let mut seen = vec![false; self.vars.len()];
        for &p in pa.iter().chain(&pb).chain(&pc) {
            if seen[p] {
                return Err(Error::arg(format!("variable {} appears in more than one of the sets A, B, C", self.vars[p].name)));
            }
            seen[p] = true;
        }
        if pa.is_empty() || pb.is_empty() {
            return Ok(0.0);
        }
        let size = |ps: &[usize]| ps.iter().map(|&p| self.vars[p].size).product::<usize>();
        let (na, nb, nc) = (size(&pa), size(&pb), size(&pc));
        let abc_pos: Vec<usize> = pc.iter().chain(&pa).chain(&pb).copied().collect();
        let p_cab = self.project(&abc_pos);
        // p_cab is indexed ((c * na) + a) * nb + b
        let mut p_ca = vec![0.0; nc * na];
        let mut p_cb = vec![0.0; nc * nb];
        let mut p_c = vec![0.0; nc];
        for ci in 0..nc {
            for ai in 0..na {
                for bi in 0..nb {
                    let p = p_cab[(ci * na + ai) * nb + bi];
                    p_ca[ci * na + ai] += p;
                    p_cb[ci * nb + bi] += p;
                    p_c[ci] += p;
                }
            }
        }
        let mut acc = 0.0;
        for ci in 0..nc {
            for ai in 0..na {
                for bi in 0..nb {
                    let p = p_cab[(ci * na + ai) * nb + bi];
                    if p > 0.0 {
                        acc += p * libm::log2(p * p_c[ci] / (p_ca[ci * na + ai] * p_cb[ci * nb + bi]));
                    }
                }
            }
        }
        if acc < 0.0 {
            if acc < -1e-12 {
                return Err(Error::Internal(format!("conditional mutual information {acc} < 0")));
            }
            acc = 0.0;
        }
        Ok(acc)
    }

    /// True iff `I(A; B | C) ≤ tol`.
    pub fn check_conditional_independence(&self, a: &[&str], b: &[&str], c: &[&str], tol: f64) -> Result<bool> {
        Ok(self.conditional_mutual_information(a, b, c)? <= tol)
    }
}

fn check_rows(what: &str, rows: &[Vec<f64>], width: usize) -> Result<()> {
    for (r, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(Error::arg(format!("{what} row {r} has {} entries, expected {width}", row.len())));
        }
        if row.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::arg(format!("{what} row {r} has a negative entry")));
        }
        let sum: f64 = row.iter().sum();
        if libm::fabs(sum - 1.0) > SLICE_TOL {
            return Err(Error::arg(format!("{what} row {r} sums to {sum}, not 1")));
        }
    }
    Ok(())
}

fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    // normalized exponentials: uniform on the simplex
    let mut v: Vec<f64> = (0..n).map(|_| -libm::log(1.0 - rng.random::<f64>())).collect();
    let total: f64 = v.iter().sum();
    for x in &mut v {
        *x /= total;
    }
    v
}

/// Alphabet sizes of an input policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyShape {
    pub u: usize,
    pub x1: usize,
    pub x2: usize,
    /// Alphabet of the state delayed for encoder 1.
    pub s1: usize,
    /// Alphabet of the state delayed for encoder 2.
    pub s2: usize,
}

impl PolicyShape {
    pub fn num_rows(&self) -> usize {
        self.s1 + self.u * self.s1 + self.u * self.s1 * self.s2
    }

    pub fn row_x1(&self, u: usize, a: usize) -> usize {
        u * self.s1 + a
    }

    pub fn row_x2(&self, u: usize, a: usize, b: usize) -> usize {
        (u * self.s1 + a) * self.s2 + b
    }
}

/// The factorized input law `P(u|s̃1)·P(x1|u,s̃1)·P(x2|u,s̃1,s̃2)`.
///
/// Rows of `p_x1` are indexed `u·|S̃1| + s̃1`; rows of `p_x2` are indexed
/// `(u·|S̃1| + s̃1)·|S̃2| + s̃2`. The same layout is the super-alphabet
/// layout of the codebooks.
#[derive(Debug, Clone, PartialEq)]
pub struct InputPolicy {
    shape: PolicyShape,
    p_u: Vec<Vec<f64>>,
    p_x1: Vec<Vec<f64>>,
    p_x2: Vec<Vec<f64>>,
}

impl InputPolicy {
    pub fn new(shape: PolicyShape, p_u: Vec<Vec<f64>>, p_x1: Vec<Vec<f64>>, p_x2: Vec<Vec<f64>>) -> Result<Self> {
        let PolicyShape { u, x1, x2, s1, s2 } = shape;
        if u == 0 || x1 == 0 || x2 == 0 || s1 == 0 || s2 == 0 {
            return Err(Error::arg("policy alphabets must be nonempty"));
        }
        if p_u.len() != s1 {
            return Err(Error::arg(format!("P(u|s1) needs {s1} rows, got {}", p_u.len())));
        }
        if p_x1.len() != u * s1 {
            return Err(Error::arg(format!("P(x1|u,s1) needs {} rows, got {}", u * s1, p_x1.len())));
        }
        if p_x2.len() != u * s1 * s2 {
            return Err(Error::arg(format!("P(x2|u,s1,s2) needs {} rows, got {}", u * s1 * s2, p_x2.len())));
        }
        check_rows("P(u|s1)", &p_u, u)?;
        check_rows("P(x1|u,s1)", &p_x1, x1)?;
        check_rows("P(x2|u,s1,s2)", &p_x2, x2)?;
        Ok(InputPolicy { shape, p_u, p_x1, p_x2 })
    }

    pub fn uniform(shape: PolicyShape) -> Self {
        let row = |n: usize| vec![1.0 / n as f64; n];
        InputPolicy {
            shape,
            p_u: vec![row(shape.u); shape.s1],
            p_x1: vec![row(shape.x1); shape.u * shape.s1],
            p_x2: vec![row(shape.x2); shape.u * shape.s1 * shape.s2],
        }
    }

    /// Every row drawn uniformly from its simplex.
    pub fn random<R: Rng + ?Sized>(shape: PolicyShape, rng: &mut R) -> Self {
        let mut p = Self::uniform(shape);
        for i in 0..shape.num_rows() {
            let n = p.row(i).len();
            p.set_row_unchecked(i, random_simplex(rng, n));
        }
        p
    }

    pub fn shape(&self) -> PolicyShape {
        self.shape
    }

    pub fn p_u(&self) -> &[Vec<f64>] {
        &self.p_u
    }

    pub fn p_x1(&self) -> &[Vec<f64>] {
        &self.p_x1
    }

    pub fn p_x2(&self) -> &[Vec<f64>] {
        &self.p_x2
    }

    /// Total number of conditional rows across the three tables.
    pub fn num_rows(&self) -> usize {
        self.shape.num_rows()
    }

    /// Row `i` in the concatenation `p_u ++ p_x1 ++ p_x2`.
    pub fn row(&self, i: usize) -> &[f64] {
        let (nu, n1) = (self.p_u.len(), self.p_x1.len());
        if i < nu {
            &self.p_u[i]
        } else if i < nu + n1 {
            &self.p_x1[i - nu]
        } else {
            &self.p_x2[i - nu - n1]
        }
    }

    pub fn set_row(&mut self, i: usize, row: Vec<f64>) -> Result<()> {
        if row.len() != self.row(i).len() {
            return Err(Error::arg("replacement row has the wrong length"));
        }
        check_rows("replacement", core::slice::from_ref(&row), row.len())?;
        self.set_row_unchecked(i, row);
        Ok(())
    }

    fn set_row_unchecked(&mut self, i: usize, row: Vec<f64>) {
        let (nu, n1) = (self.p_u.len(), self.p_x1.len());
        if i < nu {
            self.p_u[i] = row;
        } else if i < nu + n1 {
            self.p_x1[i - nu] = row;
        } else {
            self.p_x2[i - nu - n1] = row;
        }
    }
}

/// `|U| ≤ |X1|·|X2|·|S|³ + 2`.
pub fn cardinality_cap(x1: usize, x2: usize, states: usize) -> usize {
    x1.saturating_mul(x2).saturating_mul(states.saturating_pow(3)).saturating_add(2)
}

/// A state-dependent DMC `P(y | x1, x2, s)`; rows indexed
/// `(x1·|X2| + x2)·|S| + s`.
#[derive(Debug, Clone, PartialEq)]
pub struct DmcChannel {
    x1: usize,
    x2: usize,
    states: usize,
    y: usize,
    rows: Vec<Vec<f64>>,
}

impl DmcChannel {
    pub fn new(x1: usize, x2: usize, states: usize, y: usize, rows: Vec<Vec<f64>>) -> Result<Self> {
        if x1 == 0 || x2 == 0 || states == 0 || y == 0 {
            return Err(Error::arg("channel alphabets must be nonempty"));
        }
        if rows.len() != x1 * x2 * states {
            return Err(Error::arg(format!("channel needs {} rows (x1, x2, s), got {}", x1 * x2 * states, rows.len())));
        }
        check_rows("P(y|x1,x2,s)", &rows, y)?;
        Ok(DmcChannel { x1, x2, states, y, rows })
    }

    /// Builds the table from a closure returning `P(y | x1, x2, s)` rows.
    pub fn from_fn(x1: usize, x2: usize, states: usize, y: usize, f: impl Fn(usize, usize, usize) -> Vec<f64>) -> Result<Self> {
        let mut rows = Vec::with_capacity(x1 * x2 * states);
        for a in 0..x1 {
            for b in 0..x2 {
                for s in 0..states {
                    rows.push(f(a, b, s));
                }
            }
        }
        Self::new(x1, x2, states, y, rows)
    }

    /// `Y = (X1, X2)` encoded as `x1·|X2| + x2`, in every state.
    pub fn noiseless_pair(x1: usize, x2: usize, states: usize) -> Self {
        Self::from_fn(x1, x2, states, x1 * x2, |a, b, _| {
            let mut r = vec![0.0; x1 * x2];
            r[a * x2 + b] = 1.0;
            r
        })
        .expect("point-mass rows")
    }

    /// `Y` uniform and independent of everything.
    pub fn pure_noise(x1: usize, x2: usize, states: usize, y: usize) -> Self {
        Self::from_fn(x1, x2, states, y, |_, _, _| vec![1.0 / y as f64; y]).expect("uniform rows")
    }

    /// Binary `Y = X1 ⊕ X2 ⊕ Z` with `Z ~ Bern(crossover[s])`.
    pub fn binary_xor(crossover: &[f64]) -> Result<Self> {
        if crossover.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::arg("crossover probabilities must lie in [0, 1]"));
        }
        Self::from_fn(2, 2, crossover.len(), 2, |a, b, s| {
            let p = crossover[s];
            if (a ^ b) == 0 {
                vec![1.0 - p, p]
            } else {
                vec![p, 1.0 - p]
            }
        })
    }

    /// Binary adder `Y = X1 + X2 ∈ {0, 1, 2}`, noiseless, every state.
    pub fn binary_adder(states: usize) -> Self {
        Self::from_fn(2, 2, states, 3, |a, b, _| {
            let mut r = vec![0.0; 3];
            r[a + b] = 1.0;
            r
        })
        .expect("point-mass rows")
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.x1, self.x2, self.states, self.y)
    }

    pub fn row(&self, x1: usize, x2: usize, s: usize) -> &[f64] {
        &self.rows[(x1 * self.x2 + x2) * self.states + s]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// The full joint over `(U, X1, X2, S, S1, S2, Y)`:
/// `P(s̃1,s̃2,s)·P(u|s̃1)·P(x1|u,s̃1)·P(x2|u,s̃1,s̃2)·P(y|x1,x2,s)`.
pub fn assemble_joint(states: &DelayedStateJoint, policy: &InputPolicy, channel: &DmcChannel) -> Result<JointPmf> {
    let (n1, n2, k) = states.dims();
    let sh = policy.shape();
    let (cx1, cx2, ck, ny) = channel.dims();
    if sh.s1 != n1 {
        return Err(Error::arg(format!("alphabet mismatch for S1: policy {} vs states {n1}", sh.s1)));
    }
    if sh.s2 != n2 {
        return Err(Error::arg(format!("alphabet mismatch for S2: policy {} vs states {n2}", sh.s2)));
    }
    if ck != k {
        return Err(Error::arg(format!("alphabet mismatch for S: channel {ck} vs states {k}")));
    }
    if cx1 != sh.x1 {
        return Err(Error::arg(format!("alphabet mismatch for X1: channel {cx1} vs policy {}", sh.x1)));
    }
    if cx2 != sh.x2 {
        return Err(Error::arg(format!("alphabet mismatch for X2: channel {cx2} vs policy {}", sh.x2)));
    }
    let cap = cardinality_cap(sh.x1, sh.x2, k);
    if sh.u > cap {
        return Err(Error::arg(format!("|U| = {} exceeds the cardinality cap {cap}", sh.u)));
    }
    let vars = vec![
        Variable::new(names::U, sh.u),
        Variable::new(names::X1, sh.x1),
        Variable::new(names::X2, sh.x2),
        Variable::new(names::S, k),
        Variable::new(names::S1, n1),
        Variable::new(names::S2, n2),
        Variable::new(names::Y, ny),
    ];
    let mut table = Vec::with_capacity(sh.u * sh.x1 * sh.x2 * k * n1 * n2 * ny);
    for u in 0..sh.u {
        for x1 in 0..sh.x1 {
            for x2 in 0..sh.x2 {
                for s in 0..k {
                    for a in 0..n1 {
                        for b in 0..n2 {
                            let head = states.prob(a, b, s)
                                * policy.p_u[a][u]
                                * policy.p_x1[sh.row_x1(u, a)][x1]
                                * policy.p_x2[sh.row_x2(u, a, b)][x2];
                            table.extend(channel.row(x1, x2, s).iter().map(|py| head * py));
                        }
                    }
                }
            }
        }
    }
    // renormalize away the last-ulp drift of the products
    let total: f64 = table.iter().sum();
    for p in &mut table {
        *p /= total;
    }
    JointPmf::new(vars, table)
}
