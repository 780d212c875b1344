//! Finite-state Markov chain of the relay battery.
//!
//! The battery holds one of `L + 1` energy levels `ε_i = i·C/L`. Per block the
//! relay either harvests (Mode I: whole block, Mode II: second half-slot after
//! a failed decode) or forwards and spends the discretized threshold energy
//! `ε_T` (Mode III). Every transition probability is assembled from the CDF of
//! the source-relay gain evaluated at a handful of thresholds, which are
//! tabulated once in [`HarvestCdfTable`].

use std::io::{self, Write};

use crate::error::{invalid, Error, Result};
use crate::fading::{cdf_h_sr, RicianSumSpec};
use crate::params::{LinkGains, SystemParams};

/// Relative slack when matching an energy against a grid level, so that
/// `E_T = 2·C/L` typed by hand maps onto level 2 despite rounding.
pub(crate) const LEVEL_MATCH_RTOL: f64 = 1e-9;

const ROW_SUM_TOL: f64 = 1e-9;
const NEGATIVE_ENTRY_TOL: f64 = 1e-15;
const RESIDUAL_TOL: f64 = 1e-8;

/// Discrete battery geometry plus the index of the transmit energy `ε_T`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatteryGrid {
    levels: usize,
    capacity: f64,
    transmit_index: usize,
}

impl BatteryGrid {
    /// `ε_T` is the smallest level `ε_j >= E_T` with `j >= 1`.
    pub fn new(levels: usize, capacity: f64, e_t: f64) -> Result<Self> {
        if levels < 1 {
            return Err(invalid("L must be >= 1"));
        }
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(invalid(format!("C must be > 0, got {capacity}")));
        }
        if !(e_t.is_finite() && e_t > 0.0) {
            return Err(invalid(format!("E_T must be > 0, got {e_t}")));
        }
        let mut grid = BatteryGrid { levels, capacity, transmit_index: 0 };
        let target = e_t * (1.0 - LEVEL_MATCH_RTOL);
        let guess = ((e_t / capacity) * levels as f64).floor() as usize;
        let mut j = guess.clamp(1, levels);
        while j > 1 && grid.level(j - 1) >= target {
            j -= 1;
        }
        while j <= levels && grid.level(j) < target {
            j += 1;
        }
        if j > levels {
            return Err(invalid(format!("E_T = {e_t} exceeds the top battery level C = {capacity}")));
        }
        grid.transmit_index = j;
        Ok(grid)
    }

    pub fn from_params(p: &SystemParams) -> Result<Self> {
        Self::new(p.levels, p.capacity, p.e_t)
    }

    /// `L`; the chain has `L + 1` states.
    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn states(&self) -> usize {
        self.levels + 1
    }

    /// `ε_i = i·C/L`.
    pub fn level(&self, i: usize) -> f64 {
        self.capacity * i as f64 / self.levels as f64
    }

    /// Index `t` with `ε_T = ε_t`.
    pub fn transmit_index(&self) -> usize {
        self.transmit_index
    }

    pub fn transmit_energy(&self) -> f64 {
        self.level(self.transmit_index)
    }
}

/// Level index of a harvest: the largest `i` with `ε_i < E_H`, or 0 when no
/// level lies strictly below `E_H`. Capped at `L`.
pub fn discretize_harvest(e_h: f64, grid: &BatteryGrid) -> usize {
    if e_h.is_nan() || e_h <= 0.0 {
        return 0;
    }
    let l = grid.levels;
    let guess = (e_h / grid.capacity) * l as f64;
    let mut i = if guess >= l as f64 { l } else { guess.floor() as usize };
    while i > 0 && grid.level(i) >= e_h {
        i -= 1;
    }
    while i < l && grid.level(i + 1) < e_h {
        i += 1;
    }
    i
}

/// `F_{H_SR}` tabulated at every threshold the transition matrix needs.
/// Independent of `E_T`, so one table serves a whole `E_T` search.
#[derive(Debug, Clone)]
pub struct HarvestCdfTable {
    levels: usize,
    /// `F(m·C/(η P_S L))`, m = 0..=L: Mode I harvest of at least m levels.
    full_block: Vec<f64>,
    /// `F(2m·C/(η P_S L))`, m = 0..=L: Mode II half-slot harvest.
    half_block: Vec<f64>,
    /// `F(γ0 N0 / P_S)`: the relay fails to decode.
    decode_failure: f64,
    /// `γ0 N0`.
    decode_power: f64,
    /// `2C/(ηL)`.
    half_block_step: f64,
}

impl HarvestCdfTable {
    pub fn new(p: &SystemParams, g: &LinkGains) -> Result<Self> {
        p.validate()?;
        let spec = RicianSumSpec::new(p.antennas, p.k_factor, g.omega_sr)?;
        let l = p.levels;
        let unit = p.capacity / (p.eta * p.p_s * l as f64);
        let mut full_block = Vec::with_capacity(l + 1);
        let mut half_block = Vec::with_capacity(l + 1);
        for m in 0..=l {
            full_block.push(cdf_h_sr(&spec, m as f64 * unit)?);
            half_block.push(cdf_h_sr(&spec, 2.0 * m as f64 * unit)?);
        }
        let gamma0 = p.thresholds().gamma0;
        Ok(HarvestCdfTable {
            levels: l,
            full_block,
            half_block,
            decode_failure: cdf_h_sr(&spec, gamma0 * p.n0 / p.p_s)?,
            decode_power: gamma0 * p.n0,
            half_block_step: 2.0 * p.capacity / (p.eta * l as f64),
        })
    }

    /// `Pr{γ_SR < γ0}`.
    pub fn decode_failure(&self) -> f64 {
        self.decode_failure
    }

    pub fn levels(&self) -> usize {
        self.levels
    }
}

/// Row-stochastic `(L+1) x (L+1)` matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    size: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = rows.len();
        if size == 0 || rows.iter().any(|r| r.len() != size) {
            return Err(invalid("transition matrix must be square and non-empty"));
        }
        Ok(TransitionMatrix { size, data: rows.into_iter().flatten().collect() })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.size + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.size..(i + 1) * self.size]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.size).map(|i| self.row(i).iter().sum()).collect()
    }

    /// Row-major CSV with a leading `i` column.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        write!(w, "i")?;
        for j in 0..self.size {
            write!(w, ",{j}")?;
        }
        writeln!(w)?;
        for i in 0..self.size {
            write!(w, "{i}")?;
            for v in self.row(i) {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

pub fn build_transition_matrix(p: &SystemParams, g: &LinkGains, grid: &BatteryGrid) -> Result<TransitionMatrix> {
    let table = HarvestCdfTable::new(p, g)?;
    transition_matrix_from_table(&table, grid)
}

/// Assembles the matrix case by case:
///
/// * rows `i < t` (Mode I only): stay, partial charge, full charge;
/// * rows `t <= i < L`: discharge by `t` on a successful decode, otherwise a
///   Mode II half-slot harvest bounded by the decode-failure event;
/// * row `L`: stay full on a failed decode, discharge otherwise.
#[allow(clippy::needless_range_loop)] // indices follow the case formulas
pub fn transition_matrix_from_table(table: &HarvestCdfTable, grid: &BatteryGrid) -> Result<TransitionMatrix> {
    let l = grid.levels();
    if table.levels != l {
        return Err(invalid(format!("CDF table built for L = {} used with L = {l}", table.levels)));
    }
    let t = grid.transmit_index();
    let n = l + 1;
    let f1 = &table.full_block;
    let f2 = &table.half_block;
    let f0 = table.decode_failure;
    // Mode II harvest of m levels needs γ0 N0 >= m·2C/(ηL): past that the
    // decode-failure event, not the quantization, binds.
    let binds = |m: usize| table.decode_power < m as f64 * table.half_block_step;

    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let row = &mut data[i * n..(i + 1) * n];
        if i < t {
            row[i] += f1[1];
            for j in i + 1..l {
                let m = j - i;
                row[j] += f1[m + 1] - f1[m];
            }
            if i < l {
                row[l] += 1.0 - f1[l - i];
            }
        } else {
            row[i - t] += 1.0 - f0;
            if i == l {
                row[l] += f0;
            } else {
                row[i] += if binds(1) { f0 } else { f2[1] };
                for j in i + 1..l {
                    let m = j - i;
                    row[j] += if binds(m) {
                        0.0
                    } else if binds(m + 1) {
                        f0 - f2[m]
                    } else {
                        f2[m + 1] - f2[m]
                    };
                }
                row[l] += if binds(l - i) { 0.0 } else { f0 - f2[l - i] };
            }
        }
        for (j, v) in row.iter_mut().enumerate() {
            if *v < -NEGATIVE_ENTRY_TOL || !v.is_finite() {
                return Err(Error::Numerical(format!("P[{i},{j}] = {v}")));
            }
            *v = v.max(0.0);
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::Numerical(format!("row {i} sums to {sum}")));
        }
    }
    Ok(TransitionMatrix { size: n, data })
}

/// Long-run occupancy of the battery levels.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
}

impl StationaryDistribution {
    pub fn probabilities(&self) -> &[f64] {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// `max_i |(M^T π)_i - π_i|`.
    pub fn residual(&self, m: &TransitionMatrix) -> f64 {
        let n = m.size();
        (0..n)
            .map(|j| {
                let s: f64 = (0..n).map(|i| m.get(i, j) * self.pi[i]).sum();
                (s - self.pi[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "i,pi")?;
        for (i, p) in self.pi.iter().enumerate() {
            writeln!(w, "{i},{p}")?;
        }
        Ok(())
    }
}

/// Solves `(M^T - I + B) π = b` with `B` all ones and `b` a ones vector.
/// Adding `B` folds the normalization `Σπ = 1` into the balance equations.
pub fn stationary_distribution(m: &TransitionMatrix) -> Result<StationaryDistribution> {
    let n = m.size();
    let mut a = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let delta = if r == c { 1.0 } else { 0.0 };
            a[r * n + c] = m.get(c, r) - delta + 1.0;
        }
    }
    let mut pi = vec![1.0; n];
    solve_dense(&mut a, &mut pi, n)?;

    for (i, v) in pi.iter_mut().enumerate() {
        if *v < -ROW_SUM_TOL || !v.is_finite() {
            return Err(Error::SingularSystem(format!("pi[{i}] = {v}")));
        }
        *v = v.max(0.0);
    }
    let total: f64 = pi.iter().sum();
    if (total - 1.0).abs() > ROW_SUM_TOL {
        return Err(Error::SingularSystem(format!("pi sums to {total}")));
    }
    let dist = StationaryDistribution { pi };
    let residual = dist.residual(m);
    if residual > RESIDUAL_TOL {
        return Err(Error::SingularSystem(format!("balance residual {residual:e}")));
    }
    Ok(dist)
}

/// Gaussian elimination with partial pivoting; `rhs` is overwritten with the
/// solution.
fn solve_dense(a: &mut [f64], rhs: &mut [f64], n: usize) -> Result<()> {
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tiny = scale * 1e-14;
    for col in 0..n {
        let (pivot_row, pivot_abs) =
            (col..n)
                .map(|r| (r, a[r * n + col].abs()))
                .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_abs <= tiny {
            return Err(Error::SingularSystem(format!(
                "pivot {pivot_abs:e} in column {col}; the chain is not irreducible"
            )));
        }
        if pivot_row != col {
            for c in 0..n {
                a.swap(col * n + c, pivot_row * n + c);
            }
            rhs.swap(col, pivot_row);
        }
        let pivot = a[col * n + col];
        for r in col + 1..n {
            let factor = a[r * n + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            a[r * n + col] = 0.0;
            for c in col + 1..n {
                a[r * n + c] -= factor * a[col * n + c];
            }
            rhs[r] -= factor * rhs[col];
        }
    }
    for r in (0..n).rev() {
        let mut acc = rhs[r];
        for c in r + 1..n {
            acc -= a[r * n + c] * rhs[c];
        }
        rhs[r] = acc / a[r * n + r];
    }
    Ok(())
}

/// `P_E = Σ_{i >= t} π_i`: probability the relay holds at least `ε_T`.
pub fn cooperation_probability(pi: &StationaryDistribution, grid: &BatteryGrid) -> f64 {
    pi.pi[grid.transmit_index()..].iter().sum::<f64>().clamp(0.0, 1.0)
}
