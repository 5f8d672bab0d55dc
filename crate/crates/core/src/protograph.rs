//! Protograph base matrices and spatially coupled ensemble construction.
//!
//! A protograph is a small nonnegative integer matrix whose entry `B[r][c]`
//! counts the parallel edges between check-node type `r` and variable-node
//! type `c`. Spatial coupling splits the matrix into `W` component slices and
//! lays `L` copies of them along a band: with wrap-around for tail-biting
//! chains, without wrap-around (and `W - 1` extra check rows) for terminated
//! chains.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nonnegative integer protograph matrix, stored dense row-major.
///
/// Rows are check-node types, columns are variable-node types.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
}

impl BaseMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, entries: Vec<u32>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(
                "base matrix must have at least one row and one column".into(),
            ));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for a {}x{} matrix, got {}",
                rows * cols,
                rows,
                cols,
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    /// Builds a matrix from a list of equal-length rows.
    pub fn from_rows(rows: Vec<Vec<u32>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch("ragged rows in base matrix".into()));
        }
        Self::new(n_rows, n_cols, rows.into_iter().flatten().collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.entries[row * self.cols + col]
    }

    /// Check-node type degrees (row sums).
    pub fn row_sums(&self) -> Vec<u32> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c)).sum())
            .collect()
    }

    /// Variable-node type degrees (column sums).
    pub fn col_sums(&self) -> Vec<u32> {
        (0..self.cols)
            .map(|c| (0..self.rows).map(|r| self.get(r, c)).sum())
            .collect()
    }

    /// True when every row and every column has at least one edge.
    pub fn is_connected(&self) -> bool {
        self.row_sums().iter().all(|&d| d > 0) && self.col_sums().iter().all(|&d| d > 0)
    }

    /// Entrywise sum of two matrices of equal shape.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Self::new(self.rows, self.cols, entries)
    }

    fn zero(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![0; rows * cols],
        }
    }

    fn add_block(&mut self, block: &BaseMatrix, row_off: usize, col_off: usize) {
        for r in 0..block.rows {
            for c in 0..block.cols {
                self.entries[(row_off + r) * self.cols + (col_off + c)] += block.get(r, c);
            }
        }
    }
}

/// How the component slices are laid out along the chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingMode {
    /// Circulant band: slice `i` of sub-block `j` lands on block row `(j + i) mod L`.
    TailBiting,
    /// Plain band with `W - 1` extra check rows at the end of the chain.
    Terminated,
    /// No replication: the ensemble is the summed base matrix itself.
    Uncoupled,
}

impl std::fmt::Display for CouplingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CouplingMode::TailBiting => write!(f, "tail_biting"),
            CouplingMode::Terminated => write!(f, "terminated"),
            CouplingMode::Uncoupled => write!(f, "uncoupled"),
        }
    }
}

/// Split of a base matrix into `W` slices plus the replication parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingSpec {
    components: Vec<BaseMatrix>,
    replication: usize,
    mode: CouplingMode,
}

impl CouplingSpec {
    /// Validates and stores a coupling split. `W` is `components.len()`.
    pub fn new(components: Vec<BaseMatrix>, replication: usize, mode: CouplingMode) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidArgument("coupling needs at least one component".into()));
        }
        let (m, n) = (components[0].rows(), components[0].cols());
        if components.iter().any(|b| b.rows() != m || b.cols() != n) {
            return Err(Error::DimensionMismatch(
                "all coupling components must share the same shape".into(),
            ));
        }
        if replication < components.len() {
            return Err(Error::InvalidArgument(format!(
                "replication factor L={} must be >= coupling window W={}",
                replication,
                components.len()
            )));
        }
        let spec = Self {
            components,
            replication,
            mode,
        };
        if !spec.uncoupled_base().is_connected() {
            return Err(Error::InvalidArgument(
                "summed base matrix has a disconnected node type".into(),
            ));
        }
        Ok(spec)
    }

    pub fn components(&self) -> &[BaseMatrix] {
        &self.components
    }

    /// Coupling window `W`.
    pub fn window(&self) -> usize {
        self.components.len()
    }

    /// Replication factor `L` (number of sub-blocks).
    pub fn replication(&self) -> usize {
        self.replication
    }

    pub fn mode(&self) -> CouplingMode {
        self.mode
    }

    /// Rows `M'` of each component slice.
    pub fn rows_per_block(&self) -> usize {
        self.components[0].rows()
    }

    /// Columns `N'` of each component slice.
    pub fn cols_per_block(&self) -> usize {
        self.components[0].cols()
    }

    /// Entrywise sum of the component slices (the uncoupled protograph).
    pub fn uncoupled_base(&self) -> BaseMatrix {
        let mut sum = BaseMatrix::zero(self.rows_per_block(), self.cols_per_block());
        for b in &self.components {
            sum.add_block(b, 0, 0);
        }
        sum
    }

    /// Same split with a different mode, keeping components and `L`.
    pub fn with_mode(&self, mode: CouplingMode) -> Self {
        Self {
            mode,
            ..self.clone()
        }
    }

    /// Same split with a different replication factor.
    pub fn with_replication(&self, replication: usize) -> Result<Self> {
        Self::new(self.components.clone(), replication, self.mode)
    }
}

/// An assembled ensemble: the full protograph plus its construction data.
#[derive(Debug, Clone)]
pub struct CoupledEnsemble {
    base: BaseMatrix,
    spec: CouplingSpec,
    rate: Ratio<i64>,
}

impl CoupledEnsemble {
    pub fn base(&self) -> &BaseMatrix {
        &self.base
    }

    pub fn spec(&self) -> &CouplingSpec {
        &self.spec
    }

    /// Exact design rate.
    pub fn rate(&self) -> Ratio<i64> {
        self.rate
    }

    pub fn rate_f64(&self) -> f64 {
        *self.rate.numer() as f64 / *self.rate.denom() as f64
    }

    /// Number of spatial positions (sub-blocks); 1 for uncoupled.
    pub fn positions(&self) -> usize {
        match self.spec.mode() {
            CouplingMode::Uncoupled => 1,
            _ => self.spec.replication(),
        }
    }

    /// Variable types per spatial position.
    pub fn vars_per_position(&self) -> usize {
        self.spec.cols_per_block()
    }

    /// Spatial position of a variable-type column index.
    pub fn position_of_var(&self, var: usize) -> usize {
        match self.spec.mode() {
            CouplingMode::Uncoupled => 0,
            _ => var / self.spec.cols_per_block(),
        }
    }
}

/// Assembles the coupled (or uncoupled) protograph for a coupling spec.
///
/// Tail-biting places slice `i` of sub-block `j` at block row `(j + i) mod L`;
/// terminated places it at block row `j + i` of an `(L + W - 1)`-row band.
pub fn build_coupled(spec: &CouplingSpec) -> Result<CoupledEnsemble> {
    let (m, n) = (spec.rows_per_block(), spec.cols_per_block());
    let l = spec.replication();
    let w = spec.window();
    let base = match spec.mode() {
        CouplingMode::Uncoupled => spec.uncoupled_base(),
        CouplingMode::TailBiting => {
            let mut base = BaseMatrix::zero(l * m, l * n);
            for j in 0..l {
                for (i, slice) in spec.components().iter().enumerate() {
                    base.add_block(slice, ((j + i) % l) * m, j * n);
                }
            }
            base
        }
        CouplingMode::Terminated => {
            let mut base = BaseMatrix::zero((l + w - 1) * m, l * n);
            for j in 0..l {
                for (i, slice) in spec.components().iter().enumerate() {
                    base.add_block(slice, (j + i) * m, j * n);
                }
            }
            base
        }
    };
    if !base.is_connected() {
        return Err(Error::InvalidArgument(
            "assembled protograph has a disconnected node type".into(),
        ));
    }
    let rate = design_rate(spec);
    Ok(CoupledEnsemble {
        base,
        spec: spec.clone(),
        rate,
    })
}

/// Exact design rate of a coupling spec.
///
/// Tail-biting and uncoupled chains keep the block-code rate `1 - M'/N'`;
/// termination costs `(L + W - 1)/L * M'/N'` instead of `M'/N'`.
pub fn design_rate(spec: &CouplingSpec) -> Ratio<i64> {
    let m = spec.rows_per_block() as i64;
    let n = spec.cols_per_block() as i64;
    let l = spec.replication() as i64;
    let w = spec.window() as i64;
    match spec.mode() {
        CouplingMode::TailBiting | CouplingMode::Uncoupled => {
            Ratio::from_integer(1) - Ratio::new(m, n)
        }
        CouplingMode::Terminated => {
            Ratio::from_integer(1) - Ratio::new((l + w - 1) * m, l * n)
        }
    }
}

/// A named coupling spec, as stored in the code registry.
#[derive(Debug, Clone)]
pub struct NamedCode {
    pub name: String,
    pub spec: CouplingSpec,
}

/// JSON form of a code definition: `{name, components, L, W, mode}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct CodeDefinition {
    pub name: String,
    /// `W` component matrices, each a list of rows.
    pub components: Vec<Vec<Vec<u32>>>,
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "W")]
    pub w: usize,
    pub mode: CouplingMode,
}

impl CodeDefinition {
    pub fn to_named(&self) -> Result<NamedCode> {
        if self.components.len() != self.w {
            return Err(Error::InvalidArgument(format!(
                "code '{}' declares W={} but lists {} components",
                self.name,
                self.w,
                self.components.len()
            )));
        }
        let components = self
            .components
            .iter()
            .cloned()
            .map(BaseMatrix::from_rows)
            .collect::<Result<Vec<_>>>()?;
        Ok(NamedCode {
            name: self.name.clone(),
            spec: CouplingSpec::new(components, self.l, self.mode)?,
        })
    }

    pub fn from_named(code: &NamedCode) -> Self {
        let components = code
            .spec
            .components()
            .iter()
            .map(|b| {
                (0..b.rows())
                    .map(|r| (0..b.cols()).map(|c| b.get(r, c)).collect())
                    .collect()
            })
            .collect();
        Self {
            name: code.name.clone(),
            components,
            l: code.spec.replication(),
            w: code.spec.window(),
            mode: code.spec.mode(),
        }
    }
}

/// Parses a JSON array of code definitions.
pub fn codes_from_json(json: &str) -> Result<Vec<NamedCode>> {
    let defs: Vec<CodeDefinition> = serde_json::from_str(json)?;
    defs.iter().map(CodeDefinition::to_named).collect()
}

fn regular_split(row: &[u32], window: usize) -> Vec<BaseMatrix> {
    // Uniform split B_i = B / W; entries of the bundled regular codes divide evenly.
    let slice: Vec<u32> = row.iter().map(|&e| e / window as u32).collect();
    (0..window)
        .map(|_| BaseMatrix::from_rows(vec![slice.clone()]).expect("static slice"))
        .collect()
}

/// The four bundled tail-biting codes, each with `L = 50` by default.
///
/// * `C1` - regular (3,6), `W = 3`, rate 1/2
/// * `C2` - regular (4,8), `W = 4`, rate 1/2
/// * `C3` - regular protograph `(2 2 2 2) + (2 2 2 2)`, `W = 2`, rate 3/4
/// * `C4` - irregular protograph `(1 2 1 2) + (3 2 3 2)`, `W = 2`, rate 3/4
pub fn standard_codes() -> Vec<NamedCode> {
    let default_l = 50;
    let c1 = CouplingSpec::new(regular_split(&[3, 3], 3), default_l, CouplingMode::TailBiting)
        .expect("C1 spec");
    let c2 = CouplingSpec::new(regular_split(&[4, 4], 4), default_l, CouplingMode::TailBiting)
        .expect("C2 spec");
    let c3 = CouplingSpec::new(
        regular_split(&[4, 4, 4, 4], 2),
        default_l,
        CouplingMode::TailBiting,
    )
    .expect("C3 spec");
    let c4 = CouplingSpec::new(
        vec![
            BaseMatrix::from_rows(vec![vec![1, 2, 1, 2]]).expect("C4 B0"),
            BaseMatrix::from_rows(vec![vec![3, 2, 3, 2]]).expect("C4 B1"),
        ],
        default_l,
        CouplingMode::TailBiting,
    )
    .expect("C4 spec");
    vec![
        NamedCode { name: "C1".into(), spec: c1 },
        NamedCode { name: "C2".into(), spec: c2 },
        NamedCode { name: "C3".into(), spec: c3 },
        NamedCode { name: "C4".into(), spec: c4 },
    ]
}

/// Looks up a bundled code by (case-insensitive) name.
pub fn standard_code(name: &str) -> Result<NamedCode> {
    standard_codes()
        .into_iter()
        .find(|c| c.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| Error::UnknownCode(name.to_string()))
}
