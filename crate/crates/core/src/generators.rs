//! Ground-truth fixtures: Gaussian low-rank matrices, coherence injection,
//! noise injection and the small worked-example matrices.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{AmcError, Result};
use crate::linalg::{norm, numeric_rank, orthonormalize, DenseMatrix, IndexSet, Tolerance};
use crate::sparsity::{coherence, SubspaceProfile};

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_vec(rng: &mut impl Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

fn gaussian_matrix(rng: &mut impl Rng, m: usize, n: usize) -> DenseMatrix {
    DenseMatrix::new(m, n, gaussian_vec(rng, m * n)).expect("positive dimensions")
}

/// `M = X Y` with standard normal `X` (m x r) and `Y` (r x n).
pub fn gen_gaussian_lowrank(m: usize, n: usize, r: usize, seed: u64) -> Result<DenseMatrix> {
    if r == 0 || r > m.min(n) {
        return Err(AmcError::InvalidParameter(format!("need 1 <= r <= min(m, n), got r = {r}")));
    }
    let mut rng = rng_from_seed(seed);
    let x = gaussian_matrix(&mut rng, m, r);
    let y = gaussian_matrix(&mut rng, r, n);
    x.matmul(&y)
}

/// Replaces `c` random rows with Gaussian vectors. The column space then
/// contains the `c` corresponding standard basis vectors.
pub fn make_column_space_coherent(matrix: &DenseMatrix, c: usize, seed: u64) -> Result<DenseMatrix> {
    let (m, n) = matrix.shape();
    if c >= m {
        return Err(AmcError::InvalidParameter(format!("cannot replace {c} of {m} rows")));
    }
    let mut out = matrix.clone();
    if c == 0 {
        return Ok(out);
    }
    let mut rng = rng_from_seed(seed);
    let mut rows = sample(&mut rng, m, c).into_vec();
    rows.sort_unstable();
    for i in rows {
        out.set_row(i, &gaussian_vec(&mut rng, n));
    }
    Ok(out)
}

/// Column analogue of [`make_column_space_coherent`].
pub fn make_row_space_coherent(matrix: &DenseMatrix, c: usize, seed: u64) -> Result<DenseMatrix> {
    if c >= matrix.cols() {
        return Err(AmcError::InvalidParameter(format!("cannot replace {c} of {} columns", matrix.cols())));
    }
    Ok(make_column_space_coherent(&matrix.transpose(), c, seed)?.transpose())
}

/// Replaces `a` uniformly chosen columns with standard normal vectors and
/// returns the replaced index set (ascending).
pub fn inject_sparse_noise_columns(matrix: &DenseMatrix, a: usize, seed: u64) -> Result<(DenseMatrix, IndexSet)> {
    let (m, n) = matrix.shape();
    if a > n {
        return Err(AmcError::InvalidParameter(format!("cannot corrupt {a} of {n} columns")));
    }
    let mut rng = rng_from_seed(seed);
    let mut cols = sample(&mut rng, n, a).into_vec();
    cols.sort_unstable();
    let mut out = matrix.clone();
    for &j in &cols {
        out.set_column(j, &gaussian_vec(&mut rng, m));
    }
    Ok((out, IndexSet::new(cols, n)?))
}

/// Scales every column to unit ℓ2 norm.
pub fn normalize_columns(matrix: &DenseMatrix) -> Result<DenseMatrix> {
    let mut out = matrix.clone();
    for j in 0..matrix.cols() {
        let c = matrix.column(j);
        let nc = norm(&c);
        if nc == 0.0 {
            return Err(AmcError::InvalidParameter(format!("column {j} is zero and cannot be normalised")));
        }
        out.set_column(j, &c.iter().map(|v| v / nc).collect::<Vec<_>>());
    }
    Ok(out)
}

/// Normalises the columns and adds, per column, an isotropic direction
/// scaled to a norm drawn uniformly from `[0, eps]`.
pub fn inject_bounded_noise(matrix: &DenseMatrix, eps: f64, seed: u64) -> Result<DenseMatrix> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(AmcError::InvalidParameter(format!("noise cap must be >= 0, got {eps}")));
    }
    let l = normalize_columns(matrix)?;
    if eps == 0.0 {
        return Ok(l);
    }
    let mut rng = rng_from_seed(seed);
    let mut out = l.clone();
    let m = matrix.rows();
    for j in 0..matrix.cols() {
        let g = gaussian_vec(&mut rng, m);
        let s = rng.random_range(0.0..=eps) / norm(&g);
        let col: Vec<f64> = l.column(j).iter().zip(&g).map(|(a, b)| a + s * b).collect();
        out.set_column(j, &col);
    }
    Ok(out)
}

/// Coherence class of a generated fixture: (column space, row space), each
/// incoherent (`i`) or coherent (`c`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoherenceClass {
    II,
    IC,
    CI,
    CC,
}

impl CoherenceClass {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ii" => Ok(Self::II),
            "ic" => Ok(Self::IC),
            "ci" => Ok(Self::CI),
            "cc" => Ok(Self::CC),
            _ => Err(AmcError::UnknownName(format!("coherence class {s:?}"))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::II => "ii",
            Self::IC => "ic",
            Self::CI => "ci",
            Self::CC => "cc",
        }
    }

    /// Standard vectors injected into (column space, row space).
    pub fn injections(&self) -> (usize, usize) {
        match self {
            Self::II => (0, 0),
            Self::IC => (0, 1),
            Self::CI => (1, 0),
            Self::CC => (1, 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    /// Standard vectors injected into the column space (rows replaced).
    pub coherent_cols: usize,
    /// Standard vectors injected into the row space (columns replaced).
    pub coherent_rows: usize,
    pub seed: u64,
}

impl FixtureSpec {
    pub fn generic(m: usize, n: usize, r: usize, seed: u64) -> Self {
        Self { m, n, r, coherent_cols: 0, coherent_rows: 0, seed }
    }

    pub fn with_class(m: usize, n: usize, r: usize, class: CoherenceClass, seed: u64) -> Self {
        let (c, d) = class.injections();
        Self { m, n, r, coherent_cols: c, coherent_rows: d, seed }
    }
}

/// A generated ground truth with its column and row space profiles.
#[derive(Clone, Debug)]
pub struct Fixture {
    pub matrix: DenseMatrix,
    pub rank: usize,
    pub column_profile: SubspaceProfile,
    pub row_profile: SubspaceProfile,
}

/// Work budget below which profiles are measured rather than taken from the construction.
const MEASURE_BUDGET: u128 = 20_000;

fn cheap_to_measure(m: usize, r: usize) -> bool {
    let mut acc: u128 = 1;
    let k = r.saturating_sub(1);
    for i in 0..k {
        acc = acc * (m - i) as u128 / (i + 1) as u128;
    }
    acc <= MEASURE_BUDGET || m <= 12
}

fn profile(span: &DenseMatrix, r: usize, known_psi: usize) -> Result<SubspaceProfile> {
    if cheap_to_measure(span.rows(), r) {
        let p = SubspaceProfile::of_span(span, Tolerance::default())?;
        if p.exact {
            return Ok(p);
        }
    }
    // ψ holds with probability one by construction; μ is always measured
    let basis = orthonormalize(span.rows(), &span.columns(), Tolerance::default())?;
    Ok(SubspaceProfile {
        ambient: span.rows(),
        rank: basis.rank(),
        nonsparsity: known_psi,
        sparsity: span.rows() - known_psi,
        coherence: coherence(&basis)?,
        exact: true,
    })
}

/// Builds a rank-`r` fixture: a Gaussian base of rank `r − c − d`, then `c`
/// rows and `d` columns replaced by Gaussian vectors.
pub fn generate(spec: &FixtureSpec) -> Result<Fixture> {
    let FixtureSpec { m, n, r, coherent_cols: c, coherent_rows: d, seed } = *spec;
    if r == 0 || r > m.min(n) {
        return Err(AmcError::InvalidParameter(format!("need 1 <= r <= min(m, n), got r = {r}")));
    }
    if c + d > r {
        return Err(AmcError::InvalidParameter(format!(
            "injecting {c} + {d} standard vectors needs rank at least {}",
            c + d
        )));
    }
    let base_rank = r - c - d;
    let mut mat = if base_rank == 0 {
        DenseMatrix::zeros(m, n)?
    } else {
        gen_gaussian_lowrank(m, n, base_rank, seed)?
    };
    mat = make_column_space_coherent(&mat, c, seed.wrapping_add(0x9e37_79b9))?;
    mat = make_row_space_coherent(&mat, d, seed.wrapping_add(0x7f4a_7c15))?;
    let psi_u = if c > 0 { 1 } else { m - r + 1 };
    let psi_v = if d > 0 { 1 } else { n - r + 1 };
    let column_profile = profile(&mat, r, psi_u)?;
    let row_profile = profile(&mat.transpose(), r, psi_v)?;
    Ok(Fixture { matrix: mat, rank: r, column_profile, row_profile })
}

/// A worked-example matrix, with a cost matrix where one applies.
#[derive(Clone, Debug)]
pub struct NamedFixture {
    pub name: String,
    pub matrix: DenseMatrix,
    pub costs: Option<DenseMatrix>,
}

pub const PAPER_FIXTURE_NAMES: &[&str] =
    &["A", "B", "tightness", "walkthrough", "erhc-greedy-gap", "erhc-greedy-optimal", "erhc-tightness"];

fn rows(data: &[&[f64]]) -> DenseMatrix {
    DenseMatrix::from_rows(&data.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).expect("static fixture")
}

fn erhc_costs() -> DenseMatrix {
    rows(&[&[1., 1., 4., 1.], &[1., 5., 3., 4.], &[4., 3., 4., 4.], &[1., 4., 4., 8.]])
}

/// Six-by-six cost family whose greedy/optimal ratio approaches 2 as `eps`
/// shrinks. The matrix is rank 2 with ψ̄ = 1 and every column pair independent.
pub fn erhc_tightness(eps: f64) -> Result<NamedFixture> {
    if !(eps > 0.0 && eps < 10.0) {
        return Err(AmcError::InvalidParameter(format!("eps must lie in (0, 10), got {eps}")));
    }
    let e = eps / 100.0;
    let t = 10.0 - eps;
    let costs = rows(&[
        &[e, e, e, e, t, t],
        &[e, e, e, e, t, t],
        &[10., 10., e, e, e, e],
        &[10., 10., e, e, e, e],
        &[e, e, 10., 10., t, t],
        &[e, e, 10., 10., t, t],
    ]);
    let matrix = DenseMatrix::from_fn(6, 6, |i, j| 1.0 + ((i + 1) * (j + 1)) as f64)?;
    Ok(NamedFixture { name: "erhc-tightness".into(), matrix, costs: Some(costs) })
}

pub fn paper_fixture(name: &str) -> Result<NamedFixture> {
    let (matrix, costs) = match name {
        "A" => (
            rows(&[
                &[1., 2., 2., 2., 2., 2.],
                &[0., 2., 2., 2., 2., 2.],
                &[0., 2., 2., 2., 2., 2.],
                &[0., 2., 2., 2., 2., 2.],
            ]),
            None,
        ),
        "B" => (
            rows(&[
                &[1., 0., 1., 2., 3., 4.],
                &[0., 1., 2., 3., 4., 5.],
                &[0., 1., 2., 3., 4., 5.],
                &[0., 1., 2., 3., 4., 5.],
            ]),
            None,
        ),
        "tightness" => (rows(&[&[1., 2., 5.], &[1., 2., 4.], &[1., 0., 4.], &[1., 0., 4.]]), None),
        "walkthrough" => (
            rows(&[
                &[0., 0., 0., 0.],
                &[0., 0., 0., 0.],
                &[1., 3., 2., 3.],
                &[0., 0., 0., 0.],
                &[0., 0., 0., 0.],
                &[2., 6., 4., 6.],
            ]),
            None,
        ),
        "erhc-greedy-gap" => (
            rows(&[&[1., 1., 2., 3.], &[1., 2., 3., 4.], &[1., 3., 4., 5.], &[1., 4., 5., 6.]]),
            Some(erhc_costs()),
        ),
        "erhc-greedy-optimal" => (
            rows(&[&[1., 1., 2., 2.], &[1., 2., 2., 3.], &[1., 3., 2., 4.], &[1., 4., 2., 5.]]),
            Some(erhc_costs()),
        ),
        "erhc-tightness" => return erhc_tightness(0.25),
        other => return Err(AmcError::UnknownName(format!("fixture {other:?}"))),
    };
    Ok(NamedFixture { name: name.to_string(), matrix, costs })
}

/// True if the matrix has the requested numeric rank.
pub fn has_rank(m: &DenseMatrix, r: usize) -> bool {
    numeric_rank(m, Tolerance::default()) == r
}
