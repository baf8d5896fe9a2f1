//! (h x l)-fold bi-holdout plans and the A/B/C/D block split.

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::Rng;
use crate::scalar::Scalar;
use serde::{Deserialize, Serialize};

/// Partition of the row indices into `h` groups and the column indices
/// into `l` groups. Each (row group, column group) pair is one fold.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PlanRepr", into = "PlanRepr")]
pub struct HoldoutPlan {
    row_groups: Vec<Vec<usize>>,
    col_groups: Vec<Vec<usize>>,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct PlanRepr {
    h: usize,
    l: usize,
    seed: u64,
    row_groups: Vec<Vec<usize>>,
    col_groups: Vec<Vec<usize>>,
}

impl From<HoldoutPlan> for PlanRepr {
    fn from(p: HoldoutPlan) -> Self {
        PlanRepr {
            h: p.row_groups.len(),
            l: p.col_groups.len(),
            seed: p.seed,
            row_groups: p.row_groups,
            col_groups: p.col_groups,
        }
    }
}

impl TryFrom<PlanRepr> for HoldoutPlan {
    type Error = Error;

    fn try_from(r: PlanRepr) -> Result<Self> {
        if r.h != r.row_groups.len() || r.l != r.col_groups.len() {
            return Err(Error::InvalidPlan(format!(
                "h={} l={} but {} row groups and {} column groups",
                r.h,
                r.l,
                r.row_groups.len(),
                r.col_groups.len()
            )));
        }
        HoldoutPlan::from_groups(r.row_groups, r.col_groups, r.seed)
    }
}

/// One held-out block: the rows and columns of `A`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fold {
    pub held_rows: Vec<usize>,
    pub held_cols: Vec<usize>,
    pub fold_id: (usize, usize),
}

/// Copies of the four blocks of `X` for one fold, with held rows and
/// columns moved to the top-left.
#[derive(Clone, Debug, PartialEq)]
pub struct Blocks<T> {
    /// Held-out `r x s` block.
    pub a: Matrix<T>,
    /// Held rows, retained columns: `r x (n - s)`.
    pub b: Matrix<T>,
    /// Retained rows, held columns: `(m - r) x s`.
    pub c: Matrix<T>,
    /// Retained rows and columns: `(m - r) x (n - s)`.
    pub d: Matrix<T>,
}

fn deal_round_robin(len: usize, groups: usize, rng: &mut Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..len).collect();
    rng.shuffle(&mut idx);
    let mut out = vec![Vec::with_capacity(len / groups + 1); groups];
    for (pos, i) in idx.into_iter().enumerate() {
        out[pos % groups].push(i);
    }
    for g in &mut out {
        g.sort_unstable();
    }
    out
}

fn check_partition(groups: &[Vec<usize>], what: &str) -> Result<usize> {
    if groups.len() < 2 {
        return Err(Error::InvalidPlan(format!(
            "need at least 2 {} groups, got {}",
            what,
            groups.len()
        )));
    }
    let total: usize = groups.iter().map(Vec::len).sum();
    let mut seen = vec![false; total];
    for g in groups {
        if g.is_empty() {
            return Err(Error::InvalidPlan(format!("empty {} group", what)));
        }
        for &i in g {
            if i >= total || seen[i] {
                return Err(Error::InvalidPlan(format!(
                    "{} groups are not a partition of 0..{}",
                    what, total
                )));
            }
            seen[i] = true;
        }
    }
    let min = groups.iter().map(Vec::len).min().unwrap_or(0);
    let max = groups.iter().map(Vec::len).max().unwrap_or(0);
    if max - min > 1 {
        return Err(Error::InvalidPlan(format!(
            "{} group sizes range from {} to {}",
            what, min, max
        )));
    }
    Ok(total)
}

/// Builds an `(h x l)`-fold plan for an `m x n` matrix. Rows and columns are
/// shuffled independently by `rng` and dealt round-robin, so group sizes
/// differ by at most one.
pub fn make_fold_plan(m: usize, n: usize, h: usize, l: usize, rng: &mut Rng) -> Result<HoldoutPlan> {
    if h < 2 || l < 2 {
        return Err(Error::InvalidPlan(format!(
            "need h >= 2 and l >= 2 so every fold keeps some data, got {}x{}",
            h, l
        )));
    }
    if h > m || l > n {
        return Err(Error::InvalidPlan(format!(
            "{}x{} folds do not fit a {}x{} matrix",
            h, l, m, n
        )));
    }
    let seed = rng.seed();
    let row_groups = deal_round_robin(m, h, rng);
    let col_groups = deal_round_robin(n, l, rng);
    Ok(HoldoutPlan { row_groups, col_groups, seed })
}

impl HoldoutPlan {
    /// Plan from a fresh stream seeded with `seed`.
    pub fn new(m: usize, n: usize, h: usize, l: usize, seed: u64) -> Result<Self> {
        make_fold_plan(m, n, h, l, &mut Rng::new(seed))
    }

    /// The single-entry scheme: every row and every column is its own group.
    pub fn leave_one_out(m: usize, n: usize) -> Result<Self> {
        Self::from_groups((0..m).map(|i| vec![i]).collect(), (0..n).map(|j| vec![j]).collect(), 0)
    }

    /// Plan from explicit groups, validated as balanced partitions.
    pub fn from_groups(row_groups: Vec<Vec<usize>>, col_groups: Vec<Vec<usize>>, seed: u64) -> Result<Self> {
        check_partition(&row_groups, "row")?;
        check_partition(&col_groups, "column")?;
        Ok(HoldoutPlan { row_groups, col_groups, seed })
    }

    pub fn h(&self) -> usize {
        self.row_groups.len()
    }

    pub fn l(&self) -> usize {
        self.col_groups.len()
    }

    pub fn nrows(&self) -> usize {
        self.row_groups.iter().map(Vec::len).sum()
    }

    pub fn ncols(&self) -> usize {
        self.col_groups.iter().map(Vec::len).sum()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn row_groups(&self) -> &[Vec<usize>] {
        &self.row_groups
    }

    pub fn col_groups(&self) -> &[Vec<usize>] {
        &self.col_groups
    }

    pub fn num_folds(&self) -> usize {
        self.h() * self.l()
    }

    pub fn fold(&self, i: usize, j: usize) -> Fold {
        Fold {
            held_rows: self.row_groups[i].clone(),
            held_cols: self.col_groups[j].clone(),
            fold_id: (i, j),
        }
    }

    /// All folds in row-major `(i, j)` order.
    pub fn folds(&self) -> Vec<Fold> {
        let mut out = Vec::with_capacity(self.num_folds());
        for i in 0..self.h() {
            for j in 0..self.l() {
                out.push(self.fold(i, j));
            }
        }
        out
    }

    /// Smallest retained dimension `min(m - r, n - s)` over all folds; the
    /// largest rank any fold can fit.
    pub fn max_fit_rank(&self) -> usize {
        let (m, n) = (self.nrows(), self.ncols());
        let r = self.row_groups.iter().map(Vec::len).max().unwrap_or(0);
        let s = self.col_groups.iter().map(Vec::len).max().unwrap_or(0);
        (m - r).min(n - s)
    }

    pub fn check_dims(&self, m: usize, n: usize) -> Result<()> {
        if self.nrows() != m || self.ncols() != n {
            return Err(Error::Dimension(format!(
                "plan covers {}x{}, matrix is {}x{}",
                self.nrows(),
                self.ncols(),
                m,
                n
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("plan serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

fn complement(held: &[usize], len: usize, what: &str) -> Result<Vec<usize>> {
    let mut mask = vec![false; len];
    for &i in held {
        if i >= len {
            return Err(Error::Index { index: i, bound: len });
        }
        if mask[i] {
            return Err(Error::InvalidArgument(format!("duplicate held {} index {}", what, i)));
        }
        mask[i] = true;
    }
    if held.is_empty() || held.len() == len {
        return Err(Error::InvalidArgument(format!(
            "held {} must be a nonempty proper subset of 0..{}",
            what, len
        )));
    }
    Ok((0..len).filter(|&i| !mask[i]).collect())
}

impl Fold {
    /// Retained (not held) row and column indices, ascending.
    pub fn kept(&self, m: usize, n: usize) -> Result<(Vec<usize>, Vec<usize>)> {
        Ok((complement(&self.held_rows, m, "row")?, complement(&self.held_cols, n, "column")?))
    }
}

/// Splits `x` into the blocks of one fold. Retained indices keep their
/// original ascending order.
pub fn split_blocks<T: Scalar>(x: &Matrix<T>, fold: &Fold) -> Result<Blocks<T>> {
    let (kept_rows, kept_cols) = fold.kept(x.rows(), x.cols())?;
    Ok(Blocks {
        a: x.select(&fold.held_rows, &fold.held_cols)?,
        b: x.select(&fold.held_rows, &kept_cols)?,
        c: x.select(&kept_rows, &fold.held_cols)?,
        d: x.select(&kept_rows, &kept_cols)?,
    })
}

impl<T: Scalar> Blocks<T> {
    /// `(r, s)`: the held-out block shape.
    pub fn held_shape(&self) -> (usize, usize) {
        self.a.shape()
    }

    /// Largest rank a fit of `D` can take, `min(m - r, n - s)`.
    pub fn max_rank(&self) -> usize {
        self.d.rows().min(self.d.cols())
    }

    /// Puts the blocks back at their original positions.
    pub fn reassemble(&self, fold: &Fold) -> Result<Matrix<T>> {
        let m = self.a.rows() + self.c.rows();
        let n = self.a.cols() + self.b.cols();
        let (kr, kc) = fold.kept(m, n)?;
        let mut x = Matrix::zeros(m, n);
        for (a, &i) in fold.held_rows.iter().enumerate() {
            for (b, &j) in fold.held_cols.iter().enumerate() {
                x[(i, j)] = self.a.get(a, b);
            }
            for (b, &j) in kc.iter().enumerate() {
                x[(i, j)] = self.b.get(a, b);
            }
        }
        for (a, &i) in kr.iter().enumerate() {
            for (b, &j) in fold.held_cols.iter().enumerate() {
                x[(i, j)] = self.c.get(a, b);
            }
            for (b, &j) in kc.iter().enumerate() {
                x[(i, j)] = self.d.get(a, b);
            }
        }
        Ok(x)
    }

    /// Entrywise-nonnegativity of all four blocks.
    pub fn is_nonnegative(&self) -> bool {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .all(|m| m.as_slice().iter().all(|&v| v >= T::zero()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spike() -> Matrix<f64> {
        let mut x = Matrix::zeros(4, 4);
        x[(0, 0)] = 1.0;
        x
    }

    #[test]
    fn exact_division_gives_equal_blocks() {
        let plan = HoldoutPlan::new(4, 4, 2, 2, 1).unwrap();
        assert_eq!(plan.num_folds(), 4);
        for f in plan.folds() {
            assert_eq!(f.held_rows.len(), 2);
            assert_eq!(f.held_cols.len(), 2);
        }
    }

    #[test]
    fn uneven_rows_balance_within_one() {
        let plan = HoldoutPlan::new(5, 4, 2, 2, 3).unwrap();
        let mut sizes: Vec<usize> = plan.row_groups().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 3]);
    }

    #[test]
    fn leave_one_out_has_mn_folds() {
        let plan = HoldoutPlan::new(3, 4, 3, 4, 0).unwrap();
        assert_eq!(plan.num_folds(), 12);
        assert!(plan.folds().iter().all(|f| f.held_rows.len() == 1 && f.held_cols.len() == 1));
        assert_eq!(HoldoutPlan::leave_one_out(3, 4).unwrap().num_folds(), 12);
    }

    #[test]
    fn invalid_plans() {
        assert!(matches!(HoldoutPlan::new(4, 4, 5, 2, 0), Err(Error::InvalidPlan(_))));
        assert!(matches!(HoldoutPlan::new(4, 4, 2, 0, 0), Err(Error::InvalidPlan(_))));
        assert!(matches!(HoldoutPlan::new(4, 4, 1, 2, 0), Err(Error::InvalidPlan(_))));
        assert!(HoldoutPlan::from_groups(vec![vec![0, 1, 2], vec![3]], vec![vec![0], vec![1]], 0).is_err());
        assert!(HoldoutPlan::from_groups(vec![vec![0, 0], vec![1]], vec![vec![0], vec![1]], 0).is_err());
    }

    #[test]
    fn spike_blocks() {
        let fold = Fold { held_rows: vec![0], held_cols: vec![0], fold_id: (0, 0) };
        let b = split_blocks(&spike(), &fold).unwrap();
        assert_eq!(b.a, Matrix::from_rows(&[[1.0]]).unwrap());
        assert_eq!(b.b, Matrix::zeros(1, 3));
        assert_eq!(b.c, Matrix::zeros(3, 1));
        assert_eq!(b.d, Matrix::zeros(3, 3));
    }

    #[test]
    fn two_by_two_blocks() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        let fold = Fold { held_rows: vec![0], held_cols: vec![1], fold_id: (0, 1) };
        let b = split_blocks(&x, &fold).unwrap();
        assert_eq!(b.a.get(0, 0), 2.0);
        assert_eq!(b.b.get(0, 0), 1.0);
        assert_eq!(b.c.get(0, 0), 4.0);
        assert_eq!(b.d.get(0, 0), 3.0);
        assert_eq!(b.reassemble(&fold).unwrap(), x);
    }

    #[test]
    fn improper_folds_rejected() {
        let x = Matrix::<f64>::zeros(3, 3);
        let all_rows = Fold { held_rows: vec![0, 1, 2], held_cols: vec![0], fold_id: (0, 0) };
        assert!(split_blocks(&x, &all_rows).is_err());
        let oob = Fold { held_rows: vec![7], held_cols: vec![0], fold_id: (0, 0) };
        assert!(matches!(split_blocks(&x, &oob), Err(Error::Index { index: 7, bound: 3 })));
    }

    #[test]
    fn json_round_trip_and_schema() {
        let plan = HoldoutPlan::new(7, 5, 3, 2, 99).unwrap();
        let s = plan.to_json();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["h"], 3);
        assert_eq!(v["l"], 2);
        assert_eq!(v["seed"], 99);
        assert_eq!(HoldoutPlan::from_json(&s).unwrap(), plan);
        assert!(HoldoutPlan::from_json(r#"{"h":2,"l":2,"seed":0,"row_groups":[[0],[0]],"col_groups":[[0],[1]]}"#).is_err());
    }
}
