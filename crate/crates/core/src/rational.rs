//! Exact rational scalars used by the polyhedral layer.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar. All polyhedral geometry is carried out in `Rat`;
/// floats only appear once weights are evaluated numerically.
pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

pub fn rat_int(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    r.to_f64()
        .unwrap_or_else(|| r.numer().to_f64().unwrap() / r.denom().to_f64().unwrap())
}

/// Renders `p/q` (or just `p` for integers), the format used in JSON reports.
pub fn rat_to_string(r: &Rat) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parses the `p/q` / integer / decimal forms accepted by CLI overrides.
pub fn rat_from_str(s: &str) -> Option<Rat> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(Rat::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.trim_start().starts_with('-');
        let int: BigInt = if int.is_empty() || int == "-" {
            BigInt::zero()
        } else {
            int.parse().ok()?
        };
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let num: BigInt = frac.parse().ok()?;
        let den = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_part = Rat::new(num, den);
        let int_part = Rat::from_integer(int);
        return Some(if neg {
            int_part - frac_part
        } else {
            int_part + frac_part
        });
    }
    let p: BigInt = s.parse().ok()?;
    Some(Rat::from_integer(p))
}

/// Exact solve of a square rational linear system by Gaussian elimination.
/// Returns `None` when the matrix is singular.
pub fn solve_linear(matrix: &[Vec<Rat>], rhs: &[Rat]) -> Option<Vec<Rat>> {
    let n = rhs.len();
    debug_assert!(matrix.len() == n && matrix.iter().all(|row| row.len() == n));
    let mut a: Vec<Vec<Rat>> = matrix.to_vec();
    let mut b: Vec<Rat> = rhs.to_vec();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].clone();
        for r in 0..n {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &inv;
            for c in col..n {
                let sub = &factor * &a[col][c];
                a[r][c] -= sub;
            }
            let sub = &factor * &b[col];
            b[r] -= sub;
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

/// Rank of a rational matrix (rows × cols), by elimination.
pub fn rank(rows: &[Vec<Rat>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let cols = rows[0].len();
    let mut a: Vec<Vec<Rat>> = rows.to_vec();
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..a.len()).find(|&r| !a[r][col].is_zero()) else {
            continue;
        };
        a.swap(rank, pivot);
        let inv = a[rank][col].clone();
        for r in 0..a.len() {
            if r == rank || a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &inv;
            for c in col..cols {
                let sub = &factor * &a[rank][c];
                a[r][c] -= sub;
            }
        }
        rank += 1;
        if rank == a.len() {
            break;
        }
    }
    rank
}

/// One-dimensional nullspace vector of a homogeneous system with rank n-1,
/// scaled to the smallest integer vector with positive leading sign.
pub fn nullspace_vector(rows: &[Vec<Rat>], n: usize) -> Option<Vec<Rat>> {
    // Reduce to row echelon form, then back-substitute with one free column.
    let mut a: Vec<Vec<Rat>> = rows.to_vec();
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..n {
        let Some(p) = (r..a.len()).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(r, p);
        let inv = a[r][col].clone();
        for i in 0..a.len() {
            if i == r || a[i][col].is_zero() {
                continue;
            }
            let factor = &a[i][col] / &inv;
            for c in 0..n {
                let sub = &factor * &a[r][c];
                a[i][c] -= sub;
            }
        }
        pivots.push(col);
        r += 1;
    }
    if r + 1 != n {
        return None;
    }
    let free = (0..n).find(|c| !pivots.contains(c))?;
    let mut v = vec![Rat::zero(); n];
    v[free] = Rat::one();
    for (row_idx, &pc) in pivots.iter().enumerate() {
        // pivot row: a[row_idx][pc]*v[pc] + a[row_idx][free]*1 = 0
        v[pc] = -&a[row_idx][free] / &a[row_idx][pc];
    }
    // Clear denominators and divide by gcd for a canonical form.
    let lcm = v
        .iter()
        .map(|x| x.denom().clone())
        .fold(BigInt::one(), num::integer::lcm);
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let gcd = ints
        .iter()
        .map(|x| x.abs())
        .fold(BigInt::zero(), num::integer::gcd);
    if gcd.is_zero() {
        return None;
    }
    Some(ints.into_iter().map(|x| Rat::from_integer(x / &gcd)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_2x2() {
        // 4a1 = 1, 2a1 + 3a2 = 1  =>  a = (1/4, 1/6)
        let m = vec![vec![rat_int(4), rat_int(0)], vec![rat_int(2), rat_int(3)]];
        let rhs = vec![rat_int(1), rat_int(1)];
        let sol = solve_linear(&m, &rhs).unwrap();
        assert_eq!(sol, vec![rat(1, 4), rat(1, 6)]);
    }

    #[test]
    fn singular_detected() {
        let m = vec![vec![rat_int(1), rat_int(2)], vec![rat_int(2), rat_int(4)]];
        let rhs = vec![rat_int(1), rat_int(1)];
        assert!(solve_linear(&m, &rhs).is_none());
    }

    #[test]
    fn rat_strings() {
        assert_eq!(rat_to_string(&rat(1, 2)), "1/2");
        assert_eq!(rat_to_string(&rat_int(-3)), "-3");
        assert_eq!(rat_from_str("2.5").unwrap(), rat(5, 2));
        assert_eq!(rat_from_str("-0.25").unwrap(), rat(-1, 4));
        assert_eq!(rat_from_str("7/3").unwrap(), rat(7, 3));
        assert!(rat_from_str("1/0").is_none());
    }

    #[test]
    fn rank_and_nullspace() {
        let rows = vec![vec![rat_int(1), rat_int(2), rat_int(0)]];
        assert_eq!(rank(&rows), 1);
        let ns = nullspace_vector(&vec![vec![rat_int(2), rat_int(-1)]], 2).unwrap();
        assert_eq!(ns, vec![rat_int(1), rat_int(2)]);
    }
}
