#![allow(clippy::needless_range_loop)]

//! Test-only brute-force oracle for `H^3(G, ℚ/ℤ)` invariant factors.
//!
//! Deliberately plain: its own coboundary-matrix assembly from the raw
//! multiplication table, a textbook Smith reduction with no pivot
//! heuristics, and a triangular-solve lattice quotient. Shares nothing with
//! the crate's linear algebra beyond the `FiniteGroup` type, so it checks
//! the production pipeline end to end at full coboundary-matrix scale.

use anomaly_core::groups::FiniteGroup;

type M = Vec<Vec<i128>>;

fn zeros(rows: usize, cols: usize) -> M {
    vec![vec![0; cols]; rows]
}

fn identity(n: usize) -> M {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = 1;
    }
    m
}

/// Coboundary matrix of `d: C^n(G, ℚ/ℤ) → C^{n+1}` on integer coordinates,
/// assembled directly from the alternating-sum formula.
fn coboundary_matrix(g: &FiniteGroup, n: usize) -> M {
    let order = g.order();
    let rows = order.pow((n + 1) as u32);
    let cols = order.pow(n as u32);
    let unindex = |mut idx: usize, len: usize| -> Vec<usize> {
        let mut t = vec![0; len];
        for i in (0..len).rev() {
            t[i] = idx % order;
            idx /= order;
        }
        t
    };
    let index = |t: &[usize]| -> usize { t.iter().fold(0, |acc, &x| acc * order + x) };
    let mut m = zeros(rows, cols);
    for (r, row) in m.iter_mut().enumerate() {
        let tuple = unindex(r, n + 1);
        row[index(&tuple[1..])] += 1;
        let mut sign = -1i128;
        for i in 0..n {
            let mut t = Vec::with_capacity(n);
            t.extend_from_slice(&tuple[..i]);
            t.push(g.mul(tuple[i], tuple[i + 1]));
            t.extend_from_slice(&tuple[i + 2..]);
            row[index(&t)] += sign;
            sign = -sign;
        }
        row[index(&tuple[..n])] += sign;
    }
    m
}

fn cm(a: i128, b: i128) -> i128 {
    a.checked_mul(b).expect("oracle overflow")
}

fn cs(a: i128, b: i128) -> i128 {
    a.checked_sub(b).expect("oracle overflow")
}

/// Textbook Smith reduction, accumulating only the column transform `Q`
/// (so `A·Q` has the diagonal's column space structure: `P A Q = D`).
/// Pivots are chosen by minimal magnitude, which keeps the entries small;
/// all arithmetic is overflow-checked. Returns the raw diagonal, which
/// matches `q` column-for-column; apply [`normalize_chain`] to get
/// invariant factors.
fn smith_with_q(a: &M) -> (Vec<i128>, M) {
    let rows = a.len();
    let cols = a[0].len();
    let mut m = a.clone();
    let mut q = identity(cols);
    let mut t = 0usize;
    while t < rows.min(cols) {
        // minimal-magnitude pivot in the trailing block
        let mut best: Option<(usize, usize, i128)> = None;
        'scan: for i in t..rows {
            for j in t..cols {
                let v = m[i][j].abs();
                if v != 0 && best.is_none_or(|(_, _, b)| v < b) {
                    best = Some((i, j, v));
                    if v == 1 {
                        break 'scan;
                    }
                }
            }
        }
        let Some((pi, pj, _)) = best else { break };
        m.swap(t, pi);
        for row in m.iter_mut() {
            row.swap(t, pj);
        }
        for row in q.iter_mut() {
            row.swap(t, pj);
        }
        // Euclidean clearing; remainders re-enter via the minimal pivot
        let mut clean = true;
        for i in t + 1..rows {
            if m[i][t] != 0 {
                let f = m[i][t].div_euclid(m[t][t]);
                for j in 0..cols {
                    m[i][j] = cs(m[i][j], cm(f, m[t][j]));
                }
                if m[i][t] != 0 {
                    clean = false;
                }
            }
        }
        for j in t + 1..cols {
            if m[t][j] != 0 {
                let f = m[t][j].div_euclid(m[t][t]);
                for i in 0..rows {
                    m[i][j] = cs(m[i][j], cm(f, m[i][t]));
                }
                for r in 0..cols {
                    q[r][j] = cs(q[r][j], cm(f, q[r][t]));
                }
                if m[t][j] != 0 {
                    clean = false;
                }
            }
        }
        if !clean {
            continue; // smaller pivot now available in the same block
        }
        t += 1;
    }
    let diag: Vec<i128> = (0..t).map(|i| m[i][i].abs()).collect();
    (diag, q)
}

/// Convert an unordered diagonal into the divisibility chain
/// `d_1 | d_2 | …` (the diagonal of the true Smith form of the same
/// matrix, by gcd/lcm bookkeeping).
fn normalize_chain(mut diag: Vec<i128>) -> Vec<i128> {
    for i in 0..diag.len() {
        for j in i + 1..diag.len() {
            let a = diag[i];
            let b = diag[j];
            let g = gcd(a, b);
            diag[i] = g;
            diag[j] = if g == 0 { 0 } else { a / g * b };
        }
    }
    diag
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Column-style Hermite reduction to a triangular basis of the column span.
fn column_hnf(a: &M) -> M {
    let rows = a.len();
    let cols = a[0].len();
    // work on columns
    let mut colv: Vec<Vec<i128>> = (0..cols)
        .map(|j| (0..rows).map(|i| a[i][j]).collect())
        .collect();
    let mut pivot_row = 0usize;
    let mut next = 0usize;
    while pivot_row < rows && next < colv.len() {
        loop {
            let nz: Vec<usize> = (next..colv.len())
                .filter(|&j| colv[j][pivot_row] != 0)
                .collect();
            if nz.is_empty() {
                break;
            }
            // column with smallest nonzero entry in this row becomes pivot
            let &jmin = nz
                .iter()
                .min_by_key(|&&j| colv[j][pivot_row].abs())
                .unwrap();
            colv.swap(next, jmin);
            let mut reduced = true;
            let pivot_col = colv[next].clone();
            let p = pivot_col[pivot_row];
            for j in next + 1..colv.len() {
                let v = colv[j][pivot_row];
                if v != 0 {
                    let f = v.div_euclid(p);
                    for i in 0..rows {
                        colv[j][i] = cs(colv[j][i], cm(f, pivot_col[i]));
                    }
                    if colv[j][pivot_row] != 0 {
                        reduced = false;
                    }
                }
            }
            if reduced {
                break;
            }
        }
        if colv[next][pivot_row] != 0 {
            if colv[next][pivot_row] < 0 {
                for i in 0..rows {
                    colv[next][i] = -colv[next][i];
                }
            }
            next += 1;
        }
        pivot_row += 1;
    }
    colv.truncate(next);
    // back to row-major, keeping only the independent columns
    let mut out = zeros(rows, next);
    for (j, col) in colv.iter().enumerate() {
        for i in 0..rows {
            out[i][j] = col[i];
        }
    }
    out
}

fn mat_mul(a: &M, b: &M) -> M {
    let (ra, ca) = (a.len(), a[0].len());
    let cb = b[0].len();
    let mut out = zeros(ra, cb);
    for i in 0..ra {
        for k in 0..ca {
            if a[i][k] != 0 {
                for j in 0..cb {
                    out[i][j] = out[i][j]
                        .checked_add(cm(a[i][k], b[k][j]))
                        .expect("oracle overflow");
                }
            }
        }
    }
    out
}

/// Solve `L·C = R` for a triangular column basis `L` (from `column_hnf`),
/// by forward substitution; panics if non-integral.
fn triangular_solve(l: &M, r: &M) -> M {
    let n = l[0].len();
    let rows = l.len();
    let cols = r[0].len();
    // pivot row of each column of L
    let pivots: Vec<usize> = (0..n)
        .map(|j| {
            (0..rows)
                .find(|&i| l[i][j] != 0)
                .expect("rank-deficient basis")
        })
        .collect();
    let mut c = zeros(n, cols);
    for col in 0..cols {
        let mut rhs: Vec<i128> = (0..rows).map(|i| r[i][col]).collect();
        for j in 0..n {
            let p = pivots[j];
            let v = rhs[p];
            assert_eq!(
                v % l[p][j],
                0,
                "oracle quotient: relation outside the lattice"
            );
            let f = v / l[p][j];
            c[j][col] = f;
            if f != 0 {
                for i in 0..rows {
                    rhs[i] = cs(rhs[i], cm(f, l[i][j]));
                }
            }
        }
        assert!(
            rhs.iter().all(|&v| v == 0),
            "oracle quotient: inconsistent solve"
        );
    }
    c
}

/// Invariant factors of `H^3(G, ℚ/ℤ)`: cocycles with denominators dividing
/// `|G|` modulo coboundaries of cochains with denominators dividing `|G|²`.
pub fn h3_invariant_factors(group: &FiniteGroup) -> Vec<u64> {
    let g = group.order() as i128;
    let c3 = group.order().pow(3);
    let c2 = group.order().pow(2);
    let d4 = coboundary_matrix(group, 3);
    let d3 = coboundary_matrix(group, 2);

    // L = {x : D4·x ≡ 0 (mod g)} from the Smith form of D4
    let (diag, q) = smith_with_q(&d4);
    let mut l_basis = zeros(c3, c3);
    for i in 0..c3 {
        for j in 0..c3 {
            let scale = if j < diag.len() {
                g / gcd(diag[j], g)
            } else {
                1
            };
            l_basis[i][j] = q[i][j] * scale;
        }
    }
    let l_basis = column_hnf(&l_basis);

    // R = (1/g)·(span([D3 | g²·I]) ∩ g·ℤ^{c3})
    let mut wide = zeros(c3, c2 + c3);
    for i in 0..c3 {
        for j in 0..c2 {
            wide[i][j] = d3[i][j];
        }
        wide[i][c2 + i] = g * g;
    }
    let h = column_hnf(&wide);
    // {c : H·c ≡ 0 (mod g)} from the Smith form of H
    let (hd, hq) = smith_with_q(&h);
    let hcols = h[0].len();
    let mut c_basis = zeros(hcols, hcols);
    for i in 0..hcols {
        for j in 0..hcols {
            let scale = if j < hd.len() { g / gcd(hd[j], g) } else { 1 };
            c_basis[i][j] = hq[i][j] * scale;
        }
    }
    let scaled = mat_mul(&h, &c_basis);
    let mut r_gens = zeros(c3, scaled[0].len());
    for i in 0..c3 {
        for j in 0..scaled[0].len() {
            assert_eq!(scaled[i][j] % g, 0, "oracle: relation not divisible by |G|");
            r_gens[i][j] = scaled[i][j] / g;
        }
    }

    // invariant factors of L/R
    let coords = triangular_solve(&l_basis, &r_gens);
    let diag = smith_diagonal_plain(&coords);
    let mut factors: Vec<u64> = diag.iter().filter(|&&d| d > 1).map(|&d| d as u64).collect();
    factors.sort_unstable();
    factors
}

fn smith_diagonal_plain(a: &M) -> Vec<i128> {
    let (d, _) = smith_with_q(a);
    normalize_chain(d)
}
