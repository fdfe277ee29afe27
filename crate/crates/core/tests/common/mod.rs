//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

/// Genus-resolved gluing counts from the Harer-Zagier recurrence
/// `(n+1) e_g(n) = (4n-2) e_g(n-1) + (n-1)(2n-1)(2n-3) e_{g-1}(n-2)`.
pub fn harer_zagier(n_max: usize) -> Vec<Vec<u64>> {
    let mut e: Vec<Vec<u64>> = vec![vec![1]];
    for n in 1..=n_max {
        let mut row = vec![0u64; n / 2 + 1];
        for (g, slot) in row.iter_mut().enumerate() {
            let prev = e[n - 1].get(g).copied().unwrap_or(0) as u128;
            let back = if g >= 1 && n >= 2 {
                e[n - 2].get(g - 1).copied().unwrap_or(0) as u128
            } else {
                0
            };
            let nn = n as u128;
            let num = (4 * nn - 2) * prev
                + if n >= 2 {
                    (nn - 1) * (2 * nn - 1) * (2 * nn - 3) * back
                } else {
                    0
                };
            assert_eq!(num % (nn + 1), 0);
            *slot = (num / (nn + 1)) as u64;
        }
        e.push(row);
    }
    e
}

pub fn double_factorial(n: u64) -> u64 {
    (1..=n).rev().step_by(2).product()
}

pub fn catalan(n: u64) -> u64 {
    (0..n).fold(1u64, |c, k| c * 2 * (2 * k + 1) / (k + 2))
}

/// `Tr(A^t)` by summing `a_k d^{cycles(pi . c)}` over every involution `pi` of
/// `t` points with `k` transpositions, `c` the full cycle. Uses no gluing counts.
pub fn power_trace_by_involutions(t: usize, d: usize) -> f64 {
    fn coeff(t: usize, k: usize, d: usize) -> f64 {
        let d2 = (d * d) as f64;
        let ratio: f64 = (1..=t / 2)
            .map(|j| 1.0 / (d2 - 3.0 + 2.0 * j as f64))
            .product();
        let df: f64 = (1..=(t as i64 - 2 * k as i64 - 1).max(0) as u64)
            .rev()
            .step_by(2)
            .map(|x| x as f64)
            .product();
        let sign = if (t / 2 - k).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        };
        sign * (d as f64).powi(k as i32) * df * ratio
    }
    fn cycles(perm: &[usize]) -> usize {
        let mut seen = vec![false; perm.len()];
        let mut count = 0;
        for s in 0..perm.len() {
            if !seen[s] {
                count += 1;
                let mut i = s;
                while !seen[i] {
                    seen[i] = true;
                    i = perm[i];
                }
            }
        }
        count
    }
    fn walk(pi: &mut Vec<usize>, next: usize, k: usize, t: usize, d: usize, acc: &mut f64) {
        if next == t {
            let composed: Vec<usize> = (0..t).map(|i| pi[(i + 1) % t]).collect();
            *acc += coeff(t, k, d) * (d as f64).powi(cycles(&composed) as i32);
            return;
        }
        if pi[next] != usize::MAX {
            walk(pi, next + 1, k, t, d, acc);
            return;
        }
        pi[next] = next;
        walk(pi, next + 1, k, t, d, acc);
        for other in next + 1..t {
            if pi[other] == usize::MAX {
                pi[next] = other;
                pi[other] = next;
                walk(pi, next + 1, k + 1, t, d, acc);
                pi[other] = usize::MAX;
            }
        }
        pi[next] = usize::MAX;
    }
    if t % 2 == 1 {
        return 0.0;
    }
    let mut acc = 0.0;
    walk(&mut vec![usize::MAX; t], 0, 0, t, d, &mut acc);
    acc
}
