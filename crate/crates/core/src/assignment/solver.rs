use super::{Assignment, AssignmentError, CostMatrix};

pub const BRUTE_FORCE_MAX: usize = 9;

/// Minimum-cost matching of every row to a distinct column, `rows <= cols`.
/// Returns the column per row plus row and column potentials with
/// `c[i][j] - u[i] - v[j] >= 0`, equality on matched pairs.
pub(crate) fn solve_rect(c: &[Vec<f64>], cols: usize) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    let n = c.len();
    debug_assert!(n <= cols);
    let m = cols;
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; m + 1];
    // p[j]: row (1-based) matched to column j; way[j]: previous column on the path
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = c[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assign = vec![0usize; n];
    for j in 1..=m {
        if p[j] != 0 {
            assign[p[j] - 1] = j - 1;
        }
    }
    (assign, u[1..].to_vec(), v[1..].to_vec())
}

fn total(costs: &CostMatrix, goals: &[usize]) -> f64 {
    goals
        .iter()
        .enumerate()
        .map(|(i, &j)| costs.get(i, j) as f64)
        .sum()
}

fn tie_tolerance(costs: &CostMatrix) -> f64 {
    let scale = costs.max_abs().max(1.0) * costs.n_robots() as f64;
    scale * 1e-12
}

/// Optimal one-to-one assignment in `O(n³)` via shortest augmenting paths
/// with potentials. Among optimal assignments the lexicographically smallest
/// goal vector is returned.
pub fn hungarian_solve(costs: &CostMatrix) -> Result<Assignment, AssignmentError> {
    costs.require_square()?;
    let n = costs.n_robots();
    let c = costs.to_f64();
    let (mut goals, u, v) = solve_rect(&c, n);
    let best = total(costs, &goals);
    let tol = tie_tolerance(costs);
    // Any optimal matching uses only tight edges of an optimal dual.
    let prune = tol.max(1e-9 * costs.max_abs().max(1.0));

    let mut taken = vec![false; n];
    for i in 0..n {
        for j in 0..goals[i] {
            if taken[j] || c[i][j] - u[i] - v[j] > prune {
                continue;
            }
            let free: Vec<usize> = (0..n).filter(|&k| !taken[k] && k != j).collect();
            let sub: Vec<Vec<f64>> = (i + 1..n)
                .map(|r| free.iter().map(|&k| c[r][k]).collect())
                .collect();
            let (sub_goals, _, _) = solve_rect(&sub, free.len());
            let mut candidate = goals[..i].to_vec();
            candidate.push(j);
            candidate.extend(sub_goals.iter().map(|&k| free[k]));
            if total(costs, &candidate) <= best + tol {
                goals = candidate;
                break;
            }
        }
        taken[goals[i]] = true;
    }
    Ok(Assignment {
        total_cost: total(costs, &goals),
        goals,
    })
}

/// Exhaustive search over all `n!` permutations in lexicographic order.
pub fn brute_force_solve(costs: &CostMatrix) -> Result<Assignment, AssignmentError> {
    costs.require_square()?;
    let n = costs.n_robots();
    if n > BRUTE_FORCE_MAX {
        return Err(AssignmentError::TooLarge {
            n,
            max: BRUTE_FORCE_MAX,
        });
    }
    let tol = tie_tolerance(costs);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_cost = total(costs, &perm);
    while next_permutation(&mut perm) {
        let cost = total(costs, &perm);
        if cost < best_cost - tol {
            best_cost = cost;
            best.clone_from(&perm);
        }
    }
    Ok(Assignment {
        total_cost: best_cost,
        goals: best,
    })
}

fn next_permutation(a: &mut [usize]) -> bool {
    let Some(i) = (1..a.len()).rev().find(|&i| a[i - 1] < a[i]) else {
        return false;
    };
    let j = (i..a.len()).rev().find(|&j| a[j] > a[i - 1]).unwrap();
    a.swap(i - 1, j);
    a[i..].reverse();
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m(rows: &[&[f32]]) -> CostMatrix {
        CostMatrix::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn one_by_one() {
        let a = hungarian_solve(&m(&[&[4.0]])).unwrap();
        assert_eq!(a.goals, vec![0]);
        assert_eq!(a.total_cost, 4.0);
    }

    #[test]
    fn two_by_two() {
        let c = m(&[&[1.0, 2.0], &[2.0, 1.0]]);
        for a in [hungarian_solve(&c).unwrap(), brute_force_solve(&c).unwrap()] {
            assert_eq!(a.goals, vec![0, 1]);
            assert_eq!(a.total_cost, 2.0);
        }
    }

    #[test]
    fn zero_diagonal_prefers_identity() {
        let c = m(&[&[0.0, 5.0, 5.0], &[5.0, 0.0, 5.0], &[5.0, 5.0, 0.0]]);
        assert_eq!(brute_force_solve(&c).unwrap().goals, vec![0, 1, 2]);
        assert_eq!(brute_force_solve(&c).unwrap().total_cost, 0.0);
    }

    #[test]
    fn ties_break_lexicographically() {
        let c = m(&[&[1.0; 4], &[1.0; 4], &[1.0; 4], &[1.0; 4]]);
        assert_eq!(hungarian_solve(&c).unwrap().goals, vec![0, 1, 2, 3]);
        let c = m(&[&[2.0, 1.0, 1.0], &[1.0, 1.0, 2.0], &[1.0, 2.0, 1.0]]);
        let h = hungarian_solve(&c).unwrap();
        assert_eq!(h, brute_force_solve(&c).unwrap());
        assert_eq!(h.goals, vec![1, 0, 2]);
    }

    #[test]
    fn brute_force_guard() {
        let c = CostMatrix::new(vec![vec![0.0; 10]; 10]).unwrap();
        assert_eq!(
            brute_force_solve(&c),
            Err(AssignmentError::TooLarge { n: 10, max: 9 })
        );
    }

    #[test]
    fn non_square_rejected() {
        let c = CostMatrix::new(vec![vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(
            hungarian_solve(&c),
            Err(AssignmentError::NotSquare { rows: 2, cols: 3 })
        ));
    }

    #[test]
    fn seeded_seven_by_seven_against_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let c = CostMatrix::random(7, 7, 0.0..10.0, &mut rng);
            assert_eq!(hungarian_solve(&c).unwrap(), brute_force_solve(&c).unwrap());
        }
    }

    #[test]
    fn integer_costs_with_many_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let n = rng.random_range(2..=6);
            let rows = (0..n)
                .map(|_| (0..n).map(|_| rng.random_range(0..3) as f32).collect())
                .collect();
            let c = CostMatrix::new(rows).unwrap();
            assert_eq!(hungarian_solve(&c).unwrap(), brute_force_solve(&c).unwrap());
        }
    }

    #[test]
    fn larger_instance_is_fast_and_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = CostMatrix::random(60, 60, 0.0..100.0, &mut rng);
        let a = hungarian_solve(&c).unwrap();
        let mut seen = a.goals.clone();
        seen.sort_unstable();
        assert_eq!(seen, (0..60).collect::<Vec<_>>());
    }
}
