//! Choosing the anchor subsequence of a query: the subsequence whose
//! per-symbol escape costs sum to at least the threshold while generating as
//! few index candidates as possible. Minimizing the candidate total is a
//! minimum-knapsack instance, so an exact solver is only viable for short
//! queries; the primal-dual greedy here carries a factor-2 guarantee and is
//! exact whenever all escape costs are equal.

use crate::error::{Error, Result};
use crate::traj::Symbol;

/// One selectable query position: its symbol, 1-based position, escape cost,
/// and the number of index postings its neighborhood covers.
#[derive(Debug, Clone, Copy)]
pub struct SelectionItem {
    pub symbol: Symbol,
    pub position: usize,
    pub value: f64,
    pub weight: u64,
}

/// A chosen subsequence: `(symbol, position)` pairs sorted by position, the
/// summed escape cost (which meets the threshold), and the summed candidate
/// count (the quantity being minimized).
#[derive(Debug, Clone, PartialEq)]
pub struct TauSubsequence {
    pub chosen: Vec<(Symbol, usize)>,
    pub total_value: f64,
    pub objective: u64,
}

const EXACT_LIMIT: usize = 20;

fn feasibility(items: &[SelectionItem], tau: f64) -> Result<Vec<usize>> {
    // Zero-valued items can never help meet the constraint; drop them from
    // selection entirely.
    let usable: Vec<usize> = (0..items.len()).filter(|&i| items[i].value > 0.0).collect();
    let total: f64 = usable.iter().map(|&i| items[i].value).sum();
    if total < tau {
        return Err(Error::Infeasible(format!(
            "total escape cost {total} is below the threshold {tau}; lower the threshold or \
             raise the neighborhood threshold toward tau/|Q|"
        )));
    }
    Ok(usable)
}

fn finish(items: &[SelectionItem], chosen_idx: Vec<usize>) -> TauSubsequence {
    let mut chosen: Vec<(Symbol, usize)> = chosen_idx
        .iter()
        .map(|&i| (items[i].symbol, items[i].position))
        .collect();
    chosen.sort_by_key(|&(_, pos)| pos);
    TauSubsequence {
        chosen,
        total_value: chosen_idx.iter().map(|&i| items[i].value).sum(),
        objective: chosen_idx.iter().map(|&i| items[i].weight).sum(),
    }
}

/// Primal-dual greedy selection. Each round scores every unchosen item as
/// `(weight - dual) / min(value, remaining demand)`, picks the minimum
/// (smallest position on ties), and raises every unchosen item's dual by the
/// winning score times its own clamped value. Runs in O(n^2); the objective
/// is within a factor 2 of optimal, and exactly optimal when all values are
/// equal.
pub fn solve_approx(items: &[SelectionItem], tau: f64) -> Result<TauSubsequence> {
    let mut active = feasibility(items, tau)?;
    let mut dual = vec![0.0; items.len()];
    let mut chosen = Vec::new();
    let mut total = 0.0;

    while total < tau {
        let remaining = tau - total;
        let mut best: Option<(f64, usize, usize)> = None; // (score, position, active slot)
        for (slot, &i) in active.iter().enumerate() {
            let clamped = items[i].value.min(remaining);
            let score = (items[i].weight as f64 - dual[i]) / clamped;
            let key = (score, items[i].position);
            if best.is_none_or(|(bs, bp, _)| key < (bs, bp)) {
                best = Some((score, items[i].position, slot));
            }
        }
        let (winning_score, _, slot) = best.expect("feasibility guarantees an unchosen item");
        // The dual update covers every still-unchosen item, including the
        // winner being removed this round.
        for &i in &active {
            dual[i] += items[i].value.min(remaining) * winning_score;
        }
        let picked = active.swap_remove(slot);
        total += items[picked].value;
        chosen.push(picked);
    }
    Ok(finish(items, chosen))
}

/// Exhaustive optimum by subset enumeration, for instances of at most 20
/// items. Ties on the objective are broken by the lexicographically smallest
/// sorted position list.
pub fn solve_exact(items: &[SelectionItem], tau: f64) -> Result<TauSubsequence> {
    if items.len() > EXACT_LIMIT {
        return Err(Error::ExactTooLarge(items.len(), EXACT_LIMIT));
    }
    let usable = feasibility(items, tau)?;
    let mut best: Option<(u64, Vec<usize>, Vec<usize>)> = None; // (objective, positions, indices)
    for mask in 0u32..(1 << usable.len()) {
        let mut value = 0.0;
        let mut objective = 0u64;
        let mut idx = Vec::new();
        for (bit, &i) in usable.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                value += items[i].value;
                objective += items[i].weight;
                idx.push(i);
            }
        }
        if value < tau {
            continue;
        }
        let mut positions: Vec<usize> = idx.iter().map(|&i| items[i].position).collect();
        positions.sort_unstable();
        let better = match &best {
            None => true,
            Some((bo, bp, _)) => objective < *bo || (objective == *bo && positions < *bp),
        };
        if better {
            best = Some((objective, positions, idx));
        }
    }
    let (_, _, idx) = best.ok_or_else(|| Error::Infeasible("no feasible subsequence".into()))?;
    Ok(finish(items, idx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn items(values: &[f64], weights: &[u64]) -> Vec<SelectionItem> {
        values
            .iter()
            .zip(weights)
            .enumerate()
            .map(|(i, (&value, &weight))| SelectionItem {
                symbol: i as Symbol,
                position: i + 1,
                value,
                weight,
            })
            .collect()
    }

    #[test]
    fn greedy_trace_on_four_items() {
        // values [1,2,3,4], weights [5,2,9,8], demand 4: the greedy picks
        // positions 2 then 4 for a total weight of 10; the optimum is the
        // single fourth item at weight 8.
        let its = items(&[1.0, 2.0, 3.0, 4.0], &[5, 2, 9, 8]);
        let approx = solve_approx(&its, 4.0).unwrap();
        assert_eq!(approx.chosen, vec![(1, 2), (3, 4)]);
        assert_eq!(approx.objective, 10);
        assert!(approx.total_value >= 4.0);

        let exact = solve_exact(&its, 4.0).unwrap();
        assert_eq!(exact.chosen, vec![(3, 4)]);
        assert_eq!(exact.objective, 8);
    }

    #[test]
    fn exact_optimum_on_three_item_instance() {
        // Escape costs {3,1,2} with neighborhood weights {5,10,3}, demand 3:
        // the feasible subsequences score 5, 15, 8, 13, 18 and the single
        // first position wins.
        let its = items(&[3.0, 1.0, 2.0], &[5, 10, 3]);
        let exact = solve_exact(&its, 3.0).unwrap();
        assert_eq!(exact.objective, 5);
        assert_eq!(exact.chosen, vec![(0, 1)]);
    }

    #[test]
    fn single_feasible_item_is_selected() {
        let its = items(&[5.0], &[42]);
        let got = solve_approx(&its, 4.0).unwrap();
        assert_eq!(got.chosen, vec![(0, 1)]);
        assert_eq!(got.objective, 42);
    }

    #[test]
    fn infeasible_instance_is_reported() {
        let its = items(&[1.0, 1.0], &[1, 1]);
        assert!(matches!(solve_approx(&its, 3.0), Err(Error::Infeasible(_))));
        assert!(matches!(solve_exact(&its, 3.0), Err(Error::Infeasible(_))));
    }

    #[test]
    fn zero_value_items_are_never_chosen() {
        let its = items(&[0.0, 2.0, 0.0, 2.0], &[0, 5, 0, 7]);
        let got = solve_approx(&its, 3.0).unwrap();
        assert!(got.chosen.iter().all(|&(_, pos)| pos == 2 || pos == 4));
        assert!(got.total_value >= 3.0);
    }

    #[test]
    fn exact_rejects_oversized_instances() {
        let its = items(&[1.0; 21], &[1; 21]);
        assert!(matches!(
            solve_exact(&its, 1.0),
            Err(Error::ExactTooLarge(21, 20))
        ));
    }

    #[test]
    fn approx_within_factor_two_of_exact() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..300 {
            let n = rng.gen_range(1..=12);
            let values: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..5.0)).collect();
            let weights: Vec<u64> = (0..n).map(|_| rng.gen_range(0..50)).collect();
            let its = items(&values, &weights);
            let total: f64 = values.iter().sum();
            let tau = rng.gen_range(0.01..total.max(0.02));
            let approx = solve_approx(&its, tau).unwrap();
            let exact = solve_exact(&its, tau).unwrap();
            assert!(approx.total_value >= tau);
            assert!(
                approx.objective <= 2 * exact.objective,
                "approx {} exact {}",
                approx.objective,
                exact.objective
            );
            assert!(approx.chosen.len() <= n);
        }
    }

    #[test]
    fn constant_values_give_exact_optimum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..300 {
            let n = rng.gen_range(1..=12);
            let c = rng.gen_range(0.5..3.0);
            let values = vec![c; n];
            let weights: Vec<u64> = (0..n).map(|_| rng.gen_range(0..40)).collect();
            let its = items(&values, &weights);
            let k = rng.gen_range(1..=n);
            let tau = c * k as f64 - 1e-9;
            let approx = solve_approx(&its, tau).unwrap();
            let exact = solve_exact(&its, tau).unwrap();
            assert_eq!(approx.objective, exact.objective);
            assert_eq!(approx.chosen.len(), k);
            // The chosen set is a minimum-weight subset of the required size.
            let mut sorted = weights.clone();
            sorted.sort_unstable();
            let expected: u64 = sorted[..k].iter().sum();
            assert_eq!(approx.objective, expected);
        }
    }
}
