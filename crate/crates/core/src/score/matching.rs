//! Maximum one-to-one matching on small bipartite graphs.

/// Maximum matching between `left` and `right` items under `compatible`,
/// found with augmenting paths. Left items are tried in order and take the
/// first free compatible right item when there is one; earlier pairs are only
/// reassigned when that is the only way to grow the matching. Returns, for
/// each left item, the index of its partner.
pub fn max_matching<F>(left: usize, right: usize, compatible: F) -> Vec<Option<usize>>
where
    F: Fn(usize, usize) -> bool,
{
    let adj: Vec<Vec<usize>> = (0..left)
        .map(|i| (0..right).filter(|&j| compatible(i, j)).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; right];
    for i in 0..left {
        let mut visited = vec![false; right];
        augment(i, &adj, &mut owner, &mut visited);
    }
    let mut partner = vec![None; left];
    for (j, o) in owner.iter().enumerate() {
        if let Some(i) = o {
            partner[*i] = Some(j);
        }
    }
    partner
}

fn augment(i: usize, adj: &[Vec<usize>], owner: &mut [Option<usize>], visited: &mut [bool]) -> bool {
    if let Some(&j) = adj[i].iter().find(|&&j| !visited[j] && owner[j].is_none()) {
        visited[j] = true;
        owner[j] = Some(i);
        return true;
    }
    for &j in &adj[i] {
        if visited[j] {
            continue;
        }
        visited[j] = true;
        match owner[j] {
            None => {
                owner[j] = Some(i);
                return true;
            }
            Some(k) => {
                if augment(k, adj, owner, visited) {
                    owner[j] = Some(i);
                    return true;
                }
            }
        }
    }
    false
}

pub fn matching_size(partner: &[Option<usize>]) -> usize {
    partner.iter().filter(|p| p.is_some()).count()
}
