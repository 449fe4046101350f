//! Fill-reducing symmetric ordering by nested dissection.
//!
//! Separators come from breadth-first level structures rooted at a
//! pseudo-peripheral vertex. The middle level splits the component in two;
//! separator vertices without a neighbour on the far side are pulled back
//! into the near side. Disconnected pieces are ordered independently.

use crate::sparse::CsrMatrix;

const LEAF_SIZE: usize = 48;

enum Task {
    Split(Vec<usize>),
    Emit(Vec<usize>),
}

/// Returns `perm` with `perm[new] = old`.
pub fn nested_dissection(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();

    let mut owner = vec![usize::MAX; n];
    let mut level = vec![usize::MAX; n];
    let mut task_id = 0usize;
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![Task::Split((0..n).collect())];

    while let Some(task) = stack.pop() {
        let nodes = match task {
            Task::Emit(nodes) => {
                order.extend(nodes);
                continue;
            }
            Task::Split(nodes) => nodes,
        };
        if nodes.len() <= LEAF_SIZE {
            order.extend(nodes);
            continue;
        }
        task_id += 1;
        for &v in &nodes {
            owner[v] = task_id;
        }

        let (first, _) = bfs(&adj, nodes[0], &owner, task_id, &mut level);
        if first.len() < nodes.len() {
            // split off connected components
            task_id += 1;
            for &v in &first {
                owner[v] = task_id;
            }
            let rest: Vec<usize> = nodes.iter().copied().filter(|&v| owner[v] != task_id).collect();
            stack.push(Task::Split(rest));
            stack.push(Task::Split(first));
            continue;
        }

        let root = pseudo_peripheral(&adj, nodes[0], &owner, task_id, &mut level);
        let (reached, depth) = bfs(&adj, root, &owner, task_id, &mut level);
        if depth < 2 {
            order.extend(nodes);
            continue;
        }
        let mut counts = vec![0usize; depth + 1];
        for &v in &reached {
            counts[level[v]] += 1;
        }
        let half = nodes.len() / 2;
        let mut acc = 0;
        let mut sep_level = 1;
        for (l, &c) in counts.iter().enumerate() {
            acc += c;
            if acc >= half {
                sep_level = l.clamp(1, depth - 1);
                break;
            }
        }

        let mut near = Vec::new();
        let mut far = Vec::new();
        let mut sep = Vec::new();
        for &v in &nodes {
            match level[v].cmp(&sep_level) {
                std::cmp::Ordering::Less => near.push(v),
                std::cmp::Ordering::Greater => far.push(v),
                std::cmp::Ordering::Equal => {
                    let touches_far = adj[v]
                        .iter()
                        .any(|&w| owner[w] == task_id && level[w] > sep_level);
                    if touches_far {
                        sep.push(v);
                    } else {
                        near.push(v);
                    }
                }
            }
        }
        stack.push(Task::Emit(sep));
        stack.push(Task::Split(far));
        stack.push(Task::Split(near));
    }
    order
}

/// Breadth-first search inside the vertices owned by `task`. Returns the
/// reached vertices in visit order and the eccentricity of `root`.
fn bfs(
    adj: &[Vec<usize>],
    root: usize,
    owner: &[usize],
    task: usize,
    level: &mut [usize],
) -> (Vec<usize>, usize) {
    let mut visited = vec![root];
    level[root] = 0;
    let mut head = 0;
    let mut depth = 0;
    let mut seen = std::collections::HashSet::new();
    seen.insert(root);
    while head < visited.len() {
        let v = visited[head];
        head += 1;
        for &w in &adj[v] {
            if owner[w] == task && seen.insert(w) {
                level[w] = level[v] + 1;
                depth = depth.max(level[w]);
                visited.push(w);
            }
        }
    }
    (visited, depth)
}

fn pseudo_peripheral(
    adj: &[Vec<usize>],
    start: usize,
    owner: &[usize],
    task: usize,
    level: &mut [usize],
) -> usize {
    let mut root = start;
    let mut best = 0;
    for _ in 0..6 {
        let (reached, depth) = bfs(adj, root, owner, task, level);
        if depth <= best && root != start {
            break;
        }
        best = depth;
        // lowest-degree vertex of the last level
        let candidate = reached
            .iter()
            .rev()
            .take_while(|&&v| level[v] == depth)
            .min_by_key(|&&v| (adj[v].len(), v))
            .copied()
            .unwrap_or(root);
        if candidate == root {
            break;
        }
        root = candidate;
    }
    root
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_laplacian(nx: usize, ny: usize) -> CsrMatrix {
        let id = |i: usize, j: usize| j * nx + i;
        let mut t = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                t.push((id(i, j), id(i, j), 4.0));
                if i + 1 < nx {
                    t.push((id(i, j), id(i + 1, j), -1.0));
                    t.push((id(i + 1, j), id(i, j), -1.0));
                }
                if j + 1 < ny {
                    t.push((id(i, j), id(i, j + 1), -1.0));
                    t.push((id(i, j + 1), id(i, j), -1.0));
                }
            }
        }
        CsrMatrix::from_triplets(nx * ny, nx * ny, t).unwrap()
    }

    #[test]
    fn is_a_permutation() {
        let a = grid_laplacian(37, 23);
        let mut perm = nested_dissection(&a);
        perm.sort_unstable();
        assert_eq!(perm, (0..37 * 23).collect::<Vec<_>>());
    }

    #[test]
    fn handles_disconnected_graphs() {
        // two decoupled blocks plus isolated vertices
        let mut t = Vec::new();
        for i in 0..300 {
            t.push((i, i, 2.0));
            if i % 2 == 0 && i + 2 < 300 {
                t.push((i, i + 2, -1.0));
                t.push((i + 2, i, -1.0));
            }
        }
        let a = CsrMatrix::from_triplets(300, 300, t).unwrap();
        let mut perm = nested_dissection(&a);
        perm.sort_unstable();
        assert_eq!(perm, (0..300).collect::<Vec<_>>());
    }
}
