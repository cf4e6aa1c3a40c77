//! Splitting a training set across clients.
//!
//! * IID: one seeded permutation cut into `K` equal contiguous chunks.
//! * Non-IID-L: samples are grouped by label, each group is shuffled and cut
//!   into `s = K * L / num_classes` equal shards, and shards are dealt so that
//!   every client holds `L` shards of `L` different labels.
//! * Manual: explicit per-client row lists.

use crate::data::{ClientDataset, Dataset};
use crate::rng::SeededRng;
use crate::{Error, Result, Scalar};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PartitionKind {
    Iid,
    NonIidLabels {
        labels_per_client: usize,
    },
    /// `assignment[j]` lists the dataset rows given to client `j`.
    Manual {
        assignment: Vec<Vec<usize>>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionPlan {
    pub kind: PartitionKind,
    pub clients: usize,
    pub seed: u64,
}

impl PartitionPlan {
    pub fn iid(clients: usize, seed: u64) -> Self {
        Self {
            kind: PartitionKind::Iid,
            clients,
            seed,
        }
    }

    pub fn noniid_l(clients: usize, labels_per_client: usize, seed: u64) -> Self {
        Self {
            kind: PartitionKind::NonIidLabels { labels_per_client },
            clients,
            seed,
        }
    }

    pub fn manual(assignment: Vec<Vec<usize>>) -> Self {
        Self {
            clients: assignment.len(),
            kind: PartitionKind::Manual { assignment },
            seed: 0,
        }
    }

    pub fn apply<T: Scalar>(&self, dataset: &Dataset<T>) -> Result<Vec<ClientDataset<T>>> {
        match &self.kind {
            PartitionKind::Iid => partition_iid(dataset, self.clients, self.seed),
            PartitionKind::NonIidLabels { labels_per_client } => {
                partition_noniid_l(dataset, self.clients, *labels_per_client, self.seed)
            }
            PartitionKind::Manual { assignment } => {
                if assignment.len() != self.clients {
                    return Err(Error::Partition(format!(
                        "manual map has {} clients, plan says {}",
                        assignment.len(),
                        self.clients
                    )));
                }
                partition_manual(dataset, assignment)
            }
        }
    }
}

fn build_clients<T: Scalar>(
    dataset: &Dataset<T>,
    rows: &[Vec<usize>],
) -> Result<Vec<ClientDataset<T>>> {
    rows.iter()
        .enumerate()
        .map(|(index, r)| {
            Ok(ClientDataset {
                index,
                data: dataset.subset(r)?,
            })
        })
        .collect()
}

/// Seeded shuffle, then `K` contiguous chunks of `N / K` rows. `K` must divide `N`.
pub fn partition_iid<T: Scalar>(
    dataset: &Dataset<T>,
    clients: usize,
    seed: u64,
) -> Result<Vec<ClientDataset<T>>> {
    if clients == 0 {
        return Err(Error::Partition("need at least one client".into()));
    }
    let n = dataset.len();
    if !n.is_multiple_of(clients) {
        return Err(Error::Partition(format!(
            "{clients} clients do not divide {n} samples"
        )));
    }
    let perm = SeededRng::new(seed).permutation(n);
    let rows: Vec<Vec<usize>> = perm.chunks(n / clients).map(<[usize]>::to_vec).collect();
    build_clients(dataset, &rows)
}

/// Label-skewed split where each client sees exactly `labels_per_client`
/// distinct labels.
///
/// With `s` shards per label, shards are listed label by label (labels in a
/// seeded order) and shard `t` goes to slot `t mod K`; slots are mapped to
/// clients by a seeded permutation. Any two shards landing on one slot are at
/// least `K >= s` positions apart, so they always carry different labels.
pub fn partition_noniid_l<T: Scalar>(
    dataset: &Dataset<T>,
    clients: usize,
    labels_per_client: usize,
    seed: u64,
) -> Result<Vec<ClientDataset<T>>> {
    let classes = dataset.num_classes();
    if clients == 0 {
        return Err(Error::Partition("need at least one client".into()));
    }
    if labels_per_client == 0 || labels_per_client > classes {
        return Err(Error::Partition(format!(
            "labels per client must be in 1..={classes}, got {labels_per_client}"
        )));
    }
    if !(clients * labels_per_client).is_multiple_of(classes) {
        return Err(Error::Partition(format!(
            "K * L = {} is not a multiple of {classes} classes",
            clients * labels_per_client
        )));
    }
    let shards_per_label = clients * labels_per_client / classes;

    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in dataset.labels().iter().enumerate() {
        groups[l].push(i);
    }
    for (label, g) in groups.iter().enumerate() {
        if g.is_empty() {
            return Err(Error::Partition(format!("label {label} has no samples")));
        }
        if g.len() % shards_per_label != 0 {
            return Err(Error::Partition(format!(
                "label {label} has {} samples, not divisible into {shards_per_label} shards",
                g.len()
            )));
        }
    }

    let mut rng = SeededRng::new(seed);
    for g in &mut groups {
        rng.shuffle(g);
    }
    let label_order = rng.permutation(classes);
    let slot_to_client = rng.permutation(clients);

    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); clients];
    let mut t = 0;
    for &label in &label_order {
        let g = &groups[label];
        for shard in g.chunks(g.len() / shards_per_label) {
            rows[slot_to_client[t % clients]].extend_from_slice(shard);
            t += 1;
        }
    }
    build_clients(dataset, &rows)
}

/// Explicit assignment; every row must be used exactly once and every client
/// must receive at least one row.
pub fn partition_manual<T: Scalar>(
    dataset: &Dataset<T>,
    assignment: &[Vec<usize>],
) -> Result<Vec<ClientDataset<T>>> {
    if assignment.is_empty() {
        return Err(Error::Partition("need at least one client".into()));
    }
    let mut used = vec![false; dataset.len()];
    for (j, rows) in assignment.iter().enumerate() {
        if rows.is_empty() {
            return Err(Error::Partition(format!("client {j} has no samples")));
        }
        for &r in rows {
            match used.get_mut(r) {
                None => return Err(Error::Partition(format!("row {r} out of range"))),
                Some(true) => return Err(Error::Partition(format!("row {r} assigned twice"))),
                Some(slot) => *slot = true,
            }
        }
    }
    if let Some(r) = used.iter().position(|u| !u) {
        return Err(Error::Partition(format!(
            "row {r} is not assigned to any client"
        )));
    }
    build_clients(dataset, assignment)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic;

    fn sorted_rows(d: &Dataset<f64>) -> Vec<(Vec<u64>, usize)> {
        let mut v: Vec<_> = (0..d.len())
            .map(|i| {
                (
                    d.row(i).iter().map(|x| x.to_bits()).collect(),
                    d.labels()[i],
                )
            })
            .collect();
        v.sort();
        v
    }

    fn union(clients: &[ClientDataset<f64>]) -> Vec<(Vec<u64>, usize)> {
        let mut v: Vec<_> = clients
            .iter()
            .flat_map(|c| {
                (0..c.len()).map(move |i| {
                    (
                        c.data.row(i).iter().map(|x| x.to_bits()).collect(),
                        c.data.labels()[i],
                    )
                })
            })
            .collect();
        v.sort();
        v
    }

    #[test]
    fn iid_equal_chunks() {
        let d: Dataset<f64> = synthetic(1, 100, 3, 10).unwrap();
        let c = partition_iid(&d, 10, 5).unwrap();
        assert_eq!(c.len(), 10);
        assert!(c.iter().all(|c| c.len() == 10));
        assert_eq!(union(&c), sorted_rows(&d));
        assert!(partition_iid(&d, 7, 5).is_err());
    }

    #[test]
    fn iid_single_client_is_a_shuffle() {
        let d: Dataset<f64> = synthetic(1, 50, 3, 5).unwrap();
        let c = partition_iid(&d, 1, 5).unwrap();
        assert_eq!(c[0].len(), 50);
        assert_eq!(union(&c), sorted_rows(&d));
    }

    #[test]
    fn noniid_one_label_each() {
        let d: Dataset<f64> = synthetic(1, 1000, 3, 10).unwrap();
        let c = partition_noniid_l(&d, 10, 1, 3).unwrap();
        let mut seen = [false; 10];
        for client in &c {
            assert_eq!(client.data.distinct_labels(), 1);
            let label = client.data.labels()[0];
            assert_eq!(client.len(), 100);
            assert!(!seen[label]);
            seen[label] = true;
        }
    }

    #[test]
    fn noniid_two_labels() {
        let d: Dataset<f64> = synthetic(1, 1000, 3, 10).unwrap();
        let c = partition_noniid_l(&d, 10, 2, 3).unwrap();
        for client in &c {
            assert_eq!(client.data.distinct_labels(), 2);
            assert_eq!(client.len(), 100);
        }
        assert_eq!(union(&c), sorted_rows(&d));
    }

    #[test]
    fn noniid_all_labels() {
        let d: Dataset<f64> = synthetic(1, 1000, 3, 10).unwrap();
        let c = partition_noniid_l(&d, 10, 10, 3).unwrap();
        assert!(c.iter().all(|c| c.data.distinct_labels() == 10));
    }

    #[test]
    fn noniid_divisibility_errors() {
        let d: Dataset<f64> = synthetic(1, 1000, 3, 10).unwrap();
        assert!(partition_noniid_l(&d, 7, 2, 3).is_err());
        assert!(partition_noniid_l(&d, 10, 0, 3).is_err());
        assert!(partition_noniid_l(&d, 10, 11, 3).is_err());
        // 100 per label, 30 * 1 / 10 = 3 shards does not divide 100
        assert!(partition_noniid_l(&d, 30, 1, 3).is_err());
    }

    #[test]
    fn manual_checks_cover() {
        let d: Dataset<f64> = synthetic(1, 6, 2, 2).unwrap();
        let c = partition_manual(&d, &[vec![0, 1, 2], vec![3, 4, 5]]).unwrap();
        assert_eq!(c[1].data.row(0), d.row(3));
        assert!(partition_manual(&d, &[vec![0, 1, 2], vec![3, 4]]).is_err());
        assert!(partition_manual(&d, &[vec![0, 1, 2, 3], vec![3, 4, 5]]).is_err());
        assert!(partition_manual(&d, &[vec![0, 1, 2, 3, 4, 5], vec![]]).is_err());
    }
}
